#pragma once

// Umbrella header for the distributed weighted nearest neighbor library.

#include "dwnn/core.hpp"
#include "dwnn/ensemble.hpp"
#include "dwnn/evaluation.hpp"
#include "dwnn/experiment.hpp"
#include "dwnn/io.hpp"
#include "dwnn/neighbors.hpp"
#include "dwnn/parallel.hpp"
#include "dwnn/rng.hpp"
#include "dwnn/simgen.hpp"
#include "dwnn/theory.hpp"
#include "dwnn/tuning.hpp"
#include "dwnn/version.hpp"
#include "dwnn/weights.hpp"
