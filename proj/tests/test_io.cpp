#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "dwnn/io.hpp"

using namespace dwnn;
using namespace dwnn::io;
using Catch::Matchers::ContainsSubstring;

namespace {

class TempFile {
public:
    explicit TempFile(const std::string& content) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("dwnn-test-" + std::to_string(++counter) + "-" +
                 std::to_string(static_cast<unsigned long>(::getpid())) + ".csv");
        std::ofstream out(path_, std::ios::binary);
        out << content;
    }
    ~TempFile() { std::filesystem::remove(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace

TEST_CASE("csv writer enforces the column count and formats numbers") {
    const TempFile sink("");
    {
        CsvWriter w(sink.path(), {"a", "b"});
        w.write_row({"1", CsvWriter::num(0.5)});
        w.write_row({CsvWriter::num(std::size_t{42}), CsvWriter::num(std::nan(""))});
        CHECK_THROWS_AS(w.write_row({"only-one"}), std::invalid_argument);
    }
    const auto table = read_csv(sink.path());
    REQUIRE(table.header == std::vector<std::string>{"a", "b"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == std::vector<std::string>{"1", "0.5"});
    CHECK(table.rows[1] == std::vector<std::string>{"42", "nan"});
}

TEST_CASE("csv reader tolerates CRLF endings and blank lines") {
    const TempFile file("x,y\r\n1,2\r\n\r\n3,4\n");
    const auto table = read_csv(file.path());
    CHECK(table.header == std::vector<std::string>{"x", "y"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[1] == std::vector<std::string>{"3", "4"});
    CHECK_THROWS_WITH(read_csv("/nonexistent/file.csv"), ContainsSubstring("cannot open"));
}

TEST_CASE("datasets load with 0/1 labels by default") {
    const TempFile file("f0,f1,y\n0.5,1.5,1\n2.5,3.5,0\n4.5,5.5,1\n");
    const auto data = load_csv(file.path(), "y");
    REQUIRE(data.n == 3);
    REQUIRE(data.d == 2);
    CHECK(data.features == std::vector<double>{0.5, 1.5, 2.5, 3.5, 4.5, 5.5});
    CHECK(data.labels == std::vector<int>{1, 0, 1});
}

TEST_CASE("datasets load with a named positive label or column index") {
    const TempFile file("diag,f0\nM,1.0\nB,2.0\nM,3.0\n");
    const auto by_name = load_csv(file.path(), "diag", "M");
    CHECK(by_name.labels == std::vector<int>{1, 0, 1});
    CHECK(by_name.features == std::vector<double>{1.0, 2.0, 3.0});

    const auto by_index = load_csv(file.path(), "0", "B");
    CHECK(by_index.labels == std::vector<int>{0, 1, 0});

    CHECK_THROWS_WITH(load_csv(file.path(), "diag", "X"),
                      ContainsSubstring("does not occur"));
    CHECK_THROWS_WITH(load_csv(file.path(), "diag"),
                      ContainsSubstring("label_positive"));
    CHECK_THROWS_WITH(load_csv(file.path(), "nope"), ContainsSubstring("not found"));
    CHECK_THROWS_WITH(load_csv(file.path(), "7"), ContainsSubstring("out of range"));
}

TEST_CASE("dataset loading rejects malformed tables") {
    const TempFile three_labels("f0,y\n1,a\n2,b\n3,c\n");
    CHECK_THROWS_WITH(load_csv(three_labels.path(), "y"),
                      ContainsSubstring("exactly 2 distinct values"));

    const TempFile bad_cell("f0,y\n1,0\noops,1\n");
    CHECK_THROWS_WITH(load_csv(bad_cell.path(), "y"),
                      ContainsSubstring("row 1, column 0"));

    const TempFile bad_width("f0,f1,y\n1,2,0\n1,1\n");
    CHECK_THROWS_WITH(load_csv(bad_width.path(), "y"), ContainsSubstring("row 1"));

    const TempFile inf_cell("f0,y\ninf,0\n2,1\n");
    CHECK_THROWS_WITH(load_csv(inf_cell.path(), "y"), ContainsSubstring("non-finite"));

    const TempFile label_only("y\n0\n1\n");
    CHECK_THROWS_WITH(load_csv(label_only.path(), "y"),
                      ContainsSubstring("no feature columns"));

    const TempFile header_only("f0,y\n");
    CHECK_THROWS_WITH(load_csv(header_only.path(), "y"), ContainsSubstring("no data rows"));
}

TEST_CASE("standardizer removes column means and unit-scales variance") {
    Dataset train;
    train.n = 3;
    train.d = 2;
    train.features = {1.0, 5.0, 2.0, 5.0, 3.0, 5.0};  // column 1 is constant
    train.labels = {0, 1, 0};
    const auto s = Standardizer::fit(train);
    CHECK(s.mean == std::vector<double>{2.0, 5.0});
    CHECK(s.scale[0] == Catch::Approx(1.0).margin(1e-12));  // sample sd of {1,2,3} is 1
    CHECK(s.scale[1] == 1.0);                               // zero variance keeps scale 1

    Dataset test = train;
    s.apply(test);
    CHECK(test.features[0] == Catch::Approx(-1.0).margin(1e-12));
    CHECK(test.features[2] == Catch::Approx(0.0).margin(1e-12));
    CHECK(test.features[1] == 0.0);

    Dataset wrong;
    wrong.n = 1;
    wrong.d = 3;
    wrong.features = {1.0, 2.0, 3.0};
    wrong.labels = {0};
    CHECK_THROWS_AS(s.apply(wrong), std::invalid_argument);
}

TEST_CASE("config files parse keys, comments and typed values") {
    const auto cfg = Config::parse_string(
        "# experiment\n"
        "mode = simulation   # inline comment\n"
        "n_train = 2700\n"
        "gammas = 0.0, 0.1, 0.2\n"
        "methods = oracle-knn, w-dnn-ownn\n"
        "standardize = true\n"
        "grid_c = 4.0\n",
        "test.cfg");
    CHECK(cfg.origin() == "test.cfg");
    CHECK(cfg.has("mode"));
    CHECK_FALSE(cfg.has("seed"));
    CHECK(cfg.get_string("mode") == "simulation");
    CHECK(cfg.get_u64("n_train") == 2700);
    CHECK(cfg.get_double("grid_c") == 4.0);
    CHECK(cfg.get_bool("standardize", false));
    CHECK(cfg.get_bool("absent", true));
    CHECK(cfg.get_double_list("gammas") == std::vector<double>{0.0, 0.1, 0.2});
    CHECK(cfg.get_string_list("methods") ==
          std::vector<std::string>{"oracle-knn", "w-dnn-ownn"});
    CHECK(cfg.get_u64("seed", 17) == 17);
    CHECK(cfg.unread_keys().empty());
}

TEST_CASE("config parsing rejects malformed input") {
    CHECK_THROWS_WITH(Config::parse_string("novalue\n", "bad.cfg"),
                      ContainsSubstring("bad.cfg:1"));
    CHECK_THROWS_WITH(Config::parse_string("a = 1\na = 2\n", "bad.cfg"),
                      ContainsSubstring("duplicate key 'a'"));
    CHECK_THROWS_WITH(Config::parse_string("= 1\n", "bad.cfg"), ContainsSubstring("empty key"));

    const auto cfg = Config::parse_string("x = abc\nflag = maybe\nempty_list = ,\n");
    CHECK_THROWS_WITH(cfg.get_double("x"), ContainsSubstring("expects a number"));
    CHECK_THROWS_WITH(cfg.get_u64("x"), ContainsSubstring("expects an unsigned integer"));
    CHECK_THROWS_WITH(cfg.get_bool("flag", false), ContainsSubstring("expects a boolean"));
    CHECK_THROWS_WITH(cfg.get_double_list("empty_list"), ContainsSubstring("lists no values"));
    CHECK_THROWS_WITH(cfg.get_string("missing"), ContainsSubstring("missing required key"));

    const auto partial = Config::parse_string("used = 1\nunused = 2\n");
    (void)partial.get_u64("used");
    CHECK(partial.unread_keys() == std::vector<std::string>{"unused"});
}

TEST_CASE("the bundled benchmark dataset loads") {
    const auto data =
        load_csv(std::filesystem::path(DWNN_TEST_DATA_DIR) / "breast_cancer.csv", "label");
    CHECK(data.n == 569);
    CHECK(data.d == 30);
    int positives = 0;
    for (const int y : data.labels) positives += y;
    CHECK(positives == 357);
}
