#include "doctest.h"

#include <fstream>
#include <sstream>

#include "temp_dir.hpp"
#include "tiny_config.hpp"
#include "xlmimo/cli.hpp"
#include "xlmimo/matrix_io.hpp"

using namespace xt;

namespace
{

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string> &args)
{
    std::ostringstream out, err;
    const int code = xlmimo::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string write_tiny(const TempDir &dir)
{
    const std::string path = dir / "tiny.json";
    std::ofstream(path) << xlmimo::serialize_config(tiny_config());
    return path;
}

} // namespace

TEST_SUITE("cli")
{

TEST_CASE("verify passes")
{
    const Run r = cli({"verify"});
    CHECK(r.code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("missing config is a config error")
{
    const Run r = cli({"sweep", "--config", "missing.json"});
    CHECK(r.code == 1);
    CHECK(r.err.find("missing.json") != std::string::npos);
}

TEST_CASE("unknown flags print usage")
{
    const Run r = cli({"sweep", "--bogus"});
    CHECK(r.code == 1);
    CHECK(r.err.find("--config") != std::string::npos);
    CHECK(cli({}).code == 1);
}

TEST_CASE("unknown method is a config error")
{
    TempDir dir;
    CHECK(cli({"simulate", "--config", write_tiny(dir), "--method", "nope", "--out", dir / "o"}).code == 1);
}

TEST_CASE("simulate twice gives identical files")
{
    TempDir dir;
    const std::string cfg = write_tiny(dir);
    for (const char *sub : {"a", "b"})
        REQUIRE(cli({"simulate", "--config", cfg, "--method", "proposed", "--seed", "7", "--out", dir / sub}).code ==
                0);
    for (const char *f : {"simulate.json", "h_hat.xlm", "h_true.xlm"})
    {
        const std::string a = slurp(dir / (std::string("a/") + f));
        CHECK_FALSE(a.empty());
        CHECK(a == slurp(dir / (std::string("b/") + f)));
    }
    const xlmimo::MatrixFile h = xlmimo::read_matrix(dir / "a/h_true.xlm");
    CHECK(h.matrix.rows() == 32);
    CHECK(h.matrix.cols() == 2);
}

TEST_CASE("sweep twice gives identical files")
{
    TempDir dir;
    const std::string cfg = write_tiny(dir);
    for (const char *sub : {"a", "b"})
        REQUIRE(cli({"sweep", "--config", cfg, "--trials", "1", "--out", dir / sub}).code == 0);
    for (const char *f : {"results.csv", "results.json"})
        CHECK(slurp(dir / (std::string("a/") + f)) == slurp(dir / (std::string("b/") + f)));
    const std::string csv = slurp(dir / "a/results.csv");
    CHECK(csv.rfind(xlmimo::csv_header, 0) == 0);
}

TEST_CASE("sweep overrides")
{
    TempDir dir;
    const Run r = cli({"sweep", "--config", write_tiny(dir), "--method", "stage1-only", "--snr-db", "5", "--trials",
                       "2", "--out", dir / "o"});
    REQUIRE(r.code == 0);
    std::istringstream is(slurp(dir / "o/results.csv"));
    std::string line;
    int rows = 0;
    std::getline(is, line);
    while (std::getline(is, line))
    {
        CHECK(line.rfind("stage1-only,5,", 0) == 0);
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("export dictionaries")
{
    TempDir dir;
    const std::string cfg = write_tiny(dir);
    REQUIRE(cli({"export-dict", "--config", cfg, "--kind", "angular", "--out", dir / "o"}).code == 0);
    const xlmimo::MatrixFile a = xlmimo::read_matrix(dir / "o/angular.xlm");
    CHECK(a.matrix.rows() == 8);
    CHECK(a.matrix.cols() == 64);
    REQUIRE(cli({"export-dict", "--config", cfg, "--kind", "combiner", "--format", "text", "--out", dir / "o"})
                .code == 0);
    CHECK(xlmimo::read_matrix(dir / "o/combiner.xlm").matrix.rows() == 32);
    CHECK(cli({"export-dict", "--config", cfg, "--kind", "bogus", "--out", dir / "o"}).code == 1);
}

} // TEST_SUITE
