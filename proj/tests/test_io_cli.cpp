#include "transposer/cli.hpp"
#include "transposer/io.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace transposer;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("transposer_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const fs::path& p) { return read_file(p); }

int run(const std::vector<std::string>& args) { return run_cli(args); }

}  // namespace

TEST_CASE("key-value grammar") {
    const auto kv = parse_key_values("# comment\nT = 1.5\nN=8\n\n n = 2\n");
    Config config(kv);
    CHECK(config.get_double("T") == 1.5);
    CHECK(config.get_int("N") == 8);
    CHECK(config.get_int("n") == 2);
    CHECK(config.get_int("M", 3) == 3);
    CHECK_THROWS_WITH_AS(config.get_string("missing"), doctest::Contains("missing"),
                         std::invalid_argument);
    CHECK_THROWS_AS(parse_key_values("novalue\n"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_key_values("a=1\na=2\n"), doctest::Contains("duplicate"),
                         std::invalid_argument);

    Config overridden(kv);
    overridden.apply_override("N=16");
    CHECK(overridden.get_int("N") == 16);
    CHECK_THROWS_AS(overridden.apply_override("bogus"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(overridden.reject_unknown({"T", "N"}), doctest::Contains("unknown"),
                         std::invalid_argument);
}

TEST_CASE("spectral and sample CSV round trips") {
    SpectralCoeffs c;
    c.values = {1.0, -0.25, 3.0e-17};
    CHECK(spectral_from_csv(spectral_to_csv(c)).values == c.values);

    std::vector<double> x{0.0, 0.5, 1.0}, f{1.0, 2.0, -3.0}, x2, f2;
    samples_from_csv(samples_to_csv(x, f), x2, f2);
    CHECK(x2 == x);
    CHECK(f2 == f);
}

TEST_CASE("cli basis info prints the dimension rows") {
    // Exercise through the binary-level entry point but in-process; the
    // stdout content is covered by the acceptance harness, here we check the
    // exit codes and argument validation.
    CHECK(run({"basis", "info", "--N", "3", "--M", "2"}) == 0);
    CHECK(run({"basis", "info", "--N", "3"}) == 2);
    CHECK(run({"bogus"}) == 2);
    CHECK(run({}) == 2);
}

TEST_CASE("cli bsee solve writes solution files and honors exit codes") {
    TempDir tmp;
    const fs::path config = tmp.path / "problem.txt";
    {
        std::ofstream out(config);
        out << "T=1.0\nN=4\nn=1\nM=1\n";
        out << "driver.kind=zero\n";
        out << "terminal.kind=wiener\n";
    }
    const fs::path out_dir = tmp.path / "out";
    CHECK(run({"bsee", "solve", "--config", config.string(), "--out", out_dir.string()}) == 0);
    CHECK(fs::exists(out_dir / "a.csv"));
    CHECK(fs::exists(out_dir / "b.csv"));
    CHECK(fs::exists(out_dir / "diagnostics.json"));

    // Determinism: a second run produces byte-identical outputs.
    const std::string a_first = slurp(out_dir / "a.csv");
    const fs::path out2 = tmp.path / "out2";
    CHECK(run({"bsee", "solve", "--config", config.string(), "--out", out2.string()}) == 0);
    CHECK(slurp(out2 / "a.csv") == a_first);

    // verify adds the residual report.
    const fs::path out3 = tmp.path / "out3";
    CHECK(run({"bsee", "verify", "--config", config.string(), "--out", out3.string()}) == 0);
    CHECK(fs::exists(out3 / "verify.json"));

    // Overrides flow into the solve.
    const fs::path out4 = tmp.path / "out4";
    CHECK(run({"bsee", "solve", "--config", config.string(), "--out", out4.string(), "--set",
               "N=8"}) == 0);
    CHECK(slurp(out4 / "a.csv") != a_first);
}

TEST_CASE("cli rejects malformed inputs with exit code 2") {
    TempDir tmp;
    const fs::path config = tmp.path / "bad.txt";

    SUBCASE("unknown key") {
        std::ofstream(config) << "T=1\nN=4\nn=1\nM=1\nterminal.kind=zero\nwhatever=1\n";
        CHECK(run({"bsee", "solve", "--config", config.string(), "--out",
                   (tmp.path / "o").string()}) == 2);
    }

    SUBCASE("missing required key") {
        std::ofstream(config) << "T=1\nn=1\nM=1\nterminal.kind=zero\n";
        CHECK(run({"bsee", "solve", "--config", config.string(), "--out",
                   (tmp.path / "o").string()}) == 2);
    }

    SUBCASE("malformed number") {
        std::ofstream(config) << "T=abc\nN=4\nn=1\nM=1\nterminal.kind=zero\n";
        CHECK(run({"bsee", "solve", "--config", config.string(), "--out",
                   (tmp.path / "o").string()}) == 2);
    }

    SUBCASE("cap violation") {
        std::ofstream(config) << "T=1\nN=256\nn=1\nM=1\nterminal.kind=zero\n";
        CHECK(run({"bsee", "solve", "--config", config.string(), "--out",
                   (tmp.path / "o").string()}) == 2);
        // The documented override lifts it.
        CHECK(run({"bsee", "solve", "--config", config.string(), "--out",
                   (tmp.path / "o2").string(), "--set", "caps.N=256"}) == 0);
    }

    SUBCASE("malformed terminal CSV") {
        const fs::path csv = tmp.path / "terminal.csv";
        std::ofstream(csv) << "not,a,chaos,file\n";
        std::ofstream(config) << "T=1\nN=4\nn=1\nM=1\nterminal.file=" << csv.string() << "\n";
        CHECK(run({"bsee", "solve", "--config", config.string(), "--out",
                   (tmp.path / "o").string()}) == 2);
    }

    SUBCASE("missing config file") {
        CHECK(run({"bsee", "solve", "--config", (tmp.path / "nope.txt").string(), "--out",
                   (tmp.path / "o").string()}) == 2);
    }
}

TEST_CASE("cli slq and nullctrl solve write their reports") {
    TempDir tmp;
    const fs::path slq_config = tmp.path / "slq.txt";
    std::ofstream(slq_config) << "T=1\nN=8\nn=1\nM=1\nslq.y0=1.0\nslq.sigma=0.25\n";
    const fs::path slq_out = tmp.path / "slq_out";
    CHECK(run({"slq", "solve", "--config", slq_config.string(), "--out", slq_out.string()}) == 0);
    CHECK(fs::exists(slq_out / "history.csv"));
    CHECK(fs::exists(slq_out / "control.csv"));
    CHECK(fs::exists(slq_out / "report.json"));
    CHECK(fs::exists(slq_out / "state" / "index.json"));
    CHECK(fs::exists(slq_out / "state" / "y_0008.csv"));
    const std::string history = slurp(slq_out / "history.csv");
    CHECK(history.find("iter,cost,residual") != std::string::npos);

    const fs::path null_config = tmp.path / "null.txt";
    std::ofstream(null_config) << "T=1\nN=8\nn=2\nM=1\nnullctrl.y0=1.0 0.5\n";
    const fs::path null_out = tmp.path / "null_out";
    CHECK(run({"nullctrl", "solve", "--config", null_config.string(), "--out",
               null_out.string()}) == 0);
    CHECK(fs::exists(null_out / "zhat.csv"));
    CHECK(fs::exists(null_out / "control.csv"));
    CHECK(fs::exists(null_out / "report.json"));

    // Round trip the control through nullctrl verify.
    CHECK(run({"nullctrl", "verify", "--config", null_config.string(), "--out",
               (tmp.path / "nv").string(), "--control", (null_out / "control.csv").string()}) ==
          0);
    CHECK(fs::exists(tmp.path / "nv" / "verify.json"));
}

TEST_CASE("cli non-convergence surfaces as exit code 1") {
    TempDir tmp;
    const fs::path config = tmp.path / "slq.txt";
    // One iteration cannot reach the optimum from the zero start.
    std::ofstream(config)
        << "T=1\nN=8\nn=1\nM=1\nslq.y0=1.0\nslq.sigma=0.25\nslq.max_iter=1\nslq.tol=1e-12\n";
    CHECK(run({"slq", "solve", "--config", config.string(), "--out",
               (tmp.path / "out").string()}) == 1);
}
