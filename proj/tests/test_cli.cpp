#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "config.hpp"
#include "csv.hpp"
#include "runner.hpp"

namespace fs = std::filesystem;
using namespace uhopt::cli;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("uhopt_test_cli_" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

fs::path write_file(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

// metric -> value column of summary.csv
std::map<std::string, double> read_summary(const fs::path& p) {
    std::map<std::string, double> out;
    std::ifstream f(p);
    std::string line;
    std::getline(f, line);
    while (std::getline(f, line)) {
        const auto a = line.find(',');
        const auto b = line.find(',', a + 1);
        out[line.substr(0, a)] = std::stod(line.substr(a + 1, b - a - 1));
    }
    return out;
}

int run_cli(const std::string& args, const fs::path& err) {
    const std::string cmd = std::string(UHOPT_CLI_PATH) + " " + args + " 2>" + err.string() + " >/dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("number formatting and quoting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(123456789012345.0) == "1.23456789012e+14");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(quote_field("plain") == "plain");
    CHECK(quote_field("a,b") == "\"a,b\"");
    CHECK(quote_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CsvTable t({"name", "x", "n"});
    t.add_row({std::string("a,b"), 2.5, 3LL});
    CHECK(t.str() == "name,x,n\r\n\"a,b\",2.5,3\r\n");
    CHECK_THROWS(t.add_row({2.0}));
}

TEST_CASE("config defaults and parsing") {
    const ExperimentConfig d = default_config();
    CHECK(d.mu == 0.08);
    CHECK(d.r == 0.03);
    CHECK(d.sigma == 0.2);
    CHECK(d.gamma == 3.0);
    CHECK(d.alpha == 0.25);
    CHECK(d.B == 50.0);
    CHECK(d.K == 1.0);
    CHECK(d.x0 == 100.0);
    CHECK(d.t_tilde == 10.0);
    CHECK(d.dates == std::vector<double>{8.0});
    CHECK(d.probs == std::vector<double>{0.5});
    CHECK(d.T == 12.0);
    CHECK_NOTHROW(d.validate());

    const fs::path dir = scratch_dir("config");
    const auto cfg = write_file(dir / "a.ini",
                                "; comment\n[run]\nexperiment = merton\nn_paths = 1234\nseed = 9\n"
                                "[horizon]\ndates = 2, 5\nprobs = 0.1,0.2\nT = 9\n[sweep]\np1 = 0.2, 0.4\n");
    const ExperimentConfig c = load_config(cfg.string());
    CHECK(c.experiment == Experiment::merton);
    CHECK(c.n_paths == 1234);
    CHECK(c.seed == 9);
    CHECK(c.dates == std::vector<double>{2.0, 5.0});
    CHECK(c.probs == std::vector<double>{0.1, 0.2});
    CHECK(c.T == 9.0);
    CHECK(c.sweep_p1 == std::vector<double>{0.2, 0.4});
    CHECK(c.mu == 0.08);

    CHECK_THROWS_AS(load_config(write_file(dir / "b.ini", "[run]\nbogus = 1\n").string()), ConfigError);
    CHECK_THROWS_AS(load_config(write_file(dir / "c.ini", "[other]\nx = 1\n").string()), ConfigError);
    CHECK_THROWS_AS(load_config(write_file(dir / "d.ini", "[market]\nmu = abc\n").string()), ConfigError);
    CHECK_THROWS_AS(load_config(write_file(dir / "e.ini", "[run]\nexperiment = nope\n").string()), ConfigError);
    CHECK_THROWS_AS(load_config((dir / "missing.ini").string()), ConfigError);
    ExperimentConfig bad = d;
    bad.probs = {0.5, 0.1};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = d;
    bad.experiment = Experiment::figure1_sweep;
    bad.sweep_d = {11.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("merton experiment reports the Merton fraction") {
    ExperimentConfig c = default_config();
    c.experiment = Experiment::merton;
    c.n_paths = 20000;
    const fs::path dir = scratch_dir("merton");
    const RunResult r = run_experiment(c, dir.string());
    CHECK(r.summary.find("fraction=0.416667") != std::string::npos);
    const std::string text = slurp(dir / "summary.csv");
    CHECK(text.rfind("metric,value,se\r\n", 0) == 0);
    CHECK(text.find("fraction,0.416666666667,") != std::string::npos);
    const auto s = read_summary(dir / "summary.csv");
    CHECK(std::abs(s.at("fraction") - 0.416667) < 5e-7);
    CHECK(fs::exists(dir / "solution.csv"));
}

TEST_CASE("uncertain horizon experiment meets its budget tolerance") {
    ExperimentConfig c = default_config();
    c.n_paths = 10000;
    const fs::path dir = scratch_dir("uncertain");
    run_experiment(c, dir.string());
    const auto s = read_summary(dir / "summary.csv");
    CHECK(s.at("budget_residual") <= c.budget_tol);
    CHECK(s.at("gap_violations") == 0.0);
    CHECK(s.at("max_lagrange_spread") <= 1e-9);
    CHECK(s.at("n_paths") == 10000.0);

    std::ifstream f(dir / "solution.csv");
    std::string header;
    std::getline(f, header);
    CHECK(header.rfind("path,stop_date,W_T1,H_T1,W_T,H_T,nu_T1,nu_T", 0) == 0);
    std::size_t rows = 0;
    for (std::string line; std::getline(f, line);) ++rows;
    CHECK(rows == 10000);

    c.t_tilde = 11.0;
    CHECK_THROWS_AS(run_experiment(c, dir.string()), ConfigError);
}

TEST_CASE("figure sweeps write a sweep table") {
    ExperimentConfig c = default_config();
    c.experiment = Experiment::figure2_sweep;
    c.n_paths = 5000;
    c.sweep_p1 = {0.2, 0.5, 0.8};
    const fs::path dir = scratch_dir("fig2");
    run_experiment(c, dir.string());
    std::ifstream f(dir / "sweep.csv");
    std::string header, first, second;
    std::getline(f, header);
    std::getline(f, first);
    std::getline(f, second);
    CHECK(header.rfind("p1,T1,T,", 0) == 0);
    CHECK(first.rfind("0.2,8,12,0.2,", 0) == 0);
    // The first row has no predecessor to difference against.
    CHECK(first.find(",,,,") != std::string::npos);
    CHECK(second.find(",,,,") == std::string::npos);

    c.experiment = Experiment::figure1_sweep;
    c.sweep_d = {1.0, 2.0};
    const fs::path dir1 = scratch_dir("fig1");
    run_experiment(c, dir1.string());
    const auto s = read_summary(dir1 / "summary.csv");
    CHECK(s.at("points") == 2.0);
    CHECK(fs::exists(dir1 / "sweep.csv"));
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
    const fs::path dir = scratch_dir("determinism");
    const auto cfg = write_file(dir / "run.ini", "[run]\nexperiment = uncertain-horizon\nn_paths = 6000\nseed = 11\n");
    const fs::path err = dir / "err.txt";
    REQUIRE(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "a").string() + " --threads 1", err) == 0);
    REQUIRE(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "b").string() + " --threads 1", err) == 0);
    REQUIRE(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "c").string() + " --threads 4", err) == 0);
    for (const char* f : {"summary.csv", "solution.csv"}) {
        const std::string a = slurp(dir / "a" / f);
        CHECK(!a.empty());
        CHECK(a == slurp(dir / "b" / f));
        CHECK(a == slurp(dir / "c" / f));
    }
    REQUIRE(run_cli("--config " + cfg.string() + " --out-dir " + (dir / "d").string() + " --seed 12", err) == 0);
    CHECK(slurp(dir / "a" / "solution.csv") != slurp(dir / "d" / "solution.csv"));
}

TEST_CASE("command line errors are machine readable") {
    const fs::path dir = scratch_dir("errors");
    const fs::path err = dir / "err.txt";
    const auto bad = write_file(dir / "bad.ini", "[market]\nsigma = -1\n");
    CHECK(run_cli("--config " + bad.string() + " --out-dir " + dir.string(), err) == 2);
    const std::string e = slurp(err);
    CHECK(e.find("\"status\":\"error\"") != std::string::npos);
    CHECK(e.find("\"error\":\"invalid_config\"") != std::string::npos);

    const auto infeasible = write_file(dir / "inf.ini", "[run]\nexperiment = uncertain-horizon\nn_paths = 2000\nmax_iterations = 1\nbudget_tol = 1e-9\n");
    CHECK(run_cli("--config " + infeasible.string() + " --out-dir " + dir.string(), err) == 3);
    CHECK(slurp(err).find("\"error\":\"not_converged\"") != std::string::npos);

    CHECK(run_cli("--no-such-flag", err) == 2);
    CHECK(slurp(err).find("\"error\":\"usage\"") != std::string::npos);

    // The output directory falls back to the environment.
    const fs::path env_dir = dir / "from_env";
    const std::string cmd = "UHOPT_OUT_DIR=" + env_dir.string() + " " + UHOPT_CLI_PATH +
                            " --quiet --config " + write_file(dir / "m.ini", "[run]\nexperiment = merton\nn_paths = 100\n").string();
    CHECK(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(env_dir / "summary.csv"));
}
