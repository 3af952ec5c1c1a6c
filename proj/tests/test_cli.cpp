#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "filterforge/builtin.hpp"
#include "filterforge/filter_io.hpp"
#include "filterforge/slise.hpp"
#include "filterforge/weight.hpp"

namespace ff = filterforge;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int status = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  for (std::string f; std::getline(is, f, ',');) out.push_back(f);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("filterforge-cli-" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  CliRun run(const std::string& args) const {
    const auto out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd =
        std::string("\"") + FILTERFORGE_CLI + "\" " + args + " >\"" + out.string() + "\" 2>\"" + err.string() + "\"";
    const int raw = std::system(cmd.c_str());
    CliRun r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

 private:
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndUnknownSubcommand) {
  EXPECT_EQ(run("--help").status, 0);
  EXPECT_EQ(run("frobnicate").status, 2);
  EXPECT_EQ(run("optimize --no-such-flag").status, 2);
}

TEST_F(Cli, OptimizeBoxFromZolotarev) {
  const auto out = path("box.json"), trace = path("trace.csv");
  const auto r = run("optimize --weight box-slise --start zolotarev16 --lb 0.0022 --out \"" + out.string() +
                     "\" --trace \"" + trace.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.err.find("start pole 0"), std::string::npos) << r.err;
  const auto f = ff::read_filter(out);
  for (const auto& w : f.poles()) EXPECT_GE(w.imag(), 0.0022);
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::BoxSlise), 4);
  EXPECT_NEAR(ff::loss(obj, f), 4.72e-4, 0.02 * 4.72e-4);
  const auto rows = lines(slurp(trace));
  ASSERT_GE(rows.size(), 3u);
  EXPECT_EQ(rows[0], "iteration,loss,grad_norm,evaluations");
  EXPECT_EQ(fields(rows[1])[0], "0");
  double previous = std::stod(fields(rows[1])[1]);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const double loss = std::stod(fields(rows[i])[1]);
    EXPECT_LT(loss, previous) << rows[i];
    previous = loss;
  }
}

TEST_F(Cli, OptimizeGammaFromGaussLegendre) {
  const auto r = run("optimize --weight gamma-slise --start gauss-legendre --poles 16");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto f = ff::parse_filter(r.out, "stdout");
  const ff::SliseObjective obj(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), 4);
  EXPECT_LE(ff::loss(obj, f), ff::loss(obj, ff::builtin_filter(ff::BuiltinFilter::GammaSlise16)) + 1e-6);
}

TEST_F(Cli, OptimizeWithWeightFile) {
  const auto w = path("weight.json");
  ff::write_weight(ff::builtin_weight(ff::BuiltinWeight::GammaSlise), w);
  const auto r = run("optimize --weight \"" + w.string() + "\" --start gauss-legendre --poles 8");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(ff::parse_filter(r.out).m(), 2u);
}

TEST_F(Cli, MissingInputsExitWithUsageError) {
  const auto missing = path("no-such-weight.json").string();
  const auto r = run("optimize --weight \"" + missing + "\"");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
  EXPECT_EQ(run("eval --filter \"" + path("nothing.json").string() + "\"").status, 2);
  EXPECT_EQ(run("optimize --start gauss-legendre --poles 6").status, 2);
}

TEST_F(Cli, MalformedFilterFileExitsTwo) {
  const auto bad = path("bad.json");
  std::ofstream(bad) << R"({"m": 1, "poles": [{"re": -0.5, "im": 0.0}], "coeffs": [{"re": 0.1, "im": 0.1}]})";
  const auto r = run("eval --filter \"" + bad.string() + "\"");
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("poles[0]"), std::string::npos) << r.err;
}

TEST_F(Cli, EvalCurve) {
  const auto r = run("eval --filter gamma-slise16 --from -3 --to 3 --samples 61");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 62u);
  EXPECT_EQ(rows[0], "x,value");
  const auto first = fields(rows[1]), last = fields(rows[61]);
  EXPECT_EQ(std::stod(first[0]), -3.0);
  EXPECT_EQ(std::stod(last[0]), 3.0);
  const auto f = ff::builtin_filter(ff::BuiltinFilter::GammaSlise16);
  for (int i = 1; i <= 61; ++i) {
    const auto a = fields(rows[static_cast<std::size_t>(i)]);
    const auto b = fields(rows[static_cast<std::size_t>(62 - i)]);
    EXPECT_NEAR(std::stod(a[1]), std::stod(b[1]), 1e-13);
    EXPECT_NEAR(std::stod(a[1]), f(std::stod(a[0])), 1e-15);
  }
  EXPECT_EQ(run("eval --filter gamma-slise16 --samples 1").status, 2);
  EXPECT_EQ(run("eval --filter gamma-slise16 --from 1 --to 1").status, 2);
}

TEST_F(Cli, RatesGrid) {
  const auto csv = path("rates.csv");
  const auto r = run("rates --out \"" + csv.string() + "\"");
  ASSERT_EQ(r.status, 0) << r.err;
  const auto text = slurp(csv);
  const auto rows = lines(text);
  ASSERT_EQ(rows.size(), 1u + 3 * 4 * 3);
  EXPECT_EQ(rows[0], "G,poles,filter,worst_case_rate");
  for (std::size_t k = 1; k < rows.size(); k += 3) {
    const auto gl = fields(rows[k]), gamma = fields(rows[k + 1]), enh = fields(rows[k + 2]);
    EXPECT_EQ(gl[2], "gauss-legendre");
    EXPECT_EQ(gamma[2], "gamma-slise");
    EXPECT_EQ(enh[2], "enhanced-gamma-slise");
    EXPECT_LT(std::stod(enh[3]), std::stod(gamma[3])) << rows[k];
    EXPECT_LT(std::stod(gamma[3]), std::stod(gl[3])) << rows[k];
  }
  const auto again = run("rates");
  ASSERT_EQ(again.status, 0);
  EXPECT_EQ(again.out, text);
  EXPECT_EQ(run("rates --poles 10").status, 2);
  EXPECT_EQ(run("rates --gap 1.0").status, 2);
}

TEST_F(Cli, DesignWeightIsDeterministicAndImproves) {
  const auto trace = path("design.csv");
  const std::string args = "design-weight --start gamma-slise --gap 0.95 --poles 16 --budget 12";
  const auto a = run(args + " --trace \"" + trace.string() + "\"");
  ASSERT_EQ(a.status, 0) << a.err;
  const auto b = run(args);
  ASSERT_EQ(b.status, 0) << b.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_NO_THROW(ff::parse_weight(a.out));
  const auto rows = lines(slurp(trace));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_LE(rows.size(), 13u);
  EXPECT_EQ(rows[0], "evaluation,objective,v1,v2,v3,v4,v5,w1,w2,w3");
  const double start = std::stod(fields(rows[1])[1]);
  double best = start;
  for (std::size_t i = 1; i < rows.size(); ++i) best = std::min(best, std::stod(fields(rows[i])[1]));
  EXPECT_LE(best, start);
  EXPECT_EQ(run("design-weight --start nonsense").status, 2);
  EXPECT_EQ(run("design-weight --budget -1").status, 2);
}

TEST_F(Cli, SimulateSmokeAndStandard) {
  const auto smoke = run("simulate --problem smoke --start gauss-legendre --poles 16");
  ASSERT_EQ(smoke.status, 0) << smoke.err;
  auto rows = lines(smoke.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "problem_id,filter,N_multiplier,iterations,converged,predicted_rate,measured_rate");
  auto f = fields(rows[1]);
  EXPECT_EQ(f[0], "smoke");
  EXPECT_LE(std::stoi(f[3]), 10);
  EXPECT_EQ(f[4], "true");

  const auto out = path("sim.csv");
  const auto std_run =
      run("simulate --problem standard --start gamma-slise16 enhanced-gamma-slise16 --out \"" + out.string() + "\"");
  ASSERT_EQ(std_run.status, 0) << std_run.err;
  rows = lines(slurp(out));
  ASSERT_EQ(rows.size(), 3u);
  const auto g = fields(rows[1]), e = fields(rows[2]);
  EXPECT_EQ(g[0], "standard-0");
  EXPECT_EQ(g[1], "gamma-slise16");
  EXPECT_EQ(g[2], "1.1");
  EXPECT_EQ(g[4], "true");
  EXPECT_LE(std::stoi(e[3]), std::stoi(g[3]));

  EXPECT_EQ(run("simulate --problem smoke --multiplier 0.5").status, 2);
  EXPECT_EQ(run("simulate --problem huge").status, 2);
}
