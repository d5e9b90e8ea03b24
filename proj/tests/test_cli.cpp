#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include <qsync/errors.hpp>

#include "config.hpp"
#include "output.hpp"
#include "runs.hpp"

using namespace qsync;
using namespace qsync::tools;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("qsync_test_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

const char* kSmallSystem = R"(
[system]
freqs = 1.0, 1.4
k = 0.8
T = 0.4
gamma_plus = 0.01
dims = 6, 5

[integrator]
dt = 0.01
t_final = 0.2
sample_stride = 5
)";

}  // namespace

TEST(Csv, SeventeenDigits) {
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(-0.0), "0");
  EXPECT_EQ(format_double(1e-300), "1e-300");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.33333333333333331");
  CsvWriter w({"a", "b", "c"});
  w.add(1.5).add(std::optional<double>{}).add("ok");
  w.end_row();
  EXPECT_EQ(w.str(), "a,b,c\n1.5,,ok\n");
  EXPECT_THROW(w.end_row(), std::exception);
}

TEST(Manifest, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Config, Defaults) {
  const auto c = parse_config("");
  EXPECT_EQ(c.system.freqs.size(), 2u);
  EXPECT_EQ(c.system.dims.dims, (std::vector<Index>{66, 44}));
  EXPECT_EQ(c.sweep.k_values().size(), 21u);
  EXPECT_DOUBLE_EQ(c.sweep.k_values().front(), -6.0);
  EXPECT_DOUBLE_EQ(c.sweep.k_values().back(), 6.0);
}

TEST(Config, ParsesSections) {
  const auto c = parse_config(kSmallSystem);
  EXPECT_EQ(c.system.dims.dims, (std::vector<Index>{6, 5}));
  EXPECT_FALSE(c.dims_auto);
  EXPECT_DOUBLE_EQ(c.system.k, 0.8);
  EXPECT_EQ(c.system.gamma_plus, (std::vector<double>{0.01, 0.01}));
  EXPECT_EQ(c.integrator.sample_stride, 5);
  EXPECT_DOUBLE_EQ(c.classical.k, 0.8);
}

TEST(Config, ErrorsNameTheProblem) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, "cfg.ini");
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::Config);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("[system]\nk = fast\n").find("[system] k"), std::string::npos);
  EXPECT_NE(message("[system]\nbogus = 1\n").find("bogus"), std::string::npos);
  EXPECT_NE(message("[nowhere]\nx = 1\n").find("nowhere"), std::string::npos);
  EXPECT_NE(message("[system\n").find("cfg.ini:1"), std::string::npos);
  EXPECT_NE(message("[integrator]\ndt = 0.3\nt_final = 1\n").find("integrator"), std::string::npos);
  EXPECT_NE(message("[system]\nfreqs = 1, -2\n").find("system"), std::string::npos);
}

TEST(Runs, SimulateIsDeterministicAndChecksummed) {
  TempDir a("sim_a"), b("sim_b");
  const auto cfg = parse_config(kSmallSystem);
  ASSERT_EQ(run_simulate(cfg, {a.path(), 1, 1}), RunStatus::Ok);
  ASSERT_EQ(run_simulate(cfg, {b.path(), 1, 1}), RunStatus::Ok);
  const std::string csv = slurp(a.path() / "trajectory.csv");
  EXPECT_EQ(csv, slurp(b.path() / "trajectory.csv"));
  const auto rows = lines(csv);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0],
            "t,D2,s_theta,s_r,chi,L,sigma0,ldot_exact,ldot_fd,qsl_rhs,energy,entropy,cap_ent,cov_ce,delta_c,delta_e,"
            "trace_err,min_eig");
  EXPECT_EQ(fields(rows[1]).size(), 18u);
  EXPECT_EQ(fields(rows[1])[2], "");
  const std::string manifest = slurp(a.path() / "manifest.txt");
  EXPECT_NE(manifest.find("output.trajectory.csv: sha256=" + sha256_hex(csv)), std::string::npos);
  EXPECT_NE(manifest.find("status: ok"), std::string::npos);
  EXPECT_NE(manifest.find("  k = 0.8"), std::string::npos);
}

TEST(Runs, UncoupledSimulationKeepsUnitDistance) {
  TempDir d("sim_k0");
  auto cfg = parse_config(std::string(kSmallSystem) + "");
  cfg.system.k = 0.0;
  cfg.system.dims.dims = {14, 12};
  cfg.integrator.dt = 1e-3;
  cfg.integrator.t_final = 0.05;
  cfg.integrator.sample_stride = 10;
  ASSERT_EQ(run_simulate(cfg, {d.path(), 0, 1}), RunStatus::Ok);
  const auto rows = lines(slurp(d.path() / "trajectory.csv"));
  double prev_t = -1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    EXPECT_NEAR(std::stod(f[1]), 1.0, 1e-6);
    EXPECT_GT(std::stod(f[0]), prev_t);
    prev_t = std::stod(f[0]);
  }
}

TEST(Runs, IntegrationFailureIsRecorded) {
  TempDir d("sim_fail");
  auto cfg = parse_config(kSmallSystem);
  cfg.system.k = 40.0;
  cfg.integrator.dt = 0.5;
  cfg.integrator.t_final = 20.0;
  cfg.integrator.sample_stride = 1;
  EXPECT_EQ(run_simulate(cfg, {d.path(), 0, 1}), RunStatus::Fatal);
  const std::string manifest = slurp(d.path() / "manifest.txt");
  EXPECT_NE(manifest.find("failure.t: "), std::string::npos);
  EXPECT_TRUE(fs::exists(d.path() / "trajectory.csv"));
}

TEST(Runs, SweepIdenticalAcrossWorkerCounts) {
  auto cfg = parse_config(R"(
[system]
freqs = 1.0, 1.0
T = 0.5
gamma_plus = 0.01
[sweep]
k_min = -1
k_max = 1
k_count = 3
dw_min = 0
dw_max = 0.5
dw_count = 2
t_obs = 0.2
dt = 0.01
tail_target = 1e-3
classical_members = 50
classical_dt = 0.01
)");
  TempDir a("sweep_a"), b("sweep_b");
  ASSERT_EQ(run_sweep(cfg, {a.path(), 7, 1}), RunStatus::Ok);
  ASSERT_EQ(run_sweep(cfg, {b.path(), 7, 3}), RunStatus::Ok);
  for (const char* f : {"sweep_quantum.csv", "sweep_classical.csv"}) {
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
    EXPECT_EQ(lines(slurp(a.path() / f)).size(), 7u);
  }
  EXPECT_EQ(lines(slurp(a.path() / "sweep_quantum.csv"))[0], "k,delta_omega,D_at_t,chi_at_t,status");
  EXPECT_EQ(lines(slurp(a.path() / "sweep_classical.csv"))[0], "k,delta_omega,D_cl_at_t,status");
}

TEST(Runs, SweepPointMatchesSimulationFinalSample) {
  auto cfg = parse_config(R"(
[system]
freqs = 1.0, 1.0
T = 0.5
gamma_plus = 0.01
[integrator]
dt = 0.01
t_final = 0.3
sample_stride = 10
[sweep]
k_min = 0.7
k_max = 0.7
k_count = 1
dw_min = 0.3
dw_max = 0.3
dw_count = 1
t_obs = 0.3
dt = 0.01
tail_target = 1e-3
)");
  const auto point = sweep_quantum_point(cfg, 0.7, 0.3);
  const SystemSpec spec = sweep_system(cfg, 0.7, 0.3);
  const auto traj = simulate_trajectory(spec, cfg.integrator, initial_product_state(spec), false);
  ASSERT_FALSE(traj.failure);
  EXPECT_NEAR(point.d, std::sqrt(traj.records.back().d2), 1e-12);
  EXPECT_NEAR(point.chi, traj.records.back().chi, 1e-12);
}

TEST(Runs, SweepPointFailureKeepsRow) {
  auto cfg = parse_config("[system]\nfreqs = 1, 1\nT = 0.5\n[sweep]\nk_count = 1\ndw_count = 1\n");
  cfg.sweep.dt = 0.7;
  cfg.sweep.t_obs = 7.0;
  const auto p = sweep_quantum_point(cfg, 6.0, 0.0);
  EXPECT_NE(p.status, "ok");
  EXPECT_TRUE(std::isnan(p.d));
}

TEST(Runs, EmptySampleGivesHeaders) {
  TempDir d("sample_empty");
  auto cfg = parse_config("[sample]\ncount = 0\n");
  ASSERT_EQ(run_sample_gaussian(cfg, {d.path(), 0, 2}), RunStatus::Ok);
  EXPECT_EQ(slurp(d.path() / "samples.csv"), "index,D,chi_quantum,chi_classical,nu1,nu2,r,validity_margin\n");
  EXPECT_EQ(slurp(d.path() / "hull_quantum.csv"), "D,chi\n");
  EXPECT_EQ(slurp(d.path() / "hull_classical.csv"), "D,chi\n");
  EXPECT_EQ(lines(slurp(d.path() / "bound_curves.csv")).size(), 401u);
}

TEST(Runs, BoundCurvesShiftIdentity) {
  TempDir d("sample_curves");
  auto cfg = parse_config("[sample]\ncount = 10\n");
  ASSERT_EQ(run_sample_gaussian(cfg, {d.path(), 0, 1}), RunStatus::Ok);
  const auto rows = lines(slurp(d.path() / "bound_curves.csv"));
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    EXPECT_GE(std::stod(f[1]), std::stod(f[2]) - 2.0 * (1.0 - std::log(2.0)) - 1e-12);
  }
}

TEST(Runs, BoundsTable) {
  BoundsGrid g;
  g.n_modes = {2, 1000};
  g.kappas = {1.0};
  g.d_min = -0.1;
  g.d_max = std::sqrt(2.0) / std::exp(1.0);
  g.d_count = 3;
  g.temperature = 2.0;
  const auto rows = lines(bounds_csv(g));
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(fields(rows[1]).back(), "divergent");
  const auto zero = fields(rows[3]);
  EXPECT_NEAR(std::stod(zero[3]), 0.0, 1e-14);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const auto f = fields(rows[i]);
    if (f.back() == "divergent") continue;
    const double n = std::stod(f[0]);
    EXPECT_NEAR(std::stod(f[4]) - std::stod(f[3]), n * (1.0 - std::log(2.0)), 1e-9);
    EXPECT_NEAR(std::stod(f[7]), 2.0 * std::stod(f[3]), 1e-9);
  }
  const auto big = fields(rows[6]);
  EXPECT_NEAR(std::stod(big[3]) / std::stod(big[5]), 1.0, 0.01);
}

TEST(Runs, ClassicalDeterministic) {
  auto cfg = parse_config(R"(
[system]
freqs = 1.0, 1.2
k = 1.0
T = 1.0
gamma_plus = 0.01
[classical]
members = 200
dt = 0.01
t_final = 1
sample_stride = 10
)");
  TempDir a("cl_a"), b("cl_b");
  ASSERT_EQ(run_classical(cfg, {a.path(), 3, 1}), RunStatus::Ok);
  ASSERT_EQ(run_classical(cfg, {b.path(), 3, 4}), RunStatus::Ok);
  const std::string csv = slurp(a.path() / "classical.csv");
  EXPECT_EQ(csv, slurp(b.path() / "classical.csv"));
  EXPECT_EQ(lines(csv).size(), 12u);
  EXPECT_EQ(lines(csv)[0], "t,D2_cl,chi_cl,phase_diff_circ_var,mean_r1_sq,mean_r2_sq,csl_rhs");
}

TEST(Runs, ParallelForCoversEveryIndex) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (int h : hits) EXPECT_EQ(h, 1);
}
