#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "snsde/app.hpp"

using namespace snsde;
namespace fs = std::filesystem;

namespace {

constexpr double pi = 3.14159265358979323846;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("snsde_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

std::string without_first_line(const std::string& s) { return s.substr(s.find('\n') + 1); }

int cli(std::vector<std::string> args) {
  std::vector<const char*> argv = {"snsde-cli"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream sink;
  return cli_main(static_cast<int>(argv.size()), argv.data(), sink);
}

}  // namespace

TEST(Config, ParsesAllSections) {
  const RunConfig c = parse(R"(
[problem]
case = taylor-green
nu = 0.25
T = 1
grid = 16
[noise]
K = 2
amplitude = 1.5
modes = tg(1,1); tg(1,2)
solenoidal = true, yes
[time]
tau = 1/16
tau_ladder = 1/8, 0.0625, 1/32
lattice_refinement = 8
[scheme]
variants = CN, IE1, STOKES_CN
tol = 1e-9
max_iters = 40
dealias = off
[study]
samples = 12
base_seed = 77
threads = 2
[output]
directory = somewhere
formats = csv, snapshot_csv
snapshot_every = 4
)");
  EXPECT_EQ(c.case_name, "taylor-green");
  EXPECT_EQ(c.case_params.nu, 0.25);
  EXPECT_EQ(c.case_params.grid, 16u);
  EXPECT_EQ(*c.noise_modes_expected, 2u);
  EXPECT_EQ(*c.case_params.amplitude, 1.5);
  EXPECT_EQ(c.case_params.solenoidal, (std::vector<bool>{true, true}));
  EXPECT_EQ(c.tau, 0.0625);
  EXPECT_EQ(c.tau_ladder, (std::vector<double>{0.125, 0.0625, 0.03125}));
  EXPECT_EQ(c.lattice_refinement, 8u);
  EXPECT_EQ(c.variants, (std::vector<Variant>{Variant::CN_RPDE, Variant::EULER_IE1, Variant::STOKES_CN}));
  EXPECT_EQ(c.tol, 1e-9);
  EXPECT_EQ(c.max_iters, 40u);
  EXPECT_FALSE(c.dealias);
  EXPECT_EQ(c.samples, 12u);
  EXPECT_EQ(c.base_seed, 77u);
  EXPECT_EQ(c.threads, 2u);
  EXPECT_EQ(c.output_dir, "somewhere");
  EXPECT_EQ(c.formats, (std::set<std::string>{"csv", "snapshot_csv"}));
  EXPECT_EQ(c.snapshot_every, 4u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, RejectsUnknownAndMalformedEntries) {
  EXPECT_THROW(parse("[problem]\ncolor = red\n"), ConfigError);
  EXPECT_THROW(parse("[extras]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse("stray = 1\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nnu = fast\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\nnu = 1/0\n"), ConfigError);
  EXPECT_THROW(parse("[problem]\ngrid = -4\n"), ConfigError);
  EXPECT_THROW(parse("[scheme]\ndealias = maybe\n"), ConfigError);
  EXPECT_THROW(parse("[scheme]\nvariant = RK4\n"), ConfigError);
  EXPECT_THROW(parse("[scheme]\nvariant = CN\nvariants = CN\n"), ConfigError);
  EXPECT_THROW(parse("[output]\nformats = png\n"), ConfigError);
  EXPECT_THROW(parse("[problem\n"), ConfigError);
}

TEST(Config, ValidationCatchesInconsistentSettings) {
  EXPECT_THROW(validate(parse("[noise]\nK = 3\n")), ConfigError);
  EXPECT_THROW(validate(parse("[problem]\ncase = cavity\n")), ConfigError);
  EXPECT_THROW(validate(parse("[problem]\nnu = 0\n")), ConfigError);
  EXPECT_THROW(validate(parse("[time]\ntau_ladder =\n")), ConfigError);
  EXPECT_THROW(validate(parse("[time]\ntau_ladder = 1/8, 1/10, 1/32\n")), ConfigError);
  EXPECT_THROW(validate(parse("[time]\ntau = 0.3\n")), ConfigError);
  EXPECT_THROW(validate(parse("[noise]\nmodes = tg(1,1); grad(1,0)\nsolenoidal = true, false\n")), ConfigError);
  EXPECT_THROW(validate(parse("[noise]\nmodes = blob(1)\n")), ConfigError);
  EXPECT_NO_THROW(validate(parse("")));
}

TEST(Output, DirectoryPrecedence) {
  RunConfig c;
  ::setenv("SNSDE_OUTPUT_DIR", "from-env", 1);
  EXPECT_EQ(resolve_output_dir(std::nullopt, c), fs::path("from-env"));
  c.output_dir = "from-config";
  EXPECT_EQ(resolve_output_dir(std::nullopt, c), fs::path("from-config"));
  EXPECT_EQ(resolve_output_dir(std::string("from-flag"), c), fs::path("from-flag"));
  ::unsetenv("SNSDE_OUTPUT_DIR");
  EXPECT_EQ(resolve_output_dir(std::nullopt, RunConfig{}), fs::path("snsde-output"));
}

TEST(Output, SnapshotRoundTrip) {
  const Grid2D g(8);
  const PhysicalField f = transform_backward(taylor_green(g, 1, 2));
  const std::string bytes = encode_snapshot(f, 0.375);
  ASSERT_EQ(bytes.size(), 4 + 1 + 4 + 4 + 8 + 2 * 64 * 8u);
  EXPECT_EQ(bytes.substr(0, 4), "SNSF");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[5]), 8u);  // grid, little endian
  const Snapshot s = decode_snapshot(bytes);
  EXPECT_EQ(s.time, 0.375);
  EXPECT_EQ(s.field.values, f.values);
  EXPECT_EQ(s.field.components(), 2);
  EXPECT_THROW(decode_snapshot("SNSX" + bytes.substr(4)), IoError);
  EXPECT_THROW(decode_snapshot(bytes.substr(0, bytes.size() - 1)), IoError);
  EXPECT_THROW(decode_snapshot(bytes + "x"), IoError);
}

TEST(Output, AtomicWriteLeavesNoTemporary) {
  TempDir tmp;
  const fs::path p = tmp.path / "nested" / "file.txt";
  write_atomic(p, "abc");
  write_atomic(p, "defg");
  EXPECT_EQ(read_file(p), "defg");
  EXPECT_FALSE(fs::exists(p.string() + ".tmp"));
}

TEST(Output, TableCsvColumns) {
  ErrorTable t;
  t.rows.push_back({Variant::CN_RPDE, 0.125, 1.0, 0.1, 2.0, 0.2, 3.0, 0.3, 10, 0});
  t.rates.push_back({Variant::CN_RPDE, "vel_l2", 3.0, 0.05});
  const std::string e = without_first_line(errors_csv(t));
  EXPECT_EQ(e, "variant,tau,err_vel_l2,stderr_vel,err_h1_mid,stderr_h1,err_press,stderr_press,samples,failures\n"
               "CN_RPDE,0.125,1,0.10000000000000001,2,0.20000000000000001,3,0.29999999999999999,10,0\n");
  EXPECT_EQ(without_first_line(rates_csv(t)), "variant,functional,slope,slope_stderr\nCN_RPDE,vel_l2,3,0.050000000000000003\n");
  EXPECT_NE(plot_data(t).find("# variant CN_RPDE\n-0.903089986991943"), std::string::npos);
}

TEST(Commands, ZeroRunIsAllZero) {
  TempDir tmp;
  const RunConfig c = parse("[problem]\ncase = zero\ngrid = 16\nT = 0.5\n[time]\ntau = 1/8\n");
  const RunSummary s = cmd_run(c, tmp.path);
  EXPECT_EQ(s.steps, 4u);
  for (double e : s.energy) EXPECT_EQ(e, 0.0);
  const std::string csv = without_first_line(read_file(tmp.path / "trajectory.csv"));
  EXPECT_EQ(csv, "step,t,energy,max_divergence,iterations\n0,0,0,0,0\n1,0.125,0,0,1\n2,0.25,0,0,1\n3,0.375,0,0,1\n"
                 "4,0.5,0,0,1\n");
}

TEST(Commands, TaylorGreenDecayRate) {
  TempDir tmp;
  const double nu = 0.01;
  const RunConfig c = parse("[problem]\ncase = taylor-green-decay\nnu = 0.01\nT = 0.5\n[time]\ntau = 1/64\n");
  const RunSummary s = cmd_run(c, tmp.path);
  const double expect = s.energy.front() * std::exp(-16 * pi * pi * nu * 0.5);
  EXPECT_NEAR(s.final_energy / expect, 1.0, 1e-4);
  EXPECT_LT(s.max_divergence, 1e-12);
}

TEST(Commands, RunIsReproducibleAndWritesSnapshots) {
  TempDir a, b;
  const RunConfig c = parse(
      "[problem]\ncase = taylor-green-mixed\nnu = 0.2\ngrid = 16\nT = 0.5\n[time]\ntau = 1/16\n"
      "[output]\nformats = csv, snapshot, snapshot_csv\nsnapshot_every = 4\n");
  cmd_run(c, a.path);
  cmd_run(c, b.path);
  EXPECT_EQ(without_first_line(read_file(a.path / "trajectory.csv")),
            without_first_line(read_file(b.path / "trajectory.csv")));
  for (const char* n : {"snapshot_000000", "snapshot_000004", "snapshot_000008"}) {
    EXPECT_TRUE(fs::exists(a.path / (std::string(n) + ".snsf"))) << n;
    EXPECT_TRUE(fs::exists(a.path / (std::string(n) + ".csv"))) << n;
    EXPECT_EQ(read_file(a.path / (std::string(n) + ".snsf")), read_file(b.path / (std::string(n) + ".snsf")));
  }
  const Snapshot last = decode_snapshot(read_file(a.path / "snapshot_000008.snsf"));
  EXPECT_EQ(last.time, 0.5);
  EXPECT_EQ(last.field.grid.n(), 16u);
}

TEST(Commands, ConvergenceFilesAreDeterministic) {
  TempDir a, b;
  const std::string text =
      "[problem]\ncase = taylor-green-mixed\nnu = 0.2\ngrid = 16\nT = 0.25\n"
      "[time]\ntau_ladder = 1/8, 1/16, 1/32\nlattice_refinement = 4\n"
      "[scheme]\nvariants = CN, SIS\n[study]\nsamples = 3\nbase_seed = 5\n";
  RunConfig c = parse(text);
  cmd_convergence(c, a.path);
  c.threads = 2;
  cmd_convergence(c, b.path);
  for (const char* f : {"errors.csv", "rates.csv", "plot.dat"}) {
    EXPECT_EQ(without_first_line(read_file(a.path / f)), without_first_line(read_file(b.path / f))) << f;
  }
  const std::string rates = read_file(a.path / "rates.csv");
  EXPECT_NE(rates.find("CN_RPDE,vel_l2,"), std::string::npos);
  EXPECT_NE(rates.find("EULER_SIS,press,"), std::string::npos);
}

TEST(Commands, CliExitCodes) {
  TempDir tmp;
  auto write = [&](const std::string& name, const std::string& text) {
    const fs::path p = tmp.path / name;
    std::ofstream(p) << text;
    return p.string();
  };
  const std::string out = (tmp.path / "out").string();
  EXPECT_EQ(cli({}), exit_config);
  EXPECT_EQ(cli({"run"}), exit_config);
  EXPECT_EQ(cli({"run", "--config", (tmp.path / "missing.ini").string()}), exit_config);
  EXPECT_EQ(cli({"convergence", "--config", write("empty.ini", "[time]\ntau_ladder =\n"), "--output", out}),
            exit_config);
  EXPECT_EQ(cli({"run", "--config", write("zero.ini", "[problem]\ncase = zero\ngrid = 8\nT = 0.25\n"), "--output",
                 out, "--seed", "3"}),
            exit_ok);
  EXPECT_TRUE(fs::exists(fs::path(out) / "trajectory.csv"));
  // one lagged sweep cannot reach the tolerance with strong transport
  EXPECT_EQ(cli({"run", "--config",
                 write("stiff.ini", "[problem]\nnu = 0.1\nT = 0.25\n[time]\ntau = 1/8\n[scheme]\nmax_iters = 1\n"),
                 "--output", out}),
            exit_solver);
  // two ladder points: no slope can be fitted, so the slope checks fail
  EXPECT_EQ(cli({"check", "--config",
                 write("check.ini", "[problem]\ncase = taylor-green\ngrid = 8\n[time]\ntau_ladder = 1/8, 1/16\n"
                                    "[study]\nsamples = 50\n"),
                 "--output", out, "--threads", "2"}),
            exit_check);
  EXPECT_TRUE(fs::exists(fs::path(out) / "checks.txt"));
}
