#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "mfsol/cli.hpp"

using namespace mfsol;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mfsol_test_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path write_text(const fs::path& p, const std::string& s) {
  std::ofstream(p) << s;
  return p;
}

std::string lle_config(const fs::path& out, const std::string& extra_time = "dt = 1e-4\nt_end = 0.1\n",
                       const std::string& preset = "circle") {
  return "[system]\nid = lle\n[grid]\nnx = 256\nny = 1\n[time]\n" + extra_time + "[initial]\npreset = " + preset +
         "\n[output]\ndir = " + out.string() + "\nevery = 500\n";
}

std::map<std::string, std::string> parse_summary(const std::string& s) {
  std::map<std::string, std::string> kv;
  std::istringstream is(s);
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

}  // namespace

// Grid files -----------------------------------------------------------------------

TEST(GridFile, ByteIdenticalRoundTrip) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  GridFile f{16, 8, 3, 2 * pi, 1.25, 0.1 + 0.2, {}};
  for (std::size_t k = 0; k < 16 * 8 * 3; ++k) f.data.push_back(u(rng));
  f.data[5] = -0.0;
  f.data[7] = std::numeric_limits<double>::denorm_min();
  const fs::path d = scratch("roundtrip");
  write_gridfile((d / "a.mfs").string(), f);
  const GridFile g = read_gridfile((d / "a.mfs").string());
  write_gridfile((d / "b.mfs").string(), g);
  EXPECT_EQ(slurp(d / "a.mfs"), slurp(d / "b.mfs"));
  EXPECT_EQ(g.t, f.t);
  EXPECT_EQ(g.lx, f.lx);
  for (std::size_t k = 0; k < f.data.size(); ++k)
    EXPECT_EQ(std::bit_cast<std::uint64_t>(g.data[k]), std::bit_cast<std::uint64_t>(f.data[k]));
}

TEST(GridFile, LayoutIsHeaderThenLittleEndianBody) {
  GridFile f{8, 1, 2, 1.0, 1.0, 0.0, std::vector<double>(16, 0.0)};
  f.data[0] = 1.0;
  const std::string b = serialize(f);
  const auto nl = b.find('\n');
  EXPECT_EQ(b.substr(0, nl), "MFSOL1 8 1 1 1 2 f64le 0");
  EXPECT_EQ(b.size(), nl + 1 + 16 * 8);
  // 1.0 = 0x3FF0000000000000, least significant byte first
  EXPECT_EQ(static_cast<unsigned char>(b[nl + 1 + 7]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(b[nl + 1 + 6]), 0xF0);
  EXPECT_EQ(static_cast<unsigned char>(b[nl + 1]), 0x00);
}

TEST(GridFile, LengthMustMatchHeader) {
  GridFile f{8, 1, 1, 1.0, 1.0, 0.0, std::vector<double>(8, 2.0)};
  std::string b = serialize(f);
  EXPECT_THROW(deserialize(b + "x"), Error);
  EXPECT_THROW(deserialize(b.substr(0, b.size() - 1)), Error);
  EXPECT_THROW(deserialize("MFSOL2" + b.substr(6)), Error);
  EXPECT_NO_THROW(deserialize(b));
}

TEST(GridFile, FieldAdaptersRoundTrip) {
  const Grid2 g = Grid2::periodic(8, 8, 1.0, 2.0);
  const Vec3Field S = presets::circle(g);
  const Vec3Field back = vec3_from(deserialize(serialize(to_gridfile(S, 0.5))));
  EXPECT_EQ(max_abs(back[0] - S[0]) + max_abs(back[1] - S[1]) + max_abs(back[2] - S[2]), 0.0);
  const CField q = presets::plane_wave(g, cd(0.3, 0.1), 2.0);
  EXPECT_EQ(max_abs(wave_from(deserialize(serialize(to_gridfile(std::vector<CField>{q})))) - q), 0.0);
}

// Config ---------------------------------------------------------------------------

TEST(Config, ParsesSections) {
  std::istringstream in(
      "[system]\nid = ishimori\n[grid]\nnx = 64\nny = 32\nlx = 10\n[time]\ndt = 2e-3\nt_end = 0.1\nscheme = fd4\n"
      "[model]\nalpha_r = 0\nalpha_i = 1\n[initial]\npreset = instanton\nlambda = 1.5\n");
  const RunConfig c = parse_run_config(in);
  EXPECT_EQ(c.system, "ishimori");
  EXPECT_EQ(c.nx, 64u);
  EXPECT_EQ(c.ny, 32u);
  EXPECT_EQ(c.lx, 10.0);
  EXPECT_EQ(c.evo.dt, 2e-3);
  EXPECT_EQ(c.evo.scheme, DiffScheme::fd4);
  EXPECT_EQ(c.alpha(), cd(0, 1));
  EXPECT_EQ(c.lambda, 1.5);
  EXPECT_EQ(c.evo.steps(), 50u);
}

TEST(Config, Rejections) {
  const char* bad[] = {
      "[system]\nid = foo\n",
      "[system]\nid = lle\n[grid]\nnx = abc\n",
      "[system]\nid = lle\n[grid]\nnz = 3\n",
      "[system]\nid = lle\n[extra]\nx = 1\n",
      "[system]\nid = ishimori\n[grid]\nny = 1\n",
      "[system]\nid = nlse\n[initial]\npreset = circle\n",
      "[system]\nid = lle\n[time]\ndt = -1\n",
      "[system]\nid = lle\n[initial]\npreset = file\n",
      "[system]\nid = lle\n[model]\nbeta = 2\n",
      "[system\nid = lle\n",
  };
  for (const char* s : bad) {
    std::istringstream in(s);
    try {
      parse_run_config(in);
      ADD_FAILURE() << s;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config) << s;
    }
  }
}

// simulate -------------------------------------------------------------------------

TEST(Simulate, LleCircleKeepsUnitNorm) {
  const fs::path d = scratch("lle");
  const fs::path cfg = write_text(d / "run.ini", lle_config(d / "out"));
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate(cfg.string(), out, err), cli::Exit::ok) << err.str();
  auto kv = parse_summary(out.str());
  EXPECT_EQ(kv["status"], "ok");
  EXPECT_LT(std::stod(kv["final.norm_defect"]), 1e-8);
  EXPECT_TRUE(fs::exists(d / "out" / "ckpt_000000.mfs"));
  EXPECT_TRUE(fs::exists(d / "out" / "ckpt_001000.mfs"));
  EXPECT_EQ(slurp(d / "out" / "summary.txt"), out.str());
  EXPECT_NEAR(read_gridfile((d / "out" / "ckpt_001000.mfs").string()).t, 0.1, 1e-12);
}

TEST(Simulate, DeterministicOutput) {
  const fs::path d = scratch("det");
  const fs::path c1 = write_text(d / "a.ini", lle_config(d / "a", "dt = 1e-4\nt_end = 0.005\n", "modulated_circle"));
  const fs::path c2 = write_text(d / "b.ini", lle_config(d / "b", "dt = 1e-4\nt_end = 0.005\n", "modulated_circle"));
  std::ostringstream o, e;
  ASSERT_EQ(cli::cmd_simulate(c1.string(), o, e), 0);
  ASSERT_EQ(cli::cmd_simulate(c2.string(), o, e), 0);
  EXPECT_EQ(slurp(d / "a" / "ckpt_000050.mfs"), slurp(d / "b" / "ckpt_000050.mfs"));
}

TEST(Simulate, UnknownSystemIsUsageError) {
  const fs::path d = scratch("unknown");
  const fs::path cfg = write_text(d / "run.ini", "[system]\nid = kdv\n");
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_simulate(cfg.string(), out, err), cli::Exit::usage);
  EXPECT_EQ(cli::cmd_simulate((d / "missing.ini").string(), out, err), cli::Exit::usage);
}

TEST(Simulate, UnstableStepIsNumericFailure) {
  const fs::path d = scratch("cfl");
  const fs::path cfg = write_text(d / "run.ini", lle_config(d / "out", "dt = 0.1\nt_end = 5\n", "modulated_circle"));
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_simulate(cfg.string(), out, err), cli::Exit::numeric);
  auto kv = parse_summary(out.str());
  EXPECT_EQ(kv["status"], "blow_up");
  const GridFile last = read_gridfile((d / "out" / "last_good.mfs").string());
  for (double v : last.data) EXPECT_TRUE(std::isfinite(v));
}

TEST(Simulate, NlsePlaneWaveKeepsMass) {
  const fs::path d = scratch("nlse");
  const fs::path cfg = write_text(
      d / "run.ini", "[system]\nid = nlse\n[grid]\nnx = 64\nny = 1\n[time]\ndt = 1e-3\nt_end = 0.1\n"
                     "[initial]\npreset = plane_wave\namp = 0.7\np = 2\n[output]\ndir = " + (d / "out").string() + "\n");
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_simulate(cfg.string(), out, err), 0) << err.str();
  EXPECT_LT(std::stod(parse_summary(out.str())["mass_drift"]), 1e-12);
  // |q| of the evolved plane wave stays the amplitude
  std::ostringstream col;
  ASSERT_EQ(cli::cmd_plotdata((d / "out" / "ckpt_000100.mfs").string(), "absq", col, err), 0);
  std::istringstream is(col.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "x absq");
  double x, a;
  int rows = 0;
  while (is >> x >> a) {
    EXPECT_NEAR(a, 0.7, 1e-12);
    ++rows;
  }
  EXPECT_EQ(rows, 64);
}

TEST(Simulate, FileInitialCondition) {
  const fs::path d = scratch("file");
  const Grid2 g = Grid2::line(64, 2 * pi);
  write_gridfile((d / "init.mfs").string(), to_gridfile(presets::modulated_circle(g, 0.2)));
  const fs::path cfg = write_text(d / "run.ini", "[system]\nid = lle\n[grid]\nnx = 64\nny = 1\n[time]\ndt = 1e-3\n"
                                                 "t_end = 0.01\n[initial]\npreset = file\npath = " +
                                                     (d / "init.mfs").string() + "\n[output]\ndir = " +
                                                     (d / "out").string() + "\n");
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_simulate(cfg.string(), out, err), 0) << err.str();
  // grid mismatch with the file is a usage error
  const fs::path bad = write_text(d / "bad.ini", "[system]\nid = lle\n[grid]\nnx = 32\nny = 1\n[initial]\n"
                                                 "preset = file\npath = " + (d / "init.mfs").string() + "\n");
  EXPECT_EQ(cli::cmd_simulate(bad.string(), out, err), cli::Exit::usage);
}

// verify ---------------------------------------------------------------------------

TEST(Verify, ChargesOfConstantField) {
  const fs::path d = scratch("charges");
  write_gridfile((d / "c.mfs").string(), to_gridfile(presets::constant_spin(Grid2::periodic(16, 16, 1.0, 1.0))));
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_verify("charges", {(d / "c.mfs").string()}, std::nullopt, out, err), 0) << out.str();
  EXPECT_NE(out.str().find("Q1 = 0\n"), std::string::npos);
  EXPECT_NE(out.str().find("Q2 = 0\n"), std::string::npos);
  EXPECT_NE(out.str().find("Q3 = 0\n"), std::string::npos);
}

TEST(Verify, ChargesOfInstanton) {
  const Grid2 g = Grid2::periodic(128, 128, 16.0, 16.0);
  const auto r = verify_charges(to_gridfile(presets::instanton(g, 1.0, 4.0)));
  EXPECT_TRUE(r.pass());
  EXPECT_NEAR(std::abs(topological_charge(presets::instanton(g, 1.0, 4.0))), 1.0, 1e-6);
}

TEST(Verify, MissingInputsAreUsageErrors) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_verify("charges", {}, std::nullopt, out, err), cli::Exit::usage);
  EXPECT_EQ(cli::cmd_verify("charges", {"/nonexistent.mfs"}, std::nullopt, out, err), cli::Exit::usage);
  EXPECT_EQ(cli::cmd_verify("l-equivalence", {"one.mfs"}, std::nullopt, out, err), cli::Exit::usage);
  EXPECT_EQ(cli::cmd_verify("bogus", {}, std::nullopt, out, err), cli::Exit::usage);
}

TEST(Verify, SusyReportWhitelistsKnownDeviations) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_verify("susy", {}, std::nullopt, out, err), 0);
  const std::string s = out.str();
  EXPECT_NE(s.find("[l1,l3] = -2l3   listed 2l3   MISMATCH (known sign)"), std::string::npos) << s;
  EXPECT_NE(s.find("result PASS"), std::string::npos);
}

TEST(Verify, EveryToleranceIsPrinted) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_verify("zero-curvature", {}, std::nullopt, out, err), 0);
  std::istringstream is(out.str());
  std::string line;
  int checks = 0;
  while (std::getline(is, line))
    if (line.rfind("check ", 0) == 0) {
      EXPECT_NE(line.find(" value="), std::string::npos);
      EXPECT_NE(line.find(" tol="), std::string::npos);
      ++checks;
    }
  EXPECT_GE(checks, 2);
}

TEST(Verify, TightToleranceFails) {
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_verify("bilinear", {}, 1e-30, out, err), cli::Exit::numeric);
  EXPECT_NE(out.str().find("result FAIL"), std::string::npos);
}

TEST(Verify, LEquivalenceFromCheckpoints) {
  const fs::path d = scratch("leq");
  auto run = lle_nlse_preset(128, 0.02, 1e-4, 4);
  std::vector<std::string> spins, waves;
  for (std::size_t i = 0; i < run.spins.size(); ++i) {
    spins.push_back((d / ("s" + std::to_string(i) + ".mfs")).string());
    waves.push_back((d / ("w" + std::to_string(i) + ".mfs")).string());
    write_gridfile(spins.back(), to_gridfile(run.spins[i], run.times[i]));
    write_gridfile(waves.back(), to_gridfile(std::vector<CField>{run.waves[i]}, run.times[i]));
  }
  std::vector<std::string> inputs = spins;
  inputs.insert(inputs.end(), waves.begin(), waves.end());
  std::ostringstream out, err;
  EXPECT_EQ(cli::cmd_verify("l-equivalence", inputs, std::nullopt, out, err), 0) << out.str() << err.str();
  // swapped order pairs wave files with spin files
  std::vector<std::string> swapped = waves;
  swapped.insert(swapped.end(), spins.begin(), spins.end());
  EXPECT_EQ(cli::cmd_verify("l-equivalence", swapped, std::nullopt, out, err), cli::Exit::usage);
}

// plotdata -------------------------------------------------------------------------

TEST(PlotData, ConstantSpinColumn) {
  const fs::path d = scratch("plot");
  write_gridfile((d / "c.mfs").string(), to_gridfile(presets::constant_spin(Grid2::periodic(8, 8, 1.0, 1.0))));
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_plotdata((d / "c.mfs").string(), "S3", out, err), 0);
  std::istringstream is(out.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "x y S3");
  double x, y, s;
  int rows = 0;
  while (is >> x >> y >> s) {
    EXPECT_EQ(s, 1.0);
    ++rows;
  }
  EXPECT_EQ(rows, 64);
  EXPECT_EQ(cli::cmd_plotdata((d / "c.mfs").string(), "nonsense", out, err), cli::Exit::usage);
  EXPECT_EQ(cli::cmd_plotdata((d / "c.mfs").string(), "absq", out, err), cli::Exit::usage);
}

TEST(PlotData, InstantonChargeDensityIntegratesToOne) {
  const fs::path d = scratch("plotq");
  const Grid2 g = Grid2::periodic(128, 128, 16.0, 16.0);
  write_gridfile((d / "i.mfs").string(), to_gridfile(presets::instanton(g, 1.0, 4.0)));
  std::ostringstream out, err;
  ASSERT_EQ(cli::cmd_plotdata((d / "i.mfs").string(), "charge", out, err), 0);
  std::istringstream is(out.str());
  std::string header;
  std::getline(is, header);
  double x, y, q, sum = 0;
  while (is >> x >> y >> q) sum += q;
  EXPECT_NEAR(std::abs(sum * g.cell_area()), 1.0, 1e-6);  // density carries the 1/4π
}
