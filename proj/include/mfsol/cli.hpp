#pragma once

#include <filesystem>
#include <optional>

#include "config.hpp"
#include "verify.hpp"

namespace mfsol::cli {

/// Stable exit codes.
enum Exit : int { ok = 0, usage = 2, numeric = 3 };

namespace detail {

inline Vec3Field initial_spin(const RunConfig& c, const Grid2& g) {
  if (c.preset == "circle") return presets::circle(g, c.winding);
  if (c.preset == "modulated_circle") return presets::modulated_circle(g, c.eps);
  if (c.preset == "instanton") return presets::instanton(g, c.lambda, c.taper);
  if (c.preset == "constant") return presets::constant_spin(g);
  const GridFile f = read_gridfile(c.path);
  require(f.ncomp == 3, ErrorKind::config, "initial file is not a spin field");
  require(f.nx == g.nx && f.ny == g.ny && f.lx == g.lx && (g.is_line() || f.ly == g.ly), ErrorKind::config,
          "initial file grid differs from [grid]");
  return vec3_from(f);
}

inline WaveState initial_wave(const RunConfig& c, const Grid2& g) {
  WaveState w;
  w.conjugate_pair = c.system != "nlse";
  if (c.preset == "plane_wave") {
    w.q = presets::plane_wave(g, c.amp, c.p, c.r);
  } else {
    const GridFile f = read_gridfile(c.path);
    require(f.ncomp == 2 || f.ncomp == 4, ErrorKind::config, "initial file is not a wave field");
    require(f.nx == g.nx && f.ny == g.ny && f.lx == g.lx && (g.is_line() || f.ly == g.ly), ErrorKind::config,
            "initial file grid differs from [grid]");
    w.q = wave_from(f, 0);
    if (f.ncomp == 4) {
      w.p = wave_from(f, 1);
      w.conjugate_pair = false;
    }
  }
  if (w.p.size() == 0) w.p = conj(w.q);
  return w;
}

inline double mass(const CField& q) { return integrate(map(q, [](cd z) { return std::norm(z); })); }

struct Summary {
  std::vector<std::pair<std::string, std::string>> kv;
  template <class T>
  void add(const std::string& k, const T& v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    kv.emplace_back(k, os.str());
  }
  void write(std::ostream& os) const {
    os << "[summary]\n";
    for (const auto& [k, v] : kv) os << k << " = " << v << "\n";
  }
};

inline std::string ckpt_name(const std::filesystem::path& dir, std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt_%06zu.mfs", step);
  return (dir / buf).string();
}

inline GridFile snapshot(const SpinState& s) { return to_gridfile(s.S, s.t); }
inline GridFile snapshot(const WaveState& w, bool with_p) {
  return with_p ? to_gridfile(std::vector<CField>{w.q, w.p}, w.t) : to_gridfile(std::vector<CField>{w.q}, w.t);
}

template <class State, class Step, class Snap, class Diag>
int run(const RunConfig& c, State s, Step&& step, Snap&& snap, Diag&& diag, std::ostream& out) {
  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  Summary sum;
  sum.add("system", c.system);
  sum.add("grid", std::to_string(c.nx) + "x" + std::to_string(c.ny));
  sum.add("dt", c.evo.dt);
  sum.add("t_end", c.evo.t_end);
  diag(sum, s, "initial");
  const std::size_t steps = c.evo.steps();
  write_gridfile(ckpt_name(dir, 0), snap(s));
  std::size_t written = 1;
  int code = Exit::ok;
  std::size_t i = 0;
  try {
    for (i = 1; i <= steps; ++i) {
      State next = step(s);
      s = std::move(next);
      if ((c.every > 0 && i % c.every == 0) || i == steps) {
        write_gridfile(ckpt_name(dir, i), snap(s));
        ++written;
      }
    }
    sum.add("status", "ok");
    sum.add("steps", steps);
  } catch (const Error& e) {
    write_gridfile((dir / "last_good.mfs").string(), snap(s));
    sum.add("status", e.kind() == ErrorKind::blow_up ? "blow_up" : "numeric_failure");
    sum.add("error", e.what());
    sum.add("steps", i - 1);
    sum.add("last_good", (dir / "last_good.mfs").string());
    code = Exit::numeric;
  }
  sum.add("t_final", s.t);
  sum.add("checkpoints", written);
  diag(sum, s, "final");
  sum.write(out);
  std::ofstream fs(dir / "summary.txt");
  sum.write(fs);
  return code;
}

}  // namespace detail

/// Runs the configured system, writing checkpoints and a summary into [output] dir.
inline int cmd_simulate(const std::string& config_path, std::ostream& out, std::ostream& err) {
  RunConfig c;
  try {
    c = load_run_config(config_path);
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return Exit::usage;
  }
  Grid2 g;
  try {
    g = c.grid();
  } catch (const Error& e) {
    err << "config error: " << e.what() << "\n";
    return Exit::usage;
  }
  const EvolutionConfig& evo = c.evo;
  try {
    if (c.spin_system()) {
      SpinState s{detail::initial_spin(c, g), RField(g), 0.0};
      auto diag = [&](detail::Summary& sum, const SpinState& st, const std::string& tag) {
        sum.add(tag + ".norm_defect", unit_norm_defect(st.S));
        if (!g.is_line()) sum.add(tag + ".Q1", topological_charge(st.S));
        if (tag == "final" && st.regularized) sum.add("regularized_modes", st.regularized);
        if (tag == "final" && st.leakage > 0) sum.add("imaginary_leakage", st.leakage);
      };
      auto snap = [](const SpinState& st) { return detail::snapshot(st); };
      std::function<SpinState(const SpinState&)> step;
      if (c.system == "lle") step = [&](const SpinState& x) { return lle_step(x, evo); };
      else if (c.system == "ishimori") step = [&](const SpinState& x) { return ishimori_step(x, c.alpha(), evo); };
      else if (c.system == "mix") step = [&](const SpinState& x) { return mix_step(x, c.mix(), evo); };
      else step = [&](const SpinState& x) { return mI_step(x, evo); };
      return detail::run(c, s, step, snap, diag, out);
    }
    WaveState w = detail::initial_wave(c, g);
    const bool with_p = c.system != "nlse";
    const double m0 = detail::mass(w.q);
    auto diag = [&](detail::Summary& sum, const WaveState& st, const std::string& tag) {
      const double m = detail::mass(st.q);
      sum.add(tag + ".mass", m);
      if (tag == "final") sum.add("mass_drift", m0 > 0 ? std::abs(m - m0) / m0 : std::abs(m - m0));
    };
    auto snap = [&](const WaveState& st) { return detail::snapshot(st, with_p); };
    std::function<WaveState(const WaveState&)> step;
    if (c.system == "nlse")
      step = [&](const WaveState& x) {
        WaveState r = x;
        r.q = nlse_step(x.q, c.beta, evo);
        r.p = conj(r.q);
        r.t = x.t + evo.dt;
        check_blow_up(r);
        return r;
      };
    else if (c.system == "ds") step = [&](const WaveState& x) { return ds_step(x, c.alpha(), evo); };
    else step = [&](const WaveState& x) { return zakharov_step(x, c.mix(), evo); };
    return detail::run(c, w, step, snap, diag, out);
  } catch (const Error& e) {
    const bool input = e.kind() == ErrorKind::config || e.kind() == ErrorKind::io;
    err << (input ? "input error: " : "numeric error: ") << e.what() << "\n";
    return input ? Exit::usage : Exit::numeric;
  }
}

inline const std::vector<std::string>& verify_kinds() {
  static const std::vector<std::string> k{"l-equivalence", "zero-curvature", "charges", "cmp", "bilinear", "susy"};
  return k;
}

/// Runs one verification pipeline; exit 0 iff every check meets its tolerance.
inline int cmd_verify(const std::string& kind, const std::vector<std::string>& inputs, std::optional<double> tol,
                      std::ostream& out, std::ostream& err) {
  if (std::find(verify_kinds().begin(), verify_kinds().end(), kind) == verify_kinds().end()) {
    err << "unknown verify kind '" << kind << "'\n";
    return Exit::usage;
  }
  VerifyReport rep;
  try {
    if (kind == "susy") {
      rep = verify_susy();
    } else if (kind == "bilinear") {
      rep = verify_bilinear(SolitonSetup(), tol.value_or(1e-9));
    } else if (kind == "cmp") {
      rep = verify_cmp(128, tol.value_or(1e-5));
    } else if (kind == "charges") {
      if (inputs.size() != 1) {
        err << "verify charges needs one spin or frame file\n";
        return Exit::usage;
      }
      rep = verify_charges(read_gridfile(inputs[0]), tol.value_or(1e-6));
    } else if (kind == "zero-curvature") {
      FrameField f;
      if (inputs.empty()) {
        f = smooth_frame(Grid2::periodic(64, 64, 2 * pi, 2 * pi));
      } else {
        const GridFile gf = read_gridfile(inputs[0]);
        require(gf.ncomp == 9, ErrorKind::io, "zero-curvature needs a frame file (9 components)");
        f = FrameField{vec3_from(gf, 0), vec3_from(gf, 3), vec3_from(gf, 6), 1, {}};
      }
      rep = verify_zero_curvature(f, tol.value_or(1e-6));
    } else {
      LleNlseRun run;
      if (inputs.empty()) {
        run = lle_nlse_preset();
      } else {
        if (inputs.size() % 2 != 0 || inputs.size() < 2) {
          err << "verify l-equivalence takes spin files followed by the same number of wave files\n";
          return Exit::usage;
        }
        const std::size_t n = inputs.size() / 2;
        for (std::size_t i = 0; i < n; ++i) {
          const GridFile s = read_gridfile(inputs[i]), w = read_gridfile(inputs[n + i]);
          require(s.ncomp == 3 && w.ncomp >= 2, ErrorKind::io, "expected spin files then wave files");
          require(s.t == w.t, ErrorKind::io, "snapshot times differ: " + inputs[i] + ", " + inputs[n + i]);
          run.spins.push_back(vec3_from(s));
          run.waves.push_back(wave_from(w));
          run.times.push_back(s.t);
        }
      }
      rep = verify_l_equivalence(run.spins, run.waves, run.times, 1, tol.value_or(1e-3));
    }
  } catch (const Error& e) {
    const bool input = e.kind() == ErrorKind::io || e.kind() == ErrorKind::config ||
                       e.kind() == ErrorKind::invalid_argument || e.kind() == ErrorKind::dimension_mismatch;
    err << (input ? "input error: " : "numeric error: ") << e.what() << "\n";
    return input ? Exit::usage : Exit::numeric;
  }
  print_report(out, rep);
  return rep.pass() ? Exit::ok : Exit::numeric;
}

inline const std::vector<std::string>& plot_columns() {
  static const std::vector<std::string> c{"S1", "S2", "S3", "absq", "charge", "norm_defect"};
  return c;
}

/// Writes x (and y) plus the requested column as whitespace-delimited text.
inline int cmd_plotdata(const std::string& ckpt, const std::string& what, std::ostream& out, std::ostream& err) {
  if (std::find(plot_columns().begin(), plot_columns().end(), what) == plot_columns().end()) {
    err << "unknown column '" << what << "'\n";
    return Exit::usage;
  }
  GridFile f;
  try {
    f = read_gridfile(ckpt);
  } catch (const Error& e) {
    err << "input error: " << e.what() << "\n";
    return Exit::usage;
  }
  const bool spin = f.ncomp == 3;
  const bool wave = f.ncomp == 2 || f.ncomp == 4;
  const bool needs_spin = what != "absq";
  if ((needs_spin && !spin) || (!needs_spin && !wave) || (what == "charge" && f.ny == 1)) {
    err << "column '" << what << "' does not apply to this checkpoint\n";
    return Exit::usage;
  }
  const Grid2 g = f.grid();
  RField col(g);
  if (spin) {
    const Vec3Field S = vec3_from(f);
    if (what == "S1") col = S[0];
    else if (what == "S2") col = S[1];
    else if (what == "S3") col = S[2];
    else if (what == "charge") col = (1.0 / (4 * pi)) * triple_product_density(S);
    else col = norm(S) - 1.0;
  } else {
    col = abs(wave_from(f));
  }
  out << (g.is_line() ? "x " : "x y ") << what << "\n";
  out << std::setprecision(17);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      out << g.x(i) << " ";
      if (!g.is_line()) out << g.y(j) << " ";
      out << col(i, j) << "\n";
    }
  return Exit::ok;
}

}  // namespace mfsol::cli
