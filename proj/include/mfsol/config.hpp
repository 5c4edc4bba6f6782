#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <set>
#include <string>

#include "solvers.hpp"

namespace mfsol {

/// Parsed `simulate` configuration. File layout (INI style):
///
///   [system]  id = lle | nlse | ishimori | ds | mix | zakharov | m1
///   [grid]    nx, ny (1 for a line), lx, ly
///   [time]    dt, t_end, scheme = spectral | fd4, renormalize, lambda_reg
///   [model]   beta, alpha_r, alpha_i, a, b, l
///   [initial] preset = circle | modulated_circle | instanton | constant | plane_wave | file,
///             with amp, p, r, eps, lambda, taper, winding, path as the preset needs
///   [output]  dir, every (steps between checkpoints; 0 = final only)
struct RunConfig {
  std::string system;
  std::size_t nx = 128, ny = 1;
  double lx = 2 * pi, ly = 2 * pi;
  EvolutionConfig evo;
  int beta = 1;
  double alpha_r = 0.0, alpha_i = 1.0, a = -0.5, b = -0.5, l = -0.5;
  std::string preset = "circle";
  double amp = 1.0, p = 1.0, r = 0.0, eps = 0.3, lambda = 1.0, taper = 0.0;
  int winding = 1;
  std::string path;
  std::string out_dir = ".";
  std::size_t every = 0;

  static const std::set<std::string>& systems() {
    static const std::set<std::string> s{"lle", "nlse", "ishimori", "ds", "mix", "zakharov", "m1"};
    return s;
  }
  bool spin_system() const { return system == "lle" || system == "ishimori" || system == "mix" || system == "m1"; }
  cd alpha() const { return {alpha_r, alpha_i}; }
  MIXParams mix() const { return {a, b, alpha(), l, beta}; }
  Grid2 grid() const { return ny == 1 ? Grid2::line(nx, lx) : Grid2::periodic(nx, ny, lx, ly); }
};

namespace detail {

template <class T>
T cfg_get(const boost::property_tree::ptree& pt, const std::string& key, T fallback) {
  if (!pt.get_child_optional(key)) return fallback;
  try {
    return pt.get<T>(key);
  } catch (const boost::property_tree::ptree_bad_data&) {
    throw Error(ErrorKind::config, "bad value for " + key);
  }
}

inline bool cfg_bool(const boost::property_tree::ptree& pt, const std::string& key, bool fallback) {
  const std::string v = cfg_get<std::string>(pt, key, fallback ? "true" : "false");
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::config, "bad boolean for " + key);
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::config, e.message());
  }
  static const std::map<std::string, std::set<std::string>> known = {
      {"system", {"id"}},
      {"grid", {"nx", "ny", "lx", "ly"}},
      {"time", {"dt", "t_end", "scheme", "renormalize", "lambda_reg"}},
      {"model", {"beta", "alpha_r", "alpha_i", "a", "b", "l"}},
      {"initial", {"preset", "amp", "p", "r", "eps", "lambda", "taper", "winding", "path"}},
      {"output", {"dir", "every"}}};
  for (const auto& [sec, node] : pt) {
    auto it = known.find(sec);
    require(it != known.end(), ErrorKind::config, "unknown section [" + sec + "]");
    require(node.data().empty(), ErrorKind::config, "key outside a section: " + sec);
    for (const auto& [key, v] : node)
      require(it->second.count(key) > 0, ErrorKind::config, "unknown key " + sec + "." + key);
  }
  using detail::cfg_get;
  RunConfig c;
  c.system = cfg_get<std::string>(pt, "system.id", "");
  require(RunConfig::systems().count(c.system) > 0, ErrorKind::config, "unknown system id '" + c.system + "'");
  c.nx = cfg_get(pt, "grid.nx", c.nx);
  c.ny = cfg_get(pt, "grid.ny", c.ny);
  c.lx = cfg_get(pt, "grid.lx", c.lx);
  c.ly = cfg_get(pt, "grid.ly", c.ly);
  c.evo.dt = cfg_get(pt, "time.dt", c.evo.dt);
  c.evo.t_end = cfg_get(pt, "time.t_end", c.evo.t_end);
  c.evo.lambda_reg = cfg_get(pt, "time.lambda_reg", c.evo.lambda_reg);
  c.evo.renormalize_spin = detail::cfg_bool(pt, "time.renormalize", false);
  const std::string sch = cfg_get<std::string>(pt, "time.scheme", "spectral");
  require(sch == "spectral" || sch == "fd4", ErrorKind::config, "scheme must be spectral or fd4");
  c.evo.scheme = sch == "fd4" ? DiffScheme::fd4 : DiffScheme::spectral;
  c.beta = cfg_get(pt, "model.beta", c.beta);
  c.alpha_r = cfg_get(pt, "model.alpha_r", c.alpha_r);
  c.alpha_i = cfg_get(pt, "model.alpha_i", c.alpha_i);
  c.a = cfg_get(pt, "model.a", c.a);
  c.b = cfg_get(pt, "model.b", c.b);
  c.l = cfg_get(pt, "model.l", c.l);
  c.preset = cfg_get<std::string>(pt, "initial.preset", c.preset);
  c.amp = cfg_get(pt, "initial.amp", c.amp);
  c.p = cfg_get(pt, "initial.p", c.p);
  c.r = cfg_get(pt, "initial.r", c.r);
  c.eps = cfg_get(pt, "initial.eps", c.eps);
  c.lambda = cfg_get(pt, "initial.lambda", c.lambda);
  c.taper = cfg_get(pt, "initial.taper", c.taper);
  c.winding = cfg_get(pt, "initial.winding", c.winding);
  c.path = cfg_get<std::string>(pt, "initial.path", "");
  c.out_dir = cfg_get<std::string>(pt, "output.dir", c.out_dir);
  c.every = cfg_get(pt, "output.every", c.every);

  require(c.beta == 1 || c.beta == -1, ErrorKind::config, "beta must be +1 or -1");
  require(c.nx >= 8 && (c.ny == 1 || c.ny >= 8), ErrorKind::config, "grid too small");
  require(c.lx > 0 && c.ly > 0, ErrorKind::config, "grid lengths must be positive");
  const bool two_d = c.system != "lle" && c.system != "nlse";
  require(!two_d || c.ny > 1, ErrorKind::config, c.system + " needs a 2D grid (ny > 1)");
  static const std::set<std::string> spin_presets{"circle", "modulated_circle", "instanton", "constant", "file"};
  static const std::set<std::string> wave_presets{"plane_wave", "file"};
  require((c.spin_system() ? spin_presets : wave_presets).count(c.preset) > 0, ErrorKind::config,
          "preset '" + c.preset + "' does not apply to " + c.system);
  require(c.preset != "file" || !c.path.empty(), ErrorKind::config, "preset file needs initial.path");
  try {
    c.evo.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), ErrorKind::config, "cannot open config " + path);
  return parse_run_config(is);
}

}  // namespace mfsol
