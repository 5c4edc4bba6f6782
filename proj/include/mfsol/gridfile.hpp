#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "grid.hpp"

namespace mfsol {

/// Checkpoint layout: one text line
///   MFSOL1 <nx> <ny> <lx> <ly> <ncomp> f64le <t>\n
/// followed by nx·ny·ncomp little-endian doubles, row-major (x fastest) with
/// components interleaved per node. Spin fields store (S1, S2, S3); wave fields
/// store (Re q, Im q[, Re p, Im p]); frames store e1, e2, e3.
struct GridFile {
  std::size_t nx = 0, ny = 0, ncomp = 0;
  double lx = 0, ly = 0, t = 0;
  std::vector<double> data;

  double& at(std::size_t node, std::size_t c) { return data[node * ncomp + c]; }
  double at(std::size_t node, std::size_t c) const { return data[node * ncomp + c]; }
  Grid2 grid() const {
    Grid2 g{nx, ny, lx, ly, 0.0, 0.0, true, true};
    g.validate();
    return g;
  }
  std::string header() const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "MFSOL1 %zu %zu %.17g %.17g %zu f64le %.17g\n", nx, ny, lx, ly, ncomp, t);
    return buf;
  }
};

namespace detail {

inline std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  else return __builtin_bswap64(v);
}

inline GridFile gridfile_shell(const Grid2& g, std::size_t ncomp, double t) {
  require(g.x0 == 0.0 && g.y0 == 0.0, ErrorKind::io, "grid file stores grids with origin 0");
  GridFile f{g.nx, g.ny, ncomp, g.lx, g.ly, t, {}};
  f.data.assign(g.size() * ncomp, 0.0);
  return f;
}

}  // namespace detail

inline std::string serialize(const GridFile& f) {
  require(f.data.size() == f.nx * f.ny * f.ncomp, ErrorKind::io, "grid file body size mismatch");
  std::string out = f.header();
  const std::size_t h = out.size();
  out.resize(h + 8 * f.data.size());
  for (std::size_t k = 0; k < f.data.size(); ++k) {
    std::uint64_t v = detail::to_le(std::bit_cast<std::uint64_t>(f.data[k]));
    std::memcpy(out.data() + h + 8 * k, &v, 8);
  }
  return out;
}

inline GridFile deserialize(const std::string& bytes) {
  const auto nl = bytes.find('\n');
  require(nl != std::string::npos, ErrorKind::io, "grid file header missing");
  std::istringstream hs(bytes.substr(0, nl));
  std::string magic, dtype;
  GridFile f;
  hs >> magic >> f.nx >> f.ny >> f.lx >> f.ly >> f.ncomp >> dtype >> f.t;
  require(bool(hs) && magic == "MFSOL1", ErrorKind::io, "not an MFSOL1 grid file");
  require(dtype == "f64le", ErrorKind::io, "unsupported dtype " + dtype);
  require(f.nx > 0 && f.ny > 0 && f.ncomp > 0, ErrorKind::io, "empty grid in header");
  const std::size_t n = f.nx * f.ny * f.ncomp;
  require(bytes.size() == nl + 1 + 8 * n, ErrorKind::io, "grid file length does not match its header");
  f.data.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t v;
    std::memcpy(&v, bytes.data() + nl + 1 + 8 * k, 8);
    f.data[k] = std::bit_cast<double>(detail::to_le(v));
  }
  return f;
}

inline void write_gridfile(const std::string& path, const GridFile& f) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), ErrorKind::io, "cannot write " + path);
  const std::string b = serialize(f);
  os.write(b.data(), std::streamsize(b.size()));
  require(bool(os), ErrorKind::io, "write failed for " + path);
}

inline GridFile read_gridfile(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), ErrorKind::io, "cannot read " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return deserialize(ss.str());
}

// Field adapters ----------------------------------------------------------------

inline GridFile to_gridfile(const Vec3Field& S, double t = 0.0) {
  const Grid2& g = S[0].grid;
  GridFile f = detail::gridfile_shell(g, 3, t);
  for (std::size_t k = 0; k < g.size(); ++k)
    for (int c = 0; c < 3; ++c) f.at(k, c) = S[c][k];
  return f;
}

inline GridFile to_gridfile(const std::vector<CField>& waves, double t = 0.0) {
  require(!waves.empty(), ErrorKind::invalid_argument, "no fields to store");
  const Grid2& g = waves[0].grid;
  GridFile f = detail::gridfile_shell(g, 2 * waves.size(), t);
  for (std::size_t w = 0; w < waves.size(); ++w) {
    check_same(g, waves[w].grid);
    for (std::size_t k = 0; k < g.size(); ++k) {
      f.at(k, 2 * w) = waves[w][k].real();
      f.at(k, 2 * w + 1) = waves[w][k].imag();
    }
  }
  return f;
}

/// Three consecutive components starting at `first` as a vector field.
inline Vec3Field vec3_from(const GridFile& f, std::size_t first = 0) {
  require(first + 3 <= f.ncomp, ErrorKind::io, "grid file has too few components for a vector field");
  const Grid2 g = f.grid();
  Vec3Field v = vec3(g);
  for (std::size_t k = 0; k < g.size(); ++k)
    for (int c = 0; c < 3; ++c) v[c][k] = f.at(k, first + c);
  return v;
}

/// Complex field from components (2w, 2w+1).
inline CField wave_from(const GridFile& f, std::size_t w = 0) {
  require(2 * w + 2 <= f.ncomp, ErrorKind::io, "grid file has too few components for a wave field");
  const Grid2 g = f.grid();
  CField q(g);
  for (std::size_t k = 0; k < g.size(); ++k) q[k] = cd(f.at(k, 2 * w), f.at(k, 2 * w + 1));
  return q;
}

}  // namespace mfsol
