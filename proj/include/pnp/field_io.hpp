#pragma once

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "pnp/grid.hpp"

namespace pnp {

namespace detail {

// 17 significant digits: enough for an exact double round trip.
inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool has_space(std::string_view s) {
  for (char c : s)
    if (std::isspace(static_cast<unsigned char>(c))) return true;
  return false;
}

}  // namespace detail

/// Plain-text snapshot, format "pnp-field v1": one header line followed by
/// the values in storage order (x fastest), one grid row per line.
inline void write_field(std::ostream& out, const CellField& f,
                        std::string_view name, double time) {
  if (name.empty() || detail::has_space(name))
    throw Error("field name must be non-empty without whitespace");
  const Grid& g = f.grid();
  out << "pnp-field v1 dim=" << g.dim << " N=" << g.N
      << " L=" << detail::g17(g.L) << " name=" << name
      << " time=" << detail::g17(time) << "\n";
  const int N = g.N;
  const std::size_t rows = f.size() / static_cast<std::size_t>(N);
  std::size_t c = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    for (int i = 0; i < N; ++i, ++c) {
      if (i) out << ' ';
      out << detail::g17(f[c]);
    }
    out << '\n';
  }
  if (!out) throw Error("field write failed");
}

inline void write_field(const std::filesystem::path& path, const CellField& f,
                        std::string_view name, double time) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_field(out, f, name, time);
  out.flush();
  if (!out) throw Error("field write failed: " + path.string());
}

struct FieldFile {
  CellField field;
  std::string name;
  double time;
};

inline FieldFile read_field(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) throw Error("empty field file");
  std::istringstream hs(header);
  std::string magic, version;
  hs >> magic >> version;
  if (magic != "pnp-field" || version != "v1")
    throw Error("not a pnp-field v1 file");

  auto expect = [&](const char* key) {
    std::string tok;
    if (!(hs >> tok)) throw Error(std::string("field header missing ") + key);
    const std::string prefix = std::string(key) + "=";
    if (tok.rfind(prefix, 0) != 0)
      throw Error("field header: expected " + prefix + "..., got " + tok);
    return tok.substr(prefix.size());
  };

  int dim = 0, N = 0;
  double L = 0.0, time = 0.0;
  try {
    dim = std::stoi(expect("dim"));
    N = std::stoi(expect("N"));
    L = std::stod(expect("L"));
  } catch (const std::exception&) {
    throw Error("field header: malformed dim/N/L");
  }
  std::string name = expect("name");
  try {
    time = std::stod(expect("time"));
  } catch (const std::exception&) {
    throw Error("field header: malformed time");
  }

  Grid g(dim, N, L);
  CellField f(g);
  for (std::size_t c = 0; c < f.size(); ++c) {
    if (!(in >> f[c]))
      throw Error("field file truncated at value " + std::to_string(c));
    if (!std::isfinite(f[c]))
      throw Error("field file has non-finite value at " + std::to_string(c));
  }
  return {std::move(f), std::move(name), time};
}

inline FieldFile read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_field(in);
}

}  // namespace pnp
