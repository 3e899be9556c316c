#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pnp/scheme.hpp"

namespace pnp {

enum class RunMode { Simulate, MmsConvergence, MmsSingle };

struct GaussianSpec {
  double amplitude;
  double cx, cy;
  double width;  // exponent coefficient: A * exp(-width * r^2)
};

struct FixedChargeSpec {
  enum class Kind { None, Gaussians, File };
  Kind kind = Kind::None;
  std::vector<GaussianSpec> gaussians;
  std::string path;
};

/// The four-Gaussian fixed charge of the screening experiment:
/// rho^f = e^{-100[(x+1/2)^2+(y+1/2)^2]} - e^{-100[(x+1/2)^2+(y-1/2)^2]}
///       - e^{-100[(x-1/2)^2+(y+1/2)^2]} + e^{-100[(x-1/2)^2+(y-1/2)^2]}
inline FixedChargeSpec four_gaussians() {
  FixedChargeSpec s;
  s.kind = FixedChargeSpec::Kind::Gaussians;
  s.gaussians = {{+1.0, -0.5, -0.5, 100.0},
                 {-1.0, -0.5, +0.5, 100.0},
                 {-1.0, +0.5, -0.5, 100.0},
                 {+1.0, +0.5, +0.5, 100.0}};
  return s;
}

struct RunConfig {
  RunMode mode = RunMode::Simulate;

  int dim = 2;
  std::vector<int> N_list = {128};
  double L = 1.0;

  double D = 1.0;
  FixedChargeSpec rho_f;

  double dt = 0.0;  // 0 means "not set"; mms modes default to h^2
  double T_final = 0.0;

  double omega_r = 0.2;
  double picard_tol = 1e-10;
  int picard_max = 200;
  double linear_tol = 1e-10;

  std::string output_dir = "out";
  int snapshot_stride = 0;  // 0: initial and final snapshots only
  int report_stride = 1;

  double initial_n = 0.1;
  double initial_p = 0.1;
  std::string initial_n_file;
  std::string initial_p_file;

  int N() const { return N_list.front(); }

  SchemeParams scheme_params() const {
    SchemeParams s;
    s.dt = dt;
    s.D = D;
    s.omega_r = omega_r;
    s.picard_tol = picard_tol;
    s.picard_max = picard_max;
    s.linear_tol = linear_tol;
    return s;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

inline double parse_double(const std::string& key, std::string_view v) {
  try {
    std::size_t pos = 0;
    const std::string s(v);
    const double x = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return x;
  } catch (const std::exception&) {
    throw ValidationError(key, "not a number: '" + std::string(v) + "'");
  }
}

inline int parse_int(const std::string& key, std::string_view v) {
  int x = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ValidationError(key, "not an integer: '" + std::string(v) + "'");
  return x;
}

inline std::vector<int> parse_int_list(const std::string& key,
                                       std::string_view v) {
  v = trim(v);
  if (v.empty()) throw ValidationError(key, "empty value");
  if (v.front() != '[') return {parse_int(key, v)};
  if (v.back() != ']') throw ValidationError(key, "missing ']'");
  v.remove_prefix(1);
  v.remove_suffix(1);
  std::vector<int> out;
  std::size_t start = 0;
  const std::string s(v);
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    std::string_view item =
        trim(std::string_view(s).substr(start, comma == std::string::npos
                                                   ? std::string::npos
                                                   : comma - start));
    if (!item.empty()) out.push_back(parse_int(key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw ValidationError(key, "empty list");
  return out;
}

inline FixedChargeSpec parse_fixed_charge(const std::string& key,
                                          std::string_view v) {
  v = trim(v);
  FixedChargeSpec s;
  if (v == "none") return s;
  if (v == "four-gaussians") return four_gaussians();
  if (v.rfind("file:", 0) == 0) {
    s.kind = FixedChargeSpec::Kind::File;
    s.path = std::string(trim(v.substr(5)));
    if (s.path.empty()) throw ValidationError(key, "empty file path");
    return s;
  }
  if (v.rfind("gaussians:", 0) == 0) {
    s.kind = FixedChargeSpec::Kind::Gaussians;
    std::string body(trim(v.substr(10)));
    std::istringstream in(body);
    std::string term;
    while (std::getline(in, term, ';')) {
      std::istringstream ts(term);
      std::string num;
      std::vector<double> vals;
      while (std::getline(ts, num, ','))
        vals.push_back(parse_double(key, trim(num)));
      if (vals.size() != 4)
        throw ValidationError(
            key, "each gaussian needs amplitude,cx,cy,width; got '" + term +
                     "'");
      if (!(vals[3] > 0.0)) throw ValidationError(key, "width must be > 0");
      s.gaussians.push_back({vals[0], vals[1], vals[2], vals[3]});
    }
    if (s.gaussians.empty()) throw ValidationError(key, "no gaussians given");
    return s;
  }
  throw ValidationError(key,
                        "expected none | four-gaussians | gaussians:... | "
                        "file:<path>");
}

}  // namespace detail

/// Flat key-value configuration: `section.key = value` lines, `#` comments,
/// unknown keys rejected. The optional `case = screening` preset fills the
/// fixed-charge screening experiment defaults; explicit keys override it
/// regardless of their position in the file.
inline RunConfig parse_config(std::string_view text) {
  struct Entry {
    int line;
    std::string key, value;
  };
  std::vector<Entry> entries;
  {
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t eol = text.find('\n', pos);
      std::string_view line = text.substr(
          pos, eol == std::string_view::npos ? std::string_view::npos
                                             : eol - pos);
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string_view::npos) line = line.substr(0, hash);
      line = detail::trim(line);
      if (!line.empty()) {
        std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
          throw ParseError(lineno, "expected key = value");
        std::string key(detail::trim(line.substr(0, eq)));
        std::string value(detail::trim(line.substr(eq + 1)));
        if (key.empty()) throw ParseError(lineno, "empty key");
        for (char c : key)
          if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' &&
              c != '_' && c != '-')
            throw ParseError(lineno, "bad character in key '" + key + "'");
        entries.push_back({lineno, std::move(key), std::move(value)});
      }
      if (eol == std::string_view::npos) break;
      pos = eol + 1;
    }
  }

  RunConfig cfg;
  bool mode_set = false, dt_set = false, T_set = false, N_set = false;

  // Preset first, then everything else in file order.
  for (const Entry& e : entries) {
    if (e.key == "case") {
      if (e.value == "screening") {
        cfg.mode = RunMode::Simulate;
        cfg.dim = 2;
        cfg.N_list = {128};
        cfg.L = 1.0;
        cfg.D = 1.0;
        cfg.rho_f = four_gaussians();
        cfg.dt = 1e-3;
        dt_set = true;
        cfg.T_final = 5.0;
        T_set = true;
        cfg.initial_n = 0.1;
        cfg.initial_p = 0.1;
      } else {
        throw ValidationError("case", "unknown builtin case '" + e.value +
                                          "' (known: screening)");
      }
    }
  }

  for (const Entry& e : entries) {
    const std::string& k = e.key;
    const std::string& v = e.value;
    if (k == "case") continue;  // handled above
    if (k == "mode") {
      if (v == "simulate")
        cfg.mode = RunMode::Simulate;
      else if (v == "mms-convergence")
        cfg.mode = RunMode::MmsConvergence;
      else if (v == "mms-single")
        cfg.mode = RunMode::MmsSingle;
      else
        throw ValidationError(
            k, "expected simulate | mms-convergence | mms-single");
      mode_set = true;
    } else if (k == "grid.dim") {
      cfg.dim = detail::parse_int(k, v);
    } else if (k == "grid.N") {
      cfg.N_list = detail::parse_int_list(k, v);
      N_set = true;
    } else if (k == "grid.L") {
      cfg.L = detail::parse_double(k, v);
    } else if (k == "physics.D") {
      cfg.D = detail::parse_double(k, v);
    } else if (k == "physics.rho_f") {
      cfg.rho_f = detail::parse_fixed_charge(k, v);
    } else if (k == "time.dt") {
      cfg.dt = detail::parse_double(k, v);
      dt_set = true;
    } else if (k == "time.T_final") {
      cfg.T_final = detail::parse_double(k, v);
      T_set = true;
    } else if (k == "scheme.omega_r") {
      cfg.omega_r = detail::parse_double(k, v);
    } else if (k == "scheme.picard_tol") {
      cfg.picard_tol = detail::parse_double(k, v);
    } else if (k == "scheme.picard_max") {
      cfg.picard_max = detail::parse_int(k, v);
    } else if (k == "scheme.linear_tol") {
      cfg.linear_tol = detail::parse_double(k, v);
    } else if (k == "io.output_dir") {
      cfg.output_dir = v;
    } else if (k == "io.snapshot_stride") {
      cfg.snapshot_stride = detail::parse_int(k, v);
    } else if (k == "io.report_stride") {
      cfg.report_stride = detail::parse_int(k, v);
    } else if (k == "initial.n") {
      cfg.initial_n = detail::parse_double(k, v);
    } else if (k == "initial.p") {
      cfg.initial_p = detail::parse_double(k, v);
    } else if (k == "initial.n_file") {
      cfg.initial_n_file = v;
    } else if (k == "initial.p_file") {
      cfg.initial_p_file = v;
    } else {
      throw ValidationError(k, "unknown key (line " + std::to_string(e.line) +
                                   ")");
    }
  }

  // Range validation. Everything a later stage would trip over is caught
  // here with the offending key.
  if (cfg.dim != 2 && cfg.dim != 3)
    throw ValidationError("grid.dim", "must be 2 or 3");
  if (!N_set && cfg.mode != RunMode::Simulate)
    throw ValidationError("grid.N", "required for mms modes");
  for (int n : cfg.N_list)
    if (n < 2) throw ValidationError("grid.N", "every N must be >= 2");
  if (cfg.N_list.size() > 1 && cfg.mode != RunMode::MmsConvergence)
    throw ValidationError("grid.N",
                          "a resolution list needs mode = mms-convergence");
  if (!(cfg.L > 0.0)) throw ValidationError("grid.L", "must be > 0");
  if (!(cfg.D > 0.0)) throw ValidationError("physics.D", "must be > 0");
  if (!(cfg.omega_r > 0.0 && cfg.omega_r < 1.0))
    throw ValidationError("scheme.omega_r", "must lie strictly in (0,1)");
  if (!(cfg.picard_tol > 0.0))
    throw ValidationError("scheme.picard_tol", "must be > 0");
  if (cfg.picard_max < 1)
    throw ValidationError("scheme.picard_max", "must be >= 1");
  if (!(cfg.linear_tol > 0.0))
    throw ValidationError("scheme.linear_tol", "must be > 0");
  if (cfg.snapshot_stride < 0)
    throw ValidationError("io.snapshot_stride", "must be >= 0");
  if (cfg.report_stride < 1)
    throw ValidationError("io.report_stride", "must be >= 1");
  if (cfg.mode == RunMode::Simulate) {
    if (!dt_set) throw ValidationError("time.dt", "required for simulate");
    if (!(cfg.dt > 0.0)) throw ValidationError("time.dt", "must be > 0");
    if (!T_set && cfg.T_final == 0.0) {
      // zero-step run: allowed, writes initial diagnostics only
    }
    if (cfg.T_final < 0.0)
      throw ValidationError("time.T_final", "must be >= 0");
    if (cfg.initial_n_file.empty() && !(cfg.initial_n > 0.0))
      throw ValidationError("initial.n", "must be > 0");
    if (cfg.initial_p_file.empty() && !(cfg.initial_p > 0.0))
      throw ValidationError("initial.p", "must be > 0");
  } else {
    if (cfg.dim != 2)
      throw ValidationError("grid.dim", "mms modes are 2D");
    if (cfg.L != 1.0)
      throw ValidationError("grid.L", "mms modes require L = 1");
    if (dt_set && !(cfg.dt > 0.0))
      throw ValidationError("time.dt", "must be > 0");
    if (!T_set) cfg.T_final = 0.1;
    if (!(cfg.T_final > 0.0))
      throw ValidationError("time.T_final", "must be > 0 for mms modes");
  }
  if (cfg.rho_f.kind != FixedChargeSpec::Kind::None && cfg.dim != 2)
    throw ValidationError("physics.rho_f", "fixed charge fields are 2D");
  if (cfg.dt > 0.0 && !std::isfinite(cfg.dt))
    throw ValidationError("time.dt", "must be finite");

  (void)mode_set;
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path.string(), "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace pnp
