#pragma once

// Flat key = value run configuration. One key per line, '#' starts a comment.
// Later assignments win, so --set overrides simply append.

#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nlqm/dynamics.hpp"
#include "nlqm/error.hpp"
#include "nlqm/integrate.hpp"
#include "nlqm/measure.hpp"
#include "nlqm/stability.hpp"

namespace nlqm {

enum class Command { Simulate, Scan, Table, Selftest };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Scan: return "scan";
    case Command::Table: return "table";
    case Command::Selftest: return "selftest";
  }
  return "?";
}

struct ScanPair {
  int q = 0;
  double height = 0.0;
  bool operator==(const ScanPair&) const = default;
};

struct RunConfig {
  Command command = Command::Simulate;
  ModelParams model;
  IntegratorConfig integ;
  RandomizationScheme scheme;
  std::size_t reps = 50;
  std::vector<ScanPair> scan_pairs;
  ScanOptions scan;
  unsigned jobs = 1;
  std::string out;

  void validate() const {
    model.validate();
    integ.validate();
    if (command == Command::Table) {
      scheme.validate();
      require(reps >= 1, ErrorKind::Config, "reps must be at least 1");
    }
    if (command == Command::Scan) {
      require(scan.w_step > 0, ErrorKind::Config, "w_step must be positive");
      require(scan.cut < 0, ErrorKind::Config, "det_cut must be negative");
      for (const auto& p : scan_pairs) {
        require(p.q >= 1 && p.q <= kMaxQubits, ErrorKind::Config, "scan q out of range");
        require(p.height >= 0, ErrorKind::Config, "scan height must be non-negative");
      }
    }
    require(jobs >= 1, ErrorKind::Config, "jobs must be at least 1");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(used == v.size() && !v.empty() && std::isfinite(out), ErrorKind::Config,
          key + ": expected a number, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long out = 0;
  const bool neg = !v.empty() && v.front() == '-';
  try {
    if (!neg) out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  require(!neg && used == v.size() && !v.empty(), ErrorKind::Config,
          key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// "5:1, 7:1, 9:10" -> pairs; empty string -> none.
inline std::vector<ScanPair> parse_pairs(const std::string& v) {
  std::vector<ScanPair> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    require(colon != std::string::npos, ErrorKind::Config, "scan_pairs: expected q:height, got '" + item + "'");
    const auto q = parse_uint("scan_pairs", trim(item.substr(0, colon)));
    out.push_back({static_cast<int>(q), parse_double("scan_pairs", trim(item.substr(colon + 1)))});
  }
  return out;
}

}  // namespace detail

inline void apply_setting(RunConfig& c, const std::string& key, const std::string& value) {
  using detail::parse_double, detail::parse_uint;
  const std::string& v = value;
  if (key == "q") {
    c.model.q = static_cast<int>(parse_uint(key, v));
  } else if (key == "height") {
    c.model.height = parse_double(key, v);
  } else if (key == "center") {
    c.model.center = parse_double(key, v);
  } else if (key == "w") {
    c.model.w = parse_double(key, v);
  } else if (key == "beta_ratio") {
    c.model.set_beta_ratio(parse_double(key, v));
  } else if (key == "born_probability") {
    c.model.set_born_probability(parse_double(key, v));
  } else if (key == "beta1") {
    c.model.beta1 = parse_double(key, v);
  } else if (key == "beta2") {
    c.model.beta2 = parse_double(key, v);
  } else if (key == "inv_mass") {
    c.model.inv_mass = parse_double(key, v);
  } else if (key == "alpha") {
    c.model.alpha = parse_double(key, v);
  } else if (key == "boundary") {
    if (v == "reflecting") c.model.boundary = Boundary::Reflecting;
    else if (v == "dirichlet") c.model.boundary = Boundary::Dirichlet;
    else throw Error(ErrorKind::Config, "boundary: expected reflecting|dirichlet, got '" + v + "'");
  } else if (key == "method") {
    if (v == "tao") c.integ.method = Method::TaoExplicit;
    else if (v == "ruth4") c.integ.method = Method::Ruth4Frozen;
    else throw Error(ErrorKind::Config, "method: expected tao|ruth4, got '" + v + "'");
  } else if (key == "steps") {
    c.integ.steps = parse_uint(key, v);
  } else if (key == "t_final") {
    c.integ.t_final = parse_double(key, v);
  } else if (key == "omega") {
    c.integ.omega = parse_double(key, v);
  } else if (key == "stride") {
    c.integ.stride = parse_uint(key, v);
  } else if (key == "scheme") {
    if (v == "unif") c.scheme.kind = SchemeKind::ComponentUniform;
    else if (v == "norm") c.scheme.kind = SchemeKind::ComponentNormal;
    else if (v == "unitary") c.scheme.kind = SchemeKind::Unitary;
    else throw Error(ErrorKind::Config, "scheme: expected unif|norm|unitary, got '" + v + "'");
  } else if (key == "sigma") {
    c.scheme.sigma = parse_double(key, v);
  } else if (key == "delta") {
    c.scheme.delta = parse_double(key, v);
  } else if (key == "unitary_steps") {
    c.scheme.unitary_steps = parse_uint(key, v);
  } else if (key == "reps") {
    c.reps = parse_uint(key, v);
  } else if (key == "seed") {
    c.scheme.seed = parse_uint(key, v);
  } else if (key == "scan_pairs") {
    c.scan_pairs = detail::parse_pairs(v);
  } else if (key == "w_start") {
    c.scan.w_start = parse_double(key, v);
  } else if (key == "w_step") {
    c.scan.w_step = parse_double(key, v);
  } else if (key == "w_max") {
    c.scan.w_max = parse_double(key, v);
  } else if (key == "det_cut") {
    c.scan.cut = parse_double(key, v);
  } else if (key == "jobs") {
    c.jobs = static_cast<unsigned>(parse_uint(key, v));
  } else if (key == "out") {
    c.out = v;
  } else {
    throw Error(ErrorKind::Config, "unknown key '" + key + "'");
  }
}

/// Accepts "key = value" or "key=value".
inline void apply_assignment(RunConfig& c, std::string_view line) {
  const auto eq = line.find('=');
  require(eq != std::string_view::npos, ErrorKind::Config, "expected key=value, got '" + std::string(line) + "'");
  const std::string key = detail::trim(line.substr(0, eq));
  require(!key.empty(), ErrorKind::Config, "empty key");
  apply_setting(c, key, detail::trim(line.substr(eq + 1)));
}

inline void apply_text(RunConfig& c, std::string_view text) {
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    try {
      apply_assignment(c, line);
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

inline void load_file(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  apply_text(c, ss.str());
}

/// Every result-affecting key at full precision; feeding it back reproduces the
/// config exactly. jobs and out are excluded: results do not depend on them.
inline std::vector<std::pair<std::string, std::string>> canonical_settings(const RunConfig& c) {
  using detail::fmt;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"q", std::to_string(c.model.q)},
      {"height", fmt(c.model.height)},
      {"center", fmt(c.model.center)},
      {"w", fmt(c.model.w)},
      {"beta1", fmt(c.model.beta1)},
      {"beta2", fmt(c.model.beta2)},
      {"inv_mass", fmt(c.model.inv_mass)},
      {"alpha", fmt(c.model.alpha)},
      {"boundary", to_string(c.model.boundary)},
      {"method", to_string(c.integ.method)},
      {"steps", std::to_string(c.integ.steps)},
      {"t_final", fmt(c.integ.t_final)},
      {"omega", fmt(c.integ.omega)},
      {"stride", std::to_string(c.integ.stride)},
      {"scheme", to_string(c.scheme.kind)},
      {"sigma", fmt(c.scheme.sigma)},
      {"delta", fmt(c.scheme.delta)},
      {"unitary_steps", std::to_string(c.scheme.unitary_steps)},
      {"reps", std::to_string(c.reps)},
      {"seed", std::to_string(c.scheme.seed)},
  };
  std::string pairs;
  for (const auto& p : c.scan_pairs) {
    if (!pairs.empty()) pairs += ',';
    pairs += std::to_string(p.q) + ':' + fmt(p.height);
  }
  kv.insert(kv.end(), {{"scan_pairs", pairs},
                       {"w_start", fmt(c.scan.w_start)},
                       {"w_step", fmt(c.scan.w_step)},
                       {"w_max", fmt(c.scan.w_max)},
                       {"det_cut", fmt(c.scan.cut)}});
  return kv;
}

inline std::string canonical_text(const RunConfig& c) {
  std::string out;
  for (const auto& [k, v] : canonical_settings(c)) out += k + '=' + v + '\n';
  return out;
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(canonical_text(c)));
  return buf;
}

/// "# nlqm <command> config_hash=... seed=... k=v ..." for the top of every CSV.
inline std::string metadata_line(const RunConfig& c) {
  std::string out = std::string("# nlqm ") + to_string(c.command) + " config_hash=" + config_hash(c) +
                    " seed=" + std::to_string(c.scheme.seed);
  for (const auto& [k, v] : canonical_settings(c)) {
    if (k == "seed") continue;
    out += ' ' + k + '=' + v;
  }
  return out;
}

/// Inverse of metadata_line: rebuilds the config a CSV was produced from.
inline RunConfig config_from_metadata(std::string_view line) {
  std::istringstream in{std::string(line)};
  std::string tok, cmd;
  in >> tok >> tok >> cmd;
  require(tok == "nlqm", ErrorKind::Config, "not an nlqm metadata line");
  RunConfig c;
  if (cmd == "simulate") c.command = Command::Simulate;
  else if (cmd == "scan") c.command = Command::Scan;
  else if (cmd == "table") c.command = Command::Table;
  else if (cmd == "selftest") c.command = Command::Selftest;
  else throw Error(ErrorKind::Config, "unknown command '" + cmd + "'");
  while (in >> tok) {
    if (tok.starts_with("config_hash=")) continue;
    // an empty scan_pairs value is written as "scan_pairs="
    apply_assignment(c, tok);
  }
  return c;
}

}  // namespace nlqm
