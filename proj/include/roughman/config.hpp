#pragma once

// Scenario files: flat `key = value` lines grouped under [section] headers.
// `#` and `;` start comments. Lists are comma separated; matrices are given
// row-major as a flat list. Every error names the file line (or the missing
// key) it came from.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "roughman/csv.hpp"
#include "roughman/error.hpp"
#include "roughman/linalg.hpp"
#include "roughman/scenarios.hpp"
#include "roughman/signals.hpp"

namespace roughman {

enum class DriverKind { ItoWiener, GeometricFbm, PureArea, Smooth };
enum class XMode { FromDriverBracket, Explicit, Zero };

inline const char* to_string(DriverKind k) {
  switch (k) {
    case DriverKind::ItoWiener: return "ito_wiener";
    case DriverKind::GeometricFbm: return "geometric_fbm";
    case DriverKind::PureArea: return "pure_area";
    case DriverKind::Smooth: return "smooth";
  }
  return "?";
}

inline const char* to_string(XMode m) {
  switch (m) {
    case XMode::FromDriverBracket: return "from_driver_bracket";
    case XMode::Explicit: return "explicit";
    case XMode::Zero: return "zero";
  }
  return "?";
}

inline DriverKind parse_driver_kind(const std::string& s) {
  if (s == "ito_wiener") return DriverKind::ItoWiener;
  if (s == "geometric_fbm") return DriverKind::GeometricFbm;
  if (s == "pure_area") return DriverKind::PureArea;
  if (s == "smooth") return DriverKind::Smooth;
  throw Error(ErrorKind::Config, "unknown driver '" + s + "' (ito_wiener, geometric_fbm, pure_area, smooth)");
}

/// Affine fields f0(y) = C y + c, f_k(y) = A_k y + b_k, run through the
/// finite-difference Jacobian path.
struct ExternalFields {
  Eigen::Index n = 0;
  Mat drift;
  Vec drift_shift;
  std::vector<Mat> noise;
  std::vector<Vec> noise_shift;

  VectorFieldSet build() const {
    const Mat c = drift;
    const Vec c0 = drift_shift;
    const std::vector<Mat> a = noise;
    const std::vector<Vec> b = noise_shift;
    const auto d = static_cast<Eigen::Index>(a.size());
    return numeric_jacobian_fields(
        n, d, [c, c0](const Vec& y) -> Vec { return c * y + c0; },
        [a, b, d](const Vec& y) -> Mat {
          Mat out(y.size(), d);
          for (Eigen::Index k = 0; k < d; ++k) {
            const auto ki = static_cast<std::size_t>(k);
            out.col(k) = a[ki] * y + b[ki];
          }
          return out;
        });
  }
};

struct Scenario {
  std::string name = "scenario";
  DriverKind driver = DriverKind::ItoWiener;
  QSpec qspec{{1.0}, 0.5};
  SignalConfig signal{1.0, 2048, 16, 1};
  std::string field_id = "circle_rot_corrected";
  std::string chart_id;  // empty: the built-in field's own chart
  XMode x_mode = XMode::FromDriverBracket;
  Tensor2 x_explicit;
  Tensor2 pure_area;  // the x of pure_area_path
  double tol = 1e-8;
  std::size_t seeds = 8;
  std::optional<ExternalFields> external;
  std::optional<Vec> base_point;

  std::string resolved_chart_id() const {
    if (!chart_id.empty()) return chart_id;
    if (external) throw Error(ErrorKind::Config, "[external] fields need chart = <id>");
    return builtin_chart_id(field_id);
  }

  Eigen::Index noise_dim() const { return qspec.dim(); }
};

struct ConfigEntry {
  std::string value;
  int line = 0;
  bool used = false;
};

/// Raw parsed file: section -> key -> entry.
class ConfigFile {
 public:
  static ConfigFile parse(std::istream& in, const std::string& source = "<config>") {
    ConfigFile cf;
    cf.source_ = source;
    std::string section;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      std::string s = strip_comment(raw);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']' || s.size() < 3) cf.fail(line, "malformed section header '" + s + "'");
        section = trim(s.substr(1, s.size() - 2));
        if (cf.sections_.count(section)) cf.fail(line, "duplicate section [" + section + "]");
        cf.sections_[section];
        continue;
      }
      const auto eq = s.find('=');
      if (eq == std::string::npos) cf.fail(line, "expected key = value, got '" + s + "'");
      if (section.empty()) cf.fail(line, "key outside of any [section]");
      const std::string key = trim(s.substr(0, eq));
      const std::string value = trim(s.substr(eq + 1));
      if (key.empty()) cf.fail(line, "empty key");
      auto& sec = cf.sections_[section];
      if (sec.count(key)) cf.fail(line, "duplicate key '" + key + "' in [" + section + "]");
      sec[key] = ConfigEntry{value, line, false};
    }
    return cf;
  }

  bool has_section(const std::string& s) const { return sections_.count(s) != 0; }
  bool has(const std::string& s, const std::string& k) const {
    auto it = sections_.find(s);
    return it != sections_.end() && it->second.count(k) != 0;
  }

  std::optional<std::string> get(const std::string& s, const std::string& k) {
    auto it = sections_.find(s);
    if (it == sections_.end()) return std::nullopt;
    auto jt = it->second.find(k);
    if (jt == it->second.end()) return std::nullopt;
    jt->second.used = true;
    return jt->second.value;
  }

  int line_of(const std::string& s, const std::string& k) const {
    auto it = sections_.find(s);
    if (it == sections_.end()) return 0;
    auto jt = it->second.find(k);
    return jt == it->second.end() ? 0 : jt->second.line;
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw Error(ErrorKind::Config, source_ + ":" + std::to_string(line) + ": " + msg);
  }

  [[noreturn]] void fail_key(const std::string& s, const std::string& k, const std::string& msg) const {
    const int line = line_of(s, k);
    if (line > 0) fail(line, "[" + s + "] " + k + ": " + msg);
    throw Error(ErrorKind::Config, source_ + ": [" + s + "] " + k + ": " + msg);
  }

  double number(const std::string& s, const std::string& k, double fallback) {
    const auto v = get(s, k);
    return v ? to_number(s, k, *v) : fallback;
  }

  std::size_t count(const std::string& s, const std::string& k, std::size_t fallback) {
    const auto v = get(s, k);
    if (!v) return fallback;
    const double x = to_number(s, k, *v);
    if (x < 0.0 || x != std::floor(x) || x > 1e15) fail_key(s, k, "expected a non-negative integer, got '" + *v + "'");
    return static_cast<std::size_t>(x);
  }

  std::vector<double> list(const std::string& s, const std::string& k) {
    const auto v = get(s, k);
    if (!v) fail_key(s, k, "missing");
    std::vector<double> out;
    for (const std::string& item : csv::split(*v)) out.push_back(to_number(s, k, trim(item)));
    return out;
  }

  Mat square(const std::string& s, const std::string& k, Eigen::Index dim) {
    const std::vector<double> flat = list(s, k);
    if (static_cast<Eigen::Index>(flat.size()) != dim * dim) {
      fail_key(s, k, "expected " + std::to_string(dim * dim) + " entries (row-major " + std::to_string(dim) + "x" +
                         std::to_string(dim) + "), got " + std::to_string(flat.size()));
    }
    Mat m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = flat[static_cast<std::size_t>(i * dim + j)];
    }
    return m;
  }

  Vec vector(const std::string& s, const std::string& k, Eigen::Index dim) {
    const std::vector<double> flat = list(s, k);
    if (static_cast<Eigen::Index>(flat.size()) != dim) {
      fail_key(s, k, "expected " + std::to_string(dim) + " entries, got " + std::to_string(flat.size()));
    }
    return Eigen::Map<const Vec>(flat.data(), dim);
  }

  /// Throws on the first key nobody asked for (typos would otherwise be silent).
  void reject_unused() const {
    for (const auto& [sec, keys] : sections_) {
      for (const auto& [key, entry] : keys) {
        if (!entry.used) fail(entry.line, "unknown key '" + key + "' in [" + sec + "]");
      }
    }
  }

  void reject_unknown_sections(const std::vector<std::string>& known) const {
    for (const auto& [sec, keys] : sections_) {
      bool ok = false;
      for (const auto& k : known) ok = ok || k == sec;
      if (!ok) {
        int line = 0;
        for (const auto& [key, e] : keys) line = line == 0 ? e.line : std::min(line, e.line);
        throw Error(ErrorKind::Config, source_ + ":" + (line ? std::to_string(line) + ": " : std::string(" ")) +
                                           "unknown section [" + sec + "]");
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static std::string strip_comment(const std::string& s) {
    const auto c = s.find_first_of("#;");
    return c == std::string::npos ? s : s.substr(0, c);
  }

  double to_number(const std::string& s, const std::string& k, const std::string& v) const {
    try {
      return csv::parse_double(v, k);
    } catch (const Error&) {
      fail_key(s, k, "not a number: '" + v + "'");
    }
  }

  std::string source_;
  std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
};

/// Consistency checks for a Scenario assembled in code or edited after
/// parsing (command-line overrides).
inline void check_scenario(const Scenario& sc) {
  sc.qspec.validate();
  sc.signal.validate();
  if (sc.signal.steps % 8 != 0) throw Error(ErrorKind::Config, "grid must be divisible by 8");
  if (sc.driver == DriverKind::ItoWiener && sc.qspec.hurst != 0.5) {
    throw Error(ErrorKind::Config, "ito_wiener needs hurst = 0.5");
  }
  if (!(sc.tol > 0.0)) throw Error(ErrorKind::Config, "tol must be positive");
  if (sc.seeds == 0) throw Error(ErrorKind::Config, "need at least one seed");
  const Eigen::Index d = sc.qspec.dim();
  if (sc.driver == DriverKind::PureArea && (sc.pure_area.rows() != d || sc.pure_area.cols() != d)) {
    throw Error(ErrorKind::Config, "pure_area driver needs a d x d area matrix");
  }
  if (sc.x_mode == XMode::Explicit && (sc.x_explicit.rows() != d || sc.x_explicit.cols() != d)) {
    throw Error(ErrorKind::Config, "explicit x must be d x d");
  }
  if (sc.external) {
    if (static_cast<Eigen::Index>(sc.external->noise.size()) != d) {
      throw Error(ErrorKind::Config, "external fields need one noise matrix per eigenvalue");
    }
  } else if (builtin_noise_dim(sc.field_id) != d) {
    throw Error(ErrorKind::Config, sc.field_id + " needs " + std::to_string(builtin_noise_dim(sc.field_id)) +
                                       " eigenvalues, got " + std::to_string(d));
  }
  const Chart chart = builtin_chart(sc.resolved_chart_id());
  const Eigen::Index n = sc.external ? sc.external->n : builtin_fields(sc.field_id, sc.qspec.lambdas).n;
  if (chart.n != n) throw Error(ErrorKind::Config, "chart and fields live in different ambient spaces");
}

/// Builds and validates a Scenario. Unknown sections or keys are errors.
inline Scenario parse_scenario(std::istream& in, const std::string& source = "<config>") {
  ConfigFile cf = ConfigFile::parse(in, source);
  cf.reject_unknown_sections({"scenario", "driver", "correction", "external"});
  Scenario sc;

  if (auto v = cf.get("scenario", "name")) sc.name = *v;
  if (auto v = cf.get("scenario", "field")) sc.field_id = *v;
  if (auto v = cf.get("scenario", "chart")) sc.chart_id = *v;
  sc.tol = cf.number("scenario", "tol", sc.tol);
  if (!(sc.tol > 0.0)) cf.fail_key("scenario", "tol", "must be positive");
  sc.seeds = cf.count("scenario", "seeds", sc.seeds);
  if (sc.seeds == 0) cf.fail_key("scenario", "seeds", "must be at least 1");

  if (auto v = cf.get("driver", "kind")) {
    try {
      sc.driver = parse_driver_kind(*v);
    } catch (const Error& e) {
      cf.fail_key("driver", "kind", e.detail());
    }
  }
  if (cf.has("driver", "lambdas")) sc.qspec.lambdas = cf.list("driver", "lambdas");
  sc.qspec.hurst = cf.number("driver", "hurst", sc.qspec.hurst);
  sc.signal.horizon = cf.number("driver", "horizon", sc.signal.horizon);
  sc.signal.steps = cf.count("driver", "grid", sc.signal.steps);
  sc.signal.refine = cf.count("driver", "refine", sc.signal.refine);
  sc.signal.seed = cf.count("driver", "seed", sc.signal.seed);
  const Eigen::Index d = sc.qspec.dim();
  if (d == 0) cf.fail_key("driver", "lambdas", "need at least one eigenvalue");
  if (sc.driver == DriverKind::PureArea) {
    sc.pure_area = cf.has("driver", "area") ? cf.square("driver", "area", d) : Tensor2(sc.qspec.covariance());
    if (!is_symmetric(sc.pure_area)) cf.fail_key("driver", "area", "must be symmetric");
  }
  try {
    sc.qspec.validate();
  } catch (const Error& e) {
    cf.fail_key("driver", e.kind() == ErrorKind::BadHurst ? "hurst" : "lambdas", e.detail());
  }
  if (sc.driver == DriverKind::ItoWiener && sc.qspec.hurst != 0.5) {
    cf.fail_key("driver", "hurst", "ito_wiener needs hurst = 0.5");
  }
  try {
    sc.signal.validate();
  } catch (const Error& e) {
    cf.fail_key("driver", "grid", e.detail());
  }
  if (sc.signal.steps % 8 != 0) cf.fail_key("driver", "grid", "must be divisible by 8 (four nested levels)");

  if (auto v = cf.get("correction", "x_mode")) {
    if (*v == "from_driver_bracket") sc.x_mode = XMode::FromDriverBracket;
    else if (*v == "explicit") sc.x_mode = XMode::Explicit;
    else if (*v == "zero") sc.x_mode = XMode::Zero;
    else cf.fail_key("correction", "x_mode", "expected from_driver_bracket, explicit or zero");
  }
  if (sc.x_mode == XMode::Explicit) {
    sc.x_explicit = cf.square("correction", "x", d);
    if (!is_symmetric(sc.x_explicit)) cf.fail_key("correction", "x", "must be symmetric");
  } else if (cf.has("correction", "x")) {
    cf.fail_key("correction", "x", "only allowed with x_mode = explicit");
  }

  if (sc.field_id == "external") {
    if (!cf.has_section("external")) throw Error(ErrorKind::Config, source + ": field = external needs an [external] section");
    ExternalFields ext;
    ext.n = static_cast<Eigen::Index>(cf.count("external", "dim", 0));
    if (ext.n == 0) cf.fail_key("external", "dim", "missing or zero");
    ext.drift = cf.has("external", "drift") ? cf.square("external", "drift", ext.n) : Mat(Mat::Zero(ext.n, ext.n));
    ext.drift_shift = cf.has("external", "drift_shift") ? cf.vector("external", "drift_shift", ext.n) : Vec(Vec::Zero(ext.n));
    for (Eigen::Index k = 1; k <= d; ++k) {
      const std::string a = "noise_" + std::to_string(k);
      const std::string b = "noise_shift_" + std::to_string(k);
      if (!cf.has("external", a)) cf.fail_key("external", a, "missing (one noise matrix per eigenvalue)");
      ext.noise.push_back(cf.square("external", a, ext.n));
      ext.noise_shift.push_back(cf.has("external", b) ? cf.vector("external", b, ext.n) : Vec(Vec::Zero(ext.n)));
    }
    if (cf.has("external", "base_point")) {
      // Chart coordinates; the chart dimension is only known once resolved.
      const std::vector<double> z = cf.list("external", "base_point");
      sc.base_point = Eigen::Map<const Vec>(z.data(), static_cast<Eigen::Index>(z.size()));
    }
    sc.external = std::move(ext);
    if (sc.chart_id.empty()) cf.fail_key("scenario", "chart", "field = external needs chart = <id>");
  } else {
    if (cf.has_section("external")) throw Error(ErrorKind::Config, source + ": [external] given but field is built-in");
    bool known = false;
    for (const auto& id : builtin_field_ids()) known = known || id == sc.field_id;
    if (!known) cf.fail_key("scenario", "field", "unknown built-in field '" + sc.field_id + "'");
    if (builtin_noise_dim(sc.field_id) != d) {
      cf.fail_key("driver", "lambdas", sc.field_id + " needs " + std::to_string(builtin_noise_dim(sc.field_id)) +
                                           " eigenvalues, got " + std::to_string(d));
    }
  }
  try {
    const Chart chart = builtin_chart(sc.resolved_chart_id());
    const Eigen::Index n = sc.external ? sc.external->n : builtin_fields(sc.field_id, sc.qspec.lambdas).n;
    if (chart.n != n) cf.fail_key("scenario", "chart", "chart lives in R^" + std::to_string(chart.n) + ", fields in R^" + std::to_string(n));
    if (sc.base_point && sc.base_point->size() != chart.m) {
      cf.fail_key("external", "base_point", "expected " + std::to_string(chart.m) + " chart coordinates");
    }
  } catch (const Error& e) {
    if (e.detail().rfind(source, 0) == 0) throw;
    cf.fail_key("scenario", "chart", e.detail());
  }
  cf.reject_unused();
  check_scenario(sc);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open scenario file '" + path + "'");
  return parse_scenario(in, path);
}

}  // namespace roughman
