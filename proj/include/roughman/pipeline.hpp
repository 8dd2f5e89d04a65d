#pragma once

// Scenario runner. For each seed one driver is generated on the finest grid
// and coarsened to the four nested levels N/8, N/4, N/2, N; the ambient
// equation is solved on every level and monitored against the chart.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "roughman/chart.hpp"
#include "roughman/config.hpp"
#include "roughman/csv.hpp"
#include "roughman/error.hpp"
#include "roughman/manifold.hpp"
#include "roughman/rde.hpp"
#include "roughman/rng.hpp"
#include "roughman/roughpath.hpp"
#include "roughman/roughpath_io.hpp"
#include "roughman/scenarios.hpp"
#include "roughman/signals.hpp"
#include "roughman/solver.hpp"

namespace roughman {

inline constexpr std::size_t kLevels = 4;
inline constexpr double kBracketMinR2 = 0.99;
inline constexpr double kConvergedFloor = 1e-10;

namespace detail {
inline constexpr std::uint32_t kSmoothPhasePurpose = 4;
}

/// Seeded smooth test signal X^k_t = sqrt(lambda_k) (sin(w_k t + th_k) - sin th_k),
/// w_k = 2 pi (k + 1) / T.
inline RoughPath smooth_driver(const QSpec& q, const SignalConfig& c) {
  const Eigen::Index d = q.dim();
  std::vector<double> phase(static_cast<std::size_t>(d));
  for (Eigen::Index k = 0; k < d; ++k) {
    phase[static_cast<std::size_t>(k)] =
        NormalStream(c.seed, static_cast<std::uint32_t>(k), detail::kSmoothPhasePurpose).normal(0);
  }
  const double horizon = c.horizon;
  return smooth_lift(
      [&](double t) -> Vec {
        Vec x(d);
        for (Eigen::Index k = 0; k < d; ++k) {
          const auto ki = static_cast<std::size_t>(k);
          const double w = 2.0 * M_PI * static_cast<double>(k + 1) / horizon;
          x(k) = std::sqrt(q.lambdas[ki]) * (std::sin(w * t + phase[ki]) - std::sin(phase[ki]));
        }
        return x;
      },
      c);
}

/// Finest-level driver of scenario `sc` for one RNG seed.
inline RoughPath make_driver(const Scenario& sc, std::uint64_t seed) {
  SignalConfig c = sc.signal;
  c.seed = seed;
  switch (sc.driver) {
    case DriverKind::ItoWiener: return ito_wiener_lift(sc.qspec, c);
    case DriverKind::GeometricFbm: return geometric_fbm_lift(sc.qspec, c);
    case DriverKind::PureArea: return pure_area_path(sc.pure_area, c.horizon, c.steps);
    case DriverKind::Smooth: return smooth_driver(sc.qspec, c);
  }
  throw Error(ErrorKind::Config, "unknown driver kind");
}

struct BracketFit {
  Tensor2 slope;
  double r2 = 1.0;
};

/// Least-squares fit [X]_{0,t} ~ slope * t (through the origin), pooled over
/// the given paths, with R^2 over all entries.
inline BracketFit fit_bracket_slope(const std::vector<std::shared_ptr<const RoughPath>>& paths) {
  if (paths.empty()) throw Error(ErrorKind::Precondition, "fit_bracket_slope: no paths");
  const Eigen::Index d = paths.front()->dim();
  std::vector<BracketPath> brackets;
  for (const auto& p : paths) brackets.push_back(bracket(*p));
  Tensor2 num = Tensor2::Zero(d, d);
  Tensor2 mean = Tensor2::Zero(d, d);
  double den = 0.0;
  std::size_t count = 0;
  for (std::size_t s = 0; s < paths.size(); ++s) {
    for (std::size_t i = 0; i < brackets[s].values.size(); ++i) {
      const double t = paths[s]->time(i);
      num += t * brackets[s].values[i];
      den += t * t;
      mean += brackets[s].values[i];
      ++count;
    }
  }
  BracketFit fit;
  fit.slope = sym(num / den);
  mean /= static_cast<double>(count);
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t s = 0; s < paths.size(); ++s) {
    for (std::size_t i = 0; i < brackets[s].values.size(); ++i) {
      ss_res += (brackets[s].values[i] - fit.slope * paths[s]->time(i)).squaredNorm();
      ss_tot += (brackets[s].values[i] - mean).squaredNorm();
    }
  }
  const double scale = 1e-24 * static_cast<double>(count);
  if (ss_tot <= scale) {
    fit.r2 = ss_res <= scale ? 1.0 : 0.0;
  } else {
    fit.r2 = 1.0 - ss_res / ss_tot;
  }
  return fit;
}

struct LevelResult {
  std::size_t steps = 0;
  double max_defect = 0.0;
  double final_defect = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();  // NaN: not computed
  bool gap_exited = false;
  bool escaped = false;  // NonFiniteState
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<LevelResult> levels;  // coarse to fine
};

struct RefinementRow {
  std::size_t steps = 0;
  double max_defect = 0.0;
  std::optional<double> order;
  double gap = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> gap_order;
};

inline constexpr double kMinDefectOrder = 0.25;

/// Refinement decision over all seeds. Each row of `defects` holds one seed's
/// max defects d_1..d_4 on the nested levels (coarse to fine). In log2 scale
/// the three coarser levels are fitted as a_s - p * level with one constant
/// per seed and a pooled order p; the finest level is then predicted with a
/// slack of max(1, 3 sigma) in log2, sigma being the pooled fit residual.
/// A seed passes when its finest defect is at round-off level, or when it is
/// below its coarsest defect and below the prediction bound, provided the
/// pooled order over all four levels is at least kMinDefectOrder.
struct RefinementCheck {
  double order = 0.0;                // pooled, levels 1..4
  double extrapolation_order = 0.0;  // pooled, levels 1..3
  double sigma = 0.0;                // log2 residual of the levels 1..3 fit
  std::vector<double> bound;
  std::vector<bool> passed;
  bool all_passed = false;
};

inline RefinementCheck check_refinement(const std::vector<std::vector<double>>& defects) {
  RefinementCheck rc;
  std::vector<const std::vector<double>*> fitted;
  bool degenerate = false;
  for (const auto& d : defects) {
    if (d.size() != kLevels) throw Error(ErrorKind::Precondition, "check_refinement: need one defect per level");
    if (d.back() <= kConvergedFloor) continue;
    bool usable = std::isfinite(d.back());
    for (double v : d) usable = usable && v > 0.0;
    if (usable) fitted.push_back(&d);
    else degenerate = true;
  }
  double ss = 0.0;
  if (!fitted.empty()) {
    double sum_all = 0.0;
    double sum_ext = 0.0;
    for (const auto* d : fitted) {
      sum_all += std::log2(d->front() / d->back()) / 3.0;
      sum_ext += std::log2(d->front() / (*d)[2]) / 2.0;
    }
    rc.order = degenerate ? 0.0 : sum_all / static_cast<double>(fitted.size());
    rc.extrapolation_order = sum_ext / static_cast<double>(fitted.size());
    for (const auto* d : fitted) {
      double a = 0.0;
      for (int l = 0; l < 3; ++l) a += (std::log2((*d)[static_cast<std::size_t>(l)]) + rc.extrapolation_order * l) / 3.0;
      for (int l = 0; l < 3; ++l) {
        const double r = std::log2((*d)[static_cast<std::size_t>(l)]) - (a - rc.extrapolation_order * l);
        ss += r * r;
      }
    }
    const double dof = 2.0 * static_cast<double>(fitted.size()) - 1.0;
    rc.sigma = dof > 0.0 ? std::sqrt(ss / dof) : 0.0;
  }
  const double slack = std::max(1.0, 3.0 * rc.sigma);
  rc.all_passed = true;
  for (const auto& d : defects) {
    bool ok = d.back() <= kConvergedFloor;
    double bound = kConvergedFloor;
    bool usable = std::isfinite(d.back());
    for (double v : d) usable = usable && v > 0.0;
    if (!ok && usable) {
      double a = 0.0;
      for (int l = 0; l < 3; ++l) a += (std::log2(d[static_cast<std::size_t>(l)]) + rc.extrapolation_order * l) / 3.0;
      bound = std::exp2(a - 3.0 * rc.extrapolation_order + slack);
      ok = rc.order >= kMinDefectOrder && d.back() < d.front() && d.back() <= bound;
    }
    rc.bound.push_back(bound);
    rc.passed.push_back(ok);
    rc.all_passed = rc.all_passed && ok;
  }
  return rc;
}

struct RunResult {
  Scenario scenario;
  Tensor2 x;
  std::optional<BracketFit> fit;
  Verdict verdict;
  std::vector<SeedResult> seeds;
  std::vector<RefinementRow> table;
  std::optional<RefinementCheck> refinement;  // only when the verdict is invariant
  bool round_trip = false;
  std::string reason;

  int exit_code() const { return round_trip ? 0 : 2; }
};

struct ResolvedScenario {
  VectorFieldSet fields;
  Chart chart;
  Vec xi;
};

inline ResolvedScenario resolve(const Scenario& sc) {
  ResolvedScenario r;
  r.chart = builtin_chart(sc.resolved_chart_id());
  Vec z0;
  if (sc.external) {
    r.fields = sc.external->build();
    z0 = sc.base_point.value_or(r.chart.lower + 0.5 * (r.chart.upper - r.chart.lower));
  } else {
    const BuiltinScenario b = make_builtin(sc.field_id, sc.qspec.lambdas);
    r.fields = b.fields;
    z0 = sc.base_point.value_or(b.base_point);
  }
  validate_chart(r.chart);
  if (!r.chart.in_domain(z0)) throw Error(ErrorKind::ChartDomain, "base point outside the chart box");
  std::vector<Vec> ambient_probes;
  for (const Vec& z : r.chart.probes) ambient_probes.push_back(r.chart.phi(z));
  validate_derivatives(r.fields, ambient_probes);
  r.xi = r.chart.phi(z0);
  return r;
}

inline void write_rough_path_file(const std::filesystem::path& file, const RoughPath& p) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  write_rough_path(out, p);
}

namespace detail {

inline void write_solution_csv(const std::filesystem::path& file, const RDESolution& sol, const DistanceReport& dist) {
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  out << 't';
  const Eigen::Index n = sol.values().front().size();
  for (Eigen::Index i = 1; i <= n; ++i) out << ",y_" << i;
  out << ",dist_to_manifold\n";
  for (std::size_t i = 0; i < sol.points(); ++i) {
    out << csv::format(sol.time(i));
    for (Eigen::Index j = 0; j < n; ++j) out << ',' << csv::format(sol.values()[i](j));
    out << ',' << csv::format(dist.defect_at(i)) << '\n';
  }
}

inline SeedResult run_seed(const ResolvedScenario& rs, const Tensor2& x, bool invariant_strict,
                           std::shared_ptr<const RoughPath> finest, std::uint64_t seed,
                           const std::optional<std::filesystem::path>& out_dir) {
  SeedResult res;
  res.seed = seed;
  for (std::size_t lvl = 0; lvl < kLevels; ++lvl) {
    const std::size_t factor = std::size_t{1} << (kLevels - 1 - lvl);
    auto p = factor == 1 ? finest : std::make_shared<const RoughPath>(coarsen(*finest, factor));
    LevelResult lr;
    lr.steps = p->steps();
    try {
      const RDESolution sol = solve(rs.fields, p, rs.xi);
      const DistanceReport dist = distance_monitor(sol, rs.chart);
      lr.max_defect = dist.max_defect();
      lr.final_defect = dist.defect_at(sol.points() - 1);
      if (out_dir && factor == 1) {
        write_rough_path_file(*out_dir / ("driver_seed" + std::to_string(seed) + ".csv"), *p);
        write_solution_csv(*out_dir / ("solution_seed" + std::to_string(seed) + ".csv"), sol, dist);
      }
    } catch (const NonFiniteState&) {
      lr.escaped = true;
      lr.max_defect = std::numeric_limits<double>::infinity();
      lr.final_defect = std::numeric_limits<double>::infinity();
    }
    if (invariant_strict && !lr.escaped) {
      const ReductionGap g = reduced_vs_ambient(rs.fields, rs.chart, p, rs.xi, x);
      lr.gap = g.gap;
      lr.gap_exited = g.exited;
    }
    res.levels.push_back(lr);
  }
  return res;
}

inline std::optional<double> observed_order(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0) || !std::isfinite(coarse) || !std::isfinite(fine)) return std::nullopt;
  return std::log2(coarse / fine);
}

inline std::string format_opt(const std::optional<double>& v) { return v ? csv::format(*v) : std::string(); }

inline std::string format_gap(double g) { return std::isnan(g) ? std::string("nan") : csv::format(g); }

inline std::string brief(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace detail

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Full pipeline for one scenario: x, verdict, per-seed solves on the four
/// levels, refinement table, and the round-trip decision.
inline RunResult run_scenario(const Scenario& sc, const RunOptions& opts = {}) {
  RunResult rr;
  rr.scenario = sc;
  const ResolvedScenario rs = resolve(sc);
  if (rs.fields.d != sc.qspec.dim()) throw Error(ErrorKind::DimMismatch, "driver and fields disagree on the noise dimension");

  std::vector<std::shared_ptr<const RoughPath>> drivers;
  for (std::size_t i = 0; i < sc.seeds; ++i) {
    drivers.push_back(std::make_shared<const RoughPath>(make_driver(sc, sc.signal.seed + i)));
  }

  switch (sc.x_mode) {
    case XMode::Zero: rr.x = Tensor2::Zero(sc.qspec.dim(), sc.qspec.dim()); break;
    case XMode::Explicit: rr.x = sc.x_explicit; break;
    case XMode::FromDriverBracket: {
      rr.fit = fit_bracket_slope(drivers);
      if (rr.fit->r2 < kBracketMinR2) {
        throw Error(ErrorKind::Precondition, "driver bracket is not linear in t (R^2 = " + csv::format(rr.fit->r2) +
                                                 "); use x_mode = explicit or zero");
      }
      rr.x = rr.fit->slope;
      break;
    }
  }

  rr.verdict = check_invariance(rs.fields, rs.chart, rr.x, sc.tol);
  const bool strict = check_invariance(rs.fields, rs.chart, rr.x, kTangencyCrossCheck).invariant;

  if (opts.out_dir) std::filesystem::create_directories(*opts.out_dir);

  unsigned threads = opts.threads ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  rr.seeds.resize(sc.seeds);
  for (std::size_t begin = 0; begin < sc.seeds; begin += threads) {
    const std::size_t end = std::min<std::size_t>(sc.seeds, begin + threads);
    std::vector<std::future<SeedResult>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred, [&, i] {
        return detail::run_seed(rs, rr.x, strict, drivers[i], sc.signal.seed + i, opts.out_dir);
      }));
    }
    for (std::size_t i = begin; i < end; ++i) rr.seeds[i] = batch[i - begin].get();
  }

  for (std::size_t lvl = 0; lvl < kLevels; ++lvl) {
    RefinementRow row;
    row.steps = rr.seeds.front().levels[lvl].steps;
    bool any_gap = false;
    double gap = 0.0;
    for (const SeedResult& s : rr.seeds) {
      row.max_defect = std::max(row.max_defect, s.levels[lvl].max_defect);
      if (!std::isnan(s.levels[lvl].gap)) {
        any_gap = true;
        gap = std::max(gap, s.levels[lvl].gap);
      }
    }
    if (any_gap) row.gap = gap;
    if (lvl > 0) {
      row.order = detail::observed_order(rr.table.back().max_defect, row.max_defect);
      row.gap_order = detail::observed_order(rr.table.back().gap, row.gap);
    }
    rr.table.push_back(row);
  }

  const double horizon = sc.signal.horizon;
  if (rr.verdict.invariant) {
    std::vector<std::vector<double>> defects;
    for (const SeedResult& s : rr.seeds) {
      defects.emplace_back();
      for (const LevelResult& l : s.levels) defects.back().push_back(l.max_defect);
    }
    rr.refinement = check_refinement(defects);
    rr.round_trip = rr.refinement->all_passed;
    bool round_off = true;
    for (const auto& d : defects) round_off = round_off && d.back() <= kConvergedFloor;
    if (rr.round_trip && round_off) {
      rr.reason = "verdict invariant and defects stay at round-off level on every seed";
    } else if (rr.round_trip) {
      rr.reason = "verdict invariant and defects vanish under refinement on every seed (pooled order " +
                  detail::brief(rr.refinement->order) + ")";
    } else {
      std::size_t bad = 0;
      while (rr.refinement->passed[bad]) ++bad;
      rr.reason = "verdict invariant but defects do not vanish for seed " + std::to_string(rr.seeds[bad].seed) +
                  " (finest max defect " + detail::brief(defects[bad].back()) + ", bound " +
                  detail::brief(rr.refinement->bound[bad]) + ", pooled order " + detail::brief(rr.refinement->order) + ")";
    }
  } else {
    const double threshold = rr.verdict.max_residual * horizon / 4.0;
    double worst = 0.0;
    for (const SeedResult& s : rr.seeds) worst = std::max(worst, s.levels.back().max_defect);
    rr.round_trip = worst > threshold;
    rr.reason = std::string("verdict not invariant; largest finest-grid defect ") + detail::brief(worst) +
                (rr.round_trip ? " exceeds " : " does not exceed ") + "rho*T/4 = " + detail::brief(threshold);
  }

  if (opts.out_dir) {
    const auto& dir = *opts.out_dir;
    {
      std::ofstream v(dir / "verdict.txt");
      write_verdict(v, rr.verdict);
    }
    {
      std::ofstream s(dir / "summary.csv");
      s << "seed,max_defect,final_defect,reduced_vs_ambient_gap\n";
      for (const SeedResult& r : rr.seeds) {
        const LevelResult& l = r.levels.back();
        s << r.seed << ',' << csv::format(l.max_defect) << ',' << csv::format(l.final_defect) << ','
          << detail::format_gap(l.gap) << '\n';
      }
    }
    {
      std::ofstream t(dir / "refinement.csv");
      t << "N,max_defect,order,reduced_vs_ambient_gap,gap_order\n";
      for (const RefinementRow& r : rr.table) {
        t << r.steps << ',' << csv::format(r.max_defect) << ',' << detail::format_opt(r.order) << ','
          << detail::format_gap(r.gap) << ',' << detail::format_opt(r.gap_order) << '\n';
      }
    }
    {
      std::ofstream r(dir / "report.txt");
      r << "scenario=" << sc.name << '\n'
        << "driver=" << to_string(sc.driver) << '\n'
        << "field=" << sc.field_id << '\n'
        << "chart=" << rs.chart.name << '\n'
        << "x_mode=" << to_string(sc.x_mode) << '\n'
        << "x=";
      for (Eigen::Index i = 0; i < rr.x.size(); ++i) r << (i ? ";" : "") << csv::format(rr.x(i / rr.x.cols(), i % rr.x.cols()));
      r << '\n';
      if (rr.fit) r << "bracket_fit_r2=" << csv::format(rr.fit->r2) << '\n';
      r << "invariant=" << (rr.verdict.invariant ? "true" : "false") << '\n'
        << "round_trip=" << (rr.round_trip ? "holds" : "violated") << '\n'
        << "reason=" << rr.reason << '\n';
    }
  }
  return rr;
}

}  // namespace roughman
