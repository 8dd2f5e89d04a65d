#pragma once

// Explicit second-order rough Euler scheme for dY = f0(Y) dt + f(Y) dX:
//   Y+ = Y + f0(Y) dt + f(Y) X_{s,t} + (Df f)(Y) XX_{s,t}.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "roughman/controlled.hpp"
#include "roughman/fields.hpp"
#include "roughman/roughpath.hpp"

namespace roughman {

struct SolveOptions {
  double bound = 1e8;
  /// Optional early stop: the first state for which this returns true is not
  /// recorded and the solution ends at the previous grid point.
  std::function<bool(const Vec&)> stop;
};

struct RDESolution {
  ControlledPath controlled;  // gubinelli = f(values)
  Vec xi;
  std::optional<std::size_t> stopped_at;

  const std::vector<Vec>& values() const { return controlled.values; }
  const RoughPath& driver() const { return *controlled.base; }
  std::size_t points() const { return controlled.values.size(); }
  double time(std::size_t i) const { return driver().time(i); }
};

inline RDESolution solve(const VectorFieldSet& vf, std::shared_ptr<const RoughPath> p, const Vec& xi,
                         const SolveOptions& opts = {}) {
  if (!p) throw Error(ErrorKind::Precondition, "solve: missing driver");
  if (xi.size() != vf.n || p->dim() != vf.d) {
    throw Error(ErrorKind::DimMismatch, "solve: state/noise dimensions do not match the fields");
  }
  RDESolution sol{ControlledPath{p, {}, {}}, xi, std::nullopt};
  auto& values = sol.controlled.values;
  auto& gub = sol.controlled.gubinelli;
  values.reserve(p->steps() + 1);
  gub.reserve(p->steps() + 1);
  if (opts.stop && opts.stop(xi)) {
    throw Error(ErrorKind::ChartDomain, "solve: initial condition already satisfies the stop condition");
  }
  Vec y = xi;
  for (std::size_t k = 0;; ++k) {
    const Mat fy = vf.f(y);
    values.push_back(y);
    gub.push_back(fy);
    if (k == p->steps()) break;
    Vec next = y + vf.f0(y) * p->dt() + fy * p->increment(k) + apply_bilinear(vf.second_order(y), p->area(k));
    if (opts.stop && opts.stop(next)) {
      sol.stopped_at = k + 1;
      break;
    }
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > opts.bound) {
      throw NonFiniteState(p->time(k + 1), "solve: state left the bound " + std::to_string(opts.bound) +
                                               " at t=" + std::to_string(p->time(k + 1)));
    }
    y = std::move(next);
  }
  return sol;
}

inline RDESolution solve(const VectorFieldSet& vf, const RoughPath& p, const Vec& xi, const SolveOptions& opts = {}) {
  return solve(vf, std::make_shared<const RoughPath>(p), xi, opts);
}

/// Path of (Df f)(Y_t): the Gubinelli derivative of Y' = f(Y) along a solution.
inline std::vector<Mat> second_order_path(const VectorFieldSet& vf, const RDESolution& sol) {
  std::vector<Mat> out;
  out.reserve(sol.points());
  for (const Vec& y : sol.values()) out.push_back(vf.second_order(y));
  return out;
}

/// Left-point samples of Gamma_t = int_0^t f0(Y_s) ds, matching the scheme.
inline std::vector<Vec> drift_path(const VectorFieldSet& vf, const RDESolution& sol) {
  std::vector<Vec> out;
  out.reserve(sol.points());
  Vec acc = Vec::Zero(vf.n);
  out.push_back(acc);
  for (std::size_t k = 0; k + 1 < sol.points(); ++k) {
    acc += vf.f0(sol.values()[k]) * sol.driver().dt();
    out.push_back(acc);
  }
  return out;
}

/// Splices a solution on [0, T0] with the solution restarted from its
/// terminal value on the continuation of the same driver.
inline RDESolution concatenate(const RDESolution& first, const RDESolution& second) {
  const RoughPath& p1 = first.driver();
  const RoughPath& p2 = second.driver();
  if (first.stopped_at || second.stopped_at) throw Error(ErrorKind::Mismatch, "concatenate: truncated solution");
  if ((second.xi - first.values().back()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorKind::Mismatch, "concatenate: second solution does not start at the first one's terminal value");
  }
  if (p1.dt() != p2.dt() || p1.dim() != p2.dim() || (p1.values().back() - p2.values().front()).norm() > 1e-12) {
    throw Error(ErrorKind::Mismatch, "concatenate: drivers are not consecutive pieces of one rough path");
  }
  std::vector<Vec> xs = p1.values();
  xs.insert(xs.end(), p2.values().begin() + 1, p2.values().end());
  std::vector<Tensor2> areas = p1.areas();
  areas.insert(areas.end(), p2.areas().begin(), p2.areas().end());
  auto base = std::make_shared<const RoughPath>(p1.dt(), std::move(xs), std::move(areas), p1.alpha());

  RDESolution out{ControlledPath{base, first.values(), first.controlled.gubinelli}, first.xi, std::nullopt};
  out.controlled.values.insert(out.controlled.values.end(), second.values().begin() + 1, second.values().end());
  out.controlled.gubinelli.insert(out.controlled.gubinelli.end(), second.controlled.gubinelli.begin() + 1,
                                  second.controlled.gubinelli.end());
  return out;
}

}  // namespace roughman
