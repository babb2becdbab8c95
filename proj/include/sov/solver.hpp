#ifndef SOV_SOLVER_HPP
#define SOV_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include "sov/core.hpp"
#include "sov/functional.hpp"

namespace sov {

struct TraceEntry {
  int iteration;
  double energy;
  double residual;
};

class IterationLimit : public NumericalFailure {
 public:
  IterationLimit(const std::string& what, std::vector<TraceEntry> t)
      : NumericalFailure(what), trace(std::move(t)) {}
  std::vector<TraceEntry> trace;
};

struct FlowOptions {
  double tol = 1e-8;             // residual target
  double energy_rtol = 1e-12;    // relative energy change over the window
  int energy_window = 10;
  int max_iterations = 50000;
  double armijo_slack = 1e-12;   // allowed relative energy increase per step
  double shift = 0.1;            // preconditioner shift above the linear bottom
  bool keep_trace = true;
};

template <typename Pair>
struct SolveResult {
  Pair pair;
  EnergyBreakdown energy;
  double mass = 0.0;
  double omega = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::vector<TraceEntry> trace;
};

/// Operations a state type must supply to the projected flow.
template <typename Pair>
struct FlowOps {
  std::function<EnergyBreakdown(const Pair&)> energy;
  std::function<Pair(const Pair&)> gradient;
  std::function<Pair(const Pair&)> precondition;
  std::function<double(const Pair&, const Pair&)> dot;  // Re <a, b>
};

namespace detail {

template <typename Pair>
void axpy(Pair& y, double a, const Pair& x) {
  y.axpy(a, x);
}

template <typename Pair>
void scale(Pair& y, double a) {
  y *= a;
}

}  // namespace detail

/// Normalised (projected) preconditioned gradient flow on {M = rho}.
/// Each step moves along the P-orthogonal projection of the preconditioned
/// gradient, with a Barzilai-Borwein length, backtracking on the energy and
/// rescaling to the mass sphere.
template <typename Pair>
SolveResult<Pair> projected_flow(Pair x, double rho, const FlowOps<Pair>& ops,
                                 const FlowOptions& opt) {
  auto normalize = [&](Pair& u) {
    const double m = ops.dot(u, u);
    if (!(m > 0.0)) throw NumericalFailure("flow state collapsed to zero");
    detail::scale(u, std::sqrt(rho / m));
  };
  normalize(x);
  SolveResult<Pair> out;
  EnergyBreakdown e = ops.energy(x);
  Pair g = ops.gradient(x);
  std::deque<double> recent;
  Pair prev_x, prev_d;
  bool have_prev = false;
  double tau = 1.0;
  for (int it = 0;; ++it) {
    const double omega = -ops.dot(g, x) / rho;
    Pair r = g;
    detail::axpy(r, omega, x);
    const double res = std::sqrt(ops.dot(r, r));
    if (opt.keep_trace) out.trace.push_back({it, e.total, res});
    recent.push_back(e.total);
    if (static_cast<int>(recent.size()) > opt.energy_window + 1) recent.pop_front();
    bool flat = static_cast<int>(recent.size()) == opt.energy_window + 1;
    if (flat) {
      const auto [lo, hi] = std::minmax_element(recent.begin(), recent.end());
      flat = (*hi - *lo) <= opt.energy_rtol * std::max(std::abs(e.total), 1e-300);
    }
    if (res <= opt.tol && flat) {
      out.pair = std::move(x);
      out.energy = e;
      out.mass = ops.dot(out.pair, out.pair);
      out.omega = omega;
      out.residual = res;
      out.iterations = it;
      return out;
    }
    if (it >= opt.max_iterations)
      throw IterationLimit("projected flow hit the iteration limit", std::move(out.trace));

    Pair pg = ops.precondition(g);
    Pair px = ops.precondition(x);
    const double beta = ops.dot(pg, x) / ops.dot(px, x);
    Pair d = std::move(pg);
    detail::axpy(d, -beta, px);
    if (have_prev) {
      Pair s = x, y = d;
      detail::axpy(s, -1.0, prev_x);
      detail::axpy(y, -1.0, prev_d);
      const double sy = ops.dot(s, y);
      const double yy = ops.dot(y, y);
      if (sy > 0.0 && yy > 0.0) tau = sy / yy;
    }
    prev_x = x;
    prev_d = d;
    have_prev = true;

    double step = tau;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      Pair trial = x;
      detail::axpy(trial, -step, d);
      normalize(trial);
      const EnergyBreakdown et = ops.energy(trial);
      if (et.total <= e.total + opt.armijo_slack * std::abs(e.total)) {
        x = std::move(trial);
        e = et;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No admissible step along d. If already converged in the residual
      // this is round-off; otherwise the line search has failed.
      if (res <= opt.tol) {
        out.pair = std::move(x);
        out.energy = e;
        out.mass = ops.dot(out.pair, out.pair);
        out.omega = omega;
        out.residual = res;
        out.iterations = it;
        return out;
      }
      throw StepControlError("energy line search failed");
    }
    tau = step;
    g = ops.gradient(x);
  }
}

}  // namespace sov

#endif  // SOV_SOLVER_HPP
