#pragma once

// Compound Poisson construction with certified truncation accounting:
// for intensity lambda and base law F, accumulate
//   sum_{s=0}^{S} e^{-lambda} lambda^s / s! * F^s
// where S is the smallest integer whose Poisson upper tail is at most
// tail_tol. Everything discarded (upper tail, plus a tail_tol*1e-6 budget of
// edge trims) lands in dropped_mass, so
//   dropped_mass <= tail_tol * (1 + 1e-6)
// always holds.

#include <cmath>
#include <cstdint>
#include <vector>

#include "convlab/lattice.hpp"

namespace convlab {

struct CompoundPoissonSpec {
  double lambda;
  LatticeDistribution base;
  double tail_tol = 1e-12;
};

namespace detail {

// Poisson weights for s in [s_min, s_min + weights.size()), built by the
// upward recursion p_{s+1} = p_s * lambda / (s+1). For lambda beyond the
// range of exp(-lambda) the recursion starts in log space and hands over to
// the linear recursion at the first representable weight. The recursion makes
// the unimodality inequalities p(s) >= p(s+1) for s+1 >= lambda and
// p(s) >= p(s-1) for lambda >= s hold exactly on the computed values.
struct PoissonWindow {
  std::int64_t s_min = 0;
  std::vector<double> weights;
  double left_dropped = 0.0;   // mass of [0, s_min)
  double tail_dropped = 0.0;   // mass beyond the last retained s
};

inline PoissonWindow poisson_window(double lambda, double tail_tol,
                                    double left_budget) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("poisson: lambda must be finite and >= 0");
  if (!(tail_tol > 0.0 && tail_tol < 1.0))
    throw std::invalid_argument("poisson: tail_tol must lie in (0, 1)");
  PoissonWindow out;
  if (lambda == 0.0) {
    out.weights = {1.0};
    return out;
  }
  std::vector<double>& w = out.weights;
  if (lambda <= 700.0) {
    // exp(-lambda) is representable: plain upward recursion from s = 0
    std::int64_t s = 0;
    double p = std::exp(-lambda);
    long double cum = 0.0L;
    while (true) {
      w.push_back(p);
      cum += p;
      if (static_cast<double>(1.0L - cum) <= tail_tol) break;
      p = p * lambda / static_cast<double>(s + 1);
      ++s;
      if (p == 0.0) break;  // tail below representability
    }
    out.tail_dropped = std::max(0.0, static_cast<double>(1.0L - cum));
  } else {
    // Pivot at the mode with an arbitrary anchor and normalize by the window
    // sum; anchoring by an absolute log-space value would smear accumulated
    // log() rounding over every weight and break the tail certificate.
    const auto mode = static_cast<std::int64_t>(lambda);
    constexpr double kRelFloor = 1e-24;
    std::vector<double> down;
    double u = 1.0;
    for (std::int64_t s = mode; s > 0 && u >= kRelFloor; --s) {
      u = u * static_cast<double>(s) / lambda;
      down.push_back(u);
    }
    w.assign(down.rbegin(), down.rend());
    out.s_min = mode - static_cast<std::int64_t>(down.size());
    w.push_back(1.0);
    std::int64_t s = mode;
    u = 1.0;
    std::vector<double> up;
    while (u >= kRelFloor) {
      u = u * lambda / static_cast<double>(s + 1);
      ++s;
      up.push_back(u);
    }
    w.insert(w.end(), up.begin(), up.end());
    long double total = 0.0L;
    for (double v : w) total += v;
    // Smallest upper cut whose relative tail mass is at most tail_tol.
    long double tail = 0.0L;
    std::size_t keep = w.size();
    while (keep > 1 &&
           static_cast<double>((tail + w[keep - 1]) / total) <= tail_tol) {
      tail += w[keep - 1];
      --keep;
    }
    w.resize(keep);
    out.tail_dropped = static_cast<double>(tail / total);
    for (double& v : w) v = static_cast<double>(v / total);
  }
  // Left trim within the given budget keeps supports tight without breaking
  // the dropped-mass certificate.
  long double trimmed = 0.0L;
  std::size_t cut = 0;
  while (cut + 1 < w.size() &&
         static_cast<double>(trimmed + w[cut]) <= left_budget &&
         static_cast<double>(out.s_min + static_cast<std::int64_t>(cut)) < lambda) {
    trimmed += w[cut];
    ++cut;
  }
  if (cut > 0) {
    w.erase(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(cut));
    out.s_min += static_cast<std::int64_t>(cut);
    out.left_dropped = static_cast<double>(trimmed);
  }
  return out;
}

// Trim the edges of a raw weight window, spending at most budget of mass.
// Returns the trimmed amount; start_index advances past removed leading atoms.
inline long double trim_window_edges(std::vector<double>& w,
                                     std::int64_t& start_index, double budget) {
  long double trimmed = 0.0L;
  std::size_t lo = 0, hi = w.size();
  double left = budget * 0.5, right = budget * 0.5;
  while (lo + 1 < hi && static_cast<double>(trimmed) + w[lo] <= left) {
    trimmed += w[lo];
    ++lo;
  }
  long double right_sum = 0.0L;
  while (hi > lo + 1 && static_cast<double>(right_sum) + w[hi - 1] <= right) {
    right_sum += w[hi - 1];
    --hi;
  }
  trimmed += right_sum;
  if (lo > 0 || hi < w.size()) {
    w = std::vector<double>(w.begin() + static_cast<std::ptrdiff_t>(lo),
                            w.begin() + static_cast<std::ptrdiff_t>(hi));
    start_index += static_cast<std::int64_t>(lo);
  }
  return trimmed;
}

}  // namespace detail

/// Poisson law with parameter lambda, truncated where the upper tail drops
/// below tail_tol; the discarded mass is recorded in dropped_mass.
inline LatticeDistribution poisson(double lambda, double tail_tol = 1e-12) {
  auto win = detail::poisson_window(lambda, tail_tol, tail_tol * 1e-6 * 0.5);
  const double step = win.weights.size() > 1 ? 1.0 : 0.0;
  return LatticeDistribution(static_cast<double>(win.s_min), step,
                             std::move(win.weights),
                             win.left_dropped + win.tail_dropped,
                             /*trim_floor=*/0.0);
}

/// e(lambda F): Poisson mixture of convolution powers of the base law,
/// accumulated Horner style (one convolution per series term). The result
/// lives on the lattice generated by the base support.
inline LatticeDistribution compound_poisson(
    const CompoundPoissonSpec& spec,
    std::size_t atom_budget = kDefaultAtomBudget) {
  const double lambda = spec.lambda;
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("compound_poisson: lambda must be >= 0");
  if (!(spec.tail_tol > 0.0 && spec.tail_tol < 1.0))
    throw std::invalid_argument("compound_poisson: tail_tol must lie in (0, 1)");
  const LatticeDistribution& base = spec.base;
  if (lambda == 0.0) return delta(0.0);
  if (base.size() == 1 && positions_equal(base.offset(), 0.0) &&
      base.dropped_mass() == 0.0)
    return delta(0.0);  // e(lambda E_0) = E_0, the series sums exactly

  const double trim_budget = spec.tail_tol * 1e-6;
  auto win = detail::poisson_window(lambda, spec.tail_tol, trim_budget * 0.25);
  const std::int64_t s_max =
      win.s_min + static_cast<std::int64_t>(win.weights.size()) - 1;

  // Lattice generated by the base: atom k of F^s sits at index
  // s*offset_num + k*step_num on the pitch-g grid.
  double g;
  std::int64_t offset_num = 0, step_num = 0;
  if (base.step() == 0.0) {
    if (positions_equal(base.offset(), 0.0)) {
      g = 1.0;  // single atom at zero with dropped mass: only thinning remains
      offset_num = 0;
    } else {
      g = std::fabs(base.offset());
      offset_num = base.offset() < 0.0 ? -1 : 1;
    }
  } else if (positions_equal(base.offset(), 0.0)) {
    g = base.step();
    step_num = 1;
  } else {
    const double rel = base.offset() / base.step();
    auto ab = to_rational(rel, kMaxSnapDenominator,
                          kPositionSnap * std::max(1.0, std::fabs(rel)));
    if (!ab)
      throw IncommensurableError(
          "compound_poisson: base offset is not commensurable with its step");
    g = base.step() / static_cast<double>(ab->second);
    offset_num = ab->first;
    step_num = ab->second;
  }
  const std::int64_t last_k = static_cast<std::int64_t>(base.size()) - 1;
  const std::int64_t base_lo = offset_num;                       // fine index of leftmost base atom
  const std::int64_t base_hi = offset_num + step_num * last_k;   // fine index of rightmost
  const std::int64_t idx_min = s_max * std::min<std::int64_t>(0, base_lo);
  const std::int64_t idx_max = s_max * std::max<std::int64_t>(0, base_hi);
  const auto span = static_cast<std::size_t>(idx_max - idx_min) + 1;
  if (span > atom_budget) throw AtomBudgetError(span, atom_budget);

  std::vector<long double> acc(span, 0.0L);
  // Running convolution power base^s, kept on the base's own step lattice:
  // atom m of base^s sits at fine index s*offset_num + (pw_start + m)*step_num.
  std::vector<double> pw = {1.0};
  std::int64_t pw_start = 0;
  long double pw_mass = 1.0L;
  long double dropped = win.left_dropped + win.tail_dropped;
  const double step_budget =
      trim_budget * 0.25 / static_cast<double>(s_max + 1);

  const auto& bw = base.weights();
  const long double base_total = base.total_mass();
  for (std::int64_t s = 0; s <= s_max; ++s) {
    if (s >= win.s_min) {
      const double ws = win.weights[static_cast<std::size_t>(s - win.s_min)];
      const std::int64_t fine_base = s * offset_num + pw_start * step_num - idx_min;
      for (std::size_t i = 0; i < pw.size(); ++i)
        acc[static_cast<std::size_t>(
            fine_base + step_num * static_cast<std::int64_t>(i))] +=
            static_cast<long double>(ws) * pw[i];
      dropped += static_cast<long double>(ws) * (1.0L - pw_mass);
    }
    if (s == s_max) break;
    // advance pw to base^(s+1)
    std::vector<long double> next_acc(
        pw.size() + static_cast<std::size_t>(last_k), 0.0L);
    for (std::size_t k = 0; k < bw.size(); ++k) {
      const long double wb = bw[k];
      if (wb == 0.0L) continue;
      for (std::size_t i = 0; i < pw.size(); ++i)
        next_acc[i + k] += wb * pw[i];
    }
    pw.assign(next_acc.begin(), next_acc.end());
    pw_mass *= base_total;
    pw_mass -= detail::trim_window_edges(pw, pw_start, step_budget);
  }

  std::vector<double> weights(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i)
    weights[i] = static_cast<double>(acc[i]);
  std::int64_t w_start = idx_min;
  dropped += detail::trim_window_edges(weights, w_start, trim_budget * 0.5);
  const bool single = weights.size() == 1;
  return LatticeDistribution(static_cast<double>(w_start) * g, single ? 0.0 : g,
                             std::move(weights), static_cast<double>(dropped),
                             /*trim_floor=*/0.0);
}

inline LatticeDistribution compound_poisson(
    double lambda, const LatticeDistribution& base, double tail_tol = 1e-12,
    std::size_t atom_budget = kDefaultAtomBudget) {
  return compound_poisson(CompoundPoissonSpec{lambda, base, tail_tol},
                          atom_budget);
}

}  // namespace convlab
