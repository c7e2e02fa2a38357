#pragma once

// Distances between finitely supported one-dimensional distributions, each
// returned with a certified bracket:
//   - total variation and Kolmogorov by direct union-support scans,
//   - Levy by bisection over the two-sided corridor condition, checked only
//     at the finitely many critical points,
//   - Levy-Prokhorov via the coupling characterization (pi <= eps iff a
//     sub-coupling moves mass >= 1 - eps across pairs within distance eps),
//     decided by bipartite max-flow inside an outer bisection,
//   - one-sided certificates pi > eps from an explicit witness set,
//   - the sup over shifts of the mass of a lattice neighborhood.
// Neighborhoods and windows are closed; set and window comparisons share one
// snapping convention so chained inequalities hold on computed values.

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "convlab/lattice.hpp"
#include "convlab/max_flow.hpp"

namespace convlab {

// Window-membership snap, relative to the pitch. Coarser than kPositionSnap:
// folded positions inherit rounding from positions up to ~1e4 in magnitude.
inline constexpr double kFoldSnap = 1e-9;

// Feasibility slack of the floating-point flow solver, folded into brackets.
inline constexpr double kFlowSlack = 1e-12;

struct MetricResult {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string method;
  int iterations = 0;
};

struct CouplingWitness {
  struct Pair {
    std::size_t f_index;
    std::size_t g_index;
    double mass;
  };
  std::vector<Pair> pairs;
  double unmatched = 1.0;
};

struct FlowCaps {
  std::size_t max_nodes = 20000;
  std::size_t max_edges = 4000000;
};

class FlowCapError : public std::runtime_error {
 public:
  explicit FlowCapError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

struct MergedAtom {
  double position;
  double f_mass;
  double g_mass;
};

inline std::vector<MergedAtom> merge_supports(const LatticeDistribution& F,
                                              const LatticeDistribution& G) {
  std::vector<MergedAtom> out;
  out.reserve(F.size() + G.size());
  std::size_t i = 0, j = 0;
  while (i < F.size() || j < G.size()) {
    if (i < F.size() && j < G.size() &&
        positions_equal(F.position(i), G.position(j))) {
      out.push_back({F.position(i), F.weights()[i], G.weights()[j]});
      ++i;
      ++j;
    } else if (j >= G.size() ||
               (i < F.size() && F.position(i) < G.position(j))) {
      out.push_back({F.position(i), F.weights()[i], 0.0});
      ++i;
    } else {
      out.push_back({G.position(j), 0.0, G.weights()[j]});
      ++j;
    }
  }
  return out;
}

}  // namespace detail

/// Total variation distance: half the l1 distance between the weight
/// functions on the union support. Dropped mass widens the bracket.
inline MetricResult total_variation(const LatticeDistribution& F,
                                    const LatticeDistribution& G) {
  long double sum = 0.0L;
  auto merged = detail::merge_supports(F, G);
  for (const auto& a : merged) sum += std::fabs(a.f_mass - a.g_mass);
  const double value = static_cast<double>(sum / 2.0L);
  const double slack = 0.5 * (F.dropped_mass() + G.dropped_mass());
  return {value, std::max(0.0, value - slack), std::min(1.0, value + slack),
          "union-scan", static_cast<int>(merged.size())};
}

/// Kolmogorov distance: sup over the union support of |F(x) - G(x)|.
inline MetricResult kolmogorov_distance(const LatticeDistribution& F,
                                        const LatticeDistribution& G) {
  auto merged = detail::merge_supports(F, G);
  long double cf = 0.0L, cg = 0.0L;
  double best = 0.0;
  for (const auto& a : merged) {
    cf += a.f_mass;
    cg += a.g_mass;
    best = std::max(best, std::fabs(static_cast<double>(cf - cg)));
  }
  const double slack = F.dropped_mass() + G.dropped_mass();
  return {best, std::max(0.0, best - slack), std::min(1.0, best + slack),
          "cdf-scan", static_cast<int>(merged.size())};
}

namespace detail {

// One side of the Levy corridor: A(x - eps) - eps <= B(x) for all x. The sup
// of A(x - eps) - B(x) over x is attained either at x = a + eps (a an atom of
// A, right-continuous values) or approaching an atom of B from the left.
inline bool levy_side_ok(const LatticeDistribution& A,
                         const LatticeDistribution& B, double eps) {
  for (std::size_t i = 0; i < A.size(); ++i) {
    const double a = A.position(i);
    if (A.cdf(a) - eps > B.cdf(a + eps)) return false;
  }
  for (std::size_t j = 0; j < B.size(); ++j) {
    const double b = B.position(j);
    if (A.cdf_below(b - eps) - eps > B.cdf_below(b)) return false;
  }
  return true;
}

}  // namespace detail

/// Levy distance by bisection to absolute tolerance tol. The corridor
/// condition is evaluated only at critical points, which is sufficient for
/// right-continuous step functions; closed evaluation makes the infimum
/// attained.
inline MetricResult levy_distance(const LatticeDistribution& F,
                                  const LatticeDistribution& G,
                                  double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("levy_distance: tol must be > 0");
  const double slack = F.dropped_mass() + G.dropped_mass();
  auto ok = [&](double eps) {
    return detail::levy_side_ok(F, G, eps) && detail::levy_side_ok(G, F, eps);
  };
  int iterations = 1;
  if (ok(0.0))
    return {0.0, 0.0, std::min(1.0, slack), "bisection-cdf", iterations};
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    ++iterations;
    (ok(mid) ? hi : lo) = mid;
  }
  return {hi, std::max(0.0, lo - slack), std::min(1.0, hi + slack),
          "bisection-cdf", iterations};
}

namespace detail {

// Orientation key so prokhorov_distance(F, G) == prokhorov_distance(G, F)
// exactly: solve with the lexicographically smaller operand as the source.
inline bool flow_order_before(const LatticeDistribution& A,
                              const LatticeDistribution& B) {
  if (A.offset() != B.offset()) return A.offset() < B.offset();
  if (A.step() != B.step()) return A.step() < B.step();
  if (A.size() != B.size()) return A.size() < B.size();
  for (std::size_t i = 0; i < A.size(); ++i)
    if (A.weights()[i] != B.weights()[i]) return A.weights()[i] < B.weights()[i];
  return false;
}

struct FlowEvaluation {
  long double flow = 0.0L;
  std::vector<CouplingWitness::Pair> pairs;
};

// Max mass transportable across atom pairs within (closed) distance eps.
inline FlowEvaluation coupling_flow(const LatticeDistribution& F,
                                    const LatticeDistribution& G, double eps,
                                    const FlowCaps& caps, bool want_pairs) {
  const std::size_t nf = F.size(), ng = G.size();
  std::vector<double> gpos(ng);
  for (std::size_t j = 0; j < ng; ++j) gpos[j] = G.position(j);
  auto pair_within = [&](double x, double y) {
    return std::fabs(x - y) <=
           eps + kPositionSnap * std::max({1.0, std::fabs(x), std::fabs(y)});
  };
  // Count edges first so the cap is a clean error, not an allocation failure.
  std::size_t edge_count = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ranges(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    const double x = F.position(i);
    const double pad = eps + kPositionSnap * std::max(1.0, std::fabs(x)) + snap_eps(x);
    auto lo = std::lower_bound(gpos.begin(), gpos.end(), x - pad - 1e-9 * std::fabs(x));
    auto hi = std::upper_bound(gpos.begin(), gpos.end(), x + pad + 1e-9 * std::fabs(x));
    ranges[i] = {static_cast<std::size_t>(lo - gpos.begin()),
                 static_cast<std::size_t>(hi - gpos.begin())};
    edge_count += ranges[i].second - ranges[i].first;
  }
  if (edge_count > caps.max_edges)
    throw FlowCapError("coupling graph of " + std::to_string(edge_count) +
                       " edges exceeds the flow cap");
  const int source = 0;
  const int sink = static_cast<int>(nf + ng) + 1;
  MaxFlowSolver solver(static_cast<int>(nf + ng) + 2);
  for (std::size_t i = 0; i < nf; ++i)
    solver.add_edge(source, static_cast<int>(i) + 1, F.weights()[i]);
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> middle;
  std::size_t edge_index = static_cast<std::size_t>(nf);
  for (std::size_t i = 0; i < nf; ++i) {
    const double x = F.position(i);
    for (std::size_t j = ranges[i].first; j < ranges[i].second; ++j) {
      if (!pair_within(x, gpos[j])) continue;
      solver.add_edge(static_cast<int>(i) + 1,
                      static_cast<int>(nf + j) + 1, 2.0L);
      if (want_pairs) middle.emplace_back(i, j, edge_index);
      ++edge_index;
    }
  }
  for (std::size_t j = 0; j < ng; ++j)
    solver.add_edge(static_cast<int>(nf + j) + 1, sink, G.weights()[j]);
  FlowEvaluation out;
  out.flow = solver.run(source, sink);
  if (want_pairs) {
    for (const auto& [i, j, idx] : middle) {
      const double moved = static_cast<double>(solver.flow_on_edge(idx));
      if (moved > 1e-15)
        out.pairs.push_back({i, j, moved});
    }
  }
  return out;
}

// Largest pairwise distance between the supports that is <= limit.
inline double largest_breakpoint_below(const LatticeDistribution& F,
                                       const LatticeDistribution& G,
                                       double limit) {
  std::vector<double> gpos(G.size());
  for (std::size_t j = 0; j < G.size(); ++j) gpos[j] = G.position(j);
  double best = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double x = F.position(i);
    auto lo = std::lower_bound(gpos.begin(), gpos.end(), x - limit);
    if (lo != gpos.end() && x - *lo >= 0.0 && x - *lo <= limit)
      best = std::max(best, x - *lo);
    auto hi = std::upper_bound(gpos.begin(), gpos.end(), x + limit);
    if (hi != gpos.begin()) {
      const double y = *(hi - 1);
      if (y - x >= 0.0 && y - x <= limit) best = std::max(best, y - x);
    }
  }
  return best;
}

}  // namespace detail

/// Levy-Prokhorov distance with a certified bracket. Bisection on eps with a
/// max-flow feasibility oracle; after convergence the value snaps onto the
/// breakpoint structure (the flow value is constant between consecutive
/// pairwise distances, so pi = max(last breakpoint, 1 - flow) there). The
/// optional witness realizes the upper bound.
inline MetricResult prokhorov_distance(const LatticeDistribution& F,
                                       const LatticeDistribution& G,
                                       double tol = 1e-9, FlowCaps caps = {},
                                       CouplingWitness* witness = nullptr) {
  if (!(tol > 0.0)) throw std::invalid_argument("prokhorov_distance: tol must be > 0");
  if (detail::flow_order_before(G, F)) {
    MetricResult r = prokhorov_distance(G, F, tol, caps, nullptr);
    if (witness != nullptr) {
      CouplingWitness w;
      MetricResult again = prokhorov_distance(G, F, tol, caps, &w);
      witness->pairs.clear();
      for (const auto& p : w.pairs)
        witness->pairs.push_back({p.g_index, p.f_index, p.mass});
      witness->unmatched = w.unmatched;
      return again;
    }
    return r;
  }
  const std::size_t nodes = F.size() + G.size() + 2;
  if (nodes > caps.max_nodes)
    throw FlowCapError("coupling graph of " + std::to_string(nodes) +
                       " nodes exceeds the flow cap");
  const double slack = F.dropped_mass() + G.dropped_mass() + kFlowSlack;
  if (F.same_atoms(G, 0.0)) {
    if (witness != nullptr) {
      witness->pairs.clear();
      long double moved = 0.0L;
      for (std::size_t i = 0; i < F.size(); ++i) {
        witness->pairs.push_back({i, i, F.weights()[i]});
        moved += F.weights()[i];
      }
      witness->unmatched = std::max(0.0, static_cast<double>(1.0L - moved));
    }
    return {0.0, 0.0, std::min(1.0, slack), "identical", 0};
  }
  int iterations = 0;
  long double flow_hi = 0.0L;
  auto feasible = [&](double eps) {
    ++iterations;
    auto eval = detail::coupling_flow(F, G, eps, caps, false);
    const bool ok = static_cast<double>(eval.flow) >= 1.0 - eps - slack;
    if (ok) flow_hi = eval.flow;
    return ok;
  };
  const double max_gap =
      std::max(std::fabs(F.max_position() - G.min_position()),
               std::fabs(G.max_position() - F.min_position()));
  double lo = 0.0;
  double hi = std::min(1.0, max_gap);
  if (!feasible(hi)) {
    lo = hi;
    hi = 1.0;  // always feasible: nothing needs to move at eps = 1
    flow_hi = 0.0L;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  const double breakpoint = detail::largest_breakpoint_below(F, G, hi);
  double value = std::max(breakpoint, 1.0 - static_cast<double>(flow_hi) - slack);
  value = std::min(hi, std::max(value, lo));
  if (witness != nullptr) {
    auto eval = detail::coupling_flow(F, G, value, caps, true);
    witness->pairs = std::move(eval.pairs);
    witness->unmatched = std::max(0.0, static_cast<double>(1.0L - eval.flow));
  }
  return {value, std::max(0.0, lo - slack), std::min(1.0, value + slack),
          "bisection-maxflow", iterations};
}

// ---------------------------------------------------------------------------
// Borel-set descriptors for one-sided certificates.

/// Union over k of the closed windows [k*pitch + phase - halfwidth,
/// k*pitch + phase + halfwidth].
struct LatticeNeighborhood {
  double pitch;
  double phase = 0.0;
  double halfwidth = 0.0;
};

struct Interval {
  double lo;
  double hi;
  bool lo_closed = true;
  bool hi_closed = true;
};

struct IntervalUnion {
  std::vector<Interval> parts;
};

using BorelSet = std::variant<LatticeNeighborhood, IntervalUnion>;

inline double fold_position(double x, double pitch) {
  double r = std::fmod(x, pitch);
  if (r < 0.0) r += pitch;
  if (r >= pitch) r -= pitch;
  return r;
}

inline double set_mass(const LatticeDistribution& F, const BorelSet& X) {
  if (std::holds_alternative<LatticeNeighborhood>(X)) {
    const auto& L = std::get<LatticeNeighborhood>(X);
    if (!(L.pitch > 0.0) || !std::isfinite(L.pitch))
      throw std::invalid_argument("set_mass: degenerate pitch");
    if (!(L.halfwidth >= 0.0))
      throw std::invalid_argument("set_mass: negative halfwidth");
    const double snap = kFoldSnap * L.pitch;
    if (2.0 * L.halfwidth >= L.pitch - snap) return F.total_mass();
    long double sum = 0.0L;
    for (std::size_t i = 0; i < F.size(); ++i) {
      const double r = fold_position(F.position(i) - L.phase, L.pitch);
      const double dist = std::min(r, L.pitch - r);
      if (dist <= L.halfwidth + snap) sum += F.weights()[i];
    }
    return static_cast<double>(sum);
  }
  auto parts = std::get<IntervalUnion>(X).parts;
  std::sort(parts.begin(), parts.end(),
            [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> merged;
  for (const auto& p : parts) {
    if (!(p.lo <= p.hi)) throw std::invalid_argument("set_mass: interval with lo > hi");
    if (!merged.empty() && p.lo <= merged.back().hi + snap_eps(p.lo)) {
      if (p.hi > merged.back().hi) {
        merged.back().hi = p.hi;
        merged.back().hi_closed = p.hi_closed;
      }
    } else {
      merged.push_back(p);
    }
  }
  long double sum = 0.0L;
  for (const auto& p : merged)
    sum += mass_of_interval(F, p.lo, p.hi, {p.lo_closed, p.hi_closed});
  return static_cast<double>(sum);
}

/// Closed eps-neighborhood X^eps.
inline BorelSet enlarge(const BorelSet& X, double eps) {
  if (!(eps >= 0.0)) throw std::invalid_argument("enlarge: eps must be >= 0");
  if (std::holds_alternative<LatticeNeighborhood>(X)) {
    auto L = std::get<LatticeNeighborhood>(X);
    L.halfwidth += eps;
    return L;
  }
  auto U = std::get<IntervalUnion>(X);
  for (auto& p : U.parts) {
    p.lo -= eps;
    p.hi += eps;
    p.lo_closed = true;
    p.hi_closed = true;
  }
  return U;
}

/// True iff F{X} > G{X^eps} + eps, which certifies pi(F, G) > eps.
inline bool prokhorov_lower_bound(const LatticeDistribution& F,
                                  const LatticeDistribution& G,
                                  const BorelSet& X, double eps) {
  return set_mass(F, X) > set_mass(G, enlarge(X, eps)) + eps;
}

struct ShiftedWindowSup {
  double sup = 0.0;
  double argmax = 0.0;  // a maximizing shift, reported inside [0, pitch)
};

/// Exact sup over x of F{pitch*Z + x +- halfwidth}: fold the atoms modulo the
/// pitch; the window mass is piecewise constant in x with breakpoints where a
/// window edge meets an atom, and a maximizing closed window can always slide
/// until its left edge touches one.
inline ShiftedWindowSup sup_shifted_lattice_mass(const LatticeDistribution& F,
                                                 double pitch,
                                                 double halfwidth) {
  if (!(pitch > 0.0) || !std::isfinite(pitch))
    throw std::invalid_argument("sup_shifted_lattice_mass: degenerate pitch");
  if (!(halfwidth > 0.0 && halfwidth < 0.5 * pitch))
    throw std::invalid_argument(
        "sup_shifted_lattice_mass: halfwidth must lie in (0, pitch/2)");
  const double snap = kFoldSnap * pitch;
  std::vector<std::pair<double, double>> folded(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) {
    double r = fold_position(F.position(i), pitch);
    if (r > pitch - snap) r -= pitch;  // wrap-around cluster joins the origin
    folded[i] = {r, F.weights()[i]};
  }
  std::sort(folded.begin(), folded.end());
  const std::size_t n = folded.size();
  std::vector<double> pos(2 * n);
  std::vector<long double> prefix(2 * n + 1, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = folded[i].first;
    pos[n + i] = folded[i].first + pitch;
  }
  for (std::size_t i = 0; i < 2 * n; ++i)
    prefix[i + 1] = prefix[i] + folded[i % n].second;
  ShiftedWindowSup best;
  const double width = 2.0 * halfwidth + snap;
  for (std::size_t k = 0; k < n; ++k) {
    const auto end = static_cast<std::size_t>(
        std::upper_bound(pos.begin(), pos.end(), pos[k] + width) - pos.begin());
    const double mass = static_cast<double>(prefix[end] - prefix[k]);
    if (mass > best.sup) {
      best.sup = mass;
      best.argmax = fold_position(pos[k] + halfwidth, pitch);
    }
  }
  best.sup = std::min(best.sup, F.total_mass());
  return best;
}

}  // namespace convlab
