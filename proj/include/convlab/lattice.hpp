#pragma once

// Exact arithmetic on finitely supported one-dimensional distributions whose
// atoms sit on an affine lattice {offset + k*step}. All values are immutable
// after construction and every operation is a pure function, so instances can
// be shared freely across threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace convlab {

// Two atom positions are identified when they differ by at most this,
// relative to max(1, |x|).
inline constexpr double kPositionSnap = 1e-12;

// Tolerance on |total mass + dropped mass - 1|.
inline constexpr double kMassTolerance = 1e-12;

// Relative weight floor: edge atoms below kWeightFloor * total may be moved
// into dropped_mass at canonicalization.
inline constexpr double kWeightFloor = 1e-16;

// Largest denominator tried when reconstructing step ratios as rationals.
inline constexpr std::int64_t kMaxSnapDenominator = 1000000;

// Hard cap on the dense support size any single operation may allocate.
inline constexpr std::size_t kDefaultAtomBudget = 10000000;

class AtomBudgetError : public std::runtime_error {
 public:
  AtomBudgetError(std::size_t requested, std::size_t budget)
      : std::runtime_error("support of " + std::to_string(requested) +
                           " atoms exceeds the atom budget of " +
                           std::to_string(budget)),
        requested_(requested),
        budget_(budget) {}
  std::size_t requested() const { return requested_; }
  std::size_t budget() const { return budget_; }

 private:
  std::size_t requested_;
  std::size_t budget_;
};

class IncommensurableError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline double snap_eps(double x) {
  return kPositionSnap * std::max(1.0, std::fabs(x));
}

inline bool positions_equal(double a, double b) {
  return std::fabs(a - b) <=
         kPositionSnap * std::max({1.0, std::fabs(a), std::fabs(b)});
}

// Continued-fraction reconstruction of x as p/q with q <= max_den and
// |x - p/q| <= tol. Returns nothing when no such fraction exists.
inline std::optional<std::pair<std::int64_t, std::int64_t>> to_rational(
    double x, std::int64_t max_den, double tol) {
  if (!std::isfinite(x)) return std::nullopt;
  std::int64_t p_prev = 1, q_prev = 0;
  std::int64_t p_cur = static_cast<std::int64_t>(std::floor(x)), q_cur = 1;
  double frac = x - std::floor(x);
  for (int iter = 0; iter < 64; ++iter) {
    if (std::fabs(x - static_cast<double>(p_cur) / static_cast<double>(q_cur)) <= tol)
      return std::make_pair(p_cur, q_cur);
    if (frac <= tol) break;
    double inv = 1.0 / frac;
    if (inv > 9.0e15) break;
    std::int64_t a = static_cast<std::int64_t>(std::floor(inv));
    frac = inv - std::floor(inv);
    std::int64_t p_next = a * p_cur + p_prev;
    std::int64_t q_next = a * q_cur + q_prev;
    if (q_next > max_den || q_next <= 0) break;
    p_prev = p_cur;
    q_prev = q_cur;
    p_cur = p_next;
    q_cur = q_next;
  }
  if (std::fabs(x - static_cast<double>(p_cur) / static_cast<double>(q_cur)) <= tol)
    return std::make_pair(p_cur, q_cur);
  return std::nullopt;
}

/// Finite discrete measure on an affine lattice. Index k carries the atom at
/// offset + k*step. dropped_mass accounts for everything a truncation has
/// discarded, so total_mass() + dropped_mass() stays within kMassTolerance
/// of one.
class LatticeDistribution {
 public:
  LatticeDistribution(double offset, double step, std::vector<double> weights,
                      double dropped_mass = 0.0,
                      double trim_floor = kWeightFloor)
      : offset_(offset), step_(step), dropped_(dropped_mass),
        weights_(std::move(weights)) {
    if (!std::isfinite(offset_) || !std::isfinite(step_) || step_ < 0.0)
      throw std::invalid_argument("lattice offset/step must be finite, step >= 0");
    if (weights_.empty())
      throw std::invalid_argument("a distribution needs at least one atom");
    if (!(dropped_ >= 0.0) || dropped_ > 1.0 + kMassTolerance)
      throw std::invalid_argument("dropped_mass outside [0, 1]");
    long double raw_total = 0.0L;
    for (double w : weights_) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw std::invalid_argument("weights must be finite and non-negative");
      raw_total += w;
    }
    const double floor_abs =
        trim_floor > 0.0 ? trim_floor * static_cast<double>(raw_total) : 0.0;
    std::size_t lo = 0, hi = weights_.size();
    long double trimmed = 0.0L;
    while (lo < hi && (weights_[lo] == 0.0 || weights_[lo] < floor_abs))
      trimmed += weights_[lo++];
    while (hi > lo && (weights_[hi - 1] == 0.0 || weights_[hi - 1] < floor_abs))
      trimmed += weights_[--hi];
    if (lo == hi)
      throw std::invalid_argument("all mass trimmed; degenerate distribution");
    if (lo > 0 || hi < weights_.size()) {
      offset_ += static_cast<double>(lo) * step_;
      weights_ = std::vector<double>(weights_.begin() + static_cast<std::ptrdiff_t>(lo),
                                     weights_.begin() + static_cast<std::ptrdiff_t>(hi));
      dropped_ += static_cast<double>(trimmed);
    }
    if (weights_.size() == 1) {
      step_ = 0.0;
    } else if (step_ == 0.0) {
      throw std::invalid_argument("step must be positive for multi-atom supports");
    }
    prefix_.resize(weights_.size());
    long double run = 0.0L;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      run += weights_[i];
      prefix_[i] = static_cast<double>(run);
    }
    total_ = static_cast<double>(run);
    if (std::fabs(total_ + dropped_ - 1.0) > kMassTolerance)
      throw std::invalid_argument("total mass + dropped mass must be 1 within 1e-12");
  }

  double offset() const { return offset_; }
  double step() const { return step_; }
  const std::vector<double>& weights() const { return weights_; }
  double dropped_mass() const { return dropped_; }
  std::size_t size() const { return weights_.size(); }
  double position(std::size_t k) const {
    return offset_ + static_cast<double>(k) * step_;
  }
  double min_position() const { return offset_; }
  double max_position() const { return position(weights_.size() - 1); }
  double total_mass() const { return total_; }

  /// Weight of the atom snapped to x, 0 when no atom sits there.
  double mass_at(double x) const {
    if (step_ == 0.0)
      return positions_equal(offset_, x) ? weights_[0] : 0.0;
    double k = std::round((x - offset_) / step_);
    if (k < 0.0 || k >= static_cast<double>(weights_.size())) return 0.0;
    auto idx = static_cast<std::size_t>(k);
    return positions_equal(position(idx), x) ? weights_[idx] : 0.0;
  }

  /// Right-continuous distribution function: mass of (-inf, x], with x
  /// snapped so atoms within kPositionSnap of x count as <= x.
  double cdf(double x) const {
    if (!std::isfinite(x)) return x > 0 ? total_ : 0.0;
    std::ptrdiff_t idx = index_at_or_below(x + snap_eps(x));
    return idx < 0 ? 0.0 : prefix_[static_cast<std::size_t>(idx)];
  }

  /// Mass of the open half-line (-inf, x).
  double cdf_below(double x) const {
    if (!std::isfinite(x)) return x > 0 ? total_ : 0.0;
    std::ptrdiff_t idx = index_at_or_below(x - snap_eps(x));
    return idx < 0 ? 0.0 : prefix_[static_cast<std::size_t>(idx)];
  }

  double mean() const {
    long double m = 0.0L;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      m += static_cast<long double>(weights_[i]) * position(i);
    return static_cast<double>(m / total_);
  }

  double variance() const {
    const double mu = mean();
    long double v = 0.0L;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      long double d = position(i) - mu;
      v += static_cast<long double>(weights_[i]) * d * d;
    }
    return static_cast<double>(v / total_);
  }

  /// Atomwise comparison: same snapped positions, weights within weight_tol.
  bool same_atoms(const LatticeDistribution& other, double weight_tol) const {
    if (weights_.size() != other.weights_.size()) return false;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
      if (!positions_equal(position(i), other.position(i))) return false;
      if (std::fabs(weights_[i] - other.weights_[i]) > weight_tol) return false;
    }
    return true;
  }

 private:
  // Largest index whose position is <= x, -1 when below the support.
  std::ptrdiff_t index_at_or_below(double x) const {
    if (x < offset_) return -1;
    if (step_ == 0.0) return 0;
    double k = std::floor((x - offset_) / step_);
    if (k < 0.0) return -1;
    auto idx = static_cast<std::ptrdiff_t>(k);
    auto last = static_cast<std::ptrdiff_t>(weights_.size()) - 1;
    if (idx > last) return last;
    // Guard against rounding right at an atom.
    while (idx + 1 <= last && position(static_cast<std::size_t>(idx + 1)) <= x)
      ++idx;
    while (idx >= 0 && position(static_cast<std::size_t>(idx)) > x) --idx;
    return idx;
  }

  double offset_ = 0.0;
  double step_ = 0.0;
  double dropped_ = 0.0;
  double total_ = 0.0;
  std::vector<double> weights_;
  std::vector<double> prefix_;
};

/// Point mass at a.
inline LatticeDistribution delta(double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("delta: position must be finite");
  return LatticeDistribution(a, 0.0, {1.0});
}

namespace detail {

// Common refinement of the supports of F and G: every atom of either input
// lands on {origin + i*step}. Index maps are exact integer arithmetic.
struct UnionLayout {
  double origin = 0.0;
  double step = 0.0;
  std::int64_t f_base = 0, f_stride = 0;
  std::int64_t g_base = 0, g_stride = 0;
  std::size_t size = 0;
};

// Base pitch dividing both steps (offset alignment not required).
inline double common_step(double step_f, double step_g) {
  if (step_f == 0.0 && step_g == 0.0) return 0.0;
  if (step_f == 0.0) return step_g;
  if (step_g == 0.0) return step_f;
  const double ratio = step_f / step_g;
  auto pq = to_rational(ratio, kMaxSnapDenominator,
                        kPositionSnap * std::max(1.0, ratio));
  if (!pq || pq->first <= 0)
    throw IncommensurableError("lattice steps have no rational ratio within tolerance");
  const double t = step_g / static_cast<double>(pq->second);
  if (std::fabs(step_f - static_cast<double>(pq->first) * t) >
      kPositionSnap * std::max(1.0, step_f))
    throw IncommensurableError("lattice steps fail to align within tolerance");
  return t;
}

inline UnionLayout align_union(const LatticeDistribution& F,
                               const LatticeDistribution& G) {
  UnionLayout out;
  if (F.step() == 0.0 && G.step() == 0.0) {
    if (positions_equal(F.offset(), G.offset())) {
      out.origin = F.offset();
      out.step = 0.0;
      out.size = 1;
      return out;
    }
    out.step = std::fabs(G.offset() - F.offset());
    out.origin = std::min(F.offset(), G.offset());
    out.f_base = F.offset() < G.offset() ? 0 : 1;
    out.g_base = 1 - out.f_base;
    out.size = 2;
    return out;
  }
  double t = common_step(F.step(), G.step());
  const double d = G.offset() - F.offset();
  double refine = 1.0;
  std::int64_t shift_num = 0;
  if (!positions_equal(d, 0.0)) {
    const double rel = d / t;
    auto ab = to_rational(rel, kMaxSnapDenominator,
                          kPositionSnap * std::max(1.0, std::fabs(rel)));
    if (!ab)
      throw IncommensurableError("lattice offsets are not commensurable with the step");
    refine = static_cast<double>(ab->second);
    shift_num = ab->first;
  }
  const double g = t / refine;
  const auto f_stride = F.step() == 0.0 ? std::int64_t{0}
                        : static_cast<std::int64_t>(std::llround(F.step() / g));
  const auto g_stride = G.step() == 0.0 ? std::int64_t{0}
                        : static_cast<std::int64_t>(std::llround(G.step() / g));
  if (F.step() > 0.0 &&
      std::fabs(F.step() - static_cast<double>(f_stride) * g) > snap_eps(F.step()))
    throw IncommensurableError("left lattice fails to embed in the refinement");
  if (G.step() > 0.0 &&
      std::fabs(G.step() - static_cast<double>(g_stride) * g) > snap_eps(G.step()))
    throw IncommensurableError("right lattice fails to embed in the refinement");
  if (std::fabs(d - static_cast<double>(shift_num) * g) >
      kPositionSnap * std::max({1.0, std::fabs(F.offset()), std::fabs(G.offset())}))
    throw IncommensurableError("lattice offsets fail to align within tolerance");
  const std::int64_t min_idx = std::min<std::int64_t>(0, shift_num);
  out.step = g;
  out.origin = F.offset() + static_cast<double>(min_idx) * g;
  out.f_base = -min_idx;
  out.f_stride = f_stride;
  out.g_base = shift_num - min_idx;
  out.g_stride = g_stride;
  const std::int64_t top =
      std::max(out.f_base + f_stride * static_cast<std::int64_t>(F.size() - 1),
               out.g_base + g_stride * static_cast<std::int64_t>(G.size() - 1));
  out.size = static_cast<std::size_t>(top) + 1;
  return out;
}

struct ConvLayout {
  double origin = 0.0;
  double step = 0.0;
  std::int64_t f_stride = 0, g_stride = 0;
  std::size_t size = 0;
};

inline ConvLayout align_convolution(const LatticeDistribution& F,
                                    const LatticeDistribution& G) {
  ConvLayout out;
  out.origin = F.offset() + G.offset();
  const double g = common_step(F.step(), G.step());
  out.step = g;
  if (g == 0.0) {
    out.size = 1;
    return out;
  }
  out.f_stride = F.step() == 0.0 ? 0
               : static_cast<std::int64_t>(std::llround(F.step() / g));
  out.g_stride = G.step() == 0.0 ? 0
               : static_cast<std::int64_t>(std::llround(G.step() / g));
  const std::int64_t top =
      out.f_stride * static_cast<std::int64_t>(F.size() - 1) +
      out.g_stride * static_cast<std::int64_t>(G.size() - 1);
  out.size = static_cast<std::size_t>(top) + 1;
  return out;
}

}  // namespace detail

/// (1-p)U + pV on the common refinement lattice of U and V.
inline LatticeDistribution mix(double p, const LatticeDistribution& U,
                               const LatticeDistribution& V,
                               std::size_t atom_budget = kDefaultAtomBudget) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("mix: p must lie in [0, 1]");
  auto layout = detail::align_union(U, V);
  if (layout.size > atom_budget) throw AtomBudgetError(layout.size, atom_budget);
  if (p == 0.0) return U;
  if (p == 1.0) return V;
  std::vector<long double> acc(layout.size, 0.0L);
  for (std::size_t i = 0; i < U.size(); ++i)
    acc[static_cast<std::size_t>(layout.f_base +
                                 layout.f_stride * static_cast<std::int64_t>(i))] +=
        static_cast<long double>(1.0 - p) * U.weights()[i];
  for (std::size_t i = 0; i < V.size(); ++i)
    acc[static_cast<std::size_t>(layout.g_base +
                                 layout.g_stride * static_cast<std::int64_t>(i))] +=
        static_cast<long double>(p) * V.weights()[i];
  std::vector<double> w(acc.begin(), acc.end());
  // exact complement of the kept mass, so accounting never drifts
  const long double kept = (1.0L - static_cast<long double>(p)) * U.total_mass() +
                           static_cast<long double>(p) * V.total_mass();
  const double dropped = static_cast<double>(std::max(0.0L, 1.0L - kept));
  return LatticeDistribution(layout.origin, layout.step, std::move(w), dropped);
}

/// Exact convolution; total mass multiplies. The dropped mass becomes the
/// exact complement of the product mass (equal to the additive rule
/// dF + dG to first order, but free of drift across long convolution
/// chains, where additively propagated residuals would compound).
inline LatticeDistribution convolve(const LatticeDistribution& F,
                                    const LatticeDistribution& G,
                                    std::size_t atom_budget = kDefaultAtomBudget,
                                    double trim_floor = kWeightFloor) {
  auto layout = detail::align_convolution(F, G);
  if (layout.size > atom_budget) throw AtomBudgetError(layout.size, atom_budget);
  std::vector<long double> acc(layout.size, 0.0L);
  const auto& fw = F.weights();
  const auto& gw = G.weights();
  for (std::size_t i = 0; i < fw.size(); ++i) {
    const long double wi = fw[i];
    if (wi == 0.0L) continue;
    const std::int64_t base = layout.f_stride * static_cast<std::int64_t>(i);
    for (std::size_t j = 0; j < gw.size(); ++j)
      acc[static_cast<std::size_t>(base + layout.g_stride * static_cast<std::int64_t>(j))] +=
          wi * gw[j];
  }
  std::vector<double> w(acc.begin(), acc.end());
  const long double kept =
      static_cast<long double>(F.total_mass()) * G.total_mass();
  const double dropped = static_cast<double>(std::max(0.0L, 1.0L - kept));
  return LatticeDistribution(layout.origin, layout.step, std::move(w), dropped,
                             trim_floor);
}

/// n-fold convolution power by binary exponentiation; power(F, 0) = delta(0).
inline LatticeDistribution power(const LatticeDistribution& F, std::uint64_t n,
                                 std::size_t atom_budget = kDefaultAtomBudget) {
  if (n == 0) return delta(0.0);
  std::optional<LatticeDistribution> result;
  LatticeDistribution base = F;
  while (true) {
    if (n & 1u)
      result = result ? convolve(*result, base, atom_budget) : base;
    n >>= 1u;
    if (n == 0) break;
    base = convolve(base, base, atom_budget);
  }
  return *result;
}

/// Translate every atom by a (convolution with the point mass at a).
inline LatticeDistribution shift(const LatticeDistribution& F, double a) {
  if (!std::isfinite(a)) throw std::invalid_argument("shift: offset must be finite");
  return LatticeDistribution(F.offset() + a, F.step(), F.weights(),
                             F.dropped_mass(), 0.0);
}

/// Law of -X: atom x goes to -x, weights reverse.
inline LatticeDistribution reflect(const LatticeDistribution& F) {
  std::vector<double> w(F.weights().rbegin(), F.weights().rend());
  return LatticeDistribution(-F.max_position(), F.step(), std::move(w),
                             F.dropped_mass(), 0.0);
}

/// Law of c*X for c != 0.
inline LatticeDistribution scale(const LatticeDistribution& F, double c) {
  if (!std::isfinite(c) || c == 0.0)
    throw std::invalid_argument("scale: factor must be finite and non-zero");
  if (c < 0.0) return scale(reflect(F), -c);
  return LatticeDistribution(F.offset() * c, F.step() * c, F.weights(),
                             F.dropped_mass(), 0.0);
}

inline double cdf(const LatticeDistribution& F, double x) { return F.cdf(x); }

struct IntervalClosure {
  bool lo_closed = true;
  bool hi_closed = true;
};

/// Exact mass of the interval between lo and hi with the given endpoint
/// closures.
inline double mass_of_interval(const LatticeDistribution& F, double lo,
                               double hi, IntervalClosure closure = {}) {
  if (!(lo <= hi)) throw std::invalid_argument("mass_of_interval: lo > hi");
  const double upper = closure.hi_closed ? F.cdf(hi) : F.cdf_below(hi);
  const double lower = closure.lo_closed ? F.cdf_below(lo) : F.cdf(lo);
  return std::max(0.0, upper - lower);
}

}  // namespace convlab
