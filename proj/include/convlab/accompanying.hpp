#pragma once

// Triangular-array rows and their accompanying infinitely divisible laws.
// A row holds the summand distributions of one row of the array, written as
// two-point mixtures (1-p)U + pV with U concentrated on [-tau, tau]. The row
// convolution is the law of the row sum; the accompanying law is the product
// over summands of shift(e(shift(F_k, -c_k)), c_k), where the centering
// constants c_k come from one of three rules: the tau-truncated mean of F_k,
// the mean of U_k, or explicit constants. Rows with repeated identical
// summands collapse through e(H)^n = e(n H), one compound evaluation at
// intensity n.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "convlab/compound_poisson.hpp"
#include "convlab/lattice.hpp"
#include "convlab/metrics.hpp"
#include "convlab/serialize.hpp"

namespace convlab {

/// One summand's decomposition (1-p)U + pV with U supported in [-tau, tau].
struct MixtureComponent {
  double p;
  LatticeDistribution U;
  LatticeDistribution V;
  double tau = 0.0;
};

inline void validate_component(const MixtureComponent& c) {
  if (!(c.p >= 0.0 && c.p <= 1.0))
    throw std::invalid_argument("mixture component: p must lie in [0, 1]");
  if (!(c.tau >= 0.0))
    throw std::invalid_argument("mixture component: tau must be >= 0");
  const double pad = snap_eps(c.tau);
  if (c.U.min_position() < -c.tau - pad || c.U.max_position() > c.tau + pad)
    throw std::invalid_argument(
        "mixture component: U must be concentrated on [-tau, tau]");
}

inline LatticeDistribution component_distribution(const MixtureComponent& c) {
  return mix(c.p, c.U, c.V);
}

/// A block of `count` identical summands.
struct RowEntry {
  MixtureComponent component;
  std::int64_t count = 1;
};

/// Row j of the triangular array.
struct ArrayRow {
  int j = 0;
  std::int64_t n = 0;        // number of summands
  std::vector<RowEntry> entries;
  double p_j = 0.0;          // max_k p_k
  double tau_j = 0.0;        // common support radius of the U_k
};

inline ArrayRow make_row(int j, std::vector<RowEntry> entries) {
  ArrayRow row;
  row.j = j;
  row.entries = std::move(entries);
  for (const auto& e : row.entries) {
    validate_component(e.component);
    if (e.count <= 0)
      throw std::invalid_argument("array row: entry count must be positive");
    row.n += e.count;
    row.p_j = std::max(row.p_j, e.component.p);
    row.tau_j = std::max(row.tau_j, e.component.tau);
  }
  if (row.entries.empty())
    throw std::invalid_argument("array row: at least one summand required");
  return row;
}

/// Row with n copies of (1 - 1/j) E_0 + (1/j) E_1 (tau_j = 0).
inline ArrayRow example1_row(int j, std::int64_t n) {
  if (j < 2) throw std::invalid_argument("example1_row: j must be >= 2");
  const double p = 1.0 / j;
  return make_row(j, {{MixtureComponent{p, delta(0.0), delta(1.0), 0.0}, n}});
}

/// Row with n copies of (1 - 1/j) E_{-1/j} + (1/j) E_{1 - 1/j} (tau_j = 1/j).
inline ArrayRow example2_row(int j, std::int64_t n) {
  if (j < 2) throw std::invalid_argument("example2_row: j must be >= 2");
  const double p = 1.0 / j;
  return make_row(
      j, {{MixtureComponent{p, delta(-p), delta(1.0 - p), p}, n}});
}

struct CenteringRule {
  enum class Mode { TauTruncatedMean, UMean, Explicit };
  Mode mode = Mode::UMean;
  double tau = 0.0;                 // for TauTruncatedMean
  std::vector<double> constants;    // for Explicit, one per row entry

  static CenteringRule tau_truncated(double tau) {
    if (!(tau > 0.0))
      throw std::invalid_argument("centering rule: tau must be > 0");
    return {Mode::TauTruncatedMean, tau, {}};
  }
  static CenteringRule u_mean() { return {Mode::UMean, 0.0, {}}; }
  static CenteringRule explicit_constants(std::vector<double> cs) {
    return {Mode::Explicit, 0.0, std::move(cs)};
  }
};

/// Right-hand-side quantities of the approximation bounds.
struct BoundBudget {
  double p_j = 0.0;
  double tau_j = 0.0;
  double sum_p_sq = 0.0;      // sum over summands of p_k^2
  double logstar_term = 0.0;  // tau_j * max(1, log(1/tau_j)), 0 at tau_j = 0
};

inline double logstar(double b) {
  if (!(b > 0.0)) throw std::invalid_argument("logstar: argument must be > 0");
  return std::max(1.0, std::log(b));
}

/// Truncated first moment: sum of x * F{x} over the closed ball |x| <= tau.
inline double centering_a(const LatticeDistribution& F, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("centering_a: tau must be > 0");
  long double m = 0.0L;
  for (std::size_t i = 0; i < F.size(); ++i) {
    const double x = F.position(i);
    if (std::fabs(x) <= tau + snap_eps(tau))
      m += static_cast<long double>(F.weights()[i]) * x;
  }
  return static_cast<double>(m);
}

/// Mean of the component's U part.
inline double centering_b(const MixtureComponent& c) {
  validate_component(c);
  long double m = 0.0L;
  for (std::size_t i = 0; i < c.U.size(); ++i)
    m += static_cast<long double>(c.U.weights()[i]) * c.U.position(i);
  return static_cast<double>(m);
}

/// Law of the row sum: the convolution product of all summand laws.
inline LatticeDistribution row_convolution(
    const ArrayRow& row, std::size_t atom_budget = kDefaultAtomBudget) {
  std::optional<LatticeDistribution> out;
  for (const auto& e : row.entries) {
    LatticeDistribution factor =
        power(component_distribution(e.component),
              static_cast<std::uint64_t>(e.count), atom_budget);
    out = out ? convolve(*out, factor, atom_budget) : factor;
  }
  return *out;
}

namespace detail {

inline std::vector<double> resolve_centers(const ArrayRow& row,
                                           const CenteringRule& rule) {
  std::vector<double> centers;
  centers.reserve(row.entries.size());
  switch (rule.mode) {
    case CenteringRule::Mode::TauTruncatedMean:
      for (const auto& e : row.entries)
        centers.push_back(
            centering_a(component_distribution(e.component), rule.tau));
      break;
    case CenteringRule::Mode::UMean:
      for (const auto& e : row.entries)
        centers.push_back(centering_b(e.component));
      break;
    case CenteringRule::Mode::Explicit:
      if (rule.constants.size() == row.entries.size()) {
        centers = rule.constants;
      } else if (static_cast<std::int64_t>(rule.constants.size()) == row.n) {
        std::size_t at = 0;
        for (const auto& e : row.entries) {
          const double c = rule.constants[at];
          for (std::int64_t k = 0; k < e.count; ++k, ++at)
            if (rule.constants[at] != c)
              throw std::invalid_argument(
                  "explicit centers must agree within an identical block");
          centers.push_back(c);
        }
      } else {
        throw std::invalid_argument(
            "explicit centering needs one constant per summand or per entry");
      }
      break;
  }
  for (double c : centers)
    if (!std::isfinite(c))
      throw std::invalid_argument("centering constants must be finite");
  return centers;
}

}  // namespace detail

/// Accompanying law of the row under the given centering rule: the product
/// over entries of E_{m c} e(m * shift(F, -c)) with m the entry multiplicity.
inline LatticeDistribution accompanying_law(
    const ArrayRow& row, const CenteringRule& rule, double tail_tol = 1e-12,
    std::size_t atom_budget = kDefaultAtomBudget) {
  const auto centers = detail::resolve_centers(row, rule);
  std::optional<LatticeDistribution> out;
  for (std::size_t k = 0; k < row.entries.size(); ++k) {
    const auto& e = row.entries[k];
    const double c = centers[k];
    LatticeDistribution base =
        shift(component_distribution(e.component), -c);
    LatticeDistribution factor = compound_poisson(
        CompoundPoissonSpec{static_cast<double>(e.count), base, tail_tol},
        atom_budget);
    factor = shift(factor, static_cast<double>(e.count) * c);
    out = out ? convolve(*out, factor, atom_budget) : factor;
  }
  return *out;
}

/// max_k L(F_k, E_0): the row's infinitesimality level.
inline double infinitesimality_epsilon(const ArrayRow& row) {
  double eps = 0.0;
  const LatticeDistribution unit = delta(0.0);
  for (const auto& e : row.entries)
    eps = std::max(
        eps, levy_distance(component_distribution(e.component), unit).value);
  return eps;
}

inline BoundBudget bound_budget(const ArrayRow& row) {
  BoundBudget b;
  b.p_j = row.p_j;
  b.tau_j = row.tau_j;
  long double psq = 0.0L;
  for (const auto& e : row.entries)
    psq += static_cast<long double>(e.component.p) * e.component.p *
           static_cast<long double>(e.count);
  b.sum_p_sq = static_cast<double>(psq);
  b.logstar_term = row.tau_j == 0.0 ? 0.0 : row.tau_j * logstar(1.0 / row.tau_j);
  return b;
}

// ---------------------------------------------------------------------------
// Row specification files: {"preset": "example1"|"example2", "j": ..,
// "n": .. or "c2": ..} or {"j": .., "components": [{"p": .., "U": {..},
// "V": {..}, "tau": .., "count": ..}, ...]}.

inline std::int64_t preset_row_size(const std::string& preset, int j,
                                    double c2) {
  const double jd = j;
  const double raw = preset == "example2" ? 2.0 * c2 * jd * jd * jd * jd
                                          : 2.0 * c2 * jd * jd;
  return static_cast<std::int64_t>(std::ceil(raw));
}

inline ArrayRow parse_row(const nlohmann::json& spec) {
  if (!spec.is_object()) throw ParseError("row spec must be an object");
  if (!spec.contains("j") || !spec["j"].is_number_integer())
    throw ParseError("row spec needs an integer j");
  const int j = spec["j"].get<int>();
  if (spec.contains("preset")) {
    const std::string preset = spec["preset"].get<std::string>();
    if (preset != "example1" && preset != "example2")
      throw ParseError("unknown preset: " + preset);
    std::int64_t n;
    if (spec.contains("n")) {
      n = spec["n"].get<std::int64_t>();
    } else if (spec.contains("c2")) {
      n = preset_row_size(preset, j, spec["c2"].get<double>());
    } else {
      throw ParseError("preset row needs n or c2");
    }
    return preset == "example2" ? example2_row(j, n) : example1_row(j, n);
  }
  if (!spec.contains("components") || !spec["components"].is_array() ||
      spec["components"].empty())
    throw ParseError("row spec needs a preset or a non-empty components array");
  std::vector<RowEntry> entries;
  for (const auto& c : spec["components"]) {
    if (!c.contains("p") || !c.contains("U") || !c.contains("V"))
      throw ParseError("component needs p, U and V");
    MixtureComponent comp{c["p"].get<double>(),
                          distribution_from_json(c["U"]),
                          distribution_from_json(c["V"]),
                          c.value("tau", 0.0)};
    entries.push_back({comp, c.value("count", std::int64_t{1})});
  }
  try {
    return make_row(j, std::move(entries));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid row: ") + e.what());
  }
}

}  // namespace convlab
