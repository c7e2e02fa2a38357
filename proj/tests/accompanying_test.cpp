#include <catch2/catch.hpp>

#include <cmath>

#include "convlab/accompanying.hpp"
#include "oracles.hpp"

using namespace convlab;

namespace {

double max_atomwise_diff(const LatticeDistribution& A,
                         const LatticeDistribution& B) {
  double worst = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i)
    worst = std::max(worst,
                     std::fabs(A.weights()[i] - B.mass_at(A.position(i))));
  for (std::size_t j = 0; j < B.size(); ++j)
    worst = std::max(worst,
                     std::fabs(B.weights()[j] - A.mass_at(B.position(j))));
  return worst;
}

}  // namespace

TEST_CASE("truncated-mean centering", "[accompanying]") {
  auto F1 = mix(0.1, delta(0.0), delta(1.0));
  REQUIRE(centering_a(F1, 1.0) == Approx(0.1).margin(1e-15));   // closed ball keeps the atom at 1
  REQUIRE(centering_a(F1, 2.0) == Approx(0.1).margin(1e-15));
  REQUIRE(centering_a(F1, 0.5) == 0.0);

  auto F2 = mix(0.1, delta(-0.1), delta(0.9));
  REQUIRE(centering_a(F2, 0.1) == Approx(-0.09).margin(1e-15));
  REQUIRE_THROWS_AS(centering_a(F1, 0.0), std::invalid_argument);
}

TEST_CASE("truncated centering rescales the U-mean by one minus p", "[accompanying]") {
  // when U sits inside [-tau, tau] and V outside it, the tau-truncated mean
  // keeps only the U part: a = (1 - p) * b. This factor is what lets the
  // truncated centers drift off the summand lattice in the second example.
  for (int j : {4, 8, 10}) {
    auto row = example2_row(j, 4);
    const auto& comp = row.entries.front().component;
    const double a = centering_a(component_distribution(comp), comp.tau);
    const double b = centering_b(comp);
    REQUIRE(a == Approx((1.0 - comp.p) * b).margin(1e-16));
  }
  MixtureComponent wide{0.375, LatticeDistribution(-0.25, 0.5, {0.5, 0.5}),
                        LatticeDistribution(-2.0, 3.0, {0.25, 0.75}), 0.25};
  const double a = centering_a(component_distribution(wide), wide.tau);
  REQUIRE(a == Approx((1.0 - wide.p) * centering_b(wide)).margin(1e-15));
}

TEST_CASE("u-mean centering", "[accompanying]") {
  auto ex1 = example1_row(10, 5);
  REQUIRE(centering_b(ex1.entries.front().component) == 0.0);
  auto ex2 = example2_row(10, 5);
  REQUIRE(centering_b(ex2.entries.front().component) == Approx(-0.1).margin(1e-15));
  MixtureComponent sym{0.5, LatticeDistribution(-0.25, 0.25, {0.25, 0.5, 0.25}),
                       delta(4.0), 0.25};
  REQUIRE(centering_b(sym) == Approx(0.0).margin(1e-16));
}

TEST_CASE("component validation", "[accompanying]") {
  REQUIRE_THROWS_AS(
      validate_component(MixtureComponent{0.5, delta(1.0), delta(2.0), 0.5}),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      validate_component(MixtureComponent{1.5, delta(0.0), delta(2.0), 0.5}),
      std::invalid_argument);
  REQUIRE_NOTHROW(
      validate_component(MixtureComponent{0.5, delta(0.5), delta(2.0), 0.5}));
}

TEST_CASE("row construction and budgets", "[accompanying]") {
  auto row = example1_row(10, 200);
  REQUIRE(row.n == 200);
  REQUIRE(row.p_j == Approx(0.1));
  REQUIRE(row.tau_j == 0.0);
  auto b = bound_budget(row);
  REQUIRE(b.sum_p_sq == Approx(2.0).margin(1e-12));
  REQUIRE(b.logstar_term == 0.0);

  auto row2 = example2_row(10, 200);
  REQUIRE(row2.tau_j == Approx(0.1));
  auto b2 = bound_budget(row2);
  REQUIRE(b2.logstar_term == Approx(0.1 * std::log(10.0)).margin(1e-12));

  // log* clamps at one
  MixtureComponent wide{0.5, delta(0.0), delta(5.0), std::exp(-1.0)};
  auto row3 = make_row(3, {{wide, 4}});
  REQUIRE(bound_budget(row3).logstar_term == Approx(std::exp(-1.0)).margin(1e-15));
  REQUIRE(logstar(std::exp(1.0)) == 1.0);
  REQUIRE(logstar(std::exp(2.0)) == Approx(2.0).margin(1e-12));
}

TEST_CASE("row convolution is the row sum law", "[accompanying]") {
  auto row = example1_row(10, 200);
  auto F = row_convolution(row);
  auto expect = oracles::binomial_pmf(200, 0.1);
  // the weight floor at each squaring nibbles ~1e-16 off the deep tail, so
  // the comparison is relative for bulk atoms and absolute out there
  for (std::size_t k = 0; k < F.size(); ++k) {
    const auto idx = static_cast<std::size_t>(std::llround(F.position(k)));
    REQUIRE(F.weights()[k] ==
            Approx(expect[idx]).epsilon(1e-10).margin(1e-15));
  }

  auto single = make_row(5, {{MixtureComponent{0.2, delta(0.0), delta(2.0), 0.0}, 1}});
  REQUIRE(row_convolution(single)
              .same_atoms(mix(0.2, delta(0.0), delta(2.0)), 1e-15));

  // the pre-shifted row is the same binomial moved left by n/j
  auto row2 = example2_row(10, 200);
  auto F2 = row_convolution(row2);
  REQUIRE(F2.mean() == Approx(0.0).margin(1e-9));
  for (std::size_t k = 0; k < F2.size(); ++k) {
    const double pos = F2.position(k);
    const auto idx = static_cast<std::size_t>(std::llround(pos + 20.0));
    REQUIRE(F2.weights()[k] ==
            Approx(expect[idx]).epsilon(1e-10).margin(1e-15));
  }
}

TEST_CASE("accompanying law under the U-mean rule is poisson", "[accompanying]") {
  auto row = example1_row(10, 200);
  auto G = accompanying_law(row, CenteringRule::u_mean());
  REQUIRE(max_atomwise_diff(G, poisson(20.0)) <= 1e-10);
}

TEST_CASE("accompanying law under the truncated-mean rule", "[accompanying]") {
  const int j = 10;
  const std::int64_t n = 200;
  auto row = example1_row(j, n);
  auto D = accompanying_law(row, CenteringRule::tau_truncated(1.0));
  // explicit product: E_{n/j} e(n(1-1/j) E_{-1/j}) e(n(1/j) E_{1-1/j})
  auto first = compound_poisson(n * 0.9, delta(-0.1));
  auto second = compound_poisson(n * 0.1, delta(0.9));
  auto expect = shift(convolve(first, second), n / static_cast<double>(j));
  REQUIRE(max_atomwise_diff(D, expect) <= 1e-10);
  REQUIRE(D.mean() == Approx(row_convolution(row).mean()).epsilon(1e-9));
}

TEST_CASE("accompanying law of a single point mass", "[accompanying]") {
  // E_c e(E_0) = E_c
  const double a = 0.75;
  auto row = make_row(2, {{MixtureComponent{0.0, delta(a), delta(a), 1.0}, 1}});
  auto D = accompanying_law(row, CenteringRule::explicit_constants({a}));
  REQUIRE(D.same_atoms(delta(a), 1e-12));
}

TEST_CASE("incommensurable centers are rejected", "[accompanying]") {
  auto row = example1_row(4, 3);
  // an irrational center cannot be snapped onto any refinement of the lattice
  REQUIRE_THROWS_AS(
      accompanying_law(row, CenteringRule::explicit_constants({std::sqrt(2.0)})),
      IncommensurableError);
}

TEST_CASE("experiment preconditions", "[accompanying]") {
  REQUIRE_THROWS_AS(example1_row(1, 10), std::invalid_argument);
  REQUIRE_THROWS_AS(make_row(2, {}), std::invalid_argument);
  REQUIRE_THROWS_AS(
      make_row(2, {{MixtureComponent{0.5, delta(0.0), delta(1.0), 0.0}, 0}}),
      std::invalid_argument);
}

TEST_CASE("explicit centering validation", "[accompanying]") {
  auto row = example1_row(4, 3);
  REQUIRE_NOTHROW(accompanying_law(row, CenteringRule::explicit_constants({0.25})));
  REQUIRE_NOTHROW(
      accompanying_law(row, CenteringRule::explicit_constants({0.25, 0.25, 0.25})));
  REQUIRE_THROWS_AS(
      accompanying_law(row, CenteringRule::explicit_constants({0.25, 0.3, 0.25})),
      std::invalid_argument);
  REQUIRE_THROWS_AS(
      accompanying_law(row, CenteringRule::explicit_constants({0.25, 0.25})),
      std::invalid_argument);
}

TEST_CASE("symmetric components collapse the two rules", "[accompanying]") {
  LatticeDistribution symU(-0.25, 0.25, {0.25, 0.5, 0.25});
  LatticeDistribution symV(-2.0, 2.0, {0.5, 0.5});
  auto row = make_row(3, {{MixtureComponent{0.3, symU, symV, 0.25}, 6}});
  const auto& comp = row.entries.front().component;
  REQUIRE(centering_b(comp) == Approx(0.0).margin(1e-16));
  REQUIRE(centering_a(component_distribution(comp), 0.25) ==
          Approx(0.0).margin(1e-16));
  auto D = accompanying_law(row, CenteringRule::tau_truncated(0.25));
  auto G = accompanying_law(row, CenteringRule::u_mean());
  REQUIRE(max_atomwise_diff(D, G) <= 1e-12);
}

TEST_CASE("small truncation collapses D onto G", "[accompanying]") {
  auto row = example1_row(10, 100);
  auto D = accompanying_law(row, CenteringRule::tau_truncated(0.5));
  auto G = accompanying_law(row, CenteringRule::u_mean());
  REQUIRE(max_atomwise_diff(D, G) == 0.0);
}

TEST_CASE("rows with heterogeneous summands", "[accompanying]") {
  // two blocks on different lattices: the product machinery must align them
  MixtureComponent a{0.5, delta(0.0), delta(1.0), 0.0};
  MixtureComponent b{0.25, delta(0.0), delta(0.5), 0.0};
  auto row = make_row(4, {{a, 3}, {b, 2}});
  REQUIRE(row.n == 5);
  REQUIRE(row.p_j == 0.5);

  auto F = row_convolution(row);
  REQUIRE(F.total_mass() + F.dropped_mass() == Approx(1.0).margin(1e-12));
  // mean = 3 * 0.5 + 2 * 0.25 * 0.5
  REQUIRE(F.mean() == Approx(1.75).margin(1e-12));
  REQUIRE(F.step() == Approx(0.5));

  auto G = accompanying_law(row, CenteringRule::u_mean());
  REQUIRE(G.mean() == Approx(F.mean()).margin(1e-9));
  // the product over blocks equals the two-factor construction
  auto part1 = compound_poisson(3.0, component_distribution(a));
  auto part2 = compound_poisson(2.0, component_distribution(b));
  auto expect = convolve(part1, part2);
  REQUIRE(total_variation(G, expect).value <= 1e-10);

  REQUIRE(infinitesimality_epsilon(row) == Approx(0.5).margin(1e-9));
}

TEST_CASE("identical blocks collapse consistently", "[accompanying][property]") {
  // one block of 2m summands vs two blocks of m: e(2m H) vs e(m H)^2
  MixtureComponent comp{0.2, delta(0.0), delta(1.0), 0.0};
  auto whole = make_row(5, {{comp, 64}});
  auto split = make_row(5, {{comp, 32}, {comp, 32}});
  auto Dw = accompanying_law(whole, CenteringRule::u_mean());
  auto Ds = accompanying_law(split, CenteringRule::u_mean());
  REQUIRE(max_atomwise_diff(Dw, Ds) <= 1e-10);
}

TEST_CASE("accompanying law preserves the row mean", "[accompanying][property]") {
  auto row = example2_row(7, 98);
  auto F = row_convolution(row);
  for (const auto& rule :
       {CenteringRule::u_mean(), CenteringRule::tau_truncated(1.0 / 7.0),
        CenteringRule::tau_truncated(2.0)}) {
    auto D = accompanying_law(row, rule);
    REQUIRE(D.mean() == Approx(F.mean()).margin(1e-9));
  }
}

TEST_CASE("infinitesimality level", "[accompanying]") {
  REQUIRE(infinitesimality_epsilon(example1_row(10, 5)) ==
          Approx(0.1).margin(1e-9));
  auto degenerate =
      make_row(2, {{MixtureComponent{0.0, delta(0.0), delta(0.0), 0.0}, 3}});
  REQUIRE(infinitesimality_epsilon(degenerate) == 0.0);
  const double eps2 = infinitesimality_epsilon(example2_row(10, 5));
  REQUIRE(eps2 <= 0.2 + 1e-12);
  REQUIRE(eps2 == Approx(0.1).margin(1e-9));
}

TEST_CASE("row specification parsing", "[accompanying]") {
  auto preset = parse_row(nlohmann::json::parse(
      R"({"preset": "example1", "j": 8, "c2": 1.0})"));
  REQUIRE(preset.n == 128);
  REQUIRE(preset.p_j == Approx(0.125));

  auto sized = parse_row(nlohmann::json::parse(
      R"({"preset": "example2", "j": 4, "n": 100})"));
  REQUIRE(sized.n == 100);
  REQUIRE(sized.tau_j == Approx(0.25));

  auto custom = parse_row(nlohmann::json::parse(R"({
    "j": 6,
    "components": [{
      "p": 0.25,
      "U": {"offset": 0, "step": 0, "weights": [1]},
      "V": {"offset": 1, "step": 0, "weights": [1]},
      "tau": 0,
      "count": 12
    }]
  })"));
  REQUIRE(custom.n == 12);
  REQUIRE(custom.p_j == Approx(0.25));

  REQUIRE_THROWS_AS(parse_row(nlohmann::json::parse(R"({"j": 3})")), ParseError);
  REQUIRE_THROWS_AS(
      parse_row(nlohmann::json::parse(R"({"preset": "example3", "j": 3, "c2": 1})")),
      ParseError);
  REQUIRE_THROWS_AS(
      parse_row(nlohmann::json::parse(R"({"preset": "example1", "j": 3})")),
      ParseError);
}
