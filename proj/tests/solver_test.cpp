#include "levyport/solver.hpp"

#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "levyport/errors.hpp"
#include "oracles.hpp"

using namespace levyport;

namespace {

ErrorCode thrown_code(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const DomainError& e) {
    return e.code();
  }
  REQUIRE(false);
  return ErrorCode::ConfigInvalid;
}

std::vector<LevyJumpMeasure> sample_measures() {
  return {
      LevyJumpMeasure::asymmetric_power_law(1.2, 0.4),
      LevyJumpMeasure::asymmetric_power_law(0.7, 0.0),
      LevyJumpMeasure::uniform_density(0.9, -0.45, 0.85),
      LevyJumpMeasure::point_mass(0.8, -0.35),
      LevyJumpMeasure::discrete_compound(1.1, {{-0.3, 0.4}, {0.25, 0.6}}),
  };
}

// Independent root bracketing for the scalar condition h(y) = y - a + b psi'(y).
double bisect_exposure(double a, double b, const LevyJumpMeasure& m, double gamma,
                       double lo, double hi) {
  auto h = [&](double y) {
    return y - a + b * (gamma == 1.0 ? psi_log_prime(m, y) : psi_prime(m, gamma, y));
  };
  if (!std::isfinite(lo)) {
    lo = std::min(a, hi - 1.0);
    for (double step = 1.0; h(lo) >= 0.0; step *= 2.0) lo -= step;
  }
  if (!std::isfinite(hi)) {
    hi = std::max(a, lo + 1.0);
    for (double step = 1.0; h(hi) <= 0.0; step *= 2.0) hi += step;
  }
  return oracle::bisect(h, lo, hi);
}

OneSectorMarket one_sector_with(double n, double v, double rho, double rbar,
                                double jbar, LevyJumpMeasure m,
                                Vector perp = Vector()) {
  return OneSectorMarket::make(static_cast<int>(n), v, rho, rbar, std::move(perp),
                               jbar, 0.02, std::move(m));
}

}  // namespace

TEST_CASE("jump-free weights follow the inverse covariance") {
  Matrix sigma(2, 2);
  sigma << 0.04, 0.0, 0.0, 0.01;
  Vector R(2);
  R << 0.05, 0.02;
  Vector w = solve_merton(sigma, R, 2.0);
  CHECK(w(0) == doctest::Approx(0.625).epsilon(1e-14));
  CHECK(w(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(thrown_code([&] { solve_merton(Matrix::Zero(2, 2), R, 2.0); }) ==
        ErrorCode::SingularSigma);
}

TEST_CASE("jump-free aggregate is the quadratic minimum") {
  auto mkt = one_sector_with(10, 0.2, 0.4, 0.05, -0.3,
                             LevyJumpMeasure::asymmetric_power_law(0.0, 0.0));
  const double kappa1 = 0.184;
  auto s = solve_bar_one_sector(mkt, 2.0, AggregateMode::FiniteN);
  CHECK(s.varpi == doctest::Approx(10 * 0.05 / (2.0 * kappa1)).epsilon(1e-14));
  CHECK(s.branch == SolveBranch::Quadratic);
}

TEST_CASE("one-sided power-law aggregate matches a golden-section search") {
  auto mkt = one_sector_with(10, 0.2, 0.4, 0.05, -0.3,
                             LevyJumpMeasure::asymmetric_power_law(0.5, 0.0));
  const double gamma = 2.0, c = 0.184 / 10.0;
  auto s = solve_bar_one_sector(mkt, gamma, AggregateMode::FiniteN);
  CHECK(s.branch == SolveBranch::Cubic);
  CHECK(s.residual <= 1e-12);

  auto f = [&](double varpi) {
    return -varpi * 0.05 + 0.5 * gamma * c * varpi * varpi +
           psi(mkt.measure, gamma, varpi * -0.3);
  };
  // golden search to bracket, then a difference-quotient sign change to beat
  // the flat-bottom noise floor of direct minimization
  const double rough = oracle::golden_min(f, -5.0, (1.0 / 0.3) * (1.0 - 1e-9));
  auto slope = [&](double x) { return (f(x + 5e-6) - f(x - 5e-6)) / 1e-5; };
  const double varpi_star = oracle::bisect(slope, rough - 1e-4, rough + 1e-4);
  CHECK(std::abs(s.varpi - varpi_star) <= 1e-8);
}

TEST_CASE("downward-jump aggregates stay below both jump-free caps") {
  std::mt19937_64 rng(81001);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(u(rng) * 59);
    const double v = 0.1 + 0.4 * u(rng);
    const double rho_lo = -1.0 / (n - 1) + 0.01;
    const double rho = rho_lo + u(rng) * (0.95 - rho_lo);
    const double rbar = 0.001 + 0.1 * u(rng);
    const double jbar = -0.95 + 0.9 * u(rng);
    const double lp = 0.05 + 3.0 * u(rng);
    auto mkt = one_sector_with(n, v, rho, rbar, jbar,
                               LevyJumpMeasure::asymmetric_power_law(lp, 0.0));
    const double kappa1 = v * v * (1.0 + (n - 1) * rho);
    auto s = solve_bar_one_sector(mkt, 2.0, AggregateMode::FiniteN);
    CHECK(s.varpi < std::min(n * rbar / (2.0 * kappa1), 1.0 / std::abs(jbar)));
    CHECK(psi_second(mkt.measure, 2.0, s.y) >= 0.0);
  }
}

TEST_CASE("vanishing intensity recovers the kinked jump-free limit") {
  // diffusive branch: the quadratic cap binds
  auto m1 = one_sector_with(50, 0.2, 0.5, 0.05, -0.1,
                            LevyJumpMeasure::asymmetric_power_law(1e-8, 0.0));
  auto s1 = solve_bar_one_sector(m1, 2.0, AggregateMode::Asymptotic);
  CHECK(std::abs(s1.varpi - 1.25) <= 1e-6);

  // size branch: the solvency cap binds (excess return chosen so the root's
  // true distance from the wall at this intensity is well under the tolerance)
  auto m2 = one_sector_with(50, 0.2, 0.5, 0.08, -0.9,
                            LevyJumpMeasure::asymmetric_power_law(1e-8, 0.0));
  auto s2 = solve_bar_one_sector(m2, 2.0, AggregateMode::Asymptotic);
  CHECK(std::abs(s2.varpi - 1.0 / 0.9) <= 1e-6);
}

TEST_CASE("large-n mode requires a positive correlation floor") {
  auto mkt = one_sector_with(20, 0.2, 0.0, 0.05, -0.3,
                             LevyJumpMeasure::asymmetric_power_law(0.5, 0.0));
  CHECK(thrown_code([&] { solve_bar_one_sector(mkt, 2.0, AggregateMode::Asymptotic); }) ==
        ErrorCode::NonCoercive);
  auto mkt2 = one_sector_with(20, 0.2, -0.05, 0.05, -0.3,
                              LevyJumpMeasure::asymmetric_power_law(0.5, 0.0));
  CHECK(thrown_code([&] { solve_bar_one_sector(mkt2, 2.0, AggregateMode::Asymptotic); }) ==
        ErrorCode::NonCoercive);
}

TEST_CASE("closed-form exposures match bracketed roots") {
  std::mt19937_64 rng(81002);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 250; ++trial) {
    const double a = -2.0 + 4.0 * u(rng);
    const double b = 0.01 + 5.0 * u(rng);
    const double lp = 0.05 + 3.0 * u(rng);
    const double ln = 0.05 + 3.0 * u(rng);

    auto two = LevyJumpMeasure::asymmetric_power_law(lp, ln);
    auto es = solve_exposure(a, b, two, 2.0);
    CHECK(es.branch == SolveBranch::Cubic);
    const double yref = bisect_exposure(a, b, two, 2.0, -1.0 + 1e-12, 1.0 - 1e-12);
    CHECK(std::abs(es.y - yref) <= 1e-10);

    auto pos = LevyJumpMeasure::asymmetric_power_law(lp, 0.0);
    auto esp = solve_exposure(a, b, pos, 2.0);
    const double yp = bisect_exposure(a, b, pos, 2.0, -1.0 + 1e-12,
                                      std::numeric_limits<double>::infinity());
    CHECK(std::abs(esp.y - yp) <= 1e-8);

    auto neg = LevyJumpMeasure::asymmetric_power_law(0.0, ln);
    auto esn = solve_exposure(a, b, neg, 2.0);
    const double yn = bisect_exposure(a, b, neg, 2.0,
                                      -std::numeric_limits<double>::infinity(),
                                      1.0 - 1e-12);
    CHECK(std::abs(esn.y - yn) <= 1e-8);
  }
}

TEST_CASE("generic exposures agree with bracketed roots") {
  std::mt19937_64 rng(81003);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double gammas[] = {0.5, 2.0, 3.3, 7.0};
  for (int trial = 0; trial < 40; ++trial) {
    for (const auto& m : sample_measures()) {
      const double gamma = gammas[trial % 4];
      const double a = -1.5 + 3.0 * u(rng);
      const double b = 0.05 + 3.0 * u(rng);
      auto es = solve_exposure(a, b, m, gamma);
      auto [lo, hi] = m.solvency_interval();
      const double yref = bisect_exposure(
          a, b, m, gamma, std::isfinite(lo) ? lo + 1e-12 : lo,
          std::isfinite(hi) ? hi - 1e-12 : hi);
      CHECK(std::abs(es.y - yref) <= 1e-9 * std::max(1.0, std::abs(yref)));
    }
  }
}

TEST_CASE("point-mass log-utility exposure takes the quadratic branch") {
  auto m = LevyJumpMeasure::point_mass(0.8, -0.35);
  auto es = solve_exposure(0.4, 1.3, m, 1.0);
  CHECK(es.branch == SolveBranch::Quadratic);
  const double yref = bisect_exposure(0.4, 1.3, m, 1.0,
                                      -std::numeric_limits<double>::infinity(),
                                      1.0 / 0.35 - 1e-10);
  CHECK(std::abs(es.y - yref) <= 1e-12);
}

TEST_CASE("single-sector aggregate agrees with the block solver") {
  std::mt19937_64 rng(81004);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(u(rng) * 10);
    const double rho = -1.0 / (n - 1) + 0.02 + u(rng) * 0.9;
    auto meas = sample_measures()[trial % 5];
    auto mkt = one_sector_with(n, 0.15 + 0.3 * u(rng), std::min(rho, 0.95),
                               0.01 + 0.08 * u(rng), -0.8 + 1.6 * u(rng), meas);
    const double gamma = trial % 3 == 0 ? 0.7 : 2.0 + u(rng);
    auto s1 = solve_bar_one_sector(mkt, gamma, AggregateMode::FiniteN);
    auto s2 = solve_bar_multisector(to_multisector(mkt), gamma);
    CHECK(std::abs(s1.varpi - s2.varpi(0)) <= 1e-10 * std::max(1.0, std::abs(s1.varpi)));
  }
}

TEST_CASE("balanced sector returns eliminate jump exposure") {
  // diagonal loadings with sector returns tuned to the compensator
  const double lp = 0.6, ln = 1.1;
  auto meas = LevyJumpMeasure::asymmetric_power_law(lp, ln);
  Vector v(2), r(2);
  v << 0.2, 0.3;
  Matrix rho(2, 2);
  rho << 0.5, 0.1, 0.1, 0.4;
  Matrix loadings = Matrix::Zero(2, 2);
  loadings(0, 0) = 0.4;
  loadings(1, 1) = -0.25;
  r(0) = (ln - lp) * loadings(0, 0);
  r(1) = (ln - lp) * loadings(1, 1);
  auto mkt = MultiSectorMarket::make(3, v, rho, r, {}, loadings, 0.02, {meas, meas});
  auto s = solve_bar_multisector(mkt, 2.0);
  CHECK(s.varpi.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(s.exposure.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("shared-source block market reduces to the scalar equation") {
  std::mt19937_64 rng(81005);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    Vector v(2), r(2);
    v << 0.15 + 0.2 * u(rng), 0.2 + 0.2 * u(rng);
    r << 0.02 + 0.05 * u(rng), 0.01 + 0.05 * u(rng);
    Matrix rho(2, 2);
    rho << 0.5, 0.15, 0.15, 0.6;
    Matrix loadings(2, 2);
    const double j0 = -0.4 + 0.8 * u(rng), j1 = -0.4 + 0.8 * u(rng);
    loadings << j0, j0, j1, j1;  // both sources load the sectors identically
    auto meas = LevyJumpMeasure::asymmetric_power_law(0.8, 0.3);
    auto mkt = MultiSectorMarket::make(3, v, rho, r, {}, loadings, 0.02, {meas, meas});
    auto s = solve_bar_multisector(mkt, 2.0);
    CHECK((s.branch == SolveBranch::Cubic || s.branch == SolveBranch::Quadratic));
    CHECK(s.residual <= 1e-10);
    // the two exposures coincide by construction
    CHECK(std::abs(s.exposure(0) - s.exposure(1)) <= 1e-12);
  }
}

TEST_CASE("separated assembly equals the direct minimizer") {
  std::mt19937_64 rng(81006);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.01);
  auto measures = sample_measures();

  for (int trial = 0; trial < 30; ++trial) {
    const double gamma = trial % 3 == 0 ? 0.8 : 1.5 + 2.0 * u(rng);
    auto prefs = Preferences::power(gamma, 0.05);
    if (trial % 2 == 0) {
      const int n = 2 + static_cast<int>(u(rng) * 7);
      Vector perp(n);
      for (int i = 0; i < n; ++i) perp(i) = g(rng);
      perp.array() -= perp.mean();
      const double rho_lo = -1.0 / (n - 1) + 0.02;
      auto mkt = OneSectorMarket::make(
          n, 0.15 + 0.25 * u(rng), rho_lo + u(rng) * (0.9 - rho_lo),
          0.01 + 0.07 * u(rng), perp, -0.7 + 1.4 * u(rng), 0.02,
          measures[trial % 5]);
      auto pol = assemble_policy(mkt, prefs);
      auto direct = solve_raw(to_raw(mkt), prefs);
      CHECK((pol.omega - direct.omega).cwiseAbs().maxCoeff() <= 1e-6);
      CHECK(std::abs(pol.K - direct.K) <= 1e-6 * std::max(1.0, std::abs(pol.K)));
    } else {
      const int m = 1 + trial % 2, k = 2 + static_cast<int>(u(rng) * 2);
      Vector v(m), r(m);
      Matrix rho(m, m), loadings(m, m);
      for (int l = 0; l < m; ++l) {
        v(l) = 0.15 + 0.25 * u(rng);
        rho(l, l) = 0.2 + 0.5 * u(rng);
        r(l) = 0.01 + 0.06 * u(rng);
        for (int ss = 0; ss < m; ++ss) loadings(l, ss) = -0.4 + 0.8 * u(rng);
      }
      for (int l = 0; l < m; ++l)
        for (int ss = l + 1; ss < m; ++ss)
          rho(l, ss) = rho(ss, l) = -0.05 + 0.15 * u(rng);
      Vector perp(m * k);
      for (int i = 0; i < perp.size(); ++i) perp(i) = g(rng);
      for (int l = 0; l < m; ++l) {
        auto blockv = perp.segment(l * k, k);
        blockv.array() -= blockv.mean();
      }
      auto mkt = MultiSectorMarket::make(
          k, v, rho, r, perp, loadings, 0.02,
          std::vector<LevyJumpMeasure>(static_cast<size_t>(m), measures[trial % 5]));
      auto pol = assemble_policy(mkt, prefs);
      auto direct = solve_raw(to_raw(mkt), prefs);
      CHECK((pol.omega - direct.omega).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("policy assembly arithmetic") {
  // engineered so the aggregate weight is 0.1 per asset and the within part is known
  const double gamma = 2.0, v = 0.2, rho = 0.3;
  const double kappa1 = v * v * (1.0 + rho), kappa2 = v * v * (1.0 - rho);
  const double rbar = 0.2 * gamma * kappa1 / 2.0;
  Vector perp(2);
  perp << gamma * kappa2 * 0.2, -gamma * kappa2 * 0.2;
  auto mkt = OneSectorMarket::make(2, v, rho, rbar, perp, 0.0, 0.02,
                                   LevyJumpMeasure::asymmetric_power_law(0.0, 0.0));
  auto pol = assemble_policy(mkt, Preferences::power(gamma, 0.1));
  CHECK(pol.omega(0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pol.omega(1) == doctest::Approx(-0.1).epsilon(1e-12));
  CHECK(pol.omega0 == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("idle portfolio pins down the consumption constant") {
  auto mkt = OneSectorMarket::make(2, 0.2, 0.0, 0.0, {}, 0.0, 0.02,
                                   LevyJumpMeasure::asymmetric_power_law(0.0, 0.0));
  auto pol = assemble_policy(mkt, Preferences::power(2.0, 0.1));
  CHECK(pol.omega.cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(pol.K == doctest::Approx(0.06).epsilon(1e-14));
  CHECK(pol.transversality_ok);
}

TEST_CASE("negative consumption constant is flagged, not fatal") {
  auto mkt = OneSectorMarket::make(2, 0.2, 0.0, 0.0, {}, 0.0, 0.5,
                                   LevyJumpMeasure::asymmetric_power_law(0.0, 0.0));
  auto pol = assemble_policy(mkt, Preferences::power(0.5, 0.01));
  CHECK(pol.K < 0.0);
  CHECK_FALSE(pol.transversality_ok);
}

TEST_CASE("fund split: one jump-neutral fund, one hedge fund") {
  std::mt19937_64 rng(81007);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3 + trial % 4;
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
      for (int jx = 0; jx < n; ++jx) A(i, jx) = g(rng);
    Matrix sigma = 0.01 * (A * A.transpose() / n + Matrix::Identity(n, n));
    Vector R(n), J(n);
    for (int i = 0; i < n; ++i) {
      R(i) = 0.03 * g(rng);
      J(i) = 0.3 * g(rng);
    }
    if (J.cwiseAbs().maxCoeff() < 0.05) J(0) = 0.3;
    auto meas = sample_measures()[trial % 5];
    const double gamma = 2.5;
    auto f = three_funds(sigma, R, J, meas, gamma);
    CHECK(std::abs(f.delta1.dot(J)) <= 1e-10 * std::max(1.0, f.delta1.cwiseAbs().maxCoeff()));
    CHECK(f.delta2.dot(J) == doctest::Approx(1.0).epsilon(1e-12));

    RawMarket raw{sigma, R, {J}, {meas}, 0.02};
    Vector direct = solve_full_numeric(raw, gamma);
    Vector rebuilt = f.delta1 / gamma + f.y * f.delta2;
    CHECK((rebuilt - direct).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("equicorrelated fund split has the equal-weight hedge") {
  Vector perp(4);
  perp << 0.01, -0.01, 0.005, -0.005;
  auto mkt = OneSectorMarket::make(4, 0.2, 0.5, 0.05, perp, 0.2, 0.02,
                                   LevyJumpMeasure::asymmetric_power_law(0.5, 0.2));
  auto raw = to_raw(mkt);
  Vector ones = Vector::Ones(4);
  auto f = three_funds(raw.sigma, raw.excess, ones, mkt.measure, 2.0);
  CHECK((f.delta2 - ones / 4.0).cwiseAbs().maxCoeff() <= 1e-12);
  const double kappa2 = 0.04 * 0.5;
  CHECK((f.delta1 - perp / kappa2).cwiseAbs().maxCoeff() <= 1e-10);

  // the assembled policy exposes the same funds
  auto pol = assemble_policy(mkt, Preferences::power(2.0, 0.05));
  REQUIRE(pol.funds.has_value());
  Vector rebuilt = pol.funds->delta1 / 2.0 + pol.funds->y * pol.funds->delta2;
  CHECK((rebuilt - pol.omega).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("dollar policy under exponential utility") {
  Matrix sigma(2, 2);
  sigma << 0.04, 0.005, 0.005, 0.09;
  Vector R(2);
  R << 0.04, 0.06;
  const double r = 0.03;

  SUBCASE("no jumps: linear rule, halved by doubling the risk aversion") {
    RawMarket raw{sigma, R, {}, {}, r};
    auto p1 = solve_exponential(raw, Preferences::exponential(2.0, 0.05));
    auto p2 = solve_exponential(raw, Preferences::exponential(4.0, 0.05));
    Vector expect = sigma.llt().solve(R) / (r * 2.0);
    CHECK((p1.omega - expect).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((p1.omega - 2.0 * p2.omega).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(p1.branch == SolveBranch::Quadratic);
  }

  SUBCASE("doubling the risk aversion halves the jump solution too") {
    Vector J(2);
    J << 0.3, -0.2;
    RawMarket raw{sigma, R, {J}, {LevyJumpMeasure::asymmetric_power_law(0.9, 0.4)}, r};
    auto p1 = solve_exponential(raw, Preferences::exponential(2.0, 0.05));
    auto p2 = solve_exponential(raw, Preferences::exponential(4.0, 0.05));
    CHECK((p1.omega - 2.0 * p2.omega).cwiseAbs().maxCoeff() <= 1e-8);
  }

  SUBCASE("symmetric jumps with zero premium leave no exposure") {
    Vector J(2);
    J << 0.3, 0.3;
    RawMarket raw{sigma, Vector::Zero(2),
                  {J}, {LevyJumpMeasure::asymmetric_power_law(0.8, 0.8)}, r};
    auto p = solve_exponential(raw, Preferences::exponential(2.0, 0.05));
    CHECK(std::abs(p.exposure(0)) <= 1e-10);
  }

  SUBCASE("point-mass rule matches direct bracketing") {
    Matrix s1(1, 1);
    s1 << 0.04;
    Vector R1(1), J1(1);
    R1 << 0.03;
    J1 << 1.0;
    const double q = 2.0, rq = r * q, lam = 0.6, zbar = -0.25;
    RawMarket raw{s1, R1, {J1}, {LevyJumpMeasure::point_mass(lam, zbar)}, r};
    auto p = solve_exponential(raw, Preferences::exponential(q, 0.05));
    auto foc = [&](double w) {
      return -0.03 + rq * 0.04 * w - lam * zbar * std::exp(-rq * w * zbar);
    };
    const double wref = oracle::bisect(foc, -500.0, 500.0);
    CHECK(std::abs(p.omega(0) - wref) <= 1e-8 * std::max(1.0, std::abs(wref)));
    CHECK(std::abs(foc(p.omega(0))) <= 1e-10);
  }
}

TEST_CASE("log-utility policies") {
  SUBCASE("no jumps recovers unit-risk-aversion weights") {
    Matrix sigma(2, 2);
    sigma << 0.04, 0.005, 0.005, 0.09;
    Vector R(2);
    R << 0.04, 0.06;
    RawMarket raw{sigma, R, {}, {}, 0.03};
    auto p = solve_log(raw, 0.05);
    CHECK((p.omega - sigma.llt().solve(R)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(p.K == doctest::Approx(0.05).epsilon(1e-15));
  }

  SUBCASE("idle market value constant") {
    Matrix s1(1, 1);
    s1 << 0.04;
    RawMarket raw{s1, Vector::Zero(1), {}, {}, 0.03};
    const double beta = 0.05;
    auto p = solve_log(raw, beta);
    CHECK(p.omega.cwiseAbs().maxCoeff() <= 1e-14);
    CHECK(p.k2 ==
          doctest::Approx((std::log(beta) + 0.03 / beta - 1.0) / beta).epsilon(1e-12));
  }

  SUBCASE("point-mass closed form flows through the separated path") {
    auto mkt = one_sector_with(4, 0.2, 0.3, 0.04, 0.5,
                               LevyJumpMeasure::point_mass(0.8, -0.35));
    auto pol = assemble_policy(mkt, Preferences::log_utility(0.05));
    CHECK(pol.branch == SolveBranch::Quadratic);
    auto direct = solve_log(to_raw(mkt), 0.05);
    CHECK((pol.omega - direct.omega).cwiseAbs().maxCoeff() <= 1e-6);
  }

  SUBCASE("log sits between nearby power policies") {
    auto mkt = one_sector_with(5, 0.2, 0.4, 0.05, -0.4,
                               LevyJumpMeasure::uniform_density(0.8, -0.6, 0.9));
    auto pl = assemble_policy(mkt, Preferences::log_utility(0.05));
    auto lo = assemble_policy(mkt, Preferences::power(1.0 - 1e-4, 0.05));
    auto hi = assemble_policy(mkt, Preferences::power(1.0 + 1e-4, 0.05));
    Vector mid = 0.5 * (lo.omega + hi.omega);
    CHECK((mid - pl.omega).cwiseAbs().maxCoeff() <= 1e-3);
  }
}

TEST_CASE("utility parameter validation") {
  CHECK(thrown_code([] { Preferences::power(1.0, 0.05); }) == ErrorCode::InvalidGamma);
  CHECK(thrown_code([] { Preferences::power(-2.0, 0.05); }) == ErrorCode::InvalidGamma);
  CHECK(thrown_code([] { Preferences::power(2.0, 0.0); }) == ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] { Preferences::exponential(0.0, 0.05); }) == ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] { Preferences::log_utility(-0.1); }) == ErrorCode::ConfigInvalid);
  Matrix s1 = Matrix::Identity(1, 1);
  RawMarket raw{s1, Vector::Zero(1), {}, {}, -0.01};
  CHECK(thrown_code([&] { solve_exponential(raw, Preferences::exponential(1.0, 0.05)); }) ==
        ErrorCode::ConfigInvalid);
}
