#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "levyport/levy.hpp"
#include "oracles.hpp"

using namespace levyport;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1.0, std::abs(b));
}

template <class F>
ErrorCode thrown_code(F&& f) {
  try {
    f();
  } catch (const DomainError& e) {
    return e.code();
  }
  FAIL("expected a DomainError");
  return ErrorCode::ConfigInvalid;
}

std::vector<LevyJumpMeasure> sample_measures() {
  return {
      LevyJumpMeasure::asymmetric_power_law(1.3, 0.7),
      LevyJumpMeasure::asymmetric_power_law(0.8, 0.0),
      LevyJumpMeasure::uniform_density(0.9, -0.6, 0.8),
      LevyJumpMeasure::uniform_density(1.4, 0.1, 0.9),
      LevyJumpMeasure::point_mass(1.1, -0.45),
      LevyJumpMeasure::discrete_compound(
          2.0, {{-0.3, 0.25}, {0.1, 0.5}, {0.6, 0.25}}),
  };
}

// Interior slice of the solvency interval, shrunk so finite differences of
// width h stay admissible.
std::pair<double, double> interior(const LevyJumpMeasure& m, double margin) {
  auto iv = m.solvency_interval();
  double lo = std::max(iv.first, -6.0), hi = std::min(iv.second, 6.0);
  const double w = hi - lo;
  return {lo + margin * w, hi - margin * w};
}

}  // namespace

TEST_CASE("point mass and power-law penalties match their closed forms") {
  auto pm = LevyJumpMeasure::point_mass(1.0, -0.5);
  CHECK(psi(pm, 2.0, 0.4) == doctest::Approx(0.25).epsilon(1e-14));

  auto apl11 = LevyJumpMeasure::asymmetric_power_law(1.0, 1.0);
  CHECK(psi(apl11, 2.0, 0.0) == 0.0);

  auto apl21 = LevyJumpMeasure::asymmetric_power_law(2.0, 1.0);
  const double expect = -2.0 * std::log(1.5) - std::log(0.5);
  CHECK(rel_err(psi(apl21, 2.0, 0.5), expect) < 1e-12);
}

TEST_CASE("penalty is zero at zero exposure for every kind") {
  for (const auto& m : sample_measures()) {
    CHECK(psi(m, 2.7, 0.0) == 0.0);
    CHECK(psi_log(m, 0.0) == 0.0);
    CHECK(psi_exponential(m, 1.3, 0.0) == 0.0);
  }
}

TEST_CASE("uniform penalty matches independent quadrature") {
  auto u = LevyJumpMeasure::uniform_density(1.0, 0.0, 1.0);
  const double got = psi(u, 3.0, 0.2);
  CHECK(rel_err(got, -1.0 / 12.0) < 1e-13);
  const double gamma = 3.0, y = 0.2;
  const double ref = oracle::integrate(
      [&](double z) {
        return -(std::pow(1.0 + y * z, 1.0 - gamma) - 1.0) / (1.0 - gamma);
      },
      0.0, 1.0);
  CHECK(rel_err(got, ref) < 1e-10);
}

TEST_CASE("generic risk aversion values agree with frozen references") {
  auto apl10 = LevyJumpMeasure::asymmetric_power_law(1.0, 0.0);
  CHECK(rel_err(psi(apl10, 4.5, 0.3), -0.22590595053137646) < 1e-12);

  auto apl21 = LevyJumpMeasure::asymmetric_power_law(2.0, 1.0);
  CHECK(rel_err(psi(apl21, 4.5, 0.55), 0.85806618586174331) < 1e-12);

  auto apl = LevyJumpMeasure::asymmetric_power_law(1.3, 0.7);
  CHECK(rel_err(psi(apl, 0.5, -0.6), 0.46184597113633260) < 1e-12);

  auto apl11 = LevyJumpMeasure::asymmetric_power_law(1.0, 1.0);
  CHECK(rel_err(psi(apl11, 1.0001, 0.4), 0.083459041604706201) < 1e-12);

  auto u1 = LevyJumpMeasure::uniform_density(0.7, -0.4, 0.9);
  CHECK(rel_err(psi(u1, 2.5, 0.8), -0.081450514228251541) < 1e-12);

  auto u2 = LevyJumpMeasure::uniform_density(1.1, -0.9, -0.1);
  CHECK(rel_err(psi(u2, 3.7, -0.6), -0.15588517840786950) < 1e-12);

  auto u3 = LevyJumpMeasure::uniform_density(1.0, -1.0, 1.0);
  CHECK(rel_err(psi(u3, 2.0, 1e-5), 6.6666666670666667e-11) < 1e-12);
}

TEST_CASE("first derivative closed forms and frozen references") {
  auto pm = LevyJumpMeasure::point_mass(1.0, -0.5);
  CHECK(psi_prime(pm, 2.0, 0.0) == doctest::Approx(0.5).epsilon(1e-14));

  auto apl10 = LevyJumpMeasure::asymmetric_power_law(1.0, 0.0);
  CHECK(rel_err(psi_prime(apl10, 2.0, 0.5), -2.0 / 3.0) < 1e-14);

  auto apl = LevyJumpMeasure::asymmetric_power_law(1.5, 0.5);
  CHECK(rel_err(psi_prime(apl, 3.3, 0.25), -0.23156455077444319) < 1e-13);
  CHECK(rel_err(psi_second(apl, 3.3, 0.25), 3.2212382961598997) < 1e-13);
}

TEST_CASE("first derivative matches a central difference everywhere") {
  std::mt19937_64 rng(20240811);
  const double h = 1e-6;
  for (const auto& m : sample_measures()) {
    auto [lo, hi] = interior(m, 0.05);
    std::uniform_real_distribution<double> uy(lo, hi);
    for (double gamma : {0.7, 2.0, 3.0, 4.2}) {
      for (int i = 0; i < 25; ++i) {
        const double y = uy(rng);
        const double fd = oracle::central_diff(
            [&](double t) { return psi(m, gamma, t); }, y, h);
        CHECK(rel_err(psi_prime(m, gamma, y), fd) < 1e-7);
      }
    }
  }
}

TEST_CASE("second derivative matches a central difference of the first") {
  std::mt19937_64 rng(7);
  const double h = 1e-6;
  for (const auto& m : sample_measures()) {
    auto [lo, hi] = interior(m, 0.05);
    std::uniform_real_distribution<double> uy(lo, hi);
    for (double gamma : {0.7, 2.0, 3.4}) {
      for (int i = 0; i < 15; ++i) {
        const double y = uy(rng);
        const double fd = oracle::central_diff(
            [&](double t) { return psi_prime(m, gamma, t); }, y, h);
        CHECK(rel_err(psi_second(m, gamma, y), fd) < 1e-6);
        CHECK(psi_second(m, gamma, y) >= 0.0);
      }
    }
  }
}

TEST_CASE("penalty is convex in the exposure") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> ut(0.05, 0.95);
  for (const auto& m : sample_measures()) {
    auto [lo, hi] = interior(m, 0.02);
    std::uniform_real_distribution<double> uy(lo, hi);
    for (int i = 0; i < 100; ++i) {
      double y1 = uy(rng), y2 = uy(rng);
      const double t = ut(rng);
      const double mid = t * y1 + (1.0 - t) * y2;
      const double lhs = psi(m, 2.6, mid);
      const double rhs = t * psi(m, 2.6, y1) + (1.0 - t) * psi(m, 2.6, y2);
      CHECK(lhs <= rhs + 1e-11);
    }
  }
}

TEST_CASE("first derivative is strictly increasing in the exposure") {
  for (const auto& m : sample_measures()) {
    auto [lo, hi] = interior(m, 0.05);
    double prev = -1e300;
    for (int i = 0; i <= 20; ++i) {
      const double y = lo + (hi - lo) * i / 20.0;
      const double d = psi_prime(m, 2.0, y);
      CHECK(d > prev);
      prev = d;
    }
  }
}

TEST_CASE("penalty diverges toward the solvency boundary") {
  auto apl = LevyJumpMeasure::asymmetric_power_law(1.0, 1.0);
  double prev = 0.0;
  for (double y : {0.9, 0.99, 0.999, 0.9999, 0.99999}) {
    const double v = psi(apl, 2.0, y);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 10.0);
}

TEST_CASE("solvency wall raises rather than returning infinities") {
  auto apl = LevyJumpMeasure::asymmetric_power_law(1.0, 1.0);
  CHECK(thrown_code([&] { psi(apl, 2.0, 1.0); }) == ErrorCode::SolvencyViolation);
  CHECK(thrown_code([&] { psi(apl, 2.0, -1.0); }) ==
        ErrorCode::SolvencyViolation);

  auto pm = LevyJumpMeasure::point_mass(1.0, -0.5);
  CHECK(thrown_code([&] { psi(pm, 2.0, 2.0); }) == ErrorCode::SolvencyViolation);
  CHECK(pm.solvent(1.999));
  CHECK_FALSE(pm.solvent(2.0));

  auto iv = apl.solvency_interval();
  CHECK(iv.first == -1.0);
  CHECK(iv.second == 1.0);

  auto one_sided = LevyJumpMeasure::asymmetric_power_law(1.0, 0.0);
  auto iv2 = one_sided.solvency_interval();
  CHECK(iv2.first == -1.0);
  CHECK(std::isinf(iv2.second));

  auto inactive = LevyJumpMeasure::point_mass(0.0, -0.5);
  CHECK(inactive.solvent(1e9));
  CHECK(psi(inactive, 2.0, 1e9) == 0.0);
}

TEST_CASE("log-utility risk aversion is rejected by the power penalty") {
  auto pm = LevyJumpMeasure::point_mass(1.0, 0.3);
  CHECK(thrown_code([&] { psi(pm, 1.0, 0.2); }) == ErrorCode::InvalidGamma);
  CHECK(thrown_code([&] { psi(pm, 0.0, 0.2); }) == ErrorCode::InvalidGamma);
  CHECK(thrown_code([&] { psi_prime(pm, -2.0, 0.2); }) ==
        ErrorCode::InvalidGamma);
}

TEST_CASE("log penalty closed forms and derivative consistency") {
  auto apl10 = LevyJumpMeasure::asymmetric_power_law(1.0, 0.0);
  CHECK(rel_err(psi_log(apl10, 0.5), -0.44841420692364620) < 1e-12);

  auto apl = LevyJumpMeasure::asymmetric_power_law(0.8, 1.4);
  CHECK(rel_err(psi_log(apl, -0.35), -0.14343379814803435) < 1e-12);

  auto pm = LevyJumpMeasure::point_mass(1.5, -0.4);
  CHECK(rel_err(psi_log(pm, 0.6), -1.5 * std::log1p(0.6 * -0.4)) < 1e-14);

  std::mt19937_64 rng(3);
  for (const auto& m : sample_measures()) {
    auto [lo, hi] = interior(m, 0.05);
    std::uniform_real_distribution<double> uy(lo, hi);
    for (int i = 0; i < 20; ++i) {
      const double y = uy(rng);
      const double fd1 = oracle::central_diff(
          [&](double t) { return psi_log(m, t); }, y, 1e-6);
      CHECK(rel_err(psi_log_prime(m, y), fd1) < 1e-7);
      const double fd2 = oracle::central_diff(
          [&](double t) { return psi_log_prime(m, t); }, y, 1e-6);
      CHECK(rel_err(psi_log_second(m, y), fd2) < 1e-6);
    }
  }

  // The power penalty tends to the log penalty as risk aversion approaches 1.
  const double y = 0.3;
  for (const auto& m : sample_measures()) {
    const double mid =
        0.5 * (psi(m, 1.0 + 1e-7, y) + psi(m, 1.0 - 1e-7, y));
    CHECK(rel_err(mid, psi_log(m, y)) < 5e-9);
  }
}

TEST_CASE("risk-aversion sensitivity of the first derivative") {
  auto apl = LevyJumpMeasure::asymmetric_power_law(1.0, 0.6);
  CHECK(rel_err(psi_prime_dgamma(apl, 2.0, 0.45), 0.47860183802026924) < 1e-10);

  std::mt19937_64 rng(17);
  for (const auto& m : sample_measures()) {
    auto [lo, hi] = interior(m, 0.05);
    std::uniform_real_distribution<double> uy(lo, hi);
    for (int i = 0; i < 10; ++i) {
      const double y = uy(rng);
      const double fd = oracle::central_diff(
          [&](double g) { return psi_prime(m, g, y); }, 2.4, 1e-5);
      CHECK(rel_err(psi_prime_dgamma(m, 2.4, y), fd) < 1e-6);
    }
    CHECK(psi_prime_dgamma(m, 2.0, 0.0) == 0.0);
  }
}

TEST_CASE("exponential penalty closed forms and frozen references") {
  auto pm = LevyJumpMeasure::point_mass(1.0, -0.5);
  CHECK(rel_err(psi_exponential(pm, 2.0, 1.0), std::exp(1.0) - 1.0) < 1e-14);

  auto apl10 = LevyJumpMeasure::asymmetric_power_law(1.0, 0.0);
  CHECK(rel_err(psi_exponential(apl10, 1.0, 0.5), -0.44384207911774836) < 1e-13);
  CHECK(rel_err(psi_exponential(apl10, 40.0, 1.0), -4.2660951190154692) < 1e-13);
  CHECK(rel_err(psi_exponential(apl10, 40.0, -1.0), 6039718263611237.3) < 1e-12);

  auto apl23 = LevyJumpMeasure::asymmetric_power_law(2.0, 3.0);
  CHECK(rel_err(psi_exponential(apl23, 2.0, 1.7), 30.015488482791963) < 1e-13);

  auto u = LevyJumpMeasure::uniform_density(1.2, -0.5, 1.5);
  CHECK(rel_err(psi_exponential(u, 2.0, 0.8), -0.79888276859770867) < 1e-13);
}

TEST_CASE("exponential penalty derivatives match central differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uy(-2.0, 2.0);
  for (const auto& m : sample_measures()) {
    for (int i = 0; i < 20; ++i) {
      const double y = uy(rng);
      const double fd1 = oracle::central_diff(
          [&](double t) { return psi_exponential(m, 1.7, t); }, y, 1e-6);
      CHECK(rel_err(psi_exponential_prime(m, 1.7, y), fd1) < 1e-7);
      const double fd2 = oracle::central_diff(
          [&](double t) { return psi_exponential_prime(m, 1.7, t); }, y, 1e-6);
      CHECK(rel_err(psi_exponential_second(m, 1.7, y), fd2) < 1e-6);
      CHECK(psi_exponential_second(m, 1.7, y) >= 0.0);
    }
  }
}

TEST_CASE("exponential penalty is convex with no solvency wall") {
  auto pm = LevyJumpMeasure::point_mass(1.0, -0.9);
  // Exposures far beyond the power-utility wall are fine here.
  CHECK(std::isfinite(psi_exponential(pm, 1.0, 25.0)));
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uy(-3.0, 3.0), ut(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double y1 = uy(rng), y2 = uy(rng), t = ut(rng);
    const double mid = psi_exponential(pm, 1.0, t * y1 + (1 - t) * y2);
    const double chord =
        t * psi_exponential(pm, 1.0, y1) + (1 - t) * psi_exponential(pm, 1.0, y2);
    CHECK(mid <= chord + 1e-11);
  }
}

TEST_CASE("mean positive jump weights the positive support by intensity") {
  CHECK(mean_positive_jump(LevyJumpMeasure::asymmetric_power_law(1.0, 0.0)) ==
        doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mean_positive_jump(LevyJumpMeasure::point_mass(2.0, 0.3)) ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK(mean_positive_jump(LevyJumpMeasure::uniform_density(1.0, 0.0, 1.0)) ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(mean_positive_jump(LevyJumpMeasure::uniform_density(2.0, -0.5, 0.5)) ==
        doctest::Approx(0.25).epsilon(1e-15));

  CHECK(thrown_code([] {
          mean_positive_jump(LevyJumpMeasure::point_mass(1.0, -0.3));
        }) == ErrorCode::EmptyPositiveSupport);
  CHECK(thrown_code([] {
          mean_positive_jump(LevyJumpMeasure::asymmetric_power_law(0.0, 2.0));
        }) == ErrorCode::EmptyPositiveSupport);
}

TEST_CASE("construction rejects malformed measures") {
  CHECK(thrown_code([] { LevyJumpMeasure::asymmetric_power_law(-1.0, 0.0); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] { LevyJumpMeasure::uniform_density(1.0, 0.5, 0.5); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] { LevyJumpMeasure::uniform_density(1.0, -1.5, 0.5); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] { LevyJumpMeasure::point_mass(1.0, -1.5); }) ==
        ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] {
          LevyJumpMeasure::discrete_compound(1.0, {{0.2, 0.5}, {0.4, 0.6}});
        }) == ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] {
          LevyJumpMeasure::discrete_compound(1.0, {{0.2, 1.5}, {0.4, -0.5}});
        }) == ErrorCode::ConfigInvalid);
  CHECK(thrown_code([] { LevyJumpMeasure::discrete_compound(1.0, {}); }) ==
        ErrorCode::ConfigInvalid);
}

TEST_CASE("series and direct branches agree at their switchover") {
  auto u = LevyJumpMeasure::uniform_density(1.3, -0.8, 0.9);
  for (double y : {0.9e-4, 1.2e-4}) {
    const double ref_p = oracle::integrate(
        [&](double z) { return -1.3 * z * std::pow(1.0 + y * z, -2.5); }, -0.8,
        0.9, 1e-14);
    CHECK(rel_err(psi_prime(u, 2.5, y), ref_p) < 5e-12);
    const double ref_s = oracle::integrate(
        [&](double z) {
          return 2.5 * 1.3 * z * z * std::pow(1.0 + y * z, -3.5);
        },
        -0.8, 0.9, 1e-14);
    CHECK(rel_err(psi_second(u, 2.5, y), ref_s) < 1e-10);
  }
  auto apl = LevyJumpMeasure::asymmetric_power_law(1.0, 0.5);
  for (double y : {0.9e-5, 1.1e-5}) {
    const double fd = oracle::central_diff(
        [&](double t) { return psi_prime(apl, 3.1, t); }, y, 1e-7);
    CHECK(rel_err(psi_second(apl, 3.1, y), fd) < 1e-6);
  }
}

TEST_CASE("arrival rates and amplitude sampling follow the measure") {
  auto apl = LevyJumpMeasure::asymmetric_power_law(2.0, 1.0);
  CHECK(rel_err(arrival_rate(apl, 1e-3), 3.0 * std::log(1000.0)) < 1e-14);
  CHECK(arrival_rate(LevyJumpMeasure::point_mass(1.7, 0.2), 1e-3) == 1.7);
  // uniform mass is lambda times support width, so rate*E[z] matches the
  // measure's first moment computed by mean_positive_jump
  auto uni = LevyJumpMeasure::uniform_density(2.0, 0.0, 0.5);
  CHECK(arrival_rate(uni, 1e-3) == 1.0);
  CHECK(rel_err(arrival_rate(uni, 1e-3) * 0.25, mean_positive_jump(uni)) <
        1e-14);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  int positive = 0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    const double z = sample_amplitude(apl, u01(rng), u01(rng), 1e-3);
    CHECK(std::abs(z) >= 1e-3);
    CHECK(std::abs(z) <= 1.0);
    if (z > 0) ++positive;
  }
  // Positive share should be near lambda_pos / total = 2/3.
  CHECK(std::abs(positive / double(draws) - 2.0 / 3.0) < 0.02);

  // Median magnitude of the 1/z law on [eps, 1] is sqrt(eps).
  std::vector<double> mags;
  for (int i = 0; i < 20001; ++i)
    mags.push_back(std::abs(sample_amplitude(apl, 0.0, u01(rng), 1e-4)));
  std::nth_element(mags.begin(), mags.begin() + 10000, mags.end());
  CHECK(std::abs(std::log10(mags[10000]) - (-2.0)) < 0.1);

  auto disc = LevyJumpMeasure::discrete_compound(1.0, {{-0.2, 0.5}, {0.4, 0.5}});
  for (int i = 0; i < 100; ++i) {
    const double z = sample_amplitude(disc, u01(rng), u01(rng), 1e-3);
    CHECK((z == -0.2 || z == 0.4));
  }
}
