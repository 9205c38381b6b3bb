#include <cmath>

#include <doctest.h>
#include <mpfr.h>

#include "mpfr_oracle.hpp"
#include "wchaos/random.hpp"
#include "wchaos/sensitivity.hpp"

using namespace wchaos;

namespace {

Rational pow2(int e) {
  Rational q(1);
  if (e >= 0) {
    mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(e));
  } else {
    mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(-e));
  }
  return q;
}

const ExactPoint origin{0, 0};

std::vector<std::size_t> range(std::size_t lo, std::size_t hi) {
  std::vector<std::size_t> out;
  for (std::size_t n = lo; n <= hi; ++n) out.push_back(n);
  return out;
}

std::vector<std::size_t> pow2_schedule(int lo, int hi) {
  std::vector<std::size_t> out;
  for (int k = lo; k <= hi; ++k) out.push_back(std::size_t{1} << k);
  return out;
}

// true radius r lies in [r (1 - 2^-10), r] for the reported lower bound
bool within_bisection(const Rational& got, const Rational& truth) {
  return got <= truth && got >= truth * (1 - pow2(-10));
}

}  // namespace

TEST_CASE("stays_close examples") {
  const auto id = MapDescriptor::identity();
  CHECK(stays_close(id, {Rational(1, 2), 0}, {Rational(5, 8), 0}, 1000, Rational(1, 8)));
  CHECK_FALSE(stays_close(id, {Rational(1, 2), 0}, {Rational(5, 8) + pow2(-40), 0}, 0, Rational(1, 8)));

  const auto dbl = MapDescriptor::doubling();
  const ExactPoint y{pow2(-10), 0};
  CHECK(stays_close(dbl, origin, y, 5, pow2(-4)));
  CHECK(stays_close(dbl, origin, y, 6, pow2(-4)));
  CHECK_FALSE(stays_close(dbl, origin, y, 7, pow2(-4)));

  // B(n, 0, xi_k) = [0, xi_{k+n}] for the z = 2 map
  const auto plm = MapDescriptor::pl_manneville(2, Rational(1, 2));
  for (int k : {1, 2, 5}) {
    for (int n : {1, 7, 40}) {
      const Rational eps = manneville_breakpoint_exact(plm, k);
      const Rational edge = manneville_breakpoint_exact(plm, k + n);
      CHECK(stays_close(plm, origin, {edge - pow2(-60), 0}, n, eps));
      CHECK(stays_close(plm, origin, {edge, 0}, n, eps));
      CHECK_FALSE(stays_close(plm, origin, {edge + pow2(-60), 0}, n, eps));
    }
  }
  CHECK_THROWS_AS(stays_close(id, origin, origin, 1, Rational(0)), ParameterError);
  CHECK_THROWS_AS(stays_close(id, {Rational(2), 0}, origin, 1, Rational(1, 4)), DomainError);
}

TEST_CASE("certified stays_close agrees with a high-precision oracle") {
  SplitMix64 rng(99);
  for (double z : {2.5, 3.0}) {
    const auto map = MapDescriptor::pl_manneville(z, Rational(1, 2));
    const testing::MpfrManneville oracle{3000, z, 0.5};
    int decided = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const Rational x = random_dyadic(rng, 40);
      const Rational y = x + random_dyadic(rng, 40) / (trial % 2 ? 1 << 12 : 1 << 4);
      if (y > 1) continue;
      const Rational eps(1, 8);
      const std::size_t n = 200;
      mpfr_t a, b, d;
      mpfr_inits2(oracle.prec, a, b, d, static_cast<mpfr_ptr>(nullptr));
      mpfr_set_q(a, x.get_mpq_t(), MPFR_RNDN);
      mpfr_set_q(b, y.get_mpq_t(), MPFR_RNDN);
      double worst = 0, closest = 1;
      for (std::size_t i = 0; i <= n; ++i) {
        mpfr_sub(d, a, b, MPFR_RNDN);
        const double dist = std::fabs(mpfr_get_d(d, MPFR_RNDN));
        worst = std::max(worst, dist);
        closest = std::min(closest, std::fabs(dist - 0.125));
        if (worst > 0.125) break;
        oracle.step(a);
        oracle.step(b);
      }
      mpfr_clears(a, b, d, static_cast<mpfr_ptr>(nullptr));
      if (closest < 1e-9) continue;  // too close to call for a double comparison
      CAPTURE(z);
      CAPTURE(trial);
      CHECK(stays_close(map, {x, 0}, {y, 0}, n, eps) == (worst <= 0.125));
      ++decided;
    }
    CHECK(decided >= 30);
  }
}

TEST_CASE("inner radius examples") {
  CHECK(inner_radius(MapDescriptor::identity(), {Rational(1, 2), 0}, 17, Rational(1, 8)).value == Rational(1, 8));
  CHECK(inner_radius(MapDescriptor::doubling(), origin, 10, Rational(1, 4)).value == pow2(-12));
  const auto plm = MapDescriptor::pl_manneville(2, Rational(1, 2));
  const RadiusEstimate r = inner_radius(plm, origin, 8, Rational(1, 4));
  CHECK(within_bisection(r.value, Rational(1, 20)));
  CHECK_FALSE(r.at_floor);
}

TEST_CASE("inner radius through the certified path with a breakpoint on the grid") {
  // z = 3: xi_k = 1/(2 sqrt(k+1)), so eps = 1/4 = xi_3 and r(0, n) = xi_{n+3}.
  // The dyadic probe 1/4 is itself xi_3, whose orbit hits the discontinuity.
  const auto map = MapDescriptor::pl_manneville(3, Rational(1, 2));
  for (std::size_t n : {8, 32}) {
    const double truth = 0.5 / std::sqrt(static_cast<double>(n) + 4);
    const double got = inner_radius(map, origin, n, Rational(1, 4)).value.get_d();
    CAPTURE(n);
    CHECK(got <= truth * (1 + 1e-12));
    CHECK(got >= truth * (1 - std::ldexp(1.0, -10)));
  }
}

TEST_CASE("outer radius examples") {
  const auto id = MapDescriptor::identity();
  for (std::size_t n : {0, 1, 50}) {
    CHECK(outer_radius(id, {Rational(1, 2), 0}, n, Rational(1, 8)).value == Rational(1, 8));
  }
  const auto skew = MapDescriptor::skew_shift();
  for (std::size_t n : {1, 10, 100}) CHECK(outer_radius(skew, origin, n, Rational(1, 8)).value >= Rational(1, 8));
  CHECK(outer_radius(MapDescriptor::doubling(), origin, 10, Rational(1, 4)).value == pow2(-12));
}

TEST_CASE("doubling curve at the origin") {
  const auto c = sensitivity_curve(MapDescriptor::doubling(), origin, Rational(1, 4), range(1, 20));
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    CHECK(c.r_values[i] == pow2(-static_cast<int>(c.schedule[i]) - 2));
    CHECK(c.neglog_r[i] == static_cast<double>(c.schedule[i] + 2));
    CHECK(c.R_values[i] == c.r_values[i]);
  }
  const SensitivityFit f = fit_sensitivity(c, RadiusKind::Inner);
  CHECK(f.regime == SensitivityRegime::Exponential);
  CHECK(f.coefficient == doctest::Approx(1.0).epsilon(0.01));
  CHECK(fit_sensitivity(c, RadiusKind::Outer).regime == SensitivityRegime::Exponential);
  CHECK(c.to_csv().rfind("n,r,R,neglog_r,neglog_R\n1,1/8,1/8,3,3\n", 0) == 0);
  const auto j = f.to_json();
  CHECK(j["regime"] == "Exponential");
  CHECK(j["epsilon"] == "1/4");
}

TEST_CASE("Manneville z=2 curve at the origin is a power law") {
  const auto plm = MapDescriptor::pl_manneville(2, Rational(1, 2));
  const auto c = sensitivity_curve(plm, origin, Rational(1, 4), pow2_schedule(3, 12));
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    CHECK(within_bisection(c.r_values[i], Rational(1, 2 * (static_cast<long>(c.schedule[i]) + 2))));
  }
  const SensitivityFit f = fit_sensitivity(c, RadiusKind::Inner);
  CHECK(f.regime == SensitivityRegime::PowerLaw);
  CHECK(f.coefficient == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("skew map: inner radius shrinks like 1/n, outer radius does not shrink") {
  const auto c = sensitivity_curve(MapDescriptor::skew_shift(), origin, Rational(1, 8), pow2_schedule(3, 10));
  CHECK(c.ray_star);
  for (std::size_t i = 0; i < c.schedule.size(); ++i) {
    // the diagonal ray leaves first: t (n + 1) <= eps
    CHECK(within_bisection(c.r_values[i], Rational(1, 8 * (static_cast<long>(c.schedule[i]) + 1))));
    CHECK(c.R_values[i] >= Rational(1, 8));
  }
  const SensitivityFit inner = fit_sensitivity(c, RadiusKind::Inner);
  CHECK(inner.regime == SensitivityRegime::PowerLaw);
  CHECK(inner.coefficient == doctest::Approx(1.0).epsilon(0.15));
  CHECK(fit_sensitivity(c, RadiusKind::Outer).regime == SensitivityRegime::None);
}

TEST_CASE("isometries are not sensitive") {
  SplitMix64 rng(8);
  for (const auto& map : {MapDescriptor::identity(), MapDescriptor::rotation()}) {
    for (int i = 0; i < 3; ++i) {
      const ExactPoint x = random_point(rng, map.domain());
      const auto c = sensitivity_curve(map, x, Rational(1, 8), pow2_schedule(4, 12));
      CAPTURE(map.id());
      CHECK(fit_sensitivity(c, RadiusKind::Inner).regime == SensitivityRegime::None);
      CHECK(fit_sensitivity(c, RadiusKind::Outer).regime == SensitivityRegime::None);
      if (map.kind() == MapKind::Rotation) CHECK(c.r_values.front() == Rational(1, 8));
    }
  }
}

TEST_CASE("radius invariants") {
  SplitMix64 rng(21);
  const std::vector<MapDescriptor> maps{MapDescriptor::doubling(), MapDescriptor::pl_manneville(2, Rational(1, 3)),
                                        MapDescriptor::skew_shift()};
  for (const auto& map : maps) {
    for (int i = 0; i < 3; ++i) {
      const ExactPoint x = random_point(rng, map.domain(), 40);
      const auto c = sensitivity_curve(map, x, Rational(1, 16), pow2_schedule(0, 6));
      CAPTURE(map.id());
      for (std::size_t j = 0; j < c.schedule.size(); ++j) {
        CHECK(c.r_values[j] > 0);
        CHECK(c.r_values[j] <= c.R_values[j]);
        CHECK(c.R_values[j] <= map.domain().diameter());
        if (j) {
          CHECK(c.r_values[j] <= c.r_values[j - 1]);
          CHECK(c.R_values[j] <= c.R_values[j - 1]);
        }
      }
    }
  }
}

TEST_CASE("fitted sensitivity does not grow with epsilon") {
  const auto plm = MapDescriptor::pl_manneville(2, Rational(1, 2));
  const auto sched = pow2_schedule(3, 10);
  double prev = 1e9;
  for (int k : {4, 2, 1}) {  // increasing epsilon = xi_k
    const auto c = sensitivity_curve(plm, origin, manneville_breakpoint_exact(plm, k), sched);
    const double coeff = fit_sensitivity(c, RadiusKind::Inner).coefficient;
    CHECK(coeff <= prev + 0.05);
    prev = coeff;
  }
  const auto dbl = MapDescriptor::doubling();
  const double fine = fit_sensitivity(sensitivity_curve(dbl, origin, pow2(-6), range(1, 12)), RadiusKind::Inner).coefficient;
  const double coarse = fit_sensitivity(sensitivity_curve(dbl, origin, pow2(-2), range(1, 12)), RadiusKind::Inner).coefficient;
  CHECK(coarse <= fine + 0.01);
}

TEST_CASE("sensitivity fit on synthetic curves") {
  SensitivityCurve c;
  c.epsilon = Rational(1, 4);
  c.schedule = pow2_schedule(2, 12);
  auto fill = [&](auto g) {
    c.neglog_r.clear();
    for (auto n : c.schedule) c.neglog_r.push_back(g(static_cast<double>(n)));
    c.neglog_R = c.neglog_r;
  };
  fill([](double n) { return 2 + 3 * std::sqrt(n); });
  SensitivityFit f = fit_sensitivity(c, RadiusKind::Inner);
  CHECK(f.regime == SensitivityRegime::StretchedExp);
  CHECK(f.beta == doctest::Approx(0.5));
  CHECK(f.coefficient == doctest::Approx(3.0));
  CHECK(f.to_json()["beta"] == doctest::Approx(0.5));

  fill([](double n) { return 5 + 0.5 * std::log2(n); });
  f = fit_sensitivity(c, RadiusKind::Outer);
  CHECK(f.regime == SensitivityRegime::PowerLaw);
  CHECK(f.coefficient == doctest::Approx(0.5));

  fill([](double n) { return 5 + 0.05 * std::log2(n); });
  f = fit_sensitivity(c, RadiusKind::Inner);
  CHECK(f.regime == SensitivityRegime::None);
  CHECK(f.coefficient == 0.0);

  c.schedule.resize(5);
  c.neglog_r.resize(5);
  CHECK_THROWS_AS(fit_sensitivity(c, RadiusKind::Inner), SampleSizeError);
}

TEST_CASE("search floor and argument checks") {
  SensitivityOptions opt;
  opt.floor_bits = 8;
  const auto dbl = MapDescriptor::doubling();
  const RadiusEstimate r = inner_radius(dbl, origin, 20, Rational(1, 4), opt);
  CHECK(r.at_floor);
  CHECK(r.value == pow2(-8));
  const auto c = sensitivity_curve(dbl, origin, Rational(1, 4), range(1, 10), opt);
  CHECK(c.floor_hit);
  CHECK_THROWS_AS(sensitivity_curve(dbl, origin, Rational(1, 4), {4, 2}), ParameterError);
  opt.mantissa_bits = 0;
  CHECK_THROWS_AS(inner_radius(dbl, origin, 2, Rational(1, 4), opt), ParameterError);
  CHECK(neglog2(Rational(1, 1024)) == 10.0);
  CHECK(neglog2(pow2(-3000)) == 3000.0);
  CHECK_THROWS_AS(neglog2(Rational(0)), ParameterError);
}
