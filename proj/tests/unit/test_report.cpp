#include <cmath>
#include <limits>

#include <doctest.h>

#include "wchaos/random.hpp"
#include "wchaos/report.hpp"

using namespace wchaos;

namespace {

const ScalingLaw lin = ScalingLaw::linear();
const ScalingLaw lg = ScalingLaw::log();

IndicatorValue v(double x, const ScalingLaw& f = lin) { return IndicatorValue::finite(f, x); }

SensitivityFit sfit(SensitivityRegime regime, double coefficient, double beta = 0.0) {
  SensitivityFit f;
  f.regime = regime;
  f.coefficient = coefficient;
  f.beta = beta;
  f.epsilon = Rational(1, 4);
  return f;
}

GrowthFit gfit(Regime regime, double rate, double exponent, double coefficient, double log_coefficient) {
  GrowthFit g;
  g.regime = regime;
  g.rate = rate;
  g.exponent = exponent;
  g.power_coefficient = coefficient;
  g.log_coefficient = log_coefficient;
  return g;
}

DimensionEstimate dim(double lower, double upper) {
  DimensionEstimate d;
  d.lower = lower;
  d.upper = upper;
  return d;
}

LocalDimension local(double value) {
  LocalDimension l;
  l.value = value;
  return l;
}

}  // namespace

TEST_CASE("upper check examples") {
  const Check sat = check_upper(v(1.0), 1.0, v(1.0), lin, 0.15);
  CHECK(sat.verdict == Verdict::Pass);
  CHECK(sat.rhs == doctest::Approx(1.15));
  CHECK(sat.margin == doctest::Approx(0.0));

  const Check over = check_upper(v(1.3), 1.0, v(1.0), lin, 0.15);
  CHECK(over.verdict == Verdict::Fail);
  CHECK(over.margin == doctest::Approx(-0.3));
  CHECK(over.comparison.find("1.3 <= 1 * 1") == 0);

  for (double d : {0.0, 0.5, 1.0, 2.0}) {
    CHECK(check_upper(v(0.0), d, v(0.0), lin, 0.15).verdict == Verdict::Pass);
  }
}

TEST_CASE("lower check examples") {
  CHECK(check_lower(v(1.0), 1.0, v(1.0), lin, 0.15).verdict == Verdict::Pass);
  const Check low = check_lower(v(0.5), 1.0, v(1.0), lin, 0.15);
  CHECK(low.verdict == Verdict::Fail);
  CHECK(low.rhs == doctest::Approx(0.85));
  CHECK(low.margin == doctest::Approx(-0.5));

  // outer radius that never shrinks reads as R = 0 under every clock
  const SensitivityFit none = sfit(SensitivityRegime::None, 0.0);
  for (const ScalingLaw& f : {lin, lg, ScalingLaw::power(0.5)}) {
    const IndicatorValue R = sensitivity_indicator(none, f);
    REQUIRE_FALSE(R.infinite);
    CHECK(R.value == 0.0);
    for (double K : {0.0, 0.3, 7.0}) CHECK(check_lower(v(K, f), 2.0, R, f, 0.15).verdict == Verdict::Pass);
  }
}

TEST_CASE("log clock adds one bit to the upper bound") {
  CHECK(check_upper(v(1.9, lg), 1.0, v(1.0, lg), lg, 0.15).verdict == Verdict::Pass);
  CHECK(check_upper(v(2.2, lg), 1.0, v(1.0, lg), lg, 0.15).verdict == Verdict::Fail);
  // no such term under the linear clock
  CHECK(check_upper(v(1.9), 1.0, v(1.0), lin, 0.15).verdict == Verdict::Fail);
  // nor on the lower side
  CHECK(check_lower(v(0.8, lg), 1.0, v(1.0, lg), lg, 0.15).verdict == Verdict::Fail);
}

TEST_CASE("clock and parameter errors") {
  CHECK_THROWS_AS(check_upper(v(1.0), 1.0, v(1.0, lg), lin, 0.15), UsageError);
  CHECK_THROWS_AS(check_upper(v(1.0, lg), 1.0, v(1.0, lg), lin, 0.15), UsageError);
  CHECK_THROWS_AS(check_lower(v(1.0), 1.0, v(1.0, lg), lg, 0.15), UsageError);
  CHECK_THROWS_AS(check_upper(v(1.0), 1.0, v(1.0), lin, 1.0), ParameterError);
  CHECK_THROWS_AS(check_upper(v(1.0), 1.0, v(1.0), lin, -0.01), ParameterError);
  CHECK_THROWS_AS(check_lower(v(1.0), -1.0, v(1.0), lin, 0.1), ParameterError);
  CHECK_THROWS_AS(check_lower(v(1.0), std::nan(""), v(1.0), lin, 0.1), ParameterError);
}

TEST_CASE("indeterminate inputs give indeterminate verdicts") {
  const IndicatorValue unk = IndicatorValue::unknown(lin);
  CHECK(check_upper(unk, 1.0, v(1.0), lin, 0.15).verdict == Verdict::Indeterminate);
  CHECK(check_upper(v(1.0), 1.0, unk, lin, 0.15).verdict == Verdict::Indeterminate);
  CHECK(check_lower(unk, 1.0, v(1.0), lin, 0.15).verdict == Verdict::Indeterminate);
  CHECK(check_lower(v(1.0), 1.0, unk, lin, 0.15).verdict == Verdict::Indeterminate);

  const auto checks = assess({gfit(Regime::Indeterminate, 0, 0, 0, 0)}, sfit(SensitivityRegime::Exponential, 1.0),
                             sfit(SensitivityRegime::Exponential, 1.0), dim(1, 1), local(1), 0.15);
  REQUIRE(checks.size() == 3);
  for (const Check& c : checks) CHECK(c.verdict == Verdict::Indeterminate);

  const auto sens_unknown =
      assess({gfit(Regime::Linear, 1.0, 1.0, 1.0, 0)}, sfit(SensitivityRegime::Indeterminate, 0.0),
             sfit(SensitivityRegime::Indeterminate, 0.0), dim(1, 1), local(1), 0.15);
  for (const Check& c : sens_unknown) CHECK(c.verdict == Verdict::Indeterminate);
}

TEST_CASE("infinite indicators") {
  const IndicatorValue inf = IndicatorValue::unbounded(lin);
  CHECK(check_upper(v(5.0), 1.0, inf, lin, 0.0).verdict == Verdict::Pass);
  CHECK(check_upper(inf, 1.0, v(1.0), lin, 0.5).verdict == Verdict::Fail);
  CHECK(check_lower(inf, 1.0, v(1.0), lin, 0.0).verdict == Verdict::Pass);
  CHECK(check_lower(v(5.0), 1.0, inf, lin, 0.5).verdict == Verdict::Fail);
  // d = 0 kills an infinite factor only on the bound side we can decide
  CHECK(check_lower(v(0.0), 0.0, inf, lin, 0.5).verdict == Verdict::Indeterminate);
}

TEST_CASE("verdicts are monotone in slack") {
  SplitMix64 rng(77);
  auto uniform = [&](double hi) { return hi * static_cast<double>(rng.next() >> 11) * 0x1p-53; };
  const double slacks[] = {0.0, 0.05, 0.1, 0.15, 0.3, 0.6, 0.95};
  for (int trial = 0; trial < 2000; ++trial) {
    const ScalingLaw f = trial % 2 ? lin : lg;
    const IndicatorValue K = v(uniform(3), f), r = v(uniform(2), f);
    const double d = uniform(2);
    bool upper_passed = false, lower_passed = false;
    for (double s : slacks) {
      const bool up = check_upper(K, d, r, f, s).verdict == Verdict::Pass;
      const bool lo = check_lower(K, d, r, f, s).verdict == Verdict::Pass;
      CHECK_FALSE((upper_passed && !up));
      CHECK_FALSE((lower_passed && !lo));
      upper_passed = up;
      lower_passed = lo;
    }
  }
}

TEST_CASE("sensitivity regimes map to clocks") {
  CHECK(clock_for(sfit(SensitivityRegime::Exponential, 1.0)) == lin);
  CHECK(clock_for(sfit(SensitivityRegime::None, 0.0)) == lin);
  CHECK(clock_for(sfit(SensitivityRegime::PowerLaw, 1.0)) == lg);
  CHECK(clock_for(sfit(SensitivityRegime::StretchedExp, 1.0, 0.5)) == ScalingLaw::power(0.5));
  CHECK_FALSE(clock_for(sfit(SensitivityRegime::Indeterminate, 0.0)).has_value());

  const SensitivityFit ex = sfit(SensitivityRegime::Exponential, 0.98);
  CHECK(sensitivity_indicator(ex, lin).value == doctest::Approx(0.98));
  CHECK(sensitivity_indicator(ex, lg).infinite);
  CHECK(sensitivity_indicator(ex, ScalingLaw::power(0.5)).infinite);

  const SensitivityFit pl = sfit(SensitivityRegime::PowerLaw, 1.02);
  CHECK(sensitivity_indicator(pl, lg).value == doctest::Approx(1.02));
  CHECK(sensitivity_indicator(pl, lin).value == 0.0);
  CHECK_FALSE(sensitivity_indicator(pl, lin).infinite);

  const SensitivityFit st = sfit(SensitivityRegime::StretchedExp, 0.7, 0.5);
  CHECK(sensitivity_indicator(st, ScalingLaw::power(0.55)).value == doctest::Approx(0.7));
  CHECK(sensitivity_indicator(st, lin).value == 0.0);
  CHECK(sensitivity_indicator(st, lg).infinite);

  CHECK(sensitivity_indicator(sfit(SensitivityRegime::Indeterminate, 0), lin).indeterminate);
}

TEST_CASE("complexity indicator takes the smallest estimator reading") {
  const GrowthFit a = gfit(Regime::Linear, 1.11, 1.0, 1.2, 0), b = gfit(Regime::Linear, 1.38, 1.0, 1.5, 0);
  CHECK(complexity_indicator({a, b}, lin).value == doctest::Approx(1.11));
  CHECK(complexity_indicator({b, a}, lin).value == doctest::Approx(1.11));
  CHECK(complexity_indicator({a}, lg).infinite);

  const GrowthFit logfit = gfit(Regime::Logarithmic, 0, 0.1, 0, 1.0);
  CHECK(complexity_indicator({a, logfit}, lg).value == doctest::Approx(1.0));
  CHECK(complexity_indicator({logfit}, lin).value == 0.0);
  // an Indeterminate fit is skipped when another one reads
  CHECK(complexity_indicator({gfit(Regime::Indeterminate, 9, 1, 9, 9), a}, lin).value == doctest::Approx(1.11));
  CHECK(complexity_indicator({gfit(Regime::Indeterminate, 9, 1, 9, 9)}, lin).indeterminate);
}

TEST_CASE("baseline correction charges a constant string log2 n") {
  SymbolSequence flat;
  flat.alphabet_size = 2;
  flat.symbols.assign(1 << 14, 0);
  const std::vector<std::size_t> schedule{1, 2, 64, 1000, 1 << 14};
  for (Estimator e : {Estimator::LZ78, Estimator::PairGrowth}) {
    const InfoCurve c = baseline_corrected(info_curve(flat, schedule, e), 2);
    CHECK(c.values[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < schedule.size(); ++i) {
      CHECK(c.values[i] == doctest::Approx(std::log2(static_cast<double>(schedule[i]))));
    }
  }

  // a random string keeps its size up to the small baseline
  SplitMix64 rng(5);
  SymbolSequence noise;
  noise.alphabet_size = 2;
  for (int i = 0; i < (1 << 14); ++i) noise.symbols.push_back(static_cast<std::uint32_t>(rng.next() >> 63));
  const InfoCurve raw = info_curve(noise, {1 << 14}, Estimator::LZ78);
  const InfoCurve cor = baseline_corrected(raw, 2);
  CHECK(cor.values[0] <= raw.values[0] + 14);
  CHECK(cor.values[0] >= 0.9 * raw.values[0]);
}

TEST_CASE("assess is a pure function of its inputs") {
  const std::vector<GrowthFit> k{gfit(Regime::Linear, 1.05, 1.0, 1.1, 0)};
  const auto r = sfit(SensitivityRegime::Exponential, 0.99), R = sfit(SensitivityRegime::Exponential, 1.0);
  const auto first = assess(k, r, R, dim(0.99, 1.0), local(1.0), 0.15);
  const auto second = assess(k, r, R, dim(0.99, 1.0), local(1.0), 0.15);
  REQUIRE(first.size() == 3);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i].to_json() == second[i].to_json());
  CHECK(first[0].inequality == "upper");
  CHECK(first[1].inequality == "lower_box");
  CHECK(first[2].inequality == "lower_measure");
  for (const Check& c : first) CHECK(c.verdict == Verdict::Pass);
  CHECK(first[0].rhs == doctest::Approx(1.0 * 0.99 * 1.15));
  CHECK(first[1].rhs == doctest::Approx(0.99 * 0.85));
}

TEST_CASE("golden reports without sensitive dependence") {
  SplitMix64 rng(2024);
  const ReportOptions opts;

  const PointReport id = build_report(MapDescriptor::identity(), {Rational(1, 3), 0}, opts);
  CHECK(id.fail_count() == 0);
  CHECK(id.r_fit.regime == SensitivityRegime::None);
  CHECK(id.ambient.upper == doctest::Approx(1.0).epsilon(0.05));

  const auto rot = MapDescriptor::rotation();
  const PointReport rr = build_report(rot, random_point(rng, rot.domain(), 64), opts);
  CHECK(rr.fail_count() == 0);
  CHECK(rr.R_fit.regime == SensitivityRegime::None);
  CHECK(rr.local.value == doctest::Approx(1.0).epsilon(0.1));

  ReportOptions plm_opts;
  plm_opts.sens_epsilon = Rational(1, 4);
  const PointReport plm = build_report(MapDescriptor::pl_manneville(2, Rational(1, 2)), {0, 0}, plm_opts);
  CHECK(plm.fail_count() == 0);
  CHECK(plm.r_fit.regime == SensitivityRegime::PowerLaw);
  REQUIRE(plm.checks.size() == 3);
  CHECK(plm.checks[0].clock == lg);
  for (const Check& c : plm.checks) CHECK(c.verdict == Verdict::Pass);
}

TEST_CASE("report output formats") {
  const PointReport id = build_report(MapDescriptor::identity(), {Rational(1, 3), 0});
  const std::string csv = id.to_csv();
  CHECK(csv.rfind("map,x,inequality,lhs,rhs,slack,verdict\n", 0) == 0);
  CHECK(csv.find("Identity,1/3,upper,0,0,0.15,pass\n") != std::string::npos);

  const auto j = id.to_json();
  for (const char* key : {"map", "x", "K_hat", "indicators", "r_hat", "R_hat", "d_upper", "d_mu", "verdicts"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["verdicts"].size() == 3);
  CHECK(j["verdicts"][0]["comparison"].get<std::string>().find("<=") != std::string::npos);

  const auto skew = MapDescriptor::skew_shift();
  ReportOptions o;
  o.info_n = 1 << 14;
  o.sens_schedule = {8, 16, 32, 64, 128, 256};
  o.local_n = 1 << 12;
  const PointReport sk = build_report(skew, {Rational(1, 4), Rational(-1, 2)}, o);
  CHECK(sk.to_csv().find(",\"(1/4,-1/2)\",") != std::string::npos);
}

TEST_CASE("per-n bounds hold for constant and collapsing orbits") {
  const std::vector<std::size_t> schedule{16, 64, 256, 1024, 4096};
  const SurrogateTable id = check_surrogate_bounds(MapDescriptor::identity(), {Rational(1, 2), 0}, schedule, Rational(1, 16));
  REQUIRE(id.rows.size() == schedule.size());
  CHECK(id.fail_count() == 0);
  for (const auto& r : id.rows) {
    CHECK(r.inner == Verdict::Pass);
    CHECK(r.outer == Verdict::Pass);
    CHECK(r.s_inner == id.rows.front().s_inner);
  }

  const auto plm = MapDescriptor::pl_manneville(2, Rational(1, 2));
  const SurrogateTable p = check_surrogate_bounds(plm, {0, 0}, schedule, Rational(1, 4));
  CHECK(p.fail_count() == 0);
  for (std::size_t i = 1; i < p.rows.size(); ++i) {
    // inner radius shrinks like 1/n: two more bits per factor 4 in n
    CHECK(p.rows[i].s_inner - p.rows[i - 1].s_inner <= 3);
    CHECK(p.rows[i].info_2eps <= p.rows[i].rhs_inner);
  }

  CHECK(id.to_csv().rfind("n,info_2eps,s_inner,rhs_inner,inner,s_outer,info_eps,rhs_outer,outer\n", 0) == 0);
  CHECK(id.to_json()["constant_bits"] == 64.0);
  CHECK_THROWS_AS(check_surrogate_bounds(plm, {0, 0}, {}, Rational(1, 4)), ParameterError);
}

TEST_CASE("doubling surrogate bounds at small n") {
  SplitMix64 rng(39);
  const auto dbl = MapDescriptor::doubling();
  const ExactPoint x = random_point(rng, dbl.domain(), 2048);
  const SurrogateTable t = check_surrogate_bounds(dbl, x, {16, 32, 64}, Rational(1, 16));
  for (const auto& r : t.rows) {
    // the inner radius is eps 2^-n to within a couple of bits
    CHECK(r.s_inner >= static_cast<double>(r.n));
    CHECK(r.s_inner <= static_cast<double>(r.n) + 16);
    CHECK(r.outer == Verdict::Pass);
  }
}

TEST_CASE("doubling information at 2 eps stays under the inner bound" * doctest::may_fail()) {
  SplitMix64 rng(39);
  const auto dbl = MapDescriptor::doubling();
  const ExactPoint x = random_point(rng, dbl.domain(), 2048);
  const SurrogateTable t = check_surrogate_bounds(dbl, x, {128, 256, 512}, Rational(1, 16));
  CHECK(t.fail_count() == 0);
}
