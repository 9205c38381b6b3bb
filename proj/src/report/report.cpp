#include "wchaos/report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

namespace wchaos {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// (family, parameter): log-type clocks below power-type ones
std::pair<int, double> growth_rank(const ScalingLaw& f) {
  switch (f.kind) {
    case ScalingLaw::Kind::Log:
      return {0, 1.0};
    case ScalingLaw::Kind::LogPower:
      return {0, f.param};
    case ScalingLaw::Kind::Power:
      return {1, f.param};
    case ScalingLaw::Kind::Linear:
      return {1, 1.0};
  }
  return {1, 1.0};
}

int compare_clocks(const ScalingLaw& a, const ScalingLaw& b) {
  const auto [fa, pa] = growth_rank(a);
  const auto [fb, pb] = growth_rank(b);
  if (fa != fb) return fa < fb ? -1 : 1;
  if (std::abs(pa - pb) <= kExponentMatch) return 0;
  return pa < pb ? -1 : 1;
}

void check_inputs(const IndicatorValue& K, double d, const IndicatorValue& other, const ScalingLaw& f, double slack,
                  const char* other_name) {
  if (!(slack >= 0.0 && slack < 1.0)) throw ParameterError(fmt::format("slack must lie in [0, 1) (got {})", slack));
  if (!(d >= 0.0) || !std::isfinite(d)) throw ParameterError(fmt::format("dimension must be finite and >= 0 (got {})", d));
  if (!(K.clock == f) || !(other.clock == f)) {
    throw UsageError(fmt::format("clock mismatch: K under {}, {} under {}, check under {}", K.clock.id(), other_name,
                                 other.clock.id(), f.id()));
  }
}

std::string num(double v) { return std::isinf(v) ? "inf" : fmt::format("{:.6g}", v); }

nlohmann::json json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// Exact when short; long seeded points are shown by their double value.
std::string coord_text(const Rational& q) {
  std::string s = to_string(q);
  return s.size() <= 64 ? s : fmt::format("~{:.17g}", q.get_d());
}

std::string point_text(const ExactPoint& x, int dim) {
  return dim == 1 ? coord_text(x.x) : "(" + coord_text(x.x) + "," + coord_text(x.y) + ")";
}

std::vector<double> dyadic(int from, int to) {
  std::vector<double> out;
  for (int e = from; e <= to; ++e) out.push_back(std::ldexp(1.0, -e));
  return out;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    case Verdict::Indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

nlohmann::json IndicatorValue::to_json() const {
  nlohmann::json j{{"clock", clock.id()}};
  if (indeterminate) {
    j["value"] = "indeterminate";
  } else if (infinite) {
    j["value"] = "inf";
  } else {
    j["value"] = value;
  }
  return j;
}

nlohmann::json Check::to_json() const {
  return {{"inequality", inequality},  {"clock", clock.id()}, {"lhs", json_number(lhs)},
          {"rhs", json_number(rhs)},   {"slack", slack},      {"margin", json_number(margin)},
          {"verdict", to_string(verdict)}, {"comparison", comparison}};
}

Check check_upper(const IndicatorValue& K, double d, const IndicatorValue& r, const ScalingLaw& f, double slack,
                  const std::string& name) {
  check_inputs(K, d, r, f, slack, "r");
  Check c{name, f, K.value, 0.0, slack, 0.0, Verdict::Indeterminate, ""};
  const double add = f.kind == ScalingLaw::Kind::Log ? 1.0 : 0.0;
  if (K.indeterminate || r.indeterminate) {
    c.comparison = "regime indeterminate";
    return c;
  }
  if (r.infinite) {
    c.lhs = K.infinite ? kInf : K.value;
    c.rhs = d > 0 ? kInf : 0.0;
    c.margin = c.rhs - c.lhs;
    c.comparison = fmt::format("{} <= {} * inf", num(c.lhs), num(d));
    if (d > 0 && !K.infinite) c.verdict = Verdict::Pass;
    return c;
  }
  if (K.infinite) {
    c.lhs = kInf;
    c.rhs = d * r.value * (1 + slack) + add;
    c.margin = -kInf;
    c.verdict = Verdict::Fail;
    c.comparison = fmt::format("inf <= {}", num(c.rhs));
    return c;
  }
  const double bound = d * r.value;
  c.rhs = bound * (1 + slack) + add;
  c.margin = bound + add - K.value;
  c.verdict = K.value <= c.rhs ? Verdict::Pass : Verdict::Fail;
  c.comparison = fmt::format("{} <= {} * {} * (1 + {}){}", num(K.value), num(d), num(r.value), slack,
                             add > 0 ? " + 1" : "");
  return c;
}

Check check_lower(const IndicatorValue& K, double d, const IndicatorValue& R, const ScalingLaw& f, double slack,
                  const std::string& name) {
  check_inputs(K, d, R, f, slack, "R");
  Check c{name, f, K.value, 0.0, slack, 0.0, Verdict::Indeterminate, ""};
  if (K.indeterminate || R.indeterminate) {
    c.comparison = "regime indeterminate";
    return c;
  }
  if (R.infinite) {
    c.lhs = K.infinite ? kInf : K.value;
    c.rhs = d > 0 ? kInf : 0.0;
    c.margin = c.lhs - c.rhs;
    c.comparison = fmt::format("{} >= {} * inf", num(c.lhs), num(d));
    if (d > 0 && !K.infinite) c.verdict = Verdict::Fail;
    return c;
  }
  const double bound = d * R.value;
  c.rhs = bound * (1 - slack);
  if (K.infinite) {
    c.lhs = kInf;
    c.margin = kInf;
    c.verdict = Verdict::Pass;
    c.comparison = fmt::format("inf >= {}", num(c.rhs));
    return c;
  }
  c.margin = K.value - bound;
  c.verdict = K.value >= c.rhs ? Verdict::Pass : Verdict::Fail;
  c.comparison = fmt::format("{} >= {} * {} * (1 - {})", num(K.value), num(d), num(R.value), slack);
  return c;
}

std::optional<ScalingLaw> clock_for(const SensitivityFit& fit) {
  switch (fit.regime) {
    case SensitivityRegime::Exponential:
    case SensitivityRegime::None:
      return ScalingLaw::linear();
    case SensitivityRegime::StretchedExp:
      return ScalingLaw::power(fit.beta);
    case SensitivityRegime::PowerLaw:
      return ScalingLaw::log();
    case SensitivityRegime::Indeterminate:
      return std::nullopt;
  }
  return std::nullopt;
}

IndicatorValue sensitivity_indicator(const SensitivityFit& fit, const ScalingLaw& f) {
  if (fit.regime == SensitivityRegime::None) return IndicatorValue::finite(f, 0.0);
  const auto own = clock_for(fit);
  if (!own) return IndicatorValue::unknown(f);
  const int cmp = compare_clocks(*own, f);
  if (cmp == 0) return IndicatorValue::finite(f, fit.coefficient);
  return cmp < 0 ? IndicatorValue::finite(f, 0.0) : IndicatorValue::unbounded(f);
}

IndicatorValue complexity_indicator(const std::vector<GrowthFit>& fits, const ScalingLaw& f) {
  std::optional<IndicatorValue> best;
  for (const GrowthFit& fit : fits) {
    const auto k = k_from_fit(fit, f);
    if (!k) continue;
    const IndicatorValue v = k->infinite ? IndicatorValue::unbounded(f) : IndicatorValue::finite(f, k->value);
    if (!best || (best->infinite && !v.infinite) || (!v.infinite && v.value < best->value)) best = v;
  }
  return best.value_or(IndicatorValue::unknown(f));
}

InfoCurve baseline_corrected(const InfoCurve& curve, std::uint32_t alphabet_size) {
  if (curve.schedule.empty()) return curve;
  SymbolSequence flat;
  flat.alphabet_size = alphabet_size;
  flat.symbols.assign(curve.schedule.back(), 0);
  const InfoCurve base = info_curve(flat, curve.schedule, curve.estimator);
  InfoCurve out = curve;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const double n = static_cast<double>(std::max<std::size_t>(out.schedule[i], 2));
    out.values[i] = std::max(0.0, curve.values[i] - base.values[i]) + std::log2(n);
  }
  return out;
}

std::size_t PointReport::fail_count() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const Check& c) { return c.verdict == Verdict::Fail; }));
}

nlohmann::json PointReport::to_json() const {
  nlohmann::json k = nlohmann::json::array();
  for (std::size_t i = 0; i < k_fits.size(); ++i) {
    k.push_back({{"estimator", to_string(estimators[i])}, {"fit", k_fits[i].to_json()}});
  }
  nlohmann::json indicators = nlohmann::json::array();
  for (const ScalingLaw& f : {ScalingLaw::linear(), ScalingLaw::power(0.5), ScalingLaw::log()}) {
    indicators.push_back({{"K", complexity_indicator(k_fits, f).to_json()},
                          {"r", sensitivity_indicator(r_fit, f).to_json()},
                          {"R", sensitivity_indicator(R_fit, f).to_json()}});
  }
  nlohmann::json checks_json = nlohmann::json::array();
  for (const Check& c : checks) checks_json.push_back(c.to_json());
  return {{"map", map_id},
          {"x", point_text(x, dimension)},
          {"K_hat", k},
          {"indicators", indicators},
          {"r_hat", r_fit.to_json()},
          {"R_hat", R_fit.to_json()},
          {"d_upper", ambient.upper},
          {"d_lower", ambient.lower},
          {"ambient_dimension", ambient.to_json()},
          {"d_mu", local.to_json()},
          {"ray_star", ray_star},
          {"verdicts", checks_json},
          {"fail_count", fail_count()}};
}

std::string PointReport::to_csv() const {
  std::string out = "map,x,inequality,lhs,rhs,slack,verdict\n";
  for (const Check& c : checks) {
    out += fmt::format("{},{},{},{},{},{},{}\n", csv_field(map_id), csv_field(point_text(x, dimension)), c.inequality,
                       num(c.lhs), num(c.rhs), c.slack, to_string(c.verdict));
  }
  return out;
}

std::vector<Check> assess(const std::vector<GrowthFit>& k_fits, const SensitivityFit& r_fit,
                          const SensitivityFit& R_fit, const DimensionEstimate& ambient, const LocalDimension& local,
                          double slack) {
  std::vector<Check> out;
  const ScalingLaw fr = clock_for(r_fit).value_or(ScalingLaw::linear());
  out.push_back(check_upper(complexity_indicator(k_fits, fr), ambient.upper, sensitivity_indicator(r_fit, fr), fr,
                            slack, "upper"));
  const ScalingLaw fR = clock_for(R_fit).value_or(ScalingLaw::linear());
  const IndicatorValue K = complexity_indicator(k_fits, fR);
  const IndicatorValue R = sensitivity_indicator(R_fit, fR);
  out.push_back(check_lower(K, ambient.lower, R, fR, slack, "lower_box"));
  out.push_back(check_lower(K, local.value, R, fR, slack, "lower_measure"));
  return out;
}

DimensionEstimate ambient_dimension(const MapDescriptor& map, const std::vector<double>& scales) {
  const Domain dom = map.domain();
  const double lo = dom.lo, width = dom.hi - dom.lo;
  std::vector<Point> pts;
  std::vector<double> abs_scales;
  for (double s : scales) abs_scales.push_back(s * width);
  if (dom.dim == 1) {
    const std::size_t cells = std::size_t{1} << 14;
    for (std::size_t i = 0; i <= cells; ++i) pts.push_back({lo + width * static_cast<double>(i) / cells, 0});
    return box_dimension(pts, abs_scales, map.metric(), width / cells);
  }
  const std::size_t cells = std::size_t{1} << 9;
  for (std::size_t j = 0; j <= cells; ++j) {
    for (std::size_t i = 0; i <= cells; ++i) {
      pts.push_back({lo + width * static_cast<double>(i) / cells, lo + width * static_cast<double>(j) / cells});
    }
  }
  return box_dimension(pts, abs_scales, map.metric(), width / cells);
}

PointReport build_report(const MapDescriptor& map, const ExactPoint& x, const ReportOptions& o) {
  if (o.estimators.empty()) throw ParameterError("report needs at least one estimator");
  PointReport rep;
  rep.map_id = map.id();
  rep.x = x;
  rep.dimension = map.dimension();
  rep.estimators = o.estimators;

  const Orbit orbit = iterate(map, x, o.info_n, error_exponent_for(o.info_epsilon));
  const SymbolSequence seq = quantized_orbit(orbit, map.domain(), o.info_epsilon).prefix(o.info_n);
  const auto schedule = default_schedule(o.info_n, o.info_schedule_start);
  for (Estimator e : o.estimators) {
    rep.k_fits.push_back(fit_growth(baseline_corrected(info_curve(seq, schedule, e), seq.alphabet_size)));
  }

  std::vector<std::size_t> sens = o.sens_schedule;
  if (sens.empty()) {
    for (std::size_t n = 8; n <= 4096; n *= 2) sens.push_back(n);
  }
  const SensitivityCurve curve = sensitivity_curve(map, x, o.sens_epsilon, sens);
  rep.ray_star = curve.ray_star;
  rep.r_fit = fit_sensitivity(curve, RadiusKind::Inner);
  rep.R_fit = fit_sensitivity(curve, RadiusKind::Outer);

  const bool two_d = map.domain().dim == 2;
  rep.ambient = ambient_dimension(map, o.ambient_scales.empty() ? (two_d ? dyadic(2, 8) : dyadic(4, 12))
                                                                 : o.ambient_scales);
  rep.local = local_measure_dimension(map, x, o.local_n, o.local_scales.empty() ? dyadic(2, 7) : o.local_scales);
  rep.checks = assess(rep.k_fits, rep.r_fit, rep.R_fit, rep.ambient, rep.local, o.slack);
  return rep;
}

std::size_t SurrogateTable::fail_count() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += (r.inner == Verdict::Fail) + (r.outer == Verdict::Fail);
  return n;
}

nlohmann::json SurrogateTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"n", r.n},
                         {"info_2eps", r.info_2eps},
                         {"s_inner", r.s_inner},
                         {"rhs_inner", r.rhs_inner},
                         {"inner", to_string(r.inner)},
                         {"s_outer", r.s_outer},
                         {"info_eps", r.info_eps},
                         {"rhs_outer", r.rhs_outer},
                         {"outer", to_string(r.outer)}});
  }
  return {{"epsilon", to_string(epsilon)},
          {"constant_bits", kSurrogateConstant},
          {"allowance", kSurrogateAllowance},
          {"rows", rows_json},
          {"fail_count", fail_count()}};
}

std::string SurrogateTable::to_csv() const {
  std::string out = "n,info_2eps,s_inner,rhs_inner,inner,s_outer,info_eps,rhs_outer,outer\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{:.6g},{},{},{},{:.6g},{}\n", r.n, r.info_2eps, r.s_inner, r.rhs_inner,
                       to_string(r.inner), r.s_outer, r.info_eps, r.rhs_outer, to_string(r.outer));
  }
  return out;
}

SurrogateTable check_surrogate_bounds(const MapDescriptor& map, const ExactPoint& x, const std::vector<std::size_t>& schedule,
                         const Rational& epsilon, const std::vector<Estimator>& estimators) {
  if (schedule.empty()) throw ParameterError("empty schedule");
  if (estimators.empty()) throw ParameterError("need at least one estimator");
  if (epsilon <= 0) throw ParameterError("epsilon must be positive");
  const std::size_t n_max = *std::max_element(schedule.begin(), schedule.end());
  const Orbit orbit = iterate(map, x, n_max, error_exponent_for(epsilon));
  const SymbolSequence fine = quantized_orbit(orbit, map.domain(), epsilon);
  const SymbolSequence coarse = quantized_orbit(orbit, map.domain(), 2 * epsilon);
  auto info = [&](const SymbolSequence& s, std::size_t n) {
    double best = kInf;
    for (Estimator e : estimators) {
      const InfoCurve c = baseline_corrected(info_curve(s, {n}, e), s.alphabet_size);
      best = std::min(best, c.values.front());
    }
    return best;
  };
  // dominant term gets the allowance
  auto bound = [](double a, double b) {
    return (1 + kSurrogateAllowance) * std::max(a, b) + std::min(a, b) + kSurrogateConstant;
  };

  SurrogateTable table;
  table.epsilon = epsilon;
  for (std::size_t n : schedule) {
    if (n == 0) throw ParameterError("schedule entries must be >= 1");
    SurrogateRow row;
    row.n = n;
    row.info_2eps = info(coarse, n);
    SensitivityOptions opts;
    opts.floor_bits = static_cast<int>(std::max<std::size_t>(1024, 2 * n + 64));
    const RadiusEstimate r = inner_radius(map, x, n, epsilon, opts);
    row.s_inner = static_cast<double>(ambient_point_complexity(map, x, r.value).bits);
    row.rhs_inner = bound(row.s_inner, std::log2(static_cast<double>(n)));
    row.inner = row.info_2eps <= row.rhs_inner ? Verdict::Pass : Verdict::Fail;
    // a floored radius understates S, so only a pass is conclusive
    if (r.at_floor && row.inner == Verdict::Fail) row.inner = Verdict::Indeterminate;

    row.info_eps = info(fine, n);
    const RadiusEstimate R = outer_radius(map, x, n, 3 * epsilon, opts);
    row.s_outer = static_cast<double>(ambient_point_complexity(map, x, R.value).bits);
    row.rhs_outer = bound(row.info_eps, 0.0);
    row.outer = row.s_outer <= row.rhs_outer ? Verdict::Pass : Verdict::Fail;
    if (R.at_floor && row.outer == Verdict::Pass) row.outer = Verdict::Indeterminate;
    table.rows.push_back(row);
  }
  return table;
}

}  // namespace wchaos
