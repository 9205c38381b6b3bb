#include "wchaos/complexity.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "wchaos/coding.hpp"
#include "wchaos/regression.hpp"

namespace wchaos {

namespace {

// exponents this close count as the same power law

double relative_rms(const std::vector<double>& predicted, const std::vector<double>& actual) {
  double ss = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double r = (predicted[i] - actual[i]) / std::max(actual[i], 1.0);
    ss += r * r;
  }
  return std::sqrt(ss / static_cast<double>(actual.size()));
}

}  // namespace

ScalingLaw ScalingLaw::power(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ParameterError("power-law clock needs alpha in (0, 1]");
  return {Kind::Power, alpha};
}

ScalingLaw ScalingLaw::log_power(double beta) {
  if (!(beta > 0.0)) throw ParameterError("log-power clock needs beta > 0");
  return {Kind::LogPower, beta};
}

ScalingLaw ScalingLaw::parse(const std::string& text) {
  if (text == "linear") return linear();
  if (text == "log") return log();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    double v = 0;
    try {
      v = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw ParameterError("bad scaling law parameter in '" + text + "'");
    }
    if (head == "power") return power(v);
    if (head == "logpower") return log_power(v);
  }
  throw ParameterError("unknown scaling law '" + text + "' (linear, power:A, log, logpower:B)");
}

double ScalingLaw::operator()(double n) const {
  switch (kind) {
    case Kind::Linear:
      return n;
    case Kind::Power:
      return std::pow(n, param);
    case Kind::Log:
      return std::log2(std::max(n, 2.0));
    case Kind::LogPower:
      return std::pow(std::log2(std::max(n, 2.0)), param);
  }
  return n;
}

std::string ScalingLaw::id() const {
  switch (kind) {
    case Kind::Linear:
      return "linear";
    case Kind::Power:
      return fmt::format("power:{}", param);
    case Kind::Log:
      return "log";
    case Kind::LogPower:
      return fmt::format("logpower:{}", param);
  }
  return "linear";
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::Linear:
      return "Linear";
    case Regime::Power:
      return "Power";
    case Regime::Logarithmic:
      return "Logarithmic";
    case Regime::Indeterminate:
      return "Indeterminate";
  }
  return "Indeterminate";
}

nlohmann::json GrowthFit::to_json() const {
  return {{"regime", to_string(regime)},
          {"exponent", exponent},
          {"power_coefficient", power_coefficient},
          {"rate", rate},
          {"log_coefficient", log_coefficient},
          {"residual", residual},
          {"residuals", {{"power", power_residual}, {"linear", linear_residual}, {"log", log_residual}}}};
}

GrowthFit fit_growth(const InfoCurve& curve) {
  const auto& ns = curve.schedule;
  const auto& I = curve.values;
  if (ns.size() != I.size()) throw ParameterError("curve schedule and values differ in length");
  if (ns.size() < 6 || static_cast<double>(ns.back()) < 100.0 * static_cast<double>(ns.front())) {
    throw SampleSizeError(fmt::format("growth fit needs >= 6 points spanning a factor of 100 (got {} points)",
                                      ns.size()));
  }
  GrowthFit fit;
  if (std::all_of(I.begin(), I.end(), [&](double v) { return v == I.front(); })) {
    fit.regime = Regime::Logarithmic;
    return fit;
  }
  std::vector<double> n, logn, logI;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    n.push_back(static_cast<double>(ns[i]));
    logn.push_back(std::log2(n.back()));
    logI.push_back(std::log2(std::max(I[i], 1.0)));
  }
  const LineFit pw = fit_line(logn, logI);
  const LineFit lin = fit_line(n, I);
  const LineFit lg = fit_line(logn, I);
  std::vector<double> p_pw, p_lin, p_lg;
  for (std::size_t i = 0; i < n.size(); ++i) {
    p_pw.push_back(std::exp2(pw.intercept + pw.slope * logn[i]));
    p_lin.push_back(lin.intercept + lin.slope * n[i]);
    p_lg.push_back(lg.intercept + lg.slope * logn[i]);
  }
  fit.exponent = std::clamp(pw.slope, 0.0, 1.5);
  fit.power_coefficient = std::exp2(pw.intercept);
  fit.rate = lin.slope;
  fit.log_coefficient = lg.slope;
  fit.power_residual = relative_rms(p_pw, I);
  fit.linear_residual = relative_rms(p_lin, I);
  fit.log_residual = relative_rms(p_lg, I);

  const bool linear_like = fit.exponent >= 0.9;
  const double family = linear_like ? std::min(fit.power_residual, fit.linear_residual) : fit.power_residual;
  if (family <= kRegimeMargin * fit.log_residual && family < fit.log_residual) {
    fit.regime = linear_like ? Regime::Linear : Regime::Power;
    fit.residual = family;
  } else if (fit.log_residual <= kRegimeMargin * family && fit.log_residual < family) {
    fit.regime = Regime::Logarithmic;
    fit.residual = fit.log_residual;
  } else {
    fit.regime = Regime::Indeterminate;
    fit.residual = std::min(family, fit.log_residual);
  }
  return fit;
}

KIndicator k_indicator(const InfoCurve& curve, const ScalingLaw& f, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) throw ParameterError("tail_fraction must be in (0, 1]");
  const std::size_t k = curve.schedule.size();
  if (k == 0) throw SampleSizeError("empty information curve");
  const std::size_t tail = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(tail_fraction * k)));
  std::vector<double> ratios;
  for (std::size_t i = k - tail; i < k; ++i) {
    ratios.push_back(curve.values[i] / f(static_cast<double>(curve.schedule[i])));
  }
  KIndicator out;
  out.value = *std::max_element(ratios.begin(), ratios.end());
  if (ratios.size() >= 2) {
    bool rising = true;
    for (std::size_t i = 1; i < ratios.size(); ++i) rising = rising && ratios[i] > ratios[i - 1];
    const double decades =
        std::log10(static_cast<double>(curve.schedule.back()) / static_cast<double>(curve.schedule[k - tail]));
    if (rising && ratios.front() > 0 && ratios.back() / ratios.front() > std::pow(1.1, decades)) {
      out.infinite = true;
    }
  }
  return out;
}

std::optional<KIndicator> k_from_fit(const GrowthFit& fit, const ScalingLaw& f) {
  using K = ScalingLaw::Kind;
  const KIndicator zero{0.0, false}, inf{0.0, true};
  switch (fit.regime) {
    case Regime::Indeterminate:
      return std::nullopt;
    case Regime::Linear:
      if (f.kind == K::Linear || (f.kind == K::Power && f.param >= 1.0)) return KIndicator{fit.rate, false};
      return inf;
    case Regime::Power:
      if (f.kind == K::Linear || f.kind == K::Power) {
        const double alpha = f.kind == K::Linear ? 1.0 : f.param;
        if (std::abs(alpha - fit.exponent) <= kExponentMatch) return KIndicator{fit.power_coefficient, false};
        return alpha > fit.exponent ? zero : inf;
      }
      return inf;
    case Regime::Logarithmic:
      if (f.kind == K::Log || (f.kind == K::LogPower && f.param == 1.0)) return KIndicator{fit.log_coefficient, false};
      if (f.kind == K::LogPower && f.param < 1.0) return fit.log_coefficient > 0 ? inf : zero;
      return zero;
  }
  return std::nullopt;
}

std::string ComplexityProfile::to_csv() const {
  std::string out = "epsilon,n,bits,estimator,regime,exponent,rate,residual\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.curve.schedule.size(); ++i) {
      out += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(row.epsilon), row.curve.schedule[i],
                         row.curve.values[i], to_string(row.curve.estimator), to_string(row.fit.regime),
                         row.fit.exponent, row.fit.rate, row.fit.residual);
    }
  }
  return out;
}

std::vector<std::size_t> default_schedule(std::size_t n_max, std::size_t start) {
  if (start == 0 || n_max < start) {
    throw ParameterError(fmt::format("schedule needs n_max >= {} (got {})", start, n_max));
  }
  std::vector<std::size_t> out;
  for (std::size_t n = start; n <= n_max; n *= 2) out.push_back(n);
  if (out.back() != n_max) out.push_back(n_max);
  return out;
}

int error_exponent_for(const Rational& epsilon) {
  if (epsilon <= 0) throw ParameterError("epsilon must be positive");
  // an upper bound on -log2 eps from the bit lengths of numerator and denominator
  const long bits = static_cast<long>(mpz_sizeinbase(epsilon.get_den_mpz_t(), 2)) -
                    static_cast<long>(mpz_sizeinbase(epsilon.get_num_mpz_t(), 2)) + 1;
  return static_cast<int>(std::clamp<long>(bits + 8, 24, kMaxErrorExponent));
}

ComplexityProfile orbit_complexity_profile(const MapDescriptor& map, const ExactPoint& x0,
                                           const std::vector<Rational>& epsilons, std::size_t n_max,
                                           const ProfileOptions& options) {
  if (epsilons.empty()) throw ParameterError("profile needs at least one epsilon");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (epsilons[i] <= 0) throw ParameterError("epsilons must be positive");
    if (i && epsilons[i] >= epsilons[i - 1]) throw ParameterError("epsilons must be strictly decreasing");
  }
  const auto schedule = default_schedule(n_max, options.schedule_start);
  const Orbit orbit = iterate(map, x0, n_max, error_exponent_for(epsilons.back()));
  ComplexityProfile profile;
  for (const auto& eps : epsilons) {
    ProfileRow row;
    row.epsilon = eps;
    row.curve = info_curve(quantized_orbit(orbit, map.domain(), eps), schedule, options.estimator);
    row.fit = fit_growth(row.curve);
    profile.sup_exponent = std::max(profile.sup_exponent, row.fit.exponent);
    profile.sup_rate = std::max(profile.sup_rate, row.fit.rate);
    profile.rows.push_back(std::move(row));
  }
  // rows run from coarse to fine, so rates should not drop along the list
  for (std::size_t i = 0; i < profile.rows.size(); ++i) {
    for (std::size_t j = i + 1; j < profile.rows.size(); ++j) {
      if (profile.rows[i].fit.rate > profile.rows[j].fit.rate + options.rate_slack) profile.epsilon_monotone = false;
    }
  }
  return profile;
}

}  // namespace wchaos
