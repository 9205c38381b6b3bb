#pragma once

// Orbit-complexity indicators from information curves: growth-law fits,
// limsup-ratio proxies against a scaling clock, and per-epsilon profiles.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wchaos/catalog.hpp"
#include "wchaos/infocontent.hpp"

namespace wchaos {

/// Scaling clock f(n).  Log is log2 n, LogPower(b) is (log2 n)^b; both are
/// evaluated at max(n, 2) so that f stays positive.
struct ScalingLaw {
  enum class Kind { Linear, Power, Log, LogPower };

  Kind kind = Kind::Linear;
  double param = 1.0;  // alpha for Power, beta for LogPower

  static ScalingLaw linear() { return {Kind::Linear, 1.0}; }
  static ScalingLaw power(double alpha);
  static ScalingLaw log() { return {Kind::Log, 1.0}; }
  static ScalingLaw log_power(double beta);
  /// "linear", "power:0.5", "log", "logpower:2".
  static ScalingLaw parse(const std::string& text);

  double operator()(double n) const;
  std::string id() const;
  bool operator==(const ScalingLaw&) const = default;
};

enum class Regime { Linear, Power, Logarithmic, Indeterminate };
std::string to_string(Regime r);

struct GrowthFit {
  /// alpha in I(n) ~ C n^alpha (log-log least squares), clamped to [0, 1.5].
  double exponent = 0.0;
  double power_coefficient = 0.0;  // C
  /// Slope of I against n.
  double rate = 0.0;
  /// c in I(n) ~ c log2 n + b.
  double log_coefficient = 0.0;
  /// Relative RMS error of the winning model.
  double residual = 0.0;
  Regime regime = Regime::Indeterminate;

  // relative RMS error of each candidate
  double power_residual = 0.0;
  double linear_residual = 0.0;
  double log_residual = 0.0;

  nlohmann::json to_json() const;
};

/// Winner must beat the runner-up's residual by this factor.
inline constexpr double kRegimeMargin = 0.8;

/// Fits I vs n, log I vs log n and I vs log n.  Power-law and linear growth
/// form one family (Linear when the exponent is at least 0.9) competing with
/// logarithmic growth under the margin rule.  Needs >= 6 points spanning a
/// factor >= 100 in n (SampleSizeError otherwise).
GrowthFit fit_growth(const InfoCurve& curve);

/// A power clock n^alpha matches a fitted exponent within this distance.
inline constexpr double kExponentMatch = 0.1;

struct KIndicator {
  double value = 0.0;
  bool infinite = false;
};

/// max I(n_j)/f(n_j) over the last tail_fraction of the schedule; infinite
/// when the ratio rises at every tail step and by more than 10% per decade.
KIndicator k_indicator(const InfoCurve& curve, const ScalingLaw& f, double tail_fraction = 0.5);

/// Indicator read off a growth fit: the fitted coefficient when f matches the
/// fitted law, 0 when I grows slower than f, infinite when faster.  Empty for
/// an Indeterminate fit.
std::optional<KIndicator> k_from_fit(const GrowthFit& fit, const ScalingLaw& f);

struct ProfileRow {
  Rational epsilon;
  InfoCurve curve;
  GrowthFit fit;
};

struct ComplexityProfile {
  std::vector<ProfileRow> rows;  // epsilon decreasing
  double sup_exponent = 0.0;
  double sup_rate = 0.0;
  /// Fitted rate nonincreasing as epsilon grows, within rate_slack.
  bool epsilon_monotone = true;

  /// "epsilon,n,bits,estimator,regime,exponent,rate,residual"
  std::string to_csv() const;
};

struct ProfileOptions {
  Estimator estimator = Estimator::PairGrowth;
  std::size_t schedule_start = 64;
  double rate_slack = 0.05;
};

/// 2^6, 2^7, ... up to n_max, with n_max itself appended when it is not a power of two.
std::vector<std::size_t> default_schedule(std::size_t n_max, std::size_t start = 64);

/// Error exponent used for an orbit that will be quantized down to epsilon.
int error_exponent_for(const Rational& epsilon);

/// Quantizes one orbit at every epsilon, compresses prefixes on the default
/// schedule and fits each curve.
ComplexityProfile orbit_complexity_profile(const MapDescriptor& map, const ExactPoint& x0,
                                           const std::vector<Rational>& epsilons, std::size_t n_max,
                                           const ProfileOptions& options = {});

}  // namespace wchaos
