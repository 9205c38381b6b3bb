#pragma once

// Per-point verdicts for the inequalities tying orbit complexity, sensitivity
// and dimension together:
//   upper:          K^f <= d_upper(X) r^f        (+1 when f = log)
//   lower_box:      K^f >= d_lower(X) R^f
//   lower_measure:  K^f >= d_mu(x) R^f

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wchaos/catalog.hpp"
#include "wchaos/complexity.hpp"
#include "wchaos/dimension.hpp"
#include "wchaos/sensitivity.hpp"

namespace wchaos {

enum class Verdict { Pass, Fail, Indeterminate };
std::string to_string(Verdict v);

/// An indicator read under a fixed clock.
struct IndicatorValue {
  ScalingLaw clock;
  double value = 0.0;
  bool infinite = false;
  bool indeterminate = false;

  static IndicatorValue finite(const ScalingLaw& clock, double value) { return {clock, value, false, false}; }
  static IndicatorValue unbounded(const ScalingLaw& clock) { return {clock, 0.0, true, false}; }
  static IndicatorValue unknown(const ScalingLaw& clock) { return {clock, 0.0, false, true}; }

  nlohmann::json to_json() const;
};

struct Check {
  std::string inequality;
  ScalingLaw clock;
  double lhs = 0.0;  // K
  /// Threshold actually compared against, slack included.
  double rhs = 0.0;
  double slack = 0.0;
  /// Signed gap before slack; positive when the inequality holds outright.
  double margin = 0.0;
  Verdict verdict = Verdict::Indeterminate;
  /// The comparison performed, e.g. "1.12 <= 1 * 1.01 * (1 + 0.15)".
  std::string comparison;

  nlohmann::json to_json() const;
};

/// Pass iff K <= d r (1 + slack), plus 1 when f is the log clock.  Throws
/// UsageError unless K and r were both read under f, ParameterError unless
/// slack is in [0, 1) and d >= 0.
Check check_upper(const IndicatorValue& K, double d, const IndicatorValue& r, const ScalingLaw& f, double slack,
                  const std::string& name = "upper");

/// Pass iff K >= d R (1 - slack).
Check check_lower(const IndicatorValue& K, double d, const IndicatorValue& R, const ScalingLaw& f, double slack,
                  const std::string& name = "lower");

/// Clock on which a sensitivity regime is linear: Exponential -> n,
/// StretchedExp(beta) -> n^beta, PowerLaw -> log n, None -> n.  Empty for
/// Indeterminate.
std::optional<ScalingLaw> clock_for(const SensitivityFit& fit);

/// Sensitivity indicator under f: the fitted coefficient when f is the
/// regime's clock, 0 when the radius shrinks slower than f, infinite when faster.
IndicatorValue sensitivity_indicator(const SensitivityFit& fit, const ScalingLaw& f);

/// Smallest indicator over the fits (each compressor bounds the information
/// from above); Indeterminate fits are skipped unless all are.
IndicatorValue complexity_indicator(const std::vector<GrowthFit>& fits, const ScalingLaw& f);

/// I(n) - I(0^n) + log2 n: the compressor's own cost for a string carrying
/// nothing but its length is replaced by the ideal log2 n.
InfoCurve baseline_corrected(const InfoCurve& curve, std::uint32_t alphabet_size);

struct ReportOptions {
  /// Quantization scale and length of the orbit whose information is measured.
  Rational info_epsilon{1, 2};
  std::size_t info_n = std::size_t{1} << 16;
  std::size_t info_schedule_start = 64;
  std::vector<Estimator> estimators{Estimator::LZ78, Estimator::PairGrowth};

  Rational sens_epsilon{1, 4};
  std::vector<std::size_t> sens_schedule;  // empty: 8, 16, ..., 4096

  /// Scales for the ambient box dimension (fractions of the domain width).
  std::vector<double> ambient_scales;  // empty: 2^-4 .. 2^-12
  std::vector<double> local_scales;    // empty: 2^-2 .. 2^-7
  std::size_t local_n = std::size_t{1} << 16;

  double slack = 0.15;
};

struct PointReport {
  std::string map_id;
  ExactPoint x;
  int dimension = 1;
  std::vector<GrowthFit> k_fits;  // one per estimator, on baseline-corrected curves
  std::vector<Estimator> estimators;
  SensitivityFit r_fit;
  SensitivityFit R_fit;
  DimensionEstimate ambient;
  LocalDimension local;
  std::vector<Check> checks;
  bool ray_star = false;

  std::size_t fail_count() const;
  nlohmann::json to_json() const;
  /// "map,x,inequality,lhs,rhs,slack,verdict"
  std::string to_csv() const;
};

/// Verdicts from already computed inputs; a pure function of its arguments.
std::vector<Check> assess(const std::vector<GrowthFit>& k_fits, const SensitivityFit& r_fit,
                          const SensitivityFit& R_fit, const DimensionEstimate& ambient, const LocalDimension& local,
                          double slack);

/// Box dimension of a grid sample of the map's domain.
DimensionEstimate ambient_dimension(const MapDescriptor& map, const std::vector<double>& scales);

PointReport build_report(const MapDescriptor& map, const ExactPoint& x, const ReportOptions& options = {});

/// Fixed additive constants c1 = c2 and the multiplicative allowance on the
/// dominant term, for the per-n table below.
inline constexpr double kSurrogateConstant = 64.0;
inline constexpr double kSurrogateAllowance = 0.15;

struct SurrogateRow {
  std::size_t n = 0;
  // information at 2 eps vs S(x, r(x, n, eps)) + log2 n
  double info_2eps = 0.0;
  double s_inner = 0.0;
  double rhs_inner = 0.0;
  Verdict inner = Verdict::Indeterminate;
  // S(x, R(x, n, 3 eps)) vs information at eps
  double s_outer = 0.0;
  double info_eps = 0.0;
  double rhs_outer = 0.0;
  Verdict outer = Verdict::Indeterminate;
};

struct SurrogateTable {
  Rational epsilon;
  std::vector<SurrogateRow> rows;

  std::size_t fail_count() const;
  nlohmann::json to_json() const;
  /// "n,info_2eps,s_inner,rhs_inner,inner,s_outer,info_eps,rhs_outer,outer"
  std::string to_csv() const;
};

/// Information is the smallest baseline-corrected compressed size over the
/// estimators of the orbit quantized on the eps-grid; S is the ambient
/// grid-net surrogate.  Radius searches reach down to 2^-(2n+64).
/// Row passes iff lhs <= (1 + allowance) dominant + the rest + constant.
SurrogateTable check_surrogate_bounds(const MapDescriptor& map, const ExactPoint& x, const std::vector<std::size_t>& schedule,
                         const Rational& epsilon,
                         const std::vector<Estimator>& estimators = {Estimator::LZ78, Estimator::PairGrowth});

}  // namespace wchaos
