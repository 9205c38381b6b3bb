#pragma once

// Box-counting dimension from greedy epsilon-nets, local dimension of the
// empirical orbit measure, and the net-index description length S(x, eps).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "wchaos/catalog.hpp"

namespace wchaos {

/// Distances within this relative margin of epsilon count as epsilon.
inline constexpr double kNetTieTolerance = 1e-9;

struct NetIndex {
  double epsilon = 0.0;
  /// Positions in the input of the admitted centers, in discovery order.
  std::vector<std::size_t> center_ids;
  std::vector<Point> centers;

  std::size_t count() const { return centers.size(); }
};

/// Scans points in order, admitting one iff it is at distance >= epsilon from
/// every center admitted so far.
NetIndex greedy_net(std::span<const Point> points, double epsilon, Metric metric = Metric::Interval);

/// Centers pairwise >= epsilon apart and every input point within 3 epsilon of a center.
bool net_is_valid(std::span<const Point> points, const NetIndex& net, Metric metric = Metric::Interval);

struct DimensionEstimate {
  // Secants from the coarsest scale of the finest half to each finer one.
  double upper = 0.0;
  double lower = 0.0;
  double lsq_slope = 0.0;
  std::vector<double> scales;
  std::vector<std::size_t> counts;

  nlohmann::json to_json() const;
  /// "epsilon,count"
  std::string to_csv() const;
};

/// start, start * ratio, ... (count terms).
std::vector<double> geometric_scales(double start, double ratio, std::size_t count);

/// Needs >= 5 strictly decreasing scales spanning a factor >= 64 (ScaleError
/// otherwise).  With a resolution given, a scale below it is a ScaleError.
DimensionEstimate box_dimension(std::span<const Point> points, const std::vector<double>& scales,
                                Metric metric = Metric::Interval, std::optional<double> resolution = std::nullopt);

/// Box dimension of the certified orbit segment x0 .. T^n x0, stored to a
/// quarter of the finest scale.
DimensionEstimate orbit_closure_dimension(const MapDescriptor& map, const ExactPoint& x0, std::size_t n,
                                          const std::vector<double>& scales);

struct LocalDimension {
  double value = 0.0;  // min secant of log mass against log eps, finest half
  std::vector<double> scales;
  std::vector<double> masses;
  /// Some ball caught no orbit point; its mass was floored at 1/n.
  bool mass_floored = false;

  nlohmann::json to_json() const;
};

/// Empirical measure: visit frequencies of T x .. T^n x.
LocalDimension local_measure_dimension(const MapDescriptor& map, const ExactPoint& x, std::size_t n_orbit,
                                       const std::vector<double>& scales);

/// ceil(log2(1 + index)) + ceil(log2(max(1, log2(1/eps)))).
std::uint64_t net_description_bits(const mpz_class& index, double neglog2_eps);

struct PointComplexityCurve {
  std::vector<double> scales;
  std::vector<std::size_t> index;  // 0-based greedy index of the first center within 3 eps
  std::vector<std::uint64_t> bits;

  /// "epsilon,bits"
  std::string to_csv() const;
};

/// S(x, eps) per scale over the greedy nets of an enumerated set.  Throws
/// CoverageError when no center lies within 3 eps of x.
PointComplexityCurve point_complexity_curve(std::span<const Point> points, Point x, const std::vector<double>& scales,
                                            Metric metric = Metric::Interval);

struct AmbientComplexity {
  mpz_class index;
  std::uint64_t bits = 0;
};

/// S(x, eps) against the whole domain enumerated on the grid lo + k eps (row
/// by row in 2D), whose greedy net is the grid itself.  Exact for any
/// rational eps, so it reaches scales far below double range.
AmbientComplexity ambient_point_complexity(const MapDescriptor& map, const ExactPoint& x, const Rational& epsilon);

}  // namespace wchaos
