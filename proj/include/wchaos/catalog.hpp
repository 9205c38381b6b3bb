#pragma once

// Dynamical systems used throughout the toolkit, with three evaluation paths:
//   * eval         - double precision, for sampling and plotting
//   * iterate      - certified fixed-point iteration (every stored point is
//                    within 2^-m of the true orbit point)
//   * iterate_exact - arbitrary-precision rationals, for maps that are
//                    rational-affine (the oracle for iterate)

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <json.hpp>

#include "wchaos/errors.hpp"

namespace wchaos {

using Rational = mpq_class;

enum class MapKind { Identity, Rotation, Doubling, PLManneville, SmoothManneville, SkewShift2D };

/// Interval: |x - y|.  Circle: |x - y| mod 1 folded to [0, 1/2].  Max: max over coordinates.
enum class Metric { Interval, Circle, Max };

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct ExactPoint {
  Rational x;
  Rational y;
};

/// Axis-aligned box [lo, hi]^dim.
struct Domain {
  int dim = 1;
  int lo = 0;
  int hi = 1;

  double diameter() const { return static_cast<double>(hi - lo); }
  bool contains(const ExactPoint& p) const;
  bool contains(Point p) const;
};

class MapDescriptor {
 public:
  static constexpr std::uint64_t kDefaultBranchLimit = std::uint64_t{1} << 60;

  static MapDescriptor identity();
  /// Rotation x -> x + t (mod 1) on the circle.
  static MapDescriptor rotation(Rational t);
  static MapDescriptor rotation();  // golden-mean angle truncated to 60 bits
  static MapDescriptor doubling();
  static MapDescriptor pl_manneville(double z, Rational a,
                                     std::uint64_t branch_limit = kDefaultBranchLimit);
  static MapDescriptor smooth_manneville(double z);
  static MapDescriptor skew_shift();

  static MapDescriptor from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  MapKind kind() const { return kind_; }
  int dimension() const { return kind_ == MapKind::SkewShift2D ? 2 : 1; }
  Metric metric() const;
  Domain domain() const;

  const Rational& angle() const { return angle_; }
  double z() const { return z_; }
  const Rational& a() const { return a_; }
  std::uint64_t branch_limit() const { return branch_limit_; }

  /// Short stable identifier, e.g. "PLManneville(z=2,a=1/2)".
  std::string id() const;

  bool operator==(const MapDescriptor&) const = default;

 private:
  MapDescriptor() = default;

  MapKind kind_ = MapKind::Identity;
  Rational angle_;
  double z_ = 0.0;
  Rational a_;
  std::uint64_t branch_limit_ = kDefaultBranchLimit;
};

std::string to_string(MapKind kind);
MapKind map_kind_from_string(const std::string& name);

/// Parses "p/q", an integer, or a plain decimal such as "0.3" (exactly 3/10).
Rational parse_rational(const std::string& text);
/// JSON numbers go through their shortest round-trip decimal, so 0.3 becomes 3/10.
Rational rational_from_json(const nlohmann::json& j);
std::string to_string(const Rational& q);

/// Signed fixed-point coordinate with 62 fractional bits, covering [-2, 2).
class FixedCoord {
 public:
  static constexpr int kFracBits = 62;

  constexpr FixedCoord() = default;
  static constexpr FixedCoord from_raw(std::int64_t raw) {
    FixedCoord c;
    c.raw_ = raw;
    return c;
  }
  /// Rounds value * 2^-scale_bits to the nearest representable coordinate.
  static FixedCoord from_scaled(const mpz_class& value, std::size_t scale_bits);
  static FixedCoord from_rational(const Rational& q);

  constexpr std::int64_t raw() const { return raw_; }
  double to_double() const;
  Rational to_rational() const;

  bool operator==(const FixedCoord&) const = default;

 private:
  std::int64_t raw_ = 0;
};

struct OrbitPoint {
  FixedCoord x;
  FixedCoord y;

  Point to_point() const { return {x.to_double(), y.to_double()}; }
  bool operator==(const OrbitPoint&) const = default;
};

/// Finite trajectory x, T(x), ..., T^n(x).  Every stored coordinate is within
/// 2^-error_exponent of the true orbit point.
class Orbit {
 public:
  Orbit(ExactPoint start, int dim, int error_exponent, std::vector<OrbitPoint> points,
        std::size_t working_precision, double working_error_log2, bool exact = false);

  const std::vector<OrbitPoint>& points() const { return points_; }
  const ExactPoint& start() const { return start_; }
  int dimension() const { return dim_; }
  int error_exponent() const { return error_exponent_; }
  std::size_t length() const { return points_.empty() ? 0 : points_.size() - 1; }
  /// Fixed-point precision (fractional bits) of the accepted run.
  std::size_t working_precision() const { return working_precision_; }
  /// log2 of the largest ledger error before storage rounding; -inf when exact.
  double working_error_log2() const { return working_error_log2_; }
  double error_bound() const;
  /// True when every stored coordinate equals the true orbit point.
  bool exact() const { return exact_; }

  std::vector<Point> to_points() const;

 private:
  ExactPoint start_;
  int dim_;
  int error_exponent_;
  std::vector<OrbitPoint> points_;
  std::size_t working_precision_;
  double working_error_log2_;
  bool exact_;
};

struct Modulus {
  /// d(x,y) < 2^-(n+shift) implies d(Tx,Ty) < 2^-n on every branch.
  int shift = 0;
};

struct IterateOptions {
  /// Hard cap on working precision, in fractional bits.
  std::size_t max_precision_bits = std::size_t{1} << 24;
};

inline constexpr int kMaxErrorExponent = 60;

bool supports_exact(const MapDescriptor& map);

/// Double-precision evaluation.  Throws DomainError for points outside the domain.
Point eval(const MapDescriptor& map, Point p);

/// Exact rational evaluation.  Throws CapabilityError when the map is not
/// rational-affine, DomainError outside the domain.
ExactPoint eval_exact(const MapDescriptor& map, const ExactPoint& p);

std::vector<ExactPoint> iterate_exact(const MapDescriptor& map, const ExactPoint& x0,
                                      std::size_t n);

/// Certified iteration: returns n+1 points, each within 2^-m of the true orbit.
/// Throws ResourceError if m > kMaxErrorExponent or if the working precision
/// needed exceeds the cap, PrecisionError if the orbit enters the truncated
/// branch region of PLManneville.
Orbit iterate(const MapDescriptor& map, const ExactPoint& x0, std::size_t n, int m,
              const IterateOptions& options = {});

Modulus modulus(const MapDescriptor& map);

double distance(const MapDescriptor& map, Point p, Point q);
Rational distance_exact(const MapDescriptor& map, const ExactPoint& p, const ExactPoint& q);
double distance(Metric metric, Point p, Point q);
Rational distance_exact(Metric metric, const ExactPoint& p, const ExactPoint& q);

/// Breakpoint xi_k = a / (k+1)^(1/(z-1)), k >= 0, with xi_{-1} = 1.
double manneville_breakpoint(const MapDescriptor& map, std::int64_t k);
/// Exact xi_k for z = 2.
Rational manneville_breakpoint_exact(const MapDescriptor& map, std::int64_t k);

}  // namespace wchaos
