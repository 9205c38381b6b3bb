#pragma once

// Sensitivity to initial conditions: the largest ball around x whose points
// all track the orbit of x within epsilon for n steps (inner radius r), and
// the distance to the farthest point that still does (outer radius R).

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wchaos/catalog.hpp"

namespace wchaos {

/// True iff d(T^i y, T^i x) <= epsilon for i = 0..n.  Uses exact rationals when
/// the map supports them and x is at most 4096 bits long; otherwise certified
/// orbits, escalating precision until every comparison is decided
/// (PrecisionError if it never is).
bool stays_close(const MapDescriptor& map, const ExactPoint& x, const ExactPoint& y, std::size_t n,
                 const Rational& epsilon);

struct SensitivityOptions {
  /// Bisection stops when the bracket is within 2^-mantissa_bits relative.
  int mantissa_bits = 10;
  /// Search depth: radii below 2^-floor_bits are reported as the floor.
  int floor_bits = 1024;
  /// Outward scan density for the outer radius.
  int scan_per_octave = 4;
};

struct RadiusEstimate {
  Rational value;
  bool at_floor = false;
};

/// Searched along +-1 in 1D and along an 8-direction star (axes and
/// diagonals, max metric) in 2D; the minimum over directions.  A direction
/// that stays close all the way to the domain edge does not constrain r.
RadiusEstimate inner_radius(const MapDescriptor& map, const ExactPoint& x, std::size_t n, const Rational& epsilon,
                            const SensitivityOptions& options = {});

/// Farthest point found on the same directions (descending dyadic scan, then
/// bisection against the next scanned point); never below the inner radius.
RadiusEstimate outer_radius(const MapDescriptor& map, const ExactPoint& x, std::size_t n, const Rational& epsilon,
                            const SensitivityOptions& options = {});

struct SensitivityCurve {
  ExactPoint x;
  Rational epsilon;
  std::vector<std::size_t> schedule;
  std::vector<Rational> r_values;
  std::vector<Rational> R_values;
  std::vector<double> neglog_r;
  std::vector<double> neglog_R;
  bool floor_hit = false;
  /// 2D radii come from the direction star, not the full ball.
  bool ray_star = false;

  /// "n,r,R,neglog_r,neglog_R"
  std::string to_csv() const;
};

/// Radii are clamped to stay nonincreasing along the schedule (B(n,x,eps)
/// shrinks with n).
SensitivityCurve sensitivity_curve(const MapDescriptor& map, const ExactPoint& x, const Rational& epsilon,
                                   const std::vector<std::size_t>& schedule, const SensitivityOptions& options = {});

enum class SensitivityRegime { None, PowerLaw, StretchedExp, Exponential, Indeterminate };
std::string to_string(SensitivityRegime r);

enum class RadiusKind { Inner, Outer };

inline constexpr double kSensitivityMargin = 0.8;

struct SensitivityFit {
  SensitivityRegime regime = SensitivityRegime::None;
  /// Slope of -log2 radius against the regime's clock: n (Exponential),
  /// n^beta (StretchedExp), log2 n (PowerLaw).  0 for None.
  double coefficient = 0.0;
  double beta = 0.0;  // StretchedExp only
  /// RMS error of the winning regression, in bits.
  double residual = 0.0;
  Rational epsilon;

  nlohmann::json to_json() const;
};

/// None when -log2 radius spreads by less than one bit over the schedule;
/// otherwise the clock whose regression residual is at most 0.8 times every
/// other candidate's, else Indeterminate.  Needs >= 6 points.
SensitivityFit fit_sensitivity(const SensitivityCurve& curve, RadiusKind which);

/// -log2 q for q > 0, accurate for numerators and denominators of any size.
double neglog2(const Rational& q);

}  // namespace wchaos
