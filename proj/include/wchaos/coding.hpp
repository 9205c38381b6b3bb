#pragma once

// Orbit -> symbol string: coding against a finite cover (first element that
// certainly contains the point) and uniform epsilon-grid quantization.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "wchaos/catalog.hpp"

namespace wchaos {

using Symbol = std::uint32_t;

struct SymbolSequence {
  std::vector<Symbol> symbols;
  std::uint32_t alphabet_size = 2;
  /// How the string was produced, e.g. "cover:binary" or "eps:1/64".
  std::string provenance;

  std::size_t size() const { return symbols.size(); }
  bool empty() const { return symbols.empty(); }
  SymbolSequence prefix(std::size_t n) const;

  /// Digits when the alphabet has at most 10 letters, comma-separated otherwise.
  std::string serialize() const;
  /// Inverse of serialize.  alphabet_size 0 infers max symbol + 1 (at least 2).
  static SymbolSequence parse(const std::string& text, std::uint32_t alphabet_size = 0);
};

struct CoverElement {
  enum class Shape { Ball, Box };

  Shape shape = Shape::Ball;
  ExactPoint center;  // Ball
  Rational radius;    // Ball: open ball
  ExactPoint lo;      // Box: [lo, hi) per axis, closed at the domain's upper edge
  ExactPoint hi;

  static CoverElement ball(ExactPoint center, Rational radius);
  static CoverElement box(Rational lo, Rational hi);
  static CoverElement box(ExactPoint lo, ExactPoint hi);
};

class Cover {
 public:
  Cover(Domain domain, Metric metric, std::vector<CoverElement> elements, std::string id);

  /// {[0,1/2), [1/2,1]} on the unit interval.
  static Cover binary_partition();
  /// cells^dim equal half-open boxes over the domain, row-major.
  static Cover uniform_partition(const Domain& domain, std::uint32_t cells);
  static Cover from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  const Domain& domain() const { return domain_; }
  Metric metric() const { return metric_; }
  const std::vector<CoverElement>& elements() const { return elements_; }
  std::uint32_t alphabet_size() const { return static_cast<std::uint32_t>(elements_.size()); }
  const std::string& id() const { return id_; }

  /// True if p lies in element i even after moving it by up to `error` in the metric.
  bool certainly_contains(std::size_t i, const ExactPoint& p, const Rational& error) const;
  /// Smallest radius / box side among the elements.
  Rational finest_scale() const;

 private:
  Domain domain_;
  Metric metric_;
  std::vector<CoverElement> elements_;
  std::string id_;
};

/// Checks the union of the elements on a grid of step finest_scale / 4.
bool covers_domain(const Cover& cover);

/// Lowest index whose element certainly contains each orbit point.
/// Throws CodingError for a point that no element certainly contains.
SymbolSequence symbolic_orbit(const Orbit& orbit, const Cover& cover);

/// Cell index floor((x - lo) / eps) of every orbit point, last cell closed.
/// 2D: ix * cells + iy.  Throws PrecisionError if eps <= 2^-(m-2).
SymbolSequence quantized_orbit(const Orbit& orbit, const Domain& domain, const Rational& epsilon);

/// Cells per axis of the eps-grid: ceil(diameter / eps).
std::uint32_t grid_cells(const Domain& domain, const Rational& epsilon);

/// Uniform cover by open eps-balls centered at lo + i*eps, i = 0..ceil(diam/eps).
Cover refine(const Cover& cover, const Rational& epsilon);

}  // namespace wchaos
