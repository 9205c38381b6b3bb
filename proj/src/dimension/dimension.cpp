#include "wchaos/dimension.hpp"

#include <algorithm>
#include <limits>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "wchaos/regression.hpp"
#include "wchaos/sensitivity.hpp"

namespace wchaos {

namespace {

// Buckets of side >= epsilon; any point within epsilon of q sits in q's cell or a neighbour.
class CellGrid {
 public:
  CellGrid(double epsilon, Metric metric) : metric_(metric) {
    if (metric == Metric::Circle) {
      wrap_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(1.0 / epsilon)));
      side_ = 1.0 / static_cast<double>(wrap_);
    } else {
      side_ = epsilon;
    }
  }

  void add(Point p, std::size_t id) { cells_[key(cell(p.x), cell(p.y))].push_back(id); }

  template <class F>
  bool any_near(Point p, F&& pred) const {
    const std::int64_t cx = cell(p.x), cy = cell(p.y);
    const int ry = metric_ == Metric::Max ? 1 : 0;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -ry; dy <= ry; ++dy) {
        auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (std::size_t id : it->second) {
          if (pred(id)) return true;
        }
      }
    }
    return false;
  }

 private:
  std::int64_t cell(double v) const {
    if (metric_ == Metric::Circle) {
      const double u = v - std::floor(v);
      return std::min(wrap_ - 1, static_cast<std::int64_t>(std::floor(u / side_)));
    }
    return static_cast<std::int64_t>(std::floor(v / side_));
  }

  std::uint64_t key(std::int64_t cx, std::int64_t cy) const {
    if (metric_ == Metric::Circle) {
      cx = ((cx % wrap_) + wrap_) % wrap_;
      cy = 0;
    }
    return (static_cast<std::uint64_t>(cx) * 0x9E3779B97F4A7C15ULL) ^ static_cast<std::uint64_t>(cy);
  }

  Metric metric_;
  double side_ = 1.0;
  std::int64_t wrap_ = 1;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

void check_scales(const std::vector<double>& scales) {
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0) || !std::isfinite(scales[i])) throw ScaleError("scales must be positive and finite");
    if (i && scales[i] >= scales[i - 1]) throw ScaleError("scales must be strictly decreasing");
  }
}

// Secants from the coarsest scale of the finest half to each finer scale; min and max.
// Consecutive pairs would swing with the gap structure of rotation orbits.
std::pair<double, double> tail_slopes(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t k = x.size();
  const std::size_t first = std::min(k - 2, k / 2);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = first + 1; i < k; ++i) {
    const double s = (y[i] - y[first]) / (x[i] - x[first]);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  return {lo, hi};
}

std::uint64_t ceil_log2(const mpz_class& v) {
  if (v <= 1) return 0;
  const mpz_class w = v - 1;
  return mpz_sizeinbase(w.get_mpz_t(), 2);
}

mpz_class ceil_of(const Rational& q) {
  mpz_class out;
  mpz_cdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

mpz_class floor_of(const Rational& q) {
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return out;
}

}  // namespace

NetIndex greedy_net(std::span<const Point> points, double epsilon, Metric metric) {
  if (!(epsilon > 0)) throw ParameterError("net scale must be positive");
  NetIndex net;
  net.epsilon = epsilon;
  CellGrid grid(epsilon, metric);
  const double admit = epsilon * (1 - kNetTieTolerance);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point p = points[i];
    const bool covered =
        grid.any_near(p, [&](std::size_t c) { return distance(metric, net.centers[c], p) < admit; });
    if (covered) continue;
    grid.add(p, net.centers.size());
    net.centers.push_back(p);
    net.center_ids.push_back(i);
  }
  return net;
}

bool net_is_valid(std::span<const Point> points, const NetIndex& net, Metric metric) {
  const double eps = net.epsilon;
  for (std::size_t i = 0; i < net.count(); ++i) {
    for (std::size_t j = i + 1; j < net.count(); ++j) {
      if (distance(metric, net.centers[i], net.centers[j]) < eps * (1 - kNetTieTolerance)) return false;
    }
  }
  for (const Point& p : points) {
    bool near = false;
    for (const Point& c : net.centers) {
      if (distance(metric, p, c) <= 3 * eps) {
        near = true;
        break;
      }
    }
    if (!near) return false;
  }
  return true;
}

nlohmann::json DimensionEstimate::to_json() const {
  return {{"upper", upper}, {"lower", lower}, {"lsq_slope", lsq_slope}, {"scales", scales}, {"counts", counts}};
}

std::string DimensionEstimate::to_csv() const {
  std::string out = "epsilon,count\n";
  for (std::size_t i = 0; i < scales.size(); ++i) out += fmt::format("{},{}\n", scales[i], counts[i]);
  return out;
}

std::vector<double> geometric_scales(double start, double ratio, std::size_t count) {
  if (!(start > 0) || !(ratio > 0) || ratio == 1.0) throw ParameterError("scale schedule needs start > 0, ratio != 1");
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(start * std::pow(ratio, static_cast<double>(i)));
  return out;
}

DimensionEstimate box_dimension(std::span<const Point> points, const std::vector<double>& scales, Metric metric,
                                std::optional<double> resolution) {
  if (points.empty()) throw ParameterError("box dimension needs a nonempty point set");
  check_scales(scales);
  if (scales.size() < 5) throw ScaleError(fmt::format("box dimension needs >= 5 scales (got {})", scales.size()));
  if (scales.front() / scales.back() < 64.0) {
    throw ScaleError(fmt::format("scales span a factor of {:.3g}; at least 64 is needed", scales.front() / scales.back()));
  }
  if (resolution && scales.back() < *resolution) {
    throw ScaleError(fmt::format("scale {} is below the point-set resolution {}", scales.back(), *resolution));
  }
  DimensionEstimate est;
  est.scales = scales;
  std::vector<double> x, y;
  for (double eps : scales) {
    est.counts.push_back(greedy_net(points, eps, metric).count());
    x.push_back(-std::log2(eps));
    y.push_back(std::log2(static_cast<double>(est.counts.back())));
  }
  std::tie(est.lower, est.upper) = tail_slopes(x, y);
  est.lsq_slope = fit_line(x, y).slope;
  return est;
}

DimensionEstimate orbit_closure_dimension(const MapDescriptor& map, const ExactPoint& x0, std::size_t n,
                                          const std::vector<double>& scales) {
  check_scales(scales);
  if (scales.empty()) throw ScaleError("no scales given");
  const int m = std::max(8, static_cast<int>(std::ceil(-std::log2(scales.back() / 4))));
  if (m > kMaxErrorExponent) throw ScaleError("finest scale is below the certified orbit resolution");
  const Orbit orbit = iterate(map, x0, n, m);
  const auto pts = orbit.to_points();
  return box_dimension(pts, scales, map.metric(), std::ldexp(1.0, -m));
}

nlohmann::json LocalDimension::to_json() const {
  return {{"value", value}, {"scales", scales}, {"masses", masses}, {"mass_floored", mass_floored}};
}

LocalDimension local_measure_dimension(const MapDescriptor& map, const ExactPoint& x, std::size_t n_orbit,
                                       const std::vector<double>& scales) {
  check_scales(scales);
  if (scales.size() < 2) throw ScaleError("local dimension needs at least two scales");
  if (n_orbit == 0) throw ParameterError("local dimension needs a nonempty orbit");
  const int m = std::max(8, static_cast<int>(std::ceil(-std::log2(scales.back() / 4))));
  if (m > kMaxErrorExponent) throw ScaleError("finest scale is below the certified orbit resolution");
  const auto pts = iterate(map, x, n_orbit, m).to_points();
  const Point base{x.x.get_d(), x.y.get_d()};
  std::vector<double> dists;
  dists.reserve(pts.size());
  // x itself is left out so that an empty ball can show up
  for (std::size_t i = 1; i < pts.size(); ++i) dists.push_back(distance(map.metric(), pts[i], base));
  std::sort(dists.begin(), dists.end());
  LocalDimension out;
  out.scales = scales;
  const double total = static_cast<double>(dists.size());
  std::vector<double> lx, ly;
  for (double eps : scales) {
    const auto hits = static_cast<double>(std::upper_bound(dists.begin(), dists.end(), eps) - dists.begin());
    double mass = hits / total;
    if (hits == 0) {
      mass = 1.0 / total;
      out.mass_floored = true;
    }
    out.masses.push_back(mass);
    lx.push_back(-std::log2(eps));
    ly.push_back(-std::log2(mass));
  }
  out.value = tail_slopes(lx, ly).first;
  return out;
}

std::uint64_t net_description_bits(const mpz_class& index, double neglog2_eps) {
  const double scale_bits = std::ceil(std::log2(std::max(1.0, neglog2_eps)));
  return ceil_log2(mpz_class(index + 1)) + static_cast<std::uint64_t>(scale_bits);
}

std::string PointComplexityCurve::to_csv() const {
  std::string out = "epsilon,bits\n";
  for (std::size_t i = 0; i < scales.size(); ++i) out += fmt::format("{},{}\n", scales[i], bits[i]);
  return out;
}

PointComplexityCurve point_complexity_curve(std::span<const Point> points, Point x, const std::vector<double>& scales,
                                            Metric metric) {
  if (points.empty()) throw ParameterError("point complexity needs a nonempty point set");
  check_scales(scales);
  PointComplexityCurve curve;
  curve.scales = scales;
  for (double eps : scales) {
    const NetIndex net = greedy_net(points, eps, metric);
    std::size_t idx = 0;
    while (idx < net.count() && distance(metric, net.centers[idx], x) > 3 * eps) ++idx;
    if (idx == net.count()) {
      throw CoverageError(fmt::format("no net center within 3 eps of the point at eps = {}", eps));
    }
    curve.index.push_back(idx);
    curve.bits.push_back(net_description_bits(mpz_class(static_cast<unsigned long>(idx)), -std::log2(eps)));
  }
  return curve;
}

AmbientComplexity ambient_point_complexity(const MapDescriptor& map, const ExactPoint& x, const Rational& epsilon) {
  if (epsilon <= 0) throw ParameterError("epsilon must be positive");
  const Domain dom = map.domain();
  if (!dom.contains(x)) throw DomainError("point outside " + map.id() + " domain");
  // first grid index k with |lo + k eps - c| <= 3 eps
  auto first = [&](const Rational& c) {
    mpz_class k = ceil_of(Rational((c - dom.lo) / epsilon - 3));
    return k < 0 ? mpz_class(0) : k;
  };
  AmbientComplexity out;
  if (map.metric() == Metric::Circle) {
    const bool near_zero = distance_exact(Metric::Circle, x, {0, 0}) <= 3 * epsilon;
    out.index = near_zero ? mpz_class(0) : first(x.x);
  } else if (dom.dim == 1) {
    out.index = first(x.x);
  } else {
    const mpz_class per_row = floor_of(Rational(dom.hi - dom.lo) / epsilon) + 1;
    out.index = first(x.y) * per_row + first(x.x);
  }
  out.bits = net_description_bits(out.index, neglog2(epsilon));
  return out;
}

}  // namespace wchaos
