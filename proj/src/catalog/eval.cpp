#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "wchaos/catalog.hpp"

namespace wchaos {

namespace {

void require_domain(const MapDescriptor& map, Point p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !map.domain().contains(p)) {
    throw DomainError(fmt::format("point ({}, {}) outside the domain of {}", p.x, p.y, map.id()));
  }
}

void require_domain(const MapDescriptor& map, const ExactPoint& p) {
  if (!map.domain().contains(p)) {
    throw DomainError("point (" + to_string(p.x) + ", " + to_string(p.y) +
                      ") outside the domain of " + map.id());
  }
}

double wrap_unit(double v) { return v - std::floor(v); }
double wrap_two(double v) { return v - 2.0 * std::floor((v + 1.0) / 2.0); }

Rational floor_of(const Rational& q) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return Rational(f);
}

Rational wrap_unit(const Rational& v) { return v - floor_of(v); }
Rational wrap_two(const Rational& v) { return v - 2 * floor_of(Rational((v + 1) / 2)); }

Point manneville_eval(const MapDescriptor& map, double x) {
  const double a = map.a().get_d();
  if (x >= a) return {(x - a) / (1.0 - a), 0.0};
  if (x == 0.0) return {0.0, 0.0};
  const double gamma = 1.0 / (map.z() - 1.0);
  // xi_k <= x  <=>  k + 1 >= (a/x)^(z-1)
  double kd = std::ceil(std::pow(a / x, map.z() - 1.0)) - 1.0;
  if (!(kd < static_cast<double>(map.branch_limit()))) {
    throw PrecisionError(fmt::format("{}: point {} lies in the truncated branch region near 0",
                                     map.id(), x));
  }
  auto k = std::max<std::int64_t>(1, static_cast<std::int64_t>(kd));
  auto xi = [&](std::int64_t j) {
    if (j < 0) return 1.0;
    return a * std::pow(static_cast<double>(j + 1), -gamma);
  };
  while (k > 1 && x >= xi(k - 1)) --k;
  while (x < xi(k)) ++k;
  const double slope = (xi(k - 2) - xi(k - 1)) / (xi(k - 1) - xi(k));
  return {std::min(1.0, slope * (x - xi(k)) + xi(k - 1)), 0.0};
}

}  // namespace

double manneville_breakpoint(const MapDescriptor& map, std::int64_t k) {
  if (map.kind() != MapKind::PLManneville) throw UsageError("breakpoints need a PLManneville map");
  if (k < 0) return 1.0;
  return map.a().get_d() * std::pow(static_cast<double>(k + 1), -1.0 / (map.z() - 1.0));
}

Rational manneville_breakpoint_exact(const MapDescriptor& map, std::int64_t k) {
  if (map.kind() != MapKind::PLManneville || map.z() != 2.0) {
    throw CapabilityError("exact breakpoints exist only for PLManneville with z = 2");
  }
  if (k < 0) return Rational(1);
  Rational xi = map.a() / Rational(mpz_class(static_cast<unsigned long>(k + 1)));
  xi.canonicalize();
  return xi;
}

bool supports_exact(const MapDescriptor& map) {
  switch (map.kind()) {
    case MapKind::Identity:
    case MapKind::Rotation:
    case MapKind::Doubling:
    case MapKind::SkewShift2D:
      return true;
    case MapKind::PLManneville:
      return map.z() == 2.0;
    case MapKind::SmoothManneville:
      return false;
  }
  return false;
}

Point eval(const MapDescriptor& map, Point p) {
  require_domain(map, p);
  switch (map.kind()) {
    case MapKind::Identity:
      return p;
    case MapKind::Rotation:
      return {wrap_unit(p.x + map.angle().get_d()), 0.0};
    case MapKind::Doubling:
      return {wrap_unit(2.0 * p.x), 0.0};
    case MapKind::PLManneville:
      return manneville_eval(map, p.x);
    case MapKind::SmoothManneville:
      return {wrap_unit(p.x + std::pow(p.x, map.z())), 0.0};
    case MapKind::SkewShift2D:
      return {wrap_two(p.x + p.y), wrap_two(p.y)};
  }
  return p;
}

ExactPoint eval_exact(const MapDescriptor& map, const ExactPoint& p) {
  if (!supports_exact(map)) {
    throw CapabilityError(map.id() + " has no exact rational evaluation");
  }
  require_domain(map, p);
  switch (map.kind()) {
    case MapKind::Identity:
      return p;
    case MapKind::Rotation:
      return {wrap_unit(Rational(p.x + map.angle())), 0};
    case MapKind::Doubling:
      return {wrap_unit(Rational(2 * p.x)), 0};
    case MapKind::SkewShift2D:
      return {wrap_two(Rational(p.x + p.y)), wrap_two(p.y)};
    case MapKind::PLManneville: {
      const Rational& a = map.a();
      const Rational& x = p.x;
      if (x >= a) {
        Rational out = (x - a) / (1 - a);
        out.canonicalize();
        return {out, 0};
      }
      if (x == 0) return {0, 0};
      // smallest k >= 1 with a/(k+1) <= x
      Rational ratio = a / x;
      mpz_class c;
      mpz_cdiv_q(c.get_mpz_t(), ratio.get_num_mpz_t(), ratio.get_den_mpz_t());
      mpz_class k = c - 1;
      if (k < 1) k = 1;
      if (k >= map.branch_limit()) {
        throw PrecisionError(map.id() + ": point " + to_string(x) +
                             " lies in the truncated branch region near 0");
      }
      const auto kk = static_cast<std::int64_t>(k.get_ui());
      const Rational xi0 = manneville_breakpoint_exact(map, kk);
      const Rational xi1 = manneville_breakpoint_exact(map, kk - 1);
      const Rational xi2 = manneville_breakpoint_exact(map, kk - 2);
      Rational out = (xi2 - xi1) / (xi1 - xi0) * (x - xi0) + xi1;
      out.canonicalize();
      return {out, 0};
    }
    case MapKind::SmoothManneville:
      break;
  }
  throw CapabilityError(map.id() + " has no exact rational evaluation");
}

std::vector<ExactPoint> iterate_exact(const MapDescriptor& map, const ExactPoint& x0,
                                      std::size_t n) {
  if (!supports_exact(map)) {
    throw CapabilityError(map.id() + " has no exact rational evaluation");
  }
  require_domain(map, x0);
  std::vector<ExactPoint> out;
  out.reserve(n + 1);
  out.push_back(x0);
  for (std::size_t i = 0; i < n; ++i) out.push_back(eval_exact(map, out.back()));
  return out;
}

namespace {

int ceil_log2(const Rational& value) {
  int b = 0;
  Rational p(1);
  while (p < value) {
    p *= 2;
    ++b;
  }
  return b;
}

int ceil_log2(double value) {
  return value <= 1.0 ? 0 : static_cast<int>(std::ceil(std::log2(value)));
}

}  // namespace

Modulus modulus(const MapDescriptor& map) {
  switch (map.kind()) {
    case MapKind::Identity:
    case MapKind::Rotation:
      return {0};
    case MapKind::Doubling:
    case MapKind::SkewShift2D:
      return {1};
    case MapKind::SmoothManneville:
      return {ceil_log2(1.0 + map.z())};
    case MapKind::PLManneville:
      break;
  }
  const std::int64_t last =
      static_cast<std::int64_t>(std::min<std::uint64_t>(map.branch_limit(), 4096));
  if (map.z() == 2.0) {
    Rational best = 1 / (1 - map.a());
    for (std::int64_t k = 1; k <= last; ++k) {
      Rational s = (manneville_breakpoint_exact(map, k - 2) - manneville_breakpoint_exact(map, k - 1)) /
                   (manneville_breakpoint_exact(map, k - 1) - manneville_breakpoint_exact(map, k));
      if (s > best) best = s;
    }
    return {ceil_log2(best)};
  }
  double best = 1.0 / (1.0 - map.a().get_d());
  for (std::int64_t k = 1; k <= last; ++k) {
    const double s = (manneville_breakpoint(map, k - 2) - manneville_breakpoint(map, k - 1)) /
                     (manneville_breakpoint(map, k - 1) - manneville_breakpoint(map, k));
    best = std::max(best, s);
  }
  return {ceil_log2(best)};
}

}  // namespace wchaos
