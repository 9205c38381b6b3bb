#include <cmath>
#include <string>

#include <fmt/format.h>
#include <mpfr.h>

#include "wchaos/catalog.hpp"

namespace wchaos {

using nlohmann::json;

namespace {

Rational golden_angle_60_bits() {
  // floor(((sqrt 5 - 1) / 2) * 2^60) / 2^60
  mpfr_t v;
  mpfr_init2(v, 256);
  mpfr_set_ui(v, 5, MPFR_RNDN);
  mpfr_sqrt(v, v, MPFR_RNDN);
  mpfr_sub_ui(v, v, 1, MPFR_RNDN);
  mpfr_div_2ui(v, v, 1, MPFR_RNDN);
  mpfr_mul_2ui(v, v, 60, MPFR_RNDN);
  mpz_class num;
  mpfr_get_z(num.get_mpz_t(), v, MPFR_RNDD);
  mpfr_clear(v);
  Rational t(num);
  mpq_div_2exp(t.get_mpq_t(), t.get_mpq_t(), 60);
  return t;
}

Rational pow10(long e) {
  mpz_class p;
  mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(std::labs(e)));
  return e >= 0 ? Rational(p) : Rational(mpz_class(1), p);
}

}  // namespace

bool Domain::contains(const ExactPoint& p) const {
  auto in = [&](const Rational& c) { return c >= lo && c <= hi; };
  return in(p.x) && (dim == 1 || in(p.y));
}

bool Domain::contains(Point p) const {
  auto in = [&](double c) { return c >= lo && c <= hi; };
  return in(p.x) && (dim == 1 || in(p.y));
}

MapDescriptor MapDescriptor::identity() { return MapDescriptor{}; }

MapDescriptor MapDescriptor::rotation(Rational t) {
  t.canonicalize();
  if (t <= 0 || t >= 1) {
    throw ParameterError("Rotation requires 0 < t < 1 (got " + to_string(t) + ")");
  }
  MapDescriptor m;
  m.kind_ = MapKind::Rotation;
  m.angle_ = t;
  return m;
}

MapDescriptor MapDescriptor::rotation() { return rotation(golden_angle_60_bits()); }

MapDescriptor MapDescriptor::doubling() {
  MapDescriptor m;
  m.kind_ = MapKind::Doubling;
  return m;
}

MapDescriptor MapDescriptor::pl_manneville(double z, Rational a, std::uint64_t branch_limit) {
  a.canonicalize();
  if (!(z >= 2.0) || !std::isfinite(z)) {
    throw ParameterError(fmt::format("PLManneville requires z ≥ 2 (got {})", z));
  }
  if (a <= 0 || a >= 1) {
    throw ParameterError("PLManneville requires 0 < a < 1 (got " + to_string(a) + ")");
  }
  if (branch_limit < 2) {
    throw ParameterError("PLManneville branch limit must be at least 2");
  }
  MapDescriptor m;
  m.kind_ = MapKind::PLManneville;
  m.z_ = z;
  m.a_ = a;
  m.branch_limit_ = branch_limit;
  return m;
}

MapDescriptor MapDescriptor::smooth_manneville(double z) {
  if (!(z >= 2.0) || !std::isfinite(z)) {
    throw ParameterError(fmt::format("SmoothManneville requires z ≥ 2 (got {})", z));
  }
  MapDescriptor m;
  m.kind_ = MapKind::SmoothManneville;
  m.z_ = z;
  return m;
}

MapDescriptor MapDescriptor::skew_shift() {
  MapDescriptor m;
  m.kind_ = MapKind::SkewShift2D;
  return m;
}

Metric MapDescriptor::metric() const {
  switch (kind_) {
    case MapKind::Rotation:
      return Metric::Circle;
    case MapKind::SkewShift2D:
      return Metric::Max;
    default:
      return Metric::Interval;
  }
}

Domain MapDescriptor::domain() const {
  if (kind_ == MapKind::SkewShift2D) return Domain{2, -1, 1};
  return Domain{1, 0, 1};
}

std::string MapDescriptor::id() const {
  switch (kind_) {
    case MapKind::Rotation:
      return "Rotation(t=" + to_string(angle_) + ")";
    case MapKind::PLManneville:
      return fmt::format("PLManneville(z={},a={})", z_, to_string(a_));
    case MapKind::SmoothManneville:
      return fmt::format("SmoothManneville(z={})", z_);
    default:
      return to_string(kind_);
  }
}

std::string to_string(MapKind kind) {
  switch (kind) {
    case MapKind::Identity:
      return "Identity";
    case MapKind::Rotation:
      return "Rotation";
    case MapKind::Doubling:
      return "Doubling";
    case MapKind::PLManneville:
      return "PLManneville";
    case MapKind::SmoothManneville:
      return "SmoothManneville";
    case MapKind::SkewShift2D:
      return "SkewShift2D";
  }
  return "?";
}

MapKind map_kind_from_string(const std::string& name) {
  for (auto k : {MapKind::Identity, MapKind::Rotation, MapKind::Doubling, MapKind::PLManneville,
                 MapKind::SmoothManneville, MapKind::SkewShift2D}) {
    if (to_string(k) == name) return k;
  }
  throw ParameterError("unknown map kind '" + name + "'");
}

Rational parse_rational(const std::string& text) {
  auto fail = [&]() -> Rational { throw ParameterError("not a rational number: '" + text + "'"); };
  if (text.empty()) return fail();
  if (auto slash = text.find('/'); slash != std::string::npos) {
    Rational q;
    if (q.set_str(text, 10) != 0 || q.get_den() == 0) return fail();
    q.canonicalize();
    return q;
  }
  std::size_t i = 0;
  bool negative = false;
  if (text[i] == '+' || text[i] == '-') negative = text[i++] == '-';
  std::string digits;
  long exponent = 0;
  bool seen_point = false;
  for (; i < text.size(); ++i) {
    char c = text[i];
    if (c >= '0' && c <= '9') {
      digits.push_back(c);
      if (seen_point) --exponent;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (digits.empty()) return fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') return fail();
    std::size_t used = 0;
    long e = 0;
    try {
      e = std::stol(text.substr(i + 1), &used);
    } catch (const std::exception&) {
      return fail();
    }
    if (used != text.size() - i - 1) return fail();
    exponent += e;
  }
  Rational q(mpz_class(digits, 10));
  q *= pow10(exponent);
  q.canonicalize();
  return negative ? Rational(-q) : q;
}

Rational rational_from_json(const json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(mpz_class(std::to_string(j.get<long long>()), 10));
  if (j.is_number()) {
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ParameterError("non-finite number");
    return parse_rational(fmt::format("{}", v));
  }
  throw ParameterError("expected a number or a \"p/q\" string, got " + j.dump());
}

std::string to_string(const Rational& q) { return q.get_str(10); }

MapDescriptor MapDescriptor::from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) {
    throw ParameterError("map descriptor must be an object with a \"kind\" field");
  }
  const MapKind kind = map_kind_from_string(j.at("kind").get<std::string>());
  const json params = j.value("params", json::object());
  auto number = [&](const char* key) -> double {
    if (!params.contains(key)) {
      throw ParameterError(fmt::format("{} requires parameter \"{}\"", to_string(kind), key));
    }
    const json& v = params.at(key);
    if (v.is_string()) return parse_rational(v.get<std::string>()).get_d();
    if (!v.is_number()) throw ParameterError(fmt::format("parameter \"{}\" must be numeric", key));
    return v.get<double>();
  };
  switch (kind) {
    case MapKind::Identity:
      return identity();
    case MapKind::Doubling:
      return doubling();
    case MapKind::SkewShift2D:
      return skew_shift();
    case MapKind::Rotation:
      return params.contains("t") ? rotation(rational_from_json(params.at("t"))) : rotation();
    case MapKind::SmoothManneville:
      return smooth_manneville(number("z"));
    case MapKind::PLManneville: {
      if (!params.contains("a")) throw ParameterError("PLManneville requires parameter \"a\"");
      std::uint64_t limit = kDefaultBranchLimit;
      if (params.contains("k_max")) limit = params.at("k_max").get<std::uint64_t>();
      return pl_manneville(number("z"), rational_from_json(params.at("a")), limit);
    }
  }
  throw ParameterError("unhandled map kind");
}

json MapDescriptor::to_json() const {
  json params = json::object();
  switch (kind_) {
    case MapKind::Rotation:
      params["t"] = to_string(angle_);
      break;
    case MapKind::PLManneville:
      params["z"] = z_;
      params["a"] = to_string(a_);
      if (branch_limit_ != kDefaultBranchLimit) params["k_max"] = branch_limit_;
      break;
    case MapKind::SmoothManneville:
      params["z"] = z_;
      break;
    default:
      break;
  }
  return json{{"kind", to_string(kind_)}, {"params", params}};
}

FixedCoord FixedCoord::from_scaled(const mpz_class& value, std::size_t scale_bits) {
  mpz_class r;
  if (scale_bits >= static_cast<std::size_t>(kFracBits)) {
    // round half up: floor((v + 2^(s-1)) / 2^s)
    const std::size_t drop = scale_bits - kFracBits;
    if (drop == 0) {
      r = value;
    } else {
      mpz_class half;
      mpz_setbit(half.get_mpz_t(), drop - 1);
      r = value + half;
      mpz_fdiv_q_2exp(r.get_mpz_t(), r.get_mpz_t(), drop);
    }
  } else {
    mpz_mul_2exp(r.get_mpz_t(), value.get_mpz_t(), kFracBits - scale_bits);
  }
  if (!r.fits_slong_p()) throw DomainError("coordinate outside the fixed-point range [-2, 2)");
  return from_raw(r.get_si());
}

FixedCoord FixedCoord::from_rational(const Rational& q) {
  mpz_class num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), kFracBits + 1);
  mpz_class r;
  mpz_fdiv_q(r.get_mpz_t(), num.get_mpz_t(), q.get_den().get_mpz_t());
  r += 1;
  mpz_fdiv_q_2exp(r.get_mpz_t(), r.get_mpz_t(), 1);
  if (!r.fits_slong_p()) throw DomainError("coordinate outside the fixed-point range [-2, 2)");
  return from_raw(r.get_si());
}

double FixedCoord::to_double() const { return std::ldexp(static_cast<double>(raw_), -kFracBits); }

Rational FixedCoord::to_rational() const {
  Rational q(mpz_class(static_cast<signed long>(raw_)));
  mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), kFracBits);
  return q;
}

Orbit::Orbit(ExactPoint start, int dim, int error_exponent, std::vector<OrbitPoint> points,
             std::size_t working_precision, double working_error_log2, bool exact)
    : start_(std::move(start)),
      dim_(dim),
      error_exponent_(error_exponent),
      points_(std::move(points)),
      working_precision_(working_precision),
      working_error_log2_(working_error_log2),
      exact_(exact) {}

double Orbit::error_bound() const { return std::ldexp(1.0, -error_exponent_); }

std::vector<Point> Orbit::to_points() const {
  std::vector<Point> out;
  out.reserve(points_.size());
  for (const auto& p : points_) out.push_back(p.to_point());
  return out;
}

double distance(const MapDescriptor& map, Point p, Point q) { return distance(map.metric(), p, q); }

Rational distance_exact(const MapDescriptor& map, const ExactPoint& p, const ExactPoint& q) {
  return distance_exact(map.metric(), p, q);
}

double distance(Metric metric, Point p, Point q) {
  switch (metric) {
    case Metric::Interval:
      return std::fabs(p.x - q.x);
    case Metric::Circle: {
      double d = std::fabs(p.x - q.x);
      d -= std::floor(d);
      return std::min(d, 1.0 - d);
    }
    case Metric::Max:
      return std::max(std::fabs(p.x - q.x), std::fabs(p.y - q.y));
  }
  return 0.0;
}

Rational distance_exact(Metric metric, const ExactPoint& p, const ExactPoint& q) {
  switch (metric) {
    case Metric::Interval:
      return abs(Rational(p.x - q.x));
    case Metric::Circle: {
      Rational d = abs(Rational(p.x - q.x));
      mpz_class whole;
      mpz_fdiv_q(whole.get_mpz_t(), d.get_num_mpz_t(), d.get_den_mpz_t());
      d -= whole;
      Rational other = 1 - d;
      return d < other ? d : other;
    }
    case Metric::Max: {
      Rational dx = abs(Rational(p.x - q.x));
      Rational dy = abs(Rational(p.y - q.y));
      return dx > dy ? dx : dy;
    }
  }
  return 0;
}

}  // namespace wchaos
