#include "wchaos/coding.hpp"

#include <algorithm>
#include <charconv>

#include <fmt/format.h>

namespace wchaos {

using nlohmann::json;

namespace {

Rational dyadic(int exponent) {
  Rational r(1);
  if (exponent >= 0) {
    mpq_mul_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<unsigned long>(exponent));
  } else {
    mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<unsigned long>(-exponent));
  }
  return r;
}

mpz_class ceil_div(const Rational& q) {
  mpz_class c;
  mpz_cdiv_q(c.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return c;
}

json point_json(const ExactPoint& p, int dim) {
  if (dim == 1) return to_string(p.x);
  return json::array({to_string(p.x), to_string(p.y)});
}

ExactPoint point_from_json(const json& j) {
  if (j.is_array()) {
    if (j.size() != 2) throw ParameterError("a 2D point needs exactly two coordinates");
    return {rational_from_json(j[0]), rational_from_json(j[1])};
  }
  return {rational_from_json(j), 0};
}

}  // namespace

// --- SymbolSequence ---------------------------------------------------------

SymbolSequence SymbolSequence::prefix(std::size_t n) const {
  SymbolSequence out;
  out.alphabet_size = alphabet_size;
  out.provenance = provenance;
  out.symbols.assign(symbols.begin(), symbols.begin() + static_cast<std::ptrdiff_t>(std::min(n, size())));
  return out;
}

std::string SymbolSequence::serialize() const {
  std::string out;
  if (alphabet_size <= 10) {
    out.reserve(symbols.size());
    for (Symbol s : symbols) out.push_back(static_cast<char>('0' + s));
    return out;
  }
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(symbols[i]);
  }
  return out;
}

SymbolSequence SymbolSequence::parse(const std::string& text, std::uint32_t alphabet_size) {
  SymbolSequence out;
  std::string body = text;
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r' || body.back() == ' ')) body.pop_back();
  if (body.find(',') != std::string::npos) {
    const char* p = body.data();
    const char* end = body.data() + body.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == ',')) ++p;
      if (p == end) break;
      Symbol v = 0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw ParameterError("symbol string: expected an integer near offset " +
                                                  std::to_string(p - body.data()));
      out.symbols.push_back(v);
      p = next;
    }
  } else {
    out.symbols.reserve(body.size());
    for (char c : body) {
      if (c < '0' || c > '9') throw ParameterError(fmt::format("symbol string: unexpected character '{}'", c));
      out.symbols.push_back(static_cast<Symbol>(c - '0'));
    }
  }
  Symbol max_symbol = 0;
  for (Symbol s : out.symbols) max_symbol = std::max(max_symbol, s);
  if (alphabet_size == 0) {
    out.alphabet_size = std::max<std::uint32_t>(2, max_symbol + 1);
  } else {
    if (!out.symbols.empty() && max_symbol >= alphabet_size) {
      throw ParameterError(fmt::format("symbol {} outside alphabet of size {}", max_symbol, alphabet_size));
    }
    out.alphabet_size = alphabet_size;
  }
  return out;
}

// --- Cover ------------------------------------------------------------------

CoverElement CoverElement::ball(ExactPoint center, Rational radius) {
  if (radius <= 0) throw ParameterError("cover ball radius must be positive");
  CoverElement e;
  e.shape = Shape::Ball;
  e.center = std::move(center);
  e.radius = std::move(radius);
  return e;
}

CoverElement CoverElement::box(Rational lo, Rational hi) {
  return box(ExactPoint{std::move(lo), 0}, ExactPoint{std::move(hi), 1});
}

CoverElement CoverElement::box(ExactPoint lo, ExactPoint hi) {
  if (lo.x >= hi.x || lo.y >= hi.y) throw ParameterError("cover box needs lo < hi on every axis");
  CoverElement e;
  e.shape = Shape::Box;
  e.lo = std::move(lo);
  e.hi = std::move(hi);
  return e;
}

Cover::Cover(Domain domain, Metric metric, std::vector<CoverElement> elements, std::string id)
    : domain_(domain), metric_(metric), elements_(std::move(elements)), id_(std::move(id)) {
  if (elements_.empty()) throw ParameterError("a cover needs at least one element");
}

Cover Cover::binary_partition() {
  return Cover(Domain{1, 0, 1}, Metric::Interval,
               {CoverElement::box(Rational(0), Rational(1, 2)), CoverElement::box(Rational(1, 2), Rational(1))},
               "binary");
}

Cover Cover::uniform_partition(const Domain& domain, std::uint32_t cells) {
  if (cells == 0) throw ParameterError("uniform partition needs at least one cell");
  Rational side(domain.hi - domain.lo, cells);
  side.canonicalize();
  auto edge = [&](std::uint32_t i) -> Rational { return Rational(domain.lo) + side * i; };
  std::vector<CoverElement> elements;
  if (domain.dim == 1) {
    for (std::uint32_t i = 0; i < cells; ++i) elements.push_back(CoverElement::box(edge(i), edge(i + 1)));
  } else {
    for (std::uint32_t i = 0; i < cells; ++i) {
      for (std::uint32_t j = 0; j < cells; ++j) {
        elements.push_back(CoverElement::box(ExactPoint{edge(i), edge(j)}, ExactPoint{edge(i + 1), edge(j + 1)}));
      }
    }
  }
  return Cover(domain, domain.dim == 2 ? Metric::Max : Metric::Interval, std::move(elements),
               fmt::format("grid{}", cells));
}

json Cover::to_json() const {
  json elems = json::array();
  for (const auto& e : elements_) {
    if (e.shape == CoverElement::Shape::Ball) {
      elems.push_back({{"center", point_json(e.center, domain_.dim)}, {"radius", to_string(e.radius)}});
    } else {
      elems.push_back({{"lo", point_json(e.lo, domain_.dim)}, {"hi", point_json(e.hi, domain_.dim)}});
    }
  }
  return {{"id", id_}, {"dim", domain_.dim}, {"lo", domain_.lo}, {"hi", domain_.hi}, {"elements", elems}};
}

Cover Cover::from_json(const json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "binary") return binary_partition();
    throw ParameterError("unknown named cover '" + name + "'");
  }
  if (!j.is_object() || !j.contains("elements")) throw ParameterError("cover must be an object with \"elements\"");
  Domain d{j.value("dim", 1), j.value("lo", 0), j.value("hi", 1)};
  if (d.dim != 1 && d.dim != 2) throw ParameterError("cover dim must be 1 or 2");
  std::vector<CoverElement> elems;
  for (const auto& e : j.at("elements")) {
    if (e.contains("radius")) {
      elems.push_back(CoverElement::ball(point_from_json(e.at("center")), rational_from_json(e.at("radius"))));
    } else {
      ExactPoint lo = point_from_json(e.at("lo"));
      ExactPoint hi = point_from_json(e.at("hi"));
      if (d.dim == 1) {
        lo.y = 0;
        hi.y = 1;
      }
      elems.push_back(CoverElement::box(lo, hi));
    }
  }
  return Cover(d, d.dim == 2 ? Metric::Max : Metric::Interval, std::move(elems), j.value("id", "custom"));
}

bool Cover::certainly_contains(std::size_t i, const ExactPoint& p, const Rational& error) const {
  const CoverElement& e = elements_.at(i);
  if (e.shape == CoverElement::Shape::Ball) {
    return distance_exact(metric_, p, e.center) + error < e.radius;
  }
  auto axis = [&](const Rational& v, const Rational& lo, const Rational& hi) {
    const bool lo_ok = lo <= domain_.lo ? v >= lo : v - error >= lo;
    const bool hi_ok = hi >= domain_.hi ? v <= hi : v + error < hi;
    return lo_ok && hi_ok;
  };
  return axis(p.x, e.lo.x, e.hi.x) && (domain_.dim == 1 || axis(p.y, e.lo.y, e.hi.y));
}

Rational Cover::finest_scale() const {
  Rational best = -1;
  for (const auto& e : elements_) {
    Rational s = e.radius;
    if (e.shape == CoverElement::Shape::Box) {
      s = e.hi.x - e.lo.x;
      if (domain_.dim == 2 && e.hi.y - e.lo.y < s) s = e.hi.y - e.lo.y;
    }
    if (best < 0 || s < best) best = s;
  }
  return best;
}

bool covers_domain(const Cover& cover) {
  const Domain& d = cover.domain();
  const Rational step = cover.finest_scale() / 4;
  const mpz_class count = ceil_div(Rational((d.hi - d.lo) / step));
  if (count > 1 << 12) throw ParameterError("cover too fine to verify on a grid");
  const auto n = count.get_ui();
  auto coord = [&](unsigned long i) -> Rational {
    Rational c = d.lo + step * i;
    return c > d.hi ? Rational(d.hi) : c;
  };
  const Rational zero(0);
  auto covered = [&](const ExactPoint& p) {
    for (std::size_t i = 0; i < cover.elements().size(); ++i) {
      if (cover.certainly_contains(i, p, zero)) return true;
    }
    return false;
  };
  for (unsigned long i = 0; i <= n; ++i) {
    if (d.dim == 1) {
      if (!covered({coord(i), 0})) return false;
      continue;
    }
    for (unsigned long j = 0; j <= n; ++j) {
      if (!covered({coord(i), coord(j)})) return false;
    }
  }
  return true;
}

// --- codings ------------------------------------------------------------------

namespace {

Rational orbit_error(const Orbit& orbit) {
  return orbit.exact() ? Rational(0) : dyadic(-orbit.error_exponent());
}

}  // namespace

SymbolSequence symbolic_orbit(const Orbit& orbit, const Cover& cover) {
  if (orbit.dimension() != cover.domain().dim) throw UsageError("cover and orbit dimensions differ");
  const Rational error = orbit_error(orbit);
  SymbolSequence out;
  out.alphabet_size = cover.alphabet_size();
  out.provenance = "cover:" + cover.id();
  out.symbols.reserve(orbit.points().size());
  std::size_t step = 0;
  for (const auto& p : orbit.points()) {
    const ExactPoint q{p.x.to_rational(), p.y.to_rational()};
    std::size_t i = 0;
    while (i < cover.elements().size() && !cover.certainly_contains(i, q, error)) ++i;
    if (i == cover.elements().size()) {
      throw CodingError(fmt::format("step {}: point {} is within the error 2^-{} of every element boundary",
                                    step, p.x.to_double(), orbit.error_exponent()));
    }
    out.symbols.push_back(static_cast<Symbol>(i));
    ++step;
  }
  return out;
}

std::uint32_t grid_cells(const Domain& domain, const Rational& epsilon) {
  if (epsilon <= 0) throw ParameterError("epsilon must be positive");
  const mpz_class c = ceil_div(Rational(domain.hi - domain.lo) / epsilon);
  if (c > (domain.dim == 1 ? mpz_class(1) << 31 : mpz_class(1) << 15)) {
    throw ParameterError("epsilon grid too fine for 32-bit symbols");
  }
  return static_cast<std::uint32_t>(c.get_ui());
}

SymbolSequence quantized_orbit(const Orbit& orbit, const Domain& domain, const Rational& epsilon) {
  const std::uint32_t cells = grid_cells(domain, epsilon);
  if (!orbit.exact() && epsilon <= dyadic(2 - orbit.error_exponent())) {
    throw PrecisionError(fmt::format("epsilon {} is not above the precision floor 2^-{}", to_string(epsilon),
                                     orbit.error_exponent() - 2));
  }
  // cell = floor((raw - lo * 2^62) * den / (num * 2^62))
  const mpz_class num = epsilon.get_num() << FixedCoord::kFracBits;
  const mpz_class& den = epsilon.get_den();
  const mpz_class origin = mpz_class(domain.lo) << FixedCoord::kFracBits;
  const bool narrow = mpz_sizeinbase(den.get_mpz_t(), 2) < 63 && mpz_sizeinbase(num.get_mpz_t(), 2) < 126;
  const __int128 num128 = narrow ? static_cast<__int128>(mpz_class(num >> 62).get_ui()) << 62 : 0;
  const __int128 den128 = narrow ? static_cast<__int128>(den.get_ui()) : 0;
  const __int128 origin128 = static_cast<__int128>(domain.lo) << FixedCoord::kFracBits;
  mpz_class t;
  auto cell = [&](FixedCoord c) -> std::uint32_t {
    std::uint64_t idx = 0;
    if (narrow) {
      const __int128 offset = static_cast<__int128>(c.raw()) - origin128;
      idx = offset <= 0 ? 0 : static_cast<std::uint64_t>(offset * den128 / num128);
    } else {
      t = mpz_class(static_cast<signed long>(c.raw())) - origin;
      if (t < 0) t = 0;
      t *= den;
      mpz_fdiv_q(t.get_mpz_t(), t.get_mpz_t(), num.get_mpz_t());
      idx = t.get_ui();
    }
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(idx, cells - 1));
  };
  SymbolSequence out;
  out.alphabet_size = domain.dim == 1 ? cells : cells * cells;
  out.provenance = "eps:" + to_string(epsilon);
  out.symbols.reserve(orbit.points().size());
  for (const auto& p : orbit.points()) {
    out.symbols.push_back(domain.dim == 1 ? cell(p.x) : cell(p.x) * cells + cell(p.y));
  }
  return out;
}

Cover refine(const Cover& cover, const Rational& epsilon) {
  if (epsilon <= 0) throw ParameterError("epsilon must be positive");
  const Domain& d = cover.domain();
  const unsigned long count = ceil_div(Rational(d.hi - d.lo) / epsilon).get_ui() + 1;
  std::vector<Rational> centers;
  for (unsigned long i = 0; i < count; ++i) {
    Rational c = d.lo + epsilon * i;
    centers.push_back(c > d.hi ? Rational(d.hi) : c);
  }
  std::vector<CoverElement> elements;
  if (d.dim == 1) {
    for (const auto& c : centers) elements.push_back(CoverElement::ball(ExactPoint{c, 0}, epsilon));
  } else {
    for (const auto& cx : centers) {
      for (const auto& cy : centers) elements.push_back(CoverElement::ball(ExactPoint{cx, cy}, epsilon));
    }
  }
  return Cover(d, cover.metric(), std::move(elements), cover.id() + "/eps:" + to_string(epsilon));
}

}  // namespace wchaos
