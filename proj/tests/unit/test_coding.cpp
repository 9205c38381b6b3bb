#include <random>

#include <doctest.h>

#include "wchaos/coding.hpp"

using namespace wchaos;

namespace {

Rational q(const char* s) { return parse_rational(s); }

Orbit orbit_of(const std::vector<const char*>& values, int m = 40) {
  std::vector<OrbitPoint> pts;
  for (const char* v : values) pts.push_back({FixedCoord::from_rational(q(v)), {}});
  return Orbit({q(values[0]), 0}, 1, m, pts, 0, -1.0 / 0.0, false);
}

}  // namespace

TEST_CASE("symbolic orbit examples") {
  const Cover half = Cover::binary_partition();
  auto d3 = iterate(MapDescriptor::doubling(), {q("1/3"), 0}, 5, 40);
  CHECK(symbolic_orbit(d3, half).serialize() == "010101");
  auto id = iterate(MapDescriptor::identity(), {q("0.3"), 0}, 4, 40);
  CHECK(symbolic_orbit(id, half).serialize() == "00000");
  auto d7 = iterate(MapDescriptor::doubling(), {q("1/7"), 0}, 5, 40);
  CHECK(symbolic_orbit(d7, half).serialize() == "001001");
}

TEST_CASE("symbolic orbit refuses undecidable points") {
  const Cover half = Cover::binary_partition();
  // 1/2 + 2^-50 is within the 2^-40 error of the boundary
  CHECK_THROWS_AS(symbolic_orbit(orbit_of({"0.25", "1125899906842625/2251799813685248"}), half), CodingError);
  // an exact orbit sitting on the boundary is coded by the half-open rule
  auto exact = iterate(MapDescriptor::identity(), {q("1/2"), 0}, 2, 40);
  REQUIRE(exact.exact());
  CHECK(symbolic_orbit(exact, half).serialize() == "111");
  // a ball cover whose balls overlap: lowest index wins
  Cover balls(Domain{1, 0, 1}, Metric::Interval,
              {CoverElement::ball({q("0"), 0}, q("3/5")), CoverElement::ball({q("1"), 0}, q("3/5"))}, "two");
  CHECK(symbolic_orbit(orbit_of({"0.5", "0.45", "0.9"}), balls).serialize() == "001");
}

TEST_CASE("quantized orbit examples") {
  CHECK(quantized_orbit(orbit_of({"0.1", "0.6", "0.2"}), Domain{}, q("1/4")).symbols ==
        std::vector<Symbol>{0, 2, 0});
  auto id = iterate(MapDescriptor::identity(), {q("0.3"), 0}, 10, 40);
  auto s = quantized_orbit(id, Domain{}, q("1/8"));
  CHECK(s.size() == 11);
  for (Symbol x : s.symbols) CHECK(x == 2);
  auto d7 = iterate(MapDescriptor::doubling(), {q("1/7"), 0}, 3, 40);
  CHECK(quantized_orbit(d7, Domain{}, q("1/4")).symbols == std::vector<Symbol>{0, 1, 2, 0});
  // x = 1 falls in the last (closed) cell
  CHECK(quantized_orbit(orbit_of({"1"}), Domain{}, q("1/4")).symbols == std::vector<Symbol>{3});
  CHECK_THROWS_AS(quantized_orbit(orbit_of({"0.1"}, 10), Domain{}, q("1/256")), PrecisionError);
}

TEST_CASE("quantized 2D pairing is row-major") {
  std::vector<OrbitPoint> pts{{FixedCoord::from_rational(q("-1")), FixedCoord::from_rational(q("0.75"))},
                              {FixedCoord::from_rational(q("0.1")), FixedCoord::from_rational(q("-0.6"))}};
  Orbit o({q("-1"), q("0.75")}, 2, 40, pts, 0, -1.0 / 0.0, false);
  auto s = quantized_orbit(o, Domain{2, -1, 1}, q("1/2"));
  CHECK(s.alphabet_size == 16);
  CHECK(s.symbols == std::vector<Symbol>{0 * 4 + 3, 2 * 4 + 0});
}

TEST_CASE("quantization nests under halving") {
  auto o = iterate(MapDescriptor::doubling(), {q("0.318309886183790671537767526745"), 0}, 2000, 40);
  for (int j = 1; j < 8; ++j) {
    Rational eps(1, 1 << j);
    auto coarse = quantized_orbit(o, Domain{}, eps);
    auto fine = quantized_orbit(o, Domain{}, eps / 2);
    for (std::size_t i = 0; i < coarse.size(); ++i) CHECK(fine.symbols[i] / 2 == coarse.symbols[i]);
  }
}

TEST_CASE("refine counts") {
  const Cover half = Cover::binary_partition();
  CHECK(refine(half, q("1/4")).elements().size() == 5);
  CHECK(refine(half, q("1")).elements().size() == 2);
  auto r = refine(half, q("1/4"));
  for (std::size_t i = 0; i < 5; ++i) CHECK(r.elements()[i].center.x * 4 == Rational(i));
  Cover square = Cover::uniform_partition(Domain{2, -1, 1}, 2);
  CHECK(refine(square, q("1/2")).elements().size() == 25);
  CHECK(covers_domain(refine(half, q("1/4"))));
  CHECK(covers_domain(refine(square, q("1/2"))));
  CHECK(covers_domain(half));
  CHECK(covers_domain(square));
  Cover gap(Domain{1, 0, 1}, Metric::Interval,
            {CoverElement::box(q("0"), q("1/2")), CoverElement::box(q("3/5"), q("1"))}, "gap");
  CHECK_FALSE(covers_domain(gap));
}

TEST_CASE("serialization round trip") {
  std::mt19937_64 rng(3);
  for (std::uint32_t alphabet : {2u, 10u, 11u, 300u}) {
    SymbolSequence s;
    s.alphabet_size = alphabet;
    for (int i = 0; i < 500; ++i) s.symbols.push_back(static_cast<Symbol>(rng() % alphabet));
    auto back = SymbolSequence::parse(s.serialize(), alphabet);
    CHECK(back.symbols == s.symbols);
    CHECK(back.alphabet_size == alphabet);
  }
  CHECK(SymbolSequence::parse("0110\n").alphabet_size == 2);
  CHECK_THROWS_AS(SymbolSequence::parse("01x"), ParameterError);
  CHECK_THROWS_AS(SymbolSequence::parse("0123", 2), ParameterError);
  auto c = Cover::from_json(Cover::binary_partition().to_json());
  CHECK(c.elements().size() == 2);
  CHECK(c.elements()[1].lo.x == q("1/2"));
}

TEST_CASE("coding is deterministic and stable across precision") {
  const Cover half = Cover::binary_partition();
  const ExactPoint x0{q("0.7071067811865475244008443621048490392848359376884740365883"), 0};
  auto a = iterate(MapDescriptor::doubling(), x0, 150, 30);
  auto b = iterate(MapDescriptor::doubling(), x0, 150, 55);
  CHECK(symbolic_orbit(a, half).symbols == symbolic_orbit(a, half).symbols);
  CHECK(symbolic_orbit(a, half).symbols == symbolic_orbit(b, half).symbols);
}
