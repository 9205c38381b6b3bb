#include "wchaos/random.hpp"

namespace wchaos {

Rational random_dyadic(SplitMix64& rng, std::size_t bits, int lo, int hi) {
  if (bits == 0 || hi <= lo) throw ParameterError("random dyadic needs bits > 0 and lo < hi");
  mpz_class v = 0;
  std::size_t have = 0;
  while (have < bits) {
    const std::size_t take = std::min<std::size_t>(64, bits - have);
    const std::uint64_t word = take == 64 ? rng.next() : rng.next() >> (64 - take);
    v <<= static_cast<mp_bitcnt_t>(take);
    v += mpz_class(static_cast<unsigned long>(word));
    have += take;
  }
  Rational r(v);
  mpq_div_2exp(r.get_mpq_t(), r.get_mpq_t(), static_cast<mp_bitcnt_t>(bits));
  r *= (hi - lo);
  r += lo;
  r.canonicalize();
  return r;
}

ExactPoint random_point(SplitMix64& rng, const Domain& domain, std::size_t bits) {
  ExactPoint p;
  p.x = random_dyadic(rng, bits, domain.lo, domain.hi);
  if (domain.dim == 2) p.y = random_dyadic(rng, bits, domain.lo, domain.hi);
  return p;
}

}  // namespace wchaos
