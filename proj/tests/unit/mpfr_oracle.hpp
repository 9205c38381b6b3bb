#pragma once

#include <algorithm>
#include <cmath>

#include <mpfr.h>

namespace wchaos::testing {

// Direct high-precision evaluation of the piecewise-linear Manneville map:
// branch search by comparison against xi_k = a / (k+1)^(1/(z-1)).
struct MpfrManneville {
  mpfr_prec_t prec;
  double z;
  double a;

  void xi(mpfr_t out, long k) const {
    if (k < 0) {
      mpfr_set_ui(out, 1, MPFR_RNDN);
      return;
    }
    mpfr_t g;
    mpfr_init2(g, prec);
    mpfr_set_ui(out, static_cast<unsigned long>(k + 1), MPFR_RNDN);
    mpfr_set_d(g, 1.0 / (z - 1.0), MPFR_RNDN);
    if (z == 3.0) {
      mpfr_sqrt(out, out, MPFR_RNDN);
    } else {
      mpfr_set_ui(g, 1, MPFR_RNDN);
      mpfr_div_d(g, g, z - 1.0, MPFR_RNDN);
      mpfr_pow(out, out, g, MPFR_RNDN);
    }
    mpfr_d_div(out, a, out, MPFR_RNDN);
    mpfr_clear(g);
  }

  void step(mpfr_t x) const {
    mpfr_t lo, hi, hh, t;
    mpfr_inits2(prec, lo, hi, hh, t, static_cast<mpfr_ptr>(nullptr));
    if (mpfr_cmp_d(x, a) >= 0) {
      mpfr_sub_d(x, x, a, MPFR_RNDN);
      mpfr_div_d(x, x, 1.0 - a, MPFR_RNDN);
    } else {
      long k = static_cast<long>(std::ceil(std::pow(a / mpfr_get_d(x, MPFR_RNDN), z - 1.0))) - 1;
      k = std::max(k, 1L);
      for (;;) {
        xi(lo, k);
        xi(hi, k - 1);
        if (mpfr_cmp(x, lo) < 0) {
          ++k;
        } else if (mpfr_cmp(x, hi) >= 0) {
          --k;
        } else {
          break;
        }
      }
      xi(hh, k - 2);
      mpfr_sub(t, x, lo, MPFR_RNDN);
      mpfr_sub(hh, hh, hi, MPFR_RNDN);
      mpfr_mul(t, t, hh, MPFR_RNDN);
      mpfr_sub(hh, hi, lo, MPFR_RNDN);
      mpfr_div(t, t, hh, MPFR_RNDN);
      mpfr_add(x, t, hi, MPFR_RNDN);
    }
    mpfr_clears(lo, hi, hh, t, static_cast<mpfr_ptr>(nullptr));
  }
};

}  // namespace wchaos::testing
