// Certified orbit computation.
//
// Each coordinate is held as an integer X meaning X * 2^-p.  Alongside the
// state runs an error ledger: an upper bound e_k on |x~_k - x_k| where x_k is
// the true orbit point.  One step of a branch with slope bound s adds
//     e_{k+1} = s * e_k + (rounding of this step),
// and rounding contributions are dropped whenever the operation was exact.
// Near discontinuities the branch cannot be decided while e_k > 0; such runs,
// and runs whose ledger exceeds 2^-(m+1), are repeated at higher precision.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>
#include <mpfr.h>

#include "wchaos/catalog.hpp"

namespace wchaos {

namespace {

constexpr double kExact = -std::numeric_limits<double>::infinity();
// Slack applied to every ledger update so double rounding never undercounts.
constexpr double kLedgerSlack = 1e-9;

double log2_of(const mpz_class& v) {
  if (v == 0) return kExact;
  long exp = 0;
  const double d = mpz_get_d_2exp(&exp, v.get_mpz_t());
  return static_cast<double>(exp) + std::log2(std::fabs(d));
}

/// log2(2^a + 2^b)
double log2_add(double a, double b) {
  if (a == kExact) return b;
  if (b == kExact) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log2(1.0 + std::exp2(lo - hi)) + kLedgerSlack;
}

/// Ledger error after one step: slope * e + units * 2^-p.
double propagate(double err_log2, double slope, double units, std::size_t p) {
  double out = err_log2 == kExact ? kExact : err_log2 + std::log2(slope) + kLedgerSlack;
  if (units > 0.0) out = log2_add(out, std::log2(units) - static_cast<double>(p));
  return out;
}

/// Rounds num/den to the nearest integer; returns true if exact.
bool round_div(mpz_class& out, const mpz_class& num, const mpz_class& den) {
  mpz_class r;
  mpz_fdiv_qr(out.get_mpz_t(), r.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  if (r == 0) return true;
  r *= 2;
  if (r >= den) out += 1;
  return false;
}

/// Rounds q * 2^p to the nearest integer; returns true if exact.
bool to_fixed(mpz_class& out, const Rational& q, std::size_t p) {
  mpz_class num = q.get_num();
  mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), p);
  return round_div(out, num, q.get_den());
}

/// Rounds X * S * 2^-p to the nearest integer; returns true if exact.
bool mul_fixed(mpz_class& out, const mpz_class& x, const mpz_class& s, std::size_t p) {
  out = x * s;
  const bool exact = mpz_scan1(out.get_mpz_t(), 0) >= p || out == 0;
  if (!exact) {
    mpz_class half;
    mpz_setbit(half.get_mpz_t(), p - 1);
    out += half;
  }
  mpz_fdiv_q_2exp(out.get_mpz_t(), out.get_mpz_t(), p);
  return exact;
}

class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t prec) { mpfr_init2(v_, prec); }
  ~Mpfr() { mpfr_clear(v_); }
  Mpfr(const Mpfr&) = delete;
  Mpfr& operator=(const Mpfr&) = delete;
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }

 private:
  mpfr_t v_;
};

/// Rounds an mpfr value times 2^p to the nearest integer; returns true if exact.
bool to_fixed(mpz_class& out, mpfr_srcptr v, std::size_t p) {
  Mpfr scaled(mpfr_get_prec(v));
  mpfr_mul_2ui(scaled.get(), v, p, MPFR_RNDN);
  const bool integral = mpfr_integer_p(scaled.get()) != 0;
  mpfr_get_z(out.get_mpz_t(), scaled.get(), MPFR_RNDN);
  return integral;
}

struct FixedConst {
  mpz_class value;
  bool exact = true;
  double half_units() const { return exact ? 0.0 : 0.51; }
};

struct StepResult {
  bool ambiguous = false;
  bool truncated = false;
};

struct State {
  mpz_class x;
  mpz_class y;
  double err_log2 = kExact;
};

class FixedEngine {
 public:
  FixedEngine(const MapDescriptor& map, std::size_t p) : map_(map), p_(p) {
    mpz_setbit(one_.get_mpz_t(), p_);
    switch (map_.kind()) {
      case MapKind::Rotation:
        angle_.exact = to_fixed(angle_.value, map_.angle(), p_);
        break;
      case MapKind::PLManneville:
        init_manneville();
        break;
      default:
        break;
    }
  }

  std::size_t precision() const { return p_; }

  void load(State& s, const ExactPoint& x0) const {
    const bool ex = to_fixed(s.x, x0.x, p_);
    const bool ey = map_.dimension() == 1 ? (s.y = 0, true) : to_fixed(s.y, x0.y, p_);
    s.err_log2 = (ex && ey) ? kExact : -static_cast<double>(p_) - 1.0;
  }

  StepResult step(State& s) {
    switch (map_.kind()) {
      case MapKind::Identity:
        return {};
      case MapKind::Rotation:
        return step_rotation(s);
      case MapKind::Doubling:
        return step_doubling(s);
      case MapKind::PLManneville:
        return step_manneville(s);
      case MapKind::SmoothManneville:
        return step_smooth(s);
      case MapKind::SkewShift2D:
        return step_skew(s);
    }
    return {};
  }

 private:
  double units_log2(double err_log2) const {
    return err_log2 == kExact ? kExact : err_log2 + static_cast<double>(p_);
  }

  StepResult step_rotation(State& s) {
    // Continuous on the circle, so the wrap never makes a branch ambiguous.
    s.x += angle_.value;
    while (s.x >= one_) s.x -= one_;
    s.err_log2 = propagate(s.err_log2, 1.0, angle_.half_units(), p_);
    return {};
  }

  StepResult step_doubling(State& s) {
    StepResult r;
    mpz_mul_2exp(s.x.get_mpz_t(), s.x.get_mpz_t(), 1);
    const double err_units = units_log2(s.err_log2) + 1.0;
    // Discontinuities of 2x mod 1 on [0,1]: x = 1/2 and the endpoint x = 1.
    if (near_boundary(s.x, one_, err_units) || near_boundary(s.x, mpz_class(one_ * 2), err_units)) {
      r.ambiguous = true;
    }
    while (s.x >= one_) s.x -= one_;
    s.err_log2 = propagate(s.err_log2, 2.0, 0.0, p_);
    return r;
  }

  StepResult step_skew(State& s) {
    StepResult r;
    const double err_y = units_log2(s.err_log2);
    const double err_sum = err_y == kExact ? kExact : err_y + 1.0;
    mpz_class sum = s.x + s.y;
    // Wrap points are the odd integers; only +-1 and +-3 are reachable.
    for (int b : {-3, -1, 1, 3}) {
      const mpz_class boundary = one_ * b;
      if (near_boundary(sum, boundary, err_sum) || near_boundary(s.y, boundary, err_y)) {
        r.ambiguous = true;
      }
    }
    wrap_two(sum);
    wrap_two(s.y);
    s.x = std::move(sum);
    s.err_log2 = propagate(s.err_log2, 2.0, 0.0, p_);
    return r;
  }

  void wrap_two(mpz_class& v) const {
    const mpz_class two = one_ * 2;
    while (v >= one_) v -= two;
    while (v < -one_) v += two;
  }

  StepResult step_smooth(State& s) {
    StepResult r;
    const mpfr_prec_t work = static_cast<mpfr_prec_t>(p_ + 64);
    Mpfr x(work), pw(work), z(64);
    mpfr_set_z_2exp(x.get(), s.x.get_mpz_t(), -static_cast<long>(p_), MPFR_RNDN);
    mpfr_set_d(z.get(), map_.z(), MPFR_RNDN);
    int inexact = mpfr_pow(pw.get(), x.get(), z.get(), MPFR_RNDN);
    inexact |= mpfr_add(pw.get(), pw.get(), x.get(), MPFR_RNDN);
    mpz_class pre;
    const bool exact_round = to_fixed(pre, pw.get(), p_);
    const double xd = std::min(1.0, mpfr_get_d(x.get(), MPFR_RNDU) + std::exp2(s.err_log2));
    const double slope = (1.0 + map_.z() * std::pow(xd, map_.z() - 1.0)) * (1.0 + 1e-12);
    const double units = (inexact != 0 ? 0.01 : 0.0) + (exact_round ? 0.0 : 0.5);
    const double err_pre = units_log2(propagate(s.err_log2, slope, units, p_));
    if (near_boundary(pre, one_, err_pre) || near_boundary(pre, mpz_class(one_ * 2), err_pre)) {
      r.ambiguous = true;
    }
    while (pre >= one_) pre -= one_;
    s.x = std::move(pre);
    s.err_log2 = propagate(s.err_log2, slope, units, p_);
    return r;
  }

  // --- PLManneville -------------------------------------------------------
  //
  // Orbits visit long runs of consecutive deep branches, so breakpoints and
  // slopes live in direct-mapped caches keyed by k instead of growing maps.

  static constexpr std::size_t kCacheSlots = std::size_t{1} << 14;

  struct BreakpointEntry {
    std::int64_t k = std::numeric_limits<std::int64_t>::min();
    FixedConst fixed;
    mpz_class fine;  // value * 2^(p + guard)
  };

  struct Branch {
    std::int64_t k = std::numeric_limits<std::int64_t>::min();
    FixedConst slope;
    double slope_bound = 1.0;
  };

  void init_manneville() {
    const Rational& a = map_.a();
    a_.exact = to_fixed(a_.value, a, p_);
    const Rational sa = 1 / (1 - a);
    right_slope_.exact = to_fixed(right_slope_.value, sa, p_);
    right_slope_bound_ = sa.get_d() * (1.0 + 1e-12);
    a_double_ = a.get_d();
    exact_z_ = map_.z() == 2.0;
    limit_ = static_cast<std::int64_t>(map_.branch_limit());
    if (!exact_z_) {
      // Slopes divide breakpoint gaps, the narrowest of which sits at the branch limit.
      const double gamma = 1.0 / (map_.z() - 1.0);
      const double log2_limit = std::log2(static_cast<double>(map_.branch_limit()) + 1.0);
      const double log2_gap = std::log2(a_double_) - gamma * log2_limit - log2_limit + std::log2(gamma) - 2.0;
      guard_ = 64 + static_cast<std::size_t>(std::max(0.0, std::ceil(-log2_gap)));
    }
    mpfr_set_q(lam_a_.get(), a.get_mpq_t(), MPFR_RNDN);
    mpfr_set_d(lam_gamma_.get(), map_.z() - 1.0, MPFR_RNDN);
    mpfr_ui_div(lam_gamma_.get(), 1, lam_gamma_.get(), MPFR_RNDN);
    xi_cache_.resize(kCacheSlots);
    branch_cache_.resize(kCacheSlots);
    floor_ = breakpoint(limit_).fixed;
  }

  static std::size_t slot(std::int64_t k) {
    return static_cast<std::size_t>(k + 2) & (kCacheSlots - 1);
  }

  const BreakpointEntry& breakpoint(std::int64_t k) {
    BreakpointEntry& e = xi_cache_[slot(k)];
    if (e.k == k) return e;
    e.k = k;
    if (k < 0) {
      e.fixed = {one_, true};
      e.fine = one_ << guard_;
    } else if (exact_z_) {
      e.fixed.exact = to_fixed(e.fixed.value, manneville_breakpoint_exact(map_, k), p_);
    } else {
      const std::size_t fine_bits = p_ + guard_;
      Mpfr v(static_cast<mpfr_prec_t>(fine_bits + 64));
      breakpoint_mpfr(v.get(), k);
      to_fixed(e.fine, v.get(), fine_bits);
      // rounding twice costs at most 2^-64 units beyond the usual half unit
      round_shift(e.fixed.value, e.fine, guard_);
      e.fixed.exact = false;
    }
    return e;
  }

  static void round_shift(mpz_class& out, const mpz_class& v, std::size_t bits) {
    mpz_class half;
    mpz_setbit(half.get_mpz_t(), bits - 1);
    out = v + half;
    mpz_fdiv_q_2exp(out.get_mpz_t(), out.get_mpz_t(), bits);
  }

  void breakpoint_mpfr(mpfr_ptr out, std::int64_t k) const {
    const mpfr_prec_t prec = mpfr_get_prec(out);
    Mpfr base(prec);
    mpfr_set_ui(base.get(), static_cast<unsigned long>(k + 1), MPFR_RNDN);
    const double zm1 = map_.z() - 1.0;
    if (zm1 == 2.0) {
      mpfr_sqrt(base.get(), base.get(), MPFR_RNDN);
    } else if (zm1 == std::floor(zm1) && zm1 <= 64.0) {
      mpfr_rootn_ui(base.get(), base.get(), static_cast<unsigned long>(zm1), MPFR_RNDN);
    } else {
      Mpfr g(prec);
      mpfr_set_d(g.get(), zm1, MPFR_RNDN);
      mpfr_ui_div(g.get(), 1, g.get(), MPFR_RNDN);
      mpfr_pow(base.get(), base.get(), g.get(), MPFR_RNDN);
    }
    Mpfr a(prec);
    mpfr_set_q(a.get(), map_.a().get_mpq_t(), MPFR_RNDN);
    mpfr_div(out, a.get(), base.get(), MPFR_RNDN);
  }

  const Branch& branch(std::int64_t k) {
    Branch& b = branch_cache_[slot(k)];
    if (b.k == k) return b;
    b.k = k;
    if (exact_z_) {
      const Rational s = (manneville_breakpoint_exact(map_, k - 2) - manneville_breakpoint_exact(map_, k - 1)) /
                         (manneville_breakpoint_exact(map_, k - 1) - manneville_breakpoint_exact(map_, k));
      b.slope.exact = to_fixed(b.slope.value, s, p_);
      b.slope_bound = s.get_d() * (1.0 + 1e-12);
    } else {
      const mpz_class x2 = breakpoint(k - 2).fine;
      const mpz_class x1 = breakpoint(k - 1).fine;
      const mpz_class& x0 = breakpoint(k).fine;
      mpz_class num = x2 - x1;
      mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), p_);
      round_div(b.slope.value, num, mpz_class(x1 - x0));
      // the guard bits keep the quotient's inherited error far below one unit
      b.slope.exact = false;
      long exp = 0;
      const double mant = mpz_get_d_2exp(&exp, mpz_class(b.slope.value + 1).get_mpz_t());
      b.slope_bound = std::ldexp(mant, static_cast<int>(exp - static_cast<long>(p_))) * (1.0 + 1e-12);
    }
    return b;
  }

  std::int64_t estimate_branch(const mpz_class& x) const {
    long exp = 0;
    const double mant = mpz_get_d_2exp(&exp, x.get_mpz_t());
    const double log2x = std::log2(mant) + static_cast<double>(exp) - static_cast<double>(p_);
    const double log2k = (map_.z() - 1.0) * (std::log2(a_double_) - log2x);
    if (log2k >= std::log2(static_cast<double>(limit_))) return limit_;
    const double k = std::ceil(std::exp2(log2k)) - 1.0;
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(k));
  }

  // --- laminar jumps ---------------------------------------------------------
  //
  // T maps A_k affinely onto A_{k-1}, so the relative position u of a point
  // inside its branch survives a whole laminar run.  u is computed once at full
  // precision; the points in between only need enough bits to be stored, and
  // the full-precision state is rebuilt on reaching A_1.

  static constexpr mpfr_prec_t kLowPrec = 160;
  static constexpr double kLowErrLog2 = -140.0;

  struct Laminar {
    bool active = false;
    std::int64_t k0 = 0;
    std::int64_t j = 0;
    mpz_class u;  // u * 2^(p + 64)
    double err0_log2 = kExact;
    double w0 = 0.0;  // width of A_k0
  };

  double fine_to_double(const mpz_class& v) const {
    long exp = 0;
    const double mant = mpz_get_d_2exp(&exp, v.get_mpz_t());
    return std::ldexp(mant, static_cast<int>(exp - static_cast<long>(p_ + guard_)));
  }

  /// Ledger error of a point j steps into the run: the start error scaled by
  /// the width ratio, plus the breakpoints' rounding carried the same way.
  double laminar_err(double width_ratio) const {
    const double carried = log2_add(lam_.err0_log2, -static_cast<double>(p_ + guard_) + 2.0);
    return carried + std::log2(width_ratio * (1.0 + 1e-9)) + kLedgerSlack;
  }

  void start_laminar(const State& s, std::int64_t k) {
    const mpz_class& lo = breakpoint(k).fine;
    const mpz_class w = breakpoint(k - 1).fine - lo;
    mpz_class num = (s.x << guard_) - lo;
    mpz_mul_2exp(num.get_mpz_t(), num.get_mpz_t(), p_ + 64);
    round_div(lam_.u, num, w);
    lam_.active = true;
    lam_.k0 = k;
    lam_.j = k;
    lam_.err0_log2 = s.err_log2;
    lam_.w0 = fine_to_double(w);
    mpfr_set_z_2exp(lam_u_.get(), lam_.u.get_mpz_t(), -static_cast<long>(p_ + 64), MPFR_RNDN);
    breakpoint_low(lam_hi_.get(), k - 1);
  }

  void breakpoint_low(mpfr_ptr out, std::int64_t k) {
    const double zm1 = map_.z() - 1.0;
    mpfr_set_ui(out, static_cast<unsigned long>(k + 1), MPFR_RNDN);
    if (zm1 == 2.0) {
      mpfr_sqrt(out, out, MPFR_RNDN);
    } else if (zm1 == std::floor(zm1) && zm1 <= 64.0) {
      mpfr_rootn_ui(out, out, static_cast<unsigned long>(zm1), MPFR_RNDN);
    } else {
      mpfr_pow(out, out, lam_gamma_.get(), MPFR_RNDN);
    }
    mpfr_div(out, lam_a_.get(), out, MPFR_RNDN);
  }

  StepResult step_laminar(State& s) {
    --lam_.j;
    const std::int64_t j = lam_.j;
    if (j > 1) {
      // xi_j is the previous step's xi_{j-1}
      mpfr_swap(lam_lo_.get(), lam_hi_.get());
      breakpoint_low(lam_hi_.get(), j - 1);
      mpfr_sub(lam_w_.get(), lam_hi_.get(), lam_lo_.get(), MPFR_RNDN);
      const double wj = mpfr_get_d(lam_w_.get(), MPFR_RNDU);
      mpfr_mul(lam_w_.get(), lam_w_.get(), lam_u_.get(), MPFR_RNDN);
      mpfr_add(lam_w_.get(), lam_w_.get(), lam_lo_.get(), MPFR_RNDN);
      mpfr_mul_2ui(lam_w_.get(), lam_w_.get(), p_, MPFR_RNDN);
      mpfr_get_z(s.x.get_mpz_t(), lam_w_.get(), MPFR_RNDN);
      s.err_log2 = log2_add(laminar_err(wj / lam_.w0), kLowErrLog2);
      return {};
    }
    // A_1 reached: rebuild x = xi_1 + u * (xi_0 - xi_1) at full precision
    const mpz_class& lo = breakpoint(1).fine;
    const mpz_class w = breakpoint(0).fine - lo;
    mpz_class v = lam_.u * w;
    mpz_class base = lo;
    mpz_mul_2exp(base.get_mpz_t(), base.get_mpz_t(), p_ + 64);
    v += base;
    mpz_class half;
    mpz_setbit(half.get_mpz_t(), p_ + 64 + guard_ - 1);
    v += half;
    mpz_fdiv_q_2exp(s.x.get_mpz_t(), v.get_mpz_t(), p_ + 64 + guard_);
    s.err_log2 = log2_add(laminar_err(fine_to_double(w) / lam_.w0), -static_cast<double>(p_));
    lam_.active = false;
    return {};
  }

  StepResult step_manneville(State& s) {
    if (lam_.active) return step_laminar(s);
    StepResult r;
    const double err_units = units_log2(s.err_log2);
    // Uncertainty of a comparison against a constant: state error plus the constant's rounding.
    auto tolerance = [&](const FixedConst& c) {
      return c.exact ? err_units : log2_add(err_units, -0.97);
    };

    if (s.x >= a_.value) {
      if (near_boundary(s.x, a_.value, tolerance(a_))) r.ambiguous = true;
      mpz_sub(scratch_.get_mpz_t(), s.x.get_mpz_t(), a_.value.get_mpz_t());
      const bool exact = mul_fixed(s.x, scratch_, right_slope_.value, p_);
      const double units = right_slope_.half_units() + right_slope_bound_ * a_.half_units() +
                           (exact ? 0.0 : 0.5);
      clamp_unit(s.x);
      s.err_log2 = propagate(s.err_log2, right_slope_bound_, units, p_);
      return r;
    }
    if (s.x == 0 && s.err_log2 == kExact) return r;
    if (s.x < floor_.value) {
      r.truncated = true;
      return r;
    }
    if (near_boundary(s.x, a_.value, tolerance(a_))) r.ambiguous = true;

    std::int64_t k = std::min(estimate_branch(s.x), limit_);
    while (k > 1 && s.x >= breakpoint(k - 1).fixed.value) --k;
    while (k < limit_ && s.x < breakpoint(k).fixed.value) ++k;

    const FixedConst& lo = breakpoint(k).fixed;
    const FixedConst& hi = breakpoint(k - 1).fixed;
    const bool near_lo = k < limit_ && near_boundary(s.x, lo.value, tolerance(lo));
    const bool near_hi = k > 1 && near_boundary(s.x, hi.value, tolerance(hi));
    if (!exact_z_ && k >= 3 && !near_lo && !near_hi) {
      start_laminar(s, k);
      return step_laminar(s);
    }
    double slope = branch(k).slope_bound;
    // Interior breakpoints are continuity points: straddling one only costs the larger slope.
    if (near_lo) slope = std::max(slope, branch(k + 1).slope_bound);
    if (near_hi) slope = std::max(slope, branch(k - 1).slope_bound);
    const Branch& b = branch(k);
    mpz_sub(scratch_.get_mpz_t(), s.x.get_mpz_t(), lo.value.get_mpz_t());
    const bool exact = mul_fixed(s.x, scratch_, b.slope.value, p_);
    s.x += hi.value;
    const double units = b.slope.half_units() + slope * lo.half_units() + (exact ? 0.0 : 0.5) +
                         hi.half_units();
    clamp_unit(s.x);
    s.err_log2 = propagate(s.err_log2, slope, units, p_);
    return r;
  }

  /// Is the boundary within 2^err_units_log2 units of v?
  bool near_boundary(const mpz_class& v, const mpz_class& boundary, double err_units_log2) {
    if (err_units_log2 == kExact) return false;
    mpz_sub(gap_.get_mpz_t(), v.get_mpz_t(), boundary.get_mpz_t());
    mpz_abs(gap_.get_mpz_t(), gap_.get_mpz_t());
    return log2_of(gap_) <= err_units_log2 + 1e-6;
  }

  void clamp_unit(mpz_class& v) const {
    if (v < 0) v = 0;
    if (v > one_) v = one_;
  }

  const MapDescriptor& map_;
  std::size_t p_;
  mpz_class one_;
  FixedConst angle_;
  FixedConst a_;
  FixedConst right_slope_;
  double right_slope_bound_ = 1.0;
  double a_double_ = 0.5;
  bool exact_z_ = false;
  std::int64_t limit_ = 0;
  std::size_t guard_ = 0;
  FixedConst floor_;
  std::vector<BreakpointEntry> xi_cache_;
  std::vector<Branch> branch_cache_;
  Laminar lam_;
  Mpfr lam_u_{kLowPrec}, lam_lo_{kLowPrec}, lam_hi_{kLowPrec}, lam_w_{kLowPrec};
  Mpfr lam_a_{kLowPrec}, lam_gamma_{kLowPrec};
  mpz_class scratch_;
  mpz_class gap_;
};

struct RunResult {
  bool certified = true;
  bool truncated = false;
  bool ambiguous = false;
  // First step whose branch could not be decided, or SIZE_MAX.
  std::size_t first_undecided = std::numeric_limits<std::size_t>::max();
  // Largest ledger error seen, in log2 units of 2^-p.
  double growth_units_log2 = kExact;
  double max_err_log2 = kExact;
  bool exact_storage = true;
  std::vector<OrbitPoint> points;
};

RunResult run(const MapDescriptor& map, const ExactPoint& x0, std::size_t n, int m, std::size_t p) {
  RunResult out;
  FixedEngine engine(map, p);
  State s;
  engine.load(s, x0);
  out.points.reserve(n + 1);
  const double target = -static_cast<double>(m) - 1.0;
  const bool two_d = map.dimension() == 2;
  for (std::size_t i = 0;; ++i) {
    out.points.push_back({FixedCoord::from_scaled(s.x, p),
                          two_d ? FixedCoord::from_scaled(s.y, p) : FixedCoord{}});
    out.max_err_log2 = std::max(out.max_err_log2, s.err_log2);
    if (out.exact_storage) {
      const auto dropped = static_cast<mp_bitcnt_t>(p - FixedCoord::kFracBits);
      auto fits = [&](const mpz_class& v) { return v == 0 || mpz_scan1(v.get_mpz_t(), 0) >= dropped; };
      out.exact_storage = s.err_log2 == kExact && fits(s.x) && fits(s.y);
    }
    if (s.err_log2 > target) out.certified = false;
    if (i == n) break;
    const StepResult r = engine.step(s);
    if (r.truncated || r.ambiguous) {
      out.certified = false;
      out.first_undecided = std::min(out.first_undecided, i);
    }
    if (r.truncated) {
      out.truncated = true;
      break;
    }
    if (r.ambiguous) out.ambiguous = true;
  }
  if (out.max_err_log2 != kExact) {
    out.growth_units_log2 = out.max_err_log2 + static_cast<double>(p);
  }
  return out;
}

/// Number of fractional bits of a dyadic rational, SIZE_MAX otherwise.
std::size_t dyadic_bits(const Rational& q) {
  const mpz_class& den = q.get_den();
  const std::size_t bits = mpz_sizeinbase(den.get_mpz_t(), 2) - 1;
  return mpz_scan1(den.get_mpz_t(), 0) == bits ? bits : std::numeric_limits<std::size_t>::max();
}

Orbit exact_orbit(const MapDescriptor& map, const ExactPoint& x0, std::size_t n, int m) {
  const auto exact = iterate_exact(map, x0, n);
  std::vector<OrbitPoint> points;
  points.reserve(exact.size());
  bool stored_exactly = true;
  for (const auto& e : exact) {
    points.push_back({FixedCoord::from_rational(e.x), FixedCoord::from_rational(e.y)});
    stored_exactly = stored_exactly && points.back().x.to_rational() == e.x &&
                     points.back().y.to_rational() == e.y;
  }
  return Orbit(x0, map.dimension(), m, std::move(points), 0, kExact, stored_exactly);
}

// count (< 64) bits of v starting at bit lo; bits below 0 read as zero
std::uint64_t bit_window(const mpz_class& v, std::int64_t lo, int count) {
  static_assert(GMP_LIMB_BITS == 64);
  if (lo < 0) return count + lo <= 0 ? 0 : bit_window(v, 0, static_cast<int>(count + lo)) << -lo;
  const auto limb = static_cast<mp_size_t>(lo / 64);
  const int shift = static_cast<int>(lo % 64);
  std::uint64_t w = mpz_getlimbn(v.get_mpz_t(), limb) >> shift;
  if (shift) w |= static_cast<std::uint64_t>(mpz_getlimbn(v.get_mpz_t(), limb + 1)) << (64 - shift);
  return w & ((std::uint64_t{1} << count) - 1);
}

// x0 = V / 2^B with B > n: T^i x0 = frac(2^i V / 2^B) never meets 1/2, so each
// point is read off a window of V.  Same result as the fixed-point run at p >= B.
Orbit doubling_window_orbit(const ExactPoint& x0, std::size_t n, int m, std::size_t p, std::size_t bits) {
  const mpz_class& v = x0.x.get_num();
  std::vector<OrbitPoint> points;
  points.reserve(n + 1);
  const auto b = static_cast<std::int64_t>(bits);
  for (std::size_t i = 0; i <= n; ++i) {
    // floor(x_i 2^63), then round half up to 62 bits
    const std::uint64_t w = bit_window(v, b - static_cast<std::int64_t>(i) - 63, 63);
    points.push_back({FixedCoord::from_raw(static_cast<std::int64_t>((w + 1) >> 1)), FixedCoord{}});
  }
  return Orbit(x0, 1, m, std::move(points), p, kExact, bits <= static_cast<std::size_t>(FixedCoord::kFracBits));
}

}  // namespace

Orbit iterate(const MapDescriptor& map, const ExactPoint& x0, std::size_t n, int m,
              const IterateOptions& options) {
  if (n < 1) throw ParameterError("iterate requires n ≥ 1");
  if (m < 1) throw ParameterError("iterate requires m ≥ 1");
  if (m > kMaxErrorExponent) {
    throw ResourceError(fmt::format("error exponent m = {} exceeds the cap of {}", m,
                                    kMaxErrorExponent));
  }
  if (!map.domain().contains(x0)) {
    throw DomainError("start point (" + to_string(x0.x) + ", " + to_string(x0.y) +
                      ") outside the domain of " + map.id());
  }
  const auto shift = static_cast<std::size_t>(modulus(map).shift);
  const std::size_t base = static_cast<std::size_t>(m) + 64;
  std::size_t p = base + std::min<std::size_t>(n * shift, 192);
  // A dyadic start that the orbit will resolve anyway is loaded exactly.
  const std::size_t start_bits = std::max(dyadic_bits(x0.x), dyadic_bits(x0.y));
  if (start_bits != std::numeric_limits<std::size_t>::max()) {
    p = std::max(p, std::min(start_bits, base + n * shift));
  }
  if (map.kind() == MapKind::Doubling && start_bits <= p && start_bits > n) {
    return doubling_window_orbit(x0, n, m, p, start_bits);
  }
  // An orbit that lands exactly on a discontinuity stays undecided at every
  // precision; rational-affine maps then switch to exact arithmetic.
  std::size_t stuck_step = std::numeric_limits<std::size_t>::max();
  int stuck_runs = 0;
  for (;;) {
    if (p > options.max_precision_bits) {
      throw ResourceError(fmt::format("{}: certifying {} steps at 2^-{} needs more than {} bits",
                                      map.id(), n, m, options.max_precision_bits));
    }
    RunResult r = run(map, x0, n, m, p);
    if (r.certified) {
      return Orbit(x0, map.dimension(), m, std::move(r.points), p, r.max_err_log2, r.exact_storage);
    }
    if (r.first_undecided != std::numeric_limits<std::size_t>::max() && r.first_undecided == stuck_step) {
      ++stuck_runs;
    } else {
      stuck_step = r.first_undecided;
      stuck_runs = 0;
    }
    if (stuck_runs >= 2 && supports_exact(map)) return exact_orbit(map, x0, n, m);
    if (r.truncated && r.growth_units_log2 == kExact) {
      throw PrecisionError(map.id() + ": orbit enters the truncated branch region near 0");
    }
    std::size_t next = 2 * p;
    if (r.growth_units_log2 != kExact) {
      const double needed = static_cast<double>(m) + 1.0 + r.growth_units_log2 + 64.0;
      std::size_t target = static_cast<std::size_t>(std::ceil(needed));
      // After a wrong branch the run follows some other orbit, so its growth is
      // only a hint, except for maps whose slope is the same everywhere.
      const bool uniform = map.kind() == MapKind::Doubling || map.kind() == MapKind::SkewShift2D;
      if ((r.ambiguous || r.truncated) && !uniform) target = std::min(target, 4 * p);
      next = std::max(next, target);
    }
    p = next;
  }
}

}  // namespace wchaos
