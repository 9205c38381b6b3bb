#include "wchaos/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "wchaos/regression.hpp"

namespace wchaos {

namespace {

constexpr int kFirstHorizon = 64;
// Candidates whose orbit lands exactly on a discontinuity never certify; cap the
// precision spent on them before nudging.
constexpr std::size_t kProbePrecisionCap = std::size_t{1} << 18;
constexpr int kNudgeBits = 40;
// Exact rational tracking of very long dyadic points spends its time in gcds;
// past this size the certified path is far cheaper.
constexpr std::size_t kExactTrackBits = 4096;

std::size_t bit_size(const ExactPoint& p) {
  auto bits = [](const Rational& q) {
    return mpz_sizeinbase(q.get_num_mpz_t(), 2) + mpz_sizeinbase(q.get_den_mpz_t(), 2);
  };
  return bits(p.x) + bits(p.y);
}

Rational pow2(long e) {
  Rational q(1);
  if (e >= 0) {
    mpq_mul_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(e));
  } else {
    mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), static_cast<unsigned long>(-e));
  }
  return q;
}

// floor(log2 q) for q > 0
long floor_log2(const Rational& q) {
  long e = static_cast<long>(mpz_sizeinbase(q.get_num_mpz_t(), 2)) -
           static_cast<long>(mpz_sizeinbase(q.get_den_mpz_t(), 2));
  while (pow2(e) > q) --e;
  while (pow2(e + 1) <= q) ++e;
  return e;
}

Rational wrap_unit(const Rational& v) {
  mpz_class whole;
  mpz_fdiv_q(whole.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
  return v - whole;
}

enum class Verdict { Close, Far, Unknown };

class Tracker {
 public:
  Tracker(const MapDescriptor& map, const ExactPoint& x, const Rational& epsilon)
      : map_(map), x_(x), epsilon_(epsilon), exact_(supports_exact(map) && bit_size(x) <= kExactTrackBits) {
    if (epsilon <= 0) throw ParameterError("epsilon must be positive");
    if (!map.domain().contains(x)) throw DomainError("base point outside " + map.id() + " domain");
    if (exact_) {
      xs_.push_back(x);
    } else {
      const double need = neglog2(epsilon) + 3;
      if (need > kMaxErrorExponent) {
        throw PrecisionError(fmt::format("epsilon 2^{:.1f} is below the certified orbit resolution", -need));
      }
      first_m_ = static_cast<int>(std::min<double>(kMaxErrorExponent, std::ceil(need) + 20));
    }
  }

  bool stays(const ExactPoint& y, std::size_t n) {
    if (!map_.domain().contains(y)) throw DomainError("test point outside " + map_.id() + " domain");
    return exact_ ? stays_exact(y, n) : stays_certified(y, n);
  }

  bool exact() const { return exact_; }
  void limit_precision() { options_.max_precision_bits = kProbePrecisionCap; }

 private:
  bool stays_exact(ExactPoint y, std::size_t n) {
    const Metric metric = map_.metric();
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == xs_.size()) xs_.push_back(eval_exact(map_, xs_.back()));
      if (distance_exact(metric, y, xs_[i]) > epsilon_) return false;
      if (i < n) y = eval_exact(map_, y);
    }
    return true;
  }

  bool stays_certified(const ExactPoint& y, std::size_t n) {
    for (int m = first_m_;; m = kMaxErrorExponent) {
      const Verdict v = run_certified(y, n, m);
      if (v != Verdict::Unknown) return v == Verdict::Close;
      if (m == kMaxErrorExponent) {
        throw PrecisionError("distance to epsilon undecided at the finest certified orbit precision");
      }
    }
  }

  // grows the horizon geometrically so early escapes stay cheap
  Verdict run_certified(const ExactPoint& y, std::size_t n, int m) {
    const Metric metric = map_.metric();
    const Rational slack = 2 * pow2(-m);
    bool unknown = false;
    std::size_t done = 0;
    for (std::size_t h = std::min<std::size_t>(kFirstHorizon, n);; h = std::min(2 * h, n)) {
      const Orbit oy = iterate(map_, y, h, m, options_);
      const Orbit& ox = x_orbit(m, h);
      for (std::size_t i = done; i <= h; ++i) {
        const OrbitPoint& p = oy.points()[i];
        const OrbitPoint& q = ox.points()[i];
        const Rational d = distance_exact(metric, {p.x.to_rational(), p.y.to_rational()},
                                          {q.x.to_rational(), q.y.to_rational()});
        if (d - slack > epsilon_) return Verdict::Far;
        if (d + slack > epsilon_) unknown = true;
      }
      done = h + 1;
      if (h == n) break;
    }
    return unknown ? Verdict::Unknown : Verdict::Close;
  }

  const Orbit& x_orbit(int m, std::size_t h) {
    auto it = x_orbits_.find(m);
    if (it == x_orbits_.end() || it->second.length() < h) {
      const std::size_t len = std::max<std::size_t>(h, it == x_orbits_.end() ? 0 : 2 * it->second.length());
      it = x_orbits_.insert_or_assign(m, iterate(map_, x_, len, m, options_)).first;
    }
    return it->second;
  }

  const MapDescriptor& map_;
  ExactPoint x_;
  Rational epsilon_;
  bool exact_;
  int first_m_ = kMaxErrorExponent;
  IterateOptions options_;
  std::vector<ExactPoint> xs_;
  std::map<int, Orbit> x_orbits_;
};

struct Direction {
  int dx, dy;
};

std::vector<Direction> directions(const MapDescriptor& map) {
  if (map.dimension() == 1) return {{1, 0}, {-1, 0}};
  return {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
}

// how far x can move along dir before leaving the domain
Rational reach(const MapDescriptor& map, const ExactPoint& x, Direction dir) {
  if (map.metric() == Metric::Circle) return Rational(1, 2);
  const Domain dom = map.domain();
  std::optional<Rational> best;
  auto limit = [&](const Rational& c, int d) {
    if (d == 0) return;
    Rational room = d > 0 ? Rational(dom.hi - c) : Rational(c - dom.lo);
    if (!best || room < *best) best = room;
  };
  limit(x.x, dir.dx);
  if (map.dimension() == 2) limit(x.y, dir.dy);
  return best.value_or(Rational(0));
}

ExactPoint along(const MapDescriptor& map, const ExactPoint& x, Direction dir, const Rational& t) {
  ExactPoint y{x.x + dir.dx * t, map.dimension() == 2 ? Rational(x.y + dir.dy * t) : x.y};
  if (map.metric() == Metric::Circle) y.x = wrap_unit(y.x);
  return y;
}

struct Side {
  std::optional<Rational> radius;  // empty: stays all the way to the edge
  bool at_floor = false;
};

struct Probe {
  bool stays;
  Rational t;  // distance actually tested
};

Probe probe(Tracker& tr, const MapDescriptor& map, const ExactPoint& x, Direction dir, std::size_t n,
            const Rational& t) {
  if (tr.exact()) return {tr.stays(along(map, x, dir, t), n), t};
  for (int k = 0;; ++k) {
    const Rational u = k == 0 ? t : Rational(t * (1 - pow2(-kNudgeBits + k)));
    try {
      return {tr.stays(along(map, x, dir, u), n), u};
    } catch (const PrecisionError&) {
      if (k == 3) throw;
    }
  }
}

bool narrow(const Rational& lo, const Rational& hi, int bits) { return (hi - lo) * pow2(bits) <= lo; }

Rational bisect(Tracker& tr, const MapDescriptor& map, const ExactPoint& x, Direction dir, std::size_t n,
                Rational lo, Rational hi, int bits) {
  while (!narrow(lo, hi, bits)) {
    const Probe p = probe(tr, map, x, dir, n, (lo + hi) / 2);
    (p.stays ? lo : hi) = p.t;
  }
  return lo;
}

Side inner_side(Tracker& tr, const MapDescriptor& map, const ExactPoint& x, Direction dir, std::size_t n,
                const SensitivityOptions& opt) {
  const Rational L = reach(map, x, dir);
  if (L <= 0) return {};
  Probe top = probe(tr, map, x, dir, n, L);
  if (top.stays) return {};
  Rational hi = top.t;
  long e = floor_log2(hi);
  if (pow2(e) == hi) --e;
  for (;; --e) {
    if (-e > opt.floor_bits) return {pow2(-opt.floor_bits), true};
    const Probe p = probe(tr, map, x, dir, n, pow2(e));
    if (p.stays) return {bisect(tr, map, x, dir, n, p.t, hi, opt.mantissa_bits), false};
    hi = p.t;
  }
}

// scan descending grid points 2^e (1 + j/s) above the inner radius
Rational outer_side(Tracker& tr, const MapDescriptor& map, const ExactPoint& x, Direction dir, std::size_t n,
                    const Rational& inner, const SensitivityOptions& opt) {
  const Rational L = reach(map, x, dir);
  if (L <= 0) return Rational(0);
  const Probe top = probe(tr, map, x, dir, n, L);
  if (top.stays) return top.t;
  Rational hi = top.t;
  const int s = std::max(1, opt.scan_per_octave);
  for (long e = floor_log2(L); -e <= opt.floor_bits; --e) {
    for (int j = s - 1; j >= 0; --j) {
      const Rational t = pow2(e) * Rational(s + j, s);
      if (t >= hi) continue;
      if (t <= inner) return inner < hi ? bisect(tr, map, x, dir, n, inner, hi, opt.mantissa_bits) : inner;
      const Probe p = probe(tr, map, x, dir, n, t);
      if (p.stays) return bisect(tr, map, x, dir, n, p.t, hi, opt.mantissa_bits);
      hi = p.t;
    }
  }
  return inner;
}

RadiusEstimate inner_with(Tracker& tr, const MapDescriptor& map, const ExactPoint& x, std::size_t n,
                          const SensitivityOptions& opt) {
  RadiusEstimate out;
  std::optional<Rational> best;
  Rational widest = 0;
  for (Direction d : directions(map)) {
    const Side side = inner_side(tr, map, x, d, n, opt);
    out.at_floor = out.at_floor || side.at_floor;
    widest = std::max(widest, reach(map, x, d));
    if (side.radius && (!best || *side.radius < *best)) best = side.radius;
  }
  out.value = best.value_or(widest);
  return out;
}

RadiusEstimate outer_with(Tracker& tr, const MapDescriptor& map, const ExactPoint& x, std::size_t n,
                          const RadiusEstimate& inner, const SensitivityOptions& opt) {
  RadiusEstimate out{inner.value, inner.at_floor};
  for (Direction d : directions(map)) {
    const Rational side = outer_side(tr, map, x, d, n, inner.value, opt);
    if (side > out.value) {
      out.value = side;
      out.at_floor = false;
    }
  }
  return out;
}

void check_options(const SensitivityOptions& opt) {
  if (opt.mantissa_bits < 1 || opt.mantissa_bits > 60) throw ParameterError("mantissa_bits must be in [1, 60]");
  if (opt.floor_bits < 1) throw ParameterError("floor_bits must be positive");
}

}  // namespace

double neglog2(const Rational& q) {
  if (q <= 0) throw ParameterError("neglog2 needs a positive argument");
  long en = 0, ed = 0;
  const double mn = mpz_get_d_2exp(&en, q.get_num_mpz_t());
  const double md = mpz_get_d_2exp(&ed, q.get_den_mpz_t());
  return -(std::log2(mn / md) + static_cast<double>(en - ed));
}

bool stays_close(const MapDescriptor& map, const ExactPoint& x, const ExactPoint& y, std::size_t n,
                 const Rational& epsilon) {
  Tracker tr(map, x, epsilon);
  return tr.stays(y, n);
}

RadiusEstimate inner_radius(const MapDescriptor& map, const ExactPoint& x, std::size_t n, const Rational& epsilon,
                            const SensitivityOptions& options) {
  check_options(options);
  Tracker tr(map, x, epsilon);
  tr.limit_precision();
  return inner_with(tr, map, x, n, options);
}

RadiusEstimate outer_radius(const MapDescriptor& map, const ExactPoint& x, std::size_t n, const Rational& epsilon,
                            const SensitivityOptions& options) {
  check_options(options);
  Tracker tr(map, x, epsilon);
  tr.limit_precision();
  return outer_with(tr, map, x, n, inner_with(tr, map, x, n, options), options);
}

std::string SensitivityCurve::to_csv() const {
  std::string out = "n,r,R,neglog_r,neglog_R\n";
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    out += fmt::format("{},{},{},{},{}\n", schedule[i], to_string(r_values[i]), to_string(R_values[i]), neglog_r[i],
                       neglog_R[i]);
  }
  return out;
}

SensitivityCurve sensitivity_curve(const MapDescriptor& map, const ExactPoint& x, const Rational& epsilon,
                                   const std::vector<std::size_t>& schedule, const SensitivityOptions& options) {
  check_options(options);
  for (std::size_t i = 1; i < schedule.size(); ++i) {
    if (schedule[i] <= schedule[i - 1]) throw ParameterError("schedule must be strictly increasing");
  }
  Tracker tr(map, x, epsilon);
  tr.limit_precision();
  SensitivityCurve c;
  c.x = x;
  c.epsilon = epsilon;
  c.schedule = schedule;
  c.ray_star = map.dimension() == 2;
  for (std::size_t n : schedule) {
    RadiusEstimate r = inner_with(tr, map, x, n, options);
    RadiusEstimate R = outer_with(tr, map, x, n, r, options);
    if (!c.r_values.empty()) {
      r.value = std::min(r.value, c.r_values.back());
      R.value = std::min(R.value, c.R_values.back());
    }
    R.value = std::max(R.value, r.value);
    c.floor_hit = c.floor_hit || r.at_floor || R.at_floor;
    c.neglog_r.push_back(neglog2(r.value));
    c.neglog_R.push_back(neglog2(R.value));
    c.r_values.push_back(std::move(r.value));
    c.R_values.push_back(std::move(R.value));
  }
  return c;
}

std::string to_string(SensitivityRegime r) {
  switch (r) {
    case SensitivityRegime::None:
      return "None";
    case SensitivityRegime::PowerLaw:
      return "PowerLaw";
    case SensitivityRegime::StretchedExp:
      return "StretchedExp";
    case SensitivityRegime::Exponential:
      return "Exponential";
    case SensitivityRegime::Indeterminate:
      return "Indeterminate";
  }
  return "Indeterminate";
}

nlohmann::json SensitivityFit::to_json() const {
  nlohmann::json j = {{"regime", to_string(regime)},
                      {"coefficient", coefficient},
                      {"residual", residual},
                      {"epsilon", to_string(epsilon)}};
  if (regime == SensitivityRegime::StretchedExp) j["beta"] = beta;
  return j;
}

SensitivityFit fit_sensitivity(const SensitivityCurve& curve, RadiusKind which) {
  const auto& y = which == RadiusKind::Inner ? curve.neglog_r : curve.neglog_R;
  if (y.size() != curve.schedule.size()) throw ParameterError("curve schedule and radii differ in length");
  if (y.size() < 6) throw SampleSizeError(fmt::format("sensitivity fit needs >= 6 points (got {})", y.size()));
  SensitivityFit fit;
  fit.epsilon = curve.epsilon;
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  if (*hi - *lo < 1.0) return fit;

  struct Candidate {
    SensitivityRegime regime;
    double beta;
    LineFit line;
  };
  auto regress = [&](auto clock) {
    std::vector<double> x;
    for (auto n : curve.schedule) x.push_back(clock(static_cast<double>(n)));
    return fit_line(x, y);
  };
  std::vector<Candidate> cands;
  cands.push_back({SensitivityRegime::Exponential, 1.0, regress([](double n) { return n; })});
  Candidate stretched{SensitivityRegime::StretchedExp, 0.0, {}};
  for (int k = 1; k <= 9; ++k) {
    const double beta = k / 10.0;
    const LineFit f = regress([beta](double n) { return std::pow(n, beta); });
    if (k == 1 || f.rms < stretched.line.rms) stretched = {SensitivityRegime::StretchedExp, beta, f};
  }
  cands.push_back(stretched);
  cands.push_back({SensitivityRegime::PowerLaw, 0.0, regress([](double n) { return std::log2(n); })});

  std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.line.rms < b.line.rms; });
  const Candidate& best = cands[0];
  fit.regime = best.line.rms <= kSensitivityMargin * cands[1].line.rms ? best.regime : SensitivityRegime::Indeterminate;
  fit.coefficient = best.line.slope;
  fit.beta = best.regime == SensitivityRegime::StretchedExp ? best.beta : 0.0;
  fit.residual = best.line.rms;
  return fit;
}

}  // namespace wchaos
