#include "commands.hpp"

#include <atomic>
#include <exception>
#include <thread>

#include <fmt/format.h>
#include <gmp.h>
#include <mpfr.h>

#include "wchaos/coding.hpp"
#include "wchaos/complexity.hpp"
#include "wchaos/dimension.hpp"
#include "wchaos/sensitivity.hpp"

namespace wchaos::cli {

using nlohmann::json;
using wchaos::to_string;

namespace {

constexpr const char* kVersion = "0.1.0";

// Runs body(i) for i < count; the first failure by index is rethrown, so
// the error reported does not depend on scheduling either.
template <class F>
void for_each_point(std::size_t count, unsigned threads, F&& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < count;) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string csv_quote(const std::string& s) {
  return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
}

Rational fixed_value(const FixedCoord& c) {
  Rational q(mpz_class(std::to_string(c.raw()), 10));
  mpq_div_2exp(q.get_mpq_t(), q.get_mpq_t(), FixedCoord::kFracBits);
  return q;
}

std::string point_text(const Rational& x, const Rational& y, int dim) {
  return dim == 1 ? to_string(x) : "(" + to_string(x) + "," + to_string(y) + ")";
}

std::string orbit_csv(const RunConfig& cfg, const ExactPoint& x0) {
  const int dim = cfg.map.domain().dim;
  std::string out = "step,point,error_exponent\n";
  if (cfg.exact) {
    const auto pts = iterate_exact(cfg.map, x0, cfg.n);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out += fmt::format("{},{},exact\n", i, csv_quote(point_text(pts[i].x, pts[i].y, dim)));
    }
    return out;
  }
  const Orbit orbit = iterate(cfg.map, x0, cfg.n, cfg.error_exponent);
  const auto& pts = orbit.points();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out += fmt::format("{},{},{}\n", i, csv_quote(point_text(fixed_value(pts[i].x), fixed_value(pts[i].y), dim)),
                       orbit.error_exponent());
  }
  return out;
}

std::string join_csv(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const std::string& p = parts[i];
    out += i == 0 ? p : p.substr(p.find('\n') + 1);
  }
  return out;
}

json k_readings(const GrowthFit& fit) {
  json out = json::object();
  for (const ScalingLaw& f : {ScalingLaw::linear(), ScalingLaw::power(0.5), ScalingLaw::log()}) {
    const auto k = k_from_fit(fit, f);
    if (!k) {
      out[f.id()] = "indeterminate";
    } else if (k->infinite) {
      out[f.id()] = "inf";
    } else {
      out[f.id()] = k->value;
    }
  }
  return out;
}

struct PointOutput {
  std::vector<OutputFile> files;
  json summary;
  std::size_t fails = 0;
};

PointOutput run_info(const RunConfig& cfg, const PointSpec& p, std::size_t i) {
  PointOutput out;
  SymbolSequence seq;
  if (cfg.partition == "binary") {
    const Orbit orbit = iterate(cfg.map, p.x, cfg.n, error_exponent_for(Rational(1, 2)));
    seq = symbolic_orbit(orbit, Cover::binary_partition());
  } else {
    const Orbit orbit = iterate(cfg.map, p.x, cfg.n, error_exponent_for(cfg.epsilon));
    seq = quantized_orbit(orbit, cfg.map.domain(), cfg.epsilon);
  }
  seq = seq.prefix(cfg.n);
  std::vector<std::string> csv;
  json fits = json::array();
  for (Estimator e : cfg.estimators) {
    const InfoCurve curve = info_curve(seq, cfg.schedule, e);
    csv.push_back(curve.to_csv());
    const GrowthFit fit = fit_growth(curve);
    json fj = fit.to_json();
    fits.push_back({{"estimator", to_string(e)}, {"fit", fj}, {"K", k_readings(fit)}});
  }
  out.files.push_back({fmt::format("info_{}.csv", i), join_csv(csv)});
  out.summary = {{"x", p.label}, {"fits", fits}};
  return out;
}

PointOutput run_sens(const RunConfig& cfg, const PointSpec& p, std::size_t i) {
  PointOutput out;
  const SensitivityCurve curve = sensitivity_curve(cfg.map, p.x, cfg.epsilon, cfg.schedule, cfg.sens);
  out.files.push_back({fmt::format("sens_{}.csv", i), curve.to_csv()});
  out.summary = {{"x", p.label},
                 {"inner", fit_sensitivity(curve, RadiusKind::Inner).to_json()},
                 {"outer", fit_sensitivity(curve, RadiusKind::Outer).to_json()},
                 {"floor_hit", curve.floor_hit},
                 {"ray_star", curve.ray_star}};
  return out;
}

PointOutput run_dim(const RunConfig& cfg, const PointSpec& p, std::size_t i) {
  PointOutput out;
  const DimensionEstimate closure = orbit_closure_dimension(cfg.map, p.x, cfg.n, cfg.scales);
  const LocalDimension local = local_measure_dimension(cfg.map, p.x, cfg.local_n, cfg.local_scales);
  std::string local_csv = "epsilon,mass\n";
  for (std::size_t k = 0; k < local.scales.size(); ++k) {
    local_csv += fmt::format("{},{}\n", local.scales[k], local.masses[k]);
  }
  std::string s_csv = "epsilon,index,bits\n";
  json s_json = json::array();
  for (double eps : cfg.scales) {
    const AmbientComplexity s = ambient_point_complexity(cfg.map, p.x, Rational(eps));
    s_csv += fmt::format("{},{},{}\n", eps, s.index.get_str(), s.bits);
    s_json.push_back({{"epsilon", eps}, {"bits", s.bits}});
  }
  out.files.push_back({fmt::format("dim_{}.csv", i), closure.to_csv()});
  out.files.push_back({fmt::format("local_{}.csv", i), local_csv});
  out.files.push_back({fmt::format("pointbits_{}.csv", i), s_csv});
  out.summary = {{"x", p.label},
                 {"orbit_closure", closure.to_json()},
                 {"local", local.to_json()},
                 {"point_complexity", s_json}};
  return out;
}

PointOutput run_report(const RunConfig& cfg, const PointSpec& p, std::size_t i) {
  PointOutput out;
  const PointReport rep = build_report(cfg.map, p.x, cfg.report);
  out.summary = rep.to_json();
  out.summary["x"] = p.label;
  out.fails = rep.fail_count();
  out.files.push_back({"", rep.to_csv()});  // merged into report.csv
  if (cfg.surrogate) {
    const SurrogateTable t = check_surrogate_bounds(cfg.map, p.x, cfg.surrogate->schedule, cfg.surrogate->epsilon,
                                                    cfg.report.estimators);
    out.summary["surrogate"] = t.to_json();
    out.files.push_back({fmt::format("surrogate_{}.csv", i), t.to_csv()});
  }
  return out;
}

json report_options_json(const ReportOptions& o) {
  json est = json::array();
  for (Estimator e : o.estimators) est.push_back(to_string(e));
  return {{"info_epsilon", to_string(o.info_epsilon)},
          {"info_n", o.info_n},
          {"info_schedule_start", o.info_schedule_start},
          {"estimators", est},
          {"sens_epsilon", to_string(o.sens_epsilon)},
          {"sens_schedule", o.sens_schedule},
          {"ambient_scales", o.ambient_scales},
          {"local_scales", o.local_scales},
          {"local_n", o.local_n},
          {"slack", o.slack},
          {"surrogate_constant_bits", kSurrogateConstant},
          {"surrogate_allowance", kSurrogateAllowance}};
}

}  // namespace

RunResult run(const RunConfig& cfg, unsigned threads) {
  const std::size_t count = cfg.points.size();
  std::vector<PointOutput> per(count);
  for_each_point(count, threads, [&](std::size_t i) {
    const PointSpec& p = cfg.points[i];
    switch (cfg.command) {
      case Command::Orbit:
        per[i].files.push_back({fmt::format("orbit_{}.csv", i), orbit_csv(cfg, p.x)});
        break;
      case Command::Info:
        per[i] = run_info(cfg, p, i);
        break;
      case Command::Sens:
        per[i] = run_sens(cfg, p, i);
        break;
      case Command::Dim:
        per[i] = run_dim(cfg, p, i);
        break;
      case Command::Report:
        per[i] = run_report(cfg, p, i);
        break;
    }
  });

  RunResult result;
  json summaries = json::array();
  std::vector<std::string> report_csv;
  for (PointOutput& po : per) {
    for (OutputFile& f : po.files) {
      if (f.name.empty()) {
        report_csv.push_back(std::move(f.content));
      } else {
        result.files.push_back(std::move(f));
      }
    }
    summaries.push_back(std::move(po.summary));
    result.fail_count += po.fails;
  }

  const json map_json = cfg.map.to_json();
  switch (cfg.command) {
    case Command::Orbit:
      break;
    case Command::Info: {
      json est = json::array();
      for (Estimator e : cfg.estimators) est.push_back(to_string(e));
      const json doc{{"map", map_json},
                     {"epsilon", to_string(cfg.epsilon)},
                     {"partition", cfg.partition},
                     {"schedule", cfg.schedule},
                     {"estimators", est},
                     {"points", summaries}};
      result.files.push_back({"fit.json", doc.dump(2) + "\n"});
      break;
    }
    case Command::Sens: {
      const json doc{{"map", map_json}, {"epsilon", to_string(cfg.epsilon)}, {"schedule", cfg.schedule},
                     {"points", summaries}};
      result.files.push_back({"fit.json", doc.dump(2) + "\n"});
      break;
    }
    case Command::Dim: {
      const json doc{{"map", map_json}, {"n", cfg.n}, {"local_n", cfg.local_n}, {"points", summaries}};
      result.files.push_back({"dimension.json", doc.dump(2) + "\n"});
      break;
    }
    case Command::Report: {
      std::size_t surrogate_fails = 0;
      for (const json& s : summaries) {
        if (s.contains("surrogate")) surrogate_fails += s["surrogate"]["fail_count"].get<std::size_t>();
      }
      const json doc{{"map", map_json},
                     {"options", report_options_json(cfg.report)},
                     {"points", summaries},
                     {"fail_count", result.fail_count},
                     {"surrogate_fail_count", surrogate_fails}};
      result.files.push_back({"report.json", doc.dump(2) + "\n"});
      result.files.push_back({"report.csv", join_csv(report_csv)});
      break;
    }
  }

  json labels = json::array();
  for (const PointSpec& p : cfg.points) labels.push_back(p.label);
  json names = json::array();
  for (const OutputFile& f : result.files) names.push_back(f.name);
  const json manifest{
      {"command", to_string(cfg.command)},
      {"config", cfg.source},
      {"seed", cfg.seed},
      {"random_stream", "SplitMix64(seed); random points drawn in order, one random_point call each"},
      {"map", map_json},
      {"points", labels},
      {"files", names},
      {"versions",
       {{"wchaos", kVersion}, {"gmp", gmp_version}, {"mpfr", mpfr_get_version()}, {"compiler", __VERSION__}}}};
  result.files.push_back({"manifest.json", manifest.dump(2) + "\n"});
  return result;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const PrecisionError*>(&e)) return 3;
  if (dynamic_cast<const CoverageError*>(&e) || dynamic_cast<const CodingError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const UsageError*>(&e) ||
      dynamic_cast<const ScaleError*>(&e) || dynamic_cast<const SampleSizeError*>(&e) ||
      dynamic_cast<const CapabilityError*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e)) {
    return 2;
  }
  return 1;
}

}  // namespace wchaos::cli
