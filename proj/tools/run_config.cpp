#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "wchaos/complexity.hpp"
#include "wchaos/dimension.hpp"
#include "wchaos/random.hpp"

namespace wchaos::cli {

using nlohmann::json;
using wchaos::to_string;

namespace {

constexpr std::size_t kMaxSteps = std::size_t{1} << 26;
constexpr std::size_t kMaxRandomBits = std::size_t{1} << 24;
constexpr std::size_t kExactOrbitLimit = 1024;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

void allow_keys(const json& doc, const std::set<std::string>& allowed, Command c) {
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.count(key)) fail(fmt::format("unknown key \"{}\" for command {}", key, to_string(c)));
  }
}

std::uint64_t get_uint(const json& doc, const char* key, std::uint64_t lo, std::uint64_t hi) {
  const json& v = doc.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    fail(fmt::format("\"{}\" must be a nonnegative integer", key));
  }
  const auto u = v.get<std::uint64_t>();
  if (u < lo || u > hi) fail(fmt::format("\"{}\" must lie in [{}, {}] (got {})", key, lo, hi, u));
  return u;
}

double get_double(const json& doc, const char* key) {
  const json& v = doc.at(key);
  if (v.is_string()) return parse_rational(v.get<std::string>()).get_d();
  if (!v.is_number()) fail(fmt::format("\"{}\" must be numeric", key));
  return v.get<double>();
}

Rational get_rational(const json& doc, const char* key) {
  try {
    return rational_from_json(doc.at(key));
  } catch (const ParameterError& e) {
    fail(fmt::format("\"{}\": {}", key, e.what()));
  }
}

Rational positive_scale(const json& doc, const char* key) {
  const Rational q = get_rational(doc, key);
  if (q <= 0 || q > 1) fail(fmt::format("\"{}\" must lie in (0, 1] (got {})", key, to_string(q)));
  return q;
}

// Array of counts, or a geometric (start, ratio, count) triple.
std::vector<std::size_t> size_schedule(const json& doc, const char* key) {
  const json& v = doc.at(key);
  std::vector<std::size_t> out;
  if (v.is_array()) {
    for (const json& e : v) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0) fail(fmt::format("\"{}\" entries must be integers >= 0", key));
      out.push_back(e.get<std::size_t>());
    }
  } else if (v.is_object()) {
    allow_keys(v, {"start", "ratio", "count"}, Command::Info);
    if (!v.contains("start") || !v.contains("ratio") || !v.contains("count")) {
      fail(fmt::format("\"{}\" needs start, ratio and count", key));
    }
    const auto start = get_uint(v, "start", 1, kMaxSteps);
    const double ratio = get_double(v, "ratio");
    const auto count = get_uint(v, "count", 1, 4096);
    if (!(ratio > 1.0)) fail(fmt::format("\"{}\" ratio must exceed 1", key));
    out = geometric_schedule(start, ratio, count);
  } else {
    fail(fmt::format("\"{}\" must be an array or a {{start, ratio, count}} object", key));
  }
  if (out.empty()) fail(fmt::format("\"{}\" is empty", key));
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i] <= out[i - 1]) fail(fmt::format("\"{}\" must be strictly increasing", key));
  }
  if (out.back() > kMaxSteps) fail(fmt::format("\"{}\" exceeds {} steps", key, kMaxSteps));
  return out;
}

std::vector<double> scale_list(const json& doc, const char* key) {
  const json& v = doc.at(key);
  std::vector<double> out;
  if (v.is_array()) {
    for (const json& e : v) {
      if (e.is_string()) {
        out.push_back(parse_rational(e.get<std::string>()).get_d());
      } else if (e.is_number()) {
        out.push_back(e.get<double>());
      } else {
        fail(fmt::format("\"{}\" entries must be numbers", key));
      }
    }
  } else if (v.is_object()) {
    if (!v.contains("start") || !v.contains("ratio") || !v.contains("count")) {
      fail(fmt::format("\"{}\" needs start, ratio and count", key));
    }
    const double ratio = get_double(v, "ratio");
    if (!(ratio > 0 && ratio < 1)) fail(fmt::format("\"{}\" ratio must lie in (0, 1)", key));
    out = geometric_scales(get_double(v, "start"), ratio, get_uint(v, "count", 1, 64));
  } else {
    fail(fmt::format("\"{}\" must be an array or a {{start, ratio, count}} object", key));
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(out[i] > 0) || !std::isfinite(out[i])) fail(fmt::format("\"{}\" entries must be positive", key));
    if (i && out[i] >= out[i - 1]) fail(fmt::format("\"{}\" must be strictly decreasing", key));
  }
  // finest scale still resolvable by a certified orbit stored at 2^-60
  if (!out.empty() && std::ceil(-std::log2(out.back() / 4)) > kMaxErrorExponent) {
    fail(fmt::format("\"{}\" reaches below 2^-58", key));
  }
  return out;
}

void require_box_scales(const std::vector<double>& s, const char* key) {
  if (s.size() < 5) fail(fmt::format("\"{}\" needs at least 5 scales", key));
  if (s.front() / s.back() < 64) fail(fmt::format("\"{}\" must span a factor of at least 64", key));
}

void require_fit_schedule(const std::vector<std::size_t>& s, const char* key) {
  if (s.size() < 6 || static_cast<double>(s.back()) < 100.0 * static_cast<double>(s.front())) {
    fail(fmt::format("\"{}\" needs >= 6 entries spanning a factor of 100", key));
  }
}

std::vector<Estimator> estimator_list(const json& doc) {
  const json& v = doc.at("estimators");
  if (!v.is_array() || v.empty()) fail("\"estimators\" must be a nonempty array");
  std::vector<Estimator> out;
  for (const json& e : v) {
    if (!e.is_string()) fail("\"estimators\" entries must be names");
    try {
      std::string name = e.get<std::string>();
      std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
      out.push_back(estimator_from_string(name));
    } catch (const ParameterError& err) {
      fail(err.what());
    }
  }
  return out;
}

std::string label_for(const ExactPoint& x, int dim) {
  auto text = [](const Rational& q) {
    const std::string s = to_string(q);
    return s.size() <= 64 ? s : fmt::format("~{:.17g}", q.get_d());
  };
  return dim == 1 ? text(x.x) : "(" + text(x.x) + "," + text(x.y) + ")";
}

std::vector<PointSpec> parse_points(const json& v, const MapDescriptor& map, std::uint64_t seed) {
  const Domain dom = map.domain();
  std::vector<ExactPoint> xs;
  if (v.is_object()) {
    allow_keys(v, {"random", "bits"}, Command::Info);
    if (!v.contains("random")) fail("\"points\" object needs \"random\": count");
    const auto count = get_uint(v, "random", 1, 4096);
    const auto bits = v.contains("bits") ? get_uint(v, "bits", 1, kMaxRandomBits) : 64;
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) xs.push_back(random_point(rng, dom, bits));
  } else if (v.is_array()) {
    if (v.empty()) fail("\"points\" is empty");
    for (const json& p : v) {
      ExactPoint x{0, 0};
      try {
        if (p.is_array()) {
          if (p.size() != 2) fail("a 2D point is [x, y]");
          x = {rational_from_json(p[0]), rational_from_json(p[1])};
        } else if (p.is_object()) {
          x = {rational_from_json(p.at("x")), p.contains("y") ? rational_from_json(p.at("y")) : Rational(0)};
        } else {
          x = {rational_from_json(p), 0};
        }
      } catch (const ParameterError& e) {
        fail(fmt::format("bad point {}: {}", p.dump(), e.what()));
      }
      xs.push_back(x);
    }
  } else {
    fail("\"points\" must be a list or {\"random\": count, \"bits\": b}");
  }
  std::vector<PointSpec> out;
  for (const ExactPoint& x : xs) {
    if (dom.dim == 1 && x.y != 0) fail("1D map given a point with a y coordinate");
    if (!dom.contains(x)) fail(fmt::format("point {} lies outside the {} domain", label_for(x, dom.dim), map.id()));
    out.push_back({x, label_for(x, dom.dim)});
  }
  return out;
}

}  // namespace

Command command_from_string(const std::string& name) {
  if (name == "orbit") return Command::Orbit;
  if (name == "info") return Command::Info;
  if (name == "sens") return Command::Sens;
  if (name == "dim") return Command::Dim;
  if (name == "report") return Command::Report;
  throw UsageError("unknown command '" + name + "'");
}

std::string to_string(Command c) {
  switch (c) {
    case Command::Orbit:
      return "orbit";
    case Command::Info:
      return "info";
    case Command::Sens:
      return "sens";
    case Command::Dim:
      return "dim";
    case Command::Report:
      return "report";
  }
  return "?";
}

RunConfig parse_config(const json& doc, Command command, std::optional<std::uint64_t> seed_override) {
  if (!doc.is_object()) fail("config must be a JSON object");
  std::set<std::string> keys{"map", "points", "seed"};
  switch (command) {
    case Command::Orbit:
      keys.insert({"n", "error_exponent", "exact"});
      break;
    case Command::Info:
      keys.insert({"n", "epsilon", "partition", "schedule", "estimators"});
      break;
    case Command::Sens:
      keys.insert({"epsilon", "schedule", "mantissa_bits", "floor_bits", "scan_per_octave"});
      break;
    case Command::Dim:
      keys.insert({"n", "scales", "local_n", "local_scales"});
      break;
    case Command::Report:
      keys.insert({"info_epsilon", "info_n", "info_schedule_start", "estimators", "sens_epsilon", "sens_schedule",
                   "ambient_scales", "local_scales", "local_n", "slack", "surrogate"});
      break;
  }
  allow_keys(doc, keys, command);
  for (const char* k : {"map", "points"}) {
    if (!doc.contains(k)) fail(fmt::format("missing \"{}\"", k));
  }

  RunConfig cfg;
  cfg.command = command;
  cfg.source = doc;
  cfg.map = MapDescriptor::from_json(doc.at("map"));
  if (doc.contains("seed")) cfg.seed = get_uint(doc, "seed", 0, UINT64_MAX);
  if (seed_override) cfg.seed = *seed_override;
  cfg.points = parse_points(doc.at("points"), cfg.map, cfg.seed);
  auto need = [&](const char* k) {
    if (!doc.contains(k)) fail(fmt::format("command {} needs \"{}\"", to_string(command), k));
  };

  switch (command) {
    case Command::Orbit: {
      need("n");
      cfg.n = get_uint(doc, "n", 0, kMaxSteps);
      if (doc.contains("error_exponent")) cfg.error_exponent = static_cast<int>(get_uint(doc, "error_exponent", 1, kMaxErrorExponent));
      cfg.exact = supports_exact(cfg.map) && cfg.n <= kExactOrbitLimit;
      if (doc.contains("exact")) {
        if (!doc.at("exact").is_boolean()) fail("\"exact\" must be true or false");
        cfg.exact = doc.at("exact").get<bool>();
        if (cfg.exact && !supports_exact(cfg.map)) fail(cfg.map.id() + " has no exact rational iteration");
      }
      break;
    }
    case Command::Info: {
      need("n");
      cfg.n = get_uint(doc, "n", 1, kMaxSteps);
      if (doc.contains("epsilon")) cfg.epsilon = positive_scale(doc, "epsilon");
      if (doc.contains("partition")) {
        cfg.partition = doc.at("partition").get<std::string>();
        if (cfg.partition != "grid" && cfg.partition != "binary") fail("\"partition\" must be \"grid\" or \"binary\"");
        if (cfg.partition == "binary" && cfg.map.domain().dim != 1) fail("binary partition needs a map on [0, 1]");
      }
      cfg.schedule = doc.contains("schedule") ? size_schedule(doc, "schedule") : default_schedule(cfg.n, 64);
      if (cfg.schedule.back() > cfg.n) fail("\"schedule\" runs past n");
      require_fit_schedule(cfg.schedule, "schedule");
      if (doc.contains("estimators")) cfg.estimators = estimator_list(doc);
      break;
    }
    case Command::Sens: {
      need("epsilon");
      need("schedule");
      cfg.epsilon = positive_scale(doc, "epsilon");
      cfg.schedule = size_schedule(doc, "schedule");
      if (cfg.schedule.size() < 6) fail("\"schedule\" needs at least 6 entries for a fit");
      if (doc.contains("mantissa_bits")) cfg.sens.mantissa_bits = static_cast<int>(get_uint(doc, "mantissa_bits", 1, 60));
      if (doc.contains("floor_bits")) cfg.sens.floor_bits = static_cast<int>(get_uint(doc, "floor_bits", 8, 1 << 20));
      if (doc.contains("scan_per_octave")) {
        cfg.sens.scan_per_octave = static_cast<int>(get_uint(doc, "scan_per_octave", 1, 64));
      }
      break;
    }
    case Command::Dim: {
      need("n");
      need("scales");
      cfg.n = get_uint(doc, "n", 1, kMaxSteps);
      cfg.scales = scale_list(doc, "scales");
      require_box_scales(cfg.scales, "scales");
      cfg.local_n = doc.contains("local_n") ? get_uint(doc, "local_n", 1, kMaxSteps) : cfg.n;
      cfg.local_scales = doc.contains("local_scales") ? scale_list(doc, "local_scales") : cfg.scales;
      if (cfg.local_scales.size() < 2) fail("\"local_scales\" needs at least 2 scales");
      break;
    }
    case Command::Report: {
      ReportOptions& o = cfg.report;
      if (doc.contains("info_epsilon")) o.info_epsilon = positive_scale(doc, "info_epsilon");
      if (doc.contains("info_n")) o.info_n = get_uint(doc, "info_n", 1, kMaxSteps);
      if (doc.contains("info_schedule_start")) o.info_schedule_start = get_uint(doc, "info_schedule_start", 1, kMaxSteps);
      require_fit_schedule(default_schedule(o.info_n, o.info_schedule_start), "info_n");
      if (doc.contains("estimators")) o.estimators = estimator_list(doc);
      if (doc.contains("sens_epsilon")) o.sens_epsilon = positive_scale(doc, "sens_epsilon");
      if (doc.contains("sens_schedule")) {
        o.sens_schedule = size_schedule(doc, "sens_schedule");
        if (o.sens_schedule.size() < 6) fail("\"sens_schedule\" needs at least 6 entries for a fit");
      }
      if (doc.contains("ambient_scales")) {
        o.ambient_scales = scale_list(doc, "ambient_scales");
        require_box_scales(o.ambient_scales, "ambient_scales");
      }
      if (doc.contains("local_scales")) {
        o.local_scales = scale_list(doc, "local_scales");
        if (o.local_scales.size() < 2) fail("\"local_scales\" needs at least 2 scales");
      }
      if (doc.contains("local_n")) o.local_n = get_uint(doc, "local_n", 1, kMaxSteps);
      if (doc.contains("slack")) {
        o.slack = get_double(doc, "slack");
        if (!(o.slack >= 0 && o.slack < 1)) fail("\"slack\" must lie in [0, 1)");
      }
      if (doc.contains("surrogate")) {
        const json& p = doc.at("surrogate");
        if (!p.is_object() || !p.contains("epsilon") || !p.contains("schedule")) {
          fail("\"surrogate\" needs epsilon and schedule");
        }
        allow_keys(p, {"epsilon", "schedule"}, command);
        cfg.surrogate = SurrogateConfig{positive_scale(p, "epsilon"), size_schedule(p, "schedule")};
        if (cfg.surrogate->schedule.front() == 0) fail("\"surrogate\" schedule entries must be >= 1");
      }
      break;
    }
  }
  return cfg;
}

}  // namespace wchaos::cli
