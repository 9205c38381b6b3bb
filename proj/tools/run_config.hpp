#pragma once

// Run configuration for the command-line runner: one JSON document, fully
// validated before any computation starts.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wchaos/catalog.hpp"
#include "wchaos/infocontent.hpp"
#include "wchaos/report.hpp"

namespace wchaos::cli {

enum class Command { Orbit, Info, Sens, Dim, Report };
Command command_from_string(const std::string& name);
std::string to_string(Command c);

/// Invalid or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct PointSpec {
  ExactPoint x;
  /// Text used in outputs; seeded points with long expansions are abbreviated.
  std::string label;
};

struct SurrogateConfig {
  Rational epsilon;
  std::vector<std::size_t> schedule;
};

struct RunConfig {
  Command command = Command::Orbit;
  MapDescriptor map = MapDescriptor::identity();
  std::uint64_t seed = 0;
  std::vector<PointSpec> points;

  // orbit
  std::size_t n = 0;
  int error_exponent = 30;
  bool exact = false;

  // info
  Rational epsilon{1, 2};
  std::string partition = "grid";  // or "binary"
  std::vector<std::size_t> schedule;
  std::vector<Estimator> estimators{Estimator::PairGrowth};

  // sens
  SensitivityOptions sens;

  // dim
  std::vector<double> scales;
  std::vector<double> local_scales;
  std::size_t local_n = 0;

  // report
  ReportOptions report;
  std::optional<SurrogateConfig> surrogate;

  /// The document as given, echoed into the manifest.
  nlohmann::json source;
};

/// Parses and validates; seed_override replaces the document's seed.
/// Throws ConfigError (or ParameterError/DomainError from the catalog).
RunConfig parse_config(const nlohmann::json& doc, Command command, std::optional<std::uint64_t> seed_override);

}  // namespace wchaos::cli
