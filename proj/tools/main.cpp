#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <mpfr.h>

#include "commands.hpp"

namespace fs = std::filesystem;
using namespace wchaos;

namespace {

struct Args {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

nlohmann::json read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cli::ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw cli::ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

// Each file goes to a temporary name first and is renamed into place; the
// manifest is the last one written.
void write_outputs(const fs::path& dir, const std::vector<cli::OutputFile>& files) {
  fs::create_directories(dir);
  for (const cli::OutputFile& f : files) {
    const fs::path target = dir / f.name;
    const fs::path tmp = dir / ("." + f.name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << f.content;
      out.flush();
      if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orbit complexity, sensitivity and dimension experiments"};
  app.require_subcommand(1);
  Args args;
  for (const char* name : {"orbit", "info", "sens", "dim", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", args.config, "JSON run configuration")->required();
    sub->add_option("--out", args.out, "output directory");
    sub->add_option("--seed", args.seed, "overrides the config seed");
    sub->add_option("--threads", args.threads, "points processed concurrently")->check(CLI::Range(1u, 1024u));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto command = cli::command_from_string(app.get_subcommands().front()->get_name());
    const cli::RunConfig cfg = cli::parse_config(read_config(args.config), command, args.seed);
    // without thread-local MPFR state the library is not reentrant
    const unsigned threads = mpfr_buildopt_tls_p() ? args.threads : 1u;
    const cli::RunResult result = cli::run(cfg, threads);
    write_outputs(args.out, result.files);
    if (command == cli::Command::Report) {
      std::fprintf(stderr, "%zu fail verdict(s)\n", result.fail_count);
    }
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cli::exit_code_for(e);
  }
}
