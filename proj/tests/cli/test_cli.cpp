#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kWork = fs::path(CLI_WORK_DIR);

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  fs::path out;
  std::string err;
};

// Writes the config, runs the binary, returns its exit status and stderr.
Run run(const std::string& name, const std::string& command, const json& config, const std::string& extra = "") {
  fs::create_directories(kWork);
  const fs::path cfg = kWork / (name + ".json");
  const fs::path out = kWork / name;
  const fs::path err = kWork / (name + ".err");
  fs::remove_all(out);
  std::ofstream(cfg) << config.dump();
  const std::string cmd = std::string(CLI_BINARY) + " " + command + " --config " + cfg.string() + " --out " +
                          out.string() + " " + extra + " 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, slurp(err)};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  for (std::string l; std::getline(s, l);) out.push_back(l);
  return out;
}

void check_same_tree(const fs::path& a, const fs::path& b) {
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    const fs::path other = b / e.path().filename();
    REQUIRE(fs::exists(other));
    CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
    ++count;
  }
  CHECK(count == static_cast<std::size_t>(std::distance(fs::directory_iterator(b), fs::directory_iterator{})));
}

const json plm2 = {{"kind", "PLManneville"}, {"params", {{"z", 2}, {"a", "1/2"}}}};

}  // namespace

TEST_CASE("orbit of the period-two Manneville cycle") {
  const Run r = run("orbit_plm", "orbit", {{"map", plm2}, {"points", {"1/3"}}, {"n", 4}});
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(r.out / "orbit_0.csv"));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "step,point,error_exponent");
  for (int i = 0; i <= 4; ++i) CHECK(rows[i + 1] == std::to_string(i) + (i % 2 ? ",2/3" : ",1/3") + ",exact");
  CHECK(fs::exists(r.out / "manifest.json"));
}

TEST_CASE("identity orbit repeats its start") {
  const Run r = run("orbit_id", "orbit", {{"map", {{"kind", "Identity"}}}, {"points", {"1/5"}}, {"n", 2}});
  REQUIRE(r.code == 0);
  const auto rows = lines(slurp(r.out / "orbit_0.csv"));
  REQUIRE(rows.size() == 4);
  for (int i = 1; i <= 3; ++i) CHECK(rows[i].substr(rows[i].find(',')) == ",1/5,exact");

  // fixed-point path stores 1/5 rounded to 62 fractional bits
  const Run f = run("orbit_id_fixed", "orbit",
                    {{"map", {{"kind", "Identity"}}}, {"points", {"1/5"}}, {"n", 2}, {"exact", false}});
  REQUIRE(f.code == 0);
  const auto frows = lines(slurp(f.out / "orbit_0.csv"));
  REQUIRE(frows.size() == 4);
  CHECK(frows[1] == "0,922337203685477581/4611686018427387904,30");
  CHECK(frows[3] == "2" + frows[1].substr(1));
}

TEST_CASE("configuration errors exit with code 2 before any output") {
  json bad_z = {{"map", {{"kind", "PLManneville"}, {"params", {{"z", 1.5}, {"a", "1/2"}}}}},
                {"points", {"1/3"}},
                {"n", 4}};
  const Run r = run("bad_z", "orbit", bad_z);
  CHECK(r.code == 2);
  CHECK(r.err.find("z ≥ 2") != std::string::npos);
  CHECK_FALSE(fs::exists(r.out));

  CHECK(run("unknown_key", "orbit", {{"map", plm2}, {"points", {"1/3"}}, {"n", 4}, {"steps", 3}}).code == 2);
  CHECK(run("missing_n", "orbit", {{"map", plm2}, {"points", {"1/3"}}}).code == 2);
  CHECK(run("outside", "orbit", {{"map", plm2}, {"points", {"3/2"}}, {"n", 4}}).code == 2);
  CHECK(run("short_schedule", "sens",
            {{"map", plm2}, {"points", {"0"}}, {"epsilon", "1/4"}, {"schedule", {8, 16, 32}}})
            .code == 2);
  CHECK(run("narrow_scales", "dim",
            {{"map", plm2}, {"points", {"0.3"}}, {"n", 1000}, {"scales", {0.1, 0.05, 0.04, 0.03, 0.02}}})
            .code == 2);
  const Run dup = run("bad_ratio", "info",
                      {{"map", plm2},
                       {"points", {"0.3"}},
                       {"n", 4096},
                       {"schedule", {{"start", 64}, {"ratio", 1}, {"count", 7}}}});
  CHECK(dup.code == 2);
  CHECK_FALSE(fs::exists(dup.out));
}

TEST_CASE("precision and coding failures have their own exit codes") {
  const json truncated = {{"kind", "PLManneville"}, {"params", {{"z", 2}, {"a", "1/2"}, {"k_max", 4}}}};
  CHECK(run("truncated", "orbit", {{"map", truncated}, {"points", {"1/100"}}, {"n", 4}, {"exact", false}}).code == 3);

  const json smooth = {{"kind", "SmoothManneville"}, {"params", {{"z", 2.5}}}};
  const Run r = run("on_boundary", "info",
                    {{"map", smooth},
                     {"points", {"1/2"}},
                     {"n", 128},
                     {"partition", "binary"},
                     {"schedule", {1, 2, 4, 8, 16, 32, 64, 128}}});
  CHECK(r.code == 4);
}

TEST_CASE("sensitivity of the identity has no regime") {
  const Run r = run("sens_id", "sens",
                    {{"map", {{"kind", "Identity"}}},
                     {"points", {{"random", 2}}},
                     {"seed", 3},
                     {"epsilon", "1/4"},
                     {"schedule", {{"start", 8}, {"ratio", 2}, {"count", 8}}}});
  REQUIRE(r.code == 0);
  const json fit = json::parse(slurp(r.out / "fit.json"));
  REQUIRE(fit["points"].size() == 2);
  for (const json& p : fit["points"]) {
    CHECK(p["inner"]["regime"] == "None");
    CHECK(p["outer"]["regime"] == "None");
  }
  CHECK(lines(slurp(r.out / "sens_0.csv")).front() == "n,r,R,neglog_r,neglog_R");
}

TEST_CASE("Manneville z = 3 information grows like n^(1/2)") {
  const Run r = run("info_plm3", "info",
                    {{"map", {{"kind", "PLManneville"}, {"params", {{"z", 3}, {"a", "1/2"}}}}},
                     {"points", {{"random", 1}}},
                     {"seed", 2024},
                     {"n", 1 << 20},
                     {"epsilon", "1/2"},
                     {"estimators", {"pairgrowth"}}});
  REQUIRE(r.code == 0);
  const json fit = json::parse(slurp(r.out / "fit.json"));
  const double alpha = fit["points"][0]["fits"][0]["fit"]["exponent"].get<double>();
  CHECK(alpha >= 0.35);
  CHECK(alpha <= 0.65);
  CHECK(lines(slurp(r.out / "info_0.csv")).front() == "n,bits,estimator");
}

TEST_CASE("reruns are byte-identical and independent of the thread count") {
  const json cfg = {{"map", {{"kind", "Rotation"}}},
                    {"points", {{"random", 3}}},
                    {"seed", 9},
                    {"n", 16384},
                    {"scales", {{"start", "1/8"}, {"ratio", 0.5}, {"count", 7}}},
                    {"local_n", 4096}};
  const Run a = run("dim_a", "dim", cfg);
  const Run b = run("dim_b", "dim", cfg, "--threads 3");
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  check_same_tree(a.out, b.out);

  const json manifest = json::parse(slurp(a.out / "manifest.json"));
  CHECK(manifest["seed"] == 9);
  CHECK(manifest["files"].size() == 10);
  CHECK(manifest["config"] == cfg);

  // --seed overrides the document and changes the drawn points
  const Run c = run("dim_c", "dim", cfg, "--seed 10");
  REQUIRE(c.code == 0);
  CHECK(json::parse(slurp(c.out / "manifest.json"))["points"] != manifest["points"]);

  const json sens = {{"map", {{"kind", "Doubling"}}},
                     {"points", {"1/3", "0.1"}},
                     {"epsilon", "1/4"},
                     {"schedule", {1, 2, 3, 4, 5, 6, 7, 8}}};
  const Run s1 = run("sens_a", "sens", sens, "--threads 2");
  const Run s2 = run("sens_b", "sens", sens);
  REQUIRE(s1.code == 0);
  check_same_tree(s1.out, s2.out);
}

TEST_CASE("doubling golden report has no failed verdict") {
  const Run r = run("report_doubling", "report",
                    {{"map", {{"kind", "Doubling"}}},
                     {"points", {{"random", 1}, {"bits", (1 << 20) + 64}}},
                     {"seed", 2024},
                     {"info_n", 1 << 20},
                     {"local_n", 1 << 18},
                     {"sens_schedule", {{"start", 8}, {"ratio", 2}, {"count", 7}}},
                     {"surrogate", {{"epsilon", "1/16"}, {"schedule", {16, 32, 64}}}}});
  REQUIRE(r.code == 0);
  const json rep = json::parse(slurp(r.out / "report.json"));
  CHECK(rep["fail_count"] == 0);
  REQUIRE(rep["points"][0]["verdicts"].size() == 3);
  for (const json& v : rep["points"][0]["verdicts"]) {
    CHECK(v["verdict"] == "pass");
    CHECK(std::abs(v["margin"].get<double>()) <= 0.3);
  }
  const auto csv = lines(slurp(r.out / "report.csv"));
  REQUIRE(csv.size() == 4);
  CHECK(csv[0] == "map,x,inequality,lhs,rhs,slack,verdict");
  CHECK(lines(slurp(r.out / "surrogate_0.csv")).size() == 4);
}
