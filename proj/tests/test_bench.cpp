#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "focus/bench.hpp"
#include "focus/config.hpp"
#include "focus/errors.hpp"

using namespace focus;
namespace fs = std::filesystem;

namespace {

const char* kSmall = R"({
  "name": "small",
  "seeds": [1, 2],
  "backend": {"embedding_dim": 128},
  "data": {
    "kind": "synthetic_text",
    "task": "topic",
    "synthetic_text": {"class_names": ["sports", "politics", "science", "music"], "docs_per_class": 40},
    "partition": {"num_clients": 6, "mode": "dirichlet", "alpha": 0.5},
    "train_per_client": 5
  },
  "scenario": [
    {"name": "zero", "kind": "icl_zero_shot"},
    {"name": "up3", "kind": "icl_kshot", "policy": "user_privacy", "k": 3},
    {"name": "nup3", "kind": "icl_kshot", "policy": "no_user_privacy", "k": 3},
    {"name": "pub3", "kind": "icl_kshot", "policy": "public", "k": 3},
    {"name": "fedavg", "kind": "fl", "rounds": 3},
    {"name": "costs", "kind": "cost_table"}
  ]
})";

RunConfig small() { return parse_config(nlohmann::json::parse(kSmall)); }

const ScenarioConfig& scenario(const RunConfig& c, const std::string& name) {
  for (const auto& s : c.scenarios)
    if (s.name == name) return s;
  throw Error("no scenario " + name);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("focus_test_" + name);
  fs::remove_all(p);
  return p;
}

RunRecord with_users(const std::string& name, std::uint64_t seed, std::vector<std::pair<double, double>> pts) {
  RunRecord r;
  r.scenario = name;
  r.seed = seed;
  EvalMetrics m;
  int i = 0;
  for (const auto& [h, a] : pts) {
    UserMetrics u;
    u.client_id = "c" + std::to_string(i++);
    u.n_train = 8;
    u.label_entropy = h;
    u.accuracy = a;
    m.users.push_back(u);
  }
  r.metrics = m;
  return r;
}

}  // namespace

TEST_CASE("config parsing and canonical round trip") {
  const auto c = small();
  CHECK(c.scenarios.size() == 6);
  CHECK(c.data.partition.num_clients == 6);
  CHECK(scenario(c, "nup3").policy == DemoPolicyKind::no_user_privacy);
  const auto canonical = to_json(c);
  CHECK(parse_config(nlohmann::json::parse(canonical.dump())) == c);
  CHECK(to_json(parse_config(nlohmann::json::parse(canonical.dump()))).dump() == canonical.dump());
}

TEST_CASE("config errors name the offending key") {
  auto j = nlohmann::json::parse(kSmall);
  j["scenario"][0]["lrr"] = 0.1;
  try {
    parse_config(j);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("scenario[0].lrr") != std::string::npos);
  }
  auto bad_type = nlohmann::json::parse(kSmall);
  bad_type["scenario"][1]["k"] = "three";
  CHECK_THROWS_AS(parse_config(bad_type), ConfigError);
  auto bad_kind = nlohmann::json::parse(kSmall);
  bad_kind["scenario"][1]["kind"] = "icl_magic";
  CHECK_THROWS_AS(parse_config(bad_kind), ConfigError);
  auto fl_key_on_icl = nlohmann::json::parse(kSmall);
  fl_key_on_icl["scenario"][0]["rounds"] = 3;
  CHECK_THROWS_AS(parse_config(fl_key_on_icl), ConfigError);
  CHECK_THROWS_AS(parse_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("zero-shot ICL keeps perfect secrecy and hides the task") {
  const auto c = small();
  const auto r = run_scenario(c, scenario(c, "zero"), 1);
  CHECK(r.secrecy.holds);
  for (const auto& [task, exposed] : r.task_exposed) CHECK_FALSE(exposed);
  REQUIRE(r.metrics);
  CHECK(r.metrics->macro_accuracy > 0.0);
  for (const auto& e : r.ledger) CHECK(e.payload() == PayloadKind::fm_download);
  CHECK(r.raw_tally.bytes_down == static_cast<double>(ledger_bytes(r.ledger).down));
  CHECK(r.raw_tally.bytes_up == 0.0);
}

TEST_CASE("federated scenarios reveal the task and break secrecy") {
  const auto c = small();
  const auto r = run_scenario(c, scenario(c, "fedavg"), 1);
  CHECK_FALSE(r.secrecy.holds);
  CHECK(r.task_exposed.at("topic"));
  CHECK(r.rounds.size() == 3);
  const auto bytes = ledger_bytes(r.ledger);
  CHECK(r.raw_tally.bytes_up == static_cast<double>(bytes.up));
  CHECK(r.raw_tally.bytes_down == static_cast<double>(bytes.down));

  auto zero_rounds = c;
  for (auto& s : zero_rounds.scenarios) s.rounds = 0;
  const auto z = run_scenario(zero_rounds, scenario(zero_rounds, "fedavg"), 1);
  CHECK(z.ledger.empty());
  CHECK(z.secrecy.holds);
}

TEST_CASE("scenario errors carry the scenario and seed") {
  auto c = small();
  auto bad = c;
  bad.data.partition.num_clients = 100000;
  try {
    run_scenario(bad, scenario(bad, "zero"), 7);
    FAIL("expected ScenarioError");
  } catch (const ScenarioError& e) {
    const std::string what = e.what();
    CHECK(what.find("'zero'") != std::string::npos);
    CHECK(what.find("seed 7") != std::string::npos);
  }
}

TEST_CASE("reports are complete and reproducible") {
  const auto c = small();
  const auto records = run_all(c);
  CHECK(records.size() == 12);
  CHECK(records[0].scenario == "zero");
  CHECK(records[1].seed == 2);

  const auto a = temp_dir("reports_a"), b = temp_dir("reports_b");
  emit_reports(c, records, a.string());
  emit_reports(c, run_all(c), b.string());

  for (const char* f : {"metrics.json", "meta.json", "plotdata/violin.csv", "plotdata/entropy_scatter.csv",
                        "plotdata/policy_comparison.csv"})
    CHECK(fs::exists(a / f));
  CHECK(slurp(a / "metrics.json") == slurp(b / "metrics.json"));

  for (const auto& r : records) {
    const auto dir = fs::path("scenarios") / r.scenario / ("seed_" + std::to_string(r.seed));
    for (const char* f : {"metrics.json", "ledger.jsonl", "cost.json"}) {
      CHECK(fs::exists(a / dir / f));
      CHECK(slurp(a / dir / f) == slurp(b / dir / f));
    }
    CHECK(line_count(slurp(a / dir / "ledger.jsonl")) == r.ledger.size());
    if (r.metrics) {
      CHECK(line_count(slurp(a / dir / "per_user.csv")) == r.metrics->users.size() + 1);
      CHECK(line_count(slurp(a / dir / "per_class.csv")) == 5);
      const auto back = nlohmann::ordered_json::parse(slurp(a / dir / "metrics.json"));
      CHECK(back["metrics"] == nlohmann::ordered_json::parse(to_json(*r.metrics).dump()));
    }
    CHECK(fs::exists(a / dir / "rounds.csv") == (r.kind == ScenarioKind::fl));
  }
  CHECK(render_report(a.string()).find("zero") != std::string::npos);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cost-table scenario reproduces the reference numbers") {
  const auto c = small();
  const auto r = run_scenario(c, scenario(c, "costs"), 1);
  REQUIRE(r.cost_report);
  CHECK(r.cost_report->fl_training_flops == 9830400000000000.0);
  CHECK(r.cost_report->icl_download_bytes == 40e9);
}

TEST_CASE("spearman correlation") {
  CHECK(*spearman({1, 2, 3, 4, 5}, {10, 8, 6, 4, 2}) == doctest::Approx(-1.0));
  CHECK(*spearman({1, 2, 3}, {1, 4, 9}) == doctest::Approx(1.0));
  // ties use average ranks: ranks x = (1.5, 1.5, 3), y = (1, 2, 3)
  CHECK(*spearman({1, 1, 2}, {1, 2, 3}) == doctest::Approx(0.8660254).epsilon(1e-6));
  CHECK_FALSE(spearman({1, 1, 1}, {1, 2, 3}).has_value());
  CHECK_FALSE(spearman({1}, {1}).has_value());
  CHECK_THROWS(spearman({1, 2}, {1}));
}

TEST_CASE("entropy analysis") {
  auto perfect = entropy_analysis({with_users("s", 1, {{0.0, 1.0}, {0.5, 0.8}, {1.0, 0.6}, {1.5, 0.4}, {2.0, 0.2}})});
  REQUIRE(perfect.spearman);
  CHECK(*perfect.spearman == doctest::Approx(-1.0));
  CHECK(perfect.warnings.empty());

  auto flat = entropy_analysis({with_users("s", 1, {{1.0, 1.0}, {1.0, 0.8}, {1.0, 0.6}, {1.0, 0.4}, {1.0, 0.2}})});
  CHECK_FALSE(flat.spearman);
  REQUIRE(flat.warnings.size() == 1);
  CHECK(flat.warnings[0].find("zero variance") != std::string::npos);

  auto few = entropy_analysis({with_users("s", 1, {{0.0, 1.0}, {1.0, 0.5}})});
  CHECK_FALSE(few.spearman);
  CHECK(few.warnings[0].find("insufficient") != std::string::npos);

  auto small_users = with_users("s", 1, {{0.0, 1.0}, {0.5, 0.8}, {1.0, 0.6}, {1.5, 0.4}, {2.0, 0.2}});
  small_users.metrics->users[0].n_train = 3;
  CHECK(entropy_analysis({small_users}).points.size() == 4);
}

TEST_CASE("policy comparison") {
  auto c = small();
  c.scenarios.push_back(c.scenarios[1]);
  c.scenarios.back().name = "up0";
  c.scenarios.back().k = 0;
  c.scenarios.push_back(c.scenarios[2]);
  c.scenarios.back().name = "nup0";
  c.scenarios.back().k = 0;
  std::vector<RunRecord> records;
  for (const auto& s : c.scenarios)
    if (s.kind == ScenarioKind::icl_kshot || s.kind == ScenarioKind::icl_zero_shot)
      for (auto seed : c.seeds) records.push_back(run_scenario(c, s, seed));
  const auto cmp = compare_policies(records);
  CHECK(cmp.rows.size() == 5);
  const PolicyRow* up0 = nullptr;
  const PolicyRow* nup0 = nullptr;
  for (const auto& row : cmp.rows) {
    CHECK(row.per_seed.size() == 2);
    CHECK(row.delta_vs_zero_shot.size() == 2);
    if (row.k == 0 && row.policy == DemoPolicyKind::user_privacy) up0 = &row;
    if (row.k == 0 && row.policy == DemoPolicyKind::no_user_privacy) nup0 = &row;
  }
  REQUIRE(up0);
  REQUIRE(nup0);
  CHECK(up0->per_seed == nup0->per_seed);  // no demos, same predictions
  for (double d : up0->delta_vs_zero_shot) CHECK(d == 0.0);
  CHECK(cmp.paired_deltas.count("user_privacy-no_user_privacy@3") == 1);
  CHECK(cmp.paired_deltas.at("user_privacy-no_user_privacy@0") == 0.0);
}

TEST_CASE("next-word pipeline runs end to end") {
  auto j = nlohmann::json::parse(R"({
    "name": "nw",
    "seeds": [3],
    "data": {"kind": "next_word", "task": "next", "next_word": {"vocab": 12, "num_users": 4,
             "sentences_per_user": 12, "public_sentences": 200}, "train_per_client": 4},
    "scenario": [
      {"name": "zero", "kind": "icl_zero_shot"},
      {"name": "up2", "kind": "icl_kshot", "policy": "user_privacy", "k": 2}
    ]
  })");
  const auto c = parse_config(j);
  const auto records = run_all(c);
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    REQUIRE(r.metrics);
    CHECK(r.metrics->users.size() == 4);
    CHECK(r.secrecy.holds);
    CHECK(r.metrics->macro_accuracy >= 0.0);
  }
}

TEST_CASE("bundled configs parse") {
  for (const char* name : {"policy_sweep.json", "fl_vs_icl.json", "coarse_vs_fine.json", "table3_costs.json"}) {
    const auto c = parse_config_file((fs::path(FOCUS_CONFIG_DIR) / name).string());
    CHECK_FALSE(c.scenarios.empty());
    CHECK(parse_config(nlohmann::json::parse(to_json(c).dump())) == c);
  }
}
