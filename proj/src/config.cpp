#include "focus/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "focus/errors.hpp"

namespace focus {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join_path(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

/// Walks one JSON object, remembering which keys were read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }
  std::string path(const std::string& key) const { return join_path(path_, key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(path(key), "missing required key");
    return j_.at(key);
  }

  template <typename T>
  T get(const std::string& key) {
    const json& v = raw(key);
    if (const char* problem = type_problem<T>(v)) throw ConfigError(path(key), problem);
    return v.get<T>();
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
  }

 private:
  template <typename T>
  static const char* type_problem(const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return "expected a boolean";
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return "expected an integer";
      if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<long long>() < 0)
        return "expected a non-negative integer";
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return "expected a number";
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return "expected a string";
    }
    return nullptr;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::vector<std::string> string_list(ObjectReader& r, const std::string& key,
                                     std::vector<std::string> fallback, bool required = false) {
  if (!r.has(key) && !required) return fallback;
  const json& v = r.raw(key);
  if (!v.is_array()) throw ConfigError(r.path(key), "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string())
      throw ConfigError(r.path(key) + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

ModelKind model_kind(ObjectReader& r, const std::string& key, ModelKind fallback) {
  if (!r.has(key)) return fallback;
  try {
    return parse_model_kind(r.get<std::string>(key));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(r.path(key), e.what());
  }
}

SynthCorpusSpec parse_text(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  SynthCorpusSpec s;
  if (r.has("class_names")) {
    s.class_names = string_list(r, "class_names", {});
    if (r.has("num_classes")) throw ConfigError(r.path("num_classes"), "conflicts with class_names");
  } else {
    s.class_names = default_class_names(r.get<std::size_t>("num_classes", 4));
  }
  s.vocab_per_class = r.get<std::size_t>("vocab_per_class", s.vocab_per_class);
  s.shared_vocab = r.get<std::size_t>("shared_vocab", s.shared_vocab);
  s.docs_per_class = r.get<std::size_t>("docs_per_class", s.docs_per_class);
  s.doc_len = r.get<std::size_t>("doc_len", s.doc_len);
  s.class_purity = r.get<double>("class_purity", s.class_purity);
  s.public_fraction = r.get<double>("public_fraction", s.public_fraction);
  s.private_vocab_per_class = r.get<std::size_t>("private_vocab_per_class", s.private_vocab_per_class);
  s.private_token_rate = r.get<double>("private_token_rate", s.private_token_rate);
  if (r.has("overlaps")) {
    const json& arr = r.raw("overlaps");
    if (!arr.is_array()) throw ConfigError(r.path("overlaps"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      ObjectReader o(arr[i], r.path("overlaps") + "[" + std::to_string(i) + "]");
      VocabOverlap ov;
      ov.class_a = o.get<std::size_t>("class_a");
      ov.class_b = o.get<std::size_t>("class_b");
      ov.fraction = o.get<double>("fraction");
      o.finish();
      s.overlaps.push_back(ov);
    }
  }
  r.finish();
  try {
    s.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

NextWordSpec parse_next_word(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  NextWordSpec s;
  s.vocab = r.get<std::size_t>("vocab", s.vocab);
  s.num_users = r.get<std::size_t>("num_users", s.num_users);
  s.style_skew = r.get<double>("style_skew", s.style_skew);
  s.sentences_per_user = r.get<std::size_t>("sentences_per_user", s.sentences_per_user);
  s.public_sentences = r.get<std::size_t>("public_sentences", s.public_sentences);
  s.sentence_len = r.get<std::size_t>("sentence_len", s.sentence_len);
  s.row_concentration = r.get<double>("row_concentration", s.row_concentration);
  r.finish();
  try {
    s.validate();
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return s;
}

BlobsSpec parse_blobs(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  BlobsSpec s;
  s.num_classes = r.get<std::size_t>("num_classes", s.num_classes);
  s.dim = r.get<std::size_t>("dim", s.dim);
  s.points_per_class = r.get<std::size_t>("points_per_class", s.points_per_class);
  s.separation = r.get<double>("separation", s.separation);
  s.noise = r.get<double>("noise", s.noise);
  r.finish();
  if (s.num_classes < 2 || s.dim < s.num_classes || s.points_per_class == 0)
    throw ConfigError(path, "blobs need num_classes >= 2, dim >= num_classes, points_per_class >= 1");
  return s;
}

JsonlSource parse_jsonl(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  JsonlSource s;
  s.path = r.get<std::string>("path");
  s.public_path = r.get<std::string>("public_path");
  s.classes = string_list(r, "classes", {});
  r.finish();
  return s;
}

PartitionSpec parse_partition(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  PartitionSpec p;
  p.num_clients = r.get<std::size_t>("num_clients", 10);
  const auto mode = r.get<std::string>("mode", "iid");
  if (mode == "iid")
    p.mode = PartitionMode::iid;
  else if (mode == "dirichlet")
    p.mode = PartitionMode::dirichlet;
  else
    throw ConfigError(r.path("mode"), "expected \"iid\" or \"dirichlet\"");
  p.alpha = r.get<double>("alpha", p.alpha);
  if (r.has("sizes")) {
    ObjectReader s(r.raw("sizes"), r.path("sizes"));
    const auto kind = s.get<std::string>("kind");
    if (kind == "fixed") {
      p.sizes.kind = SizeDistribution::Kind::fixed;
    } else if (kind == "lognormal") {
      p.sizes.kind = SizeDistribution::Kind::lognormal;
      p.sizes.mean = s.get<double>("mean");
      p.sizes.stddev = s.get<double>("stddev");
    } else {
      throw ConfigError(s.path("kind"), "expected \"fixed\" or \"lognormal\"");
    }
    s.finish();
  }
  r.finish();
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(path, e.what());
  }
  return p;
}

DataConfig parse_data(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  DataConfig d;
  const auto kind = r.get<std::string>("kind");
  if (kind == "synthetic_text")
    d.kind = DataKind::synthetic_text;
  else if (kind == "next_word")
    d.kind = DataKind::next_word;
  else if (kind == "blobs")
    d.kind = DataKind::blobs;
  else if (kind == "jsonl")
    d.kind = DataKind::jsonl;
  else
    throw ConfigError(r.path("kind"), "unknown data kind '" + kind + "'");
  d.task = r.get<std::string>("task", d.task);
  d.description = r.get<std::string>("description", d.description);
  // Only the block matching `kind` may appear.
  const std::vector<std::string> blocks{"synthetic_text", "next_word", "blobs", "jsonl"};
  for (const auto& b : blocks)
    if (b != kind && r.has(b)) throw ConfigError(r.path(b), "does not match data kind '" + kind + "'");
  switch (d.kind) {
    case DataKind::synthetic_text:
      d.text = parse_text(r.has(kind) ? r.raw(kind) : json::object(), r.path(kind));
      break;
    case DataKind::next_word:
      d.next_word = parse_next_word(r.has(kind) ? r.raw(kind) : json::object(), r.path(kind));
      break;
    case DataKind::blobs:
      d.blobs = parse_blobs(r.has(kind) ? r.raw(kind) : json::object(), r.path(kind));
      break;
    case DataKind::jsonl:
      d.jsonl = parse_jsonl(r.raw(kind), r.path(kind));
      break;
  }
  if (d.kind == DataKind::synthetic_text || d.kind == DataKind::blobs) {
    d.partition = parse_partition(r.has("partition") ? r.raw("partition") : json::object(),
                                  r.path("partition"));
  } else if (r.has("partition")) {
    throw ConfigError(r.path("partition"), "not used by data kind '" + kind + "'");
  }
  if (d.kind != DataKind::jsonl) {
    d.train_per_client = r.get<std::size_t>("train_per_client", d.train_per_client);
  } else if (r.has("train_per_client")) {
    throw ConfigError(r.path("train_per_client"), "not used by data kind 'jsonl'");
  }
  r.finish();
  return d;
}

CostModelInputs parse_cost(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  CostModelInputs c;
  c.fl_params = r.get<double>("fl_params", c.fl_params);
  c.icl_params = r.get<double>("icl_params", c.icl_params);
  c.bytes_per_param = r.get<double>("bytes_per_param", c.bytes_per_param);
  c.rounds = r.get<double>("rounds", c.rounds);
  c.steps = r.get<double>("steps", c.steps);
  c.batch = r.get<double>("batch", c.batch);
  c.seq_len = r.get<double>("seq_len", c.seq_len);
  c.icl_input_len = r.get<double>("icl_input_len", c.icl_input_len);
  r.finish();
  for (double v : {c.fl_params, c.icl_params, c.bytes_per_param})
    if (!(v > 0)) throw ConfigError(path, "model sizes must be positive");
  for (double v : {c.rounds, c.steps, c.batch, c.seq_len, c.icl_input_len})
    if (!(v >= 0)) throw ConfigError(path, "counts must be non-negative");
  return c;
}

/// Keys each scenario kind accepts besides name, kind, flags and data.
const std::set<std::string>& keys_for(ScenarioKind kind) {
  static const std::set<std::string> train{"model", "hidden", "epochs", "lr", "batch"};
  static const std::set<std::string> fl{"model",  "hidden", "rounds",          "client_fraction",
                                        "epochs", "lr",     "batch",           "init_from_scorer"};
  static const std::set<std::string> icl{"policy", "k", "resample_per_example",
                                         "reads_task_revealing"};
  static const std::set<std::string> decomposed = [] {
    auto s = icl;
    s.insert("group_size");
    return s;
  }();
  static const std::set<std::string> calibrated = [] {
    auto s = icl;
    s.insert("cf_inputs");
    return s;
  }();
  static const std::set<std::string> both = [] {
    auto s = decomposed;
    s.insert("cf_inputs");
    return s;
  }();
  static const std::set<std::string> similarity{};
  static const std::set<std::string> cost{"cost"};
  switch (kind) {
    case ScenarioKind::fl: return fl;
    case ScenarioKind::local_only: return train;
    case ScenarioKind::icl_zero_shot: return similarity;
    case ScenarioKind::icl_similarity: return similarity;
    case ScenarioKind::icl_kshot: return icl;
    case ScenarioKind::icl_decomposed: return decomposed;
    case ScenarioKind::icl_calibrated: return calibrated;
    case ScenarioKind::icl_decomposed_calibrated: return both;
    case ScenarioKind::cost_table: return cost;
  }
  return similarity;
}

ScenarioConfig parse_scenario(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ScenarioConfig s;
  s.name = r.get<std::string>("name");
  if (s.name.empty() || s.name.find_first_of("/\\ ") != std::string::npos)
    throw ConfigError(r.path("name"), "must be non-empty without spaces or slashes");
  try {
    s.kind = parse_scenario_kind(r.get<std::string>("kind"));
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(r.path("kind"), e.what());
  }
  const auto& allowed = keys_for(s.kind);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& key = it.key();
    if (key == "name" || key == "kind" || key == "flags" || key == "data") continue;
    if (!allowed.count(key)) throw ConfigError(r.path(key), "unknown key for kind '" + to_string(s.kind) + "'");
  }

  s.model = model_kind(r, "model", s.model);
  s.hidden = r.get<std::size_t>("hidden", s.hidden);
  s.rounds = r.get<std::size_t>("rounds", s.rounds);
  s.client_fraction = r.get<double>("client_fraction", s.client_fraction);
  s.epochs = r.get<std::size_t>("epochs", s.epochs);
  s.lr = r.get<double>("lr", s.lr);
  s.batch = r.get<std::size_t>("batch", s.batch);
  s.init_from_scorer = r.get<bool>("init_from_scorer", s.init_from_scorer);
  if (!(s.client_fraction > 0.0 && s.client_fraction <= 1.0))
    throw ConfigError(r.path("client_fraction"), "must be in (0, 1]");
  if (!(s.lr >= 0.0)) throw ConfigError(r.path("lr"), "must be non-negative");
  if (s.batch == 0) throw ConfigError(r.path("batch"), "must be positive");
  if (s.model == ModelKind::mlp && s.hidden == 0) throw ConfigError(r.path("hidden"), "must be positive");

  if (r.has("policy")) {
    try {
      s.policy = parse_demo_policy(r.get<std::string>("policy"));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(r.path("policy"), e.what());
    }
  }
  s.k = r.get<std::size_t>("k", s.k);
  s.resample_per_example = r.get<bool>("resample_per_example", s.resample_per_example);
  s.reads_task_revealing = r.get<bool>("reads_task_revealing", s.reads_task_revealing);
  s.group_size = r.get<std::size_t>("group_size", s.group_size);
  if (s.group_size < 2) throw ConfigError(r.path("group_size"), "must be at least 2");
  s.cf_inputs = string_list(r, "cf_inputs", s.cf_inputs);
  if (s.cf_inputs.empty()) throw ConfigError(r.path("cf_inputs"), "must not be empty");

  if (r.has("cost")) s.cost = parse_cost(r.raw("cost"), r.path("cost"));

  s.unimplemented_flags = string_list(r, "flags", {});
  const auto& known = known_unimplemented_flags();
  for (std::size_t i = 0; i < s.unimplemented_flags.size(); ++i)
    if (std::find(known.begin(), known.end(), s.unimplemented_flags[i]) == known.end())
      throw ConfigError(r.path("flags") + "[" + std::to_string(i) + "]",
                        "unknown flag '" + s.unimplemented_flags[i] + "'");

  if (r.has("data")) s.data = parse_data(r.raw("data"), r.path("data"));
  r.finish();
  return s;
}

ordered_json text_json(const SynthCorpusSpec& s) {
  ordered_json j;
  j["class_names"] = s.class_names;
  j["vocab_per_class"] = s.vocab_per_class;
  j["shared_vocab"] = s.shared_vocab;
  j["docs_per_class"] = s.docs_per_class;
  j["doc_len"] = s.doc_len;
  j["class_purity"] = s.class_purity;
  j["public_fraction"] = s.public_fraction;
  j["private_vocab_per_class"] = s.private_vocab_per_class;
  j["private_token_rate"] = s.private_token_rate;
  j["overlaps"] = ordered_json::array();
  for (const auto& o : s.overlaps)
    j["overlaps"].push_back({{"class_a", o.class_a}, {"class_b", o.class_b}, {"fraction", o.fraction}});
  return j;
}

ordered_json data_json(const DataConfig& d) {
  ordered_json j;
  j["kind"] = to_string(d.kind);
  j["task"] = d.task;
  j["description"] = d.description;
  switch (d.kind) {
    case DataKind::synthetic_text:
      j["synthetic_text"] = text_json(d.text);
      break;
    case DataKind::next_word: {
      const auto& s = d.next_word;
      j["next_word"] = {{"vocab", s.vocab},
                        {"num_users", s.num_users},
                        {"style_skew", s.style_skew},
                        {"sentences_per_user", s.sentences_per_user},
                        {"public_sentences", s.public_sentences},
                        {"sentence_len", s.sentence_len},
                        {"row_concentration", s.row_concentration}};
      break;
    }
    case DataKind::blobs: {
      const auto& s = d.blobs;
      j["blobs"] = {{"num_classes", s.num_classes},
                    {"dim", s.dim},
                    {"points_per_class", s.points_per_class},
                    {"separation", s.separation},
                    {"noise", s.noise}};
      break;
    }
    case DataKind::jsonl:
      j["jsonl"] = {{"path", d.jsonl.path},
                    {"public_path", d.jsonl.public_path},
                    {"classes", d.jsonl.classes}};
      break;
  }
  if (d.kind == DataKind::synthetic_text || d.kind == DataKind::blobs) {
    const auto& p = d.partition;
    ordered_json pj;
    pj["num_clients"] = p.num_clients;
    pj["mode"] = p.mode == PartitionMode::iid ? "iid" : "dirichlet";
    pj["alpha"] = p.alpha;
    if (p.sizes.kind == SizeDistribution::Kind::fixed)
      pj["sizes"] = {{"kind", "fixed"}};
    else
      pj["sizes"] = {{"kind", "lognormal"}, {"mean", p.sizes.mean}, {"stddev", p.sizes.stddev}};
    j["partition"] = pj;
  }
  if (d.kind != DataKind::jsonl) j["train_per_client"] = d.train_per_client;
  return j;
}

ordered_json scenario_json(const ScenarioConfig& s) {
  ordered_json j;
  j["name"] = s.name;
  j["kind"] = to_string(s.kind);
  const auto& keys = keys_for(s.kind);
  auto put = [&](const std::string& key, ordered_json value) {
    if (keys.count(key)) j[key] = std::move(value);
  };
  put("model", to_string(s.model));
  put("hidden", s.hidden);
  put("rounds", s.rounds);
  put("client_fraction", s.client_fraction);
  put("epochs", s.epochs);
  put("lr", s.lr);
  put("batch", s.batch);
  put("init_from_scorer", s.init_from_scorer);
  put("policy", to_string(s.policy));
  put("k", s.k);
  put("resample_per_example", s.resample_per_example);
  put("reads_task_revealing", s.reads_task_revealing);
  put("group_size", s.group_size);
  put("cf_inputs", s.cf_inputs);
  if (keys.count("cost")) {
    const auto& c = s.cost;
    j["cost"] = {{"fl_params", c.fl_params},         {"icl_params", c.icl_params},
                 {"bytes_per_param", c.bytes_per_param}, {"rounds", c.rounds},
                 {"steps", c.steps},                 {"batch", c.batch},
                 {"seq_len", c.seq_len},             {"icl_input_len", c.icl_input_len}};
  }
  j["flags"] = s.unimplemented_flags;
  if (s.data) j["data"] = data_json(*s.data);
  return j;
}

}  // namespace

std::string to_string(DataKind kind) {
  switch (kind) {
    case DataKind::synthetic_text: return "synthetic_text";
    case DataKind::next_word: return "next_word";
    case DataKind::blobs: return "blobs";
    case DataKind::jsonl: return "jsonl";
  }
  return {};
}

std::string to_string(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::fl: return "fl";
    case ScenarioKind::local_only: return "local_only";
    case ScenarioKind::icl_zero_shot: return "icl_zero_shot";
    case ScenarioKind::icl_similarity: return "icl_similarity";
    case ScenarioKind::icl_kshot: return "icl_kshot";
    case ScenarioKind::icl_decomposed: return "icl_decomposed";
    case ScenarioKind::icl_calibrated: return "icl_calibrated";
    case ScenarioKind::icl_decomposed_calibrated: return "icl_decomposed_calibrated";
    case ScenarioKind::cost_table: return "cost_table";
  }
  return {};
}

ScenarioKind parse_scenario_kind(const std::string& s) {
  for (auto k : {ScenarioKind::fl, ScenarioKind::local_only, ScenarioKind::icl_zero_shot,
                 ScenarioKind::icl_similarity, ScenarioKind::icl_kshot, ScenarioKind::icl_decomposed,
                 ScenarioKind::icl_calibrated, ScenarioKind::icl_decomposed_calibrated,
                 ScenarioKind::cost_table})
    if (to_string(k) == s) return k;
  throw Error("unknown scenario kind '" + s + "'");
}

bool is_icl(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::icl_zero_shot:
    case ScenarioKind::icl_similarity:
    case ScenarioKind::icl_kshot:
    case ScenarioKind::icl_decomposed:
    case ScenarioKind::icl_calibrated:
    case ScenarioKind::icl_decomposed_calibrated:
      return true;
    default:
      return false;
  }
}

const std::vector<std::string>& known_unimplemented_flags() {
  static const std::vector<std::string> flags{
      "differential_privacy", "secure_aggregation", "adversarial_clients", "data_poisoning",
      "decentralized",        "personalized_fl",    "gradient_compression", "client_dropout",
      "system_heterogeneity"};
  return flags;
}

bool DataConfig::operator==(const DataConfig& other) const {
  return data_json(*this) == data_json(other);
}

bool ScenarioConfig::operator==(const ScenarioConfig& other) const {
  return scenario_json(*this) == scenario_json(other);
}

bool RunConfig::operator==(const RunConfig& other) const {
  return to_json(*this) == to_json(other);
}

RunConfig parse_config(const json& j) {
  ObjectReader r(j, "");
  RunConfig c;
  c.name = r.get<std::string>("name");
  if (c.name.empty() || c.name.find_first_of("/\\ ") != std::string::npos)
    throw ConfigError("name", "must be non-empty without spaces or slashes");
  const json& seeds = r.raw("seeds");
  if (!seeds.is_array() || seeds.empty()) throw ConfigError("seeds", "expected a non-empty array");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!seeds[i].is_number_unsigned() && !(seeds[i].is_number_integer() && seeds[i].get<long long>() >= 0))
      throw ConfigError("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
    c.seeds.push_back(seeds[i].get<std::uint64_t>());
  }
  c.output_dir = r.get<std::string>("output_dir", "");
  c.tasks_supported = r.get<double>("tasks_supported", c.tasks_supported);
  if (!(c.tasks_supported >= 1)) throw ConfigError("tasks_supported", "must be >= 1");
  c.threads = r.get<std::size_t>("threads", c.threads);

  if (r.has("network")) {
    ObjectReader n(r.raw("network"), "network");
    c.network.down_bps = n.get<double>("down_mbps", c.network.down_bps / 1e6) * 1e6;
    c.network.up_bps = n.get<double>("up_mbps", c.network.up_bps / 1e6) * 1e6;
    n.finish();
    if (!(c.network.down_bps > 0 && c.network.up_bps > 0))
      throw ConfigError("network", "bandwidths must be positive");
  }
  if (r.has("backend")) {
    ObjectReader b(r.raw("backend"), "backend");
    c.backend.embedding_dim = b.get<std::size_t>("embedding_dim", c.backend.embedding_dim);
    auto& sp = c.backend.scorer;
    sp.smoothing = b.get<double>("smoothing", sp.smoothing);
    sp.prototype_tokens = b.get<std::size_t>("prototype_tokens", sp.prototype_tokens);
    sp.lambda = b.get<double>("lambda", sp.lambda);
    sp.temperature = b.get<double>("temperature", sp.temperature);
    b.finish();
    if (c.backend.embedding_dim == 0) throw ConfigError("backend.embedding_dim", "must be positive");
    if (!(sp.smoothing > 0)) throw ConfigError("backend.smoothing", "must be positive");
    if (!(sp.lambda >= 0 && sp.lambda <= 1)) throw ConfigError("backend.lambda", "must be in [0, 1]");
    if (!(sp.temperature > 0)) throw ConfigError("backend.temperature", "must be positive");
  }
  c.data = parse_data(r.has("data") ? r.raw("data") : json{{"kind", "synthetic_text"}}, "data");

  const json& arr = r.raw("scenario");
  if (!arr.is_array() || arr.empty()) throw ConfigError("scenario", "expected a non-empty array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "scenario[" + std::to_string(i) + "]";
    auto s = parse_scenario(arr[i], path);
    if (!names.insert(s.name).second) throw ConfigError(path + ".name", "duplicate scenario name");
    c.scenarios.push_back(std::move(s));
  }
  r.finish();
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("", "invalid JSON in '" + path + "': " + e.what());
  }
  auto config = parse_config(j);
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  auto fix = [&](DataConfig& d) {
    if (d.kind == DataKind::jsonl) {
      resolve(d.jsonl.path);
      resolve(d.jsonl.public_path);
    }
  };
  fix(config.data);
  for (auto& s : config.scenarios)
    if (s.data) fix(*s.data);
  return config;
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["name"] = c.name;
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["tasks_supported"] = c.tasks_supported;
  j["threads"] = c.threads;
  j["network"] = {{"down_mbps", c.network.down_bps / 1e6}, {"up_mbps", c.network.up_bps / 1e6}};
  const auto& sp = c.backend.scorer;
  j["backend"] = {{"embedding_dim", c.backend.embedding_dim},
                  {"smoothing", sp.smoothing},
                  {"prototype_tokens", sp.prototype_tokens},
                  {"lambda", sp.lambda},
                  {"temperature", sp.temperature}};
  j["data"] = data_json(c.data);
  j["scenario"] = ordered_json::array();
  for (const auto& s : c.scenarios) j["scenario"].push_back(scenario_json(s));
  return j;
}

}  // namespace focus
