#include "focus/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "focus/errors.hpp"
#include "focus/prompt_opt.hpp"
#include "focus/random.hpp"

namespace focus {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

enum Salt : std::uint64_t {
  kCorpus = 1,
  kPartition = 2,
  kSplit = 3,
  kEncoder = 4,
  kInit = 5,
  kTrain = 6,
  kDemos = 7,
  kGroups = 8,
};

std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

ordered_json num_or_null(double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<ClientSilo> silos_for_task(std::vector<ClientSilo> silos, const std::string& task) {
  std::vector<ClientSilo> out;
  for (auto& s : silos)
    if (s.has_task(task)) out.push_back(std::move(s));
  return out;
}

std::vector<double> features_of(const LabeledExample& ex, const FoundationModel* fm) {
  if (!ex.is_text()) return ex.features();
  if (!fm) throw Error("text inputs need an encoder to become features");
  return fm->encode(ex.text());
}

FeatureSet featurize_with(const Dataset& data, const LabelSchema& schema, const FoundationModel* fm) {
  return featurize(data, schema, [fm](const LabeledExample& ex) { return features_of(ex, fm); });
}

/// Evaluates one model per user on that user's test split.
template <typename ModelFor>
EvalMetrics evaluate_models(const std::vector<ClientSilo>& silos, const Task& task,
                            const FoundationModel* fm, ModelFor model_for) {
  MetricsBuilder builder(task.schema);
  for (std::size_t i = 0; i < silos.size(); ++i) {
    const auto& silo = silos[i];
    const auto& test = silo.test(task.id);
    if (test.empty()) {
      builder.exclude(silo.id());
      continue;
    }
    const GlobalModel& model = model_for(i);
    builder.begin_user(silo.id(), silo.train(task.id));
    for (const auto& ex : test) {
      const auto x = features_of(ex, fm);
      builder.record(task.schema.require_index(ex.label), predict(model, x));
    }
    builder.end_user();
  }
  return builder.finish();
}

std::vector<Demonstration> public_demo_list(const Pool& pool, const LabelSchema& schema,
                                            std::size_t count) {
  std::vector<std::vector<const LabeledExample*>> by_class(schema.size());
  for (const auto& ex : pool.examples)
    if (auto c = schema.index_of(ex.label)) by_class[*c].push_back(&ex);
  std::vector<Demonstration> out;
  for (std::size_t round = 0; out.size() < count; ++round) {
    bool any = false;
    for (std::size_t c = 0; c < schema.size() && out.size() < count; ++c) {
      if (round >= by_class[c].size()) continue;
      const auto* ex = by_class[c][round];
      out.push_back({ex->is_text() ? ex->text() : std::string(), ex->label, ""});
      any = true;
    }
    if (!any) break;
  }
  return out;
}

GlobalModel initial_model(const ScenarioConfig& sc, const PreparedData& data,
                          const ReferenceFm* fm, std::size_t input_dim, std::uint64_t seed) {
  Architecture arch{sc.model, input_dim, data.task.schema.size(),
                    sc.model == ModelKind::mlp ? sc.hidden : 0};
  auto model = init_model(arch, derive_seed(seed, {kInit}));
  if (!sc.init_from_scorer) return model;
  if (sc.model != ModelKind::logistic || !fm || !fm->scorer() || data.numeric)
    throw Error("init_from_scorer needs a logistic model on text data");
  const auto& scorer = *fm->scorer();
  const std::size_t K = arch.num_classes, D = arch.input_dim;
  for (std::size_t c = 0; c < K; ++c) {
    const auto& name = data.task.schema.name(c);
    const auto e = fm->encode(fm->class_text(name, data.task.description));
    for (std::size_t d = 0; d < D; ++d) model.params[c * D + d] = e[d] / scorer.params().temperature;
    if (auto idx = scorer.class_index(name)) model.params[K * D + c] = std::log(scorer.prior()[*idx]);
  }
  return model;
}

void run_training(const RunConfig& config, const ScenarioConfig& sc, const PreparedData& data,
                  std::uint64_t seed, std::uint64_t scenario_salt, RunRecord& rec) {
  std::optional<ReferenceFm> fm;
  if (!data.numeric) fm = build_backend(config.backend, data, seed);
  const FoundationModel* enc = fm ? &*fm : nullptr;
  std::vector<ClientData> clients;
  for (const auto& silo : data.silos)
    clients.push_back({silo.id(), featurize_with(silo.train(data.task.id), data.task.schema, enc)});
  const std::size_t dim = data.numeric ? [&] {
    for (const auto& silo : data.silos) {
      if (!silo.train(data.task.id).empty()) return silo.train(data.task.id).front().features().size();
      if (!silo.test(data.task.id).empty()) return silo.test(data.task.id).front().features().size();
    }
    throw NoProgress("no examples to size the model from");
  }() : config.backend.embedding_dim;
  const auto initial = initial_model(sc, data, fm ? &*fm : nullptr, dim, seed);
  TrainConfig train{sc.epochs, sc.lr, sc.batch, derive_seed(seed, {kTrain, scenario_salt})};

  if (sc.kind == ScenarioKind::fl) {
    FlowLedger ledger;
    FlConfig flc{sc.rounds, sc.client_fraction, train};
    auto result = run_federated(initial, clients, data.task.id, flc, ledger, rec.raw_tally, rec.run_id);
    rec.rounds = std::move(result.rounds);
    rec.ledger = ledger.snapshot();
    rec.metrics = evaluate_models(data.silos, data.task, enc,
                                  [&](std::size_t) -> const GlobalModel& { return result.model; });
    rec.tally = tally_scenario(ScenarioFamily::federated, rec.raw_tally, config.network,
                               config.tasks_supported);
  } else {
    std::vector<GlobalModel> models;
    models.reserve(clients.size());
    for (const auto& c : clients) models.push_back(train_local_only(initial, c, train, &rec.raw_tally));
    rec.raw_tally.clients = static_cast<double>(clients.size());
    rec.metrics = evaluate_models(data.silos, data.task, enc,
                                  [&](std::size_t i) -> const GlobalModel& { return models[i]; });
    rec.tally = tally_scenario(ScenarioFamily::local_only, rec.raw_tally, config.network,
                               config.tasks_supported);
  }
}

void run_icl(const RunConfig& config, const ScenarioConfig& sc, const PreparedData& data,
             std::uint64_t seed, RunRecord& rec) {
  if (data.numeric) throw Error("in-context scenarios need text data");
  const bool next_word = data.task.kind() == TaskKind::next_word;
  if (next_word && sc.kind != ScenarioKind::icl_zero_shot && sc.kind != ScenarioKind::icl_kshot)
    throw Error("next-word data supports icl_zero_shot and icl_kshot only");

  const ReferenceFm fm = build_backend(config.backend, data, seed);
  const ContextTemplate tmpl;
  CountingFm counting(fm, tmpl);
  FlowLedger ledger;

  // Every user downloads the frozen model once from the public repository.
  const auto model_bytes = static_cast<std::uint64_t>(fm.spec().size_bytes());
  for (const auto& silo : data.silos)
    ledger.append(FlowEvent(rec.run_id, 0, Endpoint::public_repo(), Endpoint::silo(silo.id()),
                            PayloadKind::fm_download, model_bytes, false, false, data.task.id));

  DemoPolicy policy;
  policy.seed = derive_seed(seed, {kDemos});
  policy.reads_task_revealing = sc.reads_task_revealing;
  if (sc.kind != ScenarioKind::icl_zero_shot && sc.kind != ScenarioKind::icl_similarity) {
    policy.kind = sc.policy;
    policy.k = sc.k;
  }
  if (policy.kind == DemoPolicyKind::public_demos) {
    policy.public_demos = public_demo_list(data.public_pool, data.task.schema, std::max<std::size_t>(policy.k, 1));
    if (policy.public_demos.empty()) throw MissingPool("public pool has no examples for the schema");
  }
  rec.policy = policy.kind;
  rec.k = policy.k;

  const auto& classes = data.task.schema.classes();
  Predictor predictor;
  switch (sc.kind) {
    case ScenarioKind::icl_zero_shot:
    case ScenarioKind::icl_kshot:
      predictor = next_word ? make_next_token_predictor(counting, data.task)
                            : make_prompt_predictor(counting, data.task);
      break;
    case ScenarioKind::icl_similarity:
      predictor = make_similarity_predictor(counting, data.task);
      break;
    case ScenarioKind::icl_decomposed: {
      auto grouping = partition_label_groups(classes.size(), sc.group_size, derive_seed(seed, {kGroups}));
      predictor = [&counting, grouping, classes](const Context& ctx, std::string_view input) {
        return std::optional<std::size_t>(decomposed_classify(counting, grouping, classes, ctx, input));
      };
      break;
    }
    case ScenarioKind::icl_calibrated:
    case ScenarioKind::icl_decomposed_calibrated: {
      // One content-free estimate per distinct context.
      auto cache = std::make_shared<std::map<std::string, Distribution>>();
      std::optional<LabelGrouping> grouping;
      if (sc.kind == ScenarioKind::icl_decomposed_calibrated)
        grouping = partition_label_groups(classes.size(), sc.group_size, derive_seed(seed, {kGroups}));
      predictor = [&counting, cache, grouping, classes, cf = sc.cf_inputs](
                      const Context& ctx, std::string_view input) -> std::optional<std::size_t> {
        const auto key = context_key(ctx);
        auto it = cache->find(key);
        if (it == cache->end())
          it = cache->emplace(key, estimate_content_free(counting, ctx, classes, cf)).first;
        if (grouping) return decomposed_classify(counting, *grouping, classes, ctx, input, &it->second);
        const auto cal = build_calibrator(it->second);
        return direct_classify(counting, classes, ctx, input, &cal);
      };
      break;
    }
    default:
      throw Error("not an in-context scenario");
  }

  EvalOptions options{sc.resample_per_example, rec.run_id};
  rec.metrics = evaluate_clients(data.silos, data.task, policy, predictor, ledger, options);
  rec.ledger = ledger.snapshot();
  rec.fm_calls = counting.calls();

  const auto bytes = ledger_bytes(rec.ledger);
  rec.raw_tally.inferences = static_cast<double>(counting.calls());
  rec.raw_tally.inference_flops = inference_flops(fm.spec(), static_cast<double>(counting.prompt_tokens()));
  rec.raw_tally.bytes_up = static_cast<double>(bytes.up);
  rec.raw_tally.bytes_down = static_cast<double>(bytes.down);
  rec.raw_tally.clients = static_cast<double>(data.silos.size());
  rec.raw_tally.per_client_bytes_down = static_cast<double>(model_bytes);
  rec.tally = tally_scenario(ScenarioFamily::icl, rec.raw_tally, config.network, config.tasks_supported);
}

}  // namespace

PreparedData prepare_data(const DataConfig& d, std::uint64_t seed) {
  PreparedData out;
  out.task.id = d.task;
  out.task.description = d.description;
  switch (d.kind) {
    case DataKind::synthetic_text:
    case DataKind::blobs: {
      SynthCorpus corpus;
      if (d.kind == DataKind::synthetic_text) {
        auto spec = d.text;
        spec.seed = derive_seed(seed, {kCorpus});
        corpus = synth_classification_corpus(spec);
      } else {
        auto spec = d.blobs;
        spec.seed = derive_seed(seed, {kCorpus});
        corpus = synth_gaussian_blobs(spec);
        out.numeric = true;
      }
      out.task.schema = corpus.schema;
      auto pspec = d.partition;
      pspec.seed = derive_seed(seed, {kPartition});
      auto silos = partition(corpus.private_pool.examples, corpus.schema, pspec, d.task);
      out.silos = split_train_test(silos, d.task, d.train_per_client, derive_seed(seed, {kSplit}));
      out.public_pool = std::move(corpus.public_pool);
      break;
    }
    case DataKind::next_word: {
      auto spec = d.next_word;
      spec.seed = derive_seed(seed, {kCorpus});
      auto corpus = synth_next_word_corpus(spec);
      out.task.schema = LabelSchema(corpus.vocabulary, TaskKind::next_word);
      std::vector<ClientSilo> silos;
      for (std::size_t u = 0; u < corpus.user_datasets.size(); ++u) {
        std::map<std::string, TaskData> m;
        m[d.task] = TaskData{corpus.user_datasets[u], {}};
        silos.emplace_back(client_id(u, corpus.user_datasets.size()), std::move(m));
      }
      out.silos = split_train_test(silos, d.task, d.train_per_client, derive_seed(seed, {kSplit}));
      out.public_pool = std::move(corpus.public_pool);
      break;
    }
    case DataKind::jsonl: {
      auto silos = silos_for_task(silos_from_records(read_dataset_jsonl(d.jsonl.path)), d.task);
      if (silos.empty()) throw Error("no records for task '" + d.task + "' in " + d.jsonl.path);
      out.public_pool.provenance = Provenance::public_data;
      for (auto& r : read_dataset_jsonl(d.jsonl.public_path)) out.public_pool.examples.push_back(std::move(r.example));
      std::vector<std::string> classes = d.jsonl.classes;
      if (classes.empty()) {
        std::set<std::string> labels;
        for (const auto& ex : out.public_pool.examples) labels.insert(ex.label);
        classes.assign(labels.begin(), labels.end());
      }
      out.task.schema = LabelSchema(classes);
      for (const auto& s : silos) s.validate(out.task);
      out.numeric = !silos.front().train(d.task).empty() && !silos.front().train(d.task).front().is_text();
      out.silos = std::move(silos);
      break;
    }
  }
  return out;
}

ReferenceFm build_backend(const BackendConfig& backend, const PreparedData& data, std::uint64_t seed) {
  HashingEncoder encoder(backend.embedding_dim, derive_seed(seed, {kEncoder}));
  if (data.task.kind() == TaskKind::next_word)
    return ReferenceFm(encoder, std::nullopt, fit_bigram_lm(data.public_pool), backend.scorer.lambda);
  return ReferenceFm(encoder, fit_frozen_scorer(data.public_pool, data.task.schema, backend.scorer));
}

RunRecord run_scenario(const RunConfig& config, const ScenarioConfig& sc, std::uint64_t seed) {
  RunRecord rec;
  rec.scenario = sc.name;
  rec.kind = sc.kind;
  rec.seed = seed;
  rec.run_id = config.name + "/" + sc.name + "/seed_" + std::to_string(seed);
  rec.unimplemented_flags = sc.unimplemented_flags;
  try {
    if (sc.kind == ScenarioKind::cost_table) {
      auto inputs = sc.cost;
      inputs.network = config.network;
      inputs.tasks_supported = config.tasks_supported;
      rec.cost_report = evaluate_cost_model(inputs);
      return rec;
    }
    const auto data = prepare_data(config.data_for(sc), seed);
    const std::uint64_t salt = hash_string(sc.name);
    if (sc.kind == ScenarioKind::fl || sc.kind == ScenarioKind::local_only)
      run_training(config, sc, data, seed, salt, rec);
    else
      run_icl(config, sc, data, seed, rec);

    std::set<std::string> ids;
    for (const auto& s : data.silos) ids.insert(s.id());
    rec.secrecy = perfect_secrecy(rec.ledger, ids);
    rec.task_exposed = task_privacy_exposure(rec.ledger, {data.task.id});
  } catch (const ScenarioError&) {
    throw;
  } catch (const std::exception& e) {
    throw ScenarioError(sc.name, seed, e.what());
  }
  return rec;
}

std::vector<RunRecord> run_all(const RunConfig& config) {
  struct Job {
    const ScenarioConfig* scenario;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& sc : config.scenarios)
    for (auto seed : config.seeds) jobs.push_back({&sc, seed});

  std::vector<std::optional<RunRecord>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = run_scenario(config, *jobs[i].scenario, jobs[i].seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<RunRecord> out;
  out.reserve(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*results[i]));
  }
  return out;
}

PolicyComparison compare_policies(const std::vector<RunRecord>& records) {
  PolicyComparison out;
  std::map<std::string, std::size_t> row_of;
  std::map<std::uint64_t, double> zero_shot_by_seed;
  for (const auto& r : records) {
    if (!r.metrics) continue;
    if (r.kind == ScenarioKind::icl_zero_shot && !zero_shot_by_seed.count(r.seed))
      zero_shot_by_seed[r.seed] = r.metrics->macro_accuracy;
    if (r.kind != ScenarioKind::icl_kshot || !r.policy) continue;
    auto [it, inserted] = row_of.emplace(r.scenario, out.rows.size());
    if (inserted) out.rows.push_back({*r.policy, r.k, r.scenario, {}, {}, 0.0, {}});
    auto& row = out.rows[it->second];
    row.seeds.push_back(r.seed);
    row.per_seed.push_back(r.metrics->macro_accuracy);
  }
  // A k = 0 row of any policy is the zero-shot baseline (no demos, same pipeline).
  for (const auto& row : out.rows)
    if (row.k == 0)
      for (std::size_t i = 0; i < row.seeds.size(); ++i)
        zero_shot_by_seed.try_emplace(row.seeds[i], row.per_seed[i]);

  for (auto& row : out.rows) {
    row.mean = mean_of(row.per_seed);
    bool paired = true;
    for (auto s : row.seeds) paired = paired && zero_shot_by_seed.count(s);
    if (paired && !zero_shot_by_seed.empty())
      for (std::size_t i = 0; i < row.seeds.size(); ++i)
        row.delta_vs_zero_shot.push_back(row.per_seed[i] - zero_shot_by_seed[row.seeds[i]]);
  }
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const PolicyRow& a, const PolicyRow& b) {
    return std::tie(a.k, a.policy) < std::tie(b.k, b.policy);
  });

  auto find = [&](DemoPolicyKind p, std::size_t k) -> const PolicyRow* {
    for (const auto& row : out.rows)
      if (row.policy == p && row.k == k) return &row;
    return nullptr;
  };
  std::set<std::size_t> ks;
  for (const auto& row : out.rows) ks.insert(row.k);
  const std::vector<std::pair<DemoPolicyKind, DemoPolicyKind>> pairs{
      {DemoPolicyKind::user_privacy, DemoPolicyKind::no_user_privacy},
      {DemoPolicyKind::no_user_privacy, DemoPolicyKind::public_demos},
      {DemoPolicyKind::user_privacy, DemoPolicyKind::public_demos}};
  for (auto k : ks)
    for (const auto& [a, b] : pairs) {
      const auto* ra = find(a, k);
      const auto* rb = find(b, k);
      if (!ra || !rb) continue;
      std::vector<double> diffs;
      for (std::size_t i = 0; i < ra->seeds.size(); ++i)
        for (std::size_t j = 0; j < rb->seeds.size(); ++j)
          if (ra->seeds[i] == rb->seeds[j]) diffs.push_back(ra->per_seed[i] - rb->per_seed[j]);
      if (!diffs.empty())
        out.paired_deltas[to_string(a) + "-" + to_string(b) + "@" + std::to_string(k)] = mean_of(diffs);
    }
  return out;
}

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ShapeError("spearman needs paired samples");
  if (x.size() < 2) return std::nullopt;
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = mean_of(rx), my = mean_of(ry);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

EntropyAnalysis entropy_analysis(const std::vector<RunRecord>& records, std::size_t min_train) {
  EntropyAnalysis out;
  for (const auto& r : records) {
    if (!r.metrics) continue;
    for (const auto& u : r.metrics->users)
      if (u.n_train >= min_train && u.label_entropy)
        out.points.push_back({r.scenario, r.seed, u.client_id, *u.label_entropy, u.accuracy});
  }
  if (out.points.size() < 5) {
    out.warnings.push_back("insufficient data: " + std::to_string(out.points.size()) +
                           " qualifying users, need at least 5");
    return out;
  }
  std::vector<double> h, a;
  for (const auto& p : out.points) {
    h.push_back(p.entropy);
    a.push_back(p.accuracy);
  }
  out.spearman = spearman(h, a);
  if (!out.spearman) out.warnings.push_back("correlation undefined: zero variance");
  return out;
}

ordered_json to_json(const EvalMetrics& m) {
  ordered_json j;
  j["macro_accuracy"] = m.macro_accuracy;
  j["micro_accuracy"] = m.micro_accuracy;
  j["users_evaluated"] = m.users.size();
  j["abstentions"] = m.abstentions;
  j["excluded_users"] = m.excluded;
  ordered_json classes = ordered_json::array();
  for (const auto& c : m.classes)
    classes.push_back({{"class", c.name},
                       {"accuracy", num_or_null(c.accuracy)},
                       {"correct", c.correct},
                       {"support", c.support}});
  j["per_class"] = classes;
  ordered_json users = ordered_json::array();
  for (const auto& u : m.users)
    users.push_back({{"client_id", u.client_id},
                     {"n_train", u.n_train},
                     {"label_entropy", u.label_entropy ? ordered_json(*u.label_entropy) : ordered_json(nullptr)},
                     {"correct", u.correct},
                     {"total", u.total},
                     {"accuracy", u.accuracy}});
  j["per_user"] = users;
  j["confusion"] = m.confusion;
  return j;
}

ordered_json run_metrics_json(const RunRecord& r) {
  ordered_json j;
  j["run_id"] = r.run_id;
  j["scenario"] = r.scenario;
  j["kind"] = to_string(r.kind);
  j["seed"] = r.seed;
  if (r.policy) {
    j["policy"] = to_string(*r.policy);
    j["k"] = r.k;
    j["fm_calls"] = r.fm_calls;
  }
  if (r.metrics) j["metrics"] = to_json(*r.metrics);
  if (!r.rounds.empty()) {
    j["rounds"] = r.rounds.size();
    j["final_round_loss"] = r.rounds.back().loss;
  }
  if (r.cost_report) {
    j["cost_model"] = to_json(*r.cost_report);
  } else {
    ordered_json witnesses = ordered_json::array();
    for (const auto& w : r.secrecy.witnesses) witnesses.push_back(ordered_json::parse(w.to_jsonl()));
    j["perfect_secrecy"] = {{"holds", r.secrecy.holds},
                            {"witness_count", r.secrecy.witnesses.size()},
                            {"witnesses", witnesses}};
    j["task_exposed"] = r.task_exposed;
    j["ledger_events"] = r.ledger.size();
  }
  j["unimplemented_flags"] = r.unimplemented_flags;
  return j;
}

std::string per_user_csv(const RunRecord& r) {
  std::ostringstream out;
  out << "client_id,n_train,label_entropy,accuracy,policy,k\n";
  if (!r.metrics) return out.str();
  const std::string policy = r.policy ? to_string(*r.policy) : "";
  const std::string k = r.policy ? std::to_string(r.k) : "";
  for (const auto& u : r.metrics->users)
    out << u.client_id << ',' << u.n_train << ','
        << (u.label_entropy ? num(*u.label_entropy) : std::string()) << ',' << num(u.accuracy) << ','
        << policy << ',' << k << '\n';
  return out.str();
}

std::string per_class_csv(const RunRecord& r) {
  std::ostringstream out;
  out << "class,accuracy,support\n";
  if (!r.metrics) return out.str();
  for (const auto& c : r.metrics->classes) out << c.name << ',' << num(c.accuracy) << ',' << c.support << '\n';
  return out.str();
}

std::string rounds_csv(const RunRecord& r) {
  std::ostringstream out;
  out << "round,clients,loss,bytes_up,bytes_down,flops\n";
  for (const auto& s : r.rounds) {
    std::string clients;
    for (const auto& c : s.clients) clients += (clients.empty() ? "" : ";") + c;
    out << s.round << ',' << clients << ',' << num(s.loss) << ',' << num(s.bytes_up) << ','
        << num(s.bytes_down) << ',' << num(s.flops) << '\n';
  }
  return out.str();
}

ordered_json summary_json(const RunConfig& config, const std::vector<RunRecord>& records) {
  ordered_json j;
  j["name"] = config.name;
  j["seeds"] = config.seeds;
  ordered_json scenarios = ordered_json::array();
  for (const auto& sc : config.scenarios) {
    ordered_json s;
    s["name"] = sc.name;
    s["kind"] = to_string(sc.kind);
    std::vector<double> macro, micro;
    ordered_json per_seed = ordered_json::array();
    std::vector<RunRecord> mine;
    for (const auto& r : records) {
      if (r.scenario != sc.name) continue;
      mine.push_back(r);
      ordered_json row{{"seed", r.seed}};
      if (r.metrics) {
        row["macro_accuracy"] = r.metrics->macro_accuracy;
        row["micro_accuracy"] = r.metrics->micro_accuracy;
        macro.push_back(r.metrics->macro_accuracy);
        micro.push_back(r.metrics->micro_accuracy);
      }
      if (!r.cost_report) {
        row["perfect_secrecy"] = r.secrecy.holds;
        row["witness_count"] = r.secrecy.witnesses.size();
        row["ledger_events"] = r.ledger.size();
      }
      per_seed.push_back(row);
    }
    s["per_seed"] = per_seed;
    if (!macro.empty()) {
      s["mean_macro_accuracy"] = mean_of(macro);
      s["mean_micro_accuracy"] = mean_of(micro);
      const auto ea = entropy_analysis(mine);
      s["entropy_analysis"] = {{"qualifying_users", ea.points.size()},
                               {"spearman", ea.spearman ? ordered_json(*ea.spearman) : ordered_json(nullptr)},
                               {"warnings", ea.warnings}};
    }
    scenarios.push_back(s);
  }
  j["scenarios"] = scenarios;

  const auto cmp = compare_policies(records);
  if (!cmp.rows.empty()) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : cmp.rows)
      rows.push_back({{"policy", to_string(row.policy)},
                      {"k", row.k},
                      {"scenario", row.scenario},
                      {"seeds", row.seeds},
                      {"macro_accuracy", row.per_seed},
                      {"mean", row.mean},
                      {"delta_vs_zero_shot", row.delta_vs_zero_shot}});
    j["policy_comparison"] = {{"rows", rows}, {"paired_deltas", cmp.paired_deltas}};
  }
  return j;
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void emit_reports(const RunConfig& config, const std::vector<RunRecord>& records,
                  const std::string& outdir) {
  const std::string started = utc_now();
  const fs::path root(outdir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + outdir + ": " + ec.message());

  for (const auto& r : records) {
    const auto dir = root / "scenarios" / r.scenario / ("seed_" + std::to_string(r.seed));
    write_file(dir / "metrics.json", run_metrics_json(r).dump(2) + "\n");
    write_file(dir / "ledger.jsonl", ledger_to_jsonl(r.ledger));
    write_file(dir / "cost.json",
               (r.cost_report ? to_json(*r.cost_report) : to_json(r.tally)).dump(2) + "\n");
    if (r.metrics) {
      write_file(dir / "per_user.csv", per_user_csv(r));
      write_file(dir / "per_class.csv", per_class_csv(r));
    }
    if (r.kind == ScenarioKind::fl) write_file(dir / "rounds.csv", rounds_csv(r));
  }

  write_file(root / "metrics.json", summary_json(config, records).dump(2) + "\n");

  std::ostringstream violin, scatter, policy;
  violin << "scenario,seed,client_id,accuracy\n";
  scatter << "scenario,seed,client_id,label_entropy,accuracy\n";
  for (const auto& r : records) {
    if (!r.metrics) continue;
    for (const auto& u : r.metrics->users) violin << r.scenario << ',' << r.seed << ',' << u.client_id << ',' << num(u.accuracy) << '\n';
  }
  for (const auto& sc : config.scenarios) {
    std::vector<RunRecord> mine;
    for (const auto& r : records)
      if (r.scenario == sc.name) mine.push_back(r);
    for (const auto& p : entropy_analysis(mine).points)
      scatter << p.scenario << ',' << p.seed << ',' << p.client_id << ',' << num(p.entropy) << ','
              << num(p.accuracy) << '\n';
  }
  policy << "policy,k,scenario,seed,macro_accuracy,delta_vs_zero_shot\n";
  for (const auto& row : compare_policies(records).rows)
    for (std::size_t i = 0; i < row.seeds.size(); ++i)
      policy << to_string(row.policy) << ',' << row.k << ',' << row.scenario << ',' << row.seeds[i]
             << ',' << num(row.per_seed[i]) << ','
             << (i < row.delta_vs_zero_shot.size() ? num(row.delta_vs_zero_shot[i]) : std::string())
             << '\n';
  write_file(root / "plotdata" / "violin.csv", violin.str());
  write_file(root / "plotdata" / "entropy_scatter.csv", scatter.str());
  write_file(root / "plotdata" / "policy_comparison.csv", policy.str());

  ordered_json meta;
  meta["config"] = to_json(config);
  meta["reports_started_utc"] = started;
  meta["reports_finished_utc"] = utc_now();
  meta["runs"] = records.size();
  write_file(root / "meta.json", meta.dump(2) + "\n");
}

std::string render_report(const std::string& run_dir) {
  const fs::path path = fs::path(run_dir) / "metrics.json";
  std::ifstream in(path);
  if (!in) throw IoError("no metrics.json in " + run_dir);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const std::exception& e) {
    throw IoError("unreadable " + path.string() + ": " + e.what());
  }
  std::ostringstream out;
  out << "run: " << j.value("name", std::string("?")) << "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %-26s %10s %10s  %s\n", "scenario", "kind", "macro", "micro",
                "secrecy");
  out << line;
  for (const auto& s : j.at("scenarios")) {
    std::string secrecy = "-";
    for (const auto& row : s.at("per_seed"))
      if (row.contains("perfect_secrecy")) {
        const bool holds = row.at("perfect_secrecy").get<bool>();
        if (secrecy == "-" || !holds) secrecy = holds ? "holds" : "violated";
      }
    auto fmt = [&](const char* key) {
      return s.contains(key) ? num(s.at(key).get<double>()) : std::string("-");
    };
    std::snprintf(line, sizeof line, "%-28s %-26s %10s %10s  %s\n",
                  s.at("name").get<std::string>().c_str(), s.at("kind").get<std::string>().c_str(),
                  fmt("mean_macro_accuracy").substr(0, 10).c_str(),
                  fmt("mean_micro_accuracy").substr(0, 10).c_str(), secrecy.c_str());
    out << line;
  }
  if (j.contains("policy_comparison")) {
    out << "\npolicy comparison (mean macro accuracy)\n";
    for (const auto& row : j["policy_comparison"]["rows"]) {
      std::snprintf(line, sizeof line, "  %-16s k=%-3zu %.4f\n",
                    row.at("policy").get<std::string>().c_str(), row.at("k").get<std::size_t>(),
                    row.at("mean").get<double>());
      out << line;
    }
  }
  return out.str();
}

}  // namespace focus
