#include "focus/icl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "focus/random.hpp"

namespace focus {

namespace {

std::size_t count_occurrences(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size()))
    ++n;
  return n;
}

void replace_once(std::string& s, const std::string& slot, std::string_view value) {
  auto pos = s.find(slot);
  if (pos != std::string::npos) s.replace(pos, slot.size(), value);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

void ContextTemplate::validate() const {
  for (const char* slot : {"{description}", "{demonstrations}", "{input}"})
    if (count_occurrences(format, slot) != 1)
      throw Error(std::string("context template must contain ") + slot + " exactly once");
}

std::string assemble_context(const ContextTemplate& tmpl, std::string_view description,
                             std::span<const Demonstration> demos, std::string_view input) {
  std::string rendered_demos;
  for (const auto& d : demos) {
    std::string line = tmpl.demo_format;
    replace_once(line, "{x}", d.input);
    replace_once(line, "{y}", d.label);
    rendered_demos += line;
  }
  // Substitute right to left by position so slot text inside values is left alone.
  std::string out = tmpl.format;
  struct Slot {
    std::size_t pos;
    std::string name;
    std::string_view value;
  };
  std::vector<Slot> slots{{out.find("{description}"), "{description}", description},
                          {out.find("{demonstrations}"), "{demonstrations}", rendered_demos},
                          {out.find("{input}"), "{input}", input}};
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.pos > b.pos; });
  for (const auto& s : slots)
    if (s.pos != std::string::npos) out.replace(s.pos, s.name.size(), s.value);
  return out;
}

std::string to_string(DemoPolicyKind kind) {
  switch (kind) {
    case DemoPolicyKind::user_privacy: return "user_privacy";
    case DemoPolicyKind::no_user_privacy: return "no_user_privacy";
    case DemoPolicyKind::public_demos: return "public";
  }
  return {};
}

DemoPolicyKind parse_demo_policy(const std::string& s) {
  if (s == "user_privacy") return DemoPolicyKind::user_privacy;
  if (s == "no_user_privacy") return DemoPolicyKind::no_user_privacy;
  if (s == "public") return DemoPolicyKind::public_demos;
  throw Error("unknown demonstration policy '" + s + "'");
}

void DemoPolicy::validate() const {
  if (kind == DemoPolicyKind::public_demos && public_demos.empty())
    throw Error("public policy requires a non-empty fixed demonstration list");
}

AggregatePool AggregatePool::from_silos(std::span<const ClientSilo> silos,
                                        const std::string& task_id) {
  AggregatePool pool;
  for (const auto& silo : silos)
    for (const auto& ex : silo.train(task_id)) pool.entries_.push_back({silo.id(), ex});
  return pool;
}

std::vector<Demonstration> select_demonstrations(const DemoPolicy& policy, const ClientSilo& silo,
                                                 const AggregatePool* pool, const Task& task,
                                                 FlowLedger& ledger, const std::string& run_id,
                                                 std::uint64_t step) {
  policy.validate();
  std::vector<Demonstration> out;
  const std::size_t n_i = silo.num_train(task.id);
  Rng rng(derive_seed(policy.seed, {hash_string(silo.id()), step, 0xDE30ull}));

  switch (policy.kind) {
    case DemoPolicyKind::user_privacy: {
      const auto& own = silo.train(task.id);
      auto order = shuffled_indices(own.size(), rng);
      for (std::size_t i = 0; i < std::min(policy.k, n_i); ++i) {
        const auto& ex = own[order[i]];
        out.push_back({ex.is_text() ? ex.text() : std::string(), ex.label, silo.id()});
      }
      break;
    }
    case DemoPolicyKind::no_user_privacy: {
      if (!pool) throw MissingPool("no_user_privacy selection needs the aggregate pool");
      // The user's own examples are left out so the demonstrations are non-personal.
      std::vector<const AggregatePool::Entry*> others;
      for (const auto& e : pool->entries())
        if (e.owner != silo.id()) others.push_back(&e);
      shuffle_in_place(others, rng);
      const std::size_t take = std::min({policy.k, n_i, others.size()});
      for (std::size_t i = 0; i < take; ++i) {
        const auto& e = *others[i];
        Demonstration d{e.example.is_text() ? e.example.text() : std::string(), e.example.label,
                        e.owner};
        ledger.append(FlowEvent(run_id, step, Endpoint::silo(e.owner), Endpoint::silo(silo.id()),
                                PayloadKind::demo_read, d.input.size() + d.label.size(), true,
                                policy.reads_task_revealing, task.id));
        out.push_back(std::move(d));
      }
      break;
    }
    case DemoPolicyKind::public_demos: {
      const std::size_t take = std::min(policy.k, policy.public_demos.size());
      out.assign(policy.public_demos.begin(),
                 policy.public_demos.begin() + static_cast<std::ptrdiff_t>(take));
      break;
    }
  }
  return out;
}

std::optional<std::size_t> similarity_classify(const FoundationModel& fm, std::string_view input,
                                               std::span<const std::string> classes,
                                               std::string_view description) {
  if (classes.empty()) throw ShapeError("similarity_classify needs at least one class");
  const auto x = fm.encode(input);
  if (std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; })) return std::nullopt;
  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double sim = cosine(x, fm.encode(fm.class_text(classes[c], description)));
    if (sim > best_sim) {
      best_sim = sim;
      best = c;
    }
  }
  return best;
}

std::optional<std::size_t> map_generation_to_class(std::string_view generation,
                                                   std::span<const std::string> classes) {
  const auto gen = tokenize(generation);
  if (gen.empty()) return std::nullopt;
  std::optional<std::size_t> best;
  std::size_t best_len = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto name = tokenize(lower(classes[c]));
    if (name.empty() || name.size() > gen.size()) continue;
    if (!std::equal(name.begin(), name.end(), gen.begin())) continue;
    if (name.size() > best_len) {
      best_len = name.size();
      best = c;
    }
  }
  return best;
}

std::optional<std::size_t> prompt_classify(const FoundationModel& fm, const Context& context,
                                           std::string_view input,
                                           std::span<const std::string> classes) {
  if (classes.empty()) throw ShapeError("prompt_classify needs a non-empty schema");
  return map_generation_to_class(fm.generate(context, input, classes), classes);
}

CountingFm::CountingFm(const FoundationModel& inner, ContextTemplate tmpl)
    : inner_(inner), template_(std::move(tmpl)) {}

void CountingFm::count(const Context& context, std::string_view input) const {
  calls_.fetch_add(1);
  tokens_.fetch_add(tokenize(assemble_context(template_, context.description, context.demos, input)).size());
}

Distribution CountingFm::class_scores(const Context& context, std::string_view input,
                                      std::span<const std::string> classes) const {
  count(context, input);
  return inner_.class_scores(context, input, classes);
}

Distribution CountingFm::next_token_dist(const Context& context, std::string_view prefix) const {
  count(context, prefix);
  return inner_.next_token_dist(context, prefix);
}

std::string CountingFm::generate(const Context& context, std::string_view input,
                                 std::span<const std::string> classes) const {
  count(context, input);
  return inner_.generate(context, input, classes);
}

MetricsBuilder::MetricsBuilder(const LabelSchema& schema) : schema_(schema) {
  metrics_.confusion.assign(schema.size(), std::vector<std::size_t>(schema.size() + 1, 0));
}

void MetricsBuilder::begin_user(const std::string& client_id, const Dataset& train) {
  UserMetrics u;
  u.client_id = client_id;
  u.n_train = train.size();
  if (!train.empty()) u.label_entropy = label_entropy(train, schema_);
  current_ = std::move(u);
}

void MetricsBuilder::record(std::size_t gold, std::optional<std::size_t> predicted) {
  if (!current_) throw Error("record() outside begin_user/end_user");
  ++current_->total;
  if (predicted && *predicted == gold) ++current_->correct;
  if (!predicted) ++metrics_.abstentions;
  ++metrics_.confusion.at(gold).at(predicted ? *predicted : schema_.size());
}

void MetricsBuilder::end_user() {
  if (!current_) return;
  if (current_->total == 0) {
    metrics_.excluded.push_back(current_->client_id);
  } else {
    current_->accuracy =
        static_cast<double>(current_->correct) / static_cast<double>(current_->total);
    metrics_.users.push_back(std::move(*current_));
  }
  current_.reset();
}

void MetricsBuilder::exclude(const std::string& client_id) { metrics_.excluded.push_back(client_id); }

EvalMetrics MetricsBuilder::finish() {
  EvalMetrics m = metrics_;
  std::size_t correct = 0, total = 0;
  double macro = 0.0;
  for (const auto& u : m.users) {
    correct += u.correct;
    total += u.total;
    macro += u.accuracy;
  }
  m.macro_accuracy = m.users.empty() ? 0.0 : macro / static_cast<double>(m.users.size());
  m.micro_accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  for (std::size_t c = 0; c < schema_.size(); ++c) {
    ClassMetrics cm;
    cm.name = schema_.name(c);
    for (auto v : m.confusion[c]) cm.support += v;
    cm.correct = m.confusion[c][c];
    cm.accuracy = cm.support == 0 ? std::numeric_limits<double>::quiet_NaN()
                                  : static_cast<double>(cm.correct) / static_cast<double>(cm.support);
    m.classes.push_back(std::move(cm));
  }
  return m;
}

Predictor make_prompt_predictor(const FoundationModel& fm, const Task& task) {
  return [&fm, classes = task.schema.classes()](const Context& ctx, std::string_view input) {
    return prompt_classify(fm, ctx, input, classes);
  };
}

Predictor make_similarity_predictor(const FoundationModel& fm, const Task& task) {
  return [&fm, classes = task.schema.classes()](const Context& ctx, std::string_view input) {
    return similarity_classify(fm, input, classes, ctx.description);
  };
}

Predictor make_next_token_predictor(const FoundationModel& fm, const Task& task) {
  return [&fm, &schema = task.schema](const Context& ctx,
                                      std::string_view prefix) -> std::optional<std::size_t> {
    auto p = fm.next_token_dist(ctx, prefix);
    if (p.empty()) return std::nullopt;
    return schema.index_of(fm.vocabulary().at(argmax(p)));
  };
}

EvalMetrics evaluate_clients(std::span<const ClientSilo> silos, const Task& task,
                             const DemoPolicy& policy, const Predictor& predict,
                             FlowLedger& ledger, const EvalOptions& options) {
  std::optional<AggregatePool> pool;
  if (policy.kind == DemoPolicyKind::no_user_privacy)
    pool = AggregatePool::from_silos(silos, task.id);
  MetricsBuilder builder(task.schema);
  std::uint64_t step = 0;
  for (const auto& silo : silos) {
    const auto& test = silo.test(task.id);
    if (test.empty()) {
      builder.exclude(silo.id());
      continue;
    }
    builder.begin_user(silo.id(), silo.train(task.id));
    Context context{task.description, {}};
    if (!options.resample_per_example)
      context.demos = select_demonstrations(policy, silo, pool ? &*pool : nullptr, task, ledger,
                                            options.run_id, step);
    for (const auto& ex : test) {
      if (options.resample_per_example)
        context.demos = select_demonstrations(policy, silo, pool ? &*pool : nullptr, task, ledger,
                                              options.run_id, step);
      ++step;
      const std::string input = ex.is_text() ? ex.text() : std::string();
      builder.record(task.schema.require_index(ex.label), predict(context, input));
    }
    builder.end_user();
  }
  return builder.finish();
}

}  // namespace focus
