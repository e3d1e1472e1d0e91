#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "focus/domain.hpp"
#include "focus/fm.hpp"
#include "focus/ledger.hpp"

namespace focus {

/// Prompt layout. `format` holds {description}, {demonstrations} and {input}
/// exactly once each; every demonstration renders through `demo_format`
/// ({x} and {y}).
struct ContextTemplate {
  std::string format = "{description}\n{demonstrations}Input: {input}\nLabel:";
  std::string demo_format = "Input: {x}\nLabel: {y}\n";

  void validate() const;
  bool operator==(const ContextTemplate&) const = default;
};

std::string assemble_context(const ContextTemplate& tmpl, std::string_view description,
                             std::span<const Demonstration> demos, std::string_view input);

enum class DemoPolicyKind { user_privacy, no_user_privacy, public_demos };

std::string to_string(DemoPolicyKind kind);
DemoPolicyKind parse_demo_policy(const std::string& s);

struct DemoPolicy {
  DemoPolicyKind kind = DemoPolicyKind::user_privacy;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::vector<Demonstration> public_demos;  // the fixed list, public policy only
  bool reads_task_revealing = true;         // cross-silo reads imply a shared schema

  void validate() const;
};

/// Every silo's training examples for one task, tagged with their owner.
class AggregatePool {
 public:
  struct Entry {
    std::string owner;
    LabeledExample example;
  };

  static AggregatePool from_silos(std::span<const ClientSilo> silos, const std::string& task_id);
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

/// Picks the demonstrations for one user.
///
/// user_privacy:    seeded sample of min(k, n_i) from the user's own training data.
/// no_user_privacy: seeded sample of min(k, n_i) from other users' pooled data;
///                  every demo read from another silo is recorded in the ledger.
/// public_demos:    the first min(k, |list|) entries of the fixed public list.
///
/// Selection is a seeded shuffle followed by a prefix, so a larger k keeps the
/// smaller k's demos. `step` salts the shuffle for per-example resampling.
std::vector<Demonstration> select_demonstrations(const DemoPolicy& policy, const ClientSilo& silo,
                                                 const AggregatePool* pool, const Task& task,
                                                 FlowLedger& ledger,
                                                 const std::string& run_id = "run",
                                                 std::uint64_t step = 0);

/// Bi-encoder classification: argmax of cos(encode(input), encode(class_text)).
/// Returns nullopt (abstain) when the input embeds to the zero vector.
std::optional<std::size_t> similarity_classify(const FoundationModel& fm, std::string_view input,
                                               std::span<const std::string> classes,
                                               std::string_view description);

/// Longest class name that is a case-insensitive token prefix of `generation`.
std::optional<std::size_t> map_generation_to_class(std::string_view generation,
                                                   std::span<const std::string> classes);

/// Generates an answer and maps it back onto the schema; nullopt means abstain.
std::optional<std::size_t> prompt_classify(const FoundationModel& fm, const Context& context,
                                           std::string_view input,
                                           std::span<const std::string> classes);

/// Counts calls and prompt tokens on the way to another model.
class CountingFm : public FoundationModel {
 public:
  CountingFm(const FoundationModel& inner, ContextTemplate tmpl = {});

  Embedding encode(std::string_view text) const override { return inner_.encode(text); }
  Distribution class_scores(const Context& context, std::string_view input,
                            std::span<const std::string> classes) const override;
  Distribution next_token_dist(const Context& context, std::string_view prefix) const override;
  const std::vector<std::string>& vocabulary() const override { return inner_.vocabulary(); }
  std::string generate(const Context& context, std::string_view input,
                       std::span<const std::string> classes) const override;
  std::string class_text(std::string_view name, std::string_view description) const override {
    return inner_.class_text(name, description);
  }
  ModelSpec spec() const override { return inner_.spec(); }

  std::uint64_t calls() const { return calls_.load(); }
  std::uint64_t prompt_tokens() const { return tokens_.load(); }

 private:
  void count(const Context& context, std::string_view input) const;

  const FoundationModel& inner_;
  ContextTemplate template_;
  mutable std::atomic<std::uint64_t> calls_{0};
  mutable std::atomic<std::uint64_t> tokens_{0};
};

struct UserMetrics {
  std::string client_id;
  std::size_t n_train = 0;
  std::optional<double> label_entropy;  // absent when n_train = 0
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;
};

struct ClassMetrics {
  std::string name;
  std::size_t correct = 0;
  std::size_t support = 0;
  double accuracy = 0.0;  // NaN when support = 0
};

struct EvalMetrics {
  std::vector<UserMetrics> users;
  std::vector<ClassMetrics> classes;
  double macro_accuracy = 0.0;  // mean of per-user accuracies
  double micro_accuracy = 0.0;  // pooled over all test examples
  std::size_t abstentions = 0;
  std::vector<std::string> excluded;  // users without test data
  /// confusion[gold][pred]; the last column counts abstentions.
  std::vector<std::vector<std::size_t>> confusion;
};

/// Accumulates predictions user by user. Abstentions count as incorrect.
class MetricsBuilder {
 public:
  explicit MetricsBuilder(const LabelSchema& schema);

  void begin_user(const std::string& client_id, const Dataset& train);
  void record(std::size_t gold, std::optional<std::size_t> predicted);
  void end_user();
  void exclude(const std::string& client_id);
  EvalMetrics finish();

 private:
  const LabelSchema& schema_;
  EvalMetrics metrics_;
  std::optional<UserMetrics> current_;
};

using Predictor = std::function<std::optional<std::size_t>(const Context&, std::string_view)>;

Predictor make_prompt_predictor(const FoundationModel& fm, const Task& task);
Predictor make_similarity_predictor(const FoundationModel& fm, const Task& task);
/// Top-1 next token mapped onto the task's vocabulary schema.
Predictor make_next_token_predictor(const FoundationModel& fm, const Task& task);

struct EvalOptions {
  bool resample_per_example = false;
  std::string run_id = "run";
};

/// Per-user evaluation. Demonstrations are selected once per user unless
/// `resample_per_example` is set. Users with an empty test split are excluded.
EvalMetrics evaluate_clients(std::span<const ClientSilo> silos, const Task& task,
                             const DemoPolicy& policy, const Predictor& predict,
                             FlowLedger& ledger, const EvalOptions& options = {});

}  // namespace focus
