#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "focus/domain.hpp"
#include "json.hpp"

namespace focus {

using Distribution = std::vector<double>;
using Embedding = std::vector<double>;

struct Demonstration {
  std::string input;
  std::string label;
  std::string source_client;  // empty for public demonstrations

  bool operator==(const Demonstration&) const = default;
};

/// What the frozen model is conditioned on besides the input itself.
struct Context {
  std::string description;
  std::vector<Demonstration> demos;
};

/// Stable lookup key for a context: description, then one "Input/Label" pair per demo.
std::string context_key(const Context& context);

/// 0 when either vector is all zeros.
double cosine(std::span<const double> a, std::span<const double> b);
Distribution softmax(std::span<const double> logits, double temperature = 1.0);
/// First index of the maximum, so ties go to the earliest entry.
std::size_t argmax(std::span<const double> values);

/// Seeded-hash bag of words: token counts hashed into `dim` buckets, then L2-normalized.
class HashingEncoder {
 public:
  explicit HashingEncoder(std::size_t dim = 256, std::uint64_t seed = 0);

  Embedding encode(std::string_view text) const;
  Embedding encode_tokens(std::span<const std::string> tokens) const;
  std::size_t bucket(std::string_view token) const;

  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// The frozen model contract. No capability mutates the model.
class FoundationModel {
 public:
  virtual ~FoundationModel() = default;

  virtual Embedding encode(std::string_view text) const = 0;

  /// Probability distribution over `classes` (a schema or a subset of it).
  virtual Distribution class_scores(const Context& context, std::string_view input,
                                    std::span<const std::string> classes) const = 0;

  /// Distribution over vocabulary().
  virtual Distribution next_token_dist(const Context& context, std::string_view prefix) const = 0;
  virtual const std::vector<std::string>& vocabulary() const = 0;

  /// Text the model would emit as its answer. Default: name of the top-scoring class.
  virtual std::string generate(const Context& context, std::string_view input,
                               std::span<const std::string> classes) const;

  /// Text that represents a class for similarity search. Default: name plus task description.
  virtual std::string class_text(std::string_view class_name, std::string_view description) const;

  virtual ModelSpec spec() const = 0;
};

struct ScorerParams {
  double smoothing = 1.0;
  std::size_t prototype_tokens = 32;
  double lambda = 0.5;       // weight of the frozen prior against demonstration similarity
  double temperature = 1.0;  // softmax temperature of the prior

  bool operator==(const ScorerParams&) const = default;
};

/// Class knowledge fit once on public data and then read-only: a per-class token
/// log-odds table, the class prior, and each class's highest log-odds tokens.
class FrozenScorer {
 public:
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  /// log_odds()[c][v]: log P(v | c) - log P(v | not c), add-smoothed.
  const std::vector<std::vector<double>>& log_odds() const { return log_odds_; }
  const std::vector<double>& prior() const { return prior_; }
  const std::vector<std::vector<std::string>>& prototypes() const { return prototypes_; }
  const ScorerParams& params() const { return params_; }

  std::optional<std::size_t> class_index(std::string_view name) const;
  double parameter_count() const;

  nlohmann::ordered_json to_json() const;
  static FrozenScorer from_json(const nlohmann::ordered_json& j);

  bool operator==(const FrozenScorer&) const = default;

 private:
  friend FrozenScorer fit_frozen_scorer(const Pool&, const LabelSchema&, const ScorerParams&);

  std::vector<std::string> classes_;
  std::vector<std::string> vocabulary_;
  std::vector<std::vector<double>> log_odds_;
  std::vector<double> prior_;
  std::vector<std::vector<std::string>> prototypes_;
  ScorerParams params_;
};

/// Throws PrivacyViolation for private pools and CannotFit for empty ones.
FrozenScorer fit_frozen_scorer(const Pool& public_pool, const LabelSchema& schema,
                               const ScorerParams& params);

/// Add-one bigram model with backoff to the add-one unigram for unseen contexts.
class BigramLm {
 public:
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  Distribution next_token_dist(std::string_view prefix) const;
  Distribution unigram_dist() const;
  double parameter_count() const;

  nlohmann::ordered_json to_json() const;
  static BigramLm from_json(const nlohmann::ordered_json& j);

  bool operator==(const BigramLm&) const = default;

 private:
  friend BigramLm fit_bigram_lm(const Pool&);
  friend BigramLm fit_bigram_on(const std::vector<std::vector<std::string>>&,
                                std::vector<std::string>);

  std::vector<std::string> vocabulary_;
  std::vector<double> unigram_;
  std::vector<double> context_totals_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> bigrams_;
  double total_tokens_ = 0.0;
};

/// Each example contributes tokenize(input) followed by its label.
BigramLm fit_bigram_lm(const Pool& public_pool);
/// Fits on token sequences over a fixed vocabulary; out-of-vocabulary tokens are dropped.
BigramLm fit_bigram_on(const std::vector<std::vector<std::string>>& sequences,
                       std::vector<std::string> vocabulary);

/// Desk-scale stand-in for a frozen foundation model.
///
/// class_scores mixes two terms. The prior is a softmax over classes of
/// cos(encode(input), encode(class_text)) / temperature + log prior, where
/// class_text is the class name, the task description, and the class's
/// prototype tokens. The demonstration term is a softmax over classes of the
/// best cosine between the input and that class's demos (-1 for classes
/// without demos). p = lambda * prior + (1 - lambda) * demo, renormalized;
/// without applicable demos p is the prior.
class ReferenceFm : public FoundationModel {
 public:
  ReferenceFm(HashingEncoder encoder, std::optional<FrozenScorer> scorer,
              std::optional<BigramLm> lm = std::nullopt, double lm_lambda = 0.5);

  Embedding encode(std::string_view text) const override;
  Distribution class_scores(const Context& context, std::string_view input,
                            std::span<const std::string> classes) const override;
  Distribution next_token_dist(const Context& context, std::string_view prefix) const override;
  const std::vector<std::string>& vocabulary() const override;
  std::string class_text(std::string_view class_name, std::string_view description) const override;
  ModelSpec spec() const override;

  Distribution prior_scores(std::string_view description, std::string_view input,
                            std::span<const std::string> classes) const;
  Distribution demo_similarity_scores(std::string_view input, std::span<const Demonstration> demos,
                                      std::span<const std::string> classes) const;

  const HashingEncoder& encoder() const { return encoder_; }
  const std::optional<FrozenScorer>& scorer() const { return scorer_; }
  const std::optional<BigramLm>& lm() const { return lm_; }
  /// The scorer's lambda, or `lm_lambda` for a language-model-only backend.
  double lambda() const;

  /// Versioned JSON blob; see README for the layout.
  std::string serialize() const;
  static ReferenceFm deserialize(const std::string& blob);

 private:
  HashingEncoder encoder_;
  std::optional<FrozenScorer> scorer_;
  std::optional<BigramLm> lm_;
  double lm_lambda_ = 0.5;  // demo weight for next-token scoring when there is no scorer
};

/// Scripted test double. Outputs are keyed by (context_key, input); the context
/// "*" matches any context. Unscripted keys fall back to the configured default.
class MockFm : public FoundationModel {
 public:
  struct Entry {
    std::string context;
    std::string input;
    std::optional<Distribution> scores;
    std::optional<std::string> generation;
  };

  MockFm() = default;

  void add(Entry entry);
  /// Empty default means uniform over the requested classes.
  void set_default_scores(Distribution scores) { default_scores_ = std::move(scores); }
  void set_default_generation(std::string text) { default_generation_ = std::move(text); }
  void set_vocabulary(std::vector<std::string> vocab) { vocabulary_ = std::move(vocab); }
  void set_spec(ModelSpec spec) { spec_ = spec; }

  Embedding encode(std::string_view text) const override;
  Distribution class_scores(const Context& context, std::string_view input,
                            std::span<const std::string> classes) const override;
  Distribution next_token_dist(const Context& context, std::string_view prefix) const override;
  const std::vector<std::string>& vocabulary() const override { return vocabulary_; }
  std::string generate(const Context& context, std::string_view input,
                       std::span<const std::string> classes) const override;
  ModelSpec spec() const override { return spec_; }

 private:
  const Entry* find(const Context& context, std::string_view input) const;

  HashingEncoder encoder_;
  std::map<std::pair<std::string, std::string>, Entry> entries_;
  Distribution default_scores_;
  std::optional<std::string> default_generation_;
  std::vector<std::string> vocabulary_;
  ModelSpec spec_{1.0, 4.0, 1.0};
};

/// Script layout:
/// {"default": {"scores": "uniform" | [..], "generation": ".."},
///  "vocabulary": [..],
///  "entries": [{"context": "..", "input": "..", "scores": [..], "generation": ".."}]}
MockFm mock_fm(const nlohmann::json& script);

}  // namespace focus
