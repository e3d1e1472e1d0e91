#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "focus/domain.hpp"

namespace focus {

enum class PartitionMode { iid, dirichlet };

/// Relative client sizes. `fixed` gives equal shares; `lognormal` draws shares
/// from a log-normal with the given mean and standard deviation (linear scale).
struct SizeDistribution {
  enum class Kind { fixed, lognormal };
  Kind kind = Kind::fixed;
  double mean = 0.0;
  double stddev = 0.0;

  bool operator==(const SizeDistribution&) const = default;
};

struct PartitionSpec {
  std::size_t num_clients = 1;
  PartitionMode mode = PartitionMode::iid;
  double alpha = 1.0;  // dirichlet concentration
  SizeDistribution sizes;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Client ids are zero-padded so lexicographic order equals numeric order.
std::string client_id(std::size_t index, std::size_t num_clients);

/// Shard sizes summing to `total`, each >= 1.
std::vector<std::size_t> allocate_shard_sizes(std::size_t total, const PartitionSpec& spec);

/// Seeded uniform shuffle into disjoint shards covering the dataset. Shard
/// contents land in each silo's train split for `task_id`.
std::vector<ClientSilo> partition_iid(const Dataset& dataset, const PartitionSpec& spec,
                                      const std::string& task_id);

/// Label-skewed shards: client i fills its slots from class proportions
/// q_i ~ Dirichlet(alpha), restricted to classes with examples left.
std::vector<ClientSilo> partition_dirichlet(const Dataset& dataset, const LabelSchema& schema,
                                            const PartitionSpec& spec, const std::string& task_id);

std::vector<ClientSilo> partition(const Dataset& dataset, const LabelSchema& schema,
                                  const PartitionSpec& spec, const std::string& task_id);

/// Moves everything after the first `train_per_client` (seeded order) of each
/// silo's train split into its test split.
std::vector<ClientSilo> split_train_test(const std::vector<ClientSilo>& silos,
                                         const std::string& task_id, std::size_t train_per_client,
                                         std::uint64_t seed);

struct VocabOverlap {
  std::size_t class_a = 0;
  std::size_t class_b = 0;
  double fraction = 0.0;  // share of class_b's vocabulary copied from class_a

  bool operator==(const VocabOverlap&) const = default;
};

struct SynthCorpusSpec {
  std::vector<std::string> class_names;  // defines num_classes
  std::size_t vocab_per_class = 30;
  std::size_t shared_vocab = 60;
  std::size_t docs_per_class = 200;
  std::size_t doc_len = 24;
  double class_purity = 0.6;
  double public_fraction = 0.5;
  /// Class words that only occur in private documents.
  std::size_t private_vocab_per_class = 0;
  double private_token_rate = 0.0;
  std::vector<VocabOverlap> overlaps;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthCorpus {
  LabelSchema schema;
  Pool public_pool;   // for fitting frozen backends
  Pool private_pool;  // for partitioning into silos
};

SynthCorpus synth_classification_corpus(const SynthCorpusSpec& spec);

/// Default class names "class0".."classN-1".
std::vector<std::string> default_class_names(std::size_t n);

struct BlobsSpec {
  std::size_t num_classes = 2;
  std::size_t dim = 8;
  std::size_t points_per_class = 200;
  double separation = 6.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Gaussian blobs with class means at separation * e_c (dim >= num_classes).
SynthCorpus synth_gaussian_blobs(const BlobsSpec& spec);

struct NextWordSpec {
  std::size_t vocab = 20;
  std::size_t num_users = 10;
  double style_skew = 0.5;
  std::size_t sentences_per_user = 40;
  std::size_t public_sentences = 400;
  std::size_t sentence_len = 8;
  double row_concentration = 0.3;
  std::uint64_t seed = 0;

  void validate() const;
};

using TransitionTable = std::vector<std::vector<double>>;

/// (1 - skew) * global + skew * user, row-wise.
TransitionTable mix_transitions(const TransitionTable& global, const TransitionTable& user,
                                double style_skew);

struct NextWordCorpus {
  std::vector<std::string> vocabulary;
  TransitionTable global_transitions;
  std::vector<TransitionTable> user_transitions;
  std::vector<std::vector<std::string>> user_sentences;  // space-joined tokens
  Pool public_pool;                                       // sentences from the global table
  std::vector<Dataset> user_datasets;  // input = all but last token, label = last token
};

NextWordCorpus synth_next_word_corpus(const NextWordSpec& spec);

}  // namespace focus
