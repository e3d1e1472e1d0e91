#include "focus/partitioner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "focus/random.hpp"

namespace focus {

namespace {

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::vector<ClientSilo> make_silos(const Dataset& dataset,
                                   const std::vector<std::vector<std::size_t>>& shards,
                                   std::size_t num_clients, const std::string& task_id) {
  std::vector<ClientSilo> silos;
  silos.reserve(shards.size());
  for (std::size_t c = 0; c < shards.size(); ++c) {
    TaskData data;
    data.train.reserve(shards[c].size());
    for (auto idx : shards[c]) data.train.push_back(dataset[idx]);
    silos.emplace_back(client_id(c, num_clients),
                       std::map<std::string, TaskData>{{task_id, std::move(data)}});
  }
  return silos;
}

}  // namespace

void PartitionSpec::validate() const {
  if (num_clients < 1) throw InfeasiblePartition("num_clients must be >= 1");
  if (mode == PartitionMode::dirichlet && !(alpha > 0.0))
    throw InfeasiblePartition("dirichlet concentration must be > 0");
  if (sizes.kind == SizeDistribution::Kind::lognormal && (!(sizes.mean > 0.0) || sizes.stddev < 0.0))
    throw InfeasiblePartition("log-normal sizes need mean > 0 and stddev >= 0");
}

std::string client_id(std::size_t index, std::size_t num_clients) {
  std::size_t width = std::to_string(num_clients > 0 ? num_clients - 1 : 0).size();
  width = std::max<std::size_t>(width, 3);
  std::string digits = std::to_string(index);
  return "client-" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

std::vector<std::size_t> allocate_shard_sizes(std::size_t total, const PartitionSpec& spec) {
  spec.validate();
  const std::size_t n = spec.num_clients;
  if (total < n)
    throw InfeasiblePartition("dataset of " + std::to_string(total) + " examples cannot fill " +
                              std::to_string(n) + " clients");
  std::vector<double> weights(n, 1.0);
  if (spec.sizes.kind == SizeDistribution::Kind::lognormal) {
    const double m = spec.sizes.mean;
    const double s = spec.sizes.stddev;
    const double sigma2 = std::log1p((s * s) / (m * m));
    const double mu = std::log(m) - 0.5 * sigma2;
    Rng rng(derive_seed(spec.seed, {0x517E5ull}));
    std::lognormal_distribution<double> dist(mu, std::sqrt(sigma2));
    for (auto& w : weights) w = dist(rng);
  }
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  const std::size_t extra = total - n;
  std::vector<std::size_t> sizes(n, 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double share = static_cast<double>(extra) * weights[i] / wsum;
    auto whole = static_cast<std::size_t>(std::floor(share));
    sizes[i] += whole;
    assigned += whole;
    remainders.emplace_back(share - static_cast<double>(whole), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t r = 0; assigned < extra; ++r, ++assigned) ++sizes[remainders[r % n].second];
  return sizes;
}

std::vector<ClientSilo> partition_iid(const Dataset& dataset, const PartitionSpec& spec,
                                      const std::string& task_id) {
  auto sizes = allocate_shard_sizes(dataset.size(), spec);
  Rng rng(derive_seed(spec.seed, {0x11Dull}));
  auto order = shuffled_indices(dataset.size(), rng);
  std::vector<std::vector<std::size_t>> shards(spec.num_clients);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < spec.num_clients; ++c) {
    shards[c].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                     order.begin() + static_cast<std::ptrdiff_t>(pos + sizes[c]));
    pos += sizes[c];
  }
  return make_silos(dataset, shards, spec.num_clients, task_id);
}

std::vector<ClientSilo> partition_dirichlet(const Dataset& dataset, const LabelSchema& schema,
                                            const PartitionSpec& spec, const std::string& task_id) {
  auto sizes = allocate_shard_sizes(dataset.size(), spec);
  const std::size_t k = schema.size();
  Rng rng(derive_seed(spec.seed, {0xD141ull}));

  std::vector<std::vector<std::size_t>> by_class(k);
  for (std::size_t i = 0; i < dataset.size(); ++i)
    by_class[schema.require_index(dataset[i].label)].push_back(i);
  for (std::size_t c = 0; c < k; ++c) {
    if (by_class[c].empty())
      throw InfeasiblePartition("class '" + schema.name(c) + "' has no examples");
    shuffle_in_place(by_class[c], rng);
  }

  std::vector<std::vector<double>> proportions(spec.num_clients);
  for (auto& q : proportions) q = sample_dirichlet(rng, k, spec.alpha);

  std::vector<std::vector<std::size_t>> shards(spec.num_clients);
  std::vector<double> weights(k);
  std::vector<double> remaining(k);
  for (auto client : shuffled_indices(spec.num_clients, rng)) {
    for (std::size_t slot = 0; slot < sizes[client]; ++slot) {
      for (std::size_t c = 0; c < k; ++c) {
        remaining[c] = static_cast<double>(by_class[c].size());
        weights[c] = by_class[c].empty() ? 0.0 : proportions[client][c];
      }
      std::size_t cls = sample_weighted(rng, weights);
      if (cls == k) cls = sample_weighted(rng, remaining);
      shards[client].push_back(by_class[cls].back());
      by_class[cls].pop_back();
    }
  }
  return make_silos(dataset, shards, spec.num_clients, task_id);
}

std::vector<ClientSilo> partition(const Dataset& dataset, const LabelSchema& schema,
                                  const PartitionSpec& spec, const std::string& task_id) {
  if (spec.mode == PartitionMode::iid) return partition_iid(dataset, spec, task_id);
  return partition_dirichlet(dataset, schema, spec, task_id);
}

std::vector<ClientSilo> split_train_test(const std::vector<ClientSilo>& silos,
                                         const std::string& task_id, std::size_t train_per_client,
                                         std::uint64_t seed) {
  std::vector<ClientSilo> out;
  out.reserve(silos.size());
  for (const auto& silo : silos) {
    Dataset pool = silo.train(task_id);
    pool.insert(pool.end(), silo.test(task_id).begin(), silo.test(task_id).end());
    Rng rng(derive_seed(seed, {hash_string(silo.id()), 0x5B17ull}));
    shuffle_in_place(pool, rng);
    TaskData d;
    const std::size_t cut = std::min(train_per_client, pool.size());
    d.train.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(cut));
    d.test.assign(pool.begin() + static_cast<std::ptrdiff_t>(cut), pool.end());
    out.emplace_back(silo.id(), std::map<std::string, TaskData>{{task_id, std::move(d)}});
  }
  return out;
}

std::vector<std::string> default_class_names(std::size_t n) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < n; ++i) names.push_back("class" + std::to_string(i));
  return names;
}

void SynthCorpusSpec::validate() const {
  if (class_names.empty()) throw Error("synthetic corpus needs at least one class");
  if (!(class_purity > 0.0 && class_purity <= 1.0)) throw Error("class_purity must be in (0, 1]");
  if (vocab_per_class < 1 || docs_per_class < 1 || doc_len < 1)
    throw Error("corpus sizes must be >= 1");
  if (shared_vocab < 1 && class_purity < 1.0) throw Error("shared_vocab must be >= 1");
  if (public_fraction < 0.0 || public_fraction > 1.0) throw Error("public_fraction must be in [0, 1]");
  if (private_token_rate < 0.0 || private_token_rate > 1.0)
    throw Error("private_token_rate must be in [0, 1]");
  for (const auto& o : overlaps) {
    if (o.class_a >= class_names.size() || o.class_b >= class_names.size() || o.class_a == o.class_b)
      throw Error("vocabulary overlap names an invalid class pair");
    if (o.fraction < 0.0 || o.fraction > 1.0) throw Error("overlap fraction must be in [0, 1]");
  }
}

SynthCorpus synth_classification_corpus(const SynthCorpusSpec& spec) {
  spec.validate();
  const std::size_t k = spec.class_names.size();

  std::vector<std::string> slugs(k);
  std::vector<std::vector<std::string>> name_tokens(k);
  for (std::size_t c = 0; c < k; ++c) {
    name_tokens[c] = tokenize(spec.class_names[c]);
    auto t = name_tokens[c];
    std::string slug;
    for (std::size_t i = 0; i < t.size(); ++i) slug += (i ? "_" : "") + t[i];
    slugs[c] = slug.empty() ? "class" + std::to_string(c) : slug;
  }

  // Generated words per class; overlaps copy a prefix of class_a's words into class_b.
  std::vector<std::vector<std::string>> generated(k);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < spec.vocab_per_class; ++j)
      generated[c].push_back(slugs[c] + std::to_string(j));
  for (const auto& o : spec.overlaps) {
    auto shared = static_cast<std::size_t>(std::round(o.fraction * spec.vocab_per_class));
    for (std::size_t j = 0; j < shared; ++j) generated[o.class_b][j] = generated[o.class_a][j];
  }

  std::vector<std::vector<std::string>> class_vocab(k);
  std::vector<std::vector<std::string>> private_vocab(k);
  for (std::size_t c = 0; c < k; ++c) {
    class_vocab[c] = name_tokens[c];
    class_vocab[c].insert(class_vocab[c].end(), generated[c].begin(), generated[c].end());
    for (std::size_t j = 0; j < spec.private_vocab_per_class; ++j)
      private_vocab[c].push_back(slugs[c] + "_p" + std::to_string(j));
  }
  std::vector<std::string> shared_words;
  for (std::size_t j = 0; j < spec.shared_vocab; ++j) shared_words.push_back("s" + std::to_string(j));

  Rng rng(derive_seed(spec.seed, {0xC0A5ull}));
  SynthCorpus corpus{LabelSchema(spec.class_names), {Provenance::public_data, {}},
                     {Provenance::private_data, {}}};
  const auto num_public =
      static_cast<std::size_t>(std::round(spec.public_fraction * spec.docs_per_class));
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t d = 0; d < spec.docs_per_class; ++d) {
      const bool is_public = d < num_public;
      std::string text;
      for (std::size_t t = 0; t < spec.doc_len; ++t) {
        const std::string* word;
        if (uniform01(rng) < spec.class_purity) {
          if (!is_public && !private_vocab[c].empty() &&
              uniform01(rng) < spec.private_token_rate)
            word = &private_vocab[c][uniform_index(rng, private_vocab[c].size())];
          else
            word = &class_vocab[c][uniform_index(rng, class_vocab[c].size())];
        } else {
          word = &shared_words[uniform_index(rng, shared_words.size())];
        }
        if (t) text.push_back(' ');
        text += *word;
      }
      auto& pool = is_public ? corpus.public_pool : corpus.private_pool;
      pool.examples.push_back({text, spec.class_names[c]});
    }
  }
  shuffle_in_place(corpus.public_pool.examples, rng);
  shuffle_in_place(corpus.private_pool.examples, rng);
  return corpus;
}

SynthCorpus synth_gaussian_blobs(const BlobsSpec& spec) {
  if (spec.num_classes < 1 || spec.dim < spec.num_classes)
    throw Error("blobs need 1 <= num_classes <= dim");
  Rng rng(derive_seed(spec.seed, {0xB10Bull}));
  std::normal_distribution<double> noise(0.0, spec.noise);
  auto names = default_class_names(spec.num_classes);
  SynthCorpus corpus{LabelSchema(names), {Provenance::public_data, {}},
                     {Provenance::private_data, {}}};
  for (std::size_t c = 0; c < spec.num_classes; ++c) {
    for (std::size_t p = 0; p < spec.points_per_class; ++p) {
      std::vector<double> x(spec.dim);
      for (std::size_t j = 0; j < spec.dim; ++j)
        x[j] = (j == c ? spec.separation : 0.0) + noise(rng);
      corpus.private_pool.examples.push_back({std::move(x), names[c]});
    }
  }
  shuffle_in_place(corpus.private_pool.examples, rng);
  return corpus;
}

void NextWordSpec::validate() const {
  if (vocab < 10) throw Error("next-word corpus needs vocab >= 10");
  if (style_skew < 0.0 || style_skew > 1.0) throw Error("style_skew must be in [0, 1]");
  if (sentence_len < 2) throw Error("sentence_len must be >= 2");
  if (!(row_concentration > 0.0)) throw Error("row_concentration must be > 0");
}

TransitionTable mix_transitions(const TransitionTable& global, const TransitionTable& user,
                                double style_skew) {
  if (style_skew == 0.0) return global;
  if (style_skew == 1.0) return user;
  TransitionTable out = global;
  for (std::size_t a = 0; a < out.size(); ++a)
    for (std::size_t b = 0; b < out[a].size(); ++b)
      out[a][b] = (1.0 - style_skew) * global[a][b] + style_skew * user[a][b];
  return out;
}

NextWordCorpus synth_next_word_corpus(const NextWordSpec& spec) {
  spec.validate();
  Rng rng(derive_seed(spec.seed, {0x9E47ull}));
  NextWordCorpus corpus;
  for (std::size_t i = 0; i < spec.vocab; ++i) corpus.vocabulary.push_back("w" + std::to_string(i));

  auto random_table = [&] {
    TransitionTable t(spec.vocab);
    for (auto& row : t) row = sample_dirichlet(rng, spec.vocab, spec.row_concentration);
    return t;
  };
  corpus.global_transitions = random_table();
  for (std::size_t u = 0; u < spec.num_users; ++u) corpus.user_transitions.push_back(random_table());

  auto sample_sentence = [&](const TransitionTable& table, Rng& r) {
    std::vector<std::string> tokens;
    std::size_t cur = uniform_index(r, spec.vocab);
    tokens.push_back(corpus.vocabulary[cur]);
    for (std::size_t t = 1; t < spec.sentence_len; ++t) {
      cur = sample_weighted(r, table[cur]);
      if (cur == spec.vocab) cur = uniform_index(r, spec.vocab);
      tokens.push_back(corpus.vocabulary[cur]);
    }
    return tokens;
  };
  auto to_example = [&](const std::vector<std::string>& tokens) {
    return LabeledExample{join_tokens(tokens, 0, tokens.size() - 1), tokens.back()};
  };

  corpus.public_pool.provenance = Provenance::public_data;
  Rng public_rng(derive_seed(spec.seed, {0x9E47ull, 0xFFFFull}));
  for (std::size_t s = 0; s < spec.public_sentences; ++s)
    corpus.public_pool.examples.push_back(to_example(sample_sentence(corpus.global_transitions, public_rng)));

  for (std::size_t u = 0; u < spec.num_users; ++u) {
    auto table = mix_transitions(corpus.global_transitions, corpus.user_transitions[u], spec.style_skew);
    Rng user_rng(derive_seed(spec.seed, {0x9E47ull, u}));
    std::vector<std::string> sentences;
    Dataset data;
    for (std::size_t s = 0; s < spec.sentences_per_user; ++s) {
      auto tokens = sample_sentence(table, user_rng);
      sentences.push_back(join_tokens(tokens, 0, tokens.size()));
      data.push_back(to_example(tokens));
    }
    corpus.user_sentences.push_back(std::move(sentences));
    corpus.user_datasets.push_back(std::move(data));
  }
  return corpus;
}

}  // namespace focus
