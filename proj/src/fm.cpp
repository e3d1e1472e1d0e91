#include "focus/fm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "focus/random.hpp"

namespace focus {

using ojson = nlohmann::ordered_json;

std::string context_key(const Context& context) {
  std::string key = context.description;
  for (const auto& d : context.demos) key += "\nInput: " + d.input + "\nLabel: " + d.label;
  return key;
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

Distribution softmax(std::span<const double> logits, double temperature) {
  if (logits.empty()) return {};
  if (!(temperature > 0.0)) throw Error("softmax temperature must be > 0");
  const double mx = *std::max_element(logits.begin(), logits.end());
  Distribution out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) / temperature);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ShapeError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

HashingEncoder::HashingEncoder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ < 1) throw Error("embedding dimension must be >= 1");
}

std::size_t HashingEncoder::bucket(std::string_view token) const {
  return static_cast<std::size_t>(hash_string(token, seed_) % dim_);
}

Embedding HashingEncoder::encode_tokens(std::span<const std::string> tokens) const {
  Embedding v(dim_, 0.0);
  for (const auto& t : tokens) v[bucket(t)] += 1.0;
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
  }
  return v;
}

Embedding HashingEncoder::encode(std::string_view text) const {
  auto tokens = tokenize(text);
  return encode_tokens(tokens);
}

std::string FoundationModel::generate(const Context& context, std::string_view input,
                                      std::span<const std::string> classes) const {
  if (classes.empty()) return {};
  auto p = class_scores(context, input, classes);
  return classes[argmax(p)];
}

std::string FoundationModel::class_text(std::string_view class_name,
                                        std::string_view description) const {
  std::string text(class_name);
  if (!description.empty()) {
    text.push_back(' ');
    text += description;
  }
  return text;
}

// ---------------------------------------------------------------------------
// FrozenScorer

std::optional<std::size_t> FrozenScorer::class_index(std::string_view name) const {
  for (std::size_t c = 0; c < classes_.size(); ++c)
    if (classes_[c] == name) return c;
  return std::nullopt;
}

double FrozenScorer::parameter_count() const {
  return static_cast<double>(classes_.size() * vocabulary_.size() + classes_.size());
}

ojson FrozenScorer::to_json() const {
  ojson j;
  j["format"] = "focus.frozen_scorer";
  j["version"] = 1;
  j["params"] = {{"smoothing", params_.smoothing},
                 {"prototype_tokens", params_.prototype_tokens},
                 {"lambda", params_.lambda},
                 {"temperature", params_.temperature}};
  j["classes"] = classes_;
  j["vocabulary"] = vocabulary_;
  j["log_odds"] = log_odds_;
  j["prior"] = prior_;
  j["prototypes"] = prototypes_;
  return j;
}

FrozenScorer FrozenScorer::from_json(const ojson& j) {
  if (j.value("format", "") != "focus.frozen_scorer" || j.value("version", 0) != 1)
    throw IoError("not a version-1 frozen scorer blob");
  FrozenScorer s;
  const auto& p = j.at("params");
  s.params_.smoothing = p.at("smoothing").get<double>();
  s.params_.prototype_tokens = p.at("prototype_tokens").get<std::size_t>();
  s.params_.lambda = p.at("lambda").get<double>();
  s.params_.temperature = p.at("temperature").get<double>();
  s.classes_ = j.at("classes").get<std::vector<std::string>>();
  s.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
  s.log_odds_ = j.at("log_odds").get<std::vector<std::vector<double>>>();
  s.prior_ = j.at("prior").get<std::vector<double>>();
  s.prototypes_ = j.at("prototypes").get<std::vector<std::vector<std::string>>>();
  return s;
}

FrozenScorer fit_frozen_scorer(const Pool& public_pool, const LabelSchema& schema,
                               const ScorerParams& params) {
  if (public_pool.provenance != Provenance::public_data)
    throw PrivacyViolation("frozen backends may only be fit on public data");
  if (public_pool.examples.empty()) throw CannotFit("cannot fit a scorer on an empty pool");
  if (!(params.smoothing > 0.0)) throw CannotFit("smoothing must be > 0");
  if (params.lambda < 0.0 || params.lambda > 1.0) throw CannotFit("lambda must be in [0, 1]");
  if (!(params.temperature > 0.0)) throw CannotFit("temperature must be > 0");

  const std::size_t k = schema.size();
  std::set<std::string> vocab_set;
  std::vector<std::vector<std::string>> docs;
  std::vector<std::size_t> labels;
  for (const auto& ex : public_pool.examples) {
    if (!ex.is_text()) throw CannotFit("frozen scorer needs text inputs");
    labels.push_back(schema.require_index(ex.label));
    docs.push_back(tokenize(ex.text()));
    vocab_set.insert(docs.back().begin(), docs.back().end());
  }

  FrozenScorer s;
  s.params_ = params;
  s.classes_ = schema.classes();
  s.vocabulary_.assign(vocab_set.begin(), vocab_set.end());
  const std::size_t v = s.vocabulary_.size();
  std::map<std::string, std::size_t> vindex;
  for (std::size_t i = 0; i < v; ++i) vindex[s.vocabulary_[i]] = i;

  std::vector<std::vector<double>> counts(k, std::vector<double>(v, 0.0));
  std::vector<double> class_tokens(k, 0.0), class_docs(k, 0.0), token_totals(v, 0.0);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    class_docs[labels[d]] += 1.0;
    for (const auto& t : docs[d]) {
      auto i = vindex.at(t);
      counts[labels[d]][i] += 1.0;
      token_totals[i] += 1.0;
      class_tokens[labels[d]] += 1.0;
    }
  }
  const double all_tokens = std::accumulate(class_tokens.begin(), class_tokens.end(), 0.0);
  const double a = params.smoothing;
  const double vd = static_cast<double>(v);
  s.log_odds_.assign(k, std::vector<double>(v, 0.0));
  for (std::size_t c = 0; c < k; ++c) {
    const double rest_tokens = all_tokens - class_tokens[c];
    for (std::size_t i = 0; i < v; ++i) {
      const double in = (counts[c][i] + a) / (class_tokens[c] + a * vd);
      const double out = (token_totals[i] - counts[c][i] + a) / (rest_tokens + a * vd);
      s.log_odds_[c][i] = std::log(in) - std::log(out);
    }
  }
  s.prior_.resize(k);
  for (std::size_t c = 0; c < k; ++c)
    s.prior_[c] = (class_docs[c] + 1.0) / (static_cast<double>(docs.size()) + static_cast<double>(k));

  s.prototypes_.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < v; ++i)
      if (s.log_odds_[c][i] > 0.0) idx.push_back(i);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
      return s.log_odds_[c][x] > s.log_odds_[c][y];
    });
    if (idx.size() > params.prototype_tokens) idx.resize(params.prototype_tokens);
    for (auto i : idx) s.prototypes_[c].push_back(s.vocabulary_[i]);
  }
  return s;
}

// ---------------------------------------------------------------------------
// BigramLm

BigramLm fit_bigram_on(const std::vector<std::vector<std::string>>& sequences,
                       std::vector<std::string> vocabulary) {
  BigramLm lm;
  lm.vocabulary_ = std::move(vocabulary);
  const std::size_t v = lm.vocabulary_.size();
  std::map<std::string, std::uint32_t> index;
  for (std::size_t i = 0; i < v; ++i) index[lm.vocabulary_[i]] = static_cast<std::uint32_t>(i);
  lm.unigram_.assign(v, 0.0);
  lm.context_totals_.assign(v, 0.0);
  for (const auto& seq : sequences) {
    std::optional<std::uint32_t> prev;
    for (const auto& tok : seq) {
      auto it = index.find(tok);
      if (it == index.end()) {
        prev.reset();
        continue;
      }
      lm.unigram_[it->second] += 1.0;
      lm.total_tokens_ += 1.0;
      if (prev) {
        lm.bigrams_[{*prev, it->second}] += 1.0;
        lm.context_totals_[*prev] += 1.0;
      }
      prev = it->second;
    }
  }
  return lm;
}

BigramLm fit_bigram_lm(const Pool& public_pool) {
  if (public_pool.provenance != Provenance::public_data)
    throw PrivacyViolation("frozen backends may only be fit on public data");
  if (public_pool.examples.empty()) throw CannotFit("cannot fit a language model on an empty pool");
  std::vector<std::vector<std::string>> sequences;
  std::set<std::string> vocab;
  for (const auto& ex : public_pool.examples) {
    if (!ex.is_text()) throw CannotFit("language model needs text inputs");
    auto seq = tokenize(ex.text());
    if (!ex.label.empty()) seq.push_back(ex.label);
    vocab.insert(seq.begin(), seq.end());
    sequences.push_back(std::move(seq));
  }
  return fit_bigram_on(sequences, std::vector<std::string>(vocab.begin(), vocab.end()));
}

Distribution BigramLm::unigram_dist() const {
  const double v = static_cast<double>(vocabulary_.size());
  Distribution p(vocabulary_.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = (unigram_[i] + 1.0) / (total_tokens_ + v);
  return p;
}

Distribution BigramLm::next_token_dist(std::string_view prefix) const {
  auto tokens = tokenize(prefix);
  if (tokens.empty()) return unigram_dist();
  auto it = std::lower_bound(vocabulary_.begin(), vocabulary_.end(), tokens.back());
  if (it == vocabulary_.end() || *it != tokens.back()) return unigram_dist();
  const auto a = static_cast<std::uint32_t>(it - vocabulary_.begin());
  if (context_totals_[a] == 0.0) return unigram_dist();
  const double v = static_cast<double>(vocabulary_.size());
  Distribution p(vocabulary_.size());
  const double denom = context_totals_[a] + v;
  for (std::size_t b = 0; b < p.size(); ++b) {
    auto bit = bigrams_.find({a, static_cast<std::uint32_t>(b)});
    p[b] = ((bit == bigrams_.end() ? 0.0 : bit->second) + 1.0) / denom;
  }
  return p;
}

double BigramLm::parameter_count() const {
  const double v = static_cast<double>(vocabulary_.size());
  return v * v + v;
}

ojson BigramLm::to_json() const {
  ojson j;
  j["format"] = "focus.bigram_lm";
  j["version"] = 1;
  j["vocabulary"] = vocabulary_;
  j["unigram"] = unigram_;
  ojson pairs = ojson::array();
  for (const auto& [key, count] : bigrams_) pairs.push_back({key.first, key.second, count});
  j["bigrams"] = pairs;
  return j;
}

BigramLm BigramLm::from_json(const ojson& j) {
  if (j.value("format", "") != "focus.bigram_lm" || j.value("version", 0) != 1)
    throw IoError("not a version-1 bigram model blob");
  BigramLm lm;
  lm.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
  lm.unigram_ = j.at("unigram").get<std::vector<double>>();
  lm.total_tokens_ = std::accumulate(lm.unigram_.begin(), lm.unigram_.end(), 0.0);
  lm.context_totals_.assign(lm.vocabulary_.size(), 0.0);
  for (const auto& row : j.at("bigrams")) {
    auto a = row.at(0).get<std::uint32_t>();
    auto b = row.at(1).get<std::uint32_t>();
    auto c = row.at(2).get<double>();
    lm.bigrams_[{a, b}] = c;
    lm.context_totals_.at(a) += c;
  }
  return lm;
}

// ---------------------------------------------------------------------------
// ReferenceFm

ReferenceFm::ReferenceFm(HashingEncoder encoder, std::optional<FrozenScorer> scorer,
                         std::optional<BigramLm> lm, double lm_lambda)
    : encoder_(encoder), scorer_(std::move(scorer)), lm_(std::move(lm)), lm_lambda_(lm_lambda) {
  if (lm_lambda_ < 0.0 || lm_lambda_ > 1.0) throw Error("lambda must be in [0, 1]");
}

Embedding ReferenceFm::encode(std::string_view text) const { return encoder_.encode(text); }

double ReferenceFm::lambda() const { return scorer_ ? scorer_->params().lambda : lm_lambda_; }

std::string ReferenceFm::class_text(std::string_view class_name,
                                    std::string_view description) const {
  std::string text = FoundationModel::class_text(class_name, description);
  if (scorer_) {
    if (auto c = scorer_->class_index(class_name)) {
      for (const auto& t : scorer_->prototypes()[*c]) {
        text.push_back(' ');
        text += t;
      }
    }
  }
  return text;
}

Distribution ReferenceFm::prior_scores(std::string_view description, std::string_view input,
                                       std::span<const std::string> classes) const {
  const auto x = encode(input);
  const double temperature = scorer_ ? scorer_->params().temperature : 1.0;
  std::vector<double> logits(classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    double log_prior = -std::log(static_cast<double>(classes.size()));
    if (scorer_)
      if (auto c = scorer_->class_index(classes[i])) log_prior = std::log(scorer_->prior()[*c]);
    logits[i] = cosine(x, encode(class_text(classes[i], description))) / temperature + log_prior;
  }
  return softmax(logits);
}

Distribution ReferenceFm::demo_similarity_scores(std::string_view input,
                                                 std::span<const Demonstration> demos,
                                                 std::span<const std::string> classes) const {
  const auto x = encode(input);
  std::vector<double> best(classes.size(), -1.0);
  std::vector<bool> seen(classes.size(), false);
  for (const auto& d : demos) {
    auto it = std::find(classes.begin(), classes.end(), d.label);
    if (it == classes.end()) continue;
    const auto c = static_cast<std::size_t>(it - classes.begin());
    const double sim = cosine(x, encode(d.input));
    if (!seen[c] || sim > best[c]) best[c] = sim;
    seen[c] = true;
  }
  return softmax(best);
}

Distribution ReferenceFm::class_scores(const Context& context, std::string_view input,
                                       std::span<const std::string> classes) const {
  if (classes.empty()) throw ShapeError("class_scores needs at least one class");
  auto prior = prior_scores(context.description, input, classes);
  const double lam = lambda();
  bool applicable = false;
  for (const auto& d : context.demos)
    if (std::find(classes.begin(), classes.end(), d.label) != classes.end()) applicable = true;
  if (!applicable || lam == 1.0) return prior;
  auto demo = demo_similarity_scores(input, context.demos, classes);
  Distribution p(classes.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = lam * prior[i] + (1.0 - lam) * demo[i];
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

const std::vector<std::string>& ReferenceFm::vocabulary() const {
  static const std::vector<std::string> empty;
  return lm_ ? lm_->vocabulary() : empty;
}

Distribution ReferenceFm::next_token_dist(const Context& context, std::string_view prefix) const {
  if (!lm_) throw Error("reference model has no language model");
  auto base = lm_->next_token_dist(prefix);
  if (context.demos.empty()) return base;
  // Demonstrations act like a tiny in-context corpus over the same vocabulary.
  std::vector<std::vector<std::string>> seqs;
  for (const auto& d : context.demos) {
    auto seq = tokenize(d.input);
    seq.push_back(d.label);
    seqs.push_back(std::move(seq));
  }
  auto local = fit_bigram_on(seqs, lm_->vocabulary()).next_token_dist(prefix);
  const double lam = lambda();
  Distribution p(base.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = lam * base[i] + (1.0 - lam) * local[i];
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

ModelSpec ReferenceFm::spec() const {
  double params = 0.0;
  if (scorer_) params += scorer_->parameter_count();
  if (lm_) params += lm_->parameter_count();
  return ModelSpec(std::max(params, 1.0), 4.0, 2048.0);
}

std::string ReferenceFm::serialize() const {
  ojson j;
  j["format"] = "focus.reference_fm";
  j["version"] = 1;
  j["encoder"] = {{"dim", encoder_.dim()}, {"seed", encoder_.seed()}};
  j["scorer"] = scorer_ ? scorer_->to_json() : ojson(nullptr);
  j["lm"] = lm_ ? lm_->to_json() : ojson(nullptr);
  j["lm_lambda"] = lm_lambda_;
  return j.dump();
}

ReferenceFm ReferenceFm::deserialize(const std::string& blob) {
  auto j = ojson::parse(blob);
  if (j.value("format", "") != "focus.reference_fm" || j.value("version", 0) != 1)
    throw IoError("not a version-1 reference model blob");
  HashingEncoder enc(j.at("encoder").at("dim").get<std::size_t>(),
                     j.at("encoder").at("seed").get<std::uint64_t>());
  std::optional<FrozenScorer> scorer;
  if (!j.at("scorer").is_null()) scorer = FrozenScorer::from_json(j.at("scorer"));
  std::optional<BigramLm> lm;
  if (!j.at("lm").is_null()) lm = BigramLm::from_json(j.at("lm"));
  return ReferenceFm(enc, std::move(scorer), std::move(lm), j.at("lm_lambda").get<double>());
}

// ---------------------------------------------------------------------------
// MockFm

void MockFm::add(Entry entry) {
  auto key = std::make_pair(entry.context, entry.input);
  entries_[key] = std::move(entry);
}

const MockFm::Entry* MockFm::find(const Context& context, std::string_view input) const {
  auto it = entries_.find({context_key(context), std::string(input)});
  if (it != entries_.end()) return &it->second;
  it = entries_.find({"*", std::string(input)});
  return it == entries_.end() ? nullptr : &it->second;
}

Embedding MockFm::encode(std::string_view text) const { return encoder_.encode(text); }

Distribution MockFm::class_scores(const Context& context, std::string_view input,
                                  std::span<const std::string> classes) const {
  if (const auto* e = find(context, input); e && e->scores && e->scores->size() == classes.size())
    return *e->scores;
  if (default_scores_.size() == classes.size()) return default_scores_;
  return Distribution(classes.size(), 1.0 / static_cast<double>(classes.size()));
}

Distribution MockFm::next_token_dist(const Context&, std::string_view) const {
  if (vocabulary_.empty()) return {};
  return Distribution(vocabulary_.size(), 1.0 / static_cast<double>(vocabulary_.size()));
}

std::string MockFm::generate(const Context& context, std::string_view input,
                             std::span<const std::string> classes) const {
  if (const auto* e = find(context, input); e && e->generation) return *e->generation;
  if (default_generation_) return *default_generation_;
  return FoundationModel::generate(context, input, classes);
}

MockFm mock_fm(const nlohmann::json& script) {
  MockFm fm;
  if (script.contains("default")) {
    const auto& d = script.at("default");
    if (d.contains("scores") && d.at("scores").is_array())
      fm.set_default_scores(d.at("scores").get<Distribution>());
    if (d.contains("generation")) fm.set_default_generation(d.at("generation").get<std::string>());
  }
  if (script.contains("vocabulary"))
    fm.set_vocabulary(script.at("vocabulary").get<std::vector<std::string>>());
  if (script.contains("entries")) {
    for (const auto& e : script.at("entries")) {
      MockFm::Entry entry;
      entry.context = e.value("context", "");
      entry.input = e.value("input", "");
      if (e.contains("scores")) entry.scores = e.at("scores").get<Distribution>();
      if (e.contains("generation")) entry.generation = e.at("generation").get<std::string>();
      fm.add(std::move(entry));
    }
  }
  return fm;
}

}  // namespace focus
