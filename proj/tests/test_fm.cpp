#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "focus/errors.hpp"
#include "focus/fm.hpp"
#include "focus/partitioner.hpp"

using namespace focus;

namespace {

const std::vector<std::string> kClasses{"sports", "politics", "science", "music"};

SynthCorpus corpus(std::uint64_t seed = 5) {
  SynthCorpusSpec spec;
  spec.class_names = kClasses;
  spec.docs_per_class = 60;
  spec.seed = seed;
  return synth_classification_corpus(spec);
}

ReferenceFm reference(const SynthCorpus& c, double lambda = 0.5) {
  ScorerParams params;
  params.lambda = lambda;
  return ReferenceFm(HashingEncoder(128, 3), fit_frozen_scorer(c.public_pool, c.schema, params));
}

double sum(const Distribution& p) { return std::accumulate(p.begin(), p.end(), 0.0); }

Pool public_pool(std::initializer_list<std::pair<const char*, const char*>> rows) {
  Pool p;
  for (const auto& [x, y] : rows) p.examples.push_back({x, y});
  return p;
}

}  // namespace

TEST_CASE("softmax, argmax and cosine") {
  const std::vector<double> z{1.0, 2.0, 3.0};
  auto p = softmax(z);
  const double denom = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(p[2] == doctest::Approx(std::exp(3.0) / denom));
  CHECK(sum(p) == doctest::Approx(1.0));
  CHECK(argmax(std::vector<double>{0.2, 0.5, 0.5}) == 1);
  CHECK_THROWS_AS(argmax(std::vector<double>{}), ShapeError);
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 0}) == 0.0);
  CHECK(cosine(std::vector<double>{1, 1}, std::vector<double>{2, 2}) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine(std::vector<double>{1}, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("hashing encoder") {
  HashingEncoder enc(64, 9);
  const auto a = enc.encode("The cat sat");
  CHECK(a.size() == 64);
  double norm = 0;
  for (double v : a) norm += v * v;
  CHECK(norm == doctest::Approx(1.0));
  CHECK(enc.encode("the CAT   sat") == a);
  CHECK(enc.encode("sat cat the") == a);  // bag of words
  for (double v : enc.encode("")) CHECK(v == 0.0);
  CHECK(HashingEncoder(64, 9).encode("x y") == enc.encode("x y"));
  CHECK_THROWS(HashingEncoder(0));
}

TEST_CASE("property: class scores are distributions") {
  const auto c = corpus();
  const auto fm = reference(c);
  Context ctx;
  ctx.demos = {{c.public_pool.examples[0].text(), c.public_pool.examples[0].label, ""}};
  for (std::size_t i = 0; i < 100; ++i) {
    const auto& ex = c.private_pool.examples[i];
    for (const Context& context : {Context{}, ctx}) {
      auto p = fm.class_scores(context, ex.text(), c.schema.classes());
      CHECK(p.size() == 4);
      CHECK(sum(p) == doctest::Approx(1.0).epsilon(1e-12));
      for (double v : p) CHECK(v >= 0.0);
    }
  }
  CHECK_THROWS_AS(fm.class_scores({}, "x", std::vector<std::string>{}), ShapeError);
}

TEST_CASE("single demo with lambda 0 decides the answer") {
  const auto c = corpus();
  const auto fm = reference(c, 0.0);
  for (std::size_t cls = 0; cls < 4; ++cls) {
    Context ctx;
    ctx.demos = {{"tc", kClasses[cls], ""}};
    CHECK(fm.generate(ctx, "tc", kClasses) == kClasses[cls]);
    // an input unrelated to the demo still goes to the only class with a demo
    CHECK(fm.generate(ctx, "zzz qqq", kClasses) == kClasses[cls]);
  }
}

TEST_CASE("lambda 1 ignores demonstrations") {
  const auto c = corpus();
  const auto fm = reference(c, 1.0);
  Context ctx;
  for (std::size_t i = 0; i < 8; ++i)
    ctx.demos.push_back({c.public_pool.examples[i].text(), c.public_pool.examples[i].label, ""});
  for (std::size_t i = 0; i < 50; ++i) {
    const auto& x = c.private_pool.examples[i].text();
    CHECK(fm.class_scores(ctx, x, kClasses) == fm.class_scores({}, x, kClasses));
  }
}

TEST_CASE("demos with labels outside the class list are ignored") {
  const auto c = corpus();
  const auto fm = reference(c, 0.0);
  Context ctx;
  ctx.demos = {{"anything", "not-a-class", ""}};
  const auto& x = c.private_pool.examples[0].text();
  CHECK(fm.class_scores(ctx, x, kClasses) == fm.prior_scores("", x, kClasses));
}

TEST_CASE("bigram model: hand counts and backoff") {
  auto lm = fit_bigram_lm(public_pool({{"a", "b"}, {"a", "a"}}));
  REQUIRE(lm.vocabulary() == std::vector<std::string>{"a", "b"});
  // counts after "a": a->b once, a->a once; add-one over two words
  auto p = lm.next_token_dist("a");
  CHECK(p[1] == doctest::Approx(0.5));
  // "b" never has a successor; unknown words too: both back off to the unigram
  const Distribution unigram{4.0 / 6.0, 2.0 / 6.0};
  for (const char* prefix : {"b", "x y unknown", ""}) {
    auto q = lm.next_token_dist(prefix);
    CHECK(q[0] == doctest::Approx(unigram[0]));
    CHECK(q[1] == doctest::Approx(unigram[1]));
  }
}

TEST_CASE("frozen backends refuse private or empty data") {
  LabelSchema schema({"a", "b"});
  Pool priv = public_pool({{"x", "a"}});
  priv.provenance = Provenance::private_data;
  CHECK_THROWS_AS(fit_frozen_scorer(priv, schema, {}), PrivacyViolation);
  CHECK_THROWS_AS(fit_bigram_lm(priv), PrivacyViolation);
  CHECK_THROWS_AS(fit_frozen_scorer(Pool{}, schema, {}), CannotFit);
  CHECK_THROWS_AS(fit_bigram_lm(Pool{}), CannotFit);
  ScorerParams bad;
  bad.lambda = 1.5;
  CHECK_THROWS_AS(fit_frozen_scorer(public_pool({{"x", "a"}}), schema, bad), CannotFit);
}

TEST_CASE("inference never changes the model") {
  const auto c = corpus();
  const auto fm = ReferenceFm(HashingEncoder(128, 3), fit_frozen_scorer(c.public_pool, c.schema, {}),
                              fit_bigram_lm(c.public_pool));
  const auto before = fm.serialize();
  Context ctx;
  ctx.description = "topics";
  for (std::size_t i = 0; i < 20; ++i)
    ctx.demos.push_back({c.private_pool.examples[i].text(), c.private_pool.examples[i].label, "client-1"});
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& x = c.private_pool.examples[i].text();
    (void)fm.class_scores(ctx, x, kClasses);
    (void)fm.generate(ctx, x, kClasses);
    (void)fm.next_token_dist(ctx, x);
  }
  CHECK(fm.serialize() == before);
}

TEST_CASE("serialize round trip") {
  const auto c = corpus();
  ReferenceFm fm(HashingEncoder(128, 3), fit_frozen_scorer(c.public_pool, c.schema, {}),
                 fit_bigram_lm(c.public_pool), 0.25);
  const auto blob = fm.serialize();
  auto back = ReferenceFm::deserialize(blob);
  CHECK(back.serialize() == blob);
  CHECK(back.scorer() == fm.scorer());
  CHECK(back.lm() == fm.lm());
  CHECK(back.spec().parameters == fm.spec().parameters);
  const auto& x = c.private_pool.examples[3].text();
  CHECK(back.class_scores({}, x, kClasses) == fm.class_scores({}, x, kClasses));
  CHECK_THROWS_AS(ReferenceFm::deserialize(R"({"format":"other","version":1})"), IoError);
}

TEST_CASE("next token distribution with demonstrations") {
  auto lm = fit_bigram_lm(public_pool({{"a", "b"}, {"b", "a"}, {"a", "a"}}));
  ReferenceFm fm(HashingEncoder(16, 0), std::nullopt, lm, 0.0);
  CHECK(fm.lambda() == 0.0);
  Context ctx;
  ctx.demos = {{"a", "b", ""}, {"a", "b", ""}};
  auto p = fm.next_token_dist(ctx, "a");
  CHECK(sum(p) == doctest::Approx(1.0));
  CHECK(p[1] > p[0]);  // demos pull toward "b"
  CHECK(fm.next_token_dist({}, "a") == lm.next_token_dist("a"));
  CHECK_THROWS(ReferenceFm(HashingEncoder(16, 0), std::nullopt, lm, 2.0));
  CHECK_THROWS(ReferenceFm(HashingEncoder(16, 0), std::nullopt).next_token_dist({}, "a"));
}

TEST_CASE("context keys") {
  Context ctx{"desc", {{"x", "y", "c"}}};
  CHECK(context_key(ctx) == "desc\nInput: x\nLabel: y");
  CHECK(context_key({}) == "");
}

TEST_CASE("mock model scripts") {
  auto fm = mock_fm(nlohmann::json::parse(R"({
    "default": {"scores": "uniform", "generation": "fallback"},
    "vocabulary": ["w0", "w1"],
    "entries": [
      {"context": "*", "input": "hi", "scores": [0.9, 0.1], "generation": "a"},
      {"context": "ctx", "input": "hi", "scores": [0.2, 0.8]}
    ]})"));
  const std::vector<std::string> classes{"a", "b"};
  CHECK(fm.class_scores({}, "hi", classes) == Distribution{0.9, 0.1});
  CHECK(fm.class_scores(Context{"ctx", {}}, "hi", classes) == Distribution{0.2, 0.8});
  CHECK(fm.class_scores({}, "other", classes) == Distribution{0.5, 0.5});
  CHECK(fm.generate({}, "hi", classes) == "a");
  CHECK(fm.generate({}, "other", classes) == "fallback");
  CHECK(fm.next_token_dist({}, "x") == Distribution{0.5, 0.5});
  // wrong-length scripted scores fall back to uniform over the requested classes
  CHECK(fm.class_scores({}, "hi", std::vector<std::string>{"a", "b", "c"}).size() == 3);
}
