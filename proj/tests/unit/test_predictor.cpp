#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "cedit/errors.hpp"
#include "cedit/io.hpp"
#include "cedit/predictor.hpp"
#include "support/stubs.hpp"

using namespace cedit;

namespace {

struct Params {
  std::size_t V, d, h, L;
  std::vector<double> E, U, W, c;
};

Params random_params(std::mt19937_64& gen, std::size_t V, std::size_t d, std::size_t h,
                     std::size_t L) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Params p{V, d, h, L, {}, {}, {}, {}};
  for (std::size_t i = 0; i < V * d; ++i) p.E.push_back(u(gen));
  for (std::size_t i = 0; i < h * d; ++i) p.U.push_back(u(gen));
  for (std::size_t i = 0; i < L * h; ++i) p.W.push_back(2.0 * u(gen));
  for (std::size_t i = 0; i < L; ++i) p.c.push_back(0.1 * u(gen));
  return p;
}

ReferenceClassifier build(const Params& p) {
  std::vector<std::string> vocab{std::string(ReferenceClassifier::kUnknown)};
  for (std::size_t v = 1; v < p.V; ++v) vocab.push_back("t" + std::to_string(v));
  std::vector<std::string> labels;
  for (std::size_t y = 0; y < p.L; ++y) labels.push_back("l" + std::to_string(y));
  return ReferenceClassifier(LabelSpace(labels), vocab, p.d, p.h, p.E, p.U, p.W, p.c);
}

// Independent forward pass over explicit per-position embeddings.
double logit_oracle(const Params& p, const std::vector<std::vector<double>>& emb, std::size_t y) {
  double z = 0.0;
  for (const auto& e : emb) {
    for (std::size_t j = 0; j < p.h; ++j) {
      double a = 0.0;
      for (std::size_t k = 0; k < p.d; ++k) a += p.U[j * p.d + k] * e[k];
      z += p.W[y * p.h + j] * std::tanh(a);
    }
  }
  return z / static_cast<double>(emb.size()) + p.c[y];
}

std::vector<std::vector<double>> embeddings_of(const Params& p, const std::vector<std::size_t>& rows) {
  std::vector<std::vector<double>> out;
  for (auto r : rows) out.emplace_back(p.E.begin() + r * p.d, p.E.begin() + (r + 1) * p.d);
  return out;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-5); }

}  // namespace

TEST_CASE("gradient matches central finite differences") {
  std::mt19937_64 gen(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_params(gen, 12, 3 + trial % 4, 2 + trial % 5, 2 + trial % 3);
    const auto f = build(p);
    const std::size_t n = 1 + gen() % 9;
    std::vector<std::size_t> rows;
    std::vector<std::string> toks;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back(gen() % p.V);
      toks.push_back(f.vocab()[rows.back()]);
    }
    const TokenSeq x(toks);
    const std::size_t y = gen() % p.L;

    const auto emb = embeddings_of(p, rows);
    const auto z = f.logits(x);
    CHECK(z[y] == doctest::Approx(logit_oracle(p, emb, y)).epsilon(1e-12));

    const auto grad = f.embedding_gradient(x, y);
    const auto attr = f.attribute(x, y);
    REQUIRE(attr.size() == n);
    const double eps = 1e-4;
    for (std::size_t i = 0; i < n; ++i) {
      double l1 = 0.0;
      for (std::size_t k = 0; k < p.d; ++k) {
        auto plus = emb, minus = emb;
        plus[i][k] += eps;
        minus[i][k] -= eps;
        const double fd = (logit_oracle(p, plus, y) - logit_oracle(p, minus, y)) / (2 * eps);
        worst = std::max(worst, rel_err(grad[i * p.d + k], fd));
        l1 += std::abs(fd);
      }
      worst = std::max(worst, rel_err(attr[i], l1));
    }
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("probabilities are a distribution and unknown tokens use row 0") {
  std::mt19937_64 gen(3);
  const auto p = random_params(gen, 6, 4, 4, 3);
  const auto f = build(p);
  const auto probs = f.predict_proba(TokenSeq{"t1", "t2", "never-seen"});
  CHECK(std::accumulate(probs.begin(), probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.row_of("never-seen") == 0);
  CHECK(f.predict_proba(TokenSeq{"zzz"}) == f.predict_proba(TokenSeq{"<unk>"}));
  CHECK_THROWS_AS(f.predict_proba(TokenSeq{}), EmptyInputError);
  CHECK_THROWS_AS(f.attribute(TokenSeq{"t1"}, std::string_view("nope")), LabelError);
}

TEST_CASE("batch prediction equals one-at-a-time prediction") {
  std::mt19937_64 gen(4);
  const auto f = build(random_params(gen, 9, 5, 3, 2));
  std::vector<TokenSeq> xs{{"t1"}, {"t2", "t3"}, {"t8", "t8", "t4"}};
  const auto batch = f.predict_batch(xs);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(batch[i] == f.predict_proba(xs[i]));
}

TEST_CASE("constructor rejects bad shapes") {
  std::mt19937_64 gen(5);
  auto p = random_params(gen, 4, 2, 2, 2);
  p.c.push_back(0.0);
  CHECK_THROWS_AS(build(p), ConfigError);
  CHECK_THROWS_AS(ReferenceClassifier(LabelSpace({"a", "b"}), {"x"}, 1, 1, {0.0}, {0.0},
                                      {0.0, 0.0}, {0.0, 0.0}),
                  ConfigError);
}

TEST_CASE("json round trip is exact") {
  std::mt19937_64 gen(6);
  const auto f = build(random_params(gen, 7, 3, 4, 2));
  CHECK(ReferenceClassifier::from_json(f.to_json()) == f);
  test::TempDir dir("pred");
  f.save(dir / "m.json");
  CHECK(ReferenceClassifier::load(dir / "m.json") == f);
  CHECK_THROWS_AS(ReferenceClassifier::from_json("{\"format\": 3}"), ParseError);
  CHECK_THROWS_AS(ReferenceClassifier::from_json("not json"), ParseError);
  auto j = nlohmann::json::parse(f.to_json());
  j["c"].push_back(0.0);
  CHECK_THROWS_AS(ReferenceClassifier::from_json(j.dump()), ParseError);
}

TEST_CASE("training is deterministic and learns the synthetic task") {
  SynthConfig sc;
  sc.n_examples = 1200;
  sc.rng_seed = 9;
  const auto data = generate_synthetic_reviews(sc);
  const std::span<const LabeledExample> all(data);
  const LabelSpace ls(kSentimentLabels);
  TrainConfig tc;
  tc.rng_seed = 1;
  const auto a = train_reference_classifier(all.first(1000), ls, tc);
  const auto b = train_reference_classifier(all.first(1000), ls, tc);
  CHECK(a == b);
  CHECK(accuracy(a, all.subspan(1000)) >= 0.9);

  tc.rng_seed = 2;
  CHECK_FALSE(train_reference_classifier(all.first(1000), ls, tc) == a);
}

TEST_CASE("training needs two labels") {
  std::vector<LabeledExample> one{{"a", "good film", "positive"}, {"b", "fine film", "positive"}};
  CHECK_THROWS_AS(train_reference_classifier(one, LabelSpace(kSentimentLabels), {}),
                  DegenerateDataError);
  TrainConfig bad;
  bad.learning_rate = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("argmax breaks ties towards the lower index") {
  const std::vector<double> v{0.5, 0.5};
  CHECK(argmax(v) == 0);
  const std::vector<double> w{0.1, 0.6, 0.3};
  CHECK(argmax(w) == 1);
}
