#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include <json.hpp>

#include "cedit/errors.hpp"
#include "cedit/io.hpp"
#include "cedit/metrics.hpp"
#include "support/stubs.hpp"

using namespace cedit;

namespace {

// Exhaustive recursion straight from the definition.
std::size_t lev_oracle(const std::vector<std::string>& a, std::size_t i,
                       const std::vector<std::string>& b, std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const std::size_t sub = lev_oracle(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  const std::size_t del = lev_oracle(a, i + 1, b, j) + 1;
  const std::size_t ins = lev_oracle(a, i, b, j + 1) + 1;
  return std::min({sub, del, ins});
}

std::vector<TokenSeq> all_sequences(std::size_t max_len) {
  std::vector<TokenSeq> out{TokenSeq{}};
  std::vector<std::vector<std::string>> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& s : frontier) {
      for (const char* sym : {"a", "b", "c"}) {
        auto t = s;
        t.push_back(sym);
        out.emplace_back(t);
        next.push_back(std::move(t));
      }
    }
    frontier = std::move(next);
  }
  return out;
}

}  // namespace

TEST_CASE("levenshtein agrees with the exhaustive oracle on short sequences") {
  // Lengths up to 4 here; the acceptance suite covers up to 6.
  const auto seqs = all_sequences(4);
  std::size_t checked = 0;
  for (const auto& a : seqs) {
    for (const auto& b : seqs) {
      const auto d = levenshtein(a, b);
      REQUIRE(d == lev_oracle(a.tokens(), 0, b.tokens(), 0));
      ++checked;
    }
  }
  CHECK(checked == seqs.size() * seqs.size());
}

TEST_CASE("alignment cost equals the distance and replays the edit") {
  const auto seqs = all_sequences(4);
  std::mt19937_64 gen(2);
  for (int t = 0; t < 3000; ++t) {
    const auto& a = seqs[gen() % seqs.size()];
    const auto& b = seqs[gen() % seqs.size()];
    std::size_t cost = 0;
    std::vector<std::string> rebuilt;
    for (const auto& s : align(a, b)) {
      switch (s.op) {
        case EditOp::Match:
          CHECK(a[s.src] == b[s.dst]);
          rebuilt.push_back(a[s.src]);
          break;
        case EditOp::Substitute:
          CHECK(a[s.src] != b[s.dst]);
          rebuilt.push_back(b[s.dst]);
          ++cost;
          break;
        case EditOp::Delete:
          ++cost;
          break;
        case EditOp::Insert:
          rebuilt.push_back(b[s.dst]);
          ++cost;
          break;
      }
    }
    CHECK(cost == levenshtein(a, b));
    CHECK(TokenSeq(rebuilt) == b);
  }
}

TEST_CASE("minimality") {
  CHECK(minimality(TokenSeq{"a", "b", "c", "d"}, TokenSeq{"a", "x", "c", "d"}) == 0.25);
  CHECK(minimality(TokenSeq{"a", "b"}, TokenSeq{"a", "b"}) == 0.0);
  CHECK(minimality(TokenSeq{"a"}, TokenSeq{"x", "y", "z"}) == 3.0);  // not clamped
  CHECK_THROWS_AS(minimality(TokenSeq{}, TokenSeq{"a"}), EmptyInputError);
}

TEST_CASE("edit overlap and changed indices") {
  const TokenSeq orig{"a", "b", "c", "d"};
  CHECK(changed_indices(orig, TokenSeq{"a", "x", "c"}) == std::vector<std::size_t>{1, 3});
  CHECK(edit_overlap(TokenSeq{"a", "x", "c", "d"}, TokenSeq{"a", "y", "c", "z"}, orig) == 1.0);
  CHECK(edit_overlap(TokenSeq{"x", "b", "y", "d"}, TokenSeq{"x", "b", "c", "d"}, orig) == 0.5);
  CHECK_THROWS_AS(edit_overlap(orig, TokenSeq{"x"}, orig), UndefinedOverlapError);
}

TEST_CASE("reference scorer: hand-computed pseudo-loss") {
  std::vector<TokenSeq> corpus{TokenSeq{"a", "b"}};
  const NgramWeights w;
  const auto scorer = train_reference_scorer(corpus, w);
  const double k = w.add_k;
  // Forward model saw "a b"; backward saw "b a". Vocabulary a, b, <unk>.
  const double fa = 0.9 * (1 + k) / (1 + 3 * k) + 0.1 * (1 + k) / (2 + 3 * k);
  const double fb = 0.9 * (1 + k) / (1 + 3 * k) + 0.1 * (1 + k) / (2 + 3 * k);
  // Backward: p(a | next = b, after = <s>) and p(b | <s>, <s>), mirrored.
  const double ba = fa, bb = fb;
  const double want = (-std::log(0.5 * fa + 0.5 * ba) - std::log(0.5 * fb + 0.5 * bb)) / 2.0;
  CHECK(scorer.pseudo_loss(TokenSeq{"a", "b"}) == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(scorer.pseudo_loss(TokenSeq{}), EmptyInputError);

  const auto again = ReferenceNgramScorer::from_json(scorer.to_json());
  CHECK(again.pseudo_loss(TokenSeq{"b", "a", "zz"}) == scorer.pseudo_loss(TokenSeq{"b", "a", "zz"}));
}

TEST_CASE("fluency ratio: identity is exactly one, disfluency costs") {
  SynthConfig sc;
  sc.n_examples = 300;
  const auto data = generate_synthetic_reviews(sc);
  const auto scorer = train_reference_scorer(data);
  for (int i = 0; i < 20; ++i) {
    const auto x = tokenize(data[i].text);
    CHECK(fluency_ratio(scorer, x, x) == 1.0);
  }
  const auto x = tokenize(data[0].text);
  auto shuffled = x.tokens();
  std::reverse(shuffled.begin(), shuffled.end());
  CHECK(fluency_ratio(scorer, x, TokenSeq(shuffled)) > 1.0);
}

TEST_CASE("flip rate and evaluate") {
  CHECK_THROWS_AS(flip_rate({}), EmptyInputError);
  std::vector<EditOutcome> outs(4);
  for (std::size_t i = 0; i < outs.size(); ++i) {
    outs[i].id = "o" + std::to_string(i);
    outs[i].original = "a b c d";
  }
  EditCandidate c1;
  c1.tokens = TokenSeq{"a", "x", "c", "d"};
  c1.minimality = 0.25;
  c1.flipped = true;
  EditCandidate c2 = c1;
  c2.tokens = TokenSeq{"x", "y", "c", "d"};
  c2.minimality = 0.5;
  outs[0].best = c1;
  outs[1].best = c2;
  outs[3].error = "backend down";
  CHECK(flip_rate(outs) == 0.5);

  const auto rep = evaluate(outs, nullptr);
  CHECK(rep.instances == 4);
  CHECK(rep.flip_rate == 0.5);
  CHECK(*rep.mean_minimality == doctest::Approx(0.375));
  CHECK(*rep.median_minimality == doctest::Approx(0.375));
  CHECK_FALSE(rep.mean_fluency);
  const auto j = nlohmann::json::parse(rep.summary_json());
  CHECK(j.at("failed") == 1);
  std::size_t lines = 0;
  for (char ch : rep.rows_jsonl()) lines += ch == '\n';
  CHECK(lines == 4);
}
