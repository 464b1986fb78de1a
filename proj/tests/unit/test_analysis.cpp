#include <doctest.h>

#include <numeric>
#include <random>

#include <json.hpp>

#include "cedit/analysis.hpp"
#include "cedit/metrics.hpp"

using namespace cedit;

namespace {

EditOutcome edited(std::string id, std::string original, TokenSeq best, std::string contrast,
                   double minimality = 0.0) {
  EditOutcome o;
  o.id = std::move(id);
  o.original = std::move(original);
  o.contrast_label = std::move(contrast);
  EditCandidate c;
  c.tokens = std::move(best);
  c.flipped = true;
  c.minimality = minimality;
  o.best = c;
  return o;
}

const TokenStat* find(const std::vector<TokenStat>& v, std::string_view t) {
  for (const auto& s : v) {
    if (s.token == t) return &s;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("extract_diff examples") {
  auto d = extract_diff(TokenSeq{"a", "b", "c"}, TokenSeq{"a", "x", "c"});
  CHECK(d.removed == std::vector<std::string>{"b"});
  CHECK(d.inserted == std::vector<std::string>{"x"});
  CHECK(d.substitutions == 1);

  d = extract_diff(TokenSeq{"a", "b"}, TokenSeq{"a", "b"});
  CHECK(d.removed.empty());
  CHECK(d.inserted.empty());

  d = extract_diff(TokenSeq{"a"}, TokenSeq{"a", "b", "c"});
  CHECK(d.removed.empty());
  CHECK(d.inserted == std::vector<std::string>{"b", "c"});
}

TEST_CASE("diff sizes are consistent with the edit distance") {
  std::mt19937_64 gen(8);
  const char* syms[] = {"a", "b", "c", "d"};
  for (int t = 0; t < 2000; ++t) {
    std::vector<std::string> a(gen() % 8), b(gen() % 8);
    for (auto& s : a) s = syms[gen() % 4];
    for (auto& s : b) s = syms[gen() % 4];
    const auto d = extract_diff(TokenSeq(a), TokenSeq(b));
    CHECK(d.removed.size() + d.inserted.size() - d.substitutions ==
          levenshtein(TokenSeq(a), TokenSeq(b)));
    CHECK(a.size() - d.removed.size() == b.size() - d.inserted.size());
  }
}

TEST_CASE("ratio arithmetic on a hand-built corpus") {
  // 20 originals of 10 tokens: 200 tokens, "bad" in 4 of them, so p(bad) = 0.02.
  // Ten edits delete one token each; three delete "bad", so p_r(bad) = 0.3.
  const std::string plain = "w0 w1 w2 w3 w4 w5 w6 w7 w8 w9";
  const std::string planted = "bad w1 w2 w3 w4 w5 w6 w7 w8 w9";
  const TokenSeq no_w0{"w1", "w2", "w3", "w4", "w5", "w6", "w7", "w8", "w9"};
  std::vector<EditOutcome> outs;
  for (int i = 0; i < 20; ++i) {
    const bool has_bad = i < 4;
    const std::string orig = has_bad ? planted : plain;
    TokenSeq best = tokenize(orig);
    if (i < 3 || (i >= 4 && i < 11)) best = no_w0;  // deletes the first token
    outs.push_back(edited("o" + std::to_string(i), orig, best, "pos"));
  }
  ArtifactFilter filter;
  filter.min_count = 1;
  const auto rep = artifact_stats(outs, filter);
  CHECK(rep.considered == 20);
  CHECK(rep.ntokens == 200);
  REQUIRE(rep.by_label.size() == 1);
  const auto& la = rep.by_label[0];
  CHECK(la.total_removals == 10);
  CHECK(la.total_insertions == 0);
  const auto* bad = find(la.tokens, "bad");
  REQUIRE(bad);
  CHECK(bad->p == doctest::Approx(0.02));
  CHECK(bad->p_r == doctest::Approx(0.3));
  CHECK(bad->removal_ratio() == doctest::Approx(15.0));
  const auto* w0 = find(la.tokens, "w0");
  REQUIRE(w0);
  CHECK(w0->removal_ratio() == doctest::Approx(0.7 / 0.08));
  REQUIRE(la.top_removed.size() == 2);
  CHECK(la.top_removed[0].token == "bad");
  CHECK(la.top_removed[1].token == "w0");
  CHECK(la.top_inserted.empty());

  double sum = 0.0;
  for (const auto& s : la.tokens) sum += s.p_r;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

  // min_count counts the whole corpus: "bad" appears 4 times.
  filter.min_count = 5;
  CHECK(find(artifact_stats(outs, filter).by_label[0].top_removed, "bad") == nullptr);
  filter.min_count = 4;
  CHECK(find(artifact_stats(outs, filter).by_label[0].top_removed, "bad") != nullptr);
}

TEST_CASE("a token seen nine times falls under the default min_count") {
  std::vector<EditOutcome> outs;
  for (int i = 0; i < 9; ++i) {
    outs.push_back(edited("r" + std::to_string(i), "rare common", TokenSeq{"new", "common"}, "pos"));
  }
  for (int i = 0; i < 3; ++i) {
    outs.push_back(edited("c" + std::to_string(i), "common common", TokenSeq{"common", "common"},
                          "pos"));
  }
  const auto rep = artifact_stats(outs);
  REQUIRE(rep.by_label.size() == 1);
  CHECK(find(rep.by_label[0].tokens, "rare") != nullptr);
  CHECK(find(rep.by_label[0].tokens, "rare")->corpus_count == 9);
  CHECK(rep.by_label[0].top_removed.empty());
  // "new" never occurs in an original, so it has no ratio.
  CHECK(rep.by_label[0].top_inserted.empty());
}

TEST_CASE("insertion and removal probabilities each sum to one per label") {
  std::mt19937_64 gen(5);
  const char* syms[] = {"a", "b", "c", "d", "e"};
  std::vector<EditOutcome> outs;
  for (int i = 0; i < 300; ++i) {
    std::vector<std::string> a(1 + gen() % 20);
    for (auto& s : a) s = syms[gen() % 5];
    auto b = a;
    b[gen() % b.size()] = syms[gen() % 5];
    if (gen() % 2) b.push_back(syms[gen() % 5]);
    outs.push_back(edited("x" + std::to_string(i), TokenSeq(a).str(), TokenSeq(b),
                          i % 3 ? "pos" : "neg"));
  }
  ArtifactFilter filter;
  filter.max_minimality = 1.0;
  const auto rep = artifact_stats(outs, filter);
  REQUIRE(rep.by_label.size() == 2);
  CHECK(rep.by_label[0].contrast_label == "neg");
  for (const auto& la : rep.by_label) {
    double pr = 0.0, pi = 0.0;
    for (const auto& s : la.tokens) {
      pr += s.p_r;
      pi += s.p_i;
    }
    if (la.total_removals) CHECK(pr == doctest::Approx(1.0).epsilon(1e-12));
    if (la.total_insertions) CHECK(pi == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("filter exclusions, empty subsets and tie order") {
  std::vector<EditOutcome> outs;
  outs.push_back(edited("big", "a b c d", TokenSeq{"x", "y", "c", "d"}, "pos", 0.5));
  EditOutcome none;
  none.id = "none";
  none.original = "a b";
  outs.push_back(none);
  auto rep = artifact_stats(outs);
  CHECK(rep.considered == 0);
  CHECK(rep.excluded == 2);
  CHECK(rep.by_label.empty());
  CHECK(nlohmann::json::parse(rep.to_json()).at("by_label").empty());

  // "p" and "q" each removed once from identical originals: equal ratios.
  std::vector<EditOutcome> tie{edited("1", "q p z", TokenSeq{"q", "z"}, "neg"),
                               edited("2", "q p z", TokenSeq{"p", "z"}, "neg")};
  ArtifactFilter f;
  f.min_count = 1;
  f.max_minimality = 1.0;
  rep = artifact_stats(tie, f);
  REQUIRE(rep.by_label[0].top_removed.size() == 2);
  CHECK(rep.by_label[0].top_removed[0].token == "p");
  CHECK(rep.by_label[0].top_removed[1].token == "q");
  CHECK(rep.to_markdown().find("`p`") != std::string::npos);
}
