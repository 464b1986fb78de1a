#include <doctest.h>

#include <random>
#include <stdexcept>

#include "cedit/io.hpp"
#include "cedit/kernels.hpp"
#include "cedit/metrics.hpp"

using namespace cedit;
using kernels::Exec;

namespace {

struct Fixture {
  std::vector<LabeledExample> data;
  std::vector<TokenSeq> xs;
  Fixture() {
    SynthConfig sc;
    sc.n_examples = 400;
    sc.rng_seed = 11;
    data = generate_synthetic_reviews(sc);
    for (const auto& ex : data) xs.push_back(tokenize(ex.text));
  }
};

}  // namespace

TEST_CASE("parallel kernels reproduce the serial reference exactly") {
  const Fixture fx;
  const std::span<const LabeledExample> all(fx.data);
  const auto f = train_reference_classifier(all.first(300), LabelSpace(kSentimentLabels), {});
  CHECK(kernels::predict_batch(f, fx.xs, Exec::Serial) ==
        kernels::predict_batch(f, fx.xs, Exec::Parallel));

  const auto scorer = train_reference_scorer(fx.xs);
  CHECK(kernels::pseudo_loss_batch(scorer, fx.xs, Exec::Serial) ==
        kernels::pseudo_loss_batch(scorer, fx.xs, Exec::Parallel));

  std::vector<TokenSeq> shifted(fx.xs.begin() + 1, fx.xs.end());
  shifted.push_back(fx.xs.front());
  const auto serial = kernels::levenshtein_batch(fx.xs, shifted, Exec::Serial);
  CHECK(serial == kernels::levenshtein_batch(fx.xs, shifted, Exec::Parallel));
  for (std::size_t i = 0; i < 20; ++i) CHECK(serial[i] == levenshtein(fx.xs[i], shifted[i]));
}

TEST_CASE("levenshtein_batch needs equal lengths") {
  const std::vector<TokenSeq> a{TokenSeq{"x"}}, b;
  CHECK_THROWS(kernels::levenshtein_batch(a, b, Exec::Serial));
}

TEST_CASE("map_indexed fills by index and rethrows worker exceptions") {
  for (Exec e : {Exec::Serial, Exec::Parallel}) {
    const auto v = kernels::map_indexed<std::size_t>(100, [](std::size_t i) { return i * i; }, e, 4);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(v[i] == i * i);
    CHECK_THROWS_AS(kernels::map_indexed<int>(
                        50,
                        [](std::size_t i) -> int {
                          if (i == 17) throw std::runtime_error("boom");
                          return 0;
                        },
                        e, 4),
                    std::runtime_error);
  }
  CHECK(kernels::map_indexed<int>(0, [](std::size_t) { return 1; }, Exec::Parallel).empty());
  CHECK(kernels::max_threads() >= 1);
}
