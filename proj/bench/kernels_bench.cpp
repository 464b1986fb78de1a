// Serial reference vs OpenMP path for the batch kernels.
// Arg(0) is Exec::Serial, Arg(1) is Exec::Parallel.

#include <benchmark/benchmark.h>

#include "cedit/io.hpp"
#include "cedit/kernels.hpp"
#include "cedit/metrics.hpp"
#include "cedit/predictor.hpp"

using namespace cedit;

namespace {

struct Data {
  std::vector<TokenSeq> xs, ys;
  ReferenceClassifier f;
  ReferenceNgramScorer scorer;
};

const Data& data() {
  static const Data d = [] {
    SynthConfig sc;
    sc.n_examples = 1200;
    sc.rng_seed = 3;
    const auto all = generate_synthetic_reviews(sc);
    std::vector<TokenSeq> xs;
    for (const auto& ex : all) xs.push_back(tokenize(ex.text));
    std::vector<TokenSeq> ys(xs.rbegin(), xs.rend());
    TrainConfig tc;
    tc.epochs = 2;
    auto f = train_reference_classifier(all, LabelSpace(kSentimentLabels), tc);
    auto scorer = train_reference_scorer(xs);
    return Data{std::move(xs), std::move(ys), std::move(f), std::move(scorer)};
  }();
  return d;
}

kernels::Exec exec_of(const benchmark::State& st) {
  return st.range(0) ? kernels::Exec::Parallel : kernels::Exec::Serial;
}

void BM_PredictBatch(benchmark::State& st) {
  const auto& d = data();
  for (auto _ : st) benchmark::DoNotOptimize(kernels::predict_batch(d.f, d.xs, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.xs.size()));
}

void BM_PseudoLossBatch(benchmark::State& st) {
  const auto& d = data();
  for (auto _ : st) {
    benchmark::DoNotOptimize(kernels::pseudo_loss_batch(d.scorer, d.xs, exec_of(st)));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.xs.size()));
}

void BM_LevenshteinBatch(benchmark::State& st) {
  const auto& d = data();
  for (auto _ : st) {
    benchmark::DoNotOptimize(kernels::levenshtein_batch(d.xs, d.ys, exec_of(st)));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(d.xs.size()));
}

}  // namespace

BENCHMARK(BM_PredictBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PseudoLossBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LevenshteinBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
