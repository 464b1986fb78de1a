#include "cedit/kernels.hpp"

#include "cedit/core.hpp"
#include "cedit/errors.hpp"
#include "cedit/metrics.hpp"
#include "cedit/predictor.hpp"

namespace cedit::kernels {

bool parallel_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

std::vector<std::vector<double>> predict_batch(const ReferenceClassifier& f,
                                               std::span<const TokenSeq> xs, Exec exec) {
  return map_indexed<std::vector<double>>(
      xs.size(), [&](std::size_t i) { return f.predict_proba(xs[i]); }, exec);
}

std::vector<double> pseudo_loss_batch(const FluencyScorer& scorer, std::span<const TokenSeq> xs,
                                      Exec exec) {
  return map_indexed<double>(
      xs.size(), [&](std::size_t i) { return scorer.pseudo_loss(xs[i]); }, exec);
}

std::vector<std::size_t> levenshtein_batch(std::span<const TokenSeq> a,
                                           std::span<const TokenSeq> b, Exec exec) {
  if (a.size() != b.size()) throw Error("levenshtein_batch: mismatched batch sizes");
  return map_indexed<std::size_t>(
      a.size(), [&](std::size_t i) { return levenshtein(a[i], b[i]); }, exec);
}

}  // namespace cedit::kernels
