#pragma once

// Data-parallel kernels. Every kernel has a serial path that is the reference
// used by the tests; the parallel path must produce identical results.

#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cedit {
class TokenSeq;
class ReferenceClassifier;
class FluencyScorer;
}  // namespace cedit

namespace cedit::kernels {

enum class Exec { Serial, Parallel };

bool parallel_available();
int max_threads();

// out[i] = fn(i). Exceptions thrown by fn in the parallel path are captured
// and the first one rethrown on the calling thread.
template <class R, class Fn>
std::vector<R> map_indexed(std::size_t n, Fn&& fn, Exec exec, int threads = 0) {
  std::vector<R> out(n);
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::exception_ptr first;
  std::mutex guard;
  const auto count = static_cast<std::ptrdiff_t>(n);
#ifdef _OPENMP
  const int nth = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nth)
#endif
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!first) first = std::current_exception();
    }
  }
  (void)threads;
  if (first) std::rethrow_exception(first);
  return out;
}

std::vector<std::vector<double>> predict_batch(const ReferenceClassifier& f,
                                               std::span<const TokenSeq> xs, Exec exec);

std::vector<double> pseudo_loss_batch(const FluencyScorer& scorer, std::span<const TokenSeq> xs,
                                      Exec exec);

// Word-level edit distance of every pair (a[i], b[i]).
std::vector<std::size_t> levenshtein_batch(std::span<const TokenSeq> a,
                                           std::span<const TokenSeq> b, Exec exec);

}  // namespace cedit::kernels
