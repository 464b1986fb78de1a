#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cedit/core.hpp"

namespace cedit {

// The fixed model being explained.
//
// predict_proba returns a distribution over labels() (sums to 1 within 1e-6).
// attribute returns one non-negative score per input token: the l1 norm of
// the gradient of the target label's logit with respect to that token's
// embedding. Implementations must tolerate concurrent const calls.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual const LabelSpace& labels() const = 0;
  virtual std::vector<double> predict_proba(const TokenSeq& x) const = 0;
  virtual std::vector<std::vector<double>> predict_batch(std::span<const TokenSeq> xs) const;
  virtual std::vector<double> attribute(const TokenSeq& x, std::size_t target) const = 0;

  std::vector<double> attribute(const TokenSeq& x, std::string_view target) const {
    return attribute(x, labels().index_of(target));
  }
};

// Index of the largest entry; the lower index wins ties.
std::size_t argmax(std::span<const double> v);

struct TrainConfig {
  double learning_rate = 0.3;
  std::size_t epochs = 12;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 16;
  std::uint64_t rng_seed = 0;
  double l2_penalty = 1e-5;
  double embed_init = 0.5;  // embeddings start uniform in [-embed_init, embed_init]

  void validate() const;
};

// Bag of per-token tanh features:
//   h_i = tanh(U e_i),  g = mean_i h_i,  z = W g + c,  p = softmax(z)
// Row 0 of the embedding table is reserved for unknown tokens.
class ReferenceClassifier : public Predictor {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  // Matrices are row-major: E is |V| x d, U is h x d, W is L x h.
  ReferenceClassifier(LabelSpace labels, std::vector<std::string> vocab, std::size_t embed_dim,
                      std::size_t hidden_dim, std::vector<double> embeddings,
                      std::vector<double> hidden, std::vector<double> output,
                      std::vector<double> bias);

  const LabelSpace& labels() const override { return labels_; }
  std::vector<double> predict_proba(const TokenSeq& x) const override;
  std::vector<std::vector<double>> predict_batch(std::span<const TokenSeq> xs) const override;
  std::vector<double> attribute(const TokenSeq& x, std::size_t target) const override;
  using Predictor::attribute;

  std::vector<double> logits(const TokenSeq& x) const;
  // Per-coordinate gradient of logit `target` w.r.t. the embedding at each
  // position; N x d, row-major.
  std::vector<double> embedding_gradient(const TokenSeq& x, std::size_t target) const;

  std::size_t row_of(std::string_view token) const;
  std::size_t embed_dim() const { return d_; }
  std::size_t hidden_dim() const { return h_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const std::vector<double>& embeddings() const { return E_; }
  const std::vector<double>& hidden() const { return U_; }
  const std::vector<double>& output() const { return W_; }
  const std::vector<double>& bias() const { return c_; }

  std::string to_json() const;
  static ReferenceClassifier from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static ReferenceClassifier load(const std::filesystem::path& path);

  friend bool operator==(const ReferenceClassifier& a, const ReferenceClassifier& b) {
    return a.labels_ == b.labels_ && a.vocab_ == b.vocab_ && a.d_ == b.d_ && a.h_ == b.h_ &&
           a.E_ == b.E_ && a.U_ == b.U_ && a.W_ == b.W_ && a.c_ == b.c_;
  }

 private:
  void build_caches();

  LabelSpace labels_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::size_t> rows_;
  std::size_t d_ = 0;
  std::size_t h_ = 0;
  std::vector<double> E_, U_, W_, c_;

  // Derived per vocabulary row: W tanh(U e) (|V| x L) and the l1 norm of
  // U^T((1 - h*h) . w_y) (|V| x L). Forward and attribution are then O(N L).
  std::vector<double> row_logits_;
  std::vector<double> row_attrib_;
};

// SGD on cross-entropy, one example at a time, order reshuffled each epoch.
// Deterministic for a given rng_seed. Throws DegenerateDataError when fewer
// than two labels occur in `data`.
ReferenceClassifier train_reference_classifier(std::span<const LabeledExample> data,
                                               const LabelSpace& labels, const TrainConfig& cfg);

double accuracy(const Predictor& f, std::span<const LabeledExample> data);

}  // namespace cedit
