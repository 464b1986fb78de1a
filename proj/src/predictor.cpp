#include "cedit/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cedit/errors.hpp"
#include "cedit/kernels.hpp"
#include "cedit/rng.hpp"

namespace cedit {

namespace {

constexpr std::string_view kFormat = "cedit-reference-classifier";
constexpr int kVersion = 1;

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

}  // namespace

std::vector<std::vector<double>> Predictor::predict_batch(std::span<const TokenSeq> xs) const {
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(predict_proba(x));
  return out;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (embed_dim < 1 || hidden_dim < 1) throw ConfigError("embed_dim and hidden_dim must be >= 1");
  if (!(l2_penalty >= 0.0)) throw ConfigError("l2_penalty must be >= 0");
  if (!(embed_init > 0.0)) throw ConfigError("embed_init must be > 0");
}

ReferenceClassifier::ReferenceClassifier(LabelSpace labels, std::vector<std::string> vocab,
                                         std::size_t embed_dim, std::size_t hidden_dim,
                                         std::vector<double> embeddings,
                                         std::vector<double> hidden, std::vector<double> output,
                                         std::vector<double> bias)
    : labels_(std::move(labels)),
      vocab_(std::move(vocab)),
      d_(embed_dim),
      h_(hidden_dim),
      E_(std::move(embeddings)),
      U_(std::move(hidden)),
      W_(std::move(output)),
      c_(std::move(bias)) {
  const std::size_t L = labels_.size();
  if (d_ < 1 || h_ < 1) throw ConfigError("classifier dimensions must be >= 1");
  if (vocab_.empty() || vocab_[0] != kUnknown) {
    throw ConfigError("vocabulary row 0 must be the unknown token");
  }
  if (E_.size() != vocab_.size() * d_ || U_.size() != h_ * d_ || W_.size() != L * h_ ||
      c_.size() != L) {
    throw ConfigError("classifier parameter shapes do not match dimensions");
  }
  for (const auto* block : {&E_, &U_, &W_, &c_}) {
    for (double v : *block) {
      if (!std::isfinite(v)) throw ConfigError("classifier parameters must be finite");
    }
  }
  for (std::size_t r = 0; r < vocab_.size(); ++r) {
    if (!rows_.emplace(vocab_[r], r).second) throw ConfigError("duplicate vocabulary entry");
  }
  build_caches();
}

void ReferenceClassifier::build_caches() {
  const std::size_t V = vocab_.size(), L = labels_.size();
  row_logits_.assign(V * L, 0.0);
  row_attrib_.assign(V * L, 0.0);
  std::vector<double> hv(h_), deriv(h_), grad(d_);
  for (std::size_t v = 0; v < V; ++v) {
    const double* e = &E_[v * d_];
    for (std::size_t j = 0; j < h_; ++j) {
      double a = 0.0;
      for (std::size_t k = 0; k < d_; ++k) a += U_[j * d_ + k] * e[k];
      hv[j] = std::tanh(a);
    }
    for (std::size_t y = 0; y < L; ++y) {
      double s = 0.0;
      for (std::size_t j = 0; j < h_; ++j) {
        s += W_[y * h_ + j] * hv[j];
        deriv[j] = (1.0 - hv[j] * hv[j]) * W_[y * h_ + j];
      }
      row_logits_[v * L + y] = s;
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t j = 0; j < h_; ++j) {
        for (std::size_t k = 0; k < d_; ++k) grad[k] += U_[j * d_ + k] * deriv[j];
      }
      double l1 = 0.0;
      for (double g : grad) l1 += std::abs(g);
      row_attrib_[v * L + y] = l1;
    }
  }
}

std::size_t ReferenceClassifier::row_of(std::string_view token) const {
  auto it = rows_.find(std::string(token));
  return it == rows_.end() ? 0 : it->second;
}

std::vector<double> ReferenceClassifier::logits(const TokenSeq& x) const {
  if (x.empty()) throw EmptyInputError("cannot classify an empty input");
  const std::size_t L = labels_.size();
  std::vector<double> z(L, 0.0);
  for (const auto& tok : x) {
    const double* s = &row_logits_[row_of(tok) * L];
    for (std::size_t y = 0; y < L; ++y) z[y] += s[y];
  }
  const double inv_n = 1.0 / static_cast<double>(x.size());
  for (std::size_t y = 0; y < L; ++y) z[y] = z[y] * inv_n + c_[y];
  return z;
}

std::vector<double> ReferenceClassifier::predict_proba(const TokenSeq& x) const {
  auto z = logits(x);
  softmax_inplace(z);
  return z;
}

std::vector<std::vector<double>> ReferenceClassifier::predict_batch(
    std::span<const TokenSeq> xs) const {
  return kernels::predict_batch(*this, xs, kernels::Exec::Parallel);
}

std::vector<double> ReferenceClassifier::attribute(const TokenSeq& x, std::size_t target) const {
  if (x.empty()) throw EmptyInputError("cannot attribute an empty input");
  if (target >= labels_.size()) throw LabelError("attribution target out of range");
  const std::size_t L = labels_.size();
  const double inv_n = 1.0 / static_cast<double>(x.size());
  std::vector<double> scores;
  scores.reserve(x.size());
  for (const auto& tok : x) scores.push_back(row_attrib_[row_of(tok) * L + target] * inv_n);
  return scores;
}

std::vector<double> ReferenceClassifier::embedding_gradient(const TokenSeq& x,
                                                            std::size_t target) const {
  if (x.empty()) throw EmptyInputError("cannot attribute an empty input");
  if (target >= labels_.size()) throw LabelError("attribution target out of range");
  const double inv_n = 1.0 / static_cast<double>(x.size());
  std::vector<double> out(x.size() * d_, 0.0);
  std::vector<double> hv(h_);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double* e = &E_[row_of(x[i]) * d_];
    for (std::size_t j = 0; j < h_; ++j) {
      double a = 0.0;
      for (std::size_t k = 0; k < d_; ++k) a += U_[j * d_ + k] * e[k];
      const double t = std::tanh(a);
      const double dj = (1.0 - t * t) * W_[target * h_ + j] * inv_n;
      for (std::size_t k = 0; k < d_; ++k) out[i * d_ + k] += U_[j * d_ + k] * dj;
    }
  }
  return out;
}

std::string ReferenceClassifier::to_json() const {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["labels"] = labels_.names();
  j["embed_dim"] = d_;
  j["hidden_dim"] = h_;
  j["vocab"] = vocab_;
  j["E"] = E_;
  j["U"] = U_;
  j["W"] = W_;
  j["c"] = c_;
  return j.dump();
}

ReferenceClassifier ReferenceClassifier::from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != kFormat) throw ParseError("not a reference classifier checkpoint");
    if (j.value("version", 0) != kVersion) {
      throw ParseError("unsupported classifier checkpoint version");
    }
    return ReferenceClassifier(LabelSpace(j.at("labels").get<std::vector<std::string>>()),
                               j.at("vocab").get<std::vector<std::string>>(),
                               j.at("embed_dim").get<std::size_t>(),
                               j.at("hidden_dim").get<std::size_t>(),
                               j.at("E").get<std::vector<double>>(),
                               j.at("U").get<std::vector<double>>(),
                               j.at("W").get<std::vector<double>>(),
                               j.at("c").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("classifier checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    // A well-formed file with inconsistent shapes is still a bad checkpoint.
    throw ParseError(std::string("classifier checkpoint: ") + e.what());
  }
}

void ReferenceClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_json() << '\n';
}

ReferenceClassifier ReferenceClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

ReferenceClassifier train_reference_classifier(std::span<const LabeledExample> data,
                                               const LabelSpace& labels, const TrainConfig& cfg) {
  cfg.validate();
  std::set<std::string> seen_labels, words;
  std::vector<std::vector<std::string>> docs;
  docs.reserve(data.size());
  for (const auto& ex : data) {
    labels.index_of(ex.label);
    seen_labels.insert(ex.label);
    docs.push_back(tokenize(ex.text).tokens());
    words.insert(docs.back().begin(), docs.back().end());
  }
  if (seen_labels.size() < 2) {
    throw DegenerateDataError("training data must contain at least two distinct labels");
  }
  words.erase(std::string(ReferenceClassifier::kUnknown));

  std::vector<std::string> vocab{std::string(ReferenceClassifier::kUnknown)};
  vocab.insert(vocab.end(), words.begin(), words.end());
  std::map<std::string, std::size_t, std::less<>> row;
  for (std::size_t r = 0; r < vocab.size(); ++r) row.emplace(vocab[r], r);

  const std::size_t V = vocab.size(), d = cfg.embed_dim, h = cfg.hidden_dim, L = labels.size();
  Rng rng(cfg.rng_seed);
  auto init = [&](std::size_t n, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
  };
  auto E = init(V * d, cfg.embed_init);
  auto U = init(h * d, 1.0 / std::sqrt(static_cast<double>(d)));
  auto W = init(L * h, 1.0 / std::sqrt(static_cast<double>(h)));
  std::vector<double> c(L, 0.0);

  std::vector<std::vector<std::size_t>> ids(docs.size());
  std::vector<std::size_t> gold(docs.size());
  for (std::size_t n = 0; n < docs.size(); ++n) {
    for (const auto& w : docs[n]) ids[n].push_back(row.find(w)->second);
    gold[n] = labels.index_of(data[n].label);
  }

  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> a, hv, g(h), z(L), dz(L), dg(h), dU(h * d), dE;
  const double lr = cfg.learning_rate, l2 = cfg.l2_penalty;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t n : order) {
      const auto& x = ids[n];
      const std::size_t N = x.size();
      if (N == 0) continue;
      const double inv_n = 1.0 / static_cast<double>(N);

      hv.assign(N * h, 0.0);
      std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t i = 0; i < N; ++i) {
        const double* e = &E[x[i] * d];
        for (std::size_t j = 0; j < h; ++j) {
          double s = 0.0;
          for (std::size_t k = 0; k < d; ++k) s += U[j * d + k] * e[k];
          hv[i * h + j] = std::tanh(s);
          g[j] += hv[i * h + j] * inv_n;
        }
      }
      for (std::size_t y = 0; y < L; ++y) {
        double s = c[y];
        for (std::size_t j = 0; j < h; ++j) s += W[y * h + j] * g[j];
        z[y] = s;
      }
      softmax_inplace(z);
      for (std::size_t y = 0; y < L; ++y) dz[y] = z[y] - (y == gold[n] ? 1.0 : 0.0);

      std::fill(dg.begin(), dg.end(), 0.0);
      for (std::size_t y = 0; y < L; ++y) {
        for (std::size_t j = 0; j < h; ++j) dg[j] += W[y * h + j] * dz[y];
      }
      for (std::size_t y = 0; y < L; ++y) {
        for (std::size_t j = 0; j < h; ++j) {
          W[y * h + j] -= lr * (dz[y] * g[j] + l2 * W[y * h + j]);
        }
        c[y] -= lr * dz[y];
      }

      std::fill(dU.begin(), dU.end(), 0.0);
      dE.assign(N * d, 0.0);
      for (std::size_t i = 0; i < N; ++i) {
        const double* e = &E[x[i] * d];
        for (std::size_t j = 0; j < h; ++j) {
          const double t = hv[i * h + j];
          const double da = dg[j] * inv_n * (1.0 - t * t);
          for (std::size_t k = 0; k < d; ++k) {
            dU[j * d + k] += da * e[k];
            dE[i * d + k] += U[j * d + k] * da;
          }
        }
      }
      for (std::size_t q = 0; q < h * d; ++q) U[q] -= lr * (dU[q] + l2 * U[q]);
      for (std::size_t i = 0; i < N; ++i) {
        double* e = &E[x[i] * d];
        for (std::size_t k = 0; k < d; ++k) e[k] -= lr * (dE[i * d + k] + l2 * e[k]);
      }
    }
  }
  return ReferenceClassifier(labels, std::move(vocab), d, h, std::move(E), std::move(U),
                             std::move(W), std::move(c));
}

double accuracy(const Predictor& f, std::span<const LabeledExample> data) {
  if (data.empty()) return 0.0;
  std::vector<TokenSeq> xs;
  xs.reserve(data.size());
  for (const auto& ex : data) xs.push_back(tokenize(ex.text));
  const auto probs = f.predict_batch(xs);
  std::size_t hits = 0;
  for (std::size_t n = 0; n < data.size(); ++n) {
    if (f.labels().name(argmax(probs[n])) == data[n].label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace cedit
