#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace cedit {

// Word <-> id map. Id 0 is the sentence-boundary marker, id 1 the unknown
// word; both are never generated.
class Vocabulary {
 public:
  static constexpr std::uint32_t kBoundary = 0;
  static constexpr std::uint32_t kUnknown = 1;

  Vocabulary();

  std::uint32_t add(std::string_view word);
  std::uint32_t id(std::string_view word) const;  // kUnknown when absent
  const std::string& word(std::uint32_t id) const { return words_.at(id); }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

// Interpolation weights for trigram/bigram/unigram estimates, each add-k
// smoothed over the vocabulary (boundary excluded).
struct NgramWeights {
  double trigram = 0.6;
  double bigram = 0.3;
  double unigram = 0.1;
  double add_k = 0.01;

  void validate() const;
};

// Trigram/bigram/unigram counts over word ids. Each sequence is padded on
// the left with two boundary markers.
class NgramTable {
 public:
  void add(std::span<const std::uint32_t> ids);

  // Interpolated p(w | u, v). An order whose history was never observed
  // hands its weight to the lower orders.
  double prob(std::uint32_t u, std::uint32_t v, std::uint32_t w, std::size_t vocab_size,
              const NgramWeights& wts) const;
  // p(. | u, v) over ids [0, vocab_size); boundary and unknown get 0 mass,
  // the rest is renormalized.
  std::vector<double> next_distribution(std::uint32_t u, std::uint32_t v, std::size_t vocab_size,
                                        const NgramWeights& wts) const;

  std::uint64_t unigram(std::uint32_t w) const;
  std::uint64_t total() const { return total_; }

  nlohmann::json to_json() const;
  static NgramTable from_json(const nlohmann::json& j);

  friend bool operator==(const NgramTable&, const NgramTable&) = default;

  // Observed continuations of one history, sorted by word id.
  struct Continuations {
    std::uint64_t total = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> next;

    std::uint32_t count(std::uint32_t w) const;
    void bump(std::uint32_t w);
    friend bool operator==(const Continuations&, const Continuations&) = default;
  };

 private:
  struct Mix {
    double l3, l2, l1;
    const Continuations* tri;
    const Continuations* bi;
  };
  Mix mix(std::uint32_t u, std::uint32_t v, const NgramWeights& wts) const;

  std::unordered_map<std::uint64_t, Continuations> tri_;  // keyed by (u, v)
  std::unordered_map<std::uint32_t, Continuations> bi_;   // keyed by v
  std::vector<std::uint64_t> uni_;
  std::uint64_t total_ = 0;
};

}  // namespace cedit
