#include "cedit/ngram.hpp"

#include <algorithm>
#include <cmath>

#include "cedit/errors.hpp"

namespace cedit {

namespace {

constexpr std::uint64_t pack2(std::uint64_t u, std::uint64_t v) { return (u << 32) | v; }

using Pairs = std::vector<std::pair<std::uint32_t, std::uint32_t>>;

template <class Map>
nlohmann::json dump_map(const Map& m) {
  std::vector<typename Map::key_type> keys;
  keys.reserve(m.size());
  for (const auto& kv : m) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  nlohmann::json out = nlohmann::json::array();
  for (auto k : keys) {
    const auto& c = m.at(k);
    out.push_back({k, c.next});
  }
  return out;
}

template <class Map>
void load_map(const nlohmann::json& j, Map& m) {
  for (const auto& entry : j) {
    NgramTable::Continuations c;
    c.next = entry.at(1).get<Pairs>();
    for (const auto& [w, n] : c.next) c.total += n;
    m.emplace(entry.at(0).get<typename Map::key_type>(), std::move(c));
  }
}

}  // namespace

Vocabulary::Vocabulary() {
  add("<s>");
  add("<unk>");
}

std::uint32_t Vocabulary::add(std::string_view word) {
  auto [it, inserted] = ids_.emplace(std::string(word), static_cast<std::uint32_t>(words_.size()));
  if (inserted) words_.emplace_back(word);
  return it->second;
}

std::uint32_t Vocabulary::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? kUnknown : it->second;
}

void NgramWeights::validate() const {
  if (trigram < 0 || bigram < 0 || unigram < 0) throw ConfigError("n-gram weights must be >= 0");
  if (std::abs(trigram + bigram + unigram - 1.0) > 1e-9) {
    throw ConfigError("n-gram weights must sum to 1");
  }
  if (!(add_k > 0)) throw ConfigError("add-k smoothing constant must be > 0");
}

std::uint32_t NgramTable::Continuations::count(std::uint32_t w) const {
  auto it = std::lower_bound(next.begin(), next.end(), std::make_pair(w, 0u));
  return (it != next.end() && it->first == w) ? it->second : 0;
}

void NgramTable::Continuations::bump(std::uint32_t w) {
  auto it = std::lower_bound(next.begin(), next.end(), std::make_pair(w, 0u));
  if (it != next.end() && it->first == w) {
    ++it->second;
  } else {
    next.insert(it, {w, 1});
  }
  ++total;
}

void NgramTable::add(std::span<const std::uint32_t> ids) {
  std::uint32_t u = Vocabulary::kBoundary, v = Vocabulary::kBoundary;
  for (std::uint32_t w : ids) {
    tri_[pack2(u, v)].bump(w);
    bi_[v].bump(w);
    if (uni_.size() <= w) uni_.resize(w + 1, 0);
    ++uni_[w];
    ++total_;
    u = v;
    v = w;
  }
}

std::uint64_t NgramTable::unigram(std::uint32_t w) const { return w < uni_.size() ? uni_[w] : 0; }

NgramTable::Mix NgramTable::mix(std::uint32_t u, std::uint32_t v, const NgramWeights& wts) const {
  Mix m{0.0, 0.0, wts.unigram, nullptr, nullptr};
  if (auto it = tri_.find(pack2(u, v)); it != tri_.end() && it->second.total > 0) {
    m.tri = &it->second;
    m.l3 = wts.trigram;
  }
  if (auto it = bi_.find(v); it != bi_.end() && it->second.total > 0) {
    m.bi = &it->second;
    m.l2 = wts.bigram;
  }
  const double norm = m.l3 + m.l2 + m.l1;
  if (norm > 0) {
    m.l3 /= norm;
    m.l2 /= norm;
    m.l1 /= norm;
  } else {
    m.l1 = 1.0;
  }
  return m;
}

double NgramTable::prob(std::uint32_t u, std::uint32_t v, std::uint32_t w,
                        std::size_t vocab_size, const NgramWeights& wts) const {
  const double k = wts.add_k;
  const double V = static_cast<double>(vocab_size > 1 ? vocab_size - 1 : 1);
  const Mix m = mix(u, v, wts);
  double p = m.l1 * (static_cast<double>(unigram(w)) + k) / (static_cast<double>(total_) + k * V);
  if (m.tri) {
    p += m.l3 * (m.tri->count(w) + k) / (static_cast<double>(m.tri->total) + k * V);
  }
  if (m.bi) {
    p += m.l2 * (m.bi->count(w) + k) / (static_cast<double>(m.bi->total) + k * V);
  }
  return p;
}

std::vector<double> NgramTable::next_distribution(std::uint32_t u, std::uint32_t v,
                                                  std::size_t vocab_size,
                                                  const NgramWeights& wts) const {
  const double k = wts.add_k;
  const double V = static_cast<double>(vocab_size > 1 ? vocab_size - 1 : 1);
  const Mix m = mix(u, v, wts);
  const double uni_den = static_cast<double>(total_) + k * V;
  const double tri_den = m.tri ? static_cast<double>(m.tri->total) + k * V : 1.0;
  const double bi_den = m.bi ? static_cast<double>(m.bi->total) + k * V : 1.0;
  const double floor = (m.tri ? m.l3 * k / tri_den : 0.0) + (m.bi ? m.l2 * k / bi_den : 0.0);

  std::vector<double> p(vocab_size, 0.0);
  for (std::uint32_t w = 2; w < vocab_size; ++w) {
    p[w] = floor + m.l1 * (static_cast<double>(unigram(w)) + k) / uni_den;
  }
  if (m.tri) {
    for (const auto& [w, c] : m.tri->next) {
      if (w >= 2 && w < vocab_size) p[w] += m.l3 * c / tri_den;
    }
  }
  if (m.bi) {
    for (const auto& [w, c] : m.bi->next) {
      if (w >= 2 && w < vocab_size) p[w] += m.l2 * c / bi_den;
    }
  }
  double sum = 0.0;
  for (double x : p) sum += x;
  if (sum > 0) {
    for (auto& x : p) x /= sum;
  }
  return p;
}

nlohmann::json NgramTable::to_json() const {
  nlohmann::json j;
  j["tri"] = dump_map(tri_);
  j["bi"] = dump_map(bi_);
  j["uni"] = uni_;
  j["total"] = total_;
  return j;
}

NgramTable NgramTable::from_json(const nlohmann::json& j) {
  NgramTable t;
  load_map(j.at("tri"), t.tri_);
  load_map(j.at("bi"), t.bi_);
  t.uni_ = j.at("uni").get<std::vector<std::uint64_t>>();
  t.total_ = j.at("total").get<std::uint64_t>();
  return t;
}

}  // namespace cedit
