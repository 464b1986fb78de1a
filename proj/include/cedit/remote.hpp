#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cedit/editor.hpp"
#include "cedit/metrics.hpp"
#include "cedit/predictor.hpp"

namespace cedit {

inline constexpr const char* kEndpointEnv = "CEDIT_ENDPOINT";

struct Endpoint {
  std::string base_url;  // http://host:port with an optional path prefix
  std::chrono::milliseconds timeout{30000};
  std::size_t max_retries = 3;
  std::chrono::milliseconds backoff{200};  // doubled after every retry
  std::size_t batch_size = 32;             // texts per /v1/predict request
  std::size_t max_in_flight = 8;

  void validate() const;
};

// `spec` is "remote" or an http URL. A set CEDIT_ENDPOINT replaces the URL.
Endpoint resolve_endpoint(std::string_view spec);
bool is_remote_spec(std::string_view spec);

struct ServerMeta {
  std::vector<std::string> labels;
  std::string name;
  std::string version;
};

// JSON over HTTP with retries. 5xx answers and transport failures are retried
// with exponential backoff, then raise BackendError; other non-200 answers
// raise BackendError at once; an unparsable body raises ProtocolError.
class HttpClient {
 public:
  explicit HttpClient(Endpoint ep);
  ~HttpClient();
  HttpClient(const HttpClient&) = delete;
  HttpClient& operator=(const HttpClient&) = delete;

  nlohmann::json post(std::string_view path, const nlohmann::json& body) const;
  nlohmann::json get(std::string_view path) const;
  const Endpoint& endpoint() const { return ep_; }

 private:
  struct State;
  nlohmann::json call(std::string_view method, std::string_view path,
                      const nlohmann::json* body) const;

  Endpoint ep_;
  std::unique_ptr<State> state_;
};

ServerMeta fetch_meta(const HttpClient& http);

class RemotePredictor : public Predictor {
 public:
  // Reads the label space from /v1/meta.
  explicit RemotePredictor(Endpoint ep);

  const LabelSpace& labels() const override { return labels_; }
  std::vector<double> predict_proba(const TokenSeq& x) const override;
  std::vector<std::vector<double>> predict_batch(std::span<const TokenSeq> xs) const override;
  std::vector<double> attribute(const TokenSeq& x, std::size_t target) const override;
  using Predictor::attribute;

  const ServerMeta& meta() const { return meta_; }

 private:
  HttpClient http_;
  ServerMeta meta_;
  LabelSpace labels_;
};

class RemoteEditor : public Editor {
 public:
  explicit RemoteEditor(Endpoint ep);

  // Structured candidates must carry one span per sentinel; raw candidates
  // are returned untouched for parse/repair downstream.
  std::vector<Generation> generate(const MaskedText& masked,
                                   const std::optional<std::string>& target,
                                   const SamplingParams& params, Rng& rng) const override;

 private:
  HttpClient http_;
};

class RemoteFluencyScorer : public FluencyScorer {
 public:
  explicit RemoteFluencyScorer(Endpoint ep);
  double pseudo_loss(const TokenSeq& x) const override;

 private:
  HttpClient http_;
};

// Response validators, shared by the clients and the tests. Each throws
// ProtocolError describing the first violation.
std::vector<std::vector<double>> validate_predict_response(const nlohmann::json& j,
                                                           std::size_t n_texts,
                                                           const LabelSpace& labels);
std::vector<double> validate_attribute_response(const nlohmann::json& j, std::size_t n_tokens);
std::vector<Generation> validate_infill_response(const nlohmann::json& j, std::size_t num_return,
                                                 std::size_t n_spans);
double validate_pll_response(const nlohmann::json& j);

}  // namespace cedit
