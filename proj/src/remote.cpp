#include "cedit/remote.hpp"

#include <cmath>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>

#include "cedit/errors.hpp"

namespace cedit {

using nlohmann::json;

void Endpoint::validate() const {
  if (base_url.rfind("http://", 0) != 0) {
    throw ConfigError("endpoint must be an http:// URL, got '" + base_url + "'");
  }
  if (timeout.count() <= 0) throw ConfigError("endpoint timeout must be > 0");
  if (batch_size < 1) throw ConfigError("endpoint batch size must be >= 1");
  if (max_in_flight < 1) throw ConfigError("endpoint in-flight limit must be >= 1");
}

bool is_remote_spec(std::string_view spec) {
  return spec == "remote" || spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0;
}

Endpoint resolve_endpoint(std::string_view spec) {
  Endpoint ep;
  if (const char* env = std::getenv(kEndpointEnv); env && *env) {
    ep.base_url = env;
  } else if (spec == "remote") {
    throw ConfigError(std::string("backend 'remote' needs ") + kEndpointEnv + " to be set");
  } else {
    ep.base_url = std::string(spec);
  }
  while (!ep.base_url.empty() && ep.base_url.back() == '/') ep.base_url.pop_back();
  ep.validate();
  return ep;
}

// ---------------------------------------------------------------------------

struct HttpClient::State {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path prefix, no trailing slash
  std::counting_semaphore<1024> slots;

  explicit State(std::ptrdiff_t n) : slots(n) {}
};

HttpClient::HttpClient(Endpoint ep) : ep_(std::move(ep)) {
  ep_.validate();
  state_ = std::make_unique<State>(
      static_cast<std::ptrdiff_t>(std::min<std::size_t>(ep_.max_in_flight, 1024)));
  const auto after_scheme = ep_.base_url.find("://") + 3;
  const auto slash = ep_.base_url.find('/', after_scheme);
  state_->origin = ep_.base_url.substr(0, slash);
  state_->prefix = slash == std::string::npos ? "" : ep_.base_url.substr(slash);
}

HttpClient::~HttpClient() = default;

json HttpClient::post(std::string_view path, const json& body) const {
  return call("POST", path, &body);
}

json HttpClient::get(std::string_view path) const { return call("GET", path, nullptr); }

json HttpClient::call(std::string_view method, std::string_view path, const json* body) const {
  const std::string full = state_->prefix + std::string(path);
  const std::string payload = body ? body->dump() : std::string();
  auto delay = ep_.backoff;
  std::string last_failure;

  for (std::size_t attempt = 0; attempt <= ep_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    httplib::Result res;
    {
      state_->slots.acquire();
      httplib::Client cli(state_->origin);
      cli.set_connection_timeout(ep_.timeout);
      cli.set_read_timeout(ep_.timeout);
      cli.set_write_timeout(ep_.timeout);
      res = method == "GET" ? cli.Get(full) : cli.Post(full, payload, "application/json");
      state_->slots.release();
    }
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status) + ": " + res->body;
      continue;
    }
    if (res->status != 200) {
      throw BackendError(std::string(method) + " " + full + " answered HTTP " +
                         std::to_string(res->status) + ": " + res->body);
    }
    try {
      return json::parse(res->body);
    } catch (const json::exception& e) {
      throw ProtocolError(full + ": response is not JSON (" + e.what() + ")");
    }
  }
  throw BackendError(std::string(method) + " " + ep_.base_url + full + " failed after " +
                     std::to_string(ep_.max_retries + 1) + " attempts; last: " + last_failure);
}

ServerMeta fetch_meta(const HttpClient& http) {
  const json j = http.get("/v1/meta");
  try {
    ServerMeta m{j.at("labels").get<std::vector<std::string>>(), j.at("name").get<std::string>(),
                 j.at("version").get<std::string>()};
    if (m.labels.size() < 2) throw ProtocolError("/v1/meta lists fewer than two labels");
    return m;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("/v1/meta: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Validation

namespace {

template <class T>
T field(const json& j, const char* key, const char* where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ProtocolError(std::string(where) + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

std::vector<std::vector<double>> validate_predict_response(const json& j, std::size_t n_texts,
                                                           const LabelSpace& labels) {
  const auto names = field<std::vector<std::string>>(j, "labels", "/v1/predict");
  auto probs = field<std::vector<std::vector<double>>>(j, "probs", "/v1/predict");
  if (probs.size() != n_texts || names.size() != n_texts) {
    throw ProtocolError("/v1/predict returned " + std::to_string(probs.size()) +
                        " distributions for " + std::to_string(n_texts) + " texts");
  }
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    if (p.size() != labels.size()) {
      throw ProtocolError("/v1/predict distribution has " + std::to_string(p.size()) +
                          " entries, expected " + std::to_string(labels.size()));
    }
    double sum = 0.0;
    for (double x : p) {
      if (!std::isfinite(x) || x < 0.0) throw ProtocolError("/v1/predict probability out of range");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ProtocolError("/v1/predict probabilities sum to " + std::to_string(sum));
    }
    if (!labels.contains(names[i])) {
      throw ProtocolError("/v1/predict named unknown label '" + names[i] + "'");
    }
  }
  return probs;
}

std::vector<double> validate_attribute_response(const json& j, std::size_t n_tokens) {
  auto scores = field<std::vector<double>>(j, "scores", "/v1/attribute");
  if (scores.size() != n_tokens) {
    throw ProtocolError("/v1/attribute returned " + std::to_string(scores.size()) +
                        " scores for " + std::to_string(n_tokens) + " tokens");
  }
  for (double s : scores) {
    if (!std::isfinite(s) || s < 0.0) throw ProtocolError("/v1/attribute score is negative");
  }
  return scores;
}

std::vector<Generation> validate_infill_response(const json& j, std::size_t num_return,
                                                 std::size_t n_spans) {
  if (!j.contains("candidates") || !j.at("candidates").is_array()) {
    throw ProtocolError("/v1/infill: missing candidates array");
  }
  const auto& cands = j.at("candidates");
  if (cands.size() != num_return) {
    throw ProtocolError("/v1/infill returned " + std::to_string(cands.size()) +
                        " candidates, expected " + std::to_string(num_return));
  }
  std::vector<Generation> out;
  for (const auto& c : cands) {
    if (c.contains("raw")) {
      out.emplace_back(field<std::string>(c, "raw", "/v1/infill"));
    } else if (c.contains("spans")) {
      const auto spans = field<std::vector<std::string>>(c, "spans", "/v1/infill");
      if (spans.size() != n_spans) {
        throw ProtocolError("/v1/infill candidate has " + std::to_string(spans.size()) +
                            " spans, expected " + std::to_string(n_spans));
      }
      InfillSet set;
      for (std::size_t k = 0; k < spans.size(); ++k) set[k] = tokenize(spans[k]);
      out.emplace_back(std::move(set));
    } else {
      throw ProtocolError("/v1/infill candidate has neither spans nor raw");
    }
  }
  return out;
}

double validate_pll_response(const json& j) {
  const double loss = field<double>(j, "loss", "/v1/pll");
  if (!std::isfinite(loss) || loss < 0.0) {
    throw ProtocolError("/v1/pll loss must be finite and >= 0");
  }
  return loss;
}

// ---------------------------------------------------------------------------

RemotePredictor::RemotePredictor(Endpoint ep) : http_(std::move(ep)) {
  meta_ = fetch_meta(http_);
  labels_ = LabelSpace(meta_.labels);
}

std::vector<double> RemotePredictor::predict_proba(const TokenSeq& x) const {
  if (x.empty()) throw EmptyInputError("cannot predict on an empty input");
  return predict_batch(std::span<const TokenSeq>(&x, 1)).front();
}

std::vector<std::vector<double>> RemotePredictor::predict_batch(
    std::span<const TokenSeq> xs) const {
  std::vector<std::vector<double>> out;
  out.reserve(xs.size());
  const std::size_t bs = http_.endpoint().batch_size;
  for (std::size_t from = 0; from < xs.size(); from += bs) {
    const std::size_t to = std::min(xs.size(), from + bs);
    std::vector<std::string> texts;
    for (std::size_t i = from; i < to; ++i) {
      if (xs[i].empty()) throw EmptyInputError("cannot predict on an empty input");
      texts.push_back(xs[i].str());
    }
    const json res = http_.post("/v1/predict", {{"texts", texts}});
    auto probs = validate_predict_response(res, texts.size(), labels_);
    std::move(probs.begin(), probs.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<double> RemotePredictor::attribute(const TokenSeq& x, std::size_t target) const {
  if (x.empty()) throw EmptyInputError("cannot attribute an empty input");
  const json res =
      http_.post("/v1/attribute", {{"tokens", x.tokens()}, {"target_label", labels_.name(target)}});
  return validate_attribute_response(res, x.size());
}

RemoteEditor::RemoteEditor(Endpoint ep) : http_(std::move(ep)) {}

std::vector<Generation> RemoteEditor::generate(const MaskedText& masked,
                                               const std::optional<std::string>& target,
                                               const SamplingParams& params, Rng&) const {
  json body;
  body["masked"] = render_masked(masked);
  body["target_label"] = target ? json(*target) : json(nullptr);
  body["num_return"] = params.num_samples;
  body["top_k"] = params.top_k;
  body["top_p"] = params.top_p;
  return validate_infill_response(http_.post("/v1/infill", body), params.num_samples,
                                  masked.spans.size());
}

RemoteFluencyScorer::RemoteFluencyScorer(Endpoint ep) : http_(std::move(ep)) {}

double RemoteFluencyScorer::pseudo_loss(const TokenSeq& x) const {
  if (x.empty()) throw EmptyInputError("pseudo-loss of an empty text");
  return validate_pll_response(http_.post("/v1/pll", {{"text", x.str()}}));
}

}  // namespace cedit
