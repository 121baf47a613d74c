#include "negens/service.hpp"

#include <cstdio>
#include <cstdlib>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "negens/error.hpp"
#include "negens/io_formats.hpp"
#include "negens/synthetic.hpp"

namespace negens {
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host:port
  std::string path;
};

ParsedUrl ParseUrl(const std::string& url) {
  static const std::regex kUrl(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw ValidationError("unsupported endpoint url '" + url +
                          "' (expected http://host:port/path)");
  }
  return {m[1].str(), m[2].matched ? m[2].str() : "/invocations"};
}

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

EndpointResult CallEndpoint(const EndpointConfig& ep, const std::string& payload,
                            const std::string& content_type) {
  EndpointResult r;
  r.model_id = ep.model_id;
  const auto start = Clock::now();
  try {
    const auto url = ParseUrl(ep.url);
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::milliseconds(ep.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(url.path, payload, content_type);
    r.elapsed_ms = MillisSince(start);
    if (!res) {
      const auto err = res.error();
      r.status = (err == httplib::Error::ConnectionTimeout ||
                  r.elapsed_ms >= ep.timeout_ms)
                     ? EndpointStatus::kTimeout
                     : EndpointStatus::kError;
      r.cause = httplib::to_string(err);
      return r;
    }
    if (res->status != 200) {
      r.status = EndpointStatus::kError;
      r.cause = "HTTP " + std::to_string(res->status);
      return r;
    }
    r.vector = ParseModelResponse(res->body);
    r.status = EndpointStatus::kOk;
  } catch (const std::exception& e) {
    r.elapsed_ms = MillisSince(start);
    r.status = EndpointStatus::kError;
    r.cause = e.what();
  }
  return r;
}

std::uint64_t Fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

void ValidateServiceConfig(const ServiceConfig& config) {
  if (config.endpoints.empty()) {
    throw ValidationError("service config: at least one endpoint required");
  }
  std::map<std::string, int> seen;
  for (const auto& ep : config.endpoints) {
    if (ep.model_id.empty()) throw ValidationError("endpoint without model_id");
    if (seen[ep.model_id]++) {
      throw ValidationError("duplicate endpoint model_id '" + ep.model_id + "'");
    }
    if (!(ep.validation_accuracy > 0.0 && ep.validation_accuracy <= 1.0)) {
      throw ValidationError("endpoint '" + ep.model_id +
                            "' validation_accuracy out of range (0, 1]");
    }
    if (ep.timeout_ms <= 0) {
      throw ValidationError("endpoint '" + ep.model_id + "' timeout must be > 0");
    }
    ParseUrl(ep.url);
  }
  if (config.policy.quorum < 1 ||
      config.policy.quorum > config.endpoints.size()) {
    throw ValidationError("quorum must lie in [1, " +
                          std::to_string(config.endpoints.size()) + "]");
  }
  if (config.class_count && *config.class_count < 2) {
    throw ValidationError("class_count must be >= 2");
  }
}

ServiceConfig ParseServiceConfig(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("service config: ") + e.what());
  }
  ServiceConfig cfg;
  try {
    for (const auto& e : doc.at("endpoints")) {
      EndpointConfig ep;
      ep.model_id = e.at("model_id").get<std::string>();
      ep.url = e.at("url").get<std::string>();
      ep.validation_accuracy = e.at("validation_accuracy").get<double>();
      ep.timeout_ms = e.value("timeout_ms", 1000);
      cfg.endpoints.push_back(std::move(ep));
    }
    const json policy = doc.value("policy", json::object());
    const auto method = policy.value("method", std::string("negation"));
    const auto tie = policy.value("tie", std::string("mean-conf"));
    auto m = ParseMethod(method);
    auto t = ParseTiePolicy(tie);
    if (!m) throw ValidationError("service config: unknown method '" + method + "'");
    if (!t) throw ValidationError("service config: unknown tie policy '" + tie + "'");
    cfg.policy.method = *m;
    cfg.policy.tie_policy = *t;
    cfg.policy.quorum = policy.value("quorum", cfg.endpoints.size());
    if (doc.contains("class_count")) {
      cfg.class_count = doc.at("class_count").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("service config: ") + e.what());
  }
  ValidateServiceConfig(cfg);
  return cfg;
}

ServiceConfig LoadServiceConfig(const std::filesystem::path& path) {
  return ParseServiceConfig(ReadFile(path));
}

std::filesystem::path ResolveConfigPath(const std::string& flag_path) {
  const char* env = std::getenv(kConfigEnvVar);
  if (env && *env) return env;
  if (flag_path.empty()) {
    throw ValidationError(std::string("no config given (--config or ") +
                          kConfigEnvVar + ")");
  }
  return flag_path;
}

std::string_view EndpointStatusName(EndpointStatus status) {
  switch (status) {
    case EndpointStatus::kOk: return "ok";
    case EndpointStatus::kTimeout: return "timeout";
    case EndpointStatus::kError: return "error";
  }
  return "error";
}

PredictionVector ParseModelResponse(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("model response: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("confidences") ||
      !doc["confidences"].is_array()) {
    throw ParseError("model response: missing confidences array");
  }
  PredictionVector v;
  for (const auto& x : doc["confidences"]) {
    if (!x.is_number()) throw ParseError("model response: non-numeric confidence");
    v.confidences.push_back(ClampConfidence(x.get<double>(), "model response"));
  }
  if (v.confidences.empty()) throw ParseError("model response: empty confidences");
  return v;
}

std::vector<EndpointResult> FanOut(const std::vector<EndpointConfig>& endpoints,
                                   const std::string& payload,
                                   const std::string& content_type) {
  if (endpoints.empty()) throw ValidationError("fan-out needs at least one endpoint");
  std::vector<EndpointResult> results(endpoints.size());
  std::vector<std::thread> workers;
  workers.reserve(endpoints.size());
  for (std::size_t i = 0; i < endpoints.size(); ++i) {
    workers.emplace_back([&, i] {
      results[i] = CallEndpoint(endpoints[i], payload, content_type);
    });
  }
  for (auto& w : workers) w.join();
  return results;
}

json ClassifyOutcome::ToJson() const {
  json models = json::array();
  for (const auto& r : results) {
    json entry = {{"model_id", r.model_id},
                  {"status", std::string(EndpointStatusName(r.status))}};
    if (r.status != EndpointStatus::kOk) entry["cause"] = r.cause;
    models.push_back(std::move(entry));
  }
  if (!decision) {
    return {{"error", "aggregation_failed"},
            {"quorum", quorum},
            {"successes", successes},
            {"models", std::move(models)}};
  }
  return {{"predicted", decision->predicted},
          {"method", std::string(MethodName(decision->method))},
          {"scores", decision->scores},
          {"tie_broken", decision->tie_broken},
          {"models", std::move(models)}};
}

Aggregator::Aggregator(ServiceConfig config) : config_(std::move(config)) {
  ValidateServiceConfig(config_);
}

ClassifyOutcome Aggregator::Classify(const std::string& payload,
                                     const std::string& content_type) const {
  return Aggregate(FanOut(config_.endpoints, payload, content_type));
}

ClassifyOutcome Aggregator::Aggregate(std::vector<EndpointResult> results) const {
  if (results.size() != config_.endpoints.size()) {
    throw AlignmentError("result count differs from endpoint count");
  }
  std::optional<std::size_t> k = config_.class_count;
  for (const auto& r : results) {
    if (r.status == EndpointStatus::kOk && !k) k = r.vector.size();
  }
  ClassifyOutcome out;
  out.quorum = config_.policy.quorum;
  EnsembleFrame frame;
  frame.sample_id = "request";
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    if (r.status != EndpointStatus::kOk) continue;
    if (r.vector.size() != *k) {
      r.status = EndpointStatus::kError;
      r.cause = "class count mismatch: got " + std::to_string(r.vector.size()) +
                ", expected " + std::to_string(*k);
      continue;
    }
    frame.models.push_back(
        {config_.endpoints[i].model_id, config_.endpoints[i].validation_accuracy});
    frame.predictions.push_back(r.vector);
  }
  out.successes = frame.predictions.size();
  if (out.successes >= out.quorum) {
    out.decision = Combine(frame, config_.policy.method, config_.policy.tie_policy);
  }
  out.results = std::move(results);
  return out;
}

HttpServerHandle::HttpServerHandle()
    : server_(std::make_unique<httplib::Server>()) {
  server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"status\": \"ok\"}", "application/json");
  });
}

HttpServerHandle::~HttpServerHandle() { Stop(); }

void HttpServerHandle::Start(const std::string& host, int port) {
  if (port == 0) {
    port_ = server_->bind_to_any_port(host);
    if (port_ <= 0) throw Error(ErrorKind::kIo, "cannot bind " + host);
  } else {
    if (!server_->bind_to_port(host, port)) {
      throw Error(ErrorKind::kIo,
                  "cannot bind " + host + ":" + std::to_string(port));
    }
    port_ = port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServerHandle::Stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

void HttpServerHandle::Wait() {
  if (thread_.joinable()) thread_.join();
}

void HttpServerHandle::InstallLogger(LogSink sink) {
  if (!sink) return;
  server_->set_logger([sink = std::move(sink)](const httplib::Request& req,
                                               const httplib::Response& res) {
    sink(req.method + " " + req.path + " " + std::to_string(res.status) + " " +
         std::to_string(req.body.size()) + "B");
  });
}

AggregationService::~AggregationService() { Stop(); }

AggregationService::AggregationService(ServiceConfig config, LogSink log)
    : aggregator_(std::move(config)) {
  InstallLogger(std::move(log));
  server().Post("/classify", [this](const httplib::Request& req,
                                    httplib::Response& res) {
    try {
      const auto content_type = req.has_header("Content-Type")
                                    ? req.get_header_value("Content-Type")
                                    : std::string("application/octet-stream");
      const auto outcome = aggregator_.Classify(req.body, content_type);
      res.status = outcome.http_status();
      res.set_content(outcome.ToJson().dump(), "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

std::string PayloadHash(const std::string& payload) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx",
                static_cast<unsigned long long>(Fnv1a(payload)));
  return buf;
}

MockFixture ParseMockFixture(const std::string& text) {
  MockFixture f;
  try {
    const json doc = json::parse(text);
    f.class_count = doc.at("class_count").get<std::size_t>();
    f.latency_ms = doc.value("latency_ms", 0);
    f.failure_rate = doc.value("failure_rate", 0.0);
    f.seed = doc.value("seed", std::uint64_t{0});
    const auto unknown = doc.value("unknown", std::string("404"));
    if (unknown == "404") {
      f.unknown = UnknownPayload::kNotFound;
    } else if (unknown == "uniform") {
      f.unknown = UnknownPayload::kUniform;
    } else {
      throw ValidationError("mock fixture: unknown must be '404' or 'uniform'");
    }
    for (const auto& [key, arr] : doc.at("vectors").items()) {
      PredictionVector v;
      for (const auto& x : arr) {
        v.confidences.push_back(ClampConfidence(x.get<double>(), "mock fixture"));
      }
      if (v.size() != f.class_count) {
        throw ValidationError("mock fixture: vector '" + key + "' has " +
                              std::to_string(v.size()) + " classes, expected " +
                              std::to_string(f.class_count));
      }
      f.vectors.emplace(key, std::move(v));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("mock fixture: ") + e.what());
  }
  if (f.class_count < 1) throw ValidationError("mock fixture: class_count must be >= 1");
  if (f.latency_ms < 0) throw ValidationError("mock fixture: latency_ms must be >= 0");
  if (!(f.failure_rate >= 0.0 && f.failure_rate <= 1.0)) {
    throw ValidationError("mock fixture: failure_rate must lie in [0, 1]");
  }
  return f;
}

MockFixture LoadMockFixture(const std::filesystem::path& path) {
  return ParseMockFixture(ReadFile(path));
}

MockModelEndpoint::~MockModelEndpoint() { Stop(); }

MockModelEndpoint::MockModelEndpoint(MockFixture fixture, LogSink log)
    : fixture_(std::move(fixture)) {
  InstallLogger(std::move(log));
  server().Post("/invocations", [this](const httplib::Request& req,
                                       httplib::Response& res) {
    const std::uint64_t n = requests_.fetch_add(1);
    if (fixture_.latency_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(fixture_.latency_ms));
    }
    if (fixture_.failure_rate > 0.0 &&
        RandomStream(fixture_.seed, 0xfa11, n).Uniform() < fixture_.failure_rate) {
      res.status = 500;
      res.set_content("{\"error\": \"injected failure\"}", "application/json");
      return;
    }
    auto it = fixture_.vectors.find(req.body);
    if (it == fixture_.vectors.end()) it = fixture_.vectors.find(PayloadHash(req.body));
    PredictionVector v;
    if (it != fixture_.vectors.end()) {
      v = it->second;
    } else if (fixture_.unknown == UnknownPayload::kUniform) {
      v.confidences.assign(fixture_.class_count,
                           1.0 / static_cast<double>(fixture_.class_count));
    } else {
      res.status = 404;
      res.set_content("{\"error\": \"unknown payload\"}", "application/json");
      return;
    }
    res.set_content("{\"confidences\": " + WriteConfidenceArray(v) + "}",
                    "application/json");
  });
}

}  // namespace negens
