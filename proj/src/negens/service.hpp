#pragma once

// HTTP fan-out aggregation: a classify request is forwarded to every model
// endpoint concurrently, the returned confidence vectors are combined, and the
// decision is returned together with the status of each model.
//
//   POST /classify      body: opaque payload, forwarded verbatim
//   GET  /healthz       liveness
//
// Model endpoints (and the mock below) speak
//
//   POST /invocations   body: payload  ->  {"confidences": [K floats]}

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "negens/combiner.hpp"

namespace httplib {
class Server;
}

namespace negens {

inline constexpr const char* kConfigEnvVar = "NEGENS_SERVICE_CONFIG";

struct EndpointConfig {
  std::string model_id;
  std::string url;  // http://host:port/path
  double validation_accuracy = 1.0;
  int timeout_ms = 1000;
};

struct AggregationPolicy {
  Method method = Method::kNegation;
  std::size_t quorum = 1;
  TiePolicy tie_policy = TiePolicy::kMeanConfidence;
};

struct ServiceConfig {
  std::vector<EndpointConfig> endpoints;
  AggregationPolicy policy;
  // When unset, the first successful endpoint (in config order) fixes K.
  std::optional<std::size_t> class_count;
};

void ValidateServiceConfig(const ServiceConfig& config);
ServiceConfig ParseServiceConfig(const std::string& text);
ServiceConfig LoadServiceConfig(const std::filesystem::path& path);
// The environment variable, when set and nonempty, replaces `flag_path`.
std::filesystem::path ResolveConfigPath(const std::string& flag_path);

enum class EndpointStatus { kOk, kTimeout, kError };
std::string_view EndpointStatusName(EndpointStatus status);

struct EndpointResult {
  std::string model_id;
  EndpointStatus status = EndpointStatus::kError;
  PredictionVector vector;  // valid when status == kOk
  std::string cause;
  double elapsed_ms = 0.0;
};

// Issues every request concurrently; one endpoint's failure never affects
// another's slot. Results are index-aligned with `endpoints`.
std::vector<EndpointResult> FanOut(const std::vector<EndpointConfig>& endpoints,
                                   const std::string& payload,
                                   const std::string& content_type);

// Parses a model response body into a vector, clamping within tolerance.
PredictionVector ParseModelResponse(const std::string& body);

struct ClassifyOutcome {
  std::optional<Decision> decision;  // empty when the quorum was not met
  std::vector<EndpointResult> results;
  std::size_t successes = 0;
  std::size_t quorum = 0;

  int http_status() const { return decision ? 200 : 503; }
  nlohmann::json ToJson() const;
};

class Aggregator {
 public:
  explicit Aggregator(ServiceConfig config);

  ClassifyOutcome Classify(const std::string& payload,
                           const std::string& content_type) const;
  // Combines already collected results; used by Classify and usable offline.
  ClassifyOutcome Aggregate(std::vector<EndpointResult> results) const;

  const ServiceConfig& config() const { return config_; }

 private:
  ServiceConfig config_;
};

using LogSink = std::function<void(const std::string&)>;

// Owns an httplib server listening on a background thread.
class HttpServerHandle {
 public:
  HttpServerHandle();
  ~HttpServerHandle();
  HttpServerHandle(const HttpServerHandle&) = delete;
  HttpServerHandle& operator=(const HttpServerHandle&) = delete;

  // port 0 binds an ephemeral port. Throws on bind failure.
  void Start(const std::string& host, int port);
  int port() const { return port_; }
  void Stop();
  // Blocks until the server stops. Not to be combined with a concurrent Stop.
  void Wait();

 protected:
  httplib::Server& server() { return *server_; }
  void InstallLogger(LogSink sink);

 private:
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

class AggregationService : public HttpServerHandle {
 public:
  explicit AggregationService(ServiceConfig config, LogSink log = nullptr);
  ~AggregationService();

  const Aggregator& aggregator() const { return aggregator_; }

 private:
  Aggregator aggregator_;
};

enum class UnknownPayload { kNotFound, kUniform };

struct MockFixture {
  std::size_t class_count = 0;
  // Keyed by the payload itself or by "fnv1a:<16 hex digits>" of it.
  std::map<std::string, PredictionVector> vectors;
  int latency_ms = 0;
  double failure_rate = 0.0;
  UnknownPayload unknown = UnknownPayload::kNotFound;
  std::uint64_t seed = 0;
};

std::string PayloadHash(const std::string& payload);
MockFixture ParseMockFixture(const std::string& text);
MockFixture LoadMockFixture(const std::filesystem::path& path);

class MockModelEndpoint : public HttpServerHandle {
 public:
  explicit MockModelEndpoint(MockFixture fixture, LogSink log = nullptr);
  ~MockModelEndpoint();

  std::uint64_t requests_served() const { return requests_.load(); }

 private:
  MockFixture fixture_;
  std::atomic<std::uint64_t> requests_{0};
};

}  // namespace negens
