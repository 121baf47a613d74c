// negens command-line tool. Links only against the C API.
//
// Exit codes: 0 success, 2 input or validation error, 1 internal error.

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "negens/negens.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

struct CliFailure {
  int code;
};

int ExitCodeFor(negens_status status) {
  return status == NEGENS_ERR_INTERNAL ? kExitInternal : kExitInput;
}

void Check(negens_status status) {
  if (status == NEGENS_OK) return;
  std::fprintf(stderr, "negens: error: %s\n", negens_last_error());
  throw CliFailure{ExitCodeFor(status)};
}

[[noreturn]] void InputError(const std::string& message) {
  std::fprintf(stderr, "negens: error: %s\n", message.c_str());
  throw CliFailure{kExitInput};
}

negens_method ParseMethodFlag(const std::string& name) {
  negens_method m;
  Check(negens_parse_method(name.c_str(), &m));
  return m;
}

negens_tie_policy ParseTieFlag(const std::string& name) {
  negens_tie_policy t;
  Check(negens_parse_tie_policy(name.c_str(), &t));
  return t;
}

negens_report_format ParseFormatFlag(const std::string& name) {
  if (name == "text") return NEGENS_FORMAT_TEXT;
  if (name == "csv") return NEGENS_FORMAT_CSV;
  InputError("unknown format '" + name + "' (expected text or csv)");
}

struct Ensemble {
  negens_ensemble* handle = nullptr;
  explicit Ensemble(const std::string& manifest) {
    Check(negens_ensemble_load(manifest.c_str(), &handle));
    const size_t n = negens_ensemble_model_count(handle);
    if (negens_ensemble_few_models(handle)) {
      std::fprintf(stderr,
                   "negens: warning: ensemble has %zu model(s); the combination "
                   "rules are intended for three or more\n",
                   n);
    }
  }
  ~Ensemble() { negens_ensemble_free(handle); }
  Ensemble(const Ensemble&) = delete;
  Ensemble& operator=(const Ensemble&) = delete;
};

struct Labels {
  negens_labels* handle = nullptr;
  explicit Labels(const std::string& path) {
    Check(negens_labels_load(path.c_str(), &handle));
  }
  ~Labels() { negens_labels_free(handle); }
  Labels(const Labels&) = delete;
  Labels& operator=(const Labels&) = delete;
};

void Emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::fwrite(text.data(), 1, text.size(), stdout);
    return;
  }
  std::FILE* f = std::fopen(out_path.c_str(), "wb");
  if (!f) InputError("cannot write " + out_path);
  std::fwrite(text.data(), 1, text.size(), f);
  std::fclose(f);
}

int RunCombine(const std::string& manifest, const std::string& sample,
               const std::string& method, const std::string& tie) {
  const auto m = ParseMethodFlag(method);
  const auto t = ParseTieFlag(tie);
  Ensemble ens(manifest);
  negens_decision* d = nullptr;
  Check(negens_ensemble_combine(ens.handle, sample.c_str(), m, t, &d));
  const size_t k = negens_decision_class_count(d);
  const double* scores = negens_decision_scores(d);
  const size_t* ranking = negens_decision_ranking(d);
  const size_t predicted = negens_decision_predicted(d);

  std::printf("sample: %s\n", sample.c_str());
  std::printf("method: %s\n", negens_method_name(m));
  std::printf("predicted: %zu\n", predicted);
  if (const char* name = negens_ensemble_class_name(ens.handle, predicted)) {
    std::printf("predicted_name: %s\n", name);
  }
  std::printf("tie_broken: %s\n", negens_decision_tie_broken(d) ? "true" : "false");
  std::printf("scores:");
  for (size_t c = 0; c < k; ++c) std::printf(" %.17g", scores[c]);
  std::printf("\nranking:");
  for (size_t c = 0; c < k; ++c) std::printf(" %zu", ranking[c]);
  std::printf("\n");
  negens_decision_free(d);
  return kExitOk;
}

int RunCompare(const std::string& manifest, const std::string& labels_path,
               const std::vector<std::string>& method_names,
               const std::string& tie, const std::string& format,
               const std::string& out) {
  std::vector<negens_method> methods;
  for (const auto& name : method_names) methods.push_back(ParseMethodFlag(name));
  const auto t = ParseTieFlag(tie);
  const auto f = ParseFormatFlag(format);
  Ensemble ens(manifest);
  Labels labels(labels_path);
  negens_report* report = nullptr;
  Check(negens_compare(ens.handle, labels.handle, methods.data(), methods.size(),
                       t, &report));
  char* text = nullptr;
  size_t len = 0;
  const auto status = negens_report_render(report, f, &text, &len);
  negens_report_free(report);
  Check(status);
  const std::string rendered(text, len);
  negens_string_free(text);
  Emit(rendered, out);
  return kExitOk;
}

// "target[:sharpness[:correlation[:runner_up]]]" entries separated by commas.
std::vector<negens_model_profile> ParseProfiles(const std::string& text,
                                                double sharpness,
                                                double correlation,
                                                double runner_up) {
  std::vector<negens_model_profile> out;
  std::stringstream entries(text);
  std::string entry;
  while (std::getline(entries, entry, ',')) {
    negens_model_profile p{0.0, sharpness, correlation, runner_up};
    std::stringstream fields(entry);
    std::string field;
    std::vector<double> values;
    while (std::getline(fields, field, ':')) {
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || *end != '\0') {
        InputError("invalid profile entry '" + entry + "'");
      }
      values.push_back(v);
    }
    if (values.empty() || values.size() > 4) {
      InputError("invalid profile entry '" + entry + "'");
    }
    p.target_accuracy = values[0];
    if (values.size() > 1) p.sharpness = values[1];
    if (values.size() > 2) p.noise_correlation = values[2];
    if (values.size() > 3) p.truth_runner_up = values[3];
    out.push_back(p);
  }
  if (out.empty()) InputError("no model profiles given");
  return out;
}

int RunSimulate(const std::string& profiles_text, double sharpness,
                double correlation, double runner_up, long long classes,
                long long samples, std::uint64_t seed,
                const std::string& out_dir) {
  const auto profiles =
      ParseProfiles(profiles_text, sharpness, correlation, runner_up);
  if (classes < 2) InputError("--classes must be >= 2");
  if (samples < 1) InputError("--samples must be >= 1");
  std::vector<double> realized(profiles.size());
  Check(negens_simulate(profiles.data(), profiles.size(),
                        static_cast<size_t>(classes),
                        static_cast<size_t>(samples), seed, out_dir.c_str(),
                        realized.data()));
  std::printf("model_id,target_accuracy,realized_accuracy\n");
  for (size_t i = 0; i < profiles.size(); ++i) {
    std::printf("model-%zu,%.17g,%.17g\n", i + 1, profiles[i].target_accuracy,
                realized[i]);
  }
  return kExitOk;
}

void LogLine(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

int RunServer(bool mock, const std::string& config, const std::string& host,
              int port) {
  // Block termination signals before any server thread exists so that only
  // sigwait below receives them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  negens_server* server = nullptr;
  if (mock) {
    Check(negens_mock_model_start(config.c_str(), host.c_str(), port, LogLine,
                                  nullptr, &server));
  } else {
    Check(negens_service_start(config.empty() ? nullptr : config.c_str(),
                               host.c_str(), port, LogLine, nullptr, &server));
  }
  std::printf("listening on %s:%d\n", host.c_str(), negens_server_port(server));
  std::fflush(stdout);
  int sig = 0;
  sigwait(&signals, &sig);
  negens_server_stop(server);
  negens_server_free(server);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble combination rules for classifier predictions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", negens_version());

  std::string manifest, labels, sample, method = "negation", tie = "mean-conf";
  std::string format = "text", out, config, host = "127.0.0.1";
  std::vector<std::string> methods;
  std::string profiles;
  double sharpness = 2.0, correlation = 0.0, runner_up = 1.0;
  long long classes = 50, samples = 2000;
  std::uint64_t seed = 1;
  int port = 8080;

  auto* combine = app.add_subcommand("combine", "Combine one sample's predictions");
  combine->add_option("--manifest", manifest, "Ensemble manifest")->required();
  combine->add_option("--sample", sample, "Sample id")->required();
  combine->add_option("--method", method, "negation|product|average|top");
  combine->add_option("--tie", tie, "mean-conf|lowest-index");

  auto* evaluate = app.add_subcommand("evaluate", "Accuracy of one method");
  evaluate->add_option("--manifest", manifest, "Ensemble manifest")->required();
  evaluate->add_option("--labels", labels, "Labels file")->required();
  evaluate->add_option("--method", method, "negation|product|average|top");
  evaluate->add_option("--tie", tie, "mean-conf|lowest-index");
  evaluate->add_option("--format", format, "text|csv");
  evaluate->add_option("--out", out, "Write report here instead of stdout");

  auto* compare = app.add_subcommand("compare", "Compare methods on a labeled set");
  compare->add_option("--manifest", manifest, "Ensemble manifest")->required();
  compare->add_option("--labels", labels, "Labels file")->required();
  compare->add_option("--method", methods,
                      "Methods to compare (repeatable; default top, average, "
                      "negation)")
      ->delimiter(',');
  compare->add_option("--tie", tie, "mean-conf|lowest-index");
  compare->add_option("--format", format, "text|csv");
  compare->add_option("--out", out, "Write report here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic ensemble");
  simulate->add_option("--profiles", profiles,
                       "Comma-separated target[:sharpness[:correlation[:runner_up]]]")
      ->required();
  simulate->add_option("--sharpness", sharpness, "Default sharpness");
  simulate->add_option("--correlation", correlation, "Default noise correlation");
  simulate->add_option("--runner-up", runner_up,
                       "Default chance a wrong prediction keeps the truth second");
  simulate->add_option("--classes", classes, "Class count K");
  simulate->add_option("--samples", samples, "Sample count M");
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--out", out, "Output directory")->required();

  auto* serve = app.add_subcommand("serve", "Run the aggregation service");
  serve->add_option("--config", config, "Service config (or NEGENS_SERVICE_CONFIG)");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port (0 picks a free one)");

  auto* mock = app.add_subcommand("mock-model", "Run a mock model endpoint");
  mock->add_option("--config", config, "Mock fixture file")->required();
  mock->add_option("--host", host, "Bind address");
  mock->add_option("--port", port, "Port (0 picks a free one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*combine) return RunCombine(manifest, sample, method, tie);
    if (*evaluate) return RunCompare(manifest, labels, {method}, tie, format, out);
    if (*compare) {
      if (methods.empty()) methods = {"top", "average", "negation"};
      return RunCompare(manifest, labels, methods, tie, format, out);
    }
    if (*simulate) {
      return RunSimulate(profiles, sharpness, correlation, runner_up, classes,
                         samples, seed, out);
    }
    if (*serve) return RunServer(false, config, host, port);
    if (*mock) return RunServer(true, config, host, port);
  } catch (const CliFailure& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "negens: internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}
