#include "negens/negens.h"

#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "negens/combiner.hpp"
#include "negens/error.hpp"
#include "negens/evaluation.hpp"
#include "negens/io_formats.hpp"
#include "negens/service.hpp"
#include "negens/synthetic.hpp"

struct negens_decision {
  negens::Decision decision;
  std::vector<size_t> ranking;
};

struct negens_ensemble {
  negens::LoadedEnsemble loaded;
  std::vector<std::string> class_names;
};

struct negens_labels {
  negens::LabelMap labels;
};

struct negens_report {
  negens::ComparisonTable table;
};

struct negens_server {
  std::unique_ptr<negens::HttpServerHandle> server;
};

namespace {

thread_local std::string g_last_error;

negens_status Fail(negens_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

negens_status FromKind(negens::ErrorKind kind) {
  switch (kind) {
    case negens::ErrorKind::kValidation: return NEGENS_ERR_VALIDATION;
    case negens::ErrorKind::kAlignment: return NEGENS_ERR_ALIGNMENT;
    case negens::ErrorKind::kParse: return NEGENS_ERR_PARSE;
    case negens::ErrorKind::kIo: return NEGENS_ERR_IO;
    case negens::ErrorKind::kNotFound: return NEGENS_ERR_NOT_FOUND;
  }
  return NEGENS_ERR_INTERNAL;
}

template <typename F>
negens_status Guard(F&& body) {
  try {
    body();
    return NEGENS_OK;
  } catch (const negens::Error& e) {
    return Fail(FromKind(e.kind()), e.what());
  } catch (const std::bad_alloc&) {
    return Fail(NEGENS_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(NEGENS_ERR_INTERNAL, e.what());
  }
}

negens_status NullArgument(const char* name) {
  return Fail(NEGENS_ERR_INVALID_ARGUMENT,
              std::string("null argument: ") + name);
}

negens::Method ToMethod(negens_method m) {
  switch (m) {
    case NEGENS_METHOD_TOP_MODEL: return negens::Method::kTopModel;
    case NEGENS_METHOD_AVERAGE: return negens::Method::kAverage;
    case NEGENS_METHOD_PRODUCT: return negens::Method::kProduct;
    case NEGENS_METHOD_NEGATION: return negens::Method::kNegation;
  }
  throw negens::ValidationError("unknown method value " + std::to_string(m));
}

negens_method FromMethod(negens::Method m) {
  switch (m) {
    case negens::Method::kTopModel: return NEGENS_METHOD_TOP_MODEL;
    case negens::Method::kAverage: return NEGENS_METHOD_AVERAGE;
    case negens::Method::kProduct: return NEGENS_METHOD_PRODUCT;
    case negens::Method::kNegation: return NEGENS_METHOD_NEGATION;
  }
  return NEGENS_METHOD_NEGATION;
}

negens::TiePolicy ToTie(negens_tie_policy t) {
  switch (t) {
    case NEGENS_TIE_MEAN_CONFIDENCE: return negens::TiePolicy::kMeanConfidence;
    case NEGENS_TIE_LOWEST_INDEX: return negens::TiePolicy::kLowestIndex;
  }
  throw negens::ValidationError("unknown tie policy value " + std::to_string(t));
}

negens_decision* Wrap(negens::Decision d) {
  auto out = std::make_unique<negens_decision>();
  const auto ranking = negens::RankClasses(d);
  out->ranking.assign(ranking.begin(), ranking.end());
  out->decision = std::move(d);
  return out.release();
}

negens::LogSink Sink(negens_log_fn log, void* user) {
  if (!log) return nullptr;
  return [log, user](const std::string& line) { log(line.c_str(), user); };
}

}  // namespace

extern "C" {

const char* negens_last_error(void) { return g_last_error.c_str(); }

const char* negens_version(void) { return "1.0.0"; }

negens_status negens_parse_method(const char* name, negens_method* out) {
  if (!name) return NullArgument("name");
  if (!out) return NullArgument("out");
  auto m = negens::ParseMethod(name);
  if (!m) return Fail(NEGENS_ERR_VALIDATION, std::string("unknown method '") + name + "'");
  *out = FromMethod(*m);
  return NEGENS_OK;
}

const char* negens_method_name(negens_method method) {
  switch (method) {
    case NEGENS_METHOD_TOP_MODEL: return "top";
    case NEGENS_METHOD_AVERAGE: return "average";
    case NEGENS_METHOD_PRODUCT: return "product";
    case NEGENS_METHOD_NEGATION: return "negation";
  }
  return "unknown";
}

negens_status negens_parse_tie_policy(const char* name, negens_tie_policy* out) {
  if (!name) return NullArgument("name");
  if (!out) return NullArgument("out");
  auto t = negens::ParseTiePolicy(name);
  if (!t) {
    return Fail(NEGENS_ERR_VALIDATION, std::string("unknown tie policy '") + name + "'");
  }
  *out = *t == negens::TiePolicy::kMeanConfidence ? NEGENS_TIE_MEAN_CONFIDENCE
                                                  : NEGENS_TIE_LOWEST_INDEX;
  return NEGENS_OK;
}

negens_status negens_weighted_confidence(double confidence, double accuracy,
                                         double* out) {
  if (!out) return NullArgument("out");
  return Guard([&] { *out = negens::WeightedConfidence(confidence, accuracy); });
}

negens_status negens_combine(const double* confidences, const double* accuracies,
                             size_t model_count, size_t class_count,
                             negens_method method, negens_tie_policy tie_policy,
                             negens_decision** out) {
  if (!out) return NullArgument("out");
  if (model_count > 0 && (!confidences || !accuracies)) {
    return NullArgument(!confidences ? "confidences" : "accuracies");
  }
  return Guard([&] {
    negens::EnsembleFrame frame;
    frame.sample_id = "frame";
    for (size_t n = 0; n < model_count; ++n) {
      frame.models.push_back({"model-" + std::to_string(n + 1), accuracies[n]});
      frame.predictions.push_back(
          {{confidences + n * class_count, confidences + (n + 1) * class_count}});
    }
    *out = Wrap(negens::Combine(frame, ToMethod(method), ToTie(tie_policy)));
  });
}

negens_method negens_decision_method(const negens_decision* d) {
  return FromMethod(d->decision.method);
}
size_t negens_decision_predicted(const negens_decision* d) {
  return d->decision.predicted;
}
int negens_decision_tie_broken(const negens_decision* d) {
  return d->decision.tie_broken ? 1 : 0;
}
size_t negens_decision_class_count(const negens_decision* d) {
  return d->decision.scores.size();
}
const double* negens_decision_scores(const negens_decision* d) {
  return d->decision.scores.data();
}
const size_t* negens_decision_ranking(const negens_decision* d) {
  return d->ranking.data();
}
void negens_decision_free(negens_decision* d) { delete d; }

negens_status negens_ensemble_load(const char* manifest_path,
                                   negens_ensemble** out) {
  if (!manifest_path) return NullArgument("manifest_path");
  if (!out) return NullArgument("out");
  return Guard([&] {
    auto e = std::make_unique<negens_ensemble>();
    e->loaded = negens::LoadEnsemble(manifest_path);
    const auto& m = e->loaded.manifest;
    if (m.class_names_path) {
      e->class_names = negens::LoadClassNames(m.Resolve(*m.class_names_path));
    }
    *out = e.release();
  });
}

size_t negens_ensemble_model_count(const negens_ensemble* e) {
  return e->loaded.manifest.models.size();
}
size_t negens_ensemble_class_count(const negens_ensemble* e) {
  return e->loaded.manifest.class_count;
}
size_t negens_ensemble_sample_count(const negens_ensemble* e) {
  return e->loaded.frames.size();
}
int negens_ensemble_few_models(const negens_ensemble* e) {
  return e->loaded.manifest.few_models ? 1 : 0;
}
const char* negens_ensemble_model_id(const negens_ensemble* e, size_t index) {
  const auto& models = e->loaded.manifest.models;
  return index < models.size() ? models[index].model_id.c_str() : nullptr;
}
double negens_ensemble_model_accuracy(const negens_ensemble* e, size_t index) {
  const auto& models = e->loaded.manifest.models;
  return index < models.size() ? models[index].validation_accuracy : 0.0;
}
const char* negens_ensemble_sample_id(const negens_ensemble* e, size_t index) {
  const auto& frames = e->loaded.frames;
  return index < frames.size() ? frames[index].sample_id.c_str() : nullptr;
}
const char* negens_ensemble_class_name(const negens_ensemble* e,
                                       size_t class_index) {
  return class_index < e->class_names.size()
             ? e->class_names[class_index].c_str()
             : nullptr;
}
size_t negens_ensemble_top_model(const negens_ensemble* e) {
  return negens::TopModelIndex(e->loaded.manifest.records());
}

negens_status negens_ensemble_combine(const negens_ensemble* e,
                                      const char* sample_id,
                                      negens_method method,
                                      negens_tie_policy tie_policy,
                                      negens_decision** out) {
  if (!e) return NullArgument("ensemble");
  if (!sample_id) return NullArgument("sample_id");
  if (!out) return NullArgument("out");
  return Guard([&] {
    const auto& frame = e->loaded.Frame(sample_id);
    *out = Wrap(negens::Combine(frame, ToMethod(method), ToTie(tie_policy)));
  });
}

void negens_ensemble_free(negens_ensemble* e) { delete e; }

negens_status negens_labels_load(const char* path, negens_labels** out) {
  if (!path) return NullArgument("path");
  if (!out) return NullArgument("out");
  return Guard([&] {
    auto l = std::make_unique<negens_labels>();
    l->labels = negens::LoadLabels(path);
    *out = l.release();
  });
}

size_t negens_labels_count(const negens_labels* l) { return l->labels.size(); }
void negens_labels_free(negens_labels* l) { delete l; }

negens_status negens_compare(const negens_ensemble* e,
                             const negens_labels* labels,
                             const negens_method* methods, size_t method_count,
                             negens_tie_policy tie_policy, negens_report** out) {
  if (!e) return NullArgument("ensemble");
  if (!labels) return NullArgument("labels");
  if (!methods && method_count) return NullArgument("methods");
  if (!out) return NullArgument("out");
  return Guard([&] {
    std::vector<negens::Method> ms;
    for (size_t i = 0; i < method_count; ++i) ms.push_back(ToMethod(methods[i]));
    auto r = std::make_unique<negens_report>();
    r->table = negens::CompareMethods(e->loaded.frames, labels->labels, ms,
                                      ToTie(tie_policy));
    *out = r.release();
  });
}

size_t negens_report_row_count(const negens_report* r) {
  return r->table.rows.size();
}

negens_status negens_report_row(const negens_report* r, size_t index,
                                negens_method* method, size_t* matches,
                                size_t* total) {
  if (!r) return NullArgument("report");
  if (index >= r->table.rows.size()) {
    return Fail(NEGENS_ERR_INVALID_ARGUMENT, "report row index out of range");
  }
  const auto& row = r->table.rows[index];
  if (method) *method = FromMethod(row.method);
  if (matches) *matches = row.matches;
  if (total) *total = row.total;
  return NEGENS_OK;
}

negens_status negens_report_render(const negens_report* r,
                                   negens_report_format format, char** out,
                                   size_t* length) {
  if (!r) return NullArgument("report");
  if (!out) return NullArgument("out");
  return Guard([&] {
    const auto text = negens::WriteReport(
        r->table, format == NEGENS_FORMAT_CSV ? negens::ReportFormat::kCsv
                                              : negens::ReportFormat::kText);
    auto* buf = new char[text.size() + 1];
    std::memcpy(buf, text.c_str(), text.size() + 1);
    *out = buf;
    if (length) *length = text.size();
  });
}

void negens_report_free(negens_report* r) { delete r; }
void negens_string_free(char* s) { delete[] s; }

negens_status negens_simulate(const negens_model_profile* profiles,
                              size_t profile_count, size_t class_count,
                              size_t sample_count, uint64_t seed,
                              const char* out_dir, double* realized_accuracy) {
  if (!profiles && profile_count) return NullArgument("profiles");
  if (!out_dir) return NullArgument("out_dir");
  return Guard([&] {
    std::vector<negens::ModelProfile> ps;
    for (size_t i = 0; i < profile_count; ++i) {
      ps.push_back({profiles[i].target_accuracy, profiles[i].sharpness,
                    profiles[i].noise_correlation, profiles[i].truth_runner_up});
    }
    const auto ds =
        negens::GenerateDataset(ps, class_count, sample_count, seed);
    negens::WriteDataset(ds, out_dir);
    if (realized_accuracy) {
      for (size_t i = 0; i < profile_count; ++i) {
        realized_accuracy[i] = ds.realized_accuracy[i];
      }
    }
  });
}

negens_status negens_service_start(const char* config_path, const char* host,
                                   int port, negens_log_fn log, void* user,
                                   negens_server** out) {
  if (!out) return NullArgument("out");
  return Guard([&] {
    const auto path = negens::ResolveConfigPath(config_path ? config_path : "");
    auto s = std::make_unique<negens_server>();
    s->server = std::make_unique<negens::AggregationService>(
        negens::LoadServiceConfig(path), Sink(log, user));
    s->server->Start(host ? host : "127.0.0.1", port);
    *out = s.release();
  });
}

negens_status negens_mock_model_start(const char* fixture_path, const char* host,
                                      int port, negens_log_fn log, void* user,
                                      negens_server** out) {
  if (!fixture_path) return NullArgument("fixture_path");
  if (!out) return NullArgument("out");
  return Guard([&] {
    auto s = std::make_unique<negens_server>();
    s->server = std::make_unique<negens::MockModelEndpoint>(
        negens::LoadMockFixture(fixture_path), Sink(log, user));
    s->server->Start(host ? host : "127.0.0.1", port);
    *out = s.release();
  });
}

int negens_server_port(const negens_server* s) { return s->server->port(); }

void negens_server_stop(negens_server* s) {
  if (s) s->server->Stop();
}

void negens_server_free(negens_server* s) { delete s; }

}  // extern "C"
