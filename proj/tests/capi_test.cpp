// Exercises the public C interface only.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <gtest/gtest.h>
#include <httplib.h>

#include "negens/negens.h"

namespace {

const std::string kData = std::string(NEGENS_TEST_DATA_DIR) + "/data/divergence";

std::filesystem::path Scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("negens-capi-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(CApi, ParseAndNames) {
  negens_method m;
  ASSERT_EQ(negens_parse_method("negation", &m), NEGENS_OK);
  EXPECT_EQ(m, NEGENS_METHOD_NEGATION);
  EXPECT_STREQ(negens_method_name(NEGENS_METHOD_AVERAGE), "average");
  EXPECT_EQ(negens_parse_method("vote", &m), NEGENS_ERR_VALIDATION);
  EXPECT_NE(std::string(negens_last_error()).find("vote"), std::string::npos);
  EXPECT_EQ(negens_parse_method(nullptr, &m), NEGENS_ERR_INVALID_ARGUMENT);
  negens_tie_policy t;
  ASSERT_EQ(negens_parse_tie_policy("lowest-index", &t), NEGENS_OK);
  EXPECT_EQ(t, NEGENS_TIE_LOWEST_INDEX);
  EXPECT_STRNE(negens_version(), "");
}

TEST(CApi, WeightedConfidence) {
  double w = 0;
  ASSERT_EQ(negens_weighted_confidence(0.5, 0.8, &w), NEGENS_OK);
  EXPECT_DOUBLE_EQ(w, 0.4);
  EXPECT_EQ(negens_weighted_confidence(1.5, 0.8, &w), NEGENS_ERR_VALIDATION);
  EXPECT_EQ(negens_weighted_confidence(0.5, 0.0, &w), NEGENS_ERR_VALIDATION);
}

TEST(CApi, CombineDivergence) {
  const double conf[] = {0.7, 0.3, 0.4, 0.6};
  const double acc[] = {0.9, 0.6};
  negens_decision* d = nullptr;
  ASSERT_EQ(negens_combine(conf, acc, 2, 2, NEGENS_METHOD_NEGATION,
                           NEGENS_TIE_MEAN_CONFIDENCE, &d),
            NEGENS_OK);
  EXPECT_EQ(negens_decision_predicted(d), 1u);
  EXPECT_EQ(negens_decision_class_count(d), 2u);
  EXPECT_NEAR(negens_decision_scores(d)[0], 0.76, 1e-12);
  EXPECT_NEAR(negens_decision_scores(d)[1], 0.73, 1e-12);
  EXPECT_EQ(negens_decision_ranking(d)[0], 1u);
  EXPECT_EQ(negens_decision_ranking(d)[1], 0u);
  EXPECT_EQ(negens_decision_method(d), NEGENS_METHOD_NEGATION);
  EXPECT_EQ(negens_decision_tie_broken(d), 0);
  negens_decision_free(d);

  ASSERT_EQ(negens_combine(conf, acc, 2, 2, NEGENS_METHOD_AVERAGE,
                           NEGENS_TIE_MEAN_CONFIDENCE, &d),
            NEGENS_OK);
  EXPECT_EQ(negens_decision_predicted(d), 0u);
  negens_decision_free(d);
}

TEST(CApi, CombineErrors) {
  negens_decision* d = nullptr;
  EXPECT_EQ(negens_combine(nullptr, nullptr, 0, 2, NEGENS_METHOD_NEGATION,
                           NEGENS_TIE_MEAN_CONFIDENCE, &d),
            NEGENS_ERR_VALIDATION);
  const double conf[] = {0.7, 0.3};
  const double bad_acc[] = {1.2};
  EXPECT_EQ(negens_combine(conf, bad_acc, 1, 2, NEGENS_METHOD_NEGATION,
                           NEGENS_TIE_MEAN_CONFIDENCE, &d),
            NEGENS_ERR_VALIDATION);
  EXPECT_EQ(negens_combine(conf, nullptr, 1, 2, NEGENS_METHOD_NEGATION,
                           NEGENS_TIE_MEAN_CONFIDENCE, &d),
            NEGENS_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(d, nullptr);
}

TEST(CApi, EnsembleAndCompare) {
  negens_ensemble* e = nullptr;
  ASSERT_EQ(negens_ensemble_load((kData + "/manifest.json").c_str(), &e), NEGENS_OK)
      << negens_last_error();
  EXPECT_EQ(negens_ensemble_model_count(e), 2u);
  EXPECT_EQ(negens_ensemble_class_count(e), 2u);
  EXPECT_EQ(negens_ensemble_sample_count(e), 3u);
  EXPECT_NE(negens_ensemble_few_models(e), 0);
  EXPECT_STREQ(negens_ensemble_model_id(e, 1), "beta");
  EXPECT_DOUBLE_EQ(negens_ensemble_model_accuracy(e, 0), 0.9);
  EXPECT_EQ(negens_ensemble_top_model(e), 0u);
  EXPECT_STREQ(negens_ensemble_class_name(e, 1), "dog");
  EXPECT_EQ(negens_ensemble_class_name(e, 5), nullptr);

  negens_decision* d = nullptr;
  ASSERT_EQ(negens_ensemble_combine(e, "div", NEGENS_METHOD_NEGATION,
                                    NEGENS_TIE_MEAN_CONFIDENCE, &d),
            NEGENS_OK);
  EXPECT_EQ(negens_decision_predicted(d), 1u);
  negens_decision_free(d);
  EXPECT_EQ(negens_ensemble_combine(e, "ghost", NEGENS_METHOD_NEGATION,
                                    NEGENS_TIE_MEAN_CONFIDENCE, &d),
            NEGENS_ERR_NOT_FOUND);
  EXPECT_NE(std::string(negens_last_error()).find("ghost"), std::string::npos);

  negens_labels* l = nullptr;
  ASSERT_EQ(negens_labels_load((kData + "/labels.csv").c_str(), &l), NEGENS_OK);
  EXPECT_EQ(negens_labels_count(l), 3u);
  const negens_method methods[] = {NEGENS_METHOD_NEGATION, NEGENS_METHOD_TOP_MODEL,
                                   NEGENS_METHOD_AVERAGE};
  negens_report* r = nullptr;
  ASSERT_EQ(negens_compare(e, l, methods, 3, NEGENS_TIE_MEAN_CONFIDENCE, &r), NEGENS_OK);
  ASSERT_EQ(negens_report_row_count(r), 3u);
  negens_method m;
  size_t matches = 0, total = 0;
  ASSERT_EQ(negens_report_row(r, 0, &m, &matches, &total), NEGENS_OK);
  EXPECT_EQ(m, NEGENS_METHOD_TOP_MODEL);
  EXPECT_EQ(total, 3u);
  EXPECT_EQ(negens_report_row(r, 3, &m, &matches, &total), NEGENS_ERR_INVALID_ARGUMENT);
  char* text = nullptr;
  size_t len = 0;
  ASSERT_EQ(negens_report_render(r, NEGENS_FORMAT_CSV, &text, &len), NEGENS_OK);
  EXPECT_EQ(std::string(text, len).rfind("method,matches,total,accuracy_pct\n", 0), 0u);
  EXPECT_EQ(text[len], '\0');
  negens_string_free(text);
  negens_report_free(r);
  negens_labels_free(l);
  negens_ensemble_free(e);
}

TEST(CApi, LoadFailures) {
  negens_ensemble* e = nullptr;
  EXPECT_EQ(negens_ensemble_load("/nonexistent/manifest.json", &e), NEGENS_ERR_IO);
  negens_labels* l = nullptr;
  EXPECT_EQ(negens_labels_load("/nonexistent/labels.csv", &l), NEGENS_ERR_IO);
}

TEST(CApi, Simulate) {
  const auto dir = Scratch("sim");
  const negens_model_profile ps[] = {{0.7, 2.0, 0.0, 1.0}, {0.6, 2.0, 0.0, 1.0}};
  double realized[2] = {0, 0};
  ASSERT_EQ(negens_simulate(ps, 2, 10, 500, 3, dir.c_str(), realized), NEGENS_OK)
      << negens_last_error();
  EXPECT_NEAR(realized[0], 0.7, 0.07);
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
  EXPECT_EQ(negens_simulate(ps, 2, 10, 0, 3, dir.c_str(), realized),
            NEGENS_ERR_VALIDATION);
  std::filesystem::remove_all(dir);
}

TEST(CApi, ServiceWithMocks) {
  const auto dir = Scratch("svc");
  const char* vectors[] = {"[0.7, 0.3]", "[0.4, 0.6]", "[0.5, 0.5]"};
  std::vector<negens_server*> mocks;
  for (int i = 0; i < 3; ++i) {
    const auto path = dir / ("mock" + std::to_string(i) + ".json");
    std::ofstream(path) << "{\"class_count\": 2, \"vectors\": {\"img\": " << vectors[i]
                        << "}}";
    negens_server* s = nullptr;
    ASSERT_EQ(negens_mock_model_start(path.c_str(), nullptr, 0, nullptr, nullptr, &s),
              NEGENS_OK)
        << negens_last_error();
    mocks.push_back(s);
  }
  const double accs[] = {0.9, 0.6, 0.5};
  std::ofstream cfg(dir / "service.json");
  cfg << "{\"endpoints\": [";
  for (int i = 0; i < 3; ++i) {
    cfg << (i ? "," : "") << "{\"model_id\": \"m" << i
        << "\", \"url\": \"http://127.0.0.1:" << negens_server_port(mocks[i])
        << "/invocations\", \"validation_accuracy\": " << accs[i] << "}";
  }
  cfg << "], \"policy\": {\"method\": \"negation\", \"quorum\": 3}}";
  cfg.close();

  std::vector<std::string> lines;
  auto log = [](const char* line, void* user) {
    static_cast<std::vector<std::string>*>(user)->push_back(line);
  };
  negens_server* svc = nullptr;
  ASSERT_EQ(negens_service_start((dir / "service.json").c_str(), nullptr, 0, log,
                                 &lines, &svc),
            NEGENS_OK)
      << negens_last_error();
  httplib::Client client("127.0.0.1", negens_server_port(svc));
  auto res = client.Post("/classify", "img", "text/plain");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_NE(res->body.find("\"predicted\":1"), std::string::npos) << res->body;
  negens_server_stop(svc);
  negens_server_free(svc);
  EXPECT_FALSE(lines.empty());
  for (auto* m : mocks) negens_server_free(m);

  EXPECT_NE(negens_service_start("/nonexistent.json", nullptr, 0, nullptr, nullptr, &svc),
            NEGENS_OK);
  std::filesystem::remove_all(dir);
}

}  // namespace
