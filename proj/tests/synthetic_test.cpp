#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "negens/error.hpp"
#include "negens/synthetic.hpp"
#include "test_support.hpp"

namespace negens {
namespace {

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Synthetic, TargetSevenTenthsWithinThreePoints) {
  ModelProfile p;
  p.target_accuracy = 0.7;
  const auto ds = GenerateDataset({p}, 50, 2000, 17);
  EXPECT_NEAR(ds.realized_accuracy[0], 0.7, 0.03);
  EXPECT_EQ(MeasureEmpiricalAccuracy(ds, 0), ds.realized_accuracy[0]);
}

TEST(Synthetic, NearPerfectProfile) {
  ModelProfile p;
  p.target_accuracy = 0.999;
  p.sharpness = 50.0;
  const auto ds = GenerateDataset({p}, 50, 2000, 3);
  EXPECT_GE(ds.realized_accuracy[0], 0.99);
}

TEST(Synthetic, SameSeedBitIdentical) {
  std::vector<ModelProfile> ps(3);
  ps[1].target_accuracy = 0.6;
  ps[2].noise_correlation = 0.5;
  const auto a = GenerateDataset(ps, 10, 300, 99);
  const auto b = GenerateDataset(ps, 10, 300, 99);
  EXPECT_EQ(a.truth, b.truth);
  for (std::size_t m = 0; m < ps.size(); ++m) {
    for (std::size_t s = 0; s < a.sample_count; ++s) {
      ASSERT_EQ(a.predictions[m][s].confidences, b.predictions[m][s].confidences);
    }
  }
  const auto c = GenerateDataset(ps, 10, 300, 100);
  EXPECT_NE(a.truth, c.truth);
}

TEST(Synthetic, AddingModelDoesNotPerturbOthers) {
  std::vector<ModelProfile> ps(2);
  const auto a = GenerateDataset(ps, 10, 200, 5);
  ps.push_back({});
  const auto b = GenerateDataset(ps, 10, 200, 5);
  EXPECT_EQ(a.truth, b.truth);
  for (std::size_t s = 0; s < 200; ++s) {
    EXPECT_EQ(a.predictions[1][s].confidences, b.predictions[1][s].confidences);
  }
}

TEST(Synthetic, VectorsAreValid) {
  std::vector<ModelProfile> ps(2);
  ps[0].sharpness = 0.3;
  ps[1].truth_runner_up = 0.0;
  const auto ds = GenerateDataset(ps, 7, 500, 11);
  for (const auto& model : ds.predictions) {
    for (const auto& v : model) {
      ASSERT_EQ(v.confidences.size(), 7u);
      double sum = 0;
      for (double x : v.confidences) {
        ASSERT_GE(x, 0.0);
        ASSERT_LE(x, 1.0);
        sum += x;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

TEST(Synthetic, OneHotTruthScoresOne) {
  auto ds = GenerateDataset({ModelProfile{}}, 5, 100, 1);
  for (std::size_t s = 0; s < ds.sample_count; ++s) {
    std::vector<double> v(5, 0.0);
    v[ds.truth[s]] = 1.0;
    ds.predictions[0][s].confidences = v;
  }
  EXPECT_EQ(MeasureEmpiricalAccuracy(ds, 0), 1.0);
}

TEST(Synthetic, UniformRandomVectorsNearChance) {
  auto ds = GenerateDataset({ModelProfile{}}, 50, 2000, 8);
  std::mt19937_64 rng(8);
  for (auto& v : ds.predictions[0]) {
    for (auto& x : v.confidences) x = testing::Unit(rng);
  }
  EXPECT_NEAR(MeasureEmpiricalAccuracy(ds, 0), 1.0 / 50, 0.02);
}

TEST(Synthetic, MeasureRejectsBadIndex) {
  const auto ds = GenerateDataset({ModelProfile{}}, 3, 10, 1);
  EXPECT_THROW(MeasureEmpiricalAccuracy(ds, 1), Error);
}

TEST(Synthetic, RejectsInvalidInput) {
  ModelProfile ok;
  EXPECT_THROW(GenerateDataset({}, 5, 10, 1), Error);
  EXPECT_THROW(GenerateDataset({ok}, 1, 10, 1), Error);
  EXPECT_THROW(GenerateDataset({ok}, 5, 0, 1), Error);
  for (auto bad : {0.0, 1.0, -0.1}) {
    ModelProfile p;
    p.target_accuracy = bad;
    EXPECT_THROW(GenerateDataset({p}, 5, 10, 1), Error) << bad;
  }
  ModelProfile p;
  p.sharpness = 0.0;
  EXPECT_THROW(ValidateProfile(p), Error);
  p = {};
  p.noise_correlation = 1.5;
  EXPECT_THROW(ValidateProfile(p), Error);
  p = {};
  p.truth_runner_up = -0.5;
  EXPECT_THROW(ValidateProfile(p), Error);
}

// |realized - target| <= 3 sqrt(a(1-a)/M) across a spread of profiles/seeds.
TEST(Synthetic, ConcentrationProperty) {
  std::vector<ModelProfile> ps;
  for (double a : {0.6, 0.63, 0.66, 0.69, 0.72, 0.74, 0.3, 0.95}) {
    ModelProfile p;
    p.target_accuracy = a;
    ps.push_back(p);
  }
  ps[6].noise_correlation = 0.7;
  ps[7].sharpness = 0.5;
  const std::size_t m = 2000;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto ds = GenerateDataset(ps, 50, m, seed);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double a = ps[i].target_accuracy;
      EXPECT_LE(std::fabs(ds.realized_accuracy[i] - a),
                3.0 * std::sqrt(a * (1 - a) / m))
          << "seed " << seed << " model " << i;
    }
  }
}

// 2x2 chi-square on error indicators, df = 1, alpha = 0.01.
double ChiSquare(const SyntheticDataset& ds, std::size_t i, std::size_t j) {
  double n[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t s = 0; s < ds.sample_count; ++s) {
    const bool ei = testing::PlainArgmax(ds.predictions[i][s].confidences) != ds.truth[s];
    const bool ej = testing::PlainArgmax(ds.predictions[j][s].confidences) != ds.truth[s];
    n[ei][ej] += 1;
  }
  const double total = static_cast<double>(ds.sample_count);
  double chi = 0;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      const double expected = (n[a][0] + n[a][1]) * (n[0][b] + n[1][b]) / total;
      chi += (n[a][b] - expected) * (n[a][b] - expected) / expected;
    }
  }
  return chi;
}

TEST(Synthetic, IndependentErrorsPassChiSquare) {
  std::vector<ModelProfile> ps(3);
  ps[1].target_accuracy = 0.6;
  ps[2].target_accuracy = 0.8;
  const auto ds = GenerateDataset(ps, 20, 5000, 2024);
  EXPECT_LT(ChiSquare(ds, 0, 1), 6.635);
  EXPECT_LT(ChiSquare(ds, 0, 2), 6.635);
  EXPECT_LT(ChiSquare(ds, 1, 2), 6.635);
}

TEST(Synthetic, CorrelatedErrorsFailChiSquare) {
  std::vector<ModelProfile> ps(2);
  ps[0].noise_correlation = ps[1].noise_correlation = 0.8;
  const auto ds = GenerateDataset(ps, 20, 5000, 2024);
  EXPECT_GT(ChiSquare(ds, 0, 1), 6.635);
}

TEST(Synthetic, WriteDatasetLoadsAndIsDeterministic) {
  std::vector<ModelProfile> ps(3);
  const auto ds = GenerateDataset(ps, 6, 50, 4);
  const auto d1 = testing::ScratchDir("syn1");
  const auto d2 = testing::ScratchDir("syn2");
  const auto manifest = WriteDataset(ds, d1);
  WriteDataset(GenerateDataset(ps, 6, 50, 4), d2);
  for (const char* f : {"manifest.json", "labels.csv", "model-1.jsonl",
                        "model-2.jsonl", "model-3.jsonl"}) {
    ASSERT_TRUE(std::filesystem::exists(d1 / f)) << f;
    EXPECT_EQ(Slurp(d1 / f), Slurp(d2 / f)) << f;
  }
  const auto loaded = LoadEnsemble(manifest);
  ASSERT_EQ(loaded.frames.size(), 50u);
  EXPECT_EQ(loaded.manifest.class_count, 6u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(loaded.manifest.models[i].validation_accuracy, ds.realized_accuracy[i]);
  }
  const auto frame = loaded.Frame(ds.sample_ids[7]);
  EXPECT_EQ(frame.predictions[2].confidences, ds.predictions[2][7].confidences);
  EXPECT_EQ(LoadLabels(d1 / "labels.csv"), ds.labels());
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

TEST(Synthetic, RandomStreamIsCounterBased) {
  RandomStream a(1, 2, 3), b(1, 2, 3), c(1, 2, 4);
  EXPECT_EQ(a.Next(), b.Next());
  EXPECT_NE(a.Next(), c.Next());
  RandomStream r(7, 7, 7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.Uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(r.Below(13), 13u);
  }
}

}  // namespace
}  // namespace negens
