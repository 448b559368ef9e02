/*
 * Copyright 2026 The AutoFT Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "autoft/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "autoft/error.hpp"
#include "test_util.hpp"

namespace autoft {
namespace {

double BruteForceAuc(const std::vector<int>& labels, const std::vector<double>& scores) {
  double wins = 0, pairs = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!labels[i]) continue;
    for (std::size_t j = 0; j < labels.size(); ++j) {
      if (labels[j]) continue;
      pairs += 1;
      if (scores[i] > scores[j]) wins += 1;
      if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

TEST(Auc, SimpleCases) {
  const std::vector<int> y = {0, 0, 1, 1};
  EXPECT_EQ(Auc(y, std::vector<double>{0.1, 0.2, 0.3, 0.4}), 1.0);
  EXPECT_EQ(Auc(y, std::vector<double>{0.4, 0.3, 0.2, 0.1}), 0.0);
  EXPECT_EQ(Auc(y, std::vector<double>(4, 0.5)), 0.5);
  EXPECT_EQ(Auc(std::vector<int>{1, 0, 1, 0}, std::vector<double>{0.8, 0.8, 0.3, 0.1}), 0.625);
}

TEST(Auc, SingleClassIsUndefined) {
  for (const std::vector<int>& y : {std::vector<int>{1, 1}, std::vector<int>{0, 0, 0}}) {
    try {
      Auc(y, std::vector<double>(y.size(), 0.3));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kMetricUndefined);
    }
  }
  EXPECT_THROW(Auc(std::vector<int>{0, 1}, std::vector<double>{0.5}), Error);
}

TEST(Auc, MatchesBruteForceWithTies) {
  SeededRng rng(42);
  for (int c = 0; c < 50; ++c) {
    std::vector<int> y(200);
    std::vector<double> s(200);
    for (int i = 0; i < 200; ++i) {
      y[i] = static_cast<int>(rng.NextBelow(2));
      // Coarse grid so ties are common.
      s[i] = static_cast<double>(rng.NextBelow(c % 2 ? 15 : 1000)) / 10.0;
    }
    y[0] = 0;
    y[1] = 1;
    EXPECT_NEAR(Auc(y, s), BruteForceAuc(y, s), 1e-12) << "case " << c;
  }
}

TEST(Auc, InvariantUnderMonotoneTransforms) {
  SeededRng rng(7);
  std::vector<int> y(300);
  std::vector<double> s(300), e(300), a(300), neg(300);
  for (int i = 0; i < 300; ++i) {
    y[i] = rng.NextUniform() < 0.4;
    s[i] = rng.NextNormal();
    e[i] = std::exp(s[i]);
    a[i] = 3.0 * s[i] - 7.0;
    neg[i] = -s[i];
  }
  y[0] = 1;
  y[1] = 0;
  const double base = Auc(y, s);
  EXPECT_NEAR(Auc(y, e), base, 1e-12);
  EXPECT_NEAR(Auc(y, a), base, 1e-12);
  EXPECT_NEAR(Auc(y, neg) + base, 1.0, 1e-12);
}

TEST(LogLoss, Examples) {
  EXPECT_NEAR(LogLoss(std::vector<int>{1, 0}, std::vector<double>{0.5, 0.5}), std::log(2.0), 1e-15);
  EXPECT_LE(LogLoss(std::vector<int>{1, 0}, std::vector<double>{1.0, 0.0}), 1e-6);
  const std::vector<int> y = {1, 0, 0, 1, 1};
  const std::vector<double> s = {0.9, 0.2, 0.4, 0.6, 0.99};
  double mean = 0;
  for (std::size_t i = 0; i < y.size(); ++i) mean += CrossEntropy(y[i], s[i]);
  EXPECT_NEAR(LogLoss(y, s), mean / 5, 1e-15);
}

TEST(LogLoss, BaseRateIsTheBestConstant) {
  const std::vector<int> y = {1, 0, 0, 1, 0, 0, 0, 1};
  const double rate = 3.0 / 8.0;
  const double floor = LogLoss(y, std::vector<double>(8, rate));
  for (double c : {0.1, 0.3, 0.36, 0.39, 0.5, 0.9}) {
    EXPECT_GE(LogLoss(y, std::vector<double>(8, c)), floor - 1e-12) << c;
  }
}

TEST(RouteDump, CsvRoundTrip) {
  RouteDump d;
  d.num_embed = 2;
  d.num_cross = 1;
  d.num_deep = 2;
  d.rows = {{0, {1, 0}, {1}, {0, 0}}, {1, {0, 0}, {0}, {1, 1}}};
  const std::string csv = RouteDumpToCsv(d);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "instance_id,embed_0,embed_1,cross_0,deep_0,deep_1");
  const RouteDump back = ParseRouteDump(csv);
  EXPECT_EQ(RouteDumpToCsv(back), csv);
}

TEST(RouteDump, MalformedRowNamesLine) {
  const std::string csv = "instance_id,cross_0,cross_1\n0,1,0\n1,1,2\n";
  try {
    ParseRouteDump(csv);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(ParseRouteDump("instance_id,cross_1\n0,1\n"), Error);
  EXPECT_THROW(ParseRouteDump("instance_id,deep_0,cross_0\n0,1,1\n"), Error);
  EXPECT_THROW(ParseRouteDump("instance_id,cross_0\nx,1\n"), Error);
}

TEST(RoutingFractions, CountsBits) {
  const RouteDump all_on = ParseRouteDump("instance_id,deep_0,deep_1\n0,1,1\n1,1,1\n");
  const RoutingReport r1 = RoutingFractions(all_on);
  EXPECT_EQ(r1.deep[0].pretrained, 1.0);
  EXPECT_EQ(r1.deep[1].pretrained, 1.0);

  const RouteDump mixed = ParseRouteDump("instance_id,cross_0,cross_1\n0,1,0\n1,0,0\n");
  const RoutingReport r2 = RoutingFractions(mixed);
  EXPECT_EQ(r2.cross[0].pretrained, 0.5);
  EXPECT_EQ(r2.cross[1].pretrained, 0.0);
  EXPECT_EQ(r2.CrossFinetuneByDepth(), (std::vector<double>{0.5, 1.0}));
}

TEST(RoutingFractions, PretrainedPlusFinetunedIsExactlyOne) {
  SeededRng rng(3);
  RouteDump d;
  d.num_embed = 3;
  d.num_cross = 3;
  d.num_deep = 2;
  for (std::size_t i = 0; i < 997; ++i) {
    RouteDumpRow row{i, {}, {}, {}};
    for (int j = 0; j < 3; ++j) row.embed.push_back(static_cast<int>(rng.NextBelow(2)));
    for (int j = 0; j < 3; ++j) row.cross.push_back(static_cast<int>(rng.NextBelow(2)));
    for (int j = 0; j < 2; ++j) row.deep.push_back(static_cast<int>(rng.NextBelow(2)));
    d.rows.push_back(row);
  }
  const RoutingReport r = RoutingFractions(d);
  for (const auto* units : {&r.embed, &r.cross, &r.deep}) {
    for (const auto& u : *units) {
      EXPECT_EQ(u.pretrained + u.finetuned, 1.0);
      EXPECT_GE(u.pretrained, 0.0);
      EXPECT_LE(u.pretrained, 1.0);
    }
  }
  const std::string csv = RoutingFractionsCsv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "component,unit,pretrained_fraction,finetuned_fraction");
}

TEST(ResultsTable, MeanStdAndBestFlags) {
  std::vector<RunSummary> runs;
  const double aucs[] = {0.70, 0.72, 0.74, 0.71, 0.73};
  for (int s = 0; s < 5; ++s) runs.push_back({"AutoFT", "autoft", std::uint64_t(s), aucs[s], 0.5, 100});
  runs.push_back({"Fine-Tune", "finetune", 0, 0.69, 0.45, 100});
  const MetricReport r = BuildResultsTable(runs);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_EQ(r.rows[0].method, "Fine-Tune");
  EXPECT_EQ(r.rows[0].auc_std, 0.0);
  EXPECT_NEAR(r.rows[1].auc_mean, 0.72, 1e-12);
  EXPECT_NEAR(r.rows[1].auc_std, std::sqrt(0.001 / 4), 1e-12);
  EXPECT_TRUE(r.rows[1].best_auc);
  EXPECT_TRUE(r.rows[0].best_logloss);
  EXPECT_EQ(r.rows[1].seeds.size(), 5u);
  const std::string csv = ResultsTableCsv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "method,auc_mean,auc_std,logloss_mean,logloss_std,n_seeds,best_auc,best_logloss");
}

TEST(ResultsTable, OnlyMethodsOnDisk) {
  const auto dir = testing::TempDir("results");
  std::vector<std::string> dirs;
  for (int i = 0; i < 3; ++i) {
    const auto run = dir / ("run" + std::to_string(i));
    std::filesystem::create_directories(run);
    dirs.push_back(run.string());
    if (i == 2) continue;  // incomplete run
    std::ofstream(run / "summary.json")
        << RunSummaryToJson({"Target-only", "target-only", std::uint64_t(i), 0.6 + 0.01 * i, 0.6, 10});
  }
  const MetricReport r = ResultsTableFromDirs(dirs);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_EQ(r.rows[0].method, "Target-only");
  EXPECT_NEAR(r.rows[0].auc_mean, 0.605, 1e-12);
}

TEST(RunSummary, JsonRoundTrip) {
  const RunSummary s{"AutoFT-Cross&Deep", "ablation-cross-deep", 3, 0.123456789012345, 0.5, 42};
  const RunSummary back = RunSummaryFromJson(RunSummaryToJson(s));
  EXPECT_EQ(back.method, s.method);
  EXPECT_EQ(back.test_auc, s.test_auc);
  EXPECT_EQ(back.test_instances, 42u);
  EXPECT_THROW(RunSummaryFromJson("{}"), Error);
}

TEST(MeanStd, SampleDeviation) {
  const std::vector<double> v = {1, 2, 3, 4};
  const auto [m, s] = MeanStd(v);
  EXPECT_EQ(m, 2.5);
  EXPECT_NEAR(s, std::sqrt(5.0 / 3.0), 1e-15);
  EXPECT_EQ(MeanStd(std::vector<double>{7}).second, 0.0);
}

}  // namespace
}  // namespace autoft
