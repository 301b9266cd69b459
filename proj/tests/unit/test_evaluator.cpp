#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "entrank/error.hpp"
#include "entrank/evaluator.hpp"
#include "entrank/scorer.hpp"
#include "support.hpp"

namespace entrank {
namespace {

Relevance rel(std::string_view pattern) {
  Relevance r;
  for (char c : pattern) r.push_back(c == '+');
  return r;
}

// Independent AP: per-rank precision averaged over positive ranks.
double brute_ap(const Relevance& r) {
  double sum = 0;
  int hits = 0, positives = 0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (!r[k]) continue;
    ++hits;
    ++positives;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return sum / positives;
}

TEST(RecallAt, Examples) {
  EXPECT_EQ(recall_at(rel("+-+-"), 0.5), 0.5);
  EXPECT_EQ(recall_at(rel("+-+-"), 1.0), 1.0);
  EXPECT_EQ(recall_at(rel("--+"), 1.0), 1.0);
  EXPECT_EQ(recall_at(rel("+-+-"), 0.01), 0.5);
  EXPECT_THROW(recall_at(rel("---"), 0.5), Error);
  EXPECT_THROW(recall_at(rel("+--"), 0.0), Error);
  EXPECT_THROW(recall_at(rel("+--"), 1.5), Error);
}

TEST(RecallAt, DocumentsRead) {
  EXPECT_EQ(documents_read(0.5, 4), 2u);
  EXPECT_EQ(documents_read(0.01, 4), 1u);
  EXPECT_EQ(documents_read(0.26, 4), 2u);
  EXPECT_EQ(documents_read(1.0, 7), 7u);
  // 0.07 * 100 is 7.000000000000001 in binary floating point.
  EXPECT_EQ(documents_read(0.07, 100), 7u);
  EXPECT_EQ(documents_read(0.29, 100), 29u);
  EXPECT_EQ(documents_read(0.57, 100), 57u);
}

TEST(RecallAt, OracleReachesOneAtPositiveFraction) {
  for (std::size_t p = 1; p <= 20; ++p) {
    Relevance r(20, false);
    std::fill(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(p), true);
    EXPECT_EQ(recall_at(r, static_cast<double>(p) / 20.0), 1.0) << p;
    if (p > 1) {
      EXPECT_LT(recall_at(r, static_cast<double>(p - 1) / 20.0), 1.0);
    }
  }
}

TEST(Curve, FourDocFixture) {
  const std::vector<double> grid = {0.25, 0.5, 0.75, 1.0};
  const auto c = recall_curve(rel("+-+-"), grid);
  ASSERT_EQ(c.points.size(), 4u);
  const std::vector<double> want = {0.5, 0.5, 1.0, 1.0};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(c.points[i].proportion, grid[i]);
    EXPECT_EQ(c.points[i].recall, want[i]);
  }
  EXPECT_EQ(c.n_docs, 4u);
  EXPECT_EQ(c.n_positives, 2u);
}

TEST(Curve, ReversedOracleIsPointwiseMinimal) {
  const auto grid = default_grid();
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    const std::size_t p = 1 + rng() % (n - 1);
    Relevance worst(n, false);
    std::fill(worst.end() - static_cast<std::ptrdiff_t>(p), worst.end(), true);
    const auto bottom = recall_curve(worst, grid);
    Relevance any = worst;
    std::shuffle(any.begin(), any.end(), rng);
    const auto curve = recall_curve(any, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_LE(bottom.points[i].recall, curve.points[i].recall);
  }
}

// An ideal ranking reads ceil(i * N / 100) documents at grid point i.
TEST(Curve, OracleCurveMatchesIntegerCount) {
  const auto grid = default_grid();
  for (std::size_t n : {37u, 100u, 250u}) {
    for (std::size_t p : {1u, 9u, 30u}) {
      Relevance r(n, false);
      std::fill(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(p), true);
      const auto c = recall_curve(r, grid);
      for (std::size_t i = 1; i <= 100; ++i) {
        const std::size_t read = std::max<std::size_t>(1, (i * n + 99) / 100);
        const double want = static_cast<double>(std::min(read, p)) / static_cast<double>(p);
        EXPECT_EQ(c.points[i - 1].recall, want) << n << " " << p << " " << i;
      }
    }
  }
}

TEST(Curve, GridValidation) {
  const auto g = default_grid();
  ASSERT_EQ(g.size(), 100u);
  EXPECT_EQ(g.front(), 0.01);
  EXPECT_EQ(g[6], 0.07);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_NO_THROW(check_grid(g));
  EXPECT_THROW(check_grid(std::vector<double>{0.5, 0.25}), Error);
  EXPECT_THROW(check_grid(std::vector<double>{0.0, 0.5}), Error);
  EXPECT_THROW(check_grid(std::vector<double>{0.5, 1.1}), Error);
  EXPECT_THROW(check_grid(std::vector<double>{}), Error);
  EXPECT_THROW(check_grid(std::vector<double>{0.5, 0.5}), Error);
}

TEST(AveragePrecision, HandExamples) {
  EXPECT_NEAR(average_precision(rel("+-+")), (1.0 / 1 + 2.0 / 3) / 2, 1e-15);
  EXPECT_EQ(average_precision(rel("-+")), 0.5);
  EXPECT_EQ(average_precision(rel("+++--")), 1.0);
  EXPECT_EQ(average_precision(rel("+")), 1.0);
  EXPECT_THROW(average_precision(rel("--")), Error);
}

TEST(AveragePrecision, OneIffPerfectSeparation) {
  for (unsigned n = 1; n <= 10; ++n) {
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
      Relevance r(n);
      for (unsigned i = 0; i < n; ++i) r[i] = (mask >> i) & 1u;
      const bool separated = std::is_partitioned(r.begin(), r.end(), [](bool b) { return b; });
      EXPECT_EQ(average_precision(r) == 1.0, separated);
    }
  }
}

TEST(AveragePrecision, ReversedOracleIsMinimal) {
  for (unsigned n = 2; n <= 10; ++n) {
    for (unsigned p = 1; p < n; ++p) {
      Relevance worst(n, false);
      std::fill(worst.end() - p, worst.end(), true);
      const double low = average_precision(worst);
      Relevance r = worst;
      std::sort(r.begin(), r.end());
      do {
        EXPECT_GE(average_precision(r), low);
      } while (std::next_permutation(r.begin(), r.end()));
    }
  }
}

// Mean AP of a seeded-random scorer against a Monte-Carlo estimate from
// uniformly shuffled label orders.
TEST(AveragePrecision, RandomScorerExpectation) {
  const std::size_t n = 60, positives = 12;
  const auto corpus = testing::labeled_corpus(testing::shuffled_labels(n, positives, 99));
  const Query q{"protest", QueryType::kDeclarative, "There is a protest."};
  std::vector<ScoringUnit> units;
  for (const auto& d : corpus.documents()) units.push_back(ScoringUnit{d.doc_id, 0, d.text});

  auto mean_se = [](const std::vector<double>& xs) {
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double v = 0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    return std::make_pair(m, std::sqrt(v / static_cast<double>(xs.size())));
  };

  std::vector<double> artifact;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const RandomBackend backend(seed);
    const RankingConfig config{"generic", "protest", "declarative", "sentence", "random"};
    const auto ranking = rank(aggregate(score_units(units, q, backend), corpus), config, &corpus);
    artifact.push_back(evaluate_ap(ranking, corpus).ap);
  }

  std::vector<double> oracle;
  std::mt19937 rng(2024);
  Relevance r(n, false);
  std::fill(r.begin(), r.begin() + positives, true);
  for (int i = 0; i < 20000; ++i) {
    std::shuffle(r.begin(), r.end(), rng);
    oracle.push_back(brute_ap(r));
  }

  const auto [ma, sa] = mean_se(artifact);
  const auto [mo, so] = mean_se(oracle);
  EXPECT_LE(std::abs(ma - mo), 3 * std::sqrt(sa * sa + so * so)) << ma << " vs " << mo;
}

TEST(Evaluate, FromRankingAndCorpus) {
  const auto corpus = testing::labeled_corpus({true, false, true, false});
  const RankingConfig config{"generic", "protest", "declarative", "sentence", "mock"};
  const auto ranking = rank({{"d00", 0.9, 0, 1}, {"d01", 0.8, 0, 1}, {"d02", 0.7, 0, 1}, {"d03", 0.1, 0, 1}}, config, &corpus);
  const auto ap = evaluate_ap(ranking, corpus);
  EXPECT_NEAR(ap.ap, (1.0 + 2.0 / 3) / 2, 1e-15);
  EXPECT_EQ(ap.n_docs, 4u);
  EXPECT_EQ(ap.n_positives, 2u);
  EXPECT_EQ(ap.config, config);
  EXPECT_EQ(ap.recall.size(), metric_proportions().size());
  const auto curve = evaluate_curve(ranking, corpus, std::vector<double>{0.25, 0.5, 0.75, 1.0});
  EXPECT_EQ(curve.points[1].recall, 0.5);
  EXPECT_EQ(relevance(ranking, corpus, "protest"), rel("+-+-"));
}

TEST(MeanAp, PublishedGroupExamples) {
  auto result = [](std::string backend, std::string task, double ap) {
    ApResult r;
    r.config = {"india", std::move(task), "declarative", "sentence", std::move(backend)};
    r.ap = ap;
    return r;
  };
  std::vector<ApResult> rs;
  const std::vector<std::string> tasks = {"kill", "arrest", "fail", "force", "any_action"};
  const double dlm[] = {0.96, 0.94, 0.65, 0.91, 0.89, 0.89, 0.63, 0.47, 0.71, 0.69};
  const double rlm[] = {0.55, 0.91, 0.34, 0.66, 0.42, 0.36, 0.26, 0.23, 0.18, 0.38};
  for (int i = 0; i < 10; ++i) {
    auto a = result("dlm", tasks[static_cast<std::size_t>(i % 5)], dlm[i]);
    auto b = result("rlm", tasks[static_cast<std::size_t>(i % 5)], rlm[i]);
    if (i >= 5) a.config.qtype = b.config.qtype = "definitional";
    rs.push_back(a);
    rs.push_back(b);
  }
  const std::vector<ConfigDim> by = {ConfigDim::kBackend, ConfigDim::kGranularity};
  const auto means = mean_ap(rs, by);
  ASSERT_EQ(means.size(), 2u);
  EXPECT_EQ(means[0].key, (std::vector<std::string>{"dlm", "sentence"}));
  EXPECT_NEAR(means[0].mean, 0.774, 1e-12);
  EXPECT_EQ(means[0].count, 10u);
  EXPECT_NEAR(means[1].mean, 0.429, 1e-12);

  const std::vector<ApResult> single = {result("dlm", "kill", 0.37)};
  EXPECT_EQ(mean_ap(single, by)[0].mean, 0.37);
  EXPECT_THROW(mean_ap(std::vector<ApResult>{}, by), Error);
}

TEST(MeanAp, ConfigDims) {
  EXPECT_EQ(parse_config_dim("backend"), ConfigDim::kBackend);
  EXPECT_EQ(to_string(ConfigDim::kQtype), "qtype");
  EXPECT_THROW(parse_config_dim("colour"), Error);
}

TEST(Files, MetricsAndCurvesRoundTripExact) {
  testing::TempDir tmp;
  const auto corpus = testing::labeled_corpus(testing::shuffled_labels(50, 11, 4));
  const RankingConfig config{"generic", "protest", "definitional", "document", "dlm"};
  std::vector<DocScore> ds;
  std::mt19937_64 rng(1);
  for (const auto& d : corpus.documents()) ds.push_back({d.doc_id, std::generate_canonical<double, 53>(rng), 0, 1});
  const auto ranking = rank(ds, config, &corpus);
  const std::vector<ApResult> results = {evaluate_ap(ranking, corpus)};
  const std::vector<RecallCurve> curves = {evaluate_curve(ranking, corpus, default_grid())};
  write_metrics(tmp / "m.tsv", results);
  write_curves(tmp / "c.tsv", curves);
  const auto m = read_metrics(tmp / "m.tsv");
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].ap, results[0].ap);
  EXPECT_EQ(m[0].config, config);
  EXPECT_EQ(m[0].n_positives, 11u);
  ASSERT_EQ(m[0].recall.size(), results[0].recall.size());
  for (std::size_t i = 0; i < m[0].recall.size(); ++i) EXPECT_EQ(m[0].recall[i].recall, results[0].recall[i].recall);
  const auto c = read_curves(tmp / "c.tsv");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].config, config);
  ASSERT_EQ(c[0].points.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(c[0].points[i].proportion, curves[0].points[i].proportion);
    EXPECT_EQ(c[0].points[i].recall, curves[0].points[i].recall);
  }
  const auto header = testing::slurp(tmp / "m.tsv").substr(0, 200);
  EXPECT_NE(header.find("recall@5%"), std::string::npos);
  EXPECT_NE(header.find("\tap\t"), std::string::npos);
}

}  // namespace
}  // namespace entrank
