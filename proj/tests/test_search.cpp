#include <random>

#include <gtest/gtest.h>

#include "lexgraph/search.hpp"
#include "support/fixtures.hpp"

using namespace lexgraph;
using fixtures::make_corpus;
using fixtures::oracle_scan;
using fixtures::random_corpus;

namespace {

ScanConfig loose() {
    ScanConfig c;
    c.min_count = 1;
    return c;
}

Vector random_query(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> g;
    Vector q(dim);
    for (auto& x : q) x = g(rng);
    return q;
}

void expect_same(const std::vector<WordScore>& got, const std::vector<WordScore>& want) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].word, want[i].word) << "rank " << i;
        EXPECT_NEAR(got[i].score, want[i].score, 1e-9);
        EXPECT_EQ(got[i].surviving_count, want[i].surviving_count);
        EXPECT_EQ(got[i].total_count, want[i].total_count);
    }
}

}  // namespace

TEST(Scan, SelfSimilarityRanksFirstWithScoreOne) {
    const auto c = make_corpus(3, {{{"fever", {1, 2, 3}}, {"cough", {3, -1, 0}}, {"chills", {1, 2, 2}}}}).build();
    const auto out = scan(c, Vector{1, 2, 3}, loose());
    ASSERT_FALSE(out.empty());
    EXPECT_EQ(out[0].word, "fever");
    EXPECT_DOUBLE_EQ(out[0].score, 1.0);
}

TEST(Scan, EverythingBelowThresholdGivesEmptyResult) {
    const auto c = make_corpus(2, {{{"a", {0, 1}}, {"b", {-1, 0.2f}}}}).build();
    EXPECT_TRUE(scan(c, Vector{1, 0}, loose()).empty());
}

TEST(Scan, ThresholdsOccurrencesThenAveragesSurvivors) {
    // x: sims 1.0, 0.6, 0.0 -> survivors {1.0, 0.6}
    const auto c = make_corpus(2, {{{"x", {1, 0}}, {"x", {0.6f, 0.8f}}, {"x", {0, 1}}}}).build();
    const auto out = scan(c, Vector{1, 0}, loose());
    ASSERT_EQ(out.size(), 1u);
    EXPECT_NEAR(out[0].score, 0.8, 1e-7);
    EXPECT_EQ(out[0].surviving_count, 2u);
    EXPECT_EQ(out[0].total_count, 3u);

    auto avg_first = loose();
    avg_first.average_first = true;
    const auto alt = scan(c, Vector{1, 0}, avg_first);
    ASSERT_EQ(alt.size(), 1u);
    EXPECT_NEAR(alt[0].score, 1.6 / 3.0, 1e-7);
    EXPECT_EQ(alt[0].surviving_count, 3u);
}

TEST(Scan, MinCountTokenFilterExcludeAndTopK) {
    const auto c = make_corpus(2, {{{"a", {1, 0}}, {"a", {1, 0.1f}}, {"b", {1, 0.2f}}, {"42", {1, 0}}, {"##x", {1, 0.3f}}}})
                       .build();
    auto cfg = loose();
    EXPECT_EQ(scan(c, Vector{1, 0}, cfg).size(), 3u);  // "42" filtered
    cfg.token_filter = TokenFilter::none;
    EXPECT_EQ(scan(c, Vector{1, 0}, cfg).size(), 4u);
    cfg.min_count = 2;
    ASSERT_EQ(scan(c, Vector{1, 0}, cfg).size(), 1u);
    cfg.min_count = 1;
    cfg.exclude = {"a"};
    cfg.top_k = 2;
    const auto out = scan(c, Vector{1, 0}, cfg);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].word, "42");
    EXPECT_EQ(out[1].word, "b");
}

TEST(Scan, TiesBreakOnSurvivorsThenToken) {
    const auto c = make_corpus(2, {{{"zeta", {1, 0}}, {"alpha", {2, 0}}, {"beta", {1, 0}}, {"beta", {3, 0}}}}).build();
    const auto out = scan(c, Vector{1, 0}, loose());
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].word, "beta");
    EXPECT_EQ(out[1].word, "alpha");
    EXPECT_EQ(out[2].word, "zeta");
}

TEST(Scan, Errors) {
    const auto c = make_corpus(2, {{{"a", {1, 0}}}}).build();
    EXPECT_THROW((void)scan(c, Vector{1, 0, 0}, loose()), InvalidArgument);
    EXPECT_THROW((void)scan(c, Vector{0, 0}, loose()), InvalidArgument);
    auto bad = loose();
    bad.min_sim = 1.5;
    EXPECT_THROW((void)scan(c, Vector{1, 0}, bad), InvalidArgument);
    bad = loose();
    bad.min_count = 0;
    EXPECT_THROW((void)scan(c, Vector{1, 0}, bad), InvalidArgument);
}

TEST(Scan, MatchesBruteForceOracleOnHundredTokenCorpus) {
    const auto raw = random_corpus(100, 100, 2000, 12);
    const auto c = raw.build();
    std::mt19937_64 rng(1);
    for (double min_sim : {0.0, 0.1, 0.3}) {
        auto cfg = loose();
        cfg.min_sim = min_sim;
        const auto q = random_query(rng, 12);
        expect_same(scan(c, q, cfg), oracle_scan(raw, q, cfg));
        cfg.average_first = true;
        cfg.min_sim = min_sim / 4;
        expect_same(scan(c, q, cfg), oracle_scan(raw, q, cfg));
    }
}

TEST(ScanProperties, ScoresBoundedAndOrderTotal) {
    const auto raw = random_corpus(8, 80, 1500, 6);
    const auto c = raw.build();
    std::mt19937_64 rng(8);
    for (int t = 0; t < 20; ++t) {
        auto cfg = loose();
        cfg.min_sim = std::uniform_real_distribution<double>(-0.5, 0.5)(rng);
        const auto out = scan(c, random_query(rng, 6), cfg);
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_GE(out[i].score, cfg.min_sim);
            EXPECT_LE(out[i].score, 1.0);
            EXPECT_GE(out[i].surviving_count, 1u);
            EXPECT_LE(out[i].surviving_count, out[i].total_count);
            if (i > 0) EXPECT_TRUE(ranks_before(out[i - 1], out[i]));
        }
    }
}

TEST(ScanProperties, PositiveScalingOfQueryChangesNothing) {
    const auto c = random_corpus(9, 50, 800, 8).build();
    std::mt19937_64 rng(9);
    for (double factor : {1e-6, 0.5, 3.0, 1e6}) {
        const auto q = random_query(rng, 8);
        Vector scaled = q;
        for (auto& x : scaled) x *= factor;
        const auto a = scan(c, q, loose());
        const auto b = scan(c, scaled, loose());
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_EQ(a[i].word, b[i].word);
            EXPECT_NEAR(a[i].score, b[i].score, 1e-12);
        }
    }
}

TEST(ScanProperties, ExclusionIsPointwise) {
    const auto raw = random_corpus(10, 60, 900, 5);
    const auto c = raw.build();
    std::mt19937_64 rng(10);
    const auto q = random_query(rng, 5);
    auto cfg = loose();
    cfg.min_sim = 0.0;
    const auto full = scan(c, q, cfg);
    for (const auto& w : {"w1", "w7", "w30"}) cfg.exclude.insert(w);
    const auto restricted = scan(c, q, cfg);
    std::vector<WordScore> filtered;
    for (const auto& s : full) {
        if (!cfg.exclude.count(s.word)) filtered.push_back(s);
    }
    EXPECT_EQ(restricted, filtered);
}

TEST(ScanProperties, ThreadCountNeverChangesOutput) {
    const auto c = random_corpus(12, 300, 40000, 16).build();
    std::mt19937_64 rng(12);
    const auto q = random_query(rng, 16);
    auto cfg = loose();
    cfg.min_sim = 0.05;
    cfg.threads = 1;
    const auto single = scan(c, q, cfg);
    for (unsigned t : {2u, 3u, 8u}) {
        cfg.threads = t;
        EXPECT_EQ(scan(c, q, cfg), single) << t << " threads";
    }
}

TEST(ManualSearch, SeedExcludedAndNeighbourRanked) {
    const auto c = make_corpus(2, {
                                      {{"dry", {0, 1}}, {"cough", {1, 0.1f}}, {"throat", {1, 0.2f}}},
                                      {{"cough", {1, -0.1f}}, {"sore", {0.2f, 1}}, {"throat", {1, 0}}},
                                  })
                       .build();
    const std::vector<std::uint32_t> seeds{1, 2};
    const auto out = manual_search(c, "cough", seeds, loose());
    ASSERT_FALSE(out.empty());
    EXPECT_EQ(out[0].word, "throat");
    for (const auto& s : out) EXPECT_NE(s.word, "cough");
}

TEST(ManualSearch, FiveSeedTextsAndErrorPropagation) {
    const auto raw = random_corpus(13, 5, 400, 8);
    const auto c = raw.build();
    std::vector<std::uint32_t> docs;
    for (const auto& h : occurrences_of(c, "w0")) {
        if (docs.empty() || docs.back() != h.document->id) docs.push_back(h.document->id);
        if (docs.size() == 5) break;
    }
    ASSERT_EQ(docs.size(), 5u);
    const auto out = manual_search(c, "w0", docs, loose());
    std::set<std::uint32_t> doc_set(docs.begin(), docs.end());
    auto cfg = loose();
    cfg.exclude = {"w0"};
    expect_same(out, oracle_scan(raw, fixtures::oracle_mean(raw, "w0", doc_set), cfg));

    const std::vector<std::uint32_t> empty;
    EXPECT_THROW((void)manual_search(c, "w0", empty, loose()), InvalidArgument);
    EXPECT_THROW((void)manual_search(c, "nope", docs, loose()), NotFound);
}

TEST(WordScoreJson, FieldNames) {
    const WordScore w{"fever", 0.67, 3, 9};
    const nlohmann::json j = w;
    EXPECT_EQ(j.dump(), R"({"score":0.67,"surviving":3,"total":9,"word":"fever"})");
    EXPECT_EQ(j.get<WordScore>(), w);
}
