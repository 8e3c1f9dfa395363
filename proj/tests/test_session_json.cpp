#include <regex>

#include <gtest/gtest.h>

#include "lexgraph/graph_export.hpp"
#include "lexgraph/session_json.hpp"
#include "support/fixtures.hpp"

using namespace lexgraph;
using fixtures::planted_corpus;
using fixtures::random_corpus;

namespace {

ExpansionParams params(unsigned threads = 1) {
    ExpansionParams p;
    p.scan.min_count = 1;
    p.scan.min_sim = 0.1;
    p.scan.threads = threads;
    return p;
}

std::vector<std::uint32_t> first_docs(const EmbeddingCorpus& c, std::string_view w, std::size_t n) {
    std::vector<std::uint32_t> docs;
    for (const auto& h : occurrences_of(c, w)) {
        if (docs.empty() || docs.back() != h.document->id) docs.push_back(h.document->id);
        if (docs.size() == n) break;
    }
    return docs;
}

}  // namespace

TEST(Snapshot, RoundTripIsByteIdentical) {
    const auto c = random_corpus(31, 80, 2400, 6).build();
    auto s = init_session(c, "w1", first_docs(c, "w1", 5), params());
    (void)run(s, c);
    s.labels["w1"] = Label::accepted;
    const auto j = session_to_json(s, c);
    EXPECT_EQ(session_to_json(session_from_json(j, c), c).dump(), j.dump());
    EXPECT_EQ(session_to_json(session_from_json(nlohmann::json::parse(j.dump()), c), c).dump(), j.dump());
}

TEST(Snapshot, TwoRunsAreByteIdenticalAcrossThreadCounts) {
    const auto c = random_corpus(32, 300, 30000, 8).build();
    std::string reference;
    for (unsigned threads : {1u, 1u, 4u}) {
        auto s = init_session(c, "w7", params(threads));
        (void)run(s, c);
        auto j = session_to_json(s, c);
        j["params"]["scan"].erase("threads");
        if (reference.empty()) reference = j.dump();
        EXPECT_EQ(j.dump(), reference) << threads;
    }
}

TEST(Snapshot, ThreadsAreNotSerialized) {
    const auto c = random_corpus(33, 10, 100, 4).build();
    const auto j = session_to_json(init_session(c, "w0", params(3)), c);
    EXPECT_FALSE(j["params"]["scan"].contains("threads"));
}

TEST(Replay, ReproducesFinishedSession) {
    const auto pc = planted_corpus(5);
    const auto c = pc.raw.build();
    auto s = init_session(c, "sym2", ExpansionParams::covid());
    (void)run(s, c);
    const auto j = session_to_json(s, c);
    EXPECT_TRUE(verify_replay(j, c));
    EXPECT_EQ(session_to_json(replay(j, c), c).dump(), j.dump());
}

TEST(Replay, DetectsTampering) {
    const auto c = random_corpus(34, 60, 1800, 6).build();
    auto s = init_session(c, "w3", params());
    (void)run(s, c);
    auto j = session_to_json(s, c);
    j["context"][0] = j["context"][0].get<double>() + 1.0;
    EXPECT_FALSE(verify_replay(j, c));

    auto k = session_to_json(s, c);
    ASSERT_FALSE(k["history"].empty());
    k["history"][0]["word"] = "w59";
    EXPECT_THROW((void)replay(k, c), StateError);
}

TEST(Replay, ReloadAndContinueEqualsUninterruptedRun) {
    const auto c = random_corpus(35, 120, 4000, 6).build();
    auto whole = init_session(c, "w9", params());
    (void)run(whole, c);
    const auto expected = session_to_json(whole, c).dump();

    for (int cut : {1, 2, 5, 9}) {
        auto s = init_session(c, "w9", params());
        for (int i = 0; i < cut && s.status == SessionStatus::running; ++i) (void)step(s, c);
        const auto text = session_to_json(s, c).dump();

        auto restored = session_from_json(nlohmann::json::parse(text), c);
        if (restored.status == SessionStatus::running) (void)run(restored, c);
        EXPECT_EQ(session_to_json(restored, c).dump(), expected) << "restored at step " << cut;

        auto replayed = replay(nlohmann::json::parse(text), c);
        if (replayed.status == SessionStatus::running) (void)run(replayed, c);
        EXPECT_EQ(session_to_json(replayed, c).dump(), expected) << "replayed at step " << cut;
    }
}

TEST(Replay, ReseededSessionReplays) {
    const auto pc = planted_corpus(6);
    const auto c = pc.raw.build();
    auto s = init_session(c, "sym0", ExpansionParams::covid());
    (void)run(s, c);
    auto next = reseed(s, {"sym1", "sym2"}, c);
    (void)run(next, c);
    EXPECT_TRUE(verify_replay(session_to_json(next, c), c));
}

TEST(StateHash, IgnoresLabelsOnly) {
    const auto c = random_corpus(36, 30, 600, 5).build();
    auto s = init_session(c, "w2", params());
    (void)run(s, c);
    const auto before = state_hash(s, c);
    EXPECT_EQ(before.size(), 16u);
    s.labels["w2"] = Label::rejected;
    EXPECT_EQ(state_hash(s, c), before);
    s.context[0] += 1e-12;
    EXPECT_NE(state_hash(s, c), before);
}

TEST(Snapshot, RejectsForeignDocuments) {
    const auto c = random_corpus(37, 10, 100, 4).build();
    auto j = session_to_json(init_session(c, "w0", params()), c);
    auto wrong = j;
    wrong["format"] = "something-else";
    EXPECT_THROW((void)session_from_json(wrong, c), InvalidArgument);
    wrong = j;
    wrong["version"] = 2;
    EXPECT_THROW((void)session_from_json(wrong, c), InvalidArgument);
    const auto other = random_corpus(37, 10, 100, 5).build();
    EXPECT_THROW((void)session_from_json(j, other), InvalidArgument);
}

TEST(LabelText, RoundTrip) {
    for (auto l : {Label::unreviewed, Label::accepted, Label::rejected}) EXPECT_EQ(parse_label(to_string(l)), l);
    EXPECT_THROW((void)parse_label("maybe"), InvalidArgument);
}

TEST(GraphExport, JsonFields) {
    const auto c = random_corpus(38, 40, 1200, 6).build();
    auto s = init_session(c, "w4", params());
    (void)run(s, c);
    const auto j = graph_to_json(s.graph, c);
    ASSERT_EQ(j["nodes"].size(), s.graph.nodes().size());
    ASSERT_EQ(j["edges"].size(), s.graph.edges().size());
    const auto& seed = j["nodes"][0];
    EXPECT_EQ(seed["word"], "w4");
    EXPECT_EQ(seed["depth"], 0);
    EXPECT_EQ(seed["discovery_score"], 1.0);
    EXPECT_EQ(seed["occurrence_count"], c.occurrence_count("w4"));
    for (const auto& e : j["edges"]) {
        EXPECT_TRUE(e.contains("from") && e.contains("to") && e.contains("weight"));
    }
}

TEST(GraphExport, DotSizeAndPenWidthFollowCountAndWeight) {
    // "big" occurs 4x, "small" once.
    const auto c = fixtures::make_corpus(2, {{{"seed", {1, 0}}, {"big", {1, 0.1f}}, {"big", {1, 0.1f}}},
                                             {{"big", {1, 0.1f}}, {"big", {1, 0.12f}}, {"small", {1, 0.9f}}}})
                       .build();
    ExpansionParams p;
    p.scan.min_count = 1;
    auto s = init_session(c, "seed", p);
    (void)run(s, c);
    const auto dot = graph_to_dot(s.graph, c);
    EXPECT_EQ(dot.rfind("digraph", 0), 0u);

    const std::regex node_re(R"re("([a-z]+)" \[label="\1", width=([0-9.]+).*fillcolor="0\.000 ([0-9.]+) 1\.000")re");
    std::map<std::string, double> width, sat;
    for (auto it = std::sregex_iterator(dot.begin(), dot.end(), node_re); it != std::sregex_iterator(); ++it) {
        width[(*it)[1]] = std::stod((*it)[2]);
        sat[(*it)[1]] = std::stod((*it)[3]);
    }
    ASSERT_EQ(width.size(), 3u);
    EXPECT_GT(width["big"], width["small"]);
    EXPECT_GT(sat["big"], sat["small"]);

    const std::regex edge_re(R"re("seed" -> "([a-z]+)" \[label="[0-9.]+", penwidth=([0-9.]+)\])re");
    std::map<std::string, double> pen;
    for (auto it = std::sregex_iterator(dot.begin(), dot.end(), edge_re); it != std::sregex_iterator(); ++it) {
        pen[(*it)[1]] = std::stod((*it)[2]);
    }
    ASSERT_EQ(pen.size(), 2u);
    EXPECT_GT(pen["big"], pen["small"]);
}

TEST(GraphExport, DotQuotesAwkwardTokens) {
    const auto c = fixtures::make_corpus(2, {{{"say\"hi", {1, 0}}}}).build();
    const auto s = init_session(c, "say\"hi");
    EXPECT_NE(graph_to_dot(s.graph, c).find(R"("say\"hi")"), std::string::npos);
}
