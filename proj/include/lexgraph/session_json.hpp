#pragma once

// Session snapshots: one JSON document holding parameters, context embedding,
// queue, graph, per-depth candidates, labels and the step history. Node
// embeddings are not stored; they are recomputed from the corpus on load.
// Replay rebuilds the initial state and re-runs every recorded expansion.

#include <cstdint>
#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "lexgraph/expansion.hpp"
#include "lexgraph/graph_export.hpp"
#include "lexgraph/search.hpp"

namespace lexgraph {

inline constexpr const char* kSessionFormat = "lexgraph-session";

[[nodiscard]] inline std::string_view to_string(Label l) {
    switch (l) {
        case Label::accepted: return "accepted";
        case Label::rejected: return "rejected";
        default: return "unreviewed";
    }
}

[[nodiscard]] inline Label parse_label(std::string_view s) {
    if (s == "accepted") return Label::accepted;
    if (s == "rejected") return Label::rejected;
    if (s == "unreviewed") return Label::unreviewed;
    throw InvalidArgument("unknown label '" + std::string(s) + "'");
}

[[nodiscard]] inline std::string_view to_string(TokenFilter f) {
    return f == TokenFilter::none ? "none" : "alphabetic";
}

[[nodiscard]] inline TokenFilter parse_token_filter(std::string_view s) {
    if (s == "alphabetic") return TokenFilter::alphabetic;
    if (s == "none") return TokenFilter::none;
    throw InvalidArgument("unknown token filter '" + std::string(s) + "'");
}

// `threads` is deliberately not serialized: it never affects results.
inline void to_json(nlohmann::json& j, const ScanConfig& c) {
    j = {{"min_sim", c.min_sim},
         {"min_count", c.min_count},
         {"exclude", c.exclude},
         {"token_filter", std::string(to_string(c.token_filter))},
         {"top_k", c.top_k ? nlohmann::json(*c.top_k) : nlohmann::json(nullptr)},
         {"average_first", c.average_first}};
}

inline void from_json(const nlohmann::json& j, ScanConfig& c) {
    c = ScanConfig{};
    c.min_sim = j.value("min_sim", c.min_sim);
    c.min_count = j.value("min_count", c.min_count);
    if (j.contains("exclude")) c.exclude = j.at("exclude").get<std::set<std::string>>();
    if (j.contains("token_filter")) c.token_filter = parse_token_filter(j.at("token_filter").get<std::string>());
    if (j.contains("top_k") && !j.at("top_k").is_null()) c.top_k = j.at("top_k").get<std::size_t>();
    c.average_first = j.value("average_first", false);
}

inline void to_json(nlohmann::json& j, const ExpansionParams& p) {
    j = {{"k", p.k}, {"n", p.n}, {"m", p.m}, {"max_depth", p.max_depth}, {"scan", p.scan}};
}

inline void from_json(const nlohmann::json& j, ExpansionParams& p) {
    p = ExpansionParams{};
    p.k = j.value("k", p.k);
    p.n = j.value("n", p.n);
    p.m = j.value("m", p.m);
    p.max_depth = j.value("max_depth", p.max_depth);
    if (j.contains("scan")) p.scan = j.at("scan").get<ScanConfig>();
}

inline void to_json(nlohmann::json& j, const QueueEntry& q) { j = {{"word", q.word}, {"depth", q.depth}}; }

inline void from_json(const nlohmann::json& j, QueueEntry& q) {
    q.word = j.at("word").get<std::string>();
    q.depth = j.at("depth").get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const HistoryEntry& h) {
    if (h.kind == HistoryEntry::Kind::expand) {
        j = {{"kind", "expand"},         {"word", h.word},
             {"depth", h.depth},         {"query_norm", h.query_norm},
             {"node_norm", h.node_norm}, {"context_norm", h.context_norm},
             {"discovered", h.discovered}, {"linked", h.linked}};
    } else {
        j = {{"kind", "finish_depth"},
             {"depth", h.depth},
             {"context_norm", h.context_norm},
             {"selected", h.selected}};
    }
}

inline void from_json(const nlohmann::json& j, HistoryEntry& h) {
    h = HistoryEntry{};
    const auto kind = j.at("kind").get<std::string>();
    h.depth = j.at("depth").get<std::size_t>();
    h.context_norm = j.at("context_norm").get<double>();
    if (kind == "expand") {
        h.kind = HistoryEntry::Kind::expand;
        h.word = j.at("word").get<std::string>();
        h.query_norm = j.at("query_norm").get<double>();
        h.node_norm = j.at("node_norm").get<double>();
        h.discovered = j.at("discovered").get<std::vector<WordScore>>();
        h.linked = j.at("linked").get<std::vector<std::string>>();
    } else if (kind == "finish_depth") {
        h.kind = HistoryEntry::Kind::finish_depth;
        h.selected = j.at("selected").get<std::vector<std::string>>();
    } else {
        throw InvalidArgument("unknown history entry kind '" + kind + "'");
    }
}

namespace detail {

inline nlohmann::json optional_depth(const std::optional<std::size_t>& d) {
    return d ? nlohmann::json(*d) : nlohmann::json(nullptr);
}

inline std::optional<std::size_t> read_optional_depth(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::size_t>();
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace detail

[[nodiscard]] inline nlohmann::json session_to_json(const ExpansionSession& s, const EmbeddingCorpus& corpus) {
    auto candidates = nlohmann::json::array();
    for (const auto& [depth, words] : s.depth_candidates) {
        candidates.push_back({{"depth", depth}, {"candidates", words}});
    }
    auto labels = nlohmann::json::object();
    for (const auto& [word, label] : s.labels) labels[word] = std::string(to_string(label));

    return {{"format", kSessionFormat},
            {"version", 1},
            {"seed", s.seed_word},
            {"seed_doc_ids", s.seed_doc_ids},
            {"parent", s.parent},
            {"params", s.params},
            {"status", s.status == SessionStatus::finished ? "finished" : "running"},
            {"context", s.context},
            {"queue", std::vector<QueueEntry>(s.queue.begin(), s.queue.end())},
            {"graph", graph_to_json(s.graph, corpus)},
            {"depth_candidates", std::move(candidates)},
            {"labels", std::move(labels)},
            {"last_expanded_depth", detail::optional_depth(s.last_expanded_depth)},
            {"last_finished_depth", detail::optional_depth(s.last_finished_depth)},
            {"initial",
             {{"context", s.initial.context}, {"roots", s.initial.roots}, {"queue", s.initial.queue}}},
            {"history", s.history}};
}

// Hash of the engine state (everything but labels), as hex.
[[nodiscard]] inline std::string state_hash(const nlohmann::json& snapshot) {
    nlohmann::json engine = snapshot;
    engine.erase("labels");
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(detail::fnv1a(engine.dump())));
    return buf;
}

[[nodiscard]] inline std::string state_hash(const ExpansionSession& s, const EmbeddingCorpus& corpus) {
    return state_hash(session_to_json(s, corpus));
}

namespace detail {

inline GraphNode make_node(const EmbeddingCorpus& corpus, const ExpansionSession& s, std::string word,
                           std::size_t depth, double score) {
    Vector emb = word == s.seed_word ? seed_query_embedding(corpus, s.seed_word, s.seed_doc_ids)
                                     : representative_embedding(corpus, word);
    return {std::move(word), std::move(emb), depth, score};
}

inline void read_header(const nlohmann::json& j, ExpansionSession& s) {
    if (j.value("format", "") != kSessionFormat) throw InvalidArgument("not a session snapshot");
    if (j.value("version", 0) != 1) throw InvalidArgument("unsupported session snapshot version");
    s.seed_word = j.at("seed").get<std::string>();
    s.seed_doc_ids = j.at("seed_doc_ids").get<std::vector<std::uint32_t>>();
    s.parent = j.value("parent", "");
    s.params = j.at("params").get<ExpansionParams>();
    s.params.validate();
    const auto& init = j.at("initial");
    s.initial.context = init.at("context").get<Vector>();
    s.initial.roots = init.at("roots").get<std::vector<std::string>>();
    s.initial.queue = init.at("queue").get<std::vector<QueueEntry>>();
}

inline void read_labels(const nlohmann::json& j, ExpansionSession& s) {
    s.labels.clear();
    for (const auto& [word, label] : j.at("labels").items()) s.labels[word] = parse_label(label.get<std::string>());
}

inline ExpansionSession initial_session(const nlohmann::json& j, const EmbeddingCorpus& corpus) {
    ExpansionSession s;
    read_header(j, s);
    if (s.initial.context.size() != corpus.dim()) throw InvalidArgument("snapshot dimension does not match corpus");
    s.context = s.initial.context;
    s.graph.add_node(make_node(corpus, s, s.seed_word, 0, 1.0));
    for (const auto& r : s.initial.roots) s.graph.add_node(make_node(corpus, s, r, 0, 1.0));
    s.queue.assign(s.initial.queue.begin(), s.initial.queue.end());
    return s;
}

}  // namespace detail

// Restores the stored state directly (no recomputation of steps).
[[nodiscard]] inline ExpansionSession session_from_json(const nlohmann::json& j, const EmbeddingCorpus& corpus) {
    ExpansionSession s;
    detail::read_header(j, s);
    s.context = j.at("context").get<Vector>();
    if (s.context.size() != corpus.dim()) throw InvalidArgument("snapshot dimension does not match corpus");
    const auto queue = j.at("queue").get<std::vector<QueueEntry>>();
    s.queue.assign(queue.begin(), queue.end());
    const auto& g = j.at("graph");
    for (const auto& n : g.at("nodes")) {
        s.graph.add_node(detail::make_node(corpus, s, n.at("word").get<std::string>(),
                                           n.at("depth").get<std::size_t>(), n.at("discovery_score").get<double>()));
    }
    for (const auto& e : g.at("edges")) {
        s.graph.add_edge({e.at("from").get<std::string>(), e.at("to").get<std::string>(), e.at("weight").get<double>()});
    }
    for (const auto& c : j.at("depth_candidates")) {
        s.depth_candidates[c.at("depth").get<std::size_t>()] = c.at("candidates").get<std::vector<WordScore>>();
    }
    s.status = j.at("status").get<std::string>() == "finished" ? SessionStatus::finished : SessionStatus::running;
    s.last_expanded_depth = detail::read_optional_depth(j, "last_expanded_depth");
    s.last_finished_depth = detail::read_optional_depth(j, "last_finished_depth");
    s.history = j.at("history").get<std::vector<HistoryEntry>>();
    detail::read_labels(j, s);
    return s;
}

// Rebuilds the session from its initial state by re-running every recorded
// expansion. Labels are carried over unchanged.
[[nodiscard]] inline ExpansionSession replay(const nlohmann::json& j, const EmbeddingCorpus& corpus) {
    ExpansionSession s = detail::initial_session(j, corpus);
    for (const auto& h : j.at("history")) {
        if (h.at("kind").get<std::string>() != "expand") continue;
        if (s.queue.empty() || s.queue.front().word != h.at("word").get<std::string>()) {
            throw StateError("history does not replay: expected to expand '" + h.at("word").get<std::string>() + "'");
        }
        step(s, corpus);
    }
    detail::read_labels(j, s);
    return s;
}

// Replays `snapshot` and checks the result reproduces it exactly.
[[nodiscard]] inline bool verify_replay(const nlohmann::json& snapshot, const EmbeddingCorpus& corpus) {
    const auto replayed = replay(snapshot, corpus);
    return state_hash(session_to_json(replayed, corpus)) == state_hash(snapshot);
}

}  // namespace lexgraph
