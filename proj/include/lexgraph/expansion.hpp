#pragma once

// Graph-based iterative expansion. A session holds a context embedding that
// starts at the seed's embedding; each expanded node t queries the corpus with
// k * context + (1 - k) * Emb(t), the top n fresh words become nodes one
// depth further, and once every node of a depth has been expanded the context
// embedding absorbs the m nodes of that depth closest to it:
//
//     context <- (context + sum of selected embeddings) / (selected + 1)

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lexgraph/corpus.hpp"
#include "lexgraph/error.hpp"
#include "lexgraph/search.hpp"
#include "lexgraph/vector_math.hpp"

namespace lexgraph {

struct ExpansionParams {
    double k = 0.3;               // context-embedding weight in the query blend
    std::size_t n = 5;            // fresh words taken per expanded node
    std::size_t m = 5;            // words absorbed into the context per depth
    std::size_t max_depth = 3;
    ScanConfig scan;

    // Symptom-detection setting: k 0.3, depth 3, n 5.
    static ExpansionParams covid() { return {}; }

    // Adverse-drug-reaction setting: k 0.2, depth 3, n 5.
    static ExpansionParams adr() {
        ExpansionParams p;
        p.k = 0.2;
        return p;
    }

    void validate() const {
        if (!(k >= 0.0 && k <= 1.0)) throw InvalidArgument("k must lie in [0, 1]");
        if (n < 1) throw InvalidArgument("n must be positive");
        if (m < 1) throw InvalidArgument("m must be positive");
        if (max_depth < 1) throw InvalidArgument("max_depth must be >= 1");
        scan.validate();
    }
};

struct GraphNode {
    std::string word;
    Vector embedding;
    std::size_t depth = 0;
    double discovery_score = 1.0;
};

struct GraphEdge {
    std::string from;
    std::string to;
    double weight = 0.0;

    bool operator==(const GraphEdge&) const = default;
};

// Directed weighted word graph. Nodes keep discovery order.
class WordGraph {
public:
    const std::vector<GraphNode>& nodes() const noexcept { return nodes_; }
    const std::vector<GraphEdge>& edges() const noexcept { return edges_; }

    bool contains(std::string_view word) const { return index_.find(word) != index_.end(); }

    const GraphNode* find(std::string_view word) const {
        auto it = index_.find(word);
        return it == index_.end() ? nullptr : &nodes_[it->second];
    }

    const GraphNode& at(std::string_view word) const {
        const auto* n = find(word);
        if (n == nullptr) throw NotFound("graph node", std::string(word));
        return *n;
    }

    void add_node(GraphNode node) {
        if (contains(node.word)) throw StateError("node already exists: " + node.word);
        index_.emplace(node.word, nodes_.size());
        nodes_.push_back(std::move(node));
    }

    void add_edge(GraphEdge edge) { edges_.push_back(std::move(edge)); }

private:
    std::vector<GraphNode> nodes_;
    std::vector<GraphEdge> edges_;
    std::map<std::string, std::size_t, std::less<>> index_;
};

enum class SessionStatus { running, finished };
enum class Label { unreviewed, accepted, rejected };

struct QueueEntry {
    std::string word;
    std::size_t depth = 0;

    bool operator==(const QueueEntry&) const = default;
};

struct HistoryEntry {
    enum class Kind { expand, finish_depth };

    Kind kind = Kind::expand;
    std::string word;   // expanded word (expand only)
    std::size_t depth = 0;  // depth of the expanded node, or the completed depth
    double query_norm = 0.0;
    double node_norm = 0.0;
    double context_norm = 0.0;  // after the step
    std::vector<WordScore> discovered;  // expand: fresh words, in rank order
    std::vector<std::string> linked;    // expand: existing nodes that got an edge
    std::vector<std::string> selected;  // finish_depth: absorbed words

    bool operator==(const HistoryEntry&) const = default;
};

// Everything needed to rebuild a session before its first step.
struct InitialState {
    Vector context;
    std::vector<std::string> roots;  // depth-0 nodes besides the seed (reseeded sessions)
    std::vector<QueueEntry> queue;
};

struct ExpansionSession {
    ExpansionParams params;
    std::string seed_word;
    std::vector<std::uint32_t> seed_doc_ids;
    std::string parent;  // lineage id of the session this one was reseeded from

    Vector context;  // CEmb
    std::deque<QueueEntry> queue;
    WordGraph graph;
    std::map<std::size_t, std::vector<WordScore>> depth_candidates;
    SessionStatus status = SessionStatus::running;
    std::map<std::string, Label> labels;
    std::vector<HistoryEntry> history;

    std::optional<std::size_t> last_expanded_depth;
    std::optional<std::size_t> last_finished_depth;

    InitialState initial;
};

// Seed embedding used for the root node and the initial context: the mean
// over the seed documents when given, else over the whole corpus.
[[nodiscard]] inline Vector seed_query_embedding(const EmbeddingCorpus& corpus, std::string_view seed,
                                                 std::span<const std::uint32_t> seed_doc_ids) {
    return seed_doc_ids.empty() ? representative_embedding(corpus, seed)
                                : seed_embedding(corpus, seed, seed_doc_ids);
}

// (context + sum(selected)) / (selected + 1). No selections leaves context unchanged.
[[nodiscard]] inline Vector absorb_into_context(const Vector& context, std::span<const Vector> selected) {
    Vector out = context;
    for (const auto& e : selected) add_into(out, e);
    scale(out, 1.0 / static_cast<double>(selected.size() + 1));
    return out;
}

[[nodiscard]] inline ExpansionSession init_session(const EmbeddingCorpus& corpus, std::string_view seed_word,
                                                   std::span<const std::uint32_t> seed_doc_ids,
                                                   ExpansionParams params) {
    params.validate();
    if (!corpus.find_token(seed_word)) throw NotFound("word", std::string(seed_word));

    ExpansionSession s;
    s.params = std::move(params);
    s.seed_word = std::string(seed_word);
    s.seed_doc_ids.assign(seed_doc_ids.begin(), seed_doc_ids.end());
    Vector seed_emb = seed_query_embedding(corpus, seed_word, seed_doc_ids);
    s.context = seed_emb;
    s.graph.add_node({s.seed_word, std::move(seed_emb), 0, 1.0});
    s.queue.push_back({s.seed_word, 0});
    s.initial = {s.context, {}, {{s.seed_word, 0}}};
    return s;
}

[[nodiscard]] inline ExpansionSession init_session(const EmbeddingCorpus& corpus, std::string_view seed_word,
                                                   ExpansionParams params = {}) {
    return init_session(corpus, seed_word, {}, std::move(params));
}

// Query embedding for expanding `word` under the current context.
[[nodiscard]] inline Vector query_for(const ExpansionSession& s, std::string_view word) {
    return blend(s.context, s.graph.at(word).embedding, s.params.k);
}

[[nodiscard]] inline ScanConfig expansion_scan_config(const ExpansionSession& s, std::string_view word) {
    ScanConfig cfg = s.params.scan;
    cfg.exclude.insert(std::string(word));
    cfg.top_k.reset();
    return cfg;
}

// Pops the queue front and expands it. Returns the newly created nodes' scores.
inline std::vector<WordScore> expand_node(ExpansionSession& s, const EmbeddingCorpus& corpus) {
    if (s.status == SessionStatus::finished) throw StateError("session is finished");
    if (s.queue.empty()) throw StateError("expansion queue is empty");

    const QueueEntry entry = s.queue.front();
    s.queue.pop_front();
    const std::size_t next_depth = entry.depth + 1;

    const Vector query = query_for(s, entry.word);
    const auto results = scan(corpus, query, expansion_scan_config(s, entry.word));

    HistoryEntry h;
    h.kind = HistoryEntry::Kind::expand;
    h.word = entry.word;
    h.depth = entry.depth;
    h.query_norm = l2_norm(query);
    h.node_norm = l2_norm(s.graph.at(entry.word).embedding);

    // Walk the ranking until n fresh words are taken; nodes already in the
    // graph ranked among them get an edge but do not use up a slot.
    std::vector<WordScore> fresh;
    for (const auto& r : results) {
        if (fresh.size() == s.params.n) break;
        s.graph.add_edge({entry.word, r.word, r.score});
        if (s.graph.contains(r.word)) {
            h.linked.push_back(r.word);
            continue;
        }
        s.graph.add_node({r.word, representative_embedding(corpus, r.word), next_depth, r.score});
        if (next_depth < s.params.max_depth) s.queue.push_back({r.word, next_depth});
        fresh.push_back(r);
    }

    auto& bucket = s.depth_candidates[next_depth];
    bucket.insert(bucket.end(), fresh.begin(), fresh.end());
    s.last_expanded_depth = entry.depth;

    h.discovered = fresh;
    h.context_norm = l2_norm(s.context);
    s.history.push_back(std::move(h));
    return fresh;
}

// True once every node of the last expanded depth has been expanded and that
// depth has not been folded into the context yet.
[[nodiscard]] inline bool at_depth_boundary(const ExpansionSession& s) {
    if (!s.last_expanded_depth) return false;
    if (s.last_finished_depth == s.last_expanded_depth) return false;
    return s.queue.empty() || s.queue.front().depth > *s.last_expanded_depth;
}

// Folds the top m nodes of the completed depth into the context. Depth 0 holds
// no candidates, so closing it leaves the context as is.
inline const Vector& finish_depth(ExpansionSession& s, [[maybe_unused]] const EmbeddingCorpus& corpus) {
    if (!at_depth_boundary(s)) throw StateError("current depth is not fully expanded");
    const std::size_t completed = *s.last_expanded_depth;

    struct Ranked {
        const GraphNode* node;
        double sim;
    };
    std::vector<Ranked> ranked;
    if (auto it = s.depth_candidates.find(completed); it != s.depth_candidates.end()) {
        std::set<std::string> seen;
        for (const auto& c : it->second) {
            if (!seen.insert(c.word).second) continue;
            const auto& node = s.graph.at(c.word);
            ranked.push_back({&node, cosine_similarity(node.embedding, s.context)});
        }
    }
    std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.node->word < b.node->word;
    });
    if (ranked.size() > s.params.m) ranked.resize(s.params.m);

    std::vector<Vector> selected;
    HistoryEntry h;
    h.kind = HistoryEntry::Kind::finish_depth;
    h.depth = completed;
    for (const auto& r : ranked) {
        selected.push_back(r.node->embedding);
        h.selected.push_back(r.node->word);
    }
    s.context = absorb_into_context(s.context, selected);
    s.last_finished_depth = completed;
    h.context_norm = l2_norm(s.context);
    s.history.push_back(std::move(h));
    return s.context;
}

// One expand_node, plus the depth update when it closes a depth.
inline std::vector<WordScore> step(ExpansionSession& s, const EmbeddingCorpus& corpus) {
    auto fresh = expand_node(s, corpus);
    if (at_depth_boundary(s)) finish_depth(s, corpus);
    if (s.queue.empty()) s.status = SessionStatus::finished;
    return fresh;
}

// Every node except the seed, scored by cosine to the final context.
// surviving_count carries the corpus occurrence count so the scan tie-break
// rule applies unchanged.
[[nodiscard]] inline std::vector<WordScore> rank_results(const ExpansionSession& s, const EmbeddingCorpus& corpus) {
    if (s.status != SessionStatus::finished) throw StateError("session is not finished");
    std::vector<WordScore> out;
    for (const auto& node : s.graph.nodes()) {
        if (node.word == s.seed_word) continue;
        const auto count = corpus.occurrence_count(node.word);
        out.push_back({node.word, cosine_similarity(node.embedding, s.context), count, count});
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

inline std::pair<const WordGraph*, std::vector<WordScore>> run(ExpansionSession& s, const EmbeddingCorpus& corpus) {
    if (s.status == SessionStatus::finished) throw StateError("session is finished");
    while (s.status == SessionStatus::running) step(s, corpus);
    return {&s.graph, rank_results(s, corpus)};
}

// Follow-up session: context = mean of the final context and the accepted
// words' embeddings; the accepted words become depth-0 roots and form the
// initial queue.
[[nodiscard]] inline ExpansionSession reseed(const ExpansionSession& s, const std::set<std::string>& accepted,
                                             const EmbeddingCorpus& corpus,
                                             std::optional<ExpansionParams> params = std::nullopt) {
    if (s.status != SessionStatus::finished) throw StateError("only finished sessions can be reseeded");
    if (accepted.empty()) throw InvalidArgument("reseed needs at least one accepted word");
    for (const auto& w : accepted) {
        if (!s.graph.contains(w)) throw NotFound("graph node", w);
    }

    ExpansionSession next;
    next.params = params.value_or(s.params);
    next.params.validate();
    next.seed_word = s.seed_word;
    next.seed_doc_ids = s.seed_doc_ids;

    std::vector<Vector> embs;
    for (const auto& w : accepted) embs.push_back(s.graph.at(w).embedding);
    next.context = absorb_into_context(s.context, embs);

    next.graph.add_node({s.seed_word, s.graph.at(s.seed_word).embedding, 0, 1.0});
    for (const auto& w : accepted) {
        if (w != s.seed_word) {
            next.graph.add_node({w, representative_embedding(corpus, w), 0, 1.0});
            next.initial.roots.push_back(w);
        }
        next.queue.push_back({w, 0});
    }
    next.initial.context = next.context;
    next.initial.queue.assign(next.queue.begin(), next.queue.end());
    return next;
}

}  // namespace lexgraph
