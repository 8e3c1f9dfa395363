#pragma once

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lexgraph/corpus.hpp"
#include "lexgraph/expansion.hpp"

namespace lexgraph {

[[nodiscard]] inline nlohmann::json graph_to_json(const WordGraph& graph, const EmbeddingCorpus& corpus) {
    auto nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes()) {
        nodes.push_back({{"word", n.word},
                         {"depth", n.depth},
                         {"discovery_score", n.discovery_score},
                         {"occurrence_count", corpus.occurrence_count(n.word)}});
    }
    auto edges = nlohmann::json::array();
    for (const auto& e : graph.edges()) edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
    return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

namespace detail {

inline std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

inline std::string fixed(double v, int digits = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace detail

// Graphviz rendering: node size grows with corpus occurrence count, fill
// saturation with discovery similarity, edge pen width with weight.
[[nodiscard]] inline std::string graph_to_dot(const WordGraph& graph, const EmbeddingCorpus& corpus) {
    std::size_t max_count = 1;
    for (const auto& n : graph.nodes()) max_count = std::max(max_count, corpus.occurrence_count(n.word));

    std::ostringstream out;
    out << "digraph lexgraph {\n";
    out << "  node [shape=circle, style=filled, fixedsize=true];\n";
    for (const auto& n : graph.nodes()) {
        const double count = static_cast<double>(corpus.occurrence_count(n.word));
        const double size = 0.5 + 1.5 * count / static_cast<double>(max_count);
        const double sat = std::clamp(n.discovery_score, 0.0, 1.0);
        out << "  " << detail::dot_quote(n.word) << " [label=" << detail::dot_quote(n.word)
            << ", width=" << detail::fixed(size) << ", height=" << detail::fixed(size)
            << ", fillcolor=\"0.000 " << detail::fixed(sat) << " 1.000\""
            << ", depth=" << n.depth << "];\n";
    }
    for (const auto& e : graph.edges()) {
        out << "  " << detail::dot_quote(e.from) << " -> " << detail::dot_quote(e.to)
            << " [label=" << detail::dot_quote(detail::fixed(e.weight, 2))
            << ", penwidth=" << detail::fixed(0.5 + 4.0 * std::max(e.weight, 0.0)) << "];\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace lexgraph
