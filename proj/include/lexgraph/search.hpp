#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexgraph/corpus.hpp"
#include "lexgraph/error.hpp"
#include "lexgraph/vector_math.hpp"

namespace lexgraph {

enum class TokenFilter {
    alphabetic,  // drop tokens without a single letter ("##" fragments still pass)
    none,
};

struct ScanConfig {
    double min_sim = 0.3;
    std::size_t min_count = 3;
    std::set<std::string> exclude;
    TokenFilter token_filter = TokenFilter::alphabetic;
    std::optional<std::size_t> top_k;
    // Average every occurrence first and threshold the mean, instead of
    // thresholding occurrences and averaging the survivors.
    bool average_first = false;
    // Worker threads for the scan; 0 picks hardware concurrency. Never
    // changes the result.
    unsigned threads = 0;

    void validate() const {
        if (!(min_sim >= -1.0 && min_sim <= 1.0)) throw InvalidArgument("min_sim must lie in [-1, 1]");
        if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
        if (top_k && *top_k == 0) throw InvalidArgument("top_k must be positive when set");
    }
};

struct WordScore {
    std::string word;
    double score = 0.0;
    std::size_t surviving_count = 0;
    std::size_t total_count = 0;

    bool operator==(const WordScore&) const = default;
};

// Score descending, then surviving_count descending, then token ascending.
[[nodiscard]] inline bool ranks_before(const WordScore& a, const WordScore& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.surviving_count != b.surviving_count) return a.surviving_count > b.surviving_count;
    return a.word < b.word;
}

[[nodiscard]] inline bool passes_token_filter(std::string_view token, TokenFilter filter) {
    if (filter == TokenFilter::none) return true;
    // Bytes >= 0x80 belong to multi-byte UTF-8 sequences; counted as letters.
    return std::any_of(token.begin(), token.end(), [](char ch) {
        const auto c = static_cast<unsigned char>(ch);
        return c >= 0x80 || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    });
}

namespace detail {

struct TokenAccumulator {
    double sum = 0.0;
    std::size_t surviving = 0;
};

inline unsigned resolve_threads(unsigned requested) {
    if (requested != 0) return requested;
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace detail

// Exhaustive occurrence-level scan: cosine of `query` against every
// occurrence of every eligible token, occurrence thresholding at min_sim,
// per-word mean of the survivors.
[[nodiscard]] inline std::vector<WordScore> scan(const EmbeddingCorpus& corpus, std::span<const double> query,
                                                 const ScanConfig& config) {
    config.validate();
    detail::require_same_dim(query.size(), corpus.dim());
    const double qnorm = l2_norm(query);
    if (qnorm == 0.0) throw InvalidArgument("query vector has zero norm");

    const std::size_t vocab = corpus.vocabulary().size();
    std::vector<char> eligible(vocab, 0);
    for (TokenId t = 0; t < vocab; ++t) {
        const auto& word = corpus.token(t);
        eligible[t] = passes_token_filter(word, config.token_filter) &&
                      corpus.occurrence_count(t) >= config.min_count && !config.exclude.contains(word);
    }

    std::vector<detail::TokenAccumulator> acc(vocab);
    auto work = [&](TokenId first, TokenId last) {
        for (TokenId t = first; t < last; ++t) {
            if (!eligible[t]) continue;
            auto [b, e] = corpus.occurrence_range(t);
            auto& a = acc[t];
            for (std::size_t i = b; i < e; ++i) {
                const double sim = cosine_from_parts(dot(query, corpus.embedding(i)), qnorm, corpus.norm(i));
                if (config.average_first || sim >= config.min_sim) {
                    a.sum += sim;
                    ++a.surviving;
                }
            }
        }
    };

    const unsigned threads = std::min<std::size_t>(detail::resolve_threads(config.threads),
                                                   std::max<std::size_t>(1, corpus.num_occurrences() / 4096));
    if (threads <= 1) {
        work(0, static_cast<TokenId>(vocab));
    } else {
        // Contiguous token ranges of roughly equal occurrence mass.
        std::vector<std::thread> pool;
        const std::size_t share = corpus.num_occurrences() / threads + 1;
        TokenId begin = 0;
        while (begin < vocab) {
            TokenId end = begin;
            std::size_t mass = 0;
            while (end < vocab && mass < share) mass += corpus.occurrence_count(end++);
            pool.emplace_back(work, begin, end);
            begin = end;
        }
        for (auto& th : pool) th.join();
    }

    std::vector<WordScore> out;
    for (TokenId t = 0; t < vocab; ++t) {
        const auto& a = acc[t];
        if (!eligible[t] || a.surviving == 0) continue;
        const double mean = a.sum / static_cast<double>(a.surviving);
        if (config.average_first && mean < config.min_sim) continue;
        out.push_back({corpus.token(t), mean, a.surviving, corpus.occurrence_count(t)});
    }
    std::sort(out.begin(), out.end(), ranks_before);
    if (config.top_k && out.size() > *config.top_k) out.resize(*config.top_k);
    return out;
}

[[nodiscard]] inline std::vector<WordScore> scan(const EmbeddingCorpus& corpus, const Vector& query,
                                                 const ScanConfig& config) {
    return scan(corpus, std::span<const double>(query), config);
}

// Manual context-text search: seed embedding from the seed documents, one
// scan, seed word excluded from its own results.
[[nodiscard]] inline std::vector<WordScore> manual_search(const EmbeddingCorpus& corpus, std::string_view seed_word,
                                                          std::span<const std::uint32_t> seed_doc_ids,
                                                          ScanConfig config) {
    const Vector query = seed_embedding(corpus, seed_word, seed_doc_ids);
    config.exclude.insert(std::string(seed_word));
    return scan(corpus, query, config);
}

inline void to_json(nlohmann::json& j, const WordScore& w) {
    j = {{"word", w.word}, {"score", w.score}, {"surviving", w.surviving_count}, {"total", w.total_count}};
}

inline void from_json(const nlohmann::json& j, WordScore& w) {
    w.word = j.at("word").get<std::string>();
    w.score = j.at("score").get<double>();
    w.surviving_count = j.value("surviving", std::size_t{0});
    w.total_count = j.value("total", std::size_t{0});
}

inline void write_jsonl(std::ostream& out, std::span<const WordScore> scores) {
    for (const auto& s : scores) out << nlohmann::json(s).dump() << '\n';
}

}  // namespace lexgraph
