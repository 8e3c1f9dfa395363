#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexgraph/corpus.hpp"

namespace lexgraph {

// Offsets are in Unicode code points, end exclusive. Null when the token
// could not be aligned with the text.
struct Snippet {
    std::uint32_t doc_id = 0;
    std::string text;
    std::optional<std::size_t> token_char_start;
    std::optional<std::size_t> token_char_end;
};

inline void to_json(nlohmann::json& j, const Snippet& s) {
    auto opt = [](const std::optional<std::size_t>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    j = {{"doc_id", s.doc_id},
         {"text", s.text},
         {"token_char_start", opt(s.token_char_start)},
         {"token_char_end", opt(s.token_char_end)}};
}

namespace detail {

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

// ASCII case-insensitive find.
inline std::size_t ifind(std::string_view hay, std::string_view needle, std::size_t from) {
    if (needle.empty() || needle.size() > hay.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= hay.size(); ++i) {
        std::size_t k = 0;
        while (k < needle.size() && ascii_lower(hay[i + k]) == ascii_lower(needle[k])) ++k;
        if (k == needle.size()) return i;
    }
    return std::string_view::npos;
}

inline std::size_t code_points_before(std::string_view s, std::size_t byte) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < byte && i < s.size(); ++i) n += (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80;
    return n;
}

inline std::string_view surface(std::string_view token) {
    return token.starts_with("##") && token.size() > 2 ? token.substr(2) : token;
}

}  // namespace detail

// Aligns every token of a document with its text, walking left to right so a
// repeated or fragment token ("##hea" in "diarrhea") lands on the right span.
// Returns byte ranges indexed like corpus.document_occurrences(doc_id).
[[nodiscard]] inline std::vector<std::optional<std::pair<std::size_t, std::size_t>>> align_document(
    const EmbeddingCorpus& corpus, const Document& doc) {
    const auto occs = corpus.document_occurrences(doc.id);
    std::vector<std::optional<std::pair<std::size_t, std::size_t>>> out(occs.size());
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < occs.size(); ++i) {
        const auto needle = detail::surface(corpus.token(corpus.token_of(occs[i])));
        auto at = detail::ifind(doc.text, needle, cursor);
        if (at == std::string_view::npos) at = detail::ifind(doc.text, needle, 0);
        if (at == std::string_view::npos) continue;
        out[i] = std::make_pair(at, at + needle.size());
        cursor = at + needle.size();
    }
    return out;
}

[[nodiscard]] inline std::vector<Snippet> snippets_for(const EmbeddingCorpus& corpus, std::string_view word,
                                                       std::optional<std::size_t> limit = std::nullopt) {
    std::vector<Snippet> out;
    for (const auto& hit : occurrences_of(corpus, word)) {
        if (limit && out.size() >= *limit) break;
        const auto& doc = *hit.document;
        const auto occs = corpus.document_occurrences(doc.id);
        const auto spans = align_document(corpus, doc);
        Snippet s{doc.id, doc.text, std::nullopt, std::nullopt};
        for (std::size_t i = 0; i < occs.size(); ++i) {
            if (corpus.occurrence(occs[i]).token_index != hit.token_index || !spans[i]) continue;
            s.token_char_start = detail::code_points_before(doc.text, spans[i]->first);
            s.token_char_end = detail::code_points_before(doc.text, spans[i]->second);
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace lexgraph
