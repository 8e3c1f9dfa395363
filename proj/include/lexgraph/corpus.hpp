#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "lexgraph/error.hpp"
#include "lexgraph/vector_math.hpp"

namespace lexgraph {

enum class OccurrenceFormat { binary, jsonl };

[[nodiscard]] inline std::string_view to_string(OccurrenceFormat f) {
    return f == OccurrenceFormat::binary ? "binary" : "jsonl";
}

struct CorpusManifest {
    int version = 1;
    std::uint32_t dim = 0;
    std::uint64_t num_documents = 0;
    std::uint64_t num_occurrences = 0;
    std::string embedding_source;
    bool lowercased = false;
    OccurrenceFormat occurrence_format = OccurrenceFormat::binary;

    bool operator==(const CorpusManifest&) const = default;
};

struct Document {
    std::uint32_t id = 0;
    std::string text;

    bool operator==(const Document&) const = default;
};

using TokenId = std::uint32_t;

// Non-owning view of one token occurrence; valid while the corpus lives.
struct OccurrenceView {
    std::uint32_t doc_id;
    std::uint16_t token_index;
    std::string_view token;
    std::span<const float> embedding;
    double norm;
};

struct OccurrenceHit {
    const Document* document;
    std::uint16_t token_index;
    OccurrenceView occurrence;
};

class CorpusBuilder;

// Immutable token -> occurrences index. Occurrences are stored grouped by
// token (vocabulary in byte-lexicographic order) and, within a token, ordered
// by (doc_id, token_index). Embedding rows are contiguous in that order so a
// full scan walks memory linearly.
class EmbeddingCorpus {
public:
    EmbeddingCorpus(const EmbeddingCorpus&) = delete;
    EmbeddingCorpus& operator=(const EmbeddingCorpus&) = delete;
    EmbeddingCorpus(EmbeddingCorpus&&) noexcept = default;
    EmbeddingCorpus& operator=(EmbeddingCorpus&&) noexcept = default;

    const CorpusManifest& manifest() const noexcept { return manifest_; }
    std::size_t dim() const noexcept { return manifest_.dim; }
    std::size_t num_occurrences() const noexcept { return occ_doc_.size(); }

    std::span<const Document> documents() const noexcept { return documents_; }

    const Document* find_document(std::uint32_t id) const {
        auto it = std::lower_bound(documents_.begin(), documents_.end(), id,
                                   [](const Document& d, std::uint32_t v) { return d.id < v; });
        return (it != documents_.end() && it->id == id) ? &*it : nullptr;
    }

    std::span<const std::string> vocabulary() const noexcept { return vocab_; }

    std::optional<TokenId> find_token(std::string_view word) const {
        auto it = std::lower_bound(vocab_.begin(), vocab_.end(), word);
        if (it == vocab_.end() || *it != word) return std::nullopt;
        return static_cast<TokenId>(it - vocab_.begin());
    }

    const std::string& token(TokenId id) const { return vocab_.at(id); }

    // Half-open range of global occurrence indices belonging to `id`.
    std::pair<std::size_t, std::size_t> occurrence_range(TokenId id) const {
        return {token_offsets_.at(id), token_offsets_.at(id + 1)};
    }

    std::size_t occurrence_count(TokenId id) const {
        auto [b, e] = occurrence_range(id);
        return e - b;
    }

    std::size_t occurrence_count(std::string_view word) const {
        auto id = find_token(word);
        return id ? occurrence_count(*id) : 0;
    }

    std::map<std::string, std::size_t> vocab_counts() const {
        std::map<std::string, std::size_t> out;
        for (TokenId t = 0; t < vocab_.size(); ++t) out.emplace(vocab_[t], occurrence_count(t));
        return out;
    }

    std::span<const float> embedding(std::size_t occ) const {
        return {embeddings_.data() + occ * dim(), dim()};
    }

    double norm(std::size_t occ) const { return norms_[occ]; }
    TokenId token_of(std::size_t occ) const { return occ_token_[occ]; }

    OccurrenceView occurrence(std::size_t occ) const {
        return {occ_doc_[occ], occ_pos_[occ], vocab_[occ_token_[occ]], embedding(occ), norms_[occ]};
    }

    // Occurrence indices of one document, ordered by token_index.
    std::span<const std::size_t> document_occurrences(std::uint32_t doc_id) const {
        const Document* d = find_document(doc_id);
        if (d == nullptr) return {};
        const auto slot = static_cast<std::size_t>(d - documents_.data());
        return std::span<const std::size_t>(doc_occ_).subspan(
            doc_occ_offsets_[slot], doc_occ_offsets_[slot + 1] - doc_occ_offsets_[slot]);
    }

private:
    friend class CorpusBuilder;
    EmbeddingCorpus() = default;

    CorpusManifest manifest_;
    std::vector<Document> documents_;
    std::vector<std::string> vocab_;
    std::vector<std::size_t> token_offsets_;
    std::vector<std::uint32_t> occ_doc_;
    std::vector<std::uint16_t> occ_pos_;
    std::vector<TokenId> occ_token_;
    std::vector<float> embeddings_;
    std::vector<double> norms_;
    std::vector<std::size_t> doc_occ_offsets_;
    std::vector<std::size_t> doc_occ_;
};

// Validating accumulator for corpus records. Every error names the offending
// record through the caller-supplied location (or its ordinal when none is
// given). Documents must be added before occurrences that reference them.
class CorpusBuilder {
public:
    explicit CorpusBuilder(std::uint32_t dim) {
        if (dim == 0) throw InvalidArgument("corpus dimension must be >= 1");
        manifest_.dim = dim;
    }

    CorpusBuilder& metadata(std::string embedding_source, bool lowercased,
                            OccurrenceFormat format = OccurrenceFormat::binary) {
        manifest_.embedding_source = std::move(embedding_source);
        manifest_.lowercased = lowercased;
        manifest_.occurrence_format = format;
        return *this;
    }

    void reserve(std::size_t documents, std::size_t occurrences) {
        documents_.reserve(documents);
        occ_doc_.reserve(occurrences);
        occ_pos_.reserve(occurrences);
        occ_token_.reserve(occurrences);
        embeddings_.reserve(occurrences * manifest_.dim);
    }

    std::uint32_t dim() const noexcept { return manifest_.dim; }
    std::size_t num_occurrences() const noexcept { return occ_doc_.size(); }
    bool has_document(std::uint32_t id) const { return doc_ids_.contains(id); }

    void add_document(Document doc, const std::string& location = {}) {
        auto where = location.empty() ? "document #" + std::to_string(documents_.size()) : location;
        if (doc.text.empty()) {
            throw CorpusFormatError(where, "document " + std::to_string(doc.id) + " has empty text");
        }
        if (!doc_ids_.insert(doc.id).second) {
            throw CorpusFormatError(where, "duplicate document id " + std::to_string(doc.id));
        }
        documents_.push_back(std::move(doc));
    }

    void add_occurrence(std::uint32_t doc_id, std::uint16_t token_index, std::string_view token,
                        std::span<const float> emb, const std::string& location = {}) {
        auto where = [&] {
            return location.empty() ? "occurrence #" + std::to_string(occ_doc_.size()) : location;
        };
        if (emb.size() != manifest_.dim) {
            throw CorpusFormatError(where(), "embedding has " + std::to_string(emb.size()) +
                                                 " components, manifest dim is " +
                                                 std::to_string(manifest_.dim));
        }
        if (token.empty()) throw CorpusFormatError(where(), "empty token string");
        if (!doc_ids_.contains(doc_id)) {
            throw CorpusFormatError(where(), "dangling doc_id " + std::to_string(doc_id));
        }
        if (!all_finite(emb)) throw CorpusFormatError(where(), "non-finite embedding component");
        if (l2_norm(emb) == 0.0) {
            throw CorpusFormatError(where(), "zero-norm embedding for token '" + std::string(token) +
                                                 "' (doc " + std::to_string(doc_id) + ", pos " +
                                                 std::to_string(token_index) + ")");
        }
        auto [it, fresh] = intern_.try_emplace(std::string(token), static_cast<TokenId>(intern_.size()));
        occ_doc_.push_back(doc_id);
        occ_pos_.push_back(token_index);
        occ_token_.push_back(it->second);
        embeddings_.insert(embeddings_.end(), emb.begin(), emb.end());
    }

    // Consumes the builder. Peak memory stays at one copy of the embedding
    // matrix: rows are permuted in place.
    EmbeddingCorpus build() && {
        EmbeddingCorpus c;
        const std::size_t n = occ_doc_.size();
        const std::size_t dim = manifest_.dim;
        c.manifest_ = manifest_;

        // Sorted vocabulary and remap of provisional ids.
        std::vector<std::string> vocab(intern_.size());
        for (auto& [word, id] : intern_) vocab[id] = word;
        std::vector<TokenId> by_name(vocab.size());
        std::iota(by_name.begin(), by_name.end(), TokenId{0});
        std::sort(by_name.begin(), by_name.end(),
                  [&](TokenId a, TokenId b) { return vocab[a] < vocab[b]; });
        std::vector<TokenId> remap(vocab.size());
        for (TokenId rank = 0; rank < by_name.size(); ++rank) remap[by_name[rank]] = rank;
        for (auto& t : occ_token_) t = remap[t];
        c.vocab_.reserve(vocab.size());
        for (TokenId id : by_name) c.vocab_.push_back(std::move(vocab[id]));
        intern_.clear();

        // Destination order: (token, doc, pos).
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (occ_token_[a] != occ_token_[b]) return occ_token_[a] < occ_token_[b];
            if (occ_doc_[a] != occ_doc_[b]) return occ_doc_[a] < occ_doc_[b];
            return occ_pos_[a] < occ_pos_[b];
        });
        check_unique_positions(order);

        c.occ_doc_.resize(n);
        c.occ_pos_.resize(n);
        c.occ_token_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            c.occ_doc_[i] = occ_doc_[order[i]];
            c.occ_pos_[i] = occ_pos_[order[i]];
            c.occ_token_[i] = occ_token_[order[i]];
        }
        release(occ_doc_);
        release(occ_pos_);
        release(occ_token_);

        permute_rows(order, dim);
        c.embeddings_ = std::move(embeddings_);
        c.embeddings_.shrink_to_fit();

        c.token_offsets_.assign(c.vocab_.size() + 1, 0);
        for (TokenId t : c.occ_token_) ++c.token_offsets_[t + 1];
        std::partial_sum(c.token_offsets_.begin(), c.token_offsets_.end(), c.token_offsets_.begin());

        c.norms_.resize(n);
        for (std::size_t i = 0; i < n; ++i) c.norms_[i] = l2_norm(c.embedding(i));

        std::sort(documents_.begin(), documents_.end(),
                  [](const Document& a, const Document& b) { return a.id < b.id; });
        c.documents_ = std::move(documents_);
        index_documents(c);

        c.manifest_.num_documents = c.documents_.size();
        c.manifest_.num_occurrences = n;
        return c;
    }

private:
    template <class T>
    static void release(std::vector<T>& v) {
        std::vector<T>().swap(v);
    }

    void check_unique_positions(const std::vector<std::size_t>& order) const {
        std::vector<std::size_t> by_pos(order);
        std::sort(by_pos.begin(), by_pos.end(), [&](std::size_t a, std::size_t b) {
            if (occ_doc_[a] != occ_doc_[b]) return occ_doc_[a] < occ_doc_[b];
            if (occ_pos_[a] != occ_pos_[b]) return occ_pos_[a] < occ_pos_[b];
            return a < b;
        });
        for (std::size_t i = 1; i < by_pos.size(); ++i) {
            const auto a = by_pos[i - 1], b = by_pos[i];
            if (occ_doc_[a] == occ_doc_[b] && occ_pos_[a] == occ_pos_[b]) {
                throw CorpusFormatError("occurrence #" + std::to_string(std::max(a, b)),
                                        "duplicate position (doc " + std::to_string(occ_doc_[b]) +
                                            ", pos " + std::to_string(occ_pos_[b]) + ")");
            }
        }
    }

    // Row i of the result is row order[i] of the input.
    void permute_rows(const std::vector<std::size_t>& order, std::size_t dim) {
        std::vector<bool> done(order.size(), false);
        std::vector<float> tmp(dim);
        auto row = [&](std::size_t r) { return embeddings_.begin() + static_cast<std::ptrdiff_t>(r * dim); };
        for (std::size_t start = 0; start < order.size(); ++start) {
            if (done[start] || order[start] == start) {
                done[start] = true;
                continue;
            }
            std::copy(row(start), row(start) + static_cast<std::ptrdiff_t>(dim), tmp.begin());
            std::size_t dst = start;
            while (true) {
                done[dst] = true;
                const std::size_t src = order[dst];
                if (src == start) {
                    std::copy(tmp.begin(), tmp.end(), row(dst));
                    break;
                }
                std::copy(row(src), row(src) + static_cast<std::ptrdiff_t>(dim), row(dst));
                dst = src;
            }
        }
    }

    static void index_documents(EmbeddingCorpus& c) {
        const std::size_t n = c.occ_doc_.size();
        std::vector<std::size_t> slot_of(n);
        c.doc_occ_offsets_.assign(c.documents_.size() + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const Document* d = c.find_document(c.occ_doc_[i]);
            slot_of[i] = static_cast<std::size_t>(d - c.documents_.data());
            ++c.doc_occ_offsets_[slot_of[i] + 1];
        }
        std::partial_sum(c.doc_occ_offsets_.begin(), c.doc_occ_offsets_.end(),
                         c.doc_occ_offsets_.begin());
        c.doc_occ_.resize(n);
        std::vector<std::size_t> fill(c.doc_occ_offsets_.begin(), c.doc_occ_offsets_.end() - 1);
        for (std::size_t i = 0; i < n; ++i) c.doc_occ_[fill[slot_of[i]]++] = i;
        for (std::size_t s = 0; s < c.documents_.size(); ++s) {
            auto b = c.doc_occ_.begin() + static_cast<std::ptrdiff_t>(c.doc_occ_offsets_[s]);
            auto e = c.doc_occ_.begin() + static_cast<std::ptrdiff_t>(c.doc_occ_offsets_[s + 1]);
            std::sort(b, e, [&](std::size_t x, std::size_t y) { return c.occ_pos_[x] < c.occ_pos_[y]; });
        }
    }

    CorpusManifest manifest_;
    std::vector<Document> documents_;
    std::unordered_set<std::uint32_t> doc_ids_;
    std::unordered_map<std::string, TokenId> intern_;
    std::vector<std::uint32_t> occ_doc_;
    std::vector<std::uint16_t> occ_pos_;
    std::vector<TokenId> occ_token_;
    std::vector<float> embeddings_;
};

// Arithmetic mean of every occurrence embedding of `word`.
[[nodiscard]] inline Vector representative_embedding(const EmbeddingCorpus& corpus, std::string_view word) {
    auto id = corpus.find_token(word);
    if (!id) throw NotFound("word", std::string(word));
    auto [b, e] = corpus.occurrence_range(*id);
    Vector mean(corpus.dim(), 0.0);
    for (std::size_t i = b; i < e; ++i) add_into(mean, corpus.embedding(i));
    scale(mean, 1.0 / static_cast<double>(e - b));
    return mean;
}

// Mean over the occurrences of `word` inside the listed documents. A document
// holding the word twice contributes both occurrences.
[[nodiscard]] inline Vector seed_embedding(const EmbeddingCorpus& corpus, std::string_view word,
                                           std::span<const std::uint32_t> doc_ids) {
    if (doc_ids.empty()) throw InvalidArgument("seed embedding needs at least one seed document");
    auto id = corpus.find_token(word);
    if (!id) throw NotFound("word", std::string(word));

    std::unordered_set<std::uint32_t> wanted(doc_ids.begin(), doc_ids.end());
    std::unordered_set<std::uint32_t> seen;
    auto [b, e] = corpus.occurrence_range(*id);
    Vector mean(corpus.dim(), 0.0);
    std::size_t count = 0;
    for (std::size_t i = b; i < e; ++i) {
        const auto doc = corpus.occurrence(i).doc_id;
        if (!wanted.contains(doc)) continue;
        add_into(mean, corpus.embedding(i));
        seen.insert(doc);
        ++count;
    }
    for (auto doc : doc_ids) {
        if (corpus.find_document(doc) == nullptr) throw NotFound("document", std::to_string(doc));
        if (!seen.contains(doc)) {
            throw InvalidArgument("document " + std::to_string(doc) + " does not contain '" +
                                  std::string(word) + "'");
        }
    }
    scale(mean, 1.0 / static_cast<double>(count));
    return mean;
}

[[nodiscard]] inline std::vector<OccurrenceHit> occurrences_of(const EmbeddingCorpus& corpus,
                                                               std::string_view word) {
    std::vector<OccurrenceHit> out;
    auto id = corpus.find_token(word);
    if (!id) return out;
    auto [b, e] = corpus.occurrence_range(*id);
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) {
        auto occ = corpus.occurrence(i);
        out.push_back({corpus.find_document(occ.doc_id), occ.token_index, occ});
    }
    return out;
}

}  // namespace lexgraph
