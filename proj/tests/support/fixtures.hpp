#pragma once

// Test-only corpus generators and brute-force oracles. The oracles work from
// the generator's raw records with naive loops and never call into the
// engine's scan, cosine or indexing code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "lexgraph/corpus.hpp"
#include "lexgraph/search.hpp"

namespace lexgraph::fixtures {

struct Record {
    std::uint32_t doc = 0;
    std::uint16_t pos = 0;
    std::string token;
    std::vector<float> emb;
};

struct RawCorpus {
    std::uint32_t dim = 0;
    std::vector<Document> docs;
    std::vector<Record> records;

    EmbeddingCorpus build(std::string source = "synthetic") const {
        CorpusBuilder b(dim);
        b.metadata(std::move(source), true);
        b.reserve(docs.size(), records.size());
        for (const auto& d : docs) b.add_document(d);
        for (const auto& r : records) b.add_occurrence(r.doc, r.pos, r.token, r.emb);
        return std::move(b).build();
    }

    std::set<std::string> tokens() const {
        std::set<std::string> out;
        for (const auto& r : records) out.insert(r.token);
        return out;
    }
};

// Hand-written corpus: each document is a list of (token, embedding).
inline RawCorpus make_corpus(std::uint32_t dim,
                             const std::vector<std::vector<std::pair<std::string, std::vector<float>>>>& docs) {
    RawCorpus c;
    c.dim = dim;
    for (std::uint32_t d = 0; d < docs.size(); ++d) {
        std::string text;
        for (std::uint16_t p = 0; p < docs[d].size(); ++p) {
            const auto& [tok, emb] = docs[d][p];
            if (!text.empty()) text += ' ';
            text += tok.starts_with("##") ? tok.substr(2) : tok;
            c.records.push_back({d + 1, p, tok, emb});
        }
        c.docs.push_back({d + 1, text});
    }
    return c;
}

inline std::string word_name(std::size_t i) {
    std::string s = "w";
    s += std::to_string(i);
    return s;
}

// Uniformly random corpus: `words` tokens, `occurrences` records spread over
// documents of ~8 tokens, Gaussian embeddings.
inline RawCorpus random_corpus(std::uint64_t seed, std::size_t words, std::size_t occurrences, std::uint32_t dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    std::uniform_int_distribution<std::size_t> pick(0, words - 1);
    RawCorpus c;
    c.dim = dim;
    std::uint32_t doc = 0;
    std::uint16_t pos = 0;
    std::string text;
    auto flush = [&] {
        if (pos == 0) return;
        c.docs.push_back({doc, text});
        ++doc;
        pos = 0;
        text.clear();
    };
    for (std::size_t i = 0; i < occurrences; ++i) {
        // Every word appears at least once.
        const std::size_t w = i < words ? i : pick(rng);
        Record r{doc, pos, word_name(w), std::vector<float>(dim)};
        for (auto& x : r.emb) x = gauss(rng);
        if (!text.empty()) text += ' ';
        text += r.token;
        c.records.push_back(std::move(r));
        if (++pos == 8) flush();
    }
    flush();
    return c;
}

// ---------------------------------------------------------------- oracles

inline double naive_cosine(const std::vector<double>& q, const std::vector<float>& e) {
    double dot = 0, nq = 0, ne = 0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        dot += q[i] * static_cast<double>(e[i]);
        nq += q[i] * q[i];
        ne += static_cast<double>(e[i]) * static_cast<double>(e[i]);
    }
    return std::clamp(dot / (std::sqrt(nq) * std::sqrt(ne)), -1.0, 1.0);
}

inline bool has_letter(const std::string& s) {
    for (unsigned char c : s) {
        if (std::isalpha(c) || c >= 0x80) return true;
    }
    return false;
}

// Brute-force scan straight from the raw records.
inline std::vector<WordScore> oracle_scan(const RawCorpus& raw, const std::vector<double>& query,
                                          const ScanConfig& cfg) {
    std::map<std::string, std::vector<double>> sims;
    for (const auto& r : raw.records) sims[r.token].push_back(naive_cosine(query, r.emb));
    std::vector<WordScore> out;
    for (const auto& [word, all] : sims) {
        if (cfg.exclude.count(word) || all.size() < cfg.min_count) continue;
        if (cfg.token_filter == TokenFilter::alphabetic && !has_letter(word)) continue;
        double sum = 0;
        std::size_t kept = 0;
        for (double s : all) {
            if (cfg.average_first || s >= cfg.min_sim) {
                sum += s;
                ++kept;
            }
        }
        if (kept == 0) continue;
        const double mean = sum / static_cast<double>(kept);
        if (cfg.average_first && mean < cfg.min_sim) continue;
        out.push_back({word, mean, kept, all.size()});
    }
    std::sort(out.begin(), out.end(), [](const WordScore& a, const WordScore& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.surviving_count != b.surviving_count) return a.surviving_count > b.surviving_count;
        return a.word < b.word;
    });
    if (cfg.top_k && out.size() > *cfg.top_k) out.resize(*cfg.top_k);
    return out;
}

// Naive component-wise mean of every record of `word` (optionally only inside `docs`).
inline std::vector<double> oracle_mean(const RawCorpus& raw, const std::string& word,
                                       const std::set<std::uint32_t>& docs = {}) {
    std::vector<double> sum(raw.dim, 0.0);
    std::size_t n = 0;
    for (const auto& r : raw.records) {
        if (r.token != word || (!docs.empty() && !docs.count(r.doc))) continue;
        for (std::size_t i = 0; i < raw.dim; ++i) sum[i] += r.emb[i];
        ++n;
    }
    for (auto& x : sum) x /= static_cast<double>(n);
    return sum;
}

// ------------------------------------------------------- planted clusters

struct PlantedCorpus {
    RawCorpus raw;
    std::vector<double> centroid;
    std::vector<std::string> context_words;  // the planted gold set
};

namespace detail {

inline std::vector<double> unit(std::vector<double> v) {
    double n = 0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    for (double& x : v) x /= n;
    return v;
}

inline double cos_d(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return d / std::sqrt(na * nb);
}

}  // namespace detail

// `words` tokens in `dim` dimensions around a hidden unit centroid:
// `context` of them ("sym0".."symN") with every occurrence at cosine >= 0.7
// to the centroid, the rest ("noise0"...) with every occurrence below 0.2.
// Each word gets `per_word` occurrences; documents mix both kinds.
inline PlantedCorpus planted_corpus(std::uint64_t seed, std::size_t words = 500, std::size_t context = 20,
                                    std::uint32_t dim = 32, std::size_t per_word = 8) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto random_vec = [&] {
        std::vector<double> v(dim);
        for (auto& x : v) x = gauss(rng);
        return v;
    };

    PlantedCorpus pc;
    pc.raw.dim = dim;
    pc.centroid = detail::unit(random_vec());

    struct Pending {
        std::string token;
        std::vector<float> emb;
    };
    std::vector<Pending> pending;
    for (std::size_t w = 0; w < words; ++w) {
        const bool is_context = w < context;
        const std::string token = is_context ? "sym" + std::to_string(w) : "noise" + std::to_string(w - context);
        if (is_context) pc.context_words.push_back(token);
        // Word-level direction, then occurrence jitter around it.
        std::vector<double> dir;
        if (is_context) {
            auto noise = detail::unit(random_vec());
            dir.resize(dim);
            for (std::size_t i = 0; i < dim; ++i) dir[i] = pc.centroid[i] + 0.45 * noise[i];
        } else {
            do {
                dir = random_vec();
            } while (detail::cos_d(dir, pc.centroid) >= 0.05);
        }
        dir = detail::unit(dir);
        for (std::size_t k = 0; k < per_word; ++k) {
            std::vector<double> e(dim);
            while (true) {
                auto jitter = detail::unit(random_vec());
                const double amp = is_context ? 0.3 : 0.5;
                for (std::size_t i = 0; i < dim; ++i) e[i] = dir[i] + amp * jitter[i];
                const double c = detail::cos_d(e, pc.centroid);
                if (is_context ? c >= 0.7 : c < 0.2) break;
            }
            pending.push_back({token, std::vector<float>(e.begin(), e.end())});
        }
    }
    std::shuffle(pending.begin(), pending.end(), rng);
    std::uint32_t doc = 0;
    for (std::size_t i = 0; i < pending.size(); i += 10) {
        std::string text;
        for (std::size_t j = i; j < std::min(i + 10, pending.size()); ++j) {
            if (!text.empty()) text += ' ';
            text += pending[j].token;
            pc.raw.records.push_back({doc, static_cast<std::uint16_t>(j - i), pending[j].token, pending[j].emb});
        }
        pc.raw.docs.push_back({doc, text});
        ++doc;
    }
    return pc;
}

// ------------------------------------------------------------------ misc

class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("lexgraph-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

}  // namespace lexgraph::fixtures
