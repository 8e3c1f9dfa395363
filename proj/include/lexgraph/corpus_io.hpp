#pragma once

// On-disk corpus directory:
//   manifest.json       CorpusManifest as a JSON object
//   documents.jsonl     {"id": <uint>, "text": <string>} per line
//   occurrences.bin     little-endian records: doc_id u32, token_index u16,
//                       token_len u16, token bytes, dim x f32
//   occurrences.jsonl   {"doc", "pos", "token", "emb": [...]} per line
// Records are written in (doc_id, token_index) order.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexgraph/corpus.hpp"
#include "lexgraph/error.hpp"

namespace lexgraph {

namespace fs = std::filesystem;

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kDocumentsFile = "documents.jsonl";
inline constexpr const char* kOccurrencesBin = "occurrences.bin";
inline constexpr const char* kOccurrencesJsonl = "occurrences.jsonl";

namespace le {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline std::uint16_t get_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float get_f32(const unsigned char* p) { return std::bit_cast<float>(get_u32(p)); }

}  // namespace le

// One occurrence record in the binary layout.
inline void encode_occurrence(std::string& out, std::uint32_t doc_id, std::uint16_t token_index,
                              std::string_view token, std::span<const float> emb) {
    if (token.size() > std::numeric_limits<std::uint16_t>::max()) {
        throw InvalidArgument("token longer than 65535 bytes");
    }
    le::put_u32(out, doc_id);
    le::put_u16(out, token_index);
    le::put_u16(out, static_cast<std::uint16_t>(token.size()));
    out.append(token);
    for (float x : emb) le::put_f32(out, x);
}

[[nodiscard]] inline nlohmann::json manifest_to_json(const CorpusManifest& m) {
    return {{"version", m.version},
            {"dim", m.dim},
            {"num_documents", m.num_documents},
            {"num_occurrences", m.num_occurrences},
            {"embedding_source", m.embedding_source},
            {"lowercased", m.lowercased},
            {"occurrence_format", std::string(to_string(m.occurrence_format))}};
}

[[nodiscard]] inline CorpusManifest manifest_from_json(const nlohmann::json& j, const std::string& where) {
    CorpusManifest m;
    try {
        m.version = j.at("version").get<int>();
        const auto dim = j.at("dim").get<std::int64_t>();
        if (dim < 1 || dim > std::numeric_limits<std::uint32_t>::max()) {
            throw CorpusFormatError(where, "dim must be a positive integer");
        }
        m.dim = static_cast<std::uint32_t>(dim);
        m.num_documents = j.at("num_documents").get<std::uint64_t>();
        m.num_occurrences = j.at("num_occurrences").get<std::uint64_t>();
        m.embedding_source = j.value("embedding_source", "");
        m.lowercased = j.value("lowercased", false);
        const auto fmt = j.at("occurrence_format").get<std::string>();
        if (fmt == "binary") {
            m.occurrence_format = OccurrenceFormat::binary;
        } else if (fmt == "jsonl") {
            m.occurrence_format = OccurrenceFormat::jsonl;
        } else {
            throw CorpusFormatError(where, "unknown occurrence_format '" + fmt + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorpusFormatError(where, e.what());
    }
    if (m.version != 1) throw CorpusFormatError(where, "unsupported version " + std::to_string(m.version));
    return m;
}

namespace detail {

inline std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw CorpusFormatError(p.string(), "cannot open");
    return in;
}

inline std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

inline std::string line_loc(const fs::path& p, std::size_t line) {
    return p.filename().string() + ": line " + std::to_string(line);
}

inline nlohmann::json parse_line(const std::string& line, const std::string& where) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw CorpusFormatError(where, e.what());
    }
}

}  // namespace detail

// Reads documents.jsonl-style input. Documents rejected by `keep` are left out
// and their ids reported through `dropped` so their occurrences can be skipped.
template <class Keep>
inline void read_documents_jsonl(const fs::path& path, CorpusBuilder& builder, Keep keep,
                                 std::unordered_set<std::uint32_t>* dropped = nullptr) {
    auto in = detail::open_in(path);
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        const auto where = detail::line_loc(path, lineno);
        auto j = detail::parse_line(line, where);
        Document doc;
        try {
            doc.id = j.at("id").get<std::uint32_t>();
            doc.text = j.at("text").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw CorpusFormatError(where, e.what());
        }
        if (!keep(doc)) {
            if (dropped != nullptr) dropped->insert(doc.id);
            continue;
        }
        builder.add_document(std::move(doc), where);
    }
}

inline void read_documents_jsonl(const fs::path& path, CorpusBuilder& builder) {
    read_documents_jsonl(path, builder, [](const Document&) { return true; });
}

inline void read_occurrences_binary(const fs::path& path, CorpusBuilder& builder,
                                    const std::unordered_set<std::uint32_t>* dropped = nullptr) {
    auto in = detail::open_in(path);
    const std::size_t dim = builder.dim();
    std::array<unsigned char, 8> head{};
    std::string token;
    std::vector<unsigned char> raw(dim * 4);
    std::vector<float> emb(dim);
    std::uint64_t offset = 0;
    const auto name = path.filename().string();
    for (std::size_t record = 0;; ++record) {
        in.read(reinterpret_cast<char*>(head.data()), head.size());
        if (in.gcount() == 0 && in.eof()) break;
        const auto where = name + ": record " + std::to_string(record) + " at byte offset " +
                           std::to_string(offset);
        if (in.gcount() != static_cast<std::streamsize>(head.size())) {
            throw CorpusFormatError(where, "truncated record header");
        }
        const auto doc = le::get_u32(head.data());
        const auto pos = le::get_u16(head.data() + 4);
        const auto len = le::get_u16(head.data() + 6);
        token.resize(len);
        in.read(token.data(), len);
        if (in.gcount() != len) throw CorpusFormatError(where, "truncated token bytes");
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
            throw CorpusFormatError(where, "truncated embedding (expected " + std::to_string(dim) +
                                               " f32 components)");
        }
        offset += head.size() + len + raw.size();
        if (dropped != nullptr && dropped->contains(doc)) continue;
        for (std::size_t i = 0; i < dim; ++i) emb[i] = le::get_f32(raw.data() + 4 * i);
        builder.add_occurrence(doc, pos, token, emb, where);
    }
}

inline void read_occurrences_jsonl(const fs::path& path, CorpusBuilder& builder,
                                   const std::unordered_set<std::uint32_t>* dropped = nullptr) {
    auto in = detail::open_in(path);
    std::string line;
    std::vector<float> emb;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        const auto where = detail::line_loc(path, lineno);
        auto j = detail::parse_line(line, where);
        std::uint32_t doc = 0;
        std::uint16_t pos = 0;
        std::string token;
        try {
            doc = j.at("doc").get<std::uint32_t>();
            const auto p = j.at("pos").get<std::int64_t>();
            if (p < 0 || p > std::numeric_limits<std::uint16_t>::max()) {
                throw CorpusFormatError(where, "pos out of u16 range");
            }
            pos = static_cast<std::uint16_t>(p);
            token = j.at("token").get<std::string>();
            const auto& arr = j.at("emb");
            if (!arr.is_array()) throw CorpusFormatError(where, "emb is not an array");
            emb.clear();
            for (const auto& x : arr) emb.push_back(x.get<float>());
        } catch (const nlohmann::json::exception& e) {
            throw CorpusFormatError(where, e.what());
        }
        if (dropped != nullptr && dropped->contains(doc)) continue;
        builder.add_occurrence(doc, pos, token, emb, where);
    }
}

// Embedding length of the first record of an occurrences.jsonl file.
[[nodiscard]] inline std::uint32_t peek_jsonl_dim(const fs::path& path) {
    auto in = detail::open_in(path);
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        auto j = detail::parse_line(line, detail::line_loc(path, lineno));
        if (!j.contains("emb") || !j["emb"].is_array() || j["emb"].empty()) {
            throw CorpusFormatError(detail::line_loc(path, lineno), "missing emb array");
        }
        return static_cast<std::uint32_t>(j["emb"].size());
    }
    throw CorpusFormatError(path.filename().string(), "no occurrence records");
}

[[nodiscard]] inline EmbeddingCorpus load_corpus(const fs::path& dir) {
    const auto manifest_path = dir / kManifestFile;
    CorpusManifest manifest;
    {
        auto in = detail::open_in(manifest_path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw CorpusFormatError(kManifestFile, e.what());
        }
        manifest = manifest_from_json(j, kManifestFile);
    }

    CorpusBuilder builder(manifest.dim);
    builder.metadata(manifest.embedding_source, manifest.lowercased, manifest.occurrence_format);
    builder.reserve(manifest.num_documents, manifest.num_occurrences);
    read_documents_jsonl(dir / kDocumentsFile, builder);
    if (manifest.occurrence_format == OccurrenceFormat::binary) {
        read_occurrences_binary(dir / kOccurrencesBin, builder);
    } else {
        read_occurrences_jsonl(dir / kOccurrencesJsonl, builder);
    }
    auto corpus = std::move(builder).build();

    if (corpus.manifest().num_documents != manifest.num_documents) {
        throw CorpusFormatError(kManifestFile, "num_documents is " + std::to_string(manifest.num_documents) +
                                                   " but documents file holds " +
                                                   std::to_string(corpus.manifest().num_documents));
    }
    if (corpus.manifest().num_occurrences != manifest.num_occurrences) {
        throw CorpusFormatError(kManifestFile,
                                "num_occurrences is " + std::to_string(manifest.num_occurrences) +
                                    " but occurrences file holds " +
                                    std::to_string(corpus.manifest().num_occurrences));
    }
    return corpus;
}

// Global (doc_id, token_index) order.
template <class Fn>
inline void for_each_occurrence_in_file_order(const EmbeddingCorpus& corpus, Fn&& fn) {
    for (const auto& doc : corpus.documents()) {
        for (auto occ : corpus.document_occurrences(doc.id)) fn(corpus.occurrence(occ));
    }
}

inline void write_documents_jsonl(const EmbeddingCorpus& corpus, const fs::path& path) {
    auto out = detail::open_out(path);
    for (const auto& doc : corpus.documents()) {
        out << nlohmann::json{{"id", doc.id}, {"text", doc.text}}.dump() << '\n';
    }
}

inline void write_occurrences_binary(const EmbeddingCorpus& corpus, const fs::path& path) {
    auto out = detail::open_out(path);
    std::string buf;
    for_each_occurrence_in_file_order(corpus, [&](const OccurrenceView& o) {
        encode_occurrence(buf, o.doc_id, o.token_index, o.token, o.embedding);
        if (buf.size() > (1u << 20)) {
            out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
            buf.clear();
        }
    });
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw Error("write failed: " + path.string());
}

inline void write_occurrences_jsonl(const EmbeddingCorpus& corpus, const fs::path& path) {
    auto out = detail::open_out(path);
    for_each_occurrence_in_file_order(corpus, [&](const OccurrenceView& o) {
        nlohmann::json emb = nlohmann::json::array();
        for (float x : o.embedding) emb.push_back(x);
        out << nlohmann::json{{"doc", o.doc_id}, {"pos", o.token_index}, {"token", o.token}, {"emb", emb}}
                   .dump()
            << '\n';
    });
    if (!out) throw Error("write failed: " + path.string());
}

// Writes a complete corpus directory in `format`.
inline void write_corpus(const EmbeddingCorpus& corpus, const fs::path& dir, OccurrenceFormat format) {
    fs::create_directories(dir);
    auto manifest = corpus.manifest();
    manifest.occurrence_format = format;
    write_documents_jsonl(corpus, dir / kDocumentsFile);
    if (format == OccurrenceFormat::binary) {
        fs::remove(dir / kOccurrencesJsonl);
        write_occurrences_binary(corpus, dir / kOccurrencesBin);
    } else {
        fs::remove(dir / kOccurrencesBin);
        write_occurrences_jsonl(corpus, dir / kOccurrencesJsonl);
    }
    auto out = detail::open_out(dir / kManifestFile);
    out << manifest_to_json(manifest).dump(2) << '\n';
}

}  // namespace lexgraph
