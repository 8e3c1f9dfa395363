#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexgraph/error.hpp"
#include "lexgraph/session_json.hpp"

namespace lexgraph {

// Random (version 4) UUID string.
[[nodiscard]] inline std::string make_uuid() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::uint64_t hi = 0, lo = 0;
    {
        std::lock_guard lock(mu);
        hi = rng();
        lo = rng();
    }
    hi = (hi & 0xffffffffffff0fffull) | 0x0000000000004000ull;
    lo = (lo & 0x3fffffffffffffffull) | 0x8000000000000000ull;
    char buf[37];
    std::snprintf(buf, sizeof buf, "%08x-%04x-%04x-%04x-%012llx", static_cast<unsigned>(hi >> 32),
                  static_cast<unsigned>((hi >> 16) & 0xffff), static_cast<unsigned>(hi & 0xffff),
                  static_cast<unsigned>(lo >> 48), static_cast<unsigned long long>(lo & 0xffffffffffffull));
    return buf;
}

// Whole-snapshot persistence, one JSON file per session under root/sessions.
// Each write goes to a temporary file that is renamed over the old snapshot.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(root_ / "sessions");
    }

    const std::filesystem::path& root() const noexcept { return root_; }

    bool exists(const std::string& id) const { return valid_id(id) && std::filesystem::exists(path_of(id)); }

    std::vector<std::string> list() const {
        std::vector<std::string> ids;
        for (const auto& e : std::filesystem::directory_iterator(root_ / "sessions")) {
            if (e.path().extension() == ".json") ids.push_back(e.path().stem().string());
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    void save(const std::string& id, const ExpansionSession& s, const EmbeddingCorpus& corpus) const {
        if (!valid_id(id)) throw InvalidArgument("invalid session id");
        auto snap = session_to_json(s, corpus);
        snap["state_hash"] = state_hash(snap);
        const auto target = path_of(id);
        const auto tmp = target.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            out << snap.dump() << '\n';
            out.flush();
            if (!out) throw Error("cannot write session " + id);
        }
        std::filesystem::rename(tmp, target);
    }

    nlohmann::json load_snapshot(const std::string& id) const {
        if (!exists(id)) throw NotFound("session", id);
        std::ifstream in(path_of(id), std::ios::binary);
        return nlohmann::json::parse(in);
    }

    // Loads a session; with `verify` the history is replayed against the
    // corpus and must reproduce the stored state hash.
    ExpansionSession load(const std::string& id, const EmbeddingCorpus& corpus, bool verify = true) const {
        auto snap = load_snapshot(id);
        const auto stored = snap.value("state_hash", "");
        snap.erase("state_hash");
        if (stored != state_hash(snap)) throw StateError("session " + id + " snapshot hash mismatch");
        if (verify && !verify_replay(snap, corpus)) throw StateError("session " + id + " does not replay");
        return session_from_json(snap, corpus);
    }

private:
    static bool valid_id(const std::string& id) {
        return !id.empty() && id.size() <= 64 &&
               std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-'; });
    }

    std::filesystem::path path_of(const std::string& id) const { return root_ / "sessions" / (id + ".json"); }

    std::filesystem::path root_;
};

}  // namespace lexgraph
