#pragma once

// JSON-over-HTTP frontend to the expansion engine.
//
//   POST /sessions                 {seed, seed_doc_ids?, preset?, k, n, m, max_depth, min_sim, min_count}
//   GET  /sessions                 [session ids]
//   GET  /sessions/{id}            summary (seed, params, status, parent, labels)
//   POST /sessions/{id}/run        -> {status}
//   POST /sessions/{id}/step       -> {discovered, status}
//   GET  /sessions/{id}/graph      -> graph JSON
//   GET  /sessions/{id}/results    -> ranked list
//   POST /sessions/{id}/labels     {word, label} -> 204
//   POST /sessions/{id}/reseed     {k?} -> {new_session_id}
//   GET  /words/{token}/snippets?limit=
//   GET  /healthz
//
// Mutations of one session are serialized; every mutation is persisted before
// the response is sent.

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lexgraph/corpus.hpp"
#include "lexgraph/error.hpp"
#include "lexgraph/expansion.hpp"
#include "lexgraph/graph_export.hpp"
#include "lexgraph/session_json.hpp"
#include "lexgraph/session_store.hpp"
#include "lexgraph/snippets.hpp"

namespace lexgraph {

// Applies request/config overrides on top of `base`. Unknown presets and
// mistyped values raise InvalidArgument.
[[nodiscard]] inline ExpansionParams params_from_json(const nlohmann::json& j, ExpansionParams base = {}) {
    try {
        if (j.contains("preset")) {
            const auto preset = j.at("preset").get<std::string>();
            if (preset == "covid") {
                base = ExpansionParams::covid();
            } else if (preset == "adr") {
                base = ExpansionParams::adr();
            } else {
                throw InvalidArgument("unknown preset '" + preset + "'");
            }
        }
        if (j.contains("k")) base.k = j.at("k").get<double>();
        if (j.contains("n")) base.n = j.at("n").get<std::size_t>();
        if (j.contains("m")) base.m = j.at("m").get<std::size_t>();
        if (j.contains("max_depth")) base.max_depth = j.at("max_depth").get<std::size_t>();
        if (j.contains("min_sim")) base.scan.min_sim = j.at("min_sim").get<double>();
        if (j.contains("min_count")) base.scan.min_count = j.at("min_count").get<std::size_t>();
        if (j.contains("average_first")) base.scan.average_first = j.at("average_first").get<bool>();
        if (j.contains("token_filter")) base.scan.token_filter = parse_token_filter(j.at("token_filter").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("bad parameter: ") + e.what());
    }
    base.validate();
    return base;
}

class Service {
public:
    Service(const EmbeddingCorpus& corpus, SessionStore& store) : corpus_(corpus), store_(store) {}

    // Registers every route on `server`.
    void mount(httplib::Server& server) {
        server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                    {"Access-Control-Allow-Headers", "Content-Type"},
                                    {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
        server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, {{"status", "ok"}});
        });

        server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body.contains("seed") || !body.at("seed").is_string()) throw InvalidArgument("missing seed");
            std::vector<std::uint32_t> docs;
            try {
                if (body.contains("seed_doc_ids")) docs = body.at("seed_doc_ids").get<std::vector<std::uint32_t>>();
            } catch (const nlohmann::json::exception& e) {
                throw InvalidArgument(std::string("bad seed_doc_ids: ") + e.what());
            }
            auto session = init_session(corpus_, body.at("seed").get<std::string>(), docs, params_from_json(body));
            const auto id = make_uuid();
            store_.save(id, session, corpus_);
            remember(id, std::move(session));
            reply(res, 201, {{"session_id", id}});
        }));

        server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, store_.list());
        }));

        server.Get(R"(/sessions/([A-Za-z0-9-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
            with_session(req.matches[1], [&](const std::string& id, ExpansionSession& s) {
                auto labels = nlohmann::json::object();
                for (const auto& [w, l] : s.labels) labels[w] = std::string(to_string(l));
                reply(res, 200,
                      {{"session_id", id},
                       {"seed", s.seed_word},
                       {"seed_doc_ids", s.seed_doc_ids},
                       {"parent", s.parent},
                       {"params", s.params},
                       {"status", status_name(s)},
                       {"labels", labels}});
            });
        }));

        server.Post(R"(/sessions/([A-Za-z0-9-]+)/run)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            with_session(req.matches[1], [&](const std::string& id, ExpansionSession& s) {
                run(s, corpus_);
                store_.save(id, s, corpus_);
                reply(res, 200, {{"status", status_name(s)}});
            });
        }));

        server.Post(R"(/sessions/([A-Za-z0-9-]+)/step)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            with_session(req.matches[1], [&](const std::string& id, ExpansionSession& s) {
                const auto fresh = step(s, corpus_);
                store_.save(id, s, corpus_);
                reply(res, 200, {{"discovered", fresh}, {"status", status_name(s)}});
            });
        }));

        server.Get(R"(/sessions/([A-Za-z0-9-]+)/graph)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            with_session(req.matches[1], [&](const std::string&, ExpansionSession& s) {
                reply(res, 200, graph_to_json(s.graph, corpus_));
            });
        }));

        server.Get(R"(/sessions/([A-Za-z0-9-]+)/results)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            with_session(req.matches[1], [&](const std::string&, ExpansionSession& s) {
                reply(res, 200, rank_results(s, corpus_));
            });
        }));

        server.Post(R"(/sessions/([A-Za-z0-9-]+)/labels)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            if (!body.contains("word") || !body.contains("label")) throw InvalidArgument("expected {word, label}");
            with_session(req.matches[1], [&](const std::string& id, ExpansionSession& s) {
                const auto word = body.at("word").get<std::string>();
                const auto label = parse_label(body.at("label").get<std::string>());
                if (!s.graph.contains(word)) throw NotFound("graph node", word);
                s.labels[word] = label;
                store_.save(id, s, corpus_);
                res.status = 204;
            });
        }));

        server.Post(R"(/sessions/([A-Za-z0-9-]+)/reseed)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const auto body = req.body.empty() ? nlohmann::json::object() : parse_body(req);
            std::string new_id;
            with_session(req.matches[1], [&](const std::string& id, ExpansionSession& s) {
                std::set<std::string> accepted;
                for (const auto& [w, l] : s.labels) {
                    if (l == Label::accepted) accepted.insert(w);
                }
                auto next = reseed(s, accepted, corpus_, params_from_json(body, s.params));
                next.parent = id;
                new_id = make_uuid();
                store_.save(new_id, next, corpus_);
                remember(new_id, std::move(next));
            });
            reply(res, 201, {{"new_session_id", new_id}});
        }));

        server.Get(R"(/words/(.+)/snippets)", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string word = req.matches[1];
            if (!corpus_.find_token(word)) throw NotFound("word", word);
            std::optional<std::size_t> limit;
            if (req.has_param("limit")) {
                try {
                    limit = std::stoul(req.get_param_value("limit"));
                } catch (const std::exception&) {
                    throw InvalidArgument("limit must be a non-negative integer");
                }
            }
            reply(res, 200, snippets_for(corpus_, word, limit));
        }));
    }

private:
    struct Entry {
        std::mutex mu;
        std::optional<ExpansionSession> session;
    };

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static std::string status_name(const ExpansionSession& s) {
        return s.status == SessionStatus::finished ? "finished" : "running";
    }

    static nlohmann::json parse_body(const httplib::Request& req) {
        try {
            auto j = nlohmann::json::parse(req.body.empty() ? "{}" : req.body);
            if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
            return j;
        } catch (const nlohmann::json::parse_error& e) {
            throw InvalidArgument(std::string("malformed JSON: ") + e.what());
        }
    }

    // Maps engine errors onto status codes.
    static Handler guarded(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const NotFound& e) {
                reply(res, 404, {{"error", e.what()}});
            } catch (const StateError& e) {
                reply(res, 409, {{"error", e.what()}});
            } catch (const InvalidArgument& e) {
                reply(res, 422, {{"error", e.what()}});
            } catch (const nlohmann::json::exception& e) {
                reply(res, 422, {{"error", e.what()}});
            } catch (const std::exception& e) {
                reply(res, 500, {{"error", e.what()}});
            }
        };
    }

    std::shared_ptr<Entry> entry_for(const std::string& id) {
        std::lock_guard lock(registry_mu_);
        auto& slot = registry_[id];
        if (!slot) slot = std::make_shared<Entry>();
        return slot;
    }

    void remember(const std::string& id, ExpansionSession s) {
        auto e = entry_for(id);
        std::lock_guard lock(e->mu);
        e->session = std::move(s);
    }

    template <class Fn>
    void with_session(const std::string& id, Fn&& fn) {
        if (!store_.exists(id)) throw NotFound("session", id);
        auto e = entry_for(id);
        std::lock_guard lock(e->mu);
        if (!e->session) e->session = store_.load(id, corpus_);
        fn(id, *e->session);
    }

    const EmbeddingCorpus& corpus_;
    SessionStore& store_;
    std::mutex registry_mu_;
    std::map<std::string, std::shared_ptr<Entry>> registry_;
};

}  // namespace lexgraph
