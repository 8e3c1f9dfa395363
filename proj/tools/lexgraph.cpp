// lexgraph command-line tool: ingest, manual-search, expand, eval, serve.
//
// Exit codes: 0 success, 1 user error (bad input, unknown word, bad flags),
// 2 internal error.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <csignal>
#include <pthread.h>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lexgraph/http_service.hpp"
#include "lexgraph/lexgraph.hpp"
#include "yaml_config.hpp"

namespace fs = std::filesystem;
using namespace lexgraph;

namespace {

constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// One keyword per line or comma separated; '#' starts a comment.
std::vector<std::string> read_keywords(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open keyword file " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::stringstream ss(line);
        for (std::string kw; std::getline(ss, kw, ',');) {
            const auto b = kw.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            const auto e = kw.find_last_not_of(" \t\r");
            out.push_back(lower(kw.substr(b, e - b + 1)));
        }
    }
    if (out.empty()) throw Error("keyword file " + path.string() + " lists no keywords");
    return out;
}

void write_json_file(const fs::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------- ingest

struct IngestArgs {
    std::string documents;
    std::string occurrences;
    std::string occurrences_format = "auto";
    std::uint32_t dim = 0;
    std::string out;
    std::string format = "binary";
    std::string keyword_file;
    bool lowercased = false;
    std::string embedding_source;
};

int cmd_ingest(const IngestArgs& a) {
    const fs::path occ_path(a.occurrences);
    std::string in_format = a.occurrences_format;
    if (in_format == "auto") in_format = occ_path.extension() == ".bin" ? "binary" : "jsonl";

    std::uint32_t dim = a.dim;
    if (dim == 0) {
        if (in_format == "binary") throw InvalidArgument("--dim is required for binary occurrence input");
        dim = peek_jsonl_dim(occ_path);
    }
    const auto out_format = a.format == "jsonl" ? OccurrenceFormat::jsonl : OccurrenceFormat::binary;

    CorpusBuilder builder(dim);
    builder.metadata(a.embedding_source, a.lowercased, out_format);
    std::unordered_set<std::uint32_t> dropped;
    if (a.keyword_file.empty()) {
        read_documents_jsonl(a.documents, builder);
    } else {
        const auto keywords = read_keywords(a.keyword_file);
        read_documents_jsonl(
            a.documents, builder,
            [&](const Document& d) {
                const auto text = lower(d.text);
                return std::any_of(keywords.begin(), keywords.end(),
                                   [&](const std::string& kw) { return text.find(kw) != std::string::npos; });
            },
            &dropped);
    }
    if (in_format == "binary") {
        read_occurrences_binary(occ_path, builder, &dropped);
    } else {
        read_occurrences_jsonl(occ_path, builder, &dropped);
    }
    const auto corpus = std::move(builder).build();
    write_corpus(corpus, a.out, out_format);

    // The written directory must load back.
    const auto check = load_corpus(a.out);
    std::cerr << "ingested " << check.manifest().num_documents << " documents, "
              << check.manifest().num_occurrences << " occurrences, " << check.vocabulary().size()
              << " tokens (dim " << check.dim() << ")";
    if (!dropped.empty()) std::cerr << "; " << dropped.size() << " documents dropped by keyword filter";
    std::cerr << '\n';
    return 0;
}

// ---------------------------------------------------------- manual-search

struct ScanArgs {
    double min_sim = 0.3;
    std::size_t min_count = 3;
    std::optional<std::size_t> top_k;
    bool average_first = false;
    bool keep_non_alpha = false;
    unsigned threads = 0;

    ScanConfig config() const {
        ScanConfig c;
        c.min_sim = min_sim;
        c.min_count = min_count;
        c.top_k = top_k;
        c.average_first = average_first;
        c.token_filter = keep_non_alpha ? TokenFilter::none : TokenFilter::alphabetic;
        c.threads = threads;
        return c;
    }
};

void add_scan_flags(CLI::App* cmd, ScanArgs& s) {
    cmd->add_option("--min-sim", s.min_sim, "Occurrence similarity threshold")->capture_default_str();
    cmd->add_option("--min-count", s.min_count, "Minimum corpus occurrences per word")->capture_default_str();
    cmd->add_flag("--average-first", s.average_first, "Threshold the per-word mean instead of each occurrence");
    cmd->add_flag("--keep-non-alpha", s.keep_non_alpha, "Keep tokens without letters");
    cmd->add_option("--threads", s.threads, "Scan threads (0 = all cores)");
}

struct ManualArgs {
    std::string corpus;
    std::string seed;
    std::vector<std::uint32_t> seed_docs;
    ScanArgs scan;
    std::string out;
};

int cmd_manual(const ManualArgs& a) {
    const auto corpus = load_corpus(a.corpus);
    std::vector<std::uint32_t> docs = a.seed_docs;
    if (docs.empty()) {
        // Without explicit seed texts every document holding the seed counts.
        for (const auto& hit : occurrences_of(corpus, a.seed)) docs.push_back(hit.occurrence.doc_id);
        docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
        if (docs.empty()) throw NotFound("word", a.seed);
    }
    const auto results = manual_search(corpus, a.seed, docs, a.scan.config());
    write_jsonl(std::cout, results);
    if (!a.out.empty()) write_json_file(a.out, NamedRanking{"manual", a.seed, results});
    return 0;
}

// ----------------------------------------------------------------- expand

struct ExpandArgs {
    std::string corpus;
    std::string seed;
    std::vector<std::uint32_t> seed_docs;
    std::string preset = "covid";
    double k = 0.3;
    std::size_t n = 5;
    std::size_t m = 5;
    std::size_t max_depth = 3;
    ScanArgs scan;
    std::string out;
    std::string dot;
    std::string graph_json;
    std::string ranking_out;
};

int cmd_expand(const ExpandArgs& a, const CLI::App& cmd) {
    const auto corpus = load_corpus(a.corpus);

    ExpansionParams params;
    if (a.preset == "adr") {
        params = ExpansionParams::adr();
    } else if (a.preset == "covid") {
        params = ExpansionParams::covid();
    } else {
        throw InvalidArgument("unknown preset '" + a.preset + "' (expected covid or adr)");
    }
    auto given = [&](const char* name) { return cmd.count(name) > 0; };
    if (given("--k")) params.k = a.k;
    if (given("--n")) params.n = a.n;
    if (given("--m")) params.m = a.m;
    if (given("--max-depth")) params.max_depth = a.max_depth;
    const unsigned threads = a.scan.threads;
    auto scan = a.scan.config();
    scan.top_k.reset();
    params.scan = scan;
    params.scan.threads = threads;

    auto session = init_session(corpus, a.seed, a.seed_docs, params);
    const auto [graph, ranking] = run(session, corpus);
    write_jsonl(std::cout, ranking);

    if (!a.out.empty()) {
        auto snap = session_to_json(session, corpus);
        snap["state_hash"] = state_hash(snap);
        std::ofstream(a.out) << snap.dump() << '\n';
    }
    if (!a.dot.empty()) std::ofstream(a.dot) << graph_to_dot(*graph, corpus);
    if (!a.graph_json.empty()) write_json_file(a.graph_json, graph_to_json(*graph, corpus));
    if (!a.ranking_out.empty()) write_json_file(a.ranking_out, NamedRanking{"graph", a.seed, ranking});
    return 0;
}

// ------------------------------------------------------------------- eval

struct EvalArgs {
    std::string gold;
    std::vector<std::size_t> thresholds{5, 10, 20};
    std::vector<std::string> rankings;
    std::string out;
};

int cmd_eval(const EvalArgs& a) {
    std::ifstream gin(a.gold);
    if (!gin) throw Error("cannot open gold file " + a.gold);
    const auto gold = nlohmann::json::parse(gin).get<GoldSet>();
    std::vector<NamedRanking> rankings;
    for (const auto& path : a.rankings) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open ranking file " + path);
        rankings.push_back(nlohmann::json::parse(in).get<NamedRanking>());
    }
    const auto report = evaluate(rankings, gold, a.thresholds);
    write_table(std::cout, report);
    if (!a.out.empty()) {
        std::ofstream out(a.out);
        write_csv(out, report);
    }
    return 0;
}

// ------------------------------------------------------------------ serve

struct ServeArgs {
    std::string corpus;
    std::string store = "lexgraph-store";
    std::string bind = "127.0.0.1:8080";
    std::string ui_dir;
};

int cmd_serve(const ServeArgs& a) {
    const auto colon = a.bind.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("--bind must be host:port");
    const auto host = a.bind.substr(0, colon);
    const int port = std::stoi(a.bind.substr(colon + 1));

    // Block the stop signals before httplib spawns workers; a watcher thread
    // receives them with sigwait and stops the server from normal context.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    const auto corpus = load_corpus(a.corpus);
    SessionStore store(a.store);
    Service service(corpus, store);
    httplib::Server server;
    service.mount(server);
    if (!a.ui_dir.empty() && !server.set_mount_point("/", a.ui_dir)) {
        throw InvalidArgument("cannot serve UI directory " + a.ui_dir);
    }

    std::atomic<bool> signalled{false};
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&stop_signals, &sig);
        signalled = true;
        server.stop();
    });
    std::cerr << "serving " << a.corpus << " on " << host << ':' << port << '\n';
    const bool ok = server.listen(host, port);
    if (!signalled) pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    if (!ok) throw Error("cannot bind " + a.bind);
    return 0;
}

std::string active_subcommand(const std::vector<std::string>& args) {
    static const std::vector<std::string> names{"ingest", "manual-search", "expand", "eval", "serve"};
    for (const auto& a : args) {
        if (std::find(names.begin(), names.end(), a) != names.end()) return a;
    }
    return {};
}

// CLI11 checks a subcommand's required flags before the parent reads its
// config file, so `--config` is moved ahead of the subcommand name.
std::vector<std::string> hoist_config(int argc, char** argv) {
    std::vector<std::string> front, rest;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) {
            front.push_back(a);
            front.push_back(argv[++i]);
        } else if (a.rfind("--config=", 0) == 0) {
            front.push_back(a);
        } else {
            rest.push_back(a);
        }
    }
    front.insert(front.end(), rest.begin(), rest.end());
    return front;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Seed-word lexicon expansion over contextual token embeddings"};
    app.require_subcommand(1);
    app.set_config("--config", "", "YAML file supplying any flag");
    auto args = hoist_config(argc, argv);
    app.config_formatter(std::make_shared<YamlConfig>(active_subcommand(args)));

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Validate raw documents + occurrences and write a corpus directory");
    c_ingest->add_option("--documents", ingest.documents, "documents JSONL ({id, text})")->required();
    c_ingest->add_option("--occurrences", ingest.occurrences, "occurrences file (.bin or .jsonl)")->required();
    c_ingest->add_option("--occurrences-format", ingest.occurrences_format)
        ->check(CLI::IsMember({"auto", "binary", "jsonl"}))
        ->capture_default_str();
    c_ingest->add_option("--dim", ingest.dim, "embedding dimension (inferred for JSONL input)");
    c_ingest->add_option("--out", ingest.out, "output corpus directory")->required();
    c_ingest->add_option("--format", ingest.format, "output occurrence format")
        ->check(CLI::IsMember({"binary", "jsonl"}))
        ->capture_default_str();
    c_ingest->add_option("--keyword-file", ingest.keyword_file, "keep only documents containing a listed keyword");
    c_ingest->add_flag("--lowercased", ingest.lowercased, "tokens are lowercased");
    c_ingest->add_option("--embedding-source", ingest.embedding_source, "provenance recorded in the manifest");

    ManualArgs manual;
    auto* c_manual = app.add_subcommand("manual-search", "One scan from a seed word's seed-text embedding");
    c_manual->add_option("--corpus", manual.corpus)->required();
    c_manual->add_option("--seed", manual.seed)->required();
    c_manual->add_option("--seed-docs", manual.seed_docs, "seed document ids (default: all containing the seed)")
        ->delimiter(',');
    add_scan_flags(c_manual, manual.scan);
    c_manual->add_option("--top-k", manual.scan.top_k, "keep only the first K words");
    c_manual->add_option("--out", manual.out, "ranking JSON file");

    ExpandArgs expand;
    auto* c_expand = app.add_subcommand("expand", "Graph-based iterative expansion from a seed word");
    c_expand->add_option("--corpus", expand.corpus)->required();
    c_expand->add_option("--seed", expand.seed)->required();
    c_expand->add_option("--seed-docs", expand.seed_docs, "seed document ids for the initial context")->delimiter(',');
    c_expand->add_option("--preset", expand.preset, "covid (k 0.3) or adr (k 0.2)")->capture_default_str();
    c_expand->add_option("--k", expand.k, "context weight in the query blend");
    c_expand->add_option("--n", expand.n, "words taken per expanded node");
    c_expand->add_option("--m", expand.m, "words absorbed into the context per depth");
    c_expand->add_option("--max-depth", expand.max_depth, "maximum graph depth");
    add_scan_flags(c_expand, expand.scan);
    c_expand->add_option("--out", expand.out, "session snapshot JSON");
    c_expand->add_option("--dot", expand.dot, "graph in Graphviz DOT");
    c_expand->add_option("--graph-json", expand.graph_json, "graph JSON");
    c_expand->add_option("--ranking-out", expand.ranking_out, "ranking JSON file for eval");

    EvalArgs eval;
    auto* c_eval = app.add_subcommand("eval", "Precision@p of ranking files against a gold set");
    c_eval->add_option("--gold", eval.gold, "gold set JSON")->required();
    c_eval->add_option("--thresholds", eval.thresholds, "cut-offs p")->delimiter(',')->capture_default_str();
    c_eval->add_option("--out", eval.out, "report CSV");
    c_eval->add_option("rankings", eval.rankings, "ranking JSON files")->required();

    ServeArgs serve;
    auto* c_serve = app.add_subcommand("serve", "HTTP API for the analyst workbench");
    c_serve->add_option("--corpus", serve.corpus)->required();
    c_serve->add_option("--store", serve.store, "session store directory")->capture_default_str();
    c_serve->add_option("--bind", serve.bind, "host:port")->capture_default_str();
    c_serve->add_option("--ui-dir", serve.ui_dir, "static UI bundle to serve at /");

    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUser;
    }

    try {
        if (*c_ingest) return cmd_ingest(ingest);
        if (*c_manual) return cmd_manual(manual);
        if (*c_expand) return cmd_expand(expand, *c_expand);
        if (*c_eval) return cmd_eval(eval);
        if (*c_serve) return cmd_serve(serve);
    } catch (const lexgraph::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUser;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUser;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUser;
}
