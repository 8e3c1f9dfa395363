#pragma once

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lexgraph/error.hpp"
#include "lexgraph/search.hpp"

namespace lexgraph {

struct GoldSet {
    std::string context_label;
    std::set<std::string> positives;
    std::string provenance;
};

inline void from_json(const nlohmann::json& j, GoldSet& g) {
    g.context_label = j.value("context_label", "");
    g.positives = j.at("positives").get<std::set<std::string>>();
    g.provenance = j.value("provenance", "");
    if (g.positives.empty()) throw InvalidArgument("gold set has no positives");
}

inline void to_json(nlohmann::json& j, const GoldSet& g) {
    j = {{"context_label", g.context_label}, {"positives", g.positives}, {"provenance", g.provenance}};
}

struct Precision {
    double value = 0.0;
    std::size_t hits = 0;
    std::size_t considered = 0;  // min(p, ranking length)
    bool empty_ranking = false;  // value 0 because nothing was returned, not because all were wrong
};

// Fraction of the top min(p, len) ranked words that are gold positives.
[[nodiscard]] inline Precision precision_at(std::span<const WordScore> ranked, const GoldSet& gold, std::size_t p) {
    if (p == 0) throw InvalidArgument("precision cut-off p must be positive");
    Precision out;
    out.considered = std::min(p, ranked.size());
    if (out.considered == 0) {
        out.empty_ranking = true;
        return out;
    }
    for (std::size_t i = 0; i < out.considered; ++i) out.hits += gold.positives.contains(ranked[i].word);
    out.value = static_cast<double>(out.hits) / static_cast<double>(out.considered);
    return out;
}

struct NamedRanking {
    std::string model;
    std::string seed;
    std::vector<WordScore> results;
};

inline void to_json(nlohmann::json& j, const NamedRanking& r) {
    j = {{"model", r.model}, {"seed", r.seed}, {"results", r.results}};
}

inline void from_json(const nlohmann::json& j, NamedRanking& r) {
    r.model = j.at("model").get<std::string>();
    r.seed = j.at("seed").get<std::string>();
    r.results = j.at("results").get<std::vector<WordScore>>();
}

struct PrecisionRow {
    std::string model;
    std::string seed;
    std::size_t p = 0;
    double precision = 0.0;

    bool operator==(const PrecisionRow&) const = default;
};

struct PrecisionReport {
    std::vector<PrecisionRow> rows;
};

inline const std::vector<std::size_t>& default_thresholds() {
    static const std::vector<std::size_t> t{5, 10, 20};
    return t;
}

// One row per (ranking, threshold), rankings in the given order.
[[nodiscard]] inline PrecisionReport evaluate(std::span<const NamedRanking> rankings, const GoldSet& gold,
                                              std::span<const std::size_t> thresholds = default_thresholds()) {
    PrecisionReport report;
    for (const auto& r : rankings) {
        for (auto p : thresholds) report.rows.push_back({r.model, r.seed, p, precision_at(r.results, gold, p).value});
    }
    return report;
}

namespace detail {

inline std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace detail

inline void write_csv(std::ostream& out, const PrecisionReport& report) {
    out << "model,seed,p,precision\n";
    for (const auto& r : report.rows) {
        out << r.model << ',' << r.seed << ',' << r.p << ',' << detail::shortest(r.precision) << '\n';
    }
}

[[nodiscard]] inline PrecisionReport read_csv(std::istream& in) {
    PrecisionReport report;
    std::string line;
    if (!std::getline(in, line) || line != "model,seed,p,precision") throw InvalidArgument("bad report header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (cells.size() != 4) throw InvalidArgument("bad report row: " + line);
        PrecisionRow row{cells[0], cells[1], std::stoul(cells[2]), 0.0};
        auto res = std::from_chars(cells[3].data(), cells[3].data() + cells[3].size(), row.precision);
        if (res.ec != std::errc()) throw InvalidArgument("bad precision value: " + cells[3]);
        report.rows.push_back(std::move(row));
    }
    return report;
}

// Model | Seed word | p = 5 | p = 10 | ... one line per (model, seed).
inline void write_table(std::ostream& out, const PrecisionReport& report) {
    std::vector<std::size_t> ps;
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::map<std::size_t, double>> cells;
    for (const auto& r : report.rows) {
        if (std::find(ps.begin(), ps.end(), r.p) == ps.end()) ps.push_back(r.p);
        auto key = std::make_pair(r.model, r.seed);
        if (!cells.contains(key)) keys.push_back(key);
        cells[key][r.p] = r.precision;
    }
    std::size_t mw = 5, sw = 9;
    for (const auto& [m, s] : keys) {
        mw = std::max(mw, m.size());
        sw = std::max(sw, s.size());
    }
    auto pad = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size()), ' ');
        return s;
    };
    out << pad("Model", mw) << " | " << pad("Seed word", sw);
    for (auto p : ps) out << " | " << pad("p = " + std::to_string(p), 8);
    out << '\n' << std::string(mw, '-') << "-+-" << std::string(sw, '-');
    for (std::size_t i = 0; i < ps.size(); ++i) out << "-+-" << std::string(8, '-');
    out << '\n';
    for (const auto& key : keys) {
        out << pad(key.first, mw) << " | " << pad(key.second, sw);
        for (auto p : ps) {
            auto it = cells[key].find(p);
            char buf[32] = "";
            if (it != cells[key].end()) std::snprintf(buf, sizeof buf, "%.2f", it->second);
            out << " | " << pad(buf, 8);
        }
        out << '\n';
    }
}

}  // namespace lexgraph
