#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

// CLI11 config reader for YAML files. Top-level scalar/sequence keys apply to
// the active subcommand; a mapping named after the subcommand applies too, and
// mappings for other subcommands are skipped, so one file can serve several
// commands:
//
//   corpus: data/corpus
//   expand:
//     k: 0.2
//     max-depth: 3
//
// Underscores in keys are accepted for dashes (min_sim == min-sim).
class YamlConfig : public CLI::Config {
public:
    explicit YamlConfig(std::string active_subcommand) : active_(std::move(active_subcommand)) {}

    std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::stringstream buf;
        buf << input.rdbuf();
        YAML::Node root;
        try {
            root = YAML::Load(buf.str());
        } catch (const YAML::Exception& e) {
            throw CLI::ConversionError("config", e.what());
        }
        std::vector<CLI::ConfigItem> items;
        if (!root || root.IsNull()) return items;
        if (!root.IsMap()) throw CLI::ConversionError("config", "top level must be a mapping");
        for (const auto& kv : root) {
            const auto key = kv.first.as<std::string>();
            if (kv.second.IsMap()) {
                if (key != active_) continue;
                for (const auto& inner : kv.second) add(items, inner.first.as<std::string>(), inner.second);
            } else {
                add(items, key, kv.second);
            }
        }
        return items;
    }

private:
    void add(std::vector<CLI::ConfigItem>& items, std::string key, const YAML::Node& value) const {
        for (auto& c : key) {
            if (c == '_') c = '-';
        }
        CLI::ConfigItem item;
        if (!active_.empty()) item.parents = {active_};
        item.name = key;
        if (value.IsSequence()) {
            for (const auto& v : value) item.inputs.push_back(v.as<std::string>());
        } else if (value.IsScalar()) {
            item.inputs.push_back(value.as<std::string>());
        } else {
            throw CLI::ConversionError(key, "expected a scalar or a list");
        }
        items.push_back(std::move(item));
    }

    std::string active_;
};
