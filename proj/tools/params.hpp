#pragma once

// Parameter tables shared by config files and command-line flags. A parameter
// named `max_rows` is the config key "max_rows" and the flag --max-rows.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saekit/optim.hpp"

namespace saekit::cli {

struct Resolved {
    nlohmann::json params = nlohmann::json::object();
    std::optional<TrainConfig> train;
};

class ParamSet {
public:
    // The default's JSON type fixes the parameter's type: string, unsigned
    // integer, floating point, or array of numbers.
    ParamSet& add(const std::string& name, nlohmann::json default_value, const std::string& help);
    // Also accept every TrainConfig field, as config keys and as flags.
    ParamSet& with_train_config();

    // Registers --config, one flag per parameter, and (optionally) a
    // positional list collected into the array parameter `positional`.
    void register_flags(CLI::App& app, const std::string& positional = "");

    // defaults, then the --config file, then flags given on the command line.
    Resolved resolve() const;

private:
    struct Param {
        std::string name;
        nlohmann::json default_value;
        std::string help;
    };
    std::vector<Param> params_;
    bool train_ = false;
    std::string config_path_;
    std::vector<std::string> positional_values_;
    std::string positional_name_;
    // Raw flag text; std::map keeps references stable for CLI11.
    std::map<std::string, std::string> flag_text_;
    std::map<std::string, CLI::Option*> flag_options_;
    CLI::Option* positional_option_ = nullptr;
};

std::string kebab(const std::string& snake);

}  // namespace saekit::cli
