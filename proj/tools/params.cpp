#include "params.hpp"

#include <fstream>
#include <sstream>

#include "saekit/errors.hpp"

namespace saekit::cli {

namespace {

bool is_train_field(const std::string& key) {
    static const nlohmann::json fields = to_json(TrainConfig{});
    return fields.contains(key);
}

// Checks a config-file value against the parameter's default type.
void check_type(const std::string& name, const nlohmann::json& def, const nlohmann::json& value) {
    bool ok = false;
    if (def.is_string()) ok = value.is_string();
    else if (def.is_number_integer()) ok = value.is_number_unsigned() || (value.is_number_integer() && value.get<std::int64_t>() >= 0);
    else if (def.is_number_float()) ok = value.is_number();
    else if (def.is_array()) {
        ok = value.is_array();
        for (const auto& v : value) ok = ok && v.is_number();
    }
    if (!ok) throw ConfigError("config key '" + name + "' has the wrong type");
}

nlohmann::json parse_number(const std::string& flag, const std::string& text) {
    nlohmann::json v = nlohmann::json::parse(text, nullptr, false);
    if (v.is_discarded() || !v.is_number()) throw ConfigError("flag --" + flag + " expects a number, got '" + text + "'");
    return v;
}

// Converts flag text to the parameter's type.
nlohmann::json from_flag(const std::string& name, const nlohmann::json& def, const std::string& text) {
    const std::string flag = kebab(name);
    if (def.is_string()) return text;
    if (def.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) out.push_back(parse_number(flag, item));
        }
        return out;
    }
    nlohmann::json v = parse_number(flag, text);
    check_type(name, def, v);
    return v;
}

}  // namespace

std::string kebab(const std::string& snake) {
    std::string out = snake;
    for (char& c : out) {
        if (c == '_') c = '-';
    }
    return out;
}

ParamSet& ParamSet::add(const std::string& name, nlohmann::json default_value, const std::string& help) {
    params_.push_back({name, std::move(default_value), help});
    return *this;
}

ParamSet& ParamSet::with_train_config() {
    train_ = true;
    return *this;
}

void ParamSet::register_flags(CLI::App& app, const std::string& positional) {
    app.add_option("--config", config_path_, "JSON config file; flags override its values");
    for (const Param& p : params_) {
        if (p.name == positional) continue;
        flag_options_[p.name] =
            app.add_option("--" + kebab(p.name), flag_text_[p.name], p.help + " (default " + p.default_value.dump() + ")");
    }
    if (train_) {
        const nlohmann::json fields = to_json(TrainConfig{});
        for (const auto& [key, value] : fields.items()) {
            flag_options_[key] =
                app.add_option("--" + kebab(key), flag_text_[key], "TrainConfig." + key + " (default " + value.dump() + ")");
        }
    }
    if (!positional.empty()) {
        positional_name_ = positional;
        positional_option_ = app.add_option(positional, positional_values_, "Input paths");
    }
}

Resolved ParamSet::resolve() const {
    Resolved r;
    for (const Param& p : params_) r.params[p.name] = p.default_value;

    nlohmann::json train_overlay = nlohmann::json::object();
    if (!config_path_.empty()) {
        std::ifstream in(config_path_);
        if (!in) throw IoError("cannot open config file " + config_path_);
        nlohmann::json config = nlohmann::json::parse(in, nullptr, false);
        if (config.is_discarded() || !config.is_object()) {
            throw ConfigError("config file " + config_path_ + " is not a JSON object");
        }
        for (const auto& [key, value] : config.items()) {
            if (key == positional_name_) {
                bool ok = value.is_array();
                for (const auto& v : value) ok = ok && v.is_string();
                if (!ok) throw ConfigError("config key '" + key + "' must be an array of strings");
                r.params[key] = value;
            } else if (r.params.contains(key)) {
                check_type(key, r.params[key], value);
                r.params[key] = value;
            } else if (train_ && is_train_field(key)) {
                train_overlay[key] = value;
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    }
    if (train_) r.train = config_from_json(train_overlay);

    nlohmann::json train_flags = nlohmann::json::object();
    for (const auto& [name, option] : flag_options_) {
        if (option->count() == 0) continue;
        const std::string& text = flag_text_.at(name);
        if (r.params.contains(name)) r.params[name] = from_flag(name, r.params[name], text);
        else train_flags[name] = parse_number(kebab(name), text);
    }
    if (train_) r.train = config_from_json(train_flags, *r.train);
    if (positional_option_ != nullptr && positional_option_->count() > 0) {
        r.params[positional_name_] = positional_values_;
    }
    return r;
}

}  // namespace saekit::cli
