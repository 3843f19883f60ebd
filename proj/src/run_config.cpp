#include "axonad/run_config.hpp"

#include "axonad/data.hpp"
#include "axonad/error.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>

namespace axonad {

using nlohmann::json;

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& what) {
    fail(ErrorCode::config, "config key '" + path + "': " + what);
}

double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) bad_key(path, "expected a number, got " + v.dump());
    return v.get<double>();
}

std::int64_t as_integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) bad_key(path, "expected an integer, got " + v.dump());
    return v.get<std::int64_t>();
}

int as_int(const json& v, const std::string& path) {
    const auto x = as_integer(v, path);
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
        bad_key(path, "integer out of range");
    return int(x);
}

std::uint64_t as_u64(const json& v, const std::string& path) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    const auto x = as_integer(v, path);
    if (x < 0) bad_key(path, "expected a non-negative integer");
    return std::uint64_t(x);
}

std::string as_string(const json& v, const std::string& path) {
    if (!v.is_string()) bad_key(path, "expected a string, got " + v.dump());
    return v.get<std::string>();
}

/// Runs a parser and re-labels its config errors with the key path.
template <class F>
auto parse_enum(const json& v, const std::string& path, F&& parse) {
    const auto s = as_string(v, path);
    try {
        return parse(s);
    } catch (const Error&) {
        bad_key(path, "unknown value '" + s + "'");
    }
}

struct Field {
    std::function<void(RunConfig&, const json&, const std::string&)> set;
    std::function<json(const RunConfig&)> get;
};

template <class T>
Field number_field(T RunConfig::*section, double T::*member) {
    return {[=](RunConfig& c, const json& v, const std::string& p) { (c.*section).*member = as_number(v, p); },
            [=](const RunConfig& c) { return json((c.*section).*member); }};
}

template <class T>
Field int_field(T RunConfig::*section, int T::*member) {
    return {[=](RunConfig& c, const json& v, const std::string& p) { (c.*section).*member = as_int(v, p); },
            [=](const RunConfig& c) { return json((c.*section).*member); }};
}

template <class T>
Field i64_field(T RunConfig::*section, std::int64_t T::*member) {
    return {[=](RunConfig& c, const json& v, const std::string& p) { (c.*section).*member = as_integer(v, p); },
            [=](const RunConfig& c) { return json((c.*section).*member); }};
}

template <class T>
Field u64_field(T RunConfig::*section, std::uint64_t T::*member) {
    return {[=](RunConfig& c, const json& v, const std::string& p) { (c.*section).*member = as_u64(v, p); },
            [=](const RunConfig& c) { return json((c.*section).*member); }};
}

const std::map<std::string, Field>& field_table() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["seed"] = {[](RunConfig& c, const json& v, const std::string& p) { c.seed = as_u64(v, p); },
                     [](const RunConfig& c) { return json(c.seed); }};

        using M = ModelConfig;
        const auto model = &RunConfig::model;
        t["model.window"] = int_field(model, &M::window);
        t["model.channels"] = int_field(model, &M::channels);
        t["model.dim"] = int_field(model, &M::dim);
        t["model.heads"] = int_field(model, &M::heads);
        t["model.horizon"] = int_field(model, &M::horizon);
        t["model.tail"] = int_field(model, &M::tail);
        t["model.conv_kernel"] = int_field(model, &M::conv_kernel);
        t["model.predictor_dropout"] = number_field(model, &M::predictor_dropout);
        t["model.eps_cos"] = number_field(model, &M::eps_cos);
        t["model.eps_rz"] = number_field(model, &M::eps_rz);
        t["model.ln_eps"] = number_field(model, &M::ln_eps);
        t["model.pos_init_std"] = number_field(model, &M::pos_init_std);
        t["model.dilations"] = {[](RunConfig& c, const json& v, const std::string& p) {
                                    if (!v.is_array() || v.empty()) bad_key(p, "expected a non-empty integer array");
                                    std::vector<int> d;
                                    for (std::size_t i = 0; i < v.size(); ++i)
                                        d.push_back(as_int(v[i], p + "[" + std::to_string(i) + "]"));
                                    c.model.dilations = std::move(d);
                                },
                                [](const RunConfig& c) { return json(c.model.dilations); }};
        t["model.prediction_target"] = {
            [](RunConfig& c, const json& v, const std::string& p) {
                c.model.prediction_target = parse_enum(v, p, parse_prediction_target);
            },
            [](const RunConfig& c) { return json(std::string(to_string(c.model.prediction_target))); }};

        using T = TrainConfig;
        const auto train = &RunConfig::train;
        t["train.learning_rate"] = number_field(train, &T::learning_rate);
        t["train.batch_size"] = int_field(train, &T::batch_size);
        t["train.max_epochs"] = int_field(train, &T::max_epochs);
        t["train.patience"] = int_field(train, &T::patience);
        t["train.weight_decay"] = number_field(train, &T::weight_decay);
        t["train.grad_clip"] = number_field(train, &T::grad_clip);
        t["train.mask_ratio"] = number_field(train, &T::mask_ratio);
        t["train.block_fraction"] = number_field(train, &T::block_fraction);
        t["train.ema_momentum"] = number_field(train, &T::ema_momentum);
        t["train.beta1"] = number_field(train, &T::beta1);
        t["train.beta2"] = number_field(train, &T::beta2);
        t["train.adam_eps"] = number_field(train, &T::adam_eps);

        using G = GeneratorConfig;
        const auto gen = &RunConfig::generator;
        t["generator.length"] = i64_field(gen, &G::length);
        t["generator.channels"] = int_field(gen, &G::channels);
        t["generator.latent_dim"] = int_field(gen, &G::latent_dim);
        t["generator.sinusoids_per_latent"] = int_field(gen, &G::sinusoids_per_latent);
        t["generator.period_min"] = number_field(gen, &G::period_min);
        t["generator.period_max"] = number_field(gen, &G::period_max);
        t["generator.ar_coef"] = number_field(gen, &G::ar_coef);
        t["generator.ar_std"] = number_field(gen, &G::ar_std);
        t["generator.noise_fraction"] = number_field(gen, &G::noise_fraction);
        t["generator.magnitude_min"] = number_field(gen, &G::magnitude_min);
        t["generator.magnitude_max"] = number_field(gen, &G::magnitude_max);
        t["generator.length_min"] = i64_field(gen, &G::length_min);
        t["generator.length_median"] = i64_field(gen, &G::length_median);
        t["generator.length_max"] = i64_field(gen, &G::length_max);
        t["generator.channels_min"] = int_field(gen, &G::channels_min);
        t["generator.channels_max"] = int_field(gen, &G::channels_max);
        t["generator.test_start_fraction"] = number_field(gen, &G::test_start_fraction);
        t["generator.seed"] = u64_field(gen, &G::seed);
        t["generator.counts"] = {[](RunConfig& c, const json& v, const std::string& p) {
                                     if (!v.is_object()) bad_key(p, "expected an object of per-kind counts");
                                     for (const auto& [k, n] : v.items()) {
                                         const std::string path = p + "." + k;
                                         const auto kind = parse_enum(json(k), path, parse_anomaly_kind);
                                         c.generator.count(kind) = as_int(n, path);
                                     }
                                 },
                                 [](const RunConfig& c) {
                                     json o = json::object();
                                     for (auto k : kAllAnomalyKinds)
                                         o[std::string(to_string(k))] = c.generator.count(k);
                                     return o;
                                 }};

        t["split.train_fraction"] = number_field(&RunConfig::split, &SplitConfig::train_fraction);
        t["split.val_fraction"] = number_field(&RunConfig::split, &SplitConfig::val_fraction);

        t["score.mode"] = {[](RunConfig& c, const json& v, const std::string& p) {
                               c.score.mode = parse_enum(v, p, parse_score_mode);
                           },
                           [](const RunConfig& c) { return json(std::string(to_string(c.score.mode))); }};
        t["score.align"] = {[](RunConfig& c, const json& v, const std::string& p) {
                                c.score.align = parse_enum(v, p, parse_alignment);
                            },
                            [](const RunConfig& c) { return json(std::string(to_string(c.score.align))); }};
        return t;
    }();
    return table;
}

bool is_section(std::string_view name) {
    return name == "model" || name == "train" || name == "generator" || name == "split" || name == "score";
}

void apply_object(RunConfig& cfg, const json& j, const std::string& prefix) {
    if (!j.is_object()) bad_key(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (const auto& [key, value] : j.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        apply_override(cfg, path, value);
    }
}

json nan_to_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }
double null_to_nan(const json& v, const std::string& path) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : as_number(v, path);
}

}  // namespace

void apply_override(RunConfig& cfg, std::string_view key_path, const json& value) {
    const std::string path(key_path);
    if (is_section(path)) {
        apply_object(cfg, value, path);
        return;
    }
    const auto& table = field_table();
    const auto it = table.find(path);
    if (it == table.end()) bad_key(path, "unknown key");
    it->second.set(cfg, value, path);
}

void RunConfig::validate() const {
    model.validate();
    train_config().validate();
    generator.validate();
    require(split.train_fraction > 0.0 && split.train_fraction < 1.0, ErrorCode::config,
            "config key 'split.train_fraction': must be in (0,1)");
    require(split.val_fraction > 0.0 && split.val_fraction < 1.0, ErrorCode::config,
            "config key 'split.val_fraction': must be in (0,1)");
}

json to_json(const RunConfig& cfg) {
    json j = json::object();
    for (const auto& [path, field] : field_table()) {
        const auto dot = path.find('.');
        if (dot == std::string::npos) j[path] = field.get(cfg);
        else j[path.substr(0, dot)][path.substr(dot + 1)] = field.get(cfg);
    }
    return j;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    apply_object(cfg, j, "");
    cfg.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (path.empty()) return RunConfig{};
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::parse, "config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

json to_json(const Calibration& c) {
    return json{{"median_rec", nan_to_null(c.median_rec)}, {"iqr_rec", nan_to_null(c.iqr_rec)},
                {"median_q", nan_to_null(c.median_q)},     {"iqr_q", nan_to_null(c.iqr_q)},
                {"median_q_mse", nan_to_null(c.median_q_mse)}, {"iqr_q_mse", nan_to_null(c.iqr_q_mse)},
                {"median_kl", nan_to_null(c.median_kl)},   {"iqr_kl", nan_to_null(c.iqr_kl)},
                {"eps_rz", c.eps_rz}};
}

Calibration calibration_from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::checkpoint, "calibration must be an object");
    Calibration c;
    const std::pair<const char*, double Calibration::*> fields[] = {
        {"median_rec", &Calibration::median_rec},     {"iqr_rec", &Calibration::iqr_rec},
        {"median_q", &Calibration::median_q},         {"iqr_q", &Calibration::iqr_q},
        {"median_q_mse", &Calibration::median_q_mse}, {"iqr_q_mse", &Calibration::iqr_q_mse},
        {"median_kl", &Calibration::median_kl},       {"iqr_kl", &Calibration::iqr_kl},
        {"eps_rz", &Calibration::eps_rz}};
    for (const auto& [name, member] : fields) {
        if (!j.contains(name)) fail(ErrorCode::checkpoint, std::string("calibration is missing '") + name + "'");
        c.*member = null_to_nan(j.at(name), std::string("calibration.") + name);
    }
    return c;
}

}  // namespace axonad
