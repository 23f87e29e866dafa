#include "dool/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "dool/common.hpp"

namespace dool {

const char* kCodeVersion = "dool 1.0.0";

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

void reject_unknown(const json& j, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(path + ": unknown key \"" + it.key() + "\"");
    }
}

double get_double(const json& j, const std::string& path, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
    return v.get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
    return v.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                      std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!(v.is_number_integer() && (v.is_number_unsigned() || v.get<long long>() >= 0)))
        throw ConfigError(path + "." + key + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
    return v.get<std::string>();
}

json model_to_json(const ModelSpec& m) {
    return json{{"name", model_name_string(m.name)},
                {"beta", m.beta},
                {"gamma1", m.gamma1},
                {"gamma2", m.gamma2},
                {"shift", m.shift},
                {"potential_a", m.potential_a},
                {"eps_u", m.eps_u}};
}

ModelSpec model_from_json(const json& j, const BasisSpec& basis) {
    expect_object(j, "model");
    reject_unknown(j, "model",
                   {"name", "beta", "gamma1", "gamma2", "shift", "potential_a", "eps_u"});
    ModelSpec m;
    m.name = model_name_from_string(get_string(j, "model", "name", "heat"));
    m.beta = get_double(j, "model", "beta", m.beta);
    m.gamma1 = get_double(j, "model", "gamma1", m.gamma1);
    m.gamma2 = get_double(j, "model", "gamma2", m.gamma2);
    m.shift = get_double(j, "model", "shift", m.shift);
    m.potential_a = get_double(j, "model", "potential_a", m.potential_a);
    m.eps_u = get_double(j, "model", "eps_u", m.eps_u);
    m.basis = basis;
    return m;
}

json basis_to_json(const BasisSpec& b) {
    return json{{"family", basis_family_name(b.family)},
                {"dim", b.dim},
                {"half_width", b.half_width},
                {"half_width_y", b.half_width_y},
                {"truncation", b.truncation},
                {"grid_nx", b.grid_nx},
                {"grid_ny", b.grid_ny},
                {"work_modes", b.work_modes}};
}

BasisSpec basis_from_json(const json& j) {
    expect_object(j, "basis");
    reject_unknown(j, "basis",
                   {"family", "dim", "half_width", "half_width_y", "truncation", "grid_nx",
                    "grid_ny", "work_modes"});
    BasisSpec b;
    b.family = basis_family_from_name(get_string(j, "basis", "family", "fourier"));
    b.dim = get_int(j, "basis", "dim", b.dim);
    b.half_width = get_double(j, "basis", "half_width", b.half_width);
    b.half_width_y = get_double(j, "basis", "half_width_y", b.half_width_y);
    b.truncation = get_int(j, "basis", "truncation", b.truncation);
    b.grid_nx = get_int(j, "basis", "grid_nx", b.grid_nx);
    b.grid_ny = get_int(j, "basis", "grid_ny", b.grid_ny);
    b.work_modes = get_int(j, "basis", "work_modes", b.work_modes);
    return b;
}

json sampling_to_json(const SamplingSpec& s) {
    return json{{"base_width", s.base_width},
                {"center0", s.center0},
                {"positivity_floor", s.positivity_floor},
                {"max_retries", s.max_retries}};
}

SamplingSpec sampling_from_json(const json& j) {
    expect_object(j, "sampling");
    reject_unknown(j, "sampling", {"base_width", "center0", "positivity_floor", "max_retries"});
    SamplingSpec s;
    s.base_width = get_double(j, "sampling", "base_width", s.base_width);
    s.center0 = get_double(j, "sampling", "center0", s.center0);
    s.positivity_floor = get_double(j, "sampling", "positivity_floor", s.positivity_floor);
    s.max_retries = get_int(j, "sampling", "max_retries", s.max_retries);
    return s;
}

} // namespace

void SteppingConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("stepping.dt must be positive");
    if (!(horizon > 0.0) || !std::isfinite(horizon))
        throw ConfigError("stepping.horizon must be positive");
    if (record_every < 1) throw ConfigError("stepping.record_every must be >= 1");
}

void InversionSection::validate() const {
    if (!(gamma_min < gamma_max))
        throw ConfigError("inversion.gamma_min must be below inversion.gamma_max");
    if (!(tol > 0.0)) throw ConfigError("inversion.tol must be positive");
    if (!(dt > 0.0)) throw ConfigError("inversion.dt must be positive");
    if (!std::isfinite(t0) || t0 < 0.0) throw ConfigError("inversion.t0 must be >= 0");
}

void DlamSection::validate() const {
    to_dlam_config(0).validate();
}

DlamConfig DlamSection::to_dlam_config(std::uint64_t seed) const {
    DlamConfig cfg;
    cfg.half_width = half_width;
    cfg.horizon = horizon;
    cfg.lambda = lambda;
    cfg.depth = depth;
    cfg.width = width;
    cfg.activation = activation;
    cfg.grid_nx = grid_nx;
    cfg.grid_nt = grid_nt;
    cfg.epochs = epochs;
    cfg.lr = lr;
    cfg.seed = seed;
    cfg.log_every = log_every;
    dlam_boundary_functions(boundary, cfg);
    return cfg;
}

void CompareSection::validate() const {
    if (n_test < 1) throw ConfigError("compare.n_test must be >= 1");
    if (!(train_horizon > 0.0)) throw ConfigError("compare.train_horizon must be positive");
    if (!(full_horizon >= train_horizon))
        throw ConfigError("compare.full_horizon must be >= compare.train_horizon");
    if (!(eval_dt > 0.0)) throw ConfigError("compare.eval_dt must be positive");
    if (label_nt < 2) throw ConfigError("compare.label_nt must be >= 2");
}

void OutputSection::validate() const {
    if (dir.empty()) throw ConfigError("output.dir must not be empty");
}

void ExperimentConfig::validate() const {
    if (schema_version != kSchemaVersion)
        throw ConfigError("schema_version must be " + std::to_string(kSchemaVersion));
    to_train_config().validate();
    stepping.validate();
    output.validate();
    inversion.validate();
    dlam.validate();
    compare.validate();
}

TrainConfig ExperimentConfig::to_train_config() const {
    TrainConfig t;
    t.model = model;
    t.depth = depth;
    t.width = width;
    t.latent_p = latent_p;
    t.activation = activation;
    t.sampling = sampling;
    t.n_samples = n_samples;
    t.n_param_draws = n_param_draws;
    t.param_min = param_min;
    t.param_max = param_max;
    t.epochs = epochs;
    t.lr = lr;
    t.seed = seed;
    t.log_every = log_every;
    return t;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    j["model"] = model_to_json(c.model);
    j["basis"] = basis_to_json(c.model.basis);
    j["sampling"] = sampling_to_json(c.sampling);
    j["net"] = json{{"depth", c.depth},
                    {"width", c.width},
                    {"latent_p", c.latent_p},
                    {"activation", activation_name(c.activation)}};
    j["training"] = json{{"n_samples", c.n_samples}, {"n_param_draws", c.n_param_draws},
                         {"param_min", c.param_min}, {"param_max", c.param_max},
                         {"epochs", c.epochs},       {"lr", c.lr},
                         {"log_every", c.log_every}};
    j["stepping"] = json{{"dt", c.stepping.dt},
                         {"horizon", c.stepping.horizon},
                         {"record_every", c.stepping.record_every}};
    j["output"] = json{{"dir", c.output.dir}};
    j["inversion"] = json{{"gamma_min", c.inversion.gamma_min},
                          {"gamma_max", c.inversion.gamma_max},
                          {"tol", c.inversion.tol},
                          {"dt", c.inversion.dt},
                          {"t0", c.inversion.t0}};
    j["dlam"] = json{{"boundary", c.dlam.boundary},
                     {"half_width", c.dlam.half_width},
                     {"horizon", c.dlam.horizon},
                     {"lambda", c.dlam.lambda},
                     {"depth", c.dlam.depth},
                     {"width", c.dlam.width},
                     {"activation", activation_name(c.dlam.activation)},
                     {"grid_nx", c.dlam.grid_nx},
                     {"grid_nt", c.dlam.grid_nt},
                     {"epochs", c.dlam.epochs},
                     {"lr", c.dlam.lr},
                     {"log_every", c.dlam.log_every}};
    j["compare"] = json{{"n_test", c.compare.n_test},
                        {"train_horizon", c.compare.train_horizon},
                        {"full_horizon", c.compare.full_horizon},
                        {"eval_dt", c.compare.eval_dt},
                        {"label_nt", c.compare.label_nt}};
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    expect_object(j, "config");
    reject_unknown(j, "config",
                   {"schema_version", "seed", "model", "basis", "sampling", "net", "training",
                    "stepping", "output", "inversion", "dlam", "compare"});
    if (!j.contains("schema_version")) throw ConfigError("config: missing schema_version");

    ExperimentConfig c;
    c.schema_version = get_int(j, "config", "schema_version", -1);
    if (c.schema_version != kSchemaVersion)
        throw ConfigError("config.schema_version: expected " + std::to_string(kSchemaVersion) +
                          ", got " + std::to_string(c.schema_version));
    c.seed = get_u64(j, "config", "seed", c.seed);

    BasisSpec basis;
    if (j.contains("basis")) basis = basis_from_json(j.at("basis"));
    if (j.contains("model")) {
        c.model = model_from_json(j.at("model"), basis);
    } else {
        c.model.basis = basis;
    }
    if (j.contains("sampling")) c.sampling = sampling_from_json(j.at("sampling"));

    if (j.contains("net")) {
        const json& n = j.at("net");
        expect_object(n, "net");
        reject_unknown(n, "net", {"depth", "width", "latent_p", "activation"});
        c.depth = get_int(n, "net", "depth", c.depth);
        c.width = get_int(n, "net", "width", c.width);
        c.latent_p = get_int(n, "net", "latent_p", c.latent_p);
        c.activation = activation_from_name(get_string(n, "net", "activation", "tanh"));
    }
    if (j.contains("training")) {
        const json& t = j.at("training");
        expect_object(t, "training");
        reject_unknown(t, "training",
                       {"n_samples", "n_param_draws", "param_min", "param_max", "epochs", "lr",
                        "log_every"});
        c.n_samples = get_int(t, "training", "n_samples", c.n_samples);
        c.n_param_draws = get_int(t, "training", "n_param_draws", c.n_param_draws);
        c.param_min = get_double(t, "training", "param_min", c.param_min);
        c.param_max = get_double(t, "training", "param_max", c.param_max);
        c.epochs = get_int(t, "training", "epochs", c.epochs);
        c.lr = get_double(t, "training", "lr", c.lr);
        c.log_every = get_int(t, "training", "log_every", c.log_every);
    }
    if (j.contains("stepping")) {
        const json& s = j.at("stepping");
        expect_object(s, "stepping");
        reject_unknown(s, "stepping", {"dt", "horizon", "record_every"});
        c.stepping.dt = get_double(s, "stepping", "dt", c.stepping.dt);
        c.stepping.horizon = get_double(s, "stepping", "horizon", c.stepping.horizon);
        c.stepping.record_every = get_int(s, "stepping", "record_every", c.stepping.record_every);
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        expect_object(o, "output");
        reject_unknown(o, "output", {"dir"});
        c.output.dir = get_string(o, "output", "dir", c.output.dir);
    }
    if (j.contains("inversion")) {
        const json& v = j.at("inversion");
        expect_object(v, "inversion");
        reject_unknown(v, "inversion", {"gamma_min", "gamma_max", "tol", "dt", "t0"});
        c.inversion.gamma_min = get_double(v, "inversion", "gamma_min", c.inversion.gamma_min);
        c.inversion.gamma_max = get_double(v, "inversion", "gamma_max", c.inversion.gamma_max);
        c.inversion.tol = get_double(v, "inversion", "tol", c.inversion.tol);
        c.inversion.dt = get_double(v, "inversion", "dt", c.inversion.dt);
        c.inversion.t0 = get_double(v, "inversion", "t0", c.inversion.t0);
    }
    if (j.contains("dlam")) {
        const json& d = j.at("dlam");
        expect_object(d, "dlam");
        reject_unknown(d, "dlam",
                       {"boundary", "half_width", "horizon", "lambda", "depth", "width",
                        "activation", "grid_nx", "grid_nt", "epochs", "lr", "log_every"});
        c.dlam.boundary = get_string(d, "dlam", "boundary", c.dlam.boundary);
        c.dlam.half_width = get_double(d, "dlam", "half_width", c.dlam.half_width);
        c.dlam.horizon = get_double(d, "dlam", "horizon", c.dlam.horizon);
        c.dlam.lambda = get_double(d, "dlam", "lambda", c.dlam.lambda);
        c.dlam.depth = get_int(d, "dlam", "depth", c.dlam.depth);
        c.dlam.width = get_int(d, "dlam", "width", c.dlam.width);
        c.dlam.activation = activation_from_name(get_string(d, "dlam", "activation", "tanh"));
        c.dlam.grid_nx = get_int(d, "dlam", "grid_nx", c.dlam.grid_nx);
        c.dlam.grid_nt = get_int(d, "dlam", "grid_nt", c.dlam.grid_nt);
        c.dlam.epochs = get_int(d, "dlam", "epochs", c.dlam.epochs);
        c.dlam.lr = get_double(d, "dlam", "lr", c.dlam.lr);
        c.dlam.log_every = get_int(d, "dlam", "log_every", c.dlam.log_every);
    }
    if (j.contains("compare")) {
        const json& m = j.at("compare");
        expect_object(m, "compare");
        reject_unknown(m, "compare",
                       {"n_test", "train_horizon", "full_horizon", "eval_dt", "label_nt"});
        c.compare.n_test = get_int(m, "compare", "n_test", c.compare.n_test);
        c.compare.train_horizon = get_double(m, "compare", "train_horizon", c.compare.train_horizon);
        c.compare.full_horizon = get_double(m, "compare", "full_horizon", c.compare.full_horizon);
        c.compare.eval_dt = get_double(m, "compare", "eval_dt", c.compare.eval_dt);
        c.compare.label_nt = get_int(m, "compare", "label_nt", c.compare.label_nt);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

void save_config(const std::string& path, const ExperimentConfig& config) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << config_to_json(config).dump(2) << "\n";
}

void dlam_boundary_functions(const std::string& name, DlamConfig& cfg) {
    if (name == "damped_cosine") {
        cfg.f = [](double x) { return std::cos(x); };
        cfg.df = [](double x) { return -std::sin(x); };
        cfg.g = [](double) { return 0.0; };
        cfg.dg = [](double) { return 0.0; };
        return;
    }
    throw ConfigError("unknown dlam boundary \"" + name + "\" (available: damped_cosine)");
}

namespace {

constexpr double kPi = 3.141592653589793;

ExperimentConfig base_fourier_preset(ModelName model, int truncation, double half_width,
                                     int grid_nx) {
    ExperimentConfig c;
    c.model.name = model;
    c.model.basis.family = BasisFamily::fourier;
    c.model.basis.dim = 1;
    c.model.basis.half_width = half_width;
    c.model.basis.truncation = truncation;
    c.model.basis.grid_nx = grid_nx;
    return c;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"heat", "heat_source", "fp",          "ch1d",      "ch1d_gamma001", "ch2d",
            "ac",   "ac_gamma001", "multi_input", "inversion", "dlam"};
}

ExperimentConfig make_preset(const std::string& name, bool paper_scale) {
    ExperimentConfig c;
    if (name == "heat" || name == "heat_source") {
        c = base_fourier_preset(name == "heat" ? ModelName::heat : ModelName::heat_source, 1, kPi,
                                64);
        c.sampling.center0 = 2.0;
        c.sampling.base_width = 0.5;
        c.sampling.positivity_floor = 0.5;
        c.stepping.dt = 1e-3;
        c.stepping.horizon = 1.0;
    } else if (name == "fp") {
        c.model.name = ModelName::fokker_planck;
        c.model.beta = 2.0;
        c.model.shift = 0.5;
        c.model.basis.family = BasisFamily::hermite;
        c.model.basis.half_width = 8.0;
        c.model.basis.truncation = 5;
        c.model.basis.grid_nx = 128;
        // mode-0 coefficient of the unit Gaussian: pi^{1/4} / sqrt(2 pi)
        c.sampling.center0 = std::pow(kPi, 0.25) / std::sqrt(2.0 * kPi);
        c.sampling.base_width = 0.05;
        c.sampling.positivity_floor = 0.0;
        c.stepping.dt = 1e-3;
        c.stepping.horizon = 0.5;
    } else if (name == "ch1d" || name == "ch1d_gamma001" || name == "multi_input" ||
               name == "inversion") {
        c = base_fourier_preset(ModelName::cahn_hilliard_1d, 2, 1.0, 32);
        c.model.gamma1 = name == "ch1d_gamma001" ? 0.01 : 0.1;
        c.model.gamma2 = 0.1;
        c.sampling.base_width = 0.3;
        c.stepping.dt = 1e-3;
        c.stepping.horizon = 1.0;
        if (name == "multi_input" || name == "inversion") {
            c.model.gamma1 = 0.05; // template value; overridden per draw / probe
            c.n_param_draws = 8;
            c.param_min = 0.01;
            c.param_max = 0.1;
        }
    } else if (name == "ch2d") {
        c = base_fourier_preset(ModelName::cahn_hilliard_2d, 2, 1.0, 64);
        c.model.basis.dim = 2;
        c.model.basis.half_width_y = 1.0;
        c.model.basis.grid_ny = 64;
        c.model.gamma1 = 0.1;
        c.model.gamma2 = 0.1;
        c.sampling.base_width = 0.3;
        c.n_samples = 20;
        c.stepping.dt = 1e-3;
        c.stepping.horizon = 0.5;
    } else if (name == "ac" || name == "ac_gamma001") {
        c = base_fourier_preset(ModelName::allen_cahn, 2, kPi, 64);
        c.model.gamma1 = name == "ac_gamma001" ? 0.01 : 0.1;
        c.model.gamma2 = 1.0;
        c.sampling.base_width = 0.3;
        c.stepping.dt = 1e-3;
        c.stepping.horizon = 2.0;
    } else if (name == "dlam") {
        // sections other than dlam keep their defaults; the heat model echo is inert
    } else {
        throw ConfigError("unknown preset \"" + name + "\"");
    }

    if (paper_scale) {
        c.width *= 2;
        c.epochs *= 10;
        if (name == "ch2d") {
            // published test resolution is 400^2; the radix-2 transform uses 512^2
            c.model.basis.grid_nx = 512;
            c.model.basis.grid_ny = 512;
        }
        if (name == "dlam") {
            c.dlam.depth = 4;
            c.dlam.width = 70;
            c.dlam.grid_nx = 128;
            c.dlam.grid_nt = 128;
            c.dlam.epochs *= 10;
        }
    }
    return c;
}

} // namespace dool
