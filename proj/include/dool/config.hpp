#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dool/dlam.hpp"
#include "dool/models.hpp"
#include "dool/trainer.hpp"
#include "json.hpp"

namespace dool {

/// Version string stamped into every artifact's meta.json.
extern const char* kCodeVersion;

/// Schema version accepted by config_from_json; bumped on breaking changes.
constexpr int kSchemaVersion = 1;

/// Explicit-evolution settings (subcommand `solve` and evaluation runs).
struct SteppingConfig {
    double dt = 1e-3;
    double horizon = 1.0;     // T
    int record_every = 1;

    void validate() const;
};

/// Parameter-identification settings (subcommand `invert`).
struct InversionSection {
    double gamma_min = 0.0;
    double gamma_max = 0.1;
    double tol = 1e-4;
    double dt = 1e-3;
    double t0 = 0.0;          // required initial-observation time

    void validate() const;
};

/// Least-action settings (subcommand `dlam`).  `boundary` names a shipped
/// initial/terminal data pair; `damped_cosine` is f = cos x, g = 0, whose
/// evolution has the closed form (1 - t/T) e^{-t} cos x when T = 1, lambda = 1.
struct DlamSection {
    std::string boundary = "damped_cosine";
    double half_width = 3.141592653589793;
    double horizon = 1.0;
    double lambda = 1.0;
    int depth = 3;
    int width = 40;
    Activation activation = Activation::tanh;
    int grid_nx = 96;
    int grid_nt = 96;
    int epochs = 1200;
    double lr = 5e-4;
    int log_every = 100;

    void validate() const;
    DlamConfig to_dlam_config(std::uint64_t seed) const;
};

/// Matched-budget comparison settings (subcommand `compare`): the variational
/// net against the supervised baseline trained on labels within
/// [0, train_horizon], both evaluated on slices every eval_dt up to
/// full_horizon.
struct CompareSection {
    int n_test = 5;              // held-out initial conditions
    double train_horizon = 0.2;  // baseline label window
    double full_horizon = 1.0;   // extrapolation endpoint
    double eval_dt = 0.05;       // comparison slice spacing
    int label_nt = 5;            // baseline label times per sample (incl. endpoints)

    void validate() const;
};

/// Artifact destination; the CLI's --out flag overrides `dir`.
struct OutputSection {
    std::string dir = "out";

    void validate() const;
};

/// Declarative description of one experiment.  Sections mirror the library
/// structs; `config_from_json` rejects unknown keys at every level so a typo
/// cannot silently fall back to a default.
struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    std::uint64_t seed = 0;
    ModelSpec model;             // carries the basis section
    SamplingSpec sampling;
    int depth = 3;               // net section
    int width = 50;
    int latent_p = 120;
    Activation activation = Activation::tanh;
    int n_samples = 50;          // training section
    int n_param_draws = 0;
    double param_min = 0.01;
    double param_max = 0.1;
    int epochs = 20000;
    double lr = 5e-4;
    int log_every = 100;
    SteppingConfig stepping;
    OutputSection output;
    InversionSection inversion;
    DlamSection dlam;
    CompareSection compare;

    void validate() const;
    TrainConfig to_train_config() const;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);

ExperimentConfig load_config(const std::string& path);
void save_config(const std::string& path, const ExperimentConfig& config);

/// Shipped experiment presets, one per reproduced study.  `paper_scale`
/// restores the published budgets (double width, ten-fold epochs, full grids);
/// the defaults are desk scale.
std::vector<std::string> preset_names();
ExperimentConfig make_preset(const std::string& name, bool paper_scale = false);

/// Initial/terminal data for a named dlam boundary pair.
void dlam_boundary_functions(const std::string& name, DlamConfig& out);

} // namespace dool
