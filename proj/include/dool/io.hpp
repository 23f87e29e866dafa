#pragma once

#include <string>
#include <vector>

#include "dool/config.hpp"
#include "dool/inverse.hpp"
#include "dool/oracles.hpp"
#include "dool/stepper.hpp"
#include "dool/trainer.hpp"

namespace dool {

/// Shortest decimal form that parses back to the same double, so re-running a
/// deterministic experiment reproduces every artifact byte for byte.
std::string format_double(double v);

// ---- CSV artifacts ---------------------------------------------------------------
// All writers emit a header row; all readers throw ConfigError with
// "<path>:<line>:" prefixes on malformed input.

/// One row per recorded time and grid node: t, x [, y], u, then the flux
/// (j for scalar fluxes, jx [, jy] per axis for conserved vector fluxes).
void write_fields_csv(const std::string& path, const Trajectory& traj);

/// t, energy, mass at the cadence the trajectory recorded diagnostics.
void write_energy_csv(const std::string& path, const Trajectory& traj);

/// epoch, loss for a logged training curve.
void write_loss_csv(const std::string& path, const std::vector<long>& epochs,
                    const std::vector<double>& losses);

/// Parsed fields.csv: shared grid coordinates and one slice per time.
struct FieldsTable {
    int dim = 1;
    std::vector<double> times;
    Arr x;                               // per grid node
    Arr y;                               // per grid node (dim == 2)
    std::vector<Arr> u;                  // per time
    std::vector<std::vector<Arr>> flux;  // per time, one array per component
};
FieldsTable read_fields_csv(const std::string& path);

/// sample_id, x [, y], t, u rows of a labeled dataset.
void write_labels_csv(const std::string& path, const LabelSet& labels);
LabelSet read_labels_csv(const std::string& path);

/// Observation slices t, x, u on the grid of `basis`, one block per time.
void write_observations_csv(const std::string& path, const BasisSpec& basis,
                            const std::vector<double>& times, const std::vector<Arr>& values);

/// Parse and validate observation slices: every block must sample the full
/// grid of `basis` in row order, times must strictly increase.
ObservationSet read_observations_csv(const std::string& path, const BasisSpec& basis);

// ---- JSON artifacts --------------------------------------------------------------

/// Every artifact directory gets one: config echo, seed, code version, and
/// caller-supplied run facts (step counts, warnings, ...).
void write_meta_json(const std::string& path, const ExperimentConfig& config,
                     const std::string& command, const nlohmann::json& extra);

/// Loss curve summary without the weights (those live in the checkpoint).
nlohmann::json train_report_to_json(const TrainReport& report);
void write_train_report_json(const std::string& path, const TrainReport& report);

/// Trained operator weights plus the config that produced them.
struct Checkpoint {
    ExperimentConfig config;
    OperatorNet net;
};
void save_checkpoint(const std::string& path, const ExperimentConfig& config,
                     const OperatorNet& net);
Checkpoint load_checkpoint(const std::string& path);

void write_inversion_report_json(const std::string& path, const InversionReport& report,
                                 const ExperimentConfig& config);

} // namespace dool
