#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dool/config.hpp"
#include "dool/io.hpp"

namespace fs = std::filesystem;
using namespace dool;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTestSampleStream = 0xE00; // held-out draws for `compare`

struct CommonArgs {
    std::string config_path;
    std::string preset;
    bool paper_scale = false;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    bool force = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_epochs = false) {
    auto* config = cmd->add_option("--config", args.config_path, "path to an experiment config");
    auto* preset = cmd->add_option("--preset", args.preset, "named preset experiment");
    config->excludes(preset);
    cmd->add_flag("--paper", args.paper_scale, "use published budgets instead of desk scale");
    cmd->add_option("--out", args.out_dir, "artifact directory (default: config output.dir)");
    cmd->add_option("--seed", args.seed, "override the config seed");
    if (with_epochs) cmd->add_option("--epochs", args.epochs, "override the training epochs");
    cmd->add_flag("--force", args.force, "overwrite an existing artifact directory");
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig config;
    if (!args.config_path.empty()) {
        if (args.paper_scale)
            throw ConfigError("--paper applies to --preset; edit the config file instead");
        config = load_config(args.config_path);
    } else if (!args.preset.empty()) {
        config = make_preset(args.preset, args.paper_scale);
    } else {
        throw ConfigError("pass --config FILE or --preset NAME");
    }
    if (args.seed) config.seed = *args.seed;
    if (args.epochs) {
        config.epochs = *args.epochs;
        config.dlam.epochs = *args.epochs;
    }
    if (!args.out_dir.empty()) config.output.dir = args.out_dir;
    config.validate();
    return config;
}

/// Artifact directories are write-once unless --force is given.
fs::path prepare_out_dir(const ExperimentConfig& config, bool force) {
    fs::path dir(config.output.dir);
    if (fs::exists(dir / "meta.json") && !force)
        throw ConfigError("output directory " + dir.string() +
                          " already holds artifacts (pass --force to overwrite)");
    fs::create_directories(dir);
    return dir;
}

json trajectory_run_facts(const Trajectory& traj, double dt, double horizon) {
    json j;
    j["dt"] = dt;
    j["horizon"] = horizon;
    j["steps"] = static_cast<long>(std::llround(horizon / dt));
    j["recorded_times"] = traj.times.size();
    j["warnings"] = traj.warnings;
    return j;
}

// ---- initial conditions -----------------------------------------------------------

/// `spec` is a named shape or a comma-separated coefficient list over the
/// reduced modes (interleaved re,im for fourier; real entries for hermite).
///   exact     the model's closed-form benchmark start
///   smooth    a fixed low-mode blend for the phase-field models
///   sample:K  the K-th draw of the configured sampling distribution
SpectralField initial_condition(const ExperimentConfig& config, const std::string& spec) {
    const BasisSpec& basis = config.model.basis;
    const std::vector<ModeIndex> modes = reduced_modes(basis);

    if (spec == "exact") {
        switch (config.model.name) {
        case ModelName::heat:
        case ModelName::heat_source: {
            ExactSolution sol = make_exact_solution(ExactName::heat);
            return exact_field(sol, basis, 0.0);
        }
        case ModelName::fokker_planck: {
            ExactParams params;
            params.beta = config.model.beta;
            ExactSolution sol = make_exact_solution(ExactName::fokker_planck, params);
            return exact_field(sol, basis, 0.0);
        }
        default:
            throw ConfigError("--ic exact: no closed form for model " +
                              std::string(model_name_string(config.model.name)));
        }
    }
    if (spec == "smooth") {
        CoeffVector c;
        c.c.assign(modes.size(), Cplx(0.0, 0.0));
        for (std::size_t m = 0; m < modes.size(); ++m) {
            const int k = std::max(std::abs(modes[m].kx), std::abs(modes[m].ky));
            if (k == 1) c.c[m] = Cplx(0.15, 0.0);
            if (k == 2) c.c[m] = Cplx(0.0, modes[m].kx == 0 ? -0.05 : 0.05);
        }
        if (basis.family == BasisFamily::hermite)
            for (auto& z : c.c) z = Cplx(z.real() + std::abs(z.imag()), 0.0);
        c.c[0] = Cplx(config.sampling.center0, 0.0);
        return synthesize(basis, c);
    }
    if (spec.rfind("sample:", 0) == 0) {
        int index = 0;
        try {
            index = std::stoi(spec.substr(7));
        } catch (const std::exception&) {
            throw ConfigError("--ic sample:K needs an integer K, got \"" + spec + "\"");
        }
        if (index < 0) throw ConfigError("--ic sample:K needs K >= 0");
        std::vector<CoeffVector> draws =
            sample_coefficients(basis, config.sampling, index + 1,
                                substream_seed(config.seed, kTestSampleStream));
        return synthesize(basis, draws.back());
    }

    // comma-separated coefficient list
    CoeffVector c;
    c.c.assign(modes.size(), Cplx(0.0, 0.0));
    std::vector<double> entries;
    std::size_t start = 0;
    while (start <= spec.size()) {
        std::size_t pos = spec.find(',', start);
        const std::string field =
            spec.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        try {
            entries.push_back(std::stod(field));
        } catch (const std::exception&) {
            throw ConfigError("--ic: expected a named shape or numbers, got \"" + field + "\"");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    const bool fourier = basis.family == BasisFamily::fourier;
    const std::size_t want = fourier ? 2 * modes.size() : modes.size();
    if (entries.size() != want)
        throw ConfigError("--ic: expected " + std::to_string(want) +
                          " coefficients for this basis, got " + std::to_string(entries.size()));
    for (std::size_t m = 0; m < modes.size(); ++m)
        c.c[m] = fourier ? Cplx(entries[2 * m], entries[2 * m + 1]) : Cplx(entries[m], 0.0);
    return synthesize(basis, c);
}

// ---- model compatibility ----------------------------------------------------------

json geometry_echo(const ExperimentConfig& config, bool mask_gamma1) {
    json full = config_to_json(config);
    json j{{"model", full.at("model")}, {"basis", full.at("basis")}};
    if (mask_gamma1) j["model"].erase("gamma1");
    return j;
}

void require_matching_model(const ExperimentConfig& run, const Checkpoint& ck) {
    const bool two_branch = ck.net.branches.size() == 2;
    if (geometry_echo(run, two_branch) != geometry_echo(ck.config, two_branch))
        throw ConfigError("checkpoint model/basis does not match the requested experiment");
}

// ---- metrics ----------------------------------------------------------------------

double rel_l2(double num_sq, double den_sq) {
    return den_sq > 0.0 ? std::sqrt(num_sq / den_sq) : std::sqrt(num_sq);
}

json evaluate_tables(const FieldsTable& traj, const FieldsTable& ref) {
    if (traj.dim != ref.dim) throw ConfigError("evaluate: dimension mismatch");
    if (traj.x.size() != ref.x.size() || (traj.x != ref.x).any() ||
        (traj.dim == 2 && (traj.y != ref.y).any()))
        throw ConfigError("evaluate: trajectory and reference grids differ");
    if (traj.times != ref.times)
        throw ConfigError("evaluate: trajectory and reference record different times");

    const std::size_t n_flux =
        std::min(traj.flux.front().size(), ref.flux.front().size());
    double u_num = 0.0, u_den = 0.0, j_num = 0.0, j_den = 0.0;
    json per_time = json::array();
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        const double num = (traj.u[n] - ref.u[n]).square().sum();
        const double den = ref.u[n].square().sum();
        u_num += num;
        u_den += den;
        per_time.push_back(json{{"t", traj.times[n]}, {"rel_l2_u", rel_l2(num, den)}});
        for (std::size_t a = 0; a < n_flux; ++a) {
            j_num += (traj.flux[n][a] - ref.flux[n][a]).square().sum();
            j_den += ref.flux[n][a].square().sum();
        }
    }
    json metrics;
    metrics["schema_version"] = kSchemaVersion;
    metrics["code_version"] = kCodeVersion;
    metrics["rel_l2_u"] = rel_l2(u_num, u_den);
    if (n_flux > 0) metrics["rel_l2_j"] = rel_l2(j_num, j_den);
    metrics["per_time"] = per_time;
    return metrics;
}

FieldsTable exact_reference_table(const FieldsTable& traj, const std::string& name,
                                  const ExperimentConfig& config) {
    ExactParams params;
    params.beta = config.model.beta;
    ExactSolution sol = make_exact_solution(exact_name_from_string(name), params);
    FieldsTable ref = traj;
    ref.flux.assign(traj.times.size(), {});
    for (std::size_t n = 0; n < traj.times.size(); ++n) {
        Arr u(traj.x.size());
        for (long k = 0; k < traj.x.size(); ++k) u[k] = sol.eval(traj.x[k], traj.times[n]);
        ref.u[n] = u;
    }
    return ref;
}

// ---- subcommands ------------------------------------------------------------------

int cmd_train(const CommonArgs& args) {
    ExperimentConfig config = resolve_config(args);
    fs::path dir = prepare_out_dir(config, args.force);

    TrainReport report = train_dool(config.to_train_config());
    save_checkpoint((dir / "checkpoint.json").string(), config, report.net);
    write_train_report_json((dir / "train_report.json").string(), report);
    write_loss_csv((dir / "loss.csv").string(), report.logged_epochs, report.loss_history);
    json facts{{"final_loss", report.loss_history.back()},
               {"floor_loss", report.floor_loss},
               {"wall_seconds", report.wall_seconds}};
    write_meta_json((dir / "meta.json").string(), config, "train", facts);
    std::cout << "trained " << report.logged_epochs.back() + 1 << " epochs; final loss "
              << report.loss_history.back() << " (floor " << report.floor_loss << ")\n"
              << "artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_solve(const CommonArgs& args, const std::string& checkpoint_path, const std::string& ic,
              std::optional<double> dt_flag, std::optional<double> horizon_flag,
              std::optional<double> gamma_flag, int record_every) {
    ExperimentConfig config = resolve_config(args);
    Checkpoint ck = load_checkpoint(checkpoint_path);
    require_matching_model(config, ck);
    const double dt = dt_flag.value_or(config.stepping.dt);
    const double horizon = horizon_flag.value_or(config.stepping.horizon);
    if (!(dt > 0.0) || !(horizon > 0.0)) throw ConfigError("dt and horizon must be positive");

    ModelSpec model = config.model;
    std::vector<Eigen::VectorXd> extra;
    if (ck.net.branches.size() == 2) {
        const double gamma = gamma_flag.value_or(config.model.gamma1);
        model.gamma1 = gamma;
        extra.push_back(Eigen::VectorXd::Constant(1, gamma));
    } else if (gamma_flag) {
        throw ConfigError("--gamma needs a two-branch (parameter-aware) checkpoint");
    }

    SpectralField u0 = initial_condition(config, ic);
    fs::path dir = prepare_out_dir(config, args.force);
    Trajectory traj =
        evolve(model, u0, net_flux_map(model, ck.net, extra), dt, horizon,
               record_every > 0 ? record_every : config.stepping.record_every);
    write_fields_csv((dir / "fields.csv").string(), traj);
    write_energy_csv((dir / "energy.csv").string(), traj);
    write_meta_json((dir / "meta.json").string(), config, "solve",
                    trajectory_run_facts(traj, dt, horizon));
    std::cout << "solved to t = " << horizon << " in " << std::llround(horizon / dt)
              << " steps; artifacts in " << dir.string() << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& args, const std::string& trajectory_path,
                 const std::string& reference_path, const std::string& exact_name) {
    ExperimentConfig config = resolve_config(args);
    if (reference_path.empty() == exact_name.empty())
        throw ConfigError("pass exactly one of --reference FILE or --exact NAME");
    FieldsTable traj = read_fields_csv(trajectory_path);
    FieldsTable ref = reference_path.empty()
                          ? exact_reference_table(traj, exact_name, config)
                          : read_fields_csv(reference_path);
    json metrics = evaluate_tables(traj, ref);

    fs::path dir = prepare_out_dir(config, args.force);
    std::ofstream out(dir / "metrics.json");
    out << metrics.dump(2) << "\n";
    write_meta_json((dir / "meta.json").string(), config, "evaluate",
                    json{{"trajectory", trajectory_path},
                         {"reference", reference_path.empty() ? "exact:" + exact_name
                                                              : reference_path}});
    std::cout << "rel_l2_u " << metrics.at("rel_l2_u").get<double>();
    if (metrics.contains("rel_l2_j"))
        std::cout << "  rel_l2_j " << metrics.at("rel_l2_j").get<double>();
    std::cout << "\n";
    return 0;
}

int cmd_invert(const CommonArgs& args, const std::string& checkpoint_path,
               const std::string& observations_path) {
    ExperimentConfig config = resolve_config(args);
    Checkpoint ck = load_checkpoint(checkpoint_path);
    require_matching_model(config, ck);

    ObservationSet obs = read_observations_csv(observations_path, config.model.basis);
    if (std::abs(obs.times.front() - config.inversion.t0) > 1e-12)
        throw ConfigError("observations are missing the initial-time slice t0 = " +
                          format_double(config.inversion.t0) + " (first slice is at t = " +
                          format_double(obs.times.front()) + ")");

    InversionProblem problem;
    problem.observations = std::move(obs);
    problem.gamma_min = config.inversion.gamma_min;
    problem.gamma_max = config.inversion.gamma_max;
    problem.tol = config.inversion.tol;
    problem.dt = config.inversion.dt;
    problem.net = ck.net;
    problem.model = config.model;
    InversionReport report = invert(problem);

    fs::path dir = prepare_out_dir(config, args.force);
    write_inversion_report_json((dir / "inversion_report.json").string(), report, config);
    write_meta_json((dir / "meta.json").string(), config, "invert",
                    json{{"observations", observations_path},
                         {"evaluations", report.evaluations}});
    std::cout << "recovered gamma1 = " << report.gamma << " (misfit " << report.misfit_value
              << ", " << report.evaluations << " evaluations)\n";
    return 0;
}

int cmd_compare(const CommonArgs& args) {
    ExperimentConfig config = resolve_config(args);
    const CompareSection& cmp = config.compare;
    const BasisSpec& basis = config.model.basis;

    // shared evaluation clock
    const long n_eval = std::llround(cmp.full_horizon / cmp.eval_dt);
    if (std::abs(n_eval * cmp.eval_dt - cmp.full_horizon) > 1e-9)
        throw ConfigError("compare.eval_dt must divide compare.full_horizon");
    std::vector<double> eval_times;
    for (long n = 0; n <= n_eval; ++n) eval_times.push_back(n * cmp.eval_dt);
    const long steps_per_eval = std::llround(cmp.eval_dt / config.stepping.dt);
    if (std::abs(steps_per_eval * config.stepping.dt - cmp.eval_dt) > 1e-9 || steps_per_eval < 1)
        throw ConfigError("stepping.dt must divide compare.eval_dt");

    // matched training budgets on the same input-function set
    TrainConfig tc = config.to_train_config();
    TrainReport dool = train_dool(tc);
    std::vector<CoeffVector> inputs = training_samples(tc);
    std::vector<double> label_times;
    for (int n = 0; n < cmp.label_nt; ++n)
        label_times.push_back(cmp.train_horizon * n / (cmp.label_nt - 1));
    LabelSet labels = generate_labels(config.model, inputs, label_times, config.stepping.dt);
    TrainReport baseline = train_supervised(tc, inputs, labels);

    // held-out test inputs with per-time references
    std::vector<CoeffVector> test_inputs = sample_coefficients(
        basis, config.sampling, cmp.n_test, substream_seed(config.seed, kTestSampleStream));
    LabelSet refs = generate_labels(config.model, test_inputs, eval_times, config.stepping.dt);
    const long nodes = basis.grid_size();
    const long per_sample = static_cast<long>(eval_times.size()) * nodes;

    Eigen::MatrixXd trunk_xt(per_sample, basis.dim + 1);
    for (long r = 0; r < per_sample; ++r) {
        const LabelRow& row = refs.rows[r];
        trunk_xt(r, 0) = row.x;
        if (basis.dim == 2) trunk_xt(r, 1) = row.y;
        trunk_xt(r, basis.dim) = row.t;
    }

    fs::path dir = prepare_out_dir(config, args.force);
    std::ofstream out(dir / "comparison.csv");
    out << "sample,dool_train,dool_full,deeponet_train,deeponet_full\n";
    double worst_dool_full = 0.0, best_base_full = 1e300;
    for (int s = 0; s < cmp.n_test; ++s) {
        const LabelRow* ref_rows = refs.rows.data() + static_cast<long>(s) * per_sample;

        // variational net: explicit evolution sampled at the shared times
        Trajectory traj = evolve(config.model, synthesize(basis, test_inputs[s]),
                                 net_flux_map(config.model, dool.net), config.stepping.dt,
                                 cmp.full_horizon, static_cast<int>(steps_per_eval));
        double dn_train = 0, dd_train = 0, dn_full = 0, dd_full = 0;
        for (std::size_t n = 0; n < eval_times.size(); ++n) {
            for (long k = 0; k < nodes; ++k) {
                const double ref = ref_rows[n * nodes + k].u;
                const double diff = traj.states[n].values[k] - ref;
                dn_full += diff * diff;
                dd_full += ref * ref;
                if (eval_times[n] <= cmp.train_horizon + 1e-12) {
                    dn_train += diff * diff;
                    dd_train += ref * ref;
                }
            }
        }

        // supervised baseline: direct space-time prediction
        std::vector<Arr> pred =
            eval_flux(baseline.net, {coeff_features(basis, test_inputs[s])}, trunk_xt);
        double bn_train = 0, bd_train = 0, bn_full = 0, bd_full = 0;
        for (long r = 0; r < per_sample; ++r) {
            const double ref = ref_rows[r].u;
            const double diff = pred[0][r] - ref;
            bn_full += diff * diff;
            bd_full += ref * ref;
            if (ref_rows[r].t <= cmp.train_horizon + 1e-12) {
                bn_train += diff * diff;
                bd_train += ref * ref;
            }
        }

        const double dool_full = rel_l2(dn_full, dd_full);
        const double base_full = rel_l2(bn_full, bd_full);
        worst_dool_full = std::max(worst_dool_full, dool_full);
        best_base_full = std::min(best_base_full, base_full);
        out << s << ',' << format_double(rel_l2(dn_train, dd_train)) << ','
            << format_double(dool_full) << ',' << format_double(rel_l2(bn_train, bd_train)) << ','
            << format_double(base_full) << "\n";
    }
    out.close();

    write_loss_csv((dir / "loss.csv").string(), dool.logged_epochs, dool.loss_history);
    write_loss_csv((dir / "baseline_loss.csv").string(), baseline.logged_epochs,
                   baseline.loss_history);
    write_meta_json((dir / "meta.json").string(), config, "compare",
                    json{{"n_test", cmp.n_test},
                         {"train_horizon", cmp.train_horizon},
                         {"full_horizon", cmp.full_horizon},
                         {"worst_dool_full", worst_dool_full},
                         {"best_deeponet_full", best_base_full}});
    std::cout << "comparison over " << cmp.n_test << " held-out inputs written to "
              << (dir / "comparison.csv").string() << "\n"
              << "worst variational full-horizon error " << worst_dool_full
              << "; best supervised " << best_base_full << "\n";
    return 0;
}

int cmd_dlam(const CommonArgs& args) {
    ExperimentConfig config = resolve_config(args);
    DlamConfig dc = config.dlam.to_dlam_config(config.seed);
    DlamReport report = train_dlam(dc);

    // evaluation grid: trained field plus hard-constraint residuals
    const int nx = 64, nt = 32;
    double c0 = 0.0, cT = 0.0;
    fs::path dir = prepare_out_dir(config, args.force);
    {
        std::ofstream out(dir / "field.csv");
        out << "t,x,u\n";
        for (int n = 0; n <= nt; ++n) {
            const double t = dc.horizon * n / nt;
            for (int k = 1; k <= nx; ++k) {
                const double x = -dc.half_width + 2.0 * dc.half_width * k / nx;
                const double u = ndnn_eval(report.params, x, t);
                out << format_double(t) << ',' << format_double(x) << ',' << format_double(u)
                    << "\n";
                if (n == 0) c0 = std::max(c0, std::abs(u - dc.f(x)));
                if (n == nt) cT = std::max(cT, std::abs(u - dc.g(x)));
            }
        }
    }
    {
        std::ofstream out(dir / "energy.csv");
        out << "t,energy\n";
        for (int n = 0; n <= nt; ++n) {
            const double t = dc.horizon * n / nt;
            out << format_double(t) << ',' << format_double(ndnn_energy(report.params, t, 256))
                << "\n";
        }
    }
    write_loss_csv((dir / "loss.csv").string(), report.logged_epochs, report.loss_history);

    json metrics;
    metrics["schema_version"] = kSchemaVersion;
    metrics["code_version"] = kCodeVersion;
    metrics["final_action"] = report.loss_history.back();
    metrics["constraint_t0"] = c0;
    metrics["constraint_tT"] = cT;
    if (config.dlam.boundary == "damped_cosine" && dc.horizon == 1.0 && dc.lambda == 1.0) {
        double num = 0.0, den = 0.0;
        for (int n = 0; n <= nt; ++n) {
            const double t = dc.horizon * n / nt;
            for (int k = 1; k <= nx; ++k) {
                const double x = -dc.half_width + 2.0 * dc.half_width * k / nx;
                const double exact = (1.0 - t) * std::exp(-t) * std::cos(x);
                const double diff = ndnn_eval(report.params, x, t) - exact;
                num += diff * diff;
                den += exact * exact;
            }
        }
        metrics["rel_l2_u"] = rel_l2(num, den);
    }
    {
        std::ofstream out(dir / "metrics.json");
        out << metrics.dump(2) << "\n";
    }
    write_meta_json((dir / "meta.json").string(), config, "dlam",
                    json{{"epochs", dc.epochs}, {"wall_seconds", report.wall_seconds}});
    std::cout << "least-action field trained; constraint residuals " << c0 << " (t=0), " << cT
              << " (t=T)";
    if (metrics.contains("rel_l2_u"))
        std::cout << "; rel_l2 vs closed form " << metrics.at("rel_l2_u").get<double>();
    std::cout << "\n";
    return 0;
}

int cmd_presets_list() {
    for (const std::string& name : preset_names()) {
        ExperimentConfig c = make_preset(name);
        std::cout << name << "  model=" << model_name_string(c.model.name)
                  << " basis=" << basis_family_name(c.model.basis.family)
                  << " K=" << c.model.basis.truncation << " grid=" << c.model.basis.grid_nx;
        if (c.model.basis.dim == 2) std::cout << "x" << c.model.basis.grid_ny;
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"variational operator learning for dissipative dynamics"};
    app.require_subcommand(1);

    CommonArgs train_args, solve_args, eval_args, invert_args, compare_args, dlam_args;

    CLI::App* train = app.add_subcommand("train", "train the variational operator network");
    add_common(train, train_args, true);

    CLI::App* solve = app.add_subcommand("solve", "evolve an initial condition with a checkpoint");
    add_common(solve, solve_args);
    std::string solve_checkpoint, solve_ic = "smooth";
    std::optional<double> solve_dt, solve_horizon, solve_gamma;
    int solve_record_every = 0;
    solve->add_option("--checkpoint", solve_checkpoint, "trained checkpoint path")->required();
    solve->add_option("--ic", solve_ic, "initial condition: exact | smooth | sample:K | coeffs");
    solve->add_option("--dt", solve_dt, "step size (default: config stepping.dt)");
    solve->add_option("--horizon", solve_horizon, "final time (default: config stepping.horizon)");
    solve->add_option("--gamma", solve_gamma, "parameter input for two-branch checkpoints");
    solve->add_option("--record-every", solve_record_every, "state recording stride");

    CLI::App* evaluate = app.add_subcommand("evaluate", "error metrics of a stored trajectory");
    add_common(evaluate, eval_args);
    std::string eval_traj, eval_ref, eval_exact;
    evaluate->add_option("--trajectory", eval_traj, "fields.csv to score")->required();
    evaluate->add_option("--reference", eval_ref, "reference fields.csv");
    evaluate->add_option("--exact", eval_exact, "closed-form reference name");

    CLI::App* invert = app.add_subcommand("invert", "recover gamma1 from observations");
    add_common(invert, invert_args);
    std::string invert_checkpoint, invert_obs;
    invert->add_option("--checkpoint", invert_checkpoint, "two-branch checkpoint")->required();
    invert->add_option("--observations", invert_obs, "observation csv (t,x,u)")->required();

    CLI::App* compare = app.add_subcommand("compare", "variational net vs supervised baseline");
    add_common(compare, compare_args, true);

    CLI::App* dlam = app.add_subcommand("dlam", "least-action training for the damped wave");
    add_common(dlam, dlam_args, true);

    app.add_subcommand("presets-list", "list shipped experiment presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("train")) return cmd_train(train_args);
        if (app.got_subcommand("solve"))
            return cmd_solve(solve_args, solve_checkpoint, solve_ic, solve_dt, solve_horizon,
                             solve_gamma, solve_record_every);
        if (app.got_subcommand("evaluate"))
            return cmd_evaluate(eval_args, eval_traj, eval_ref, eval_exact);
        if (app.got_subcommand("invert"))
            return cmd_invert(invert_args, invert_checkpoint, invert_obs);
        if (app.got_subcommand("compare")) return cmd_compare(compare_args);
        if (app.got_subcommand("dlam")) return cmd_dlam(dlam_args);
        if (app.got_subcommand("presets-list")) return cmd_presets_list();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
