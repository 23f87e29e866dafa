#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "dool/config.hpp"
#include "dool/io.hpp"

using namespace dool;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

fs::path scratch_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "dool_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

CliResult run_cli(const std::string& args, const fs::path& scratch) {
    const fs::path so = scratch / "_stdout.txt";
    const fs::path se = scratch / "_stderr.txt";
    const std::string cmd = std::string(DOOL_CLI_PATH) + " " + args + " > " + so.string() +
                            " 2> " + se.string();
    const int rc = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = read_text(so);
    r.err = read_text(se);
    return r;
}

/// Heat experiment small enough that every subcommand finishes in seconds.
ExperimentConfig tiny_heat(const fs::path& out_dir) {
    ExperimentConfig c = make_preset("heat");
    c.seed = 1;
    c.model.basis.grid_nx = 16;
    c.depth = 2;
    c.width = 6;
    c.latent_p = 4;
    c.n_samples = 3;
    c.epochs = 30;
    c.lr = 1e-3;
    c.stepping.dt = 1e-3;
    c.stepping.horizon = 1.0;
    c.output.dir = out_dir.string();
    return c;
}

} // namespace

TEST_CASE("presets-list names every shipped preset") {
    const fs::path dir = scratch_dir("presets");
    CliResult r = run_cli("presets-list", dir);
    CHECK(r.code == 0);
    for (const std::string& name : preset_names())
        CHECK(r.out.find(name) != std::string::npos);
}

TEST_CASE("train writes reproducible artifacts and rejects bad configs") {
    const fs::path dir = scratch_dir("train");
    const fs::path run1 = dir / "run1";
    ExperimentConfig config = tiny_heat(run1);
    const fs::path cfg_path = dir / "tiny.json";
    save_config(cfg_path.string(), config);

    CliResult r = run_cli("train --config " + cfg_path.string(), dir);
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    CHECK(fs::exists(run1 / "checkpoint.json"));
    CHECK(fs::exists(run1 / "train_report.json"));
    CHECK(fs::exists(run1 / "loss.csv"));
    CHECK(fs::exists(run1 / "meta.json"));

    Checkpoint ck = load_checkpoint((run1 / "checkpoint.json").string());
    CHECK(ck.net.branches.size() == 1);
    CHECK(config_to_json(ck.config) == config_to_json(config));
    // epochs 0 and 29 are the logged entries at log_every = 100
    CHECK(read_text(run1 / "loss.csv") ==
          "epoch,loss\n0," + format_double(nlohmann::json::parse(
                                               read_text(run1 / "train_report.json"))
                                               .at("loss_history")[0]
                                               .get<double>()) +
              "\n29," + format_double(nlohmann::json::parse(read_text(run1 / "train_report.json"))
                                          .at("final_loss")
                                          .get<double>()) +
              "\n");

    SUBCASE("same seed reproduces loss.csv byte for byte") {
        const std::string first = read_text(run1 / "loss.csv");
        CliResult r2 = run_cli("train --config " + cfg_path.string() + " --out " +
                                   (dir / "run2").string(),
                               dir);
        REQUIRE(r2.code == 0);
        CHECK(read_text(dir / "run2" / "loss.csv") == first);
    }
    SUBCASE("existing artifacts need --force, and --force reproduces them") {
        const std::string first = read_text(run1 / "loss.csv");
        CliResult blocked = run_cli("train --config " + cfg_path.string(), dir);
        CHECK(blocked.code == 2);
        CHECK(blocked.err.find("--force") != std::string::npos);
        CliResult forced = run_cli("train --config " + cfg_path.string() + " --force", dir);
        REQUIRE(forced.code == 0);
        CHECK(read_text(run1 / "loss.csv") == first);
    }
    SUBCASE("validation failures exit with code 2") {
        CliResult bad = run_cli("train --config " + cfg_path.string() + " --epochs 0 --out " +
                                    (dir / "r0").string(),
                                dir);
        CHECK(bad.code == 2);
        CHECK(bad.err.find("epoch") != std::string::npos);

        CliResult none = run_cli("train", dir);
        CHECK(none.code == 2);

        std::string text = read_text(cfg_path);
        text.insert(text.find('{') + 1, "\n  \"surprise\": 1,");
        const fs::path bad_path = dir / "unknown_key.json";
        write_text(bad_path, text);
        CliResult unknown = run_cli("train --config " + bad_path.string() + " --out " +
                                        (dir / "r1").string(),
                                    dir);
        CHECK(unknown.code == 2);
        CHECK(unknown.err.find("unknown key") != std::string::npos);
    }
    SUBCASE("numerical blow-up exits with code 3") {
        ExperimentConfig diverging = tiny_heat(dir / "r3");
        diverging.activation = Activation::sin;
        diverging.lr = 1e200;
        diverging.epochs = 3;
        const fs::path path = dir / "diverging.json";
        save_config(path.string(), diverging);
        CliResult r3 = run_cli("train --config " + path.string(), dir);
        CHECK(r3.code == 3);
        CHECK(r3.err.find("numerical error") != std::string::npos);
    }
}

TEST_CASE("solve steps a checkpoint through the requested horizon") {
    const fs::path dir = scratch_dir("solve");
    ExperimentConfig config = tiny_heat(dir / "train");
    const fs::path cfg_path = dir / "tiny.json";
    save_config(cfg_path.string(), config);
    REQUIRE(run_cli("train --config " + cfg_path.string(), dir).code == 0);
    const std::string ck = (dir / "train" / "checkpoint.json").string();

    SUBCASE("a one-second horizon at dt 1e-3 takes 1000 steps") {
        CliResult r = run_cli("solve --config " + cfg_path.string() + " --checkpoint " + ck +
                                  " --ic exact --out " + (dir / "sol").string(),
                              dir);
        CAPTURE(r.err);
        REQUIRE(r.code == 0);
        nlohmann::json meta = nlohmann::json::parse(read_text(dir / "sol" / "meta.json"));
        CHECK(meta.at("run").at("steps") == 1000);
        CHECK(meta.at("run").at("recorded_times") == 1001);

        FieldsTable table = read_fields_csv((dir / "sol" / "fields.csv").string());
        CHECK(table.times.size() == 1001);
        CHECK(table.x.size() == 16);
        CHECK(table.flux.front().size() == 1);

        // energy diagnostics land at every step
        const std::string energy = read_text(dir / "sol" / "energy.csv");
        CHECK(std::count(energy.begin(), energy.end(), '\n') == 1 + 1001);
    }
    SUBCASE("initial-condition spellings") {
        CHECK(run_cli("solve --config " + cfg_path.string() + " --checkpoint " + ck +
                          " --ic sample:0 --horizon 0.01 --out " + (dir / "s1").string(),
                      dir)
                  .code == 0);
        CHECK(run_cli("solve --config " + cfg_path.string() + " --checkpoint " + ck +
                          " --ic 2.0,0,0.3,-0.1 --horizon 0.01 --out " + (dir / "s2").string(),
                      dir)
                  .code == 0);
        CliResult bad = run_cli("solve --config " + cfg_path.string() + " --checkpoint " + ck +
                                    " --ic wobble --horizon 0.01 --out " + (dir / "s3").string(),
                                dir);
        CHECK(bad.code == 2);
        CliResult short_list =
            run_cli("solve --config " + cfg_path.string() + " --checkpoint " + ck +
                        " --ic 2.0,0 --horizon 0.01 --out " + (dir / "s4").string(),
                    dir);
        CHECK(short_list.code == 2);
        CHECK(short_list.err.find("coefficients") != std::string::npos);
    }
    SUBCASE("model mismatch and misuse are configuration errors") {
        CliResult mismatch = run_cli("solve --preset ac --checkpoint " + ck + " --out " +
                                         (dir / "m1").string(),
                                     dir);
        CHECK(mismatch.code == 2);
        CHECK(mismatch.err.find("does not match") != std::string::npos);
        CliResult gamma = run_cli("solve --config " + cfg_path.string() + " --checkpoint " + ck +
                                      " --gamma 0.05 --horizon 0.01 --out " +
                                      (dir / "m2").string(),
                                  dir);
        CHECK(gamma.code == 2);
        CHECK(gamma.err.find("two-branch") != std::string::npos);
    }
}

TEST_CASE("evaluate scores trajectories against references") {
    const fs::path dir = scratch_dir("evaluate");
    ExperimentConfig config = tiny_heat(dir / "train");
    const fs::path cfg_path = dir / "tiny.json";
    save_config(cfg_path.string(), config);
    REQUIRE(run_cli("train --config " + cfg_path.string(), dir).code == 0);
    REQUIRE(run_cli("solve --config " + cfg_path.string() + " --checkpoint " +
                        (dir / "train" / "checkpoint.json").string() +
                        " --ic exact --horizon 0.1 --out " + (dir / "sol").string(),
                    dir)
                .code == 0);
    const std::string traj = (dir / "sol" / "fields.csv").string();

    SUBCASE("identical inputs give exactly zero") {
        CliResult r = run_cli("evaluate --config " + cfg_path.string() + " --trajectory " + traj +
                                  " --reference " + traj + " --out " + (dir / "e0").string(),
                              dir);
        REQUIRE(r.code == 0);
        nlohmann::json m = nlohmann::json::parse(read_text(dir / "e0" / "metrics.json"));
        CHECK(m.at("rel_l2_u").get<double>() == 0.0);
        CHECK(m.at("rel_l2_j").get<double>() == 0.0);
        CHECK(m.at("per_time").size() == 101);
    }
    SUBCASE("scaled reference gives the exact ratio") {
        write_text(dir / "a.csv", "t,x,u\n0,1,2\n0,2,4\n0.5,1,6\n0.5,2,8\n");
        write_text(dir / "b.csv", "t,x,u\n0,1,4\n0,2,8\n0.5,1,12\n0.5,2,16\n");
        CliResult r = run_cli("evaluate --config " + cfg_path.string() + " --trajectory " +
                                  (dir / "a.csv").string() + " --reference " +
                                  (dir / "b.csv").string() + " --out " + (dir / "e1").string(),
                              dir);
        REQUIRE(r.code == 0);
        nlohmann::json m = nlohmann::json::parse(read_text(dir / "e1" / "metrics.json"));
        CHECK(m.at("rel_l2_u").get<double>() == 0.5);
    }
    SUBCASE("closed-form reference tracks the trained accuracy") {
        CliResult r = run_cli("evaluate --config " + cfg_path.string() + " --trajectory " + traj +
                                  " --exact heat --out " + (dir / "e2").string(),
                              dir);
        REQUIRE(r.code == 0);
        nlohmann::json m = nlohmann::json::parse(read_text(dir / "e2" / "metrics.json"));
        CHECK(m.at("rel_l2_u").get<double>() < 0.1);
        CHECK_FALSE(m.contains("rel_l2_j")); // the closed form carries no flux
    }
    SUBCASE("mismatches and misuse are rejected") {
        write_text(dir / "g.csv", "t,x,u\n0,1,2\n0,3,4\n");
        write_text(dir / "h.csv", "t,x,u\n0,1,2\n0,2,4\n");
        CHECK(run_cli("evaluate --config " + cfg_path.string() + " --trajectory " +
                          (dir / "g.csv").string() + " --reference " + (dir / "h.csv").string() +
                          " --out " + (dir / "e3").string(),
                      dir)
                  .code == 2);
        write_text(dir / "i.csv", "t,x,u\n0,1,2\n0,2,4\n0.25,1,2\n0.25,2,4\n");
        CHECK(run_cli("evaluate --config " + cfg_path.string() + " --trajectory " +
                          (dir / "h.csv").string() + " --reference " + (dir / "i.csv").string() +
                          " --out " + (dir / "e4").string(),
                      dir)
                  .code == 2);
        CHECK(run_cli("evaluate --config " + cfg_path.string() + " --trajectory " + traj +
                          " --out " + (dir / "e5").string(),
                      dir)
                  .code == 2);
        CHECK(run_cli("evaluate --config " + cfg_path.string() + " --trajectory " + traj +
                          " --reference " + traj + " --exact heat --out " + (dir / "e6").string(),
                      dir)
                  .code == 2);
    }
}

TEST_CASE("invert recovers a planted parameter from observation files") {
    const fs::path dir = scratch_dir("invert");
    ExperimentConfig config = make_preset("inversion");
    config.seed = 3;
    config.model.basis.grid_nx = 16;
    config.model.gamma1 = 0.05;
    config.inversion.dt = 1e-3;
    config.output.dir = (dir / "out").string();
    const fs::path cfg_path = dir / "inv.json";
    save_config(cfg_path.string(), config);

    // two-branch forward net (training quality is irrelevant to recovery)
    OperatorNet net;
    net.latent_p = 4;
    net.components = 1;
    net.branches.push_back(
        net_init(mlp_shapes(feature_dim(config.model.basis), 2, 8, 4, Activation::tanh), 21));
    net.branches.push_back(net_init(mlp_shapes(1, 2, 8, 4, Activation::tanh), 22));
    net.trunk = net_init(mlp_shapes(1, 2, 8, 4, Activation::tanh), 23);
    const fs::path ck_path = dir / "two_branch.json";
    save_checkpoint(ck_path.string(), config, net);

    // observations generated by the same forward map at gamma1 = 0.05
    const double gamma_true = 0.05;
    ModelSpec forward = config.model;
    forward.gamma1 = gamma_true;
    CoeffVector c0;
    c0.c.assign(reduced_modes(forward.basis).size(), Cplx(0.0, 0.0));
    c0.c[1] = Cplx(0.15, -0.05);
    c0.c[2] = Cplx(0.02, 0.01);
    Trajectory traj = evolve(forward, synthesize(forward.basis, c0),
                             net_flux_map(forward, net, {Eigen::VectorXd::Constant(1, gamma_true)}),
                             config.inversion.dt, 0.004, 1);
    std::vector<double> obs_times = {traj.times[0], traj.times[2], traj.times[4]};
    std::vector<Arr> obs_values = {traj.states[0].values, traj.states[2].values,
                                   traj.states[4].values};
    const fs::path obs_path = dir / "obs.csv";
    write_observations_csv(obs_path.string(), forward.basis, obs_times, obs_values);

    SUBCASE("noise-free observations pin gamma1 within tol") {
        CliResult r = run_cli("invert --config " + cfg_path.string() + " --checkpoint " +
                                  ck_path.string() + " --observations " + obs_path.string(),
                              dir);
        CAPTURE(r.err);
        REQUIRE(r.code == 0);
        nlohmann::json report =
            nlohmann::json::parse(read_text(dir / "out" / "inversion_report.json"));
        CHECK(std::abs(report.at("recovered_gamma").get<double>() - gamma_true) <=
              config.inversion.tol + 1e-6);
        CHECK(report.at("evaluations") == 17); // ceil(log(0.1/1e-4)/log(1/rho)) + 2
        CHECK(report.at("curve").size() == 17);
    }
    SUBCASE("observations missing the initial-time slice are rejected") {
        const fs::path late = dir / "late.csv";
        write_observations_csv(late.string(), forward.basis, {obs_times[1], obs_times[2]},
                               {obs_values[1], obs_values[2]});
        CliResult r = run_cli("invert --config " + cfg_path.string() + " --checkpoint " +
                                  ck_path.string() + " --observations " + late.string() +
                                  " --out " + (dir / "o2").string(),
                              dir);
        CHECK(r.code == 2);
        CHECK(r.err.find("initial-time") != std::string::npos);
    }
    SUBCASE("malformed observation files report the line") {
        std::string text = read_text(obs_path);
        const std::size_t third_line = text.find('\n', text.find('\n', text.find('\n') + 1) + 1);
        text.insert(third_line, ",0.5");
        const fs::path bad = dir / "bad.csv";
        write_text(bad, text);
        CliResult r = run_cli("invert --config " + cfg_path.string() + " --checkpoint " +
                                  ck_path.string() + " --observations " + bad.string() +
                                  " --out " + (dir / "o3").string(),
                              dir);
        CHECK(r.code == 2);
        CHECK(r.err.find(":3:") != std::string::npos);
    }
    SUBCASE("a reversed search interval is a validation error") {
        ExperimentConfig reversed = config;
        std::swap(reversed.inversion.gamma_min, reversed.inversion.gamma_max);
        const fs::path rev = dir / "rev.json";
        save_config(rev.string(), reversed);
        CliResult r = run_cli("invert --config " + rev.string() + " --checkpoint " +
                                  ck_path.string() + " --observations " + obs_path.string() +
                                  " --out " + (dir / "o4").string(),
                              dir);
        CHECK(r.code == 2);
        CHECK(r.err.find("gamma_min") != std::string::npos);
    }
    SUBCASE("single-branch checkpoints cannot drive an inversion") {
        OperatorNet single = net;
        single.branches.pop_back();
        const fs::path sck = dir / "single.json";
        save_checkpoint(sck.string(), config, single);
        CliResult r = run_cli("invert --config " + cfg_path.string() + " --checkpoint " +
                                  sck.string() + " --observations " + obs_path.string() +
                                  " --out " + (dir / "o5").string(),
                              dir);
        CHECK(r.code == 2);
    }
}

TEST_CASE("compare writes one row per held-out input, deterministically") {
    const fs::path dir = scratch_dir("compare");
    ExperimentConfig config = tiny_heat(dir / "c1");
    config.epochs = 40;
    config.compare.n_test = 2;
    config.compare.train_horizon = 0.2;
    config.compare.full_horizon = 0.4;
    config.compare.eval_dt = 0.1;
    config.compare.label_nt = 3;
    const fs::path cfg_path = dir / "cmp.json";
    save_config(cfg_path.string(), config);

    CliResult r = run_cli("compare --config " + cfg_path.string(), dir);
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    const std::string table = read_text(dir / "c1" / "comparison.csv");
    CHECK(table.rfind("sample,dool_train,dool_full,deeponet_train,deeponet_full\n", 0) == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 2);
    CHECK(fs::exists(dir / "c1" / "loss.csv"));
    CHECK(fs::exists(dir / "c1" / "baseline_loss.csv"));

    CliResult r2 = run_cli("compare --config " + cfg_path.string() + " --out " +
                               (dir / "c2").string(),
                           dir);
    REQUIRE(r2.code == 0);
    CHECK(read_text(dir / "c2" / "comparison.csv") == table);
}

TEST_CASE("dlam subcommand trains the damped-wave field") {
    const fs::path dir = scratch_dir("dlam");
    ExperimentConfig config = make_preset("dlam");
    config.seed = 1;
    config.dlam.width = 6;
    config.dlam.depth = 1;
    config.dlam.grid_nx = 8;
    config.dlam.grid_nt = 8;
    config.dlam.epochs = 5;
    config.output.dir = (dir / "out").string();
    const fs::path cfg_path = dir / "dlam.json";
    save_config(cfg_path.string(), config);

    CliResult r = run_cli("dlam --config " + cfg_path.string(), dir);
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    CHECK(read_text(dir / "out" / "field.csv").rfind("t,x,u\n", 0) == 0);
    CHECK(read_text(dir / "out" / "energy.csv").rfind("t,energy\n", 0) == 0);
    CHECK(fs::exists(dir / "out" / "loss.csv"));
    nlohmann::json m = nlohmann::json::parse(read_text(dir / "out" / "metrics.json"));
    CHECK(m.at("constraint_t0").get<double>() == 0.0); // hard constraint, untrained or not
    CHECK(m.at("constraint_tT").get<double>() <= 1e-12);
    CHECK(m.contains("rel_l2_u"));

    SUBCASE("sin(T) = 0 horizons are rejected") {
        ExperimentConfig bad = config;
        bad.dlam.horizon = 3.141592653589793;
        const fs::path bad_path = dir / "bad.json";
        save_config(bad_path.string(), bad);
        CliResult rb = run_cli("dlam --config " + bad_path.string() + " --out " +
                                   (dir / "out2").string(),
                               dir);
        CHECK(rb.code == 2);
    }
}
