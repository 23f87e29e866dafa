#include "dool/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dool/common.hpp"

namespace dool {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    return in;
}

[[noreturn]] void parse_fail(const std::string& path, long line, const std::string& what) {
    throw ConfigError(path + ":" + std::to_string(line) + ": " + what);
}

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

double parse_double(const std::string& field, const std::string& path, long line) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        parse_fail(path, line, "expected a number, got \"" + field + "\"");
    return v;
}

long parse_long(const std::string& field, const std::string& path, long line) {
    const char* first = field.data();
    const char* last = field.data() + field.size();
    long v = 0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        parse_fail(path, line, "expected an integer, got \"" + field + "\"");
    return v;
}

/// Wrap a stream so every getline keeps the 1-based line counter honest.
struct LineReader {
    std::ifstream in;
    std::string path;
    long line = 0;

    bool next(std::string& out) {
        while (std::getline(in, out)) {
            ++line;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty()) return true;
        }
        return false;
    }
};

json model_echo(const ExperimentConfig& config) {
    json full = config_to_json(config);
    return json{{"model", full.at("model")}, {"basis", full.at("basis")}};
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_fields_csv(const std::string& path, const Trajectory& traj) {
    if (traj.states.empty()) throw ConfigError("write_fields_csv: empty trajectory");
    if (traj.fluxes.size() != traj.states.size() || traj.times.size() != traj.states.size())
        throw ConfigError("write_fields_csv: misaligned trajectory records");
    const BasisSpec& basis = traj.states.front().basis;
    const bool two_d = basis.dim == 2;
    const std::size_t n_flux = traj.fluxes.front().size();

    std::ofstream out = open_out(path);
    out << "t,x" << (two_d ? ",y" : "") << ",u";
    if (n_flux == 1) {
        out << ",j";
    } else {
        for (std::size_t a = 0; a < n_flux; ++a) out << (a == 0 ? ",jx" : ",jy");
    }
    out << "\n";

    const Arr xs = grid_points_x(basis);
    const Arr ys = two_d ? grid_points_y(basis) : Arr();
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
        const std::string t = format_double(traj.times[i]);
        if (traj.fluxes[i].size() != n_flux)
            throw ConfigError("write_fields_csv: inconsistent flux component count");
        const Arr& u = traj.states[i].values;
        for (long node = 0; node < u.size(); ++node) {
            const long ix = two_d ? node % basis.grid_nx : node;
            out << t << ',' << format_double(xs[ix]);
            if (two_d) out << ',' << format_double(ys[node / basis.grid_nx]);
            out << ',' << format_double(u[node]);
            for (std::size_t a = 0; a < n_flux; ++a)
                out << ',' << format_double(traj.fluxes[i][a].values[node]);
            out << "\n";
        }
    }
}

void write_energy_csv(const std::string& path, const Trajectory& traj) {
    if (traj.energies.size() != traj.masses.size())
        throw ConfigError("write_energy_csv: misaligned diagnostics");
    std::ofstream out = open_out(path);
    out << "t,energy,mass\n";
    // evolve() logs diagnostics every step; the reference solver logs them at
    // the recorded-state cadence.
    const bool per_state = traj.energies.size() == traj.times.size();
    for (std::size_t n = 0; n < traj.energies.size(); ++n) {
        const double t = per_state ? traj.times[n] : static_cast<double>(n) * traj.dt;
        out << format_double(t) << ',' << format_double(traj.energies[n]) << ','
            << format_double(traj.masses[n]) << "\n";
    }
}

void write_loss_csv(const std::string& path, const std::vector<long>& epochs,
                    const std::vector<double>& losses) {
    if (epochs.size() != losses.size())
        throw ConfigError("write_loss_csv: epochs and losses must align");
    std::ofstream out = open_out(path);
    out << "epoch,loss\n";
    for (std::size_t i = 0; i < epochs.size(); ++i)
        out << epochs[i] << ',' << format_double(losses[i]) << "\n";
}

FieldsTable read_fields_csv(const std::string& path) {
    LineReader reader{open_in(path), path};
    std::string line;
    if (!reader.next(line)) parse_fail(path, 1, "missing header");

    FieldsTable table;
    std::size_t n_flux = 0;
    if (line == "t,x,u" || line == "t,x,u,j") {
        table.dim = 1;
        n_flux = line.size() == 5 ? 0 : 1;
    } else if (line == "t,x,y,u" || line == "t,x,y,u,jx,jy") {
        table.dim = 2;
        n_flux = line.size() == 7 ? 0 : 2;
    } else {
        parse_fail(path, reader.line, "unrecognized fields header \"" + line + "\"");
    }
    const std::size_t want = 2 + table.dim + n_flux;

    std::vector<double> xs, ys;
    std::vector<double> u_slice;
    std::vector<std::vector<double>> flux_slice(n_flux);
    long nodes = -1; // unknown until the first slice closes
    double current_t = 0.0;
    bool in_slice = false;

    auto close_slice = [&](long line_no) {
        if (nodes < 0) {
            nodes = static_cast<long>(u_slice.size());
            table.x = Eigen::Map<const Arr>(xs.data(), nodes);
            if (table.dim == 2) table.y = Eigen::Map<const Arr>(ys.data(), nodes);
        } else if (static_cast<long>(u_slice.size()) != nodes) {
            parse_fail(path, line_no,
                       "slice at t = " + format_double(current_t) + " has " +
                           std::to_string(u_slice.size()) + " nodes, expected " +
                           std::to_string(nodes));
        }
        table.times.push_back(current_t);
        table.u.push_back(Eigen::Map<const Arr>(u_slice.data(), nodes));
        std::vector<Arr> comps;
        for (std::size_t a = 0; a < n_flux; ++a)
            comps.push_back(Eigen::Map<const Arr>(flux_slice[a].data(), nodes));
        table.flux.push_back(std::move(comps));
        u_slice.clear();
        for (auto& f : flux_slice) f.clear();
    };

    while (reader.next(line)) {
        std::vector<std::string> f = split_commas(line);
        if (f.size() != want)
            parse_fail(path, reader.line, "expected " + std::to_string(want) + " fields, got " +
                                              std::to_string(f.size()));
        const double t = parse_double(f[0], path, reader.line);
        if (!in_slice || t != current_t) {
            if (in_slice) close_slice(reader.line);
            if (!table.times.empty() && t <= table.times.back())
                parse_fail(path, reader.line, "slice times must strictly increase");
            current_t = t;
            in_slice = true;
        }
        const long k = static_cast<long>(u_slice.size());
        const double x = parse_double(f[1], path, reader.line);
        if (nodes < 0 && table.times.empty()) {
            xs.push_back(x);
        } else if (k >= nodes || x != table.x[k]) {
            parse_fail(path, reader.line, "grid coordinates differ between slices");
        }
        std::size_t col = 2;
        if (table.dim == 2) {
            const double yv = parse_double(f[col++], path, reader.line);
            if (nodes < 0 && table.times.empty()) {
                ys.push_back(yv);
            } else if (yv != table.y[k]) {
                parse_fail(path, reader.line, "grid coordinates differ between slices");
            }
        }
        u_slice.push_back(parse_double(f[col++], path, reader.line));
        for (std::size_t a = 0; a < n_flux; ++a)
            flux_slice[a].push_back(parse_double(f[col++], path, reader.line));
    }
    if (!in_slice) parse_fail(path, reader.line + 1, "no field rows");
    close_slice(reader.line);
    return table;
}

void write_labels_csv(const std::string& path, const LabelSet& labels) {
    std::ofstream out = open_out(path);
    out << (labels.dim == 2 ? "sample_id,x,y,t,u" : "sample_id,x,t,u") << "\n";
    for (const LabelRow& row : labels.rows) {
        out << row.sample_id << ',' << format_double(row.x);
        if (labels.dim == 2) out << ',' << format_double(row.y);
        out << ',' << format_double(row.t) << ',' << format_double(row.u) << "\n";
    }
}

LabelSet read_labels_csv(const std::string& path) {
    LineReader reader{open_in(path), path};
    std::string line;
    if (!reader.next(line)) parse_fail(path, 1, "missing header");
    LabelSet labels;
    if (line == "sample_id,x,t,u") {
        labels.dim = 1;
    } else if (line == "sample_id,x,y,t,u") {
        labels.dim = 2;
    } else {
        parse_fail(path, reader.line, "expected header sample_id,x[,y],t,u, got \"" + line + "\"");
    }
    const std::size_t want = labels.dim == 2 ? 5 : 4;
    while (reader.next(line)) {
        std::vector<std::string> f = split_commas(line);
        if (f.size() != want)
            parse_fail(path, reader.line,
                       "expected " + std::to_string(want) + " fields, got " +
                           std::to_string(f.size()));
        LabelRow row;
        row.sample_id = static_cast<int>(parse_long(f[0], path, reader.line));
        row.x = parse_double(f[1], path, reader.line);
        std::size_t k = 2;
        if (labels.dim == 2) row.y = parse_double(f[k++], path, reader.line);
        row.t = parse_double(f[k++], path, reader.line);
        row.u = parse_double(f[k], path, reader.line);
        labels.rows.push_back(row);
    }
    return labels;
}

void write_observations_csv(const std::string& path, const BasisSpec& basis,
                            const std::vector<double>& times, const std::vector<Arr>& values) {
    if (times.size() != values.size())
        throw ConfigError("write_observations_csv: times and values must align");
    std::ofstream out = open_out(path);
    out << "t,x,u\n";
    const Arr xs = grid_points_x(basis);
    for (std::size_t n = 0; n < times.size(); ++n) {
        if (values[n].size() != xs.size())
            throw ConfigError("write_observations_csv: value size does not match the grid");
        for (long k = 0; k < xs.size(); ++k)
            out << format_double(times[n]) << ',' << format_double(xs[k]) << ','
                << format_double(values[n][k]) << "\n";
    }
}

ObservationSet read_observations_csv(const std::string& path, const BasisSpec& basis) {
    LineReader reader{open_in(path), path};
    std::string line;
    if (!reader.next(line)) parse_fail(path, 1, "missing header");
    if (line != "t,x,u") parse_fail(path, reader.line, "expected header t,x,u, got \"" + line + "\"");

    const Arr xs = grid_points_x(basis);
    const long nx = xs.size();
    const double x_tol = 1e-9 * std::max(1.0, basis.half_width);

    ObservationSet obs;
    obs.basis = basis;
    Arr current(nx);
    long filled = 0;
    double current_t = 0.0;
    while (reader.next(line)) {
        std::vector<std::string> f = split_commas(line);
        if (f.size() != 3)
            parse_fail(path, reader.line, "expected 3 fields, got " + std::to_string(f.size()));
        const double t = parse_double(f[0], path, reader.line);
        const double x = parse_double(f[1], path, reader.line);
        const double u = parse_double(f[2], path, reader.line);
        if (filled == 0) {
            current_t = t;
            if (!obs.times.empty() && t <= obs.times.back())
                parse_fail(path, reader.line, "observation times must strictly increase");
        } else if (t != current_t) {
            parse_fail(path, reader.line,
                       "time changed mid-slice: the grid has " + std::to_string(nx) +
                           " nodes per time");
        }
        if (std::abs(x - xs[filled]) > x_tol)
            parse_fail(path, reader.line,
                       "x = " + f[1] + " does not match grid node " + std::to_string(filled) +
                           " (" + format_double(xs[filled]) + ")");
        current[filled++] = u;
        if (filled == nx) {
            obs.times.push_back(current_t);
            obs.values.push_back(current);
            filled = 0;
        }
    }
    if (filled != 0)
        parse_fail(path, reader.line, "file ends mid-slice (" + std::to_string(filled) + " of " +
                                          std::to_string(nx) + " nodes)");
    if (obs.times.empty()) parse_fail(path, reader.line + 1, "no observation rows");
    return obs;
}

void write_meta_json(const std::string& path, const ExperimentConfig& config,
                     const std::string& command, const nlohmann::json& extra) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["code_version"] = kCodeVersion;
    j["command"] = command;
    j["seed"] = config.seed;
    j["config"] = config_to_json(config);
    j["run"] = extra;
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

nlohmann::json train_report_to_json(const TrainReport& report) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["code_version"] = kCodeVersion;
    j["logged_epochs"] = report.logged_epochs;
    j["loss_history"] = report.loss_history;
    j["floor_loss"] = report.floor_loss;
    j["final_loss"] = report.loss_history.empty() ? 0.0 : report.loss_history.back();
    j["wall_seconds"] = report.wall_seconds;
    return j;
}

void write_train_report_json(const std::string& path, const TrainReport& report) {
    std::ofstream out = open_out(path);
    out << train_report_to_json(report).dump(2) << "\n";
}

void save_checkpoint(const std::string& path, const ExperimentConfig& config,
                     const OperatorNet& net) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["code_version"] = kCodeVersion;
    j["config"] = config_to_json(config);
    j["net"] = operator_net_to_json(net);
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in = open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint " + path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("config") || !j.contains("net"))
        throw ConfigError("checkpoint " + path + ": missing config or net");
    Checkpoint ck;
    ck.config = config_from_json(j.at("config"));
    try {
        ck.net = operator_net_from_json(j.at("net"));
    } catch (const json::exception& e) {
        throw ConfigError("checkpoint " + path + ": " + e.what());
    }
    ck.net.validate();
    return ck;
}

void write_inversion_report_json(const std::string& path, const InversionReport& report,
                                 const ExperimentConfig& config) {
    json curve = json::array();
    for (std::size_t i = 0; i < report.curve_gammas.size(); ++i)
        curve.push_back(json{{"gamma", report.curve_gammas[i]},
                             {"misfit", report.curve_values[i]}});
    json j;
    j["schema_version"] = kSchemaVersion;
    j["code_version"] = kCodeVersion;
    j["recovered_gamma"] = report.gamma;
    j["misfit_value"] = report.misfit_value;
    j["evaluations"] = report.evaluations;
    j["curve"] = curve;
    j["model"] = model_echo(config);
    std::ofstream out = open_out(path);
    out << j.dump(2) << "\n";
}

} // namespace dool
