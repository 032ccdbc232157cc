#include "mmq/cli.hpp"

#include "mmq/ctmc.hpp"
#include "mmq/error.hpp"
#include "mmq/io.hpp"
#include "mmq/limits.hpp"
#include "mmq/replicate.hpp"
#include "mmq/simulate.hpp"
#include "mmq/verify.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <ostream>

namespace mmq {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

Vector rho0_of(const RunConfig& c, int queues) {
    return c.scaling.rho0.size() == 0 ? Vector::Zero(queues) : c.scaling.rho0;
}

fs::path out_dir(const RunConfig& c) { return fs::path(c.output.directory); }

int cmd_validate(const RunConfig& c, std::ostream& out, std::ostream&) {
    const NetworkSpec spec = c.spec();
    out << "L=" << spec.queues() << " d=" << spec.states() << " alpha=" << format_double(c.scaling.alpha)
        << " beta=" << format_double(beta_exponent(c.scaling.alpha)) << "\n";
    out << "config valid\n";
    return kExitSuccess;
}

int cmd_chain_summary(const RunConfig& c, std::ostream& out, std::ostream&) {
    const NetworkSpec spec = c.spec();
    const ChainSummary s = summarize(spec.gen);
    json doc;
    doc["pi"] = vector_json(s.pi);
    doc["deviation"] = matrix_json(s.deviation);
    doc["sigma"] = matrix_json(s.sigma);
    out << doc.dump(2) << "\n";
    if (c.output.wants("json")) write_json(out_dir(c) / "chain_summary.json", doc);
    return kExitSuccess;
}

int cmd_fluid(const RunConfig& c, std::ostream& out, std::ostream&) {
    const NetworkSpec spec = c.spec();
    const AveragedRates avg = averaged_rates(spec, summarize(spec.gen));
    const FluidSolution fluid = fluid_limit(avg, rho0_of(c, spec.queues()), c.run.horizon, c.run.grid_step);
    out << "rho(T) = " << vector_json(fluid.rho.back()).dump() << "\n";
    if (c.output.wants("csv")) write_fluid_csv(out_dir(c) / "fluid.csv", fluid, spec.queues());
    return kExitSuccess;
}

int cmd_ou_moments(const RunConfig& c, std::ostream& out, std::ostream&) {
    const NetworkSpec spec = c.spec();
    const int L = spec.queues();
    const ChainSummary summary = summarize(spec.gen);
    const AveragedRates avg = averaged_rates(spec, summary);
    const Vector rho0 = rho0_of(c, L);
    const FluidSolution fluid = fluid_limit(avg, rho0, c.run.horizon, c.run.grid_step);
    Matrix v0 = Matrix::Zero(L, L);
    if (c.scaling.init_rule == InitRule::Poisson && beta_exponent(c.scaling.alpha) == 0.5) v0 = rho0.asDiagonal();
    const OUMoments m = limit_moments(spec, summary, avg, fluid, c.scaling.alpha, Vector::Zero(L), v0,
                                      MomentOptions{c.psd_tolerance});
    out << "m(T) = " << vector_json(m.mean.back()).dump() << "\n";
    out << "V(T) = " << matrix_json(m.cov.back()).dump() << "\n";
    if (c.output.wants("csv")) write_moments_csv(out_dir(c) / "moments.csv", m, L);
    return kExitSuccess;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream&) {
    const NetworkSpec spec = c.spec();
    const ScaledSystem sys = build_scaled_system(spec, c.scaling.alpha, c.scaling.n, c.scaling.init_rule);
    const TimeGrid grid = TimeGrid::covering(c.run.horizon, c.run.grid_step);
    const Vector rho0 = rho0_of(c, spec.queues());
    SimulationOptions options;
    options.population_cap = c.run.population_cap;
    const fs::path dir = out_dir(c);
    const bool csv = c.output.wants("csv");
    const auto events = run_replications(c.run.reps, c.run.seed, c.run.worker_count, [&](std::size_t rep, Rng& rng) {
        const Population q0 = initial_condition(sys, rho0, rng);
        const TrajectoryBundle b = simulate(sys, grid, q0, rng, options);
        if (csv) {
            char name[48];
            std::snprintf(name, sizeof name, "trajectory_%05zu.csv", rep);
            write_trajectory_csv(dir / name, b);
        }
        return std::pair{b.total_events, b.chain_jumps};
    });
    json doc;
    doc["n"] = c.scaling.n;
    doc["alpha"] = c.scaling.alpha;
    doc["beta"] = sys.beta;
    doc["reps"] = c.run.reps;
    doc["seed"] = c.run.seed;
    json per_rep = json::array();
    for (const auto& [queue_events, jumps] : events) per_rep.push_back({{"queue_events", queue_events}, {"chain_jumps", jumps}});
    doc["replications"] = per_rep;
    out << "simulated " << c.run.reps << " replication(s) at n=" << c.scaling.n << "\n";
    if (c.output.wants("json")) write_json(dir / "simulate.json", doc);
    return kExitSuccess;
}

int emit_report(const VerificationReport& report, const RunConfig& c, std::ostream& out) {
    out << report.to_table();
    const fs::path dir = out_dir(c);
    if (c.output.wants("json")) write_json(dir / "report.json", report.to_json());
    if (c.output.keep_raw && c.output.wants("csv") && !report.raw_columns.empty())
        write_csv(dir / "raw.csv", report.raw_columns, report.raw_rows);
    return report.passed() ? kExitSuccess : kExitVerifyFail;
}

int cmd_reduce_model3(const RunConfig& c, std::ostream& out, std::ostream&) {
    if (!c.model3) throw Error(ErrorCode::MissingRequired, "model3");
    RunConfig reduced = c;
    reduced.network = reduce_model3(*c.model3);
    reduced.model3.reset();
    out << network_to_json(*reduced.network).dump(2) << "\n";
    if (c.output.wants("json")) write_json(out_dir(c) / "reduced_config.json", config_to_json(reduced));
    return kExitSuccess;
}

using Handler = std::function<int(const RunConfig&, std::ostream&, std::ostream&)>;

const std::map<std::string, Handler>& handlers() {
    static const std::map<std::string, Handler> table{
        {"validate", cmd_validate},
        {"chain-summary", cmd_chain_summary},
        {"fluid", cmd_fluid},
        {"ou-moments", cmd_ou_moments},
        {"simulate", cmd_simulate},
        {"verify-fluid",
         [](const RunConfig& c, std::ostream& out, std::ostream&) {
             return emit_report(verify_fluid(c.spec(), c.verify_settings()), c, out);
         }},
        {"verify-occupation",
         [](const RunConfig& c, std::ostream& out, std::ostream&) {
             return emit_report(verify_occupation(c.spec().gen, c.verify_settings()), c, out);
         }},
        {"verify-diffusion",
         [](const RunConfig& c, std::ostream& out, std::ostream&) {
             return emit_report(verify_diffusion(c.spec(), c.verify_settings()), c, out);
         }},
        {"verify-equivalence",
         [](const RunConfig& c, std::ostream& out, std::ostream&) {
             return emit_report(verify_equivalence(c.spec(), c.verify_settings()), c, out);
         }},
        {"verify-model3",
         [](const RunConfig& c, std::ostream& out, std::ostream&) {
             if (!c.model3) throw Error(ErrorCode::MissingRequired, "model3");
             return emit_report(verify_model3(*c.model3, c.verify_settings()), c, out);
         }},
        {"reduce-model3", cmd_reduce_model3},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"validate",          "chain-summary",    "fluid",
                                                "ou-moments",        "simulate",         "verify-fluid",
                                                "verify-occupation", "verify-diffusion", "verify-equivalence",
                                                "verify-model3",     "reduce-model3"};
    return names;
}

void apply_overrides(RunConfig& config, const CliOverrides& o) {
    if (o.out) config.output.directory = *o.out;
    if (o.seed) config.run.seed = *o.seed;
    if (o.reps) {
        if (*o.reps == 0) throw Error(ErrorCode::InvalidArgument, "--reps must be at least 1");
        config.run.reps = *o.reps;
    }
    if (o.n) {
        if (*o.n < 1) throw Error(ErrorCode::InvalidArgument, "--n must be at least 1");
        config.scaling.n = *o.n;
        if (!config.scaling.n_list.empty()) config.scaling.n_list = {*o.n};
    }
}

int run_command(const std::string& command, const RunConfig& config, std::ostream& out, std::ostream& log) {
    const auto it = handlers().find(command);
    if (it == handlers().end()) {
        log << "error: unknown command '" << command << "'\n";
        return kExitInputError;
    }
    log << "resolved config:\n" << serialize_config(config);
    try {
        return it->second(config, out, log);
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInputError;
    }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
    CLI::App app{"Markov-modulated infinite-server queueing networks: limits, simulation and verification"};
    std::string command;
    std::string config_path;
    CliOverrides overrides;
    app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(command_names()));
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", overrides.out, "Output directory");
    app.add_option("--seed", overrides.seed, "Master seed");
    app.add_option("--reps", overrides.reps, "Replications");
    app.add_option("--n", overrides.n, "Scaling parameter n");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        log << "error: " << e.what() << "\n" << app.help();
        return kExitInputError;
    }

    RunConfig config;
    try {
        config = parse_config(config_path);
        apply_overrides(config, overrides);
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return kExitInputError;
    }
    return run_command(command, config, out, log);
}

}  // namespace mmq
