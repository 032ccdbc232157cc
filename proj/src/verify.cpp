#include "mmq/verify.hpp"

#include "mmq/error.hpp"
#include "mmq/replicate.hpp"
#include "mmq/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace mmq {

namespace {

using json = nlohmann::ordered_json;

// Distinct stream families so that checks sharing a master seed never reuse draws.
constexpr std::uint64_t kBootstrapStream = 0xb0075ULL;
constexpr std::uint64_t kOracleStream = 0x0a4c1eULL;

std::uint64_t family_seed(std::uint64_t master, std::uint64_t family) { return stream_seed(master, family); }

json to_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(row);
    }
    return rows;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Verdict within(std::string criterion, double measured, double reference, double tolerance) {
    return {std::move(criterion), std::abs(measured - reference) <= tolerance, measured, reference, tolerance};
}

json base_params(const VerifySettings& s) {
    json p;
    p["alpha"] = s.alpha;
    p["reps"] = s.reps;
    p["seed"] = s.seed;
    p["horizon"] = s.horizon;
    p["grid_step"] = s.grid_step;
    return p;
}

Vector resolve_rho0(const VerifySettings& s, int queues) {
    if (s.rho0.size() == 0) return Vector::Zero(queues);
    if (s.rho0.size() != queues) throw Error(ErrorCode::DimensionMismatch, "rho0 must have one entry per queue");
    return s.rho0;
}

void require_increasing(const std::vector<std::int64_t>& ns) {
    if (ns.empty()) throw Error(ErrorCode::InvalidArgument, "n list is empty");
    for (std::size_t i = 1; i < ns.size(); ++i)
        if (ns[i] <= ns[i - 1]) throw Error(ErrorCode::InvalidArgument, "n list must be strictly increasing");
}

/// Shared limit objects for one network.
struct LimitSetup {
    ChainSummary summary;
    AveragedRates avg;
    FluidSolution fluid;
};

LimitSetup limit_setup(const NetworkSpec& spec, const VerifySettings& s) {
    LimitSetup out;
    out.summary = summarize(spec.gen);
    out.avg = averaged_rates(spec, out.summary);
    out.fluid = fluid_limit(out.avg, resolve_rho0(s, spec.queues()), s.horizon, s.grid_step);
    return out;
}

std::string label(const char* what, int k, int l, double t) {
    std::ostringstream os;
    os << what << "[" << k + 1;
    if (l >= 0) os << "," << l + 1;
    os << "]@t=" << t;
    return os.str();
}

}  // namespace

bool VerificationReport::passed() const {
    return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

const Verdict* VerificationReport::find(const std::string& criterion) const {
    for (const auto& v : verdicts)
        if (v.criterion == criterion) return &v;
    return nullptr;
}

json VerificationReport::to_json() const {
    json out;
    out["check"] = check;
    out["params"] = params;
    out["stats"] = stats;
    json list = json::array();
    for (const auto& v : verdicts) {
        json item;
        item["criterion"] = v.criterion;
        item["passed"] = v.passed;
        item["measured"] = v.measured;
        item["reference"] = v.reference;
        item["tolerance"] = v.tolerance;
        list.push_back(item);
    }
    out["verdicts"] = list;
    out["passed"] = passed();
    return out;
}

std::string VerificationReport::to_table() const {
    std::vector<std::array<std::string, 5>> rows;
    rows.push_back({"criterion", "measured", "reference", "tolerance", "verdict"});
    for (const auto& v : verdicts)
        rows.push_back({v.criterion, fmt(v.measured), fmt(v.reference), fmt(v.tolerance), v.passed ? "PASS" : "FAIL"});
    std::array<std::size_t, 5> width{};
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::ostringstream os;
    os << check << "\n";
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            os << std::left << std::setw(static_cast<int>(width[c])) << r[c];
            os << (c + 1 < r.size() ? "  " : "\n");
        }
    }
    os << "overall: " << (passed() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

VerificationReport verify_fluid(const NetworkSpec& spec, const VerifySettings& s) {
    require_increasing(s.ns);
    const LimitSetup setup = limit_setup(spec, s);
    const int L = spec.queues();
    const Vector rho0 = resolve_rho0(s, L);
    VectorPath reference = setup.fluid.rho;
    for (auto& r : reference) r.array() += s.overrides.fluid_offset;

    VerificationReport report;
    report.check = "verify-fluid";
    report.params = base_params(s);
    report.params["ns"] = s.ns;
    report.params["fluid_offset"] = s.overrides.fluid_offset;
    if (s.keep_raw) report.raw_columns = {"n", "rep", "sup_error"};

    SimulationOptions options;
    options.population_cap = s.population_cap;
    std::vector<double> estimates;
    json per_n = json::array();
    for (std::size_t idx = 0; idx < s.ns.size(); ++idx) {
        const std::int64_t n = s.ns[idx];
        const ScaledSystem sys = build_scaled_system(spec, s.alpha, n, s.init_rule);
        const double nd = static_cast<double>(n);
        const std::vector<double> sups = run_replications(
            s.reps, family_seed(s.seed, static_cast<std::uint64_t>(n)), s.workers, [&](std::size_t, Rng& rng) {
                const Population q0 = initial_condition(sys, rho0, rng);
                const TrajectoryBundle b = simulate(sys, setup.fluid.grid, q0, rng, options);
                double sup = 0.0;
                for (std::size_t g = 0; g < b.queue.size(); ++g) {
                    double err = 0.0;
                    for (int k = 0; k < L; ++k) err += std::abs(static_cast<double>(b.queue[g][k]) / nd - reference[g](k));
                    sup = std::max(sup, err);
                }
                return sup;
            });
        const double m = stats::mean(sups);
        const double se = sups.size() > 1 ? stats::mean_stderr(sups) : 0.0;
        estimates.push_back(m);
        json entry;
        entry["n"] = n;
        entry["mean_sup_error"] = m;
        entry["stderr"] = se;
        per_n.push_back(entry);
        if (s.keep_raw)
            for (std::size_t r = 0; r < sups.size(); ++r)
                report.raw_rows.push_back({nd, static_cast<double>(r), sups[r]});
    }
    report.stats["per_n"] = per_n;

    for (std::size_t i = 1; i < estimates.size(); ++i) {
        Verdict v;
        v.criterion = "decrease n=" + std::to_string(s.ns[i - 1]) + "->" + std::to_string(s.ns[i]);
        v.measured = estimates[i];
        v.reference = estimates[i - 1];
        v.tolerance = 0.0;
        v.passed = estimates[i] < estimates[i - 1] || estimates[i] == 0.0;
        report.verdicts.push_back(v);
    }
    Verdict cap;
    cap.criterion = "final sup error below cap";
    cap.measured = estimates.back();
    cap.reference = 0.0;
    cap.tolerance = s.tol.fluid_cap;
    cap.passed = estimates.back() < s.tol.fluid_cap;
    report.verdicts.push_back(cap);
    return report;
}

VerificationReport verify_occupation(const Generator& gen, const VerifySettings& s) {
    const ChainSummary summary = summarize(gen);
    const double t = s.horizon;
    const double timescale = std::pow(static_cast<double>(s.n), s.alpha);
    const double root_scale = std::sqrt(timescale);
    const ChainSampler sampler(gen, timescale);

    const VectorPath samples = run_replications(s.reps, s.seed, s.workers, [&](std::size_t, Rng& rng) -> Vector {
        const ChainPath path = sampler.sample(t, rng);
        return root_scale * occupation_deviation(path, summary.pi, t);
    });
    const Matrix cov = stats::covariance(samples);
    Rng boot(family_seed(s.seed, kBootstrapStream));
    const Matrix se = stats::bootstrap_covariance_stderr(samples, s.tol.bootstrap_resamples, boot);
    const Matrix reference = s.overrides.reference_scale * summary.sigma * t;

    VerificationReport report;
    report.check = "verify-occupation";
    report.params = base_params(s);
    report.params["n"] = s.n;
    report.params["reference_scale"] = s.overrides.reference_scale;
    report.stats["sigma"] = to_json(summary.sigma);
    report.stats["empirical_covariance"] = to_json(cov);
    report.stats["bootstrap_stderr"] = to_json(se);
    report.stats["reference"] = to_json(reference);
    const int d = gen.states();
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            const double tol = s.tol.occupation_relative * std::abs(reference(i, j)) + s.tol.occupation_stderr * se(i, j);
            report.verdicts.push_back(within(label("cov", i, j, t), cov(i, j), reference(i, j), tol));
        }
    }
    if (s.keep_raw) {
        report.raw_columns = {"rep"};
        for (int i = 0; i < d; ++i) report.raw_columns.push_back("g_" + std::to_string(i + 1));
        for (std::size_t r = 0; r < samples.size(); ++r) {
            std::vector<double> row{static_cast<double>(r)};
            for (int i = 0; i < d; ++i) row.push_back(samples[r](i));
            report.raw_rows.push_back(std::move(row));
        }
    }
    return report;
}

VerificationReport verify_diffusion(const NetworkSpec& spec, const VerifySettings& s) {
    const LimitSetup setup = limit_setup(spec, s);
    const int L = spec.queues();
    const Vector rho0 = resolve_rho0(s, L);
    const ScaledSystem sys = build_scaled_system(spec, s.alpha, s.n, s.init_rule);
    Matrix v0 = Matrix::Zero(L, L);
    if (s.init_rule == InitRule::Poisson && sys.beta == 0.5) v0 = rho0.asDiagonal();
    const OUMoments moments = limit_moments(spec, setup.summary, setup.avg, setup.fluid, s.alpha, Vector::Zero(L), v0);

    std::vector<std::size_t> epochs;
    const std::vector<double> times = s.check_times.empty() ? std::vector<double>{s.horizon} : s.check_times;
    for (double t : times) {
        const int g = setup.fluid.grid.index_of(t);
        if (g < 0) throw Error(ErrorCode::GridMismatch, "check time " + std::to_string(t) + " is not a grid epoch");
        epochs.push_back(static_cast<std::size_t>(g));
    }

    SimulationOptions options;
    options.population_cap = s.population_cap;
    const auto per_rep = run_replications(s.reps, s.seed, s.workers, [&](std::size_t, Rng& rng) {
        const Population q0 = initial_condition(sys, rho0, rng);
        const TrajectoryBundle b = simulate(sys, setup.fluid.grid, q0, rng, options);
        const VectorPath qhat = centered_scaled_path(b, setup.fluid, sys);
        VectorPath picked;
        for (std::size_t g : epochs) picked.push_back(qhat[g]);
        return picked;
    });

    VerificationReport report;
    report.check = "verify-diffusion";
    report.params = base_params(s);
    report.params["n"] = s.n;
    report.params["beta"] = sys.beta;
    report.params["check_times"] = times;
    report.params["reference_scale"] = s.overrides.reference_scale;
    json per_epoch = json::array();
    Rng boot(family_seed(s.seed, kBootstrapStream));
    for (std::size_t e = 0; e < epochs.size(); ++e) {
        const std::size_t g = epochs[e];
        const double t = times[e];
        VectorPath samples;
        samples.reserve(per_rep.size());
        for (const auto& r : per_rep) samples.push_back(r[e]);
        const Vector mean = stats::mean(samples);
        const Vector mean_se = stats::mean_stderr(samples);
        const Matrix cov = stats::covariance(samples);
        const Matrix cov_se = stats::bootstrap_covariance_stderr(samples, s.tol.bootstrap_resamples, boot);
        const Vector& ref_mean = moments.mean[g];
        const Matrix ref_cov = s.overrides.reference_scale * moments.cov[g];

        json entry;
        entry["t"] = t;
        entry["empirical_mean"] = to_json(mean);
        entry["mean_stderr"] = to_json(mean_se);
        entry["reference_mean"] = to_json(ref_mean);
        entry["empirical_covariance"] = to_json(cov);
        entry["covariance_stderr"] = to_json(cov_se);
        entry["reference_covariance"] = to_json(ref_cov);
        per_epoch.push_back(entry);

        for (int k = 0; k < L; ++k) {
            const double tol = s.tol.diffusion_stderr * mean_se(k) + s.tol.diffusion_relative * std::abs(ref_mean(k));
            report.verdicts.push_back(within(label("mean", k, -1, t), mean(k), ref_mean(k), tol));
        }
        for (int k = 0; k < L; ++k) {
            for (int l = k; l < L; ++l) {
                const double tol =
                    s.tol.diffusion_stderr * cov_se(k, l) + s.tol.diffusion_relative * std::abs(ref_cov(k, l));
                report.verdicts.push_back(within(label("cov", k, l, t), cov(k, l), ref_cov(k, l), tol));
            }
        }
        if (s.keep_raw) {
            if (report.raw_columns.empty()) {
                report.raw_columns = {"t", "rep"};
                for (int k = 0; k < L; ++k) report.raw_columns.push_back("qhat_" + std::to_string(k + 1));
            }
            for (std::size_t r = 0; r < samples.size(); ++r) {
                std::vector<double> row{t, static_cast<double>(r)};
                for (int k = 0; k < L; ++k) row.push_back(samples[r](k));
                report.raw_rows.push_back(std::move(row));
            }
        }
    }
    report.stats["per_epoch"] = per_epoch;
    report.stats["max_covariance_asymmetry"] = moments.max_asymmetry;
    return report;
}

EquivalenceGap equivalence_gap(const TrajectoryBundle& bundle, const ScaledSystem& sys, const FluidSolution& fluid,
                               const AveragedRates& avg) {
    const DecompositionPaths dec = decompose(bundle, sys, fluid, avg);
    const double scale = sys.diffusion_scale();
    const VectorPath qhat = centered_scaled_path(bundle, fluid, sys);

    EquivalenceGap out;
    out.reconstruction_residual = dec.reconstruction_residual();
    const int L = sys.spec.queues();
    const VectorPath gap = integral_map_H(Vector::Zero(L), dec.modulation_excess(scale), avg.drift, bundle.grid);
    const VectorPath direct = integral_map_H(qhat[0], dec.xhat, avg.drift, bundle.grid);
    for (std::size_t g = 0; g < qhat.size(); ++g) {
        out.gap = std::max(out.gap, gap[g].cwiseAbs().maxCoeff());
        out.direct_gap = std::max(out.direct_gap, (qhat[g] - direct[g]).cwiseAbs().maxCoeff());
    }
    return out;
}

VerificationReport verify_equivalence(const NetworkSpec& spec, const VerifySettings& s) {
    require_increasing(s.ns);
    const LimitSetup setup = limit_setup(spec, s);
    const Vector rho0 = resolve_rho0(s, spec.queues());

    VerificationReport report;
    report.check = "verify-equivalence";
    report.params = base_params(s);
    report.params["ns"] = s.ns;
    if (s.keep_raw) report.raw_columns = {"n", "rep", "sup_gap", "sup_gap_direct", "reconstruction_residual"};

    SimulationOptions options;
    options.population_cap = s.population_cap;
    std::vector<double> medians;
    json per_n = json::array();
    for (const std::int64_t n : s.ns) {
        const ScaledSystem sys = build_scaled_system(spec, s.alpha, n, s.init_rule);
        const auto gaps = run_replications(s.reps, family_seed(s.seed, static_cast<std::uint64_t>(n)), s.workers,
                                           [&](std::size_t, Rng& rng) {
                                               const Population q0 = initial_condition(sys, rho0, rng);
                                               const TrajectoryBundle b = simulate(sys, setup.fluid.grid, q0, rng, options);
                                               return equivalence_gap(b, sys, setup.fluid, setup.avg);
                                           });
        std::vector<double> gap, direct;
        double residual = 0.0;
        for (const auto& g : gaps) {
            gap.push_back(g.gap);
            direct.push_back(g.direct_gap);
            residual = std::max(residual, g.reconstruction_residual);
        }
        medians.push_back(stats::median(gap));
        json entry;
        entry["n"] = n;
        entry["median_sup_gap"] = medians.back();
        entry["median_sup_gap_direct"] = stats::median(direct);
        entry["max_reconstruction_residual"] = residual;
        per_n.push_back(entry);
        if (s.keep_raw)
            for (std::size_t r = 0; r < gaps.size(); ++r)
                report.raw_rows.push_back({static_cast<double>(n), static_cast<double>(r), gaps[r].gap,
                                           gaps[r].direct_gap, gaps[r].reconstruction_residual});
    }
    report.stats["per_n"] = per_n;
    for (std::size_t i = 1; i < medians.size(); ++i) {
        Verdict v;
        v.criterion = "median gap decrease n=" + std::to_string(s.ns[i - 1]) + "->" + std::to_string(s.ns[i]);
        v.measured = medians[i];
        v.reference = medians[i - 1];
        v.tolerance = 0.0;
        v.passed = medians[i] < medians[i - 1];
        report.verdicts.push_back(v);
    }
    if (medians.size() == 1) {
        report.verdicts.push_back({"median gap (single n)", true, medians[0], 0.0, 0.0});
    }
    return report;
}

Model3Counts simulate_model3_per_job(const Model3Spec& m3, double horizon, Rng& rng) {
    const ChainSampler sampler(m3.gen, 1.0);
    const ChainPath path = sampler.sample(horizon, rng);
    const std::size_t pieces = path.times.size();

    // Cumulative work W(t) = int_0^t mu*(J) ds at each jump epoch.
    std::vector<double> work(pieces + 1, 0.0);
    for (std::size_t i = 0; i < pieces; ++i) {
        const double end = i + 1 < pieces ? path.times[i + 1] : horizon;
        work[i + 1] = work[i] + m3.mu_star(path.states[i]) * (end - path.times[i]);
    }
    const double total_work = work[pieces];

    Model3Counts out;
    std::exponential_distribution<double> unit_exp(1.0);
    for (std::size_t i = 0; i < pieces; ++i) {
        const int type = path.states[i];
        const double start = path.times[i];
        const double end = i + 1 < pieces ? path.times[i + 1] : horizon;
        const double mean_count = m3.lambda_star(type) * (end - start);
        if (mean_count <= 0.0) continue;
        std::poisson_distribution<std::int64_t> count(mean_count);
        std::uniform_real_distribution<double> when(start, end);
        const std::int64_t arrivals = count(rng);
        for (std::int64_t a = 0; a < arrivals; ++a) {
            const double arrival = when(rng);
            const double requirement = m3.kappa_star(type) > 0.0
                                           ? unit_exp(rng) / m3.kappa_star(type)
                                           : std::numeric_limits<double>::infinity();
            const double received = total_work - (work[i] + m3.mu_star(type) * (arrival - start));
            if (received >= requirement) {
                ++out.departed;
            } else {
                ++out.in_service;
            }
        }
    }
    return out;
}

VerificationReport verify_model3(const Model3Spec& m3, const VerifySettings& s) {
    const NetworkSpec reduced = reduce_model3(m3);
    const int d = m3.states();
    const ScaledSystem sys = build_scaled_system(reduced, 1.0, 1);
    const TimeGrid grid(s.horizon, 1);
    SimulationOptions options;
    options.population_cap = s.population_cap;
    const Population empty(static_cast<std::size_t>(d) + 1, 0);

    const auto network = run_replications(s.reps, s.seed, s.workers, [&](std::size_t, Rng& rng) {
        const TrajectoryBundle b = simulate(sys, grid, empty, rng, options);
        const Population& q = b.queue.back();
        Model3Counts c;
        for (int k = 0; k < d; ++k) c.in_service += q[k];
        c.departed = q[d];
        return c;
    });
    const auto oracle = run_replications(s.reps, family_seed(s.seed, kOracleStream), s.workers,
                                         [&](std::size_t, Rng& rng) { return simulate_model3_per_job(m3, s.horizon, rng); });

    VerificationReport report;
    report.check = "verify-model3";
    report.params = base_params(s);
    report.params.erase("alpha");
    report.params.erase("grid_step");
    Rng boot(family_seed(s.seed, kBootstrapStream));
    json summary;
    auto compare = [&](const char* name, auto field) {
        std::vector<double> a, b;
        for (const auto& c : network) a.push_back(static_cast<double>(c.*field));
        for (const auto& c : oracle) b.push_back(static_cast<double>(c.*field));
        const double ma = stats::mean(a), mb = stats::mean(b);
        const double va = stats::variance(a), vb = stats::variance(b);
        const double se_mean = std::hypot(stats::mean_stderr(a), stats::mean_stderr(b));
        const double se_var = std::hypot(stats::bootstrap_variance_stderr(a, s.tol.bootstrap_resamples, boot),
                                         stats::bootstrap_variance_stderr(b, s.tol.bootstrap_resamples, boot));
        json entry;
        entry["network_mean"] = ma;
        entry["oracle_mean"] = mb;
        entry["network_variance"] = va;
        entry["oracle_variance"] = vb;
        entry["mean_stderr"] = se_mean;
        entry["variance_stderr"] = se_var;
        summary[name] = entry;
        report.verdicts.push_back(within(std::string("mean ") + name, ma, mb, s.tol.model3_stderr * se_mean));
        report.verdicts.push_back(within(std::string("variance ") + name, va, vb, s.tol.model3_stderr * se_var));
    };
    compare("in_service", &Model3Counts::in_service);
    compare("departed", &Model3Counts::departed);
    report.stats = summary;
    if (s.keep_raw) {
        report.raw_columns = {"rep", "network_in_service", "network_departed", "oracle_in_service", "oracle_departed"};
        for (std::size_t r = 0; r < network.size(); ++r)
            report.raw_rows.push_back({static_cast<double>(r), static_cast<double>(network[r].in_service),
                                       static_cast<double>(network[r].departed),
                                       static_cast<double>(oracle[r].in_service),
                                       static_cast<double>(oracle[r].departed)});
    }
    return report;
}

}  // namespace mmq
