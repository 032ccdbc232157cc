#pragma once

#include "mmq/ctmc.hpp"
#include "mmq/limits.hpp"
#include "mmq/network.hpp"
#include "mmq/simulate.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace mmq {

/// Thresholds for every statistical check. Defaults are engineering choices,
/// not rates claimed by the theory.
struct VerifyTolerances {
    double fluid_cap = 0.05;
    double occupation_relative = 0.10;
    double occupation_stderr = 3.0;
    double diffusion_relative = 0.10;
    double diffusion_stderr = 3.0;
    double model3_stderr = 3.0;
    int bootstrap_resamples = 200;

    friend bool operator==(const VerifyTolerances&, const VerifyTolerances&) = default;
};

/// Deliberate distortions of the reference values, used for negative controls.
struct ReferenceOverrides {
    double reference_scale = 1.0;  // multiplies covariance references
    double fluid_offset = 0.0;     // added to every fluid component

    friend bool operator==(const ReferenceOverrides&, const ReferenceOverrides&) = default;
};

struct VerifySettings {
    double alpha = 1.0;
    std::int64_t n = 100;
    std::vector<std::int64_t> ns;
    Vector rho0;  // empty means zero
    InitRule init_rule = InitRule::Floor;
    double horizon = 1.0;
    double grid_step = 0.01;
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    unsigned workers = 0;
    std::vector<double> check_times;  // diffusion epochs; empty means the horizon
    double population_cap = 1e8;
    bool keep_raw = false;
    VerifyTolerances tol;
    ReferenceOverrides overrides;
};

struct Verdict {
    std::string criterion;
    bool passed = false;
    double measured = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
};

struct VerificationReport {
    std::string check;
    nlohmann::ordered_json params;
    nlohmann::ordered_json stats;
    std::vector<Verdict> verdicts;
    std::vector<std::string> raw_columns;
    std::vector<std::vector<double>> raw_rows;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] const Verdict* find(const std::string& criterion) const;
    [[nodiscard]] nlohmann::ordered_json to_json() const;
    /// Aligned plain-text table, one verdict per line.
    [[nodiscard]] std::string to_table() const;
};

/// E[sup_t sum_k |Q_k/n - rho_k|] for each n in settings.ns.
[[nodiscard]] VerificationReport verify_fluid(const NetworkSpec& spec, const VerifySettings& settings);

/// Covariance of n^(alpha/2) G(t) at t = settings.horizon against Sigma t.
[[nodiscard]] VerificationReport verify_occupation(const Generator& gen, const VerifySettings& settings);

/// Mean and covariance of Qhat at the check epochs against the limit moments.
[[nodiscard]] VerificationReport verify_diffusion(const NetworkSpec& spec, const VerifySettings& settings);

/// Median sup-gap between Qhat and Qtilde = H(Qhat(0), Xhat) for each n in settings.ns.
[[nodiscard]] VerificationReport verify_equivalence(const NetworkSpec& spec, const VerifySettings& settings);

/// Reduced network against an independent per-job simulator.
[[nodiscard]] VerificationReport verify_model3(const Model3Spec& m3, const VerifySettings& settings);

struct Model3Counts {
    std::int64_t in_service = 0;
    std::int64_t departed = 0;
};

/// Tracks every job: type = state at arrival, requirement ~ Exp(kappa*(type)),
/// departs once the work int mu*(J) ds since arrival exceeds the requirement.
[[nodiscard]] Model3Counts simulate_model3_per_job(const Model3Spec& m3, double horizon, Rng& rng);

/// Sup over the grid of the max-norm gap Qhat - Qtilde for one replication,
/// by two routes: H applied to the modulation excess, and H(Qhat(0), Xhat)
/// with Xhat held constant between epochs.
struct EquivalenceGap {
    double gap = 0.0;
    double direct_gap = 0.0;
    double reconstruction_residual = 0.0;
};

[[nodiscard]] EquivalenceGap equivalence_gap(const TrajectoryBundle& bundle, const ScaledSystem& sys,
                                             const FluidSolution& fluid, const AveragedRates& avg);

}  // namespace mmq
