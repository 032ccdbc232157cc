#pragma once

#include "mmq/ctmc.hpp"
#include "mmq/limits.hpp"
#include "mmq/network.hpp"
#include "mmq/rng.hpp"
#include "mmq/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mmq {

/// max{1/2, 1 - alpha/2}.
[[nodiscard]] double beta_exponent(double alpha);

enum class InitRule { Floor, Poisson };

/// The n-th system: arrival rates n lambda + n^beta lambda_hat, transfer rates
/// mu + n^(beta-1) mu_hat, and a background chain running n^alpha times faster.
struct ScaledSystem {
    NetworkSpec spec;
    double alpha = 1.0;
    std::int64_t n = 1;
    double beta = 0.5;
    Matrix lambda_n;    // L x d
    RateTensor mu_n;    // L x L x d
    double chain_timescale = 1.0;
    InitRule init_rule = InitRule::Floor;

    /// n^(1 - beta), the diffusion scaling factor.
    [[nodiscard]] double diffusion_scale() const;
};

[[nodiscard]] ScaledSystem build_scaled_system(const NetworkSpec& spec, double alpha, std::int64_t n,
                                               InitRule rule = InitRule::Floor);

/// floor(n rho0) under the floor rule, Poisson(n rho0) under the Poisson rule.
[[nodiscard]] Population initial_condition(const ScaledSystem& sys, const Vector& rho0, Rng& rng);

struct SimulationOptions {
    double population_cap = 1e8;
    bool record_chain = false;   // full background path (large when n^alpha is large)
    bool record_events = false;  // every arrival and transfer
    std::optional<int> initial_state;  // default: drawn from pi
};

/// One arrival (from == -1) or one transfer from -> to.
struct QueueEvent {
    double time;
    int from;
    int to;
};

/// Per-state occupation moments over one grid cell: column p holds
/// int over the cell of 1{J = j} (s - a)^p ds for p = 0..3, a the cell start.
using CellMoments = Matrix;  // d x 4

/// Everything one replication records. All cumulative quantities are sampled
/// at the grid epochs (right-continuous).
struct TrajectoryBundle {
    TimeGrid grid;
    std::vector<int> chain_state;          // J at each epoch
    std::vector<Population> queue;         // Q at each epoch
    std::vector<Population> arrivals;      // A_k counts
    std::vector<Population> transfers;     // S_kl counts, row-major L x L
    Matrix occupation;                     // epochs x d: time spent in each state
    MatrixPath queue_occupation;           // d x L: int 1{J = j} Q_k ds
    std::vector<CellMoments> cell_moments; // index g covers (t_{g-1}, t_g]; entry 0 is zero
    Matrix tau_arrival;                    // epochs x L: int (1/n) lambda^n_k(J) ds
    MatrixPath tau_transfer;               // L x L: int mu^n_kl(J) (1/n) Q_k ds

    ChainPath chain;                 // only with record_chain
    std::vector<QueueEvent> events;  // only with record_events
    Population initial;
    std::uint64_t total_events = 0;
    std::uint64_t chain_jumps = 0;
};

/// Exact event-driven simulation: one exponential race between the chain jump,
/// every arrival stream and every transfer stream, regenerated after each event.
[[nodiscard]] TrajectoryBundle simulate(const ScaledSystem& sys, const TimeGrid& grid, std::span<const std::int64_t> initial,
                                        Rng& rng, const SimulationOptions& options = {});

/// n^(1-beta) (Q/n - rho) at each epoch.
[[nodiscard]] VectorPath centered_scaled_path(const TrajectoryBundle& bundle, const FluidSolution& fluid,
                                              const ScaledSystem& sys);

struct DecompositionPaths {
    TimeGrid grid;
    VectorPath x1, x2, x3;  // per queue
    MatrixPath x4, x5, x6;  // per ordered pair (k, l)
    VectorPath xbar;
    VectorPath xhat;
    VectorPath qbar;                // Q/n - rho
    VectorPath modulated_integral;  // int M(J) qbar ds with the unaveraged drift
    VectorPath averaged_integral;   // int M_pi qbar ds

    /// Largest |qbar(t) - qbar(0) - xbar(t) - modulated_integral(t)| over the grid.
    [[nodiscard]] double reconstruction_residual() const;
    /// n^(1-beta) (modulated_integral - averaged_integral): the input whose
    /// image under H is Qhat - Qtilde.
    [[nodiscard]] VectorPath modulation_excess(double diffusion_scale) const;
};

[[nodiscard]] DecompositionPaths decompose(const TrajectoryBundle& bundle, const ScaledSystem& sys,
                                           const FluidSolution& fluid, const AveragedRates& avg);

/// Recomputes the time-change clocks from the chain path and the event log.
/// Requires record_chain and record_events; used to cross-check the bundle.
struct RecomputedClocks {
    Matrix tau_arrival;
    MatrixPath tau_transfer;
};

[[nodiscard]] RecomputedClocks recompute_clocks(const TrajectoryBundle& bundle, const ScaledSystem& sys);

}  // namespace mmq
