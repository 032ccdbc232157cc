#include "mmq/simulate.hpp"

#include "mmq/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace mmq {

double beta_exponent(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(ErrorCode::NonpositiveAlpha, "alpha = " + std::to_string(alpha));
    }
    return std::max(0.5, 1.0 - alpha / 2.0);
}

double ScaledSystem::diffusion_scale() const {
    return std::pow(static_cast<double>(n), 1.0 - beta);
}

ScaledSystem build_scaled_system(const NetworkSpec& spec, double alpha, std::int64_t n, InitRule rule) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "scale index n must be >= 1");
    ScaledSystem sys;
    sys.spec = spec;
    sys.alpha = alpha;
    sys.beta = beta_exponent(alpha);
    sys.n = n;
    sys.init_rule = rule;
    const double nd = static_cast<double>(n);
    sys.chain_timescale = std::pow(nd, alpha);
    const double arrival_hat_scale = std::pow(nd, sys.beta);
    const double transfer_hat_scale = std::pow(nd, sys.beta - 1.0);

    const int L = spec.queues();
    const int d = spec.states();
    sys.lambda_n = nd * spec.lambda + arrival_hat_scale * spec.lambda_hat;
    sys.mu_n = RateTensor(L, d);
    for (int k = 0; k < L; ++k) {
        for (int i = 0; i < d; ++i) {
            if (sys.lambda_n(k, i) < 0.0) {
                std::ostringstream msg;
                msg << "arrival rate to queue " << k + 1 << " in state " << i + 1 << " is " << sys.lambda_n(k, i)
                    << " at n = " << n;
                throw Error(ErrorCode::NegativeEffectiveRate, msg.str());
            }
            for (int l = 0; l < L; ++l) {
                const double rate = spec.mu(k, l, i) + transfer_hat_scale * spec.mu_hat(k, l, i);
                if (rate < 0.0) {
                    std::ostringstream msg;
                    msg << "transfer rate " << k + 1 << " -> " << l + 1 << " in state " << i + 1 << " is " << rate
                        << " at n = " << n;
                    throw Error(ErrorCode::NegativeEffectiveRate, msg.str());
                }
                sys.mu_n(k, l, i) = rate;
            }
        }
    }
    return sys;
}

Population initial_condition(const ScaledSystem& sys, const Vector& rho0, Rng& rng) {
    const int L = sys.spec.queues();
    if (rho0.size() != L) throw Error(ErrorCode::DimensionMismatch, "rho0 must have one entry per queue");
    Population q(L, 0);
    const double nd = static_cast<double>(sys.n);
    for (int k = 0; k < L; ++k) {
        if (!(rho0(k) >= 0.0)) throw Error(ErrorCode::InvalidArgument, "rho0 must be nonnegative");
        if (sys.init_rule == InitRule::Floor) {
            q[k] = static_cast<std::int64_t>(std::floor(nd * rho0(k)));
        } else if (rho0(k) > 0.0) {
            std::poisson_distribution<std::int64_t> poisson(nd * rho0(k));
            q[k] = poisson(rng);
        }
    }
    return q;
}

namespace {

/// Flattened per-state rate tables for the event loop.
struct RateTables {
    int L = 0;
    int d = 0;
    std::vector<double> chain;          // exit rate per state
    std::vector<double> arrival;        // [j * L + k]
    std::vector<double> arrival_total;  // per state
    std::vector<double> leave;          // [j * L + k], sum over targets
    std::vector<double> transfer;       // [(j * L + k) * L + l]

    explicit RateTables(const ScaledSystem& sys, const ChainSampler& chain_sampler)
        : L(sys.spec.queues()), d(sys.spec.states()) {
        chain.resize(d);
        arrival.assign(static_cast<std::size_t>(d) * L, 0.0);
        arrival_total.assign(d, 0.0);
        leave.assign(static_cast<std::size_t>(d) * L, 0.0);
        transfer.assign(static_cast<std::size_t>(d) * L * L, 0.0);
        for (int j = 0; j < d; ++j) {
            chain[j] = chain_sampler.exit_rate(j);
            for (int k = 0; k < L; ++k) {
                arrival[j * L + k] = sys.lambda_n(k, j);
                arrival_total[j] += sys.lambda_n(k, j);
                for (int l = 0; l < L; ++l) {
                    const double r = (k == l) ? 0.0 : sys.mu_n(k, l, j);
                    transfer[(static_cast<std::size_t>(j) * L + k) * L + l] = r;
                    leave[j * L + k] += r;
                }
            }
        }
    }
};

struct Pick {
    int index;
    double residual;  // u minus the weights before index, in [0, weight(index))
};

/// Index whose cumulative weight crosses u; falls back to the last positive
/// weight when rounding pushes u past the end.
template <class Weight>
Pick pick(int count, double u, Weight&& weight) {
    Pick last{-1, 0.0};
    for (int i = 0; i < count; ++i) {
        const double w = weight(i);
        if (w <= 0.0) continue;
        if (u < w) return {i, u};
        last = {i, w * 0.5};
        u -= w;
    }
    return last;
}

}  // namespace

TrajectoryBundle simulate(const ScaledSystem& sys, const TimeGrid& grid, std::span<const std::int64_t> initial, Rng& rng,
                          const SimulationOptions& options) {
    const int L = sys.spec.queues();
    const int d = sys.spec.states();
    if (static_cast<int>(initial.size()) != L) {
        throw Error(ErrorCode::DimensionMismatch, "initial population must have one entry per queue");
    }
    if (grid.cells() < 1) throw Error(ErrorCode::InvalidArgument, "simulation horizon must be positive");

    const ChainSampler chain_sampler(sys.spec.gen, sys.chain_timescale);
    const RateTables rates(sys, chain_sampler);

    TrajectoryBundle out;
    out.grid = grid;
    out.initial.assign(initial.begin(), initial.end());
    const std::size_t epochs = grid.size();
    out.chain_state.reserve(epochs);
    out.queue.reserve(epochs);
    out.arrivals.reserve(epochs);
    out.transfers.reserve(epochs);
    out.occupation = Matrix::Zero(static_cast<Eigen::Index>(epochs), d);
    out.queue_occupation.reserve(epochs);
    out.cell_moments.reserve(epochs);

    Population q(out.initial);
    std::int64_t population = 0;
    for (auto v : q) {
        if (v < 0) throw Error(ErrorCode::InvalidArgument, "initial population must be nonnegative");
        population += v;
    }
    Population arrivals(L, 0);
    Population transfers(static_cast<std::size_t>(L) * L, 0);
    std::vector<double> occupation(d, 0.0);
    std::vector<double> occupation_since_change(d, 0.0);
    Matrix queue_occupation = Matrix::Zero(d, L);
    CellMoments moments = CellMoments::Zero(d, 4);

    int state = options.initial_state ? *options.initial_state : chain_sampler.draw_initial(rng);
    if (state < 0 || state >= d) throw Error(ErrorCode::InvalidArgument, "initial chain state out of range");
    if (options.record_chain) {
        out.chain.horizon = grid.horizon();
        out.chain.times.push_back(0.0);
        out.chain.states.push_back(state);
    }

    double t = 0.0;
    double cell_start = 0.0;

    auto flush_queue_occupation = [&] {
        for (int j = 0; j < d; ++j) {
            const double occ = occupation_since_change[j];
            if (occ == 0.0) continue;
            for (int k = 0; k < L; ++k) queue_occupation(j, k) += occ * static_cast<double>(q[k]);
            occupation_since_change[j] = 0.0;
        }
    };
    auto advance = [&](double t1) {
        const double dt = t1 - t;
        occupation[state] += dt;
        occupation_since_change[state] += dt;
        const double u0 = t - cell_start;
        const double u1 = t1 - cell_start;
        double p0 = u0;
        double p1 = u1;
        for (int p = 0; p < 4; ++p) {
            moments(state, p) += (p1 - p0) / (p + 1);
            p0 *= u0;
            p1 *= u1;
        }
        t = t1;
    };
    auto snapshot = [&] {
        flush_queue_occupation();
        const auto g = static_cast<Eigen::Index>(out.queue.size());
        out.chain_state.push_back(state);
        out.queue.push_back(q);
        out.arrivals.push_back(arrivals);
        out.transfers.push_back(transfers);
        for (int j = 0; j < d; ++j) out.occupation(g, j) = occupation[j];
        out.queue_occupation.push_back(queue_occupation);
        out.cell_moments.push_back(moments);
        moments.setZero();
        cell_start = t;
    };

    snapshot();
    std::exponential_distribution<double> unit_exp(1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t next_epoch = 1;
    const double inf = std::numeric_limits<double>::infinity();

    while (next_epoch < epochs) {
        const double chain_rate = rates.chain[state];
        const double arrival_rate = rates.arrival_total[state];
        const double* leave = &rates.leave[static_cast<std::size_t>(state) * L];
        double transfer_rate = 0.0;
        for (int k = 0; k < L; ++k) transfer_rate += leave[k] * static_cast<double>(q[k]);
        const double total = chain_rate + arrival_rate + transfer_rate;
        const double t_event = total > 0.0 ? t + unit_exp(rng) / total : inf;

        while (next_epoch < epochs && t_event > grid.at(next_epoch)) {
            advance(grid.at(next_epoch));
            snapshot();
            ++next_epoch;
        }
        if (next_epoch >= epochs) break;

        advance(t_event);
        ++out.total_events;
        double u = unit(rng) * total;
        if (u < chain_rate) {
            state = chain_sampler.draw_next(state, rng);
            ++out.chain_jumps;
            if (options.record_chain) {
                out.chain.times.push_back(t);
                out.chain.states.push_back(state);
            }
            continue;
        }
        u -= chain_rate;
        flush_queue_occupation();
        if (u < arrival_rate) {
            const double* arr = &rates.arrival[static_cast<std::size_t>(state) * L];
            const int k = pick(L, u, [&](int i) { return arr[i]; }).index;
            ++q[k];
            ++arrivals[k];
            if (++population > options.population_cap) {
                throw Error(ErrorCode::ExplodedPopulation, "population exceeded " +
                                                               std::to_string(options.population_cap) + " at t = " +
                                                               std::to_string(t));
            }
            if (options.record_events) out.events.push_back({t, -1, k});
            continue;
        }
        u -= arrival_rate;
        const Pick source = pick(L, u, [&](int i) { return leave[i] * static_cast<double>(q[i]); });
        const int from = source.index;
        if (from < 0) continue;  // u landed on a zero transfer rate through rounding
        // Given the source queue, u is uniform over its q[from] identical jobs.
        const double residual = std::fmod(source.residual, leave[from]);
        const double* row = &rates.transfer[(static_cast<std::size_t>(state) * L + from) * L];
        const int to = pick(L, residual, [&](int i) { return row[i]; }).index;
        --q[from];
        ++q[to];
        ++transfers[static_cast<std::size_t>(from) * L + to];
        if (options.record_events) out.events.push_back({t, from, to});
    }

    const double nd = static_cast<double>(sys.n);
    out.tau_arrival = out.occupation * (sys.lambda_n / nd).transpose();
    out.tau_transfer.reserve(epochs);
    for (std::size_t g = 0; g < epochs; ++g) {
        Matrix tau = Matrix::Zero(L, L);
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < L; ++k)
                for (int l = 0; l < L; ++l) tau(k, l) += sys.mu_n(k, l, j) * out.queue_occupation[g](j, k) / nd;
        out.tau_transfer.push_back(std::move(tau));
    }
    return out;
}

namespace {

void require_same_grid(const TimeGrid& a, const TimeGrid& b) {
    if (a.size() != b.size() || std::abs(a.step() - b.step()) > 1e-12 * a.step()) {
        throw Error(ErrorCode::GridMismatch, "fluid grid (" + std::to_string(b.size()) +
                                                 " epochs) does not match the trajectory grid (" +
                                                 std::to_string(a.size()) + " epochs)");
    }
}

}  // namespace

VectorPath centered_scaled_path(const TrajectoryBundle& bundle, const FluidSolution& fluid, const ScaledSystem& sys) {
    require_same_grid(bundle.grid, fluid.grid);
    const double nd = static_cast<double>(sys.n);
    const double scale = sys.diffusion_scale();
    const auto L = static_cast<Eigen::Index>(sys.spec.queues());
    VectorPath out;
    out.reserve(bundle.queue.size());
    for (std::size_t g = 0; g < bundle.queue.size(); ++g) {
        Vector v(L);
        for (Eigen::Index k = 0; k < L; ++k) v(k) = scale * (static_cast<double>(bundle.queue[g][k]) / nd - fluid.rho[g](k));
        out.push_back(std::move(v));
    }
    return out;
}

double DecompositionPaths::reconstruction_residual() const {
    double worst = 0.0;
    for (std::size_t g = 0; g < qbar.size(); ++g) {
        const Vector r = qbar[g] - qbar[0] - xbar[g] - modulated_integral[g];
        worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
    return worst;
}

VectorPath DecompositionPaths::modulation_excess(double diffusion_scale) const {
    VectorPath out;
    out.reserve(modulated_integral.size());
    for (std::size_t g = 0; g < modulated_integral.size(); ++g)
        out.push_back(diffusion_scale * (modulated_integral[g] - averaged_integral[g]));
    return out;
}

DecompositionPaths decompose(const TrajectoryBundle& bundle, const ScaledSystem& sys, const FluidSolution& fluid,
                             const AveragedRates& avg) {
    require_same_grid(bundle.grid, fluid.grid);
    const NetworkSpec& spec = sys.spec;
    const int L = spec.queues();
    const int d = spec.states();
    const double nd = static_cast<double>(sys.n);
    const double scale = sys.diffusion_scale();
    const std::size_t epochs = bundle.queue.size();

    std::vector<Matrix> state_drift(d);
    for (int j = 0; j < d; ++j) state_drift[j] = state_drift_matrix(spec.mu, j);

    DecompositionPaths out;
    out.grid = bundle.grid;
    Matrix fluid_occupation = Matrix::Zero(d, L);  // int 1{J = j} rho_k ds
    constexpr double inv_factorial[4] = {1.0, 1.0, 0.5, 1.0 / 6.0};

    for (std::size_t g = 0; g < epochs; ++g) {
        const double t = bundle.grid.at(g);
        if (g > 0) {
            const FluidJet jet = fluid_jet(avg, fluid.rho[g - 1]);
            const Vector* terms[4] = {&jet.value, &jet.d1, &jet.d2, &jet.d3};
            const CellMoments& mom = bundle.cell_moments[g];
            for (int p = 0; p < 4; ++p)
                fluid_occupation += mom.col(p) * (inv_factorial[p] * terms[p]->transpose());
        }
        const Matrix queue_occ = bundle.queue_occupation[g] / nd;  // d x L, int 1{J=j} Q_k / n
        const Vector occ = bundle.occupation.row(static_cast<Eigen::Index>(g)).transpose();

        Vector x1(L), x2(L), x3(L);
        Matrix x4 = Matrix::Zero(L, L), x5 = Matrix::Zero(L, L), x6 = Matrix::Zero(L, L);
        for (int k = 0; k < L; ++k) {
            x1(k) = static_cast<double>(bundle.arrivals[g][k]) / nd - bundle.tau_arrival(static_cast<Eigen::Index>(g), k);
            double lam_n = 0.0;
            double lam = 0.0;
            for (int j = 0; j < d; ++j) {
                lam_n += (sys.lambda_n(k, j) / nd - spec.lambda(k, j)) * occ(j);
                lam += spec.lambda(k, j) * occ(j);
            }
            x2(k) = lam_n;
            x3(k) = lam - avg.lambda_pi(k) * t;
            for (int l = 0; l < L; ++l) {
                if (l == k) continue;
                x4(k, l) = static_cast<double>(bundle.transfers[g][static_cast<std::size_t>(k) * L + l]) / nd -
                           bundle.tau_transfer[g](k, l);
                double perturbed = 0.0;
                double modulated = 0.0;
                double fluid_total = 0.0;
                for (int j = 0; j < d; ++j) {
                    perturbed += (sys.mu_n(k, l, j) - spec.mu(k, l, j)) * queue_occ(j, k);
                    modulated += spec.mu(k, l, j) * fluid_occupation(j, k);
                    fluid_total += fluid_occupation(j, k);
                }
                x5(k, l) = perturbed;
                x6(k, l) = modulated - avg.mu_pi(k, l) * fluid_total;
            }
        }
        Vector xbar = x1 + x2 + x3;
        for (int k = 0; k < L; ++k) {
            for (int l = 0; l < L; ++l) {
                if (l == k) continue;
                xbar(k) += x4(l, k) + x5(l, k) + x6(l, k);
                xbar(k) -= x4(k, l) + x5(k, l) + x6(k, l);
            }
        }

        Vector qbar(L);
        for (int k = 0; k < L; ++k) qbar(k) = static_cast<double>(bundle.queue[g][k]) / nd - fluid.rho[g](k);
        Vector modulated = Vector::Zero(L);
        for (int j = 0; j < d; ++j)
            modulated += state_drift[j] * (queue_occ.row(j) - fluid_occupation.row(j)).transpose();
        const Vector centered_total = (queue_occ - fluid_occupation).colwise().sum().transpose();

        out.x1.push_back(std::move(x1));
        out.x2.push_back(std::move(x2));
        out.x3.push_back(std::move(x3));
        out.x4.push_back(std::move(x4));
        out.x5.push_back(std::move(x5));
        out.x6.push_back(std::move(x6));
        out.xhat.push_back(scale * xbar);
        out.xbar.push_back(std::move(xbar));
        out.qbar.push_back(std::move(qbar));
        out.modulated_integral.push_back(std::move(modulated));
        out.averaged_integral.push_back(avg.drift * centered_total);
    }
    return out;
}

RecomputedClocks recompute_clocks(const TrajectoryBundle& bundle, const ScaledSystem& sys) {
    if (bundle.chain.times.empty()) {
        throw Error(ErrorCode::InvalidArgument, "clock recomputation needs a recorded chain path");
    }
    const int L = sys.spec.queues();
    const double nd = static_cast<double>(sys.n);
    const std::size_t epochs = bundle.grid.size();
    RecomputedClocks out;
    out.tau_arrival = Matrix::Zero(static_cast<Eigen::Index>(epochs), L);
    out.tau_transfer.assign(epochs, Matrix::Zero(L, L));

    // Merge chain jumps, queue events and grid epochs into one sorted sweep.
    Population q = bundle.initial;
    std::size_t next_jump = 1;
    std::size_t next_event = 0;
    int state = bundle.chain.states.front();
    Vector tau_a = Vector::Zero(L);
    Matrix tau_s = Matrix::Zero(L, L);
    double t = 0.0;
    for (std::size_t g = 1; g < epochs; ++g) {
        const double epoch = bundle.grid.at(g);
        while (true) {
            const double tj = next_jump < bundle.chain.times.size() ? bundle.chain.times[next_jump] : epoch + 1.0;
            const double te = next_event < bundle.events.size() ? bundle.events[next_event].time : epoch + 1.0;
            const double until = std::min({tj, te, epoch});
            const double dt = until - t;
            for (int k = 0; k < L; ++k) {
                tau_a(k) += dt * sys.lambda_n(k, state) / nd;
                for (int l = 0; l < L; ++l)
                    if (l != k) tau_s(k, l) += dt * sys.mu_n(k, l, state) * static_cast<double>(q[k]) / nd;
            }
            t = until;
            if (until == epoch && tj > epoch && te > epoch) break;
            if (tj <= te) {
                state = bundle.chain.states[next_jump++];
            } else {
                const QueueEvent& ev = bundle.events[next_event++];
                if (ev.from >= 0) --q[ev.from];
                ++q[ev.to];
            }
        }
        out.tau_arrival.row(static_cast<Eigen::Index>(g)) = tau_a.transpose();
        out.tau_transfer[g] = tau_s;
    }
    return out;
}

}  // namespace mmq
