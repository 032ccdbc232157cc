#pragma once

#include "mmq/rng.hpp"
#include "mmq/types.hpp"

#include <optional>
#include <vector>

namespace mmq {

struct ChainTolerances {
    double row_sum = 1e-12;        // absolute, per row
    double positive_rate = 1e-14;  // edges above this count for irreducibility
    double rank = 1e-10;           // relative pivot threshold in the linear solves
};

/// Validated irreducible generator of the background chain.
class Generator {
public:
    Generator() = default;

    [[nodiscard]] static Generator validate(const Matrix& rates, const ChainTolerances& tol = {});

    [[nodiscard]] int states() const noexcept { return static_cast<int>(rates_.rows()); }
    [[nodiscard]] const Matrix& rates() const noexcept { return rates_; }

    friend bool operator==(const Generator& a, const Generator& b) { return same_values(a.rates_, b.rates_); }

private:
    explicit Generator(Matrix rates) : rates_(std::move(rates)) {}
    Matrix rates_;
};

[[nodiscard]] Generator validate_generator(const Matrix& rates, const ChainTolerances& tol = {});

/// Solves [Q^T; 1^T] pi = [0; 1] in least squares.
[[nodiscard]] Vector stationary_distribution(const Generator& gen, const ChainTolerances& tol = {});

/// D = (Pi - Q)^{-1} - Pi with Pi = 1 pi^T.
[[nodiscard]] Matrix deviation_matrix(const Generator& gen, const ChainTolerances& tol = {});

/// Sigma = diag(pi) D + D^T diag(pi).
[[nodiscard]] Matrix modulation_covariance(const Generator& gen, const ChainTolerances& tol = {});

struct ChainSummary {
    Vector pi;
    Matrix deviation;
    Matrix sigma;
};

[[nodiscard]] ChainSummary summarize(const Generator& gen, const ChainTolerances& tol = {});

/// Piecewise-constant right-continuous path: states[i] holds on [times[i], times[i+1]).
struct ChainPath {
    std::vector<double> times;
    std::vector<int> states;
    double horizon = 0.0;

    [[nodiscard]] int state_at(double t) const;
    [[nodiscard]] std::size_t jumps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
};

/// Exact sampler of the chain with generator timescale * Q. Jump tables are
/// built once so that the same sampler serves many replications.
class ChainSampler {
public:
    ChainSampler(const Generator& gen, double timescale);

    [[nodiscard]] int states() const noexcept { return static_cast<int>(exit_rate_.size()); }
    [[nodiscard]] double exit_rate(int state) const noexcept { return exit_rate_[state]; }
    [[nodiscard]] const Vector& stationary() const noexcept { return pi_; }

    /// Draws a state from pi.
    [[nodiscard]] int draw_initial(Rng& rng) const;
    /// Draws the successor of `state` from the embedded jump chain.
    [[nodiscard]] int draw_next(int state, Rng& rng) const;

    [[nodiscard]] ChainPath sample(double horizon, Rng& rng, std::optional<int> initial_state = std::nullopt) const;

private:
    Vector pi_;
    std::vector<double> initial_cdf_;
    std::vector<double> exit_rate_;
    std::vector<std::vector<double>> jump_cdf_;
};

/// Initial state is drawn from pi unless fixed.
[[nodiscard]] ChainPath sample_chain_path(const Generator& gen, double timescale, double horizon, Rng& rng,
                                          std::optional<int> initial_state = std::nullopt);

/// Time spent in each state on [0, t].
[[nodiscard]] Vector occupation_time(const ChainPath& path, double t);

/// G(t) = integral over [0, t] of (indicator of the current state - pi).
[[nodiscard]] Vector occupation_deviation(const ChainPath& path, const Vector& pi, double t);

}  // namespace mmq
