#pragma once

#include "mmq/ctmc.hpp"
#include "mmq/types.hpp"

#include <vector>

namespace mmq {

/// Unvalidated arrays as read from a configuration. Rates are indexed
/// lambda(queue, state) and mu(from, to, state); hats default to zero when
/// left empty.
struct RawNetwork {
    Matrix generator;
    Matrix lambda;
    RateTensor mu;
    Matrix lambda_hat;
    RateTensor mu_hat;
    std::vector<bool> sink;
};

/// Model I network: L >= 2 infinite-server queues modulated by one chain.
struct NetworkSpec {
    Generator gen;
    Matrix lambda;        // L x d
    RateTensor mu;        // L x L x d, zero diagonal
    Matrix lambda_hat;    // L x d, any sign
    RateTensor mu_hat;    // L x L x d, zero diagonal
    std::vector<bool> sink;  // queues designated as absorbing departure sinks

    [[nodiscard]] int queues() const noexcept { return static_cast<int>(lambda.rows()); }
    [[nodiscard]] int states() const noexcept { return gen.states(); }
    /// No exogenous arrivals and no outgoing transfers in any state.
    [[nodiscard]] bool is_absorbing(int queue) const;

    friend bool operator==(const NetworkSpec& a, const NetworkSpec& b) {
        return a.gen == b.gen && same_values(a.lambda, b.lambda) && a.mu == b.mu &&
               same_values(a.lambda_hat, b.lambda_hat) && a.mu_hat == b.mu_hat && a.sink == b.sink;
    }
};

[[nodiscard]] NetworkSpec validate_network(RawNetwork raw, const ChainTolerances& tol = {});

struct AveragedRates {
    Vector lambda_pi;      // L
    Matrix mu_pi;          // L x L
    Vector lambda_hat_pi;  // L
    Matrix mu_hat_pi;      // L x L
    Matrix drift;          // L x L, columns sum to zero
};

[[nodiscard]] AveragedRates averaged_rates(const NetworkSpec& spec, const ChainSummary& summary);

/// M(k, l) = mu_pi(l, k) for l != k and M(k, k) = -sum_l mu_pi(k, l).
[[nodiscard]] Matrix drift_matrix(const Matrix& mu_pi);

/// Drift matrix of the unaveraged rates in one background state.
[[nodiscard]] Matrix state_drift_matrix(const RateTensor& mu, int state);

struct RoutingView {
    Vector leave_rate;           // mu_k(i) = sum_{l != k} mu_kl(i)
    Matrix probability;          // p_kl(i); zero rows for absorbing queues
    std::vector<bool> absorbing; // mu_k(i) == 0
};

[[nodiscard]] RoutingView routing_view(const NetworkSpec& spec, int state);

/// Single queue whose arrival rate, service requirement and server speed all
/// depend on the background state.
struct Model3Spec {
    Generator gen;
    Vector lambda_star;  // arrival rate per state
    Vector kappa_star;   // service-requirement rate per job type
    Vector mu_star;      // server speed per state

    [[nodiscard]] int states() const noexcept { return gen.states(); }

    friend bool operator==(const Model3Spec& a, const Model3Spec& b) {
        return a.gen == b.gen && same_values(a.lambda_star, b.lambda_star) &&
               same_values(a.kappa_star, b.kappa_star) && same_values(a.mu_star, b.mu_star);
    }
};

[[nodiscard]] Model3Spec validate_model3(const Matrix& generator, Vector lambda_star, Vector kappa_star,
                                         Vector mu_star, const ChainTolerances& tol = {});

/// d type queues plus one departure sink (queue d+1).
[[nodiscard]] NetworkSpec reduce_model3(const Model3Spec& m3);

/// Splits an arrival queue into one class queue per arrival state, routing to
/// queue d+1 with probability p(class, state) and to queue d+2 otherwise. Both
/// targets are returned as absorbing sinks.
[[nodiscard]] NetworkSpec split_arrival_classes(const Generator& gen, const Vector& lambda_a, const Vector& mu_a,
                                                const Matrix& routing);

}  // namespace mmq
