#pragma once

#include "mmq/error.hpp"
#include "mmq/network.hpp"
#include "mmq/rng.hpp"

#include <catch_amalgamated.hpp>

#include <random>

namespace mmq::test {

/// Runs f and returns the ErrorCode it threw; fails the test if nothing was thrown.
template <class F>
ErrorCode thrown_code(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected mmq::Error");
    return ErrorCode::InvalidArgument;
}

inline Matrix two_state(double a, double b) {
    Matrix q(2, 2);
    q << -a, a, b, -b;
    return q;
}

/// Dense irreducible generator with off-diagonal rates in [lo, hi].
inline Matrix random_generator(int d, Rng& rng, double lo = 0.2, double hi = 2.0) {
    std::uniform_real_distribution<double> rate(lo, hi);
    Matrix q = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j)
            if (i != j) q(i, j) = rate(rng);
        q(i, i) = -q.row(i).sum();
    }
    return q;
}

/// Sparse irreducible generator: a directed cycle plus random extra edges.
inline Matrix random_sparse_generator(int d, Rng& rng) {
    std::uniform_real_distribution<double> rate(0.1, 3.0);
    std::bernoulli_distribution extra(0.3);
    Matrix q = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        q(i, (i + 1) % d) = rate(rng);
        for (int j = 0; j < d; ++j)
            if (j != i && j != (i + 1) % d && extra(rng)) q(i, j) = rate(rng);
    }
    for (int i = 0; i < d; ++i) q(i, i) = -(q.row(i).sum() - q(i, i));
    return q;
}

/// Queue 1 fed by lambda_1(J), served towards sink queue 2 at mu_12(J).
inline NetworkSpec sink_network(const Matrix& generator, const Vector& lambda1, const Vector& mu12) {
    const int d = static_cast<int>(generator.rows());
    RawNetwork raw;
    raw.generator = generator;
    raw.lambda = Matrix::Zero(2, d);
    raw.lambda.row(0) = lambda1.transpose();
    raw.mu = RateTensor(2, d);
    for (int i = 0; i < d; ++i) raw.mu(0, 1, i) = mu12(i);
    raw.sink = {false, true};
    return validate_network(raw);
}

inline Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace mmq::test
