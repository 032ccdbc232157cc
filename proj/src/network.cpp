#include "mmq/network.hpp"

#include "mmq/error.hpp"

#include <cmath>

namespace mmq {

namespace {

std::string entry(int k, int l, int i) {
    return "(" + std::to_string(k) + ", " + std::to_string(l) + ", state " + std::to_string(i) + ")";
}

void check_finite(double v, const std::string& where) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite value at " + where);
}

}  // namespace

bool NetworkSpec::is_absorbing(int queue) const {
    for (int i = 0; i < states(); ++i) {
        if (lambda(queue, i) != 0.0) return false;
        for (int l = 0; l < queues(); ++l)
            if (mu(queue, l, i) != 0.0) return false;
    }
    return true;
}

NetworkSpec validate_network(RawNetwork raw, const ChainTolerances& tol) {
    NetworkSpec spec;
    spec.gen = Generator::validate(raw.generator, tol);
    const int d = spec.gen.states();
    const int L = static_cast<int>(raw.lambda.rows());
    if (L < 2) throw Error(ErrorCode::TooFewQueues, "network has " + std::to_string(L) + " queue(s), needs at least 2");
    if (raw.lambda.cols() != d) {
        throw Error(ErrorCode::DimensionMismatch, "lambda has " + std::to_string(raw.lambda.cols()) +
                                                      " columns, generator has " + std::to_string(d) + " states");
    }
    if (raw.mu.queues() != L || raw.mu.states() != d) {
        throw Error(ErrorCode::DimensionMismatch, "mu must be " + std::to_string(L) + " x " + std::to_string(L) +
                                                      " x " + std::to_string(d));
    }
    if (raw.lambda_hat.size() == 0) raw.lambda_hat = Matrix::Zero(L, d);
    if (raw.mu_hat.queues() == 0) raw.mu_hat = RateTensor(L, d);
    if (raw.lambda_hat.rows() != L || raw.lambda_hat.cols() != d) {
        throw Error(ErrorCode::DimensionMismatch, "lambda_hat must be " + std::to_string(L) + " x " + std::to_string(d));
    }
    if (raw.mu_hat.queues() != L || raw.mu_hat.states() != d) {
        throw Error(ErrorCode::DimensionMismatch, "mu_hat must be " + std::to_string(L) + " x " + std::to_string(L) +
                                                      " x " + std::to_string(d));
    }
    if (raw.sink.empty()) raw.sink.assign(L, false);
    if (static_cast<int>(raw.sink.size()) != L) {
        throw Error(ErrorCode::DimensionMismatch, "sink flags must have one entry per queue");
    }

    for (int k = 0; k < L; ++k) {
        for (int i = 0; i < d; ++i) {
            check_finite(raw.lambda(k, i), "lambda" + entry(k, k, i));
            check_finite(raw.lambda_hat(k, i), "lambda_hat" + entry(k, k, i));
            if (raw.lambda(k, i) < 0.0) {
                throw Error(ErrorCode::NegativeRate, "lambda(" + std::to_string(k) + ", state " + std::to_string(i) +
                                                         ") = " + std::to_string(raw.lambda(k, i)));
            }
            for (int l = 0; l < L; ++l) {
                check_finite(raw.mu(k, l, i), "mu" + entry(k, l, i));
                check_finite(raw.mu_hat(k, l, i), "mu_hat" + entry(k, l, i));
                if (k == l && (raw.mu(k, l, i) != 0.0 || raw.mu_hat(k, l, i) != 0.0)) {
                    throw Error(ErrorCode::NonzeroSelfService, "mu" + entry(k, l, i) + " must be zero");
                }
                if (raw.mu(k, l, i) < 0.0) {
                    throw Error(ErrorCode::NegativeRate, "mu" + entry(k, l, i) + " = " + std::to_string(raw.mu(k, l, i)));
                }
            }
        }
    }
    spec.lambda = std::move(raw.lambda);
    spec.mu = std::move(raw.mu);
    spec.lambda_hat = std::move(raw.lambda_hat);
    spec.mu_hat = std::move(raw.mu_hat);
    spec.sink = std::move(raw.sink);
    for (int k = 0; k < L; ++k) {
        if (spec.sink[k] && !spec.is_absorbing(k)) {
            throw Error(ErrorCode::InvalidArgument, "queue " + std::to_string(k + 1) +
                                                        " is flagged as a sink but has arrivals or outgoing service");
        }
    }
    return spec;
}

Matrix drift_matrix(const Matrix& mu_pi) {
    const Eigen::Index L = mu_pi.rows();
    Matrix m = mu_pi.transpose();
    for (Eigen::Index k = 0; k < L; ++k) {
        double out = 0.0;
        for (Eigen::Index l = 0; l < L; ++l)
            if (l != k) out += mu_pi(k, l);
        m(k, k) = -out;
    }
    return m;
}

Matrix state_drift_matrix(const RateTensor& mu, int state) {
    return drift_matrix(mu.at_state(state));
}

AveragedRates averaged_rates(const NetworkSpec& spec, const ChainSummary& summary) {
    const int d = spec.states();
    const int L = spec.queues();
    if (summary.pi.size() != d) {
        throw Error(ErrorCode::DimensionMismatch, "chain summary has " + std::to_string(summary.pi.size()) +
                                                      " states, network has " + std::to_string(d));
    }
    AveragedRates avg;
    avg.lambda_pi = spec.lambda * summary.pi;
    avg.lambda_hat_pi = spec.lambda_hat * summary.pi;
    avg.mu_pi = Matrix::Zero(L, L);
    avg.mu_hat_pi = Matrix::Zero(L, L);
    for (int k = 0; k < L; ++k) {
        for (int l = 0; l < L; ++l) {
            for (int i = 0; i < d; ++i) {
                avg.mu_pi(k, l) += summary.pi(i) * spec.mu(k, l, i);
                avg.mu_hat_pi(k, l) += summary.pi(i) * spec.mu_hat(k, l, i);
            }
        }
    }
    avg.drift = drift_matrix(avg.mu_pi);
    return avg;
}

RoutingView routing_view(const NetworkSpec& spec, int state) {
    if (state < 0 || state >= spec.states()) {
        throw Error(ErrorCode::InvalidArgument, "state " + std::to_string(state) + " out of range");
    }
    const int L = spec.queues();
    RoutingView view;
    view.leave_rate = Vector::Zero(L);
    view.probability = Matrix::Zero(L, L);
    view.absorbing.assign(L, false);
    for (int k = 0; k < L; ++k) {
        for (int l = 0; l < L; ++l)
            if (l != k) view.leave_rate(k) += spec.mu(k, l, state);
        if (view.leave_rate(k) > 0.0) {
            for (int l = 0; l < L; ++l)
                if (l != k) view.probability(k, l) = spec.mu(k, l, state) / view.leave_rate(k);
        } else {
            view.absorbing[k] = true;
        }
    }
    return view;
}

Model3Spec validate_model3(const Matrix& generator, Vector lambda_star, Vector kappa_star, Vector mu_star,
                           const ChainTolerances& tol) {
    Model3Spec m3;
    m3.gen = Generator::validate(generator, tol);
    const int d = m3.gen.states();
    auto check = [d](const Vector& v, const char* name) {
        if (v.size() != d) {
            throw Error(ErrorCode::DimensionMismatch, std::string(name) + " needs " + std::to_string(d) + " entries");
        }
        for (int i = 0; i < d; ++i) {
            if (!std::isfinite(v(i)) || v(i) < 0.0) {
                throw Error(ErrorCode::NegativeRate, std::string(name) + "(" + std::to_string(i) + ") is negative");
            }
        }
    };
    check(lambda_star, "lambda_star");
    check(kappa_star, "kappa_star");
    check(mu_star, "mu_star");
    m3.lambda_star = std::move(lambda_star);
    m3.kappa_star = std::move(kappa_star);
    m3.mu_star = std::move(mu_star);
    return m3;
}

NetworkSpec reduce_model3(const Model3Spec& m3) {
    const int d = m3.states();
    const int L = d + 1;
    RawNetwork raw;
    raw.generator = m3.gen.rates();
    raw.lambda = Matrix::Zero(L, d);
    raw.mu = RateTensor(L, d);
    for (int k = 0; k < d; ++k) {
        raw.lambda(k, k) = m3.lambda_star(k);
        for (int i = 0; i < d; ++i) raw.mu(k, d, i) = m3.kappa_star(k) * m3.mu_star(i);
    }
    raw.sink.assign(L, false);
    raw.sink[d] = true;
    return validate_network(std::move(raw));
}

NetworkSpec split_arrival_classes(const Generator& gen, const Vector& lambda_a, const Vector& mu_a,
                                  const Matrix& routing) {
    const int d = gen.states();
    if (lambda_a.size() != d || mu_a.size() != d || routing.rows() != d || routing.cols() != d) {
        throw Error(ErrorCode::DimensionMismatch, "arrival, speed and routing inputs must match the chain");
    }
    for (int k = 0; k < d; ++k) {
        for (int i = 0; i < d; ++i) {
            const double p = routing(k, i);
            if (!(p >= 0.0 && p <= 1.0)) {
                throw Error(ErrorCode::ProbabilityOutOfRange, "p(" + std::to_string(k) + ", " + std::to_string(i) +
                                                                  ") = " + std::to_string(p));
            }
        }
    }
    const int L = d + 2;
    RawNetwork raw;
    raw.generator = gen.rates();
    raw.lambda = Matrix::Zero(L, d);
    raw.mu = RateTensor(L, d);
    for (int k = 0; k < d; ++k) {
        raw.lambda(k, k) = lambda_a(k);
        for (int i = 0; i < d; ++i) {
            raw.mu(k, d, i) = routing(k, i) * mu_a(i);
            raw.mu(k, d + 1, i) = (1.0 - routing(k, i)) * mu_a(i);
        }
    }
    raw.sink.assign(L, false);
    raw.sink[d] = raw.sink[d + 1] = true;
    return validate_network(std::move(raw));
}

}  // namespace mmq
