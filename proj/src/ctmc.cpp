#include "mmq/ctmc.hpp"

#include "mmq/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace mmq {

namespace {

std::vector<bool> reachable(const Matrix& rates, double threshold, bool reverse) {
    const int d = static_cast<int>(rates.rows());
    std::vector<bool> seen(d, false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        for (int j = 0; j < d; ++j) {
            if (i == j || seen[j]) continue;
            const double rate = reverse ? rates(j, i) : rates(i, j);
            if (rate > threshold) {
                seen[j] = true;
                stack.push_back(j);
            }
        }
    }
    return seen;
}

std::vector<double> cumulative(const std::vector<double>& weights) {
    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        cdf[i] = acc;
    }
    return cdf;
}

int draw_from_cdf(const std::vector<double>& cdf, Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, cdf.back());
    const double u = unif(rng);
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

Generator Generator::validate(const Matrix& rates, const ChainTolerances& tol) {
    if (rates.rows() != rates.cols() || rates.rows() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "generator must be a nonempty square matrix");
    }
    const int d = static_cast<int>(rates.rows());
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (!std::isfinite(rates(i, j))) {
                throw Error(ErrorCode::InvalidArgument, "non-finite rate at (" + std::to_string(i) + ", " +
                                                            std::to_string(j) + ")");
            }
            if (i != j && rates(i, j) < 0.0) {
                throw Error(ErrorCode::NegativeOffDiagonal,
                            "entry (" + std::to_string(i) + ", " + std::to_string(j) + ") is negative");
            }
        }
        const double sum = rates.row(i).sum();
        if (std::abs(sum) > tol.row_sum) {
            std::ostringstream msg;
            msg << "row " << i << " sums to " << sum;
            throw Error(ErrorCode::RowSumNonzero, msg.str());
        }
    }
    const auto forward = reachable(rates, tol.positive_rate, false);
    const auto backward = reachable(rates, tol.positive_rate, true);
    for (int i = 0; i < d; ++i) {
        if (!forward[i] || !backward[i]) {
            throw Error(ErrorCode::Reducible, "state " + std::to_string(i) +
                                                  " is not in the communicating class of state 0");
        }
    }
    return Generator(rates);
}

Generator validate_generator(const Matrix& rates, const ChainTolerances& tol) {
    return Generator::validate(rates, tol);
}

Vector stationary_distribution(const Generator& gen, const ChainTolerances& tol) {
    const int d = gen.states();
    Matrix system(d + 1, d);
    system.topRows(d) = gen.rates().transpose();
    system.row(d).setOnes();
    Vector rhs = Vector::Zero(d + 1);
    rhs(d) = 1.0;

    Eigen::ColPivHouseholderQR<Matrix> qr(system);
    qr.setThreshold(tol.rank);
    if (qr.rank() < d) throw Error(ErrorCode::SingularSolve, "stationary system is rank deficient");
    Vector pi = qr.solve(rhs);
    return pi / pi.sum();
}

Matrix deviation_matrix(const Generator& gen, const ChainTolerances& tol) {
    const Vector pi = stationary_distribution(gen, tol);
    const int d = gen.states();
    const Matrix ergodic = Vector::Ones(d) * pi.transpose();
    Eigen::FullPivLU<Matrix> lu(ergodic - gen.rates());
    lu.setThreshold(tol.rank);
    if (!lu.isInvertible()) throw Error(ErrorCode::SingularSolve, "Pi - Q is singular");
    return lu.inverse() - ergodic;
}

Matrix modulation_covariance(const Generator& gen, const ChainTolerances& tol) {
    return summarize(gen, tol).sigma;
}

ChainSummary summarize(const Generator& gen, const ChainTolerances& tol) {
    ChainSummary s;
    s.pi = stationary_distribution(gen, tol);
    s.deviation = deviation_matrix(gen, tol);
    const Matrix weighted = s.pi.asDiagonal() * s.deviation;
    s.sigma = weighted + weighted.transpose();
    return s;
}

int ChainPath::state_at(double t) const {
    if (t < 0.0 || t > horizon) throw Error(ErrorCode::TimeOutOfRange, "t = " + std::to_string(t));
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    return states[static_cast<std::size_t>(it - times.begin()) - 1];
}

ChainSampler::ChainSampler(const Generator& gen, double timescale) {
    if (!(timescale > 0.0)) throw Error(ErrorCode::InvalidArgument, "chain timescale must be positive");
    const int d = gen.states();
    pi_ = stationary_distribution(gen);
    initial_cdf_ = cumulative(std::vector<double>(pi_.data(), pi_.data() + d));
    exit_rate_.resize(d);
    jump_cdf_.resize(d);
    for (int i = 0; i < d; ++i) {
        exit_rate_[i] = -gen.rates()(i, i) * timescale;
        std::vector<double> weights(d, 0.0);
        for (int j = 0; j < d; ++j)
            if (j != i) weights[j] = gen.rates()(i, j);
        jump_cdf_[i] = cumulative(weights);
    }
}

int ChainSampler::draw_initial(Rng& rng) const {
    if (initial_cdf_.size() == 1) return 0;
    return draw_from_cdf(initial_cdf_, rng);
}

int ChainSampler::draw_next(int state, Rng& rng) const {
    const auto& cdf = jump_cdf_[state];
    if (cdf.size() == 2) return 1 - state;
    return draw_from_cdf(cdf, rng);
}

ChainPath ChainSampler::sample(double horizon, Rng& rng, std::optional<int> initial_state) const {
    if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
    ChainPath path;
    path.horizon = horizon;
    int state = initial_state ? *initial_state : draw_initial(rng);
    if (state < 0 || state >= states()) throw Error(ErrorCode::InvalidArgument, "initial state out of range");
    path.times.push_back(0.0);
    path.states.push_back(state);
    std::exponential_distribution<double> unit(1.0);
    double t = 0.0;
    while (exit_rate_[state] > 0.0) {
        t += unit(rng) / exit_rate_[state];
        if (t > horizon) break;
        state = draw_next(state, rng);
        path.times.push_back(t);
        path.states.push_back(state);
    }
    return path;
}

ChainPath sample_chain_path(const Generator& gen, double timescale, double horizon, Rng& rng,
                            std::optional<int> initial_state) {
    return ChainSampler(gen, timescale).sample(horizon, rng, initial_state);
}

Vector occupation_time(const ChainPath& path, double t) {
    if (t < 0.0 || t > path.horizon) {
        throw Error(ErrorCode::TimeOutOfRange, "t = " + std::to_string(t) + " outside [0, " +
                                                   std::to_string(path.horizon) + "]");
    }
    const int d = path.states.empty() ? 0 : *std::max_element(path.states.begin(), path.states.end()) + 1;
    Vector occ = Vector::Zero(d);
    for (std::size_t i = 0; i < path.times.size() && path.times[i] < t; ++i) {
        const double end = i + 1 < path.times.size() ? std::min(path.times[i + 1], t) : t;
        occ(path.states[i]) += end - path.times[i];
    }
    return occ;
}

Vector occupation_deviation(const ChainPath& path, const Vector& pi, double t) {
    Vector occ = occupation_time(path, t);
    if (occ.size() > pi.size()) throw Error(ErrorCode::DimensionMismatch, "path visits states beyond pi");
    Vector full = Vector::Zero(pi.size());
    full.head(occ.size()) = occ;
    return full - pi * t;
}

}  // namespace mmq
