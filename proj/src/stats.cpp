#include "mmq/stats.hpp"

#include "mmq/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mmq::stats {

namespace {

void require_samples(std::size_t n, std::size_t needed) {
    if (n < needed) {
        throw Error(ErrorCode::InvalidArgument, "need at least " + std::to_string(needed) + " samples, got " +
                                                    std::to_string(n));
    }
}

}  // namespace

double mean(std::span<const double> x) {
    require_samples(x.size(), 1);
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    require_samples(x.size(), 2);
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) acc += (v - m) * (v - m);
    return acc / static_cast<double>(x.size() - 1);
}

double mean_stderr(std::span<const double> x) {
    return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double median(std::vector<double> x) {
    require_samples(x.size(), 1);
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
    const double upper = x[mid];
    if (x.size() % 2 == 1) return upper;
    const double lower = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

Vector mean(const VectorPath& samples) {
    require_samples(samples.size(), 1);
    Vector acc = Vector::Zero(samples.front().size());
    for (const auto& s : samples) acc += s;
    return acc / static_cast<double>(samples.size());
}

Matrix covariance(const VectorPath& samples) {
    require_samples(samples.size(), 2);
    const Vector m = mean(samples);
    Matrix acc = Matrix::Zero(m.size(), m.size());
    for (const auto& s : samples) {
        const Vector c = s - m;
        acc.noalias() += c * c.transpose();
    }
    return acc / static_cast<double>(samples.size() - 1);
}

Vector mean_stderr(const VectorPath& samples) {
    return (covariance(samples).diagonal() / static_cast<double>(samples.size())).cwiseSqrt();
}

Matrix bootstrap_covariance_stderr(const VectorPath& samples, int resamples, Rng& rng) {
    require_samples(samples.size(), 2);
    const std::size_t n = samples.size();
    const Eigen::Index dim = samples.front().size();
    std::uniform_int_distribution<std::size_t> index(0, n - 1);
    Matrix sum = Matrix::Zero(dim, dim);
    Matrix sum_sq = Matrix::Zero(dim, dim);
    // Center once so the resampled second moments stay well conditioned.
    const Vector center = mean(samples);
    VectorPath centered;
    centered.reserve(n);
    for (const auto& s : samples) centered.push_back(s - center);
    Vector first(dim);
    Matrix second(dim, dim);
    const double nd = static_cast<double>(n);
    for (int r = 0; r < resamples; ++r) {
        first.setZero();
        second.setZero();
        for (std::size_t i = 0; i < n; ++i) {
            const Vector& s = centered[index(rng)];
            first += s;
            second.noalias() += s * s.transpose();
        }
        const Matrix c = (second - first * first.transpose() / nd) / (nd - 1.0);
        sum += c;
        sum_sq += c.cwiseProduct(c);
    }
    const double b = static_cast<double>(resamples);
    const Matrix var = (sum_sq - sum.cwiseProduct(sum) / b) / (b - 1.0);
    return var.cwiseMax(0.0).cwiseSqrt();
}

double bootstrap_variance_stderr(std::span<const double> x, int resamples, Rng& rng) {
    VectorPath as_vectors;
    as_vectors.reserve(x.size());
    for (double v : x) as_vectors.push_back(Vector::Constant(1, v));
    return bootstrap_covariance_stderr(as_vectors, resamples, rng)(0, 0);
}

}  // namespace mmq::stats
