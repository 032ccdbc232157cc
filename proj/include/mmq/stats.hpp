#pragma once

#include "mmq/rng.hpp"
#include "mmq/types.hpp"

#include <span>
#include <vector>

namespace mmq::stats {

[[nodiscard]] double mean(std::span<const double> x);
/// Unbiased sample variance.
[[nodiscard]] double variance(std::span<const double> x);
/// Standard error of the mean.
[[nodiscard]] double mean_stderr(std::span<const double> x);
[[nodiscard]] double median(std::vector<double> x);

[[nodiscard]] Vector mean(const VectorPath& samples);
/// Unbiased sample covariance.
[[nodiscard]] Matrix covariance(const VectorPath& samples);
/// Entrywise standard error of the mean vector.
[[nodiscard]] Vector mean_stderr(const VectorPath& samples);

/// Entrywise bootstrap standard error of the sample covariance.
[[nodiscard]] Matrix bootstrap_covariance_stderr(const VectorPath& samples, int resamples, Rng& rng);
/// Bootstrap standard error of the sample variance.
[[nodiscard]] double bootstrap_variance_stderr(std::span<const double> x, int resamples, Rng& rng);

}  // namespace mmq::stats
