#pragma once

#include "mmq/network.hpp"
#include "mmq/rng.hpp"
#include "mmq/types.hpp"

namespace mmq {

struct FluidSolution {
    TimeGrid grid;
    VectorPath rho;
};

/// Classical RK4 for rho' = lambda_pi + M rho on a uniform grid of step h.
[[nodiscard]] FluidSolution fluid_limit(const AveragedRates& avg, const Vector& rho0, double horizon, double h);

/// Time derivatives rho', rho'', rho''' of the fluid path at one epoch; the
/// fluid ODE is linear so these follow from rho itself.
struct FluidJet {
    Vector value;
    Vector d1;
    Vector d2;
    Vector d3;
};

[[nodiscard]] FluidJet fluid_jet(const AveragedRates& avg, const Vector& rho);

/// Matrix exponential by scaling and squaring with a degree-13 Pade approximant.
[[nodiscard]] Matrix expm(const Matrix& a);

/// y = H(b, x): y(t) = b + x(t) + int_0^t M y(s) ds for x piecewise constant
/// between grid epochs. Exact per step through exp(M h).
[[nodiscard]] VectorPath integral_map_H(const Vector& b, const VectorPath& x, const Matrix& drift, const TimeGrid& grid);

/// Drift of the limit: lambda_hat_pi + Mhat rho(t), Mhat built from mu_hat_pi.
[[nodiscard]] VectorPath ou_drift(const AveragedRates& avg, const FluidSolution& fluid);

/// Covariance rate of the independent Poisson-stream Brownian motions.
[[nodiscard]] Matrix poisson_diffusion(const AveragedRates& avg, const Vector& rho);

/// Row k of W is lambda_k + sum_l mu_lk rho_l - sum_l mu_kl rho_k over states (L x d).
[[nodiscard]] Matrix modulation_loading(const NetworkSpec& spec, const Vector& rho);

/// W Sigma W^T.
[[nodiscard]] Matrix modulation_diffusion(const NetworkSpec& spec, const Matrix& sigma, const Vector& rho);

/// Which noise sources survive in the limit for a given alpha.
struct NoiseRegime {
    bool poisson;     // alpha >= 1
    bool modulation;  // alpha <= 1
};

[[nodiscard]] NoiseRegime noise_regime(double alpha);

[[nodiscard]] MatrixPath ou_diffusion(const NetworkSpec& spec, const AveragedRates& avg, const ChainSummary& summary,
                                      const FluidSolution& fluid, double alpha);

struct OUMoments {
    TimeGrid grid;
    VectorPath drift_b;
    MatrixPath diff_A;
    VectorPath mean;
    MatrixPath cov;
    NoiseRegime regime{true, true};
    double max_asymmetry = 0.0;  // largest |V - V^T| before symmetrization
};

struct MomentOptions {
    double psd_tolerance = 1e-9;
};

/// RK4 for m' = b + M m and V' = M V + V M^T + A(t). b and A are given on the
/// grid; midpoint values come from 4-point interpolation.
[[nodiscard]] OUMoments ou_moments(const VectorPath& drift_b, const MatrixPath& diff_A, const Matrix& drift,
                                   const Vector& m0, const Matrix& v0, const TimeGrid& grid,
                                   const MomentOptions& options = {});

/// Fluid -> drift -> diffusion -> moments for one network and alpha.
[[nodiscard]] OUMoments limit_moments(const NetworkSpec& spec, const ChainSummary& summary, const AveragedRates& avg,
                                      const FluidSolution& fluid, double alpha, const Vector& m0, const Matrix& v0,
                                      const MomentOptions& options = {});

/// Euler-Maruyama for dX = (b(t) + M X) dt + chol(A(t)) dB on the grid.
class OUSampler {
public:
    OUSampler(VectorPath drift_b, const MatrixPath& diff_A, Matrix drift, TimeGrid grid, double psd_tolerance = 1e-9);

    [[nodiscard]] VectorPath path(const Vector& x0, Rng& rng) const;
    /// Only the terminal value, without storing the path.
    [[nodiscard]] Vector terminal(const Vector& x0, Rng& rng) const;
    /// Terminal values of `count` paths advanced together, one per column.
    /// The draws differ from `count` successive calls to terminal().
    [[nodiscard]] Matrix terminal_batch(const Vector& x0, std::size_t count, Rng& rng) const;

private:
    template <class Visit>
    void run(const Vector& x0, Rng& rng, Visit&& visit) const;

    VectorPath drift_b_;
    MatrixPath chol_;
    Matrix drift_;
    TimeGrid grid_;
};

[[nodiscard]] VectorPath sample_ou_path(const VectorPath& drift_b, const MatrixPath& diff_A, const Matrix& drift,
                                        const Vector& x0, const TimeGrid& grid, Rng& rng);

/// Lower Cholesky factor of a PSD matrix, adding at most 1e-10 to the diagonal
/// when the plain factorization breaks down on a singular input.
[[nodiscard]] Matrix psd_cholesky(const Matrix& a, double psd_tolerance = 1e-9, int epoch = -1);

}  // namespace mmq
