#include "mmq/limits.hpp"

#include "mmq/error.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace mmq {

namespace {

void require_grid(std::size_t samples, const TimeGrid& grid, const char* what) {
    if (samples != grid.size()) {
        throw Error(ErrorCode::GridMismatch, std::string(what) + " has " + std::to_string(samples) +
                                                 " samples, grid has " + std::to_string(grid.size()));
    }
}

/// Value at the midpoint of cell g from neighbouring samples (cubic when both
/// neighbours exist, quadratic at the ends).
template <class T>
T midpoint(const std::vector<T>& f, std::size_t g) {
    const std::size_t last = f.size() - 1;
    if (last == 1) return T(0.5 * (f[0] + f[1]));
    if (g == 0) return T((3.0 * f[0] + 6.0 * f[1] - f[2]) / 8.0);
    if (g + 1 == last) return T((-f[g - 1] + 6.0 * f[g] + 3.0 * f[g + 1]) / 8.0);
    return T((-f[g - 1] + 9.0 * f[g] + 9.0 * f[g + 1] - f[g + 2]) / 16.0);
}

double min_eigenvalue(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

}  // namespace

FluidSolution fluid_limit(const AveragedRates& avg, const Vector& rho0, double horizon, double h) {
    const Eigen::Index L = avg.lambda_pi.size();
    if (rho0.size() != L) throw Error(ErrorCode::DimensionMismatch, "rho0 must have one entry per queue");
    if (!(h > 0.0) || horizon < h) throw Error(ErrorCode::InvalidArgument, "fluid step must satisfy 0 < h <= T");
    FluidSolution sol;
    sol.grid = TimeGrid::covering(horizon, h);
    sol.rho.reserve(sol.grid.size());
    sol.rho.push_back(rho0);
    const Matrix& m = avg.drift;
    const Vector& lam = avg.lambda_pi;
    Vector y = rho0;
    for (int g = 0; g < sol.grid.cells(); ++g) {
        const Vector k1 = lam + m * y;
        const Vector k2 = lam + m * (y + 0.5 * h * k1);
        const Vector k3 = lam + m * (y + 0.5 * h * k2);
        const Vector k4 = lam + m * (y + h * k3);
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        sol.rho.push_back(y);
    }
    return sol;
}

FluidJet fluid_jet(const AveragedRates& avg, const Vector& rho) {
    FluidJet jet;
    jet.value = rho;
    jet.d1 = avg.lambda_pi + avg.drift * rho;
    jet.d2 = avg.drift * jet.d1;
    jet.d3 = avg.drift * jet.d2;
    return jet;
}

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols()) throw Error(ErrorCode::DimensionMismatch, "expm needs a square matrix");
    const Eigen::Index n = a.rows();
    if (n == 0) return a;
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0, 129060195264000.0,
        10559470521600.0,    670442572800.0,      33522128640.0,      1323241920.0,       40840800.0,
        960960.0,            16380.0,             182.0,              1.0};
    constexpr double theta13 = 5.371920351148152;

    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    const Matrix s = a / std::ldexp(1.0, squarings);

    const Matrix id = Matrix::Identity(n, n);
    const Matrix s2 = s * s;
    const Matrix s4 = s2 * s2;
    const Matrix s6 = s4 * s2;
    const Matrix u_inner = s6 * (b[13] * s6 + b[11] * s4 + b[9] * s2) + b[7] * s6 + b[5] * s4 + b[3] * s2 + b[1] * id;
    const Matrix u = s * u_inner;
    const Matrix v = s6 * (b[12] * s6 + b[10] * s4 + b[8] * s2) + b[6] * s6 + b[4] * s4 + b[2] * s2 + b[0] * id;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

VectorPath integral_map_H(const Vector& b, const VectorPath& x, const Matrix& drift, const TimeGrid& grid) {
    require_grid(x.size(), grid, "input path");
    const Matrix step = expm(drift * grid.step());
    VectorPath y;
    y.reserve(x.size());
    y.push_back(b + x[0]);
    for (std::size_t g = 0; g + 1 < x.size(); ++g) y.push_back(step * y[g] + (x[g + 1] - x[g]));
    return y;
}

VectorPath ou_drift(const AveragedRates& avg, const FluidSolution& fluid) {
    const Matrix hat_drift = drift_matrix(avg.mu_hat_pi);
    VectorPath b;
    b.reserve(fluid.rho.size());
    for (const auto& rho : fluid.rho) b.push_back(avg.lambda_hat_pi + hat_drift * rho);
    return b;
}

Matrix poisson_diffusion(const AveragedRates& avg, const Vector& rho) {
    const Eigen::Index L = rho.size();
    Matrix a = Matrix::Zero(L, L);
    for (Eigen::Index k = 0; k < L; ++k) {
        a(k, k) += avg.lambda_pi(k);
        for (Eigen::Index l = 0; l < L; ++l) {
            if (l == k) continue;
            // Stream k -> l: variance rate mu_kl rho_k, entering X_k with - and X_l with +.
            const double rate = avg.mu_pi(k, l) * rho(k);
            a(k, k) += rate;
            a(l, l) += rate;
            a(k, l) -= rate;
            a(l, k) -= rate;
        }
    }
    return a;
}

Matrix modulation_loading(const NetworkSpec& spec, const Vector& rho) {
    const int d = spec.states();
    Matrix w(spec.queues(), d);
    for (int i = 0; i < d; ++i) w.col(i) = spec.lambda.col(i) + state_drift_matrix(spec.mu, i) * rho;
    return w;
}

Matrix modulation_diffusion(const NetworkSpec& spec, const Matrix& sigma, const Vector& rho) {
    const Matrix w = modulation_loading(spec, rho);
    return w * sigma * w.transpose();
}

NoiseRegime noise_regime(double alpha) {
    if (!(alpha > 0.0)) throw Error(ErrorCode::NonpositiveAlpha, "alpha = " + std::to_string(alpha));
    return {alpha >= 1.0, alpha <= 1.0};
}

MatrixPath ou_diffusion(const NetworkSpec& spec, const AveragedRates& avg, const ChainSummary& summary,
                        const FluidSolution& fluid, double alpha) {
    const NoiseRegime regime = noise_regime(alpha);
    const Eigen::Index L = spec.queues();
    MatrixPath out;
    out.reserve(fluid.rho.size());
    for (const auto& rho : fluid.rho) {
        if (rho.size() != L) throw Error(ErrorCode::DimensionMismatch, "fluid path does not match the network");
        Matrix a = Matrix::Zero(L, L);
        if (regime.poisson) a += poisson_diffusion(avg, rho);
        if (regime.modulation) a += modulation_diffusion(spec, summary.sigma, rho);
        out.push_back(std::move(a));
    }
    return out;
}

OUMoments ou_moments(const VectorPath& drift_b, const MatrixPath& diff_A, const Matrix& drift, const Vector& m0,
                     const Matrix& v0, const TimeGrid& grid, const MomentOptions& options) {
    require_grid(drift_b.size(), grid, "drift path");
    require_grid(diff_A.size(), grid, "diffusion path");
    const Eigen::Index L = drift.rows();
    if (m0.size() != L || v0.rows() != L || v0.cols() != L) {
        throw Error(ErrorCode::DimensionMismatch, "initial moments do not match the drift matrix");
    }
    for (std::size_t g = 0; g < diff_A.size(); ++g) {
        const double scale = std::max(1.0, diff_A[g].cwiseAbs().maxCoeff());
        if (min_eigenvalue(diff_A[g]) < -options.psd_tolerance * scale) {
            std::ostringstream msg;
            msg << "diffusion matrix at epoch " << g << " (t = " << grid.at(g) << ") has min eigenvalue "
                << min_eigenvalue(diff_A[g]);
            throw Error(ErrorCode::NonPSDDiffusion, msg.str());
        }
    }

    OUMoments out;
    out.grid = grid;
    out.drift_b = drift_b;
    out.diff_A = diff_A;
    out.mean.reserve(grid.size());
    out.cov.reserve(grid.size());
    const double h = grid.step();

    auto mean_rate = [&](const Vector& b, const Vector& m) -> Vector { return b + drift * m; };
    auto cov_rate = [&](const Matrix& a, const Matrix& v) -> Matrix {
        return drift * v + v * drift.transpose() + a;
    };

    Vector m = m0;
    Matrix v = 0.5 * (v0 + v0.transpose());
    out.mean.push_back(m);
    out.cov.push_back(v);
    for (std::size_t g = 0; g + 1 < grid.size(); ++g) {
        const Vector b_mid = midpoint(drift_b, g);
        const Matrix a_mid = midpoint(diff_A, g);

        const Vector km1 = mean_rate(drift_b[g], m);
        const Vector km2 = mean_rate(b_mid, m + 0.5 * h * km1);
        const Vector km3 = mean_rate(b_mid, m + 0.5 * h * km2);
        const Vector km4 = mean_rate(drift_b[g + 1], m + h * km3);
        m += (h / 6.0) * (km1 + 2.0 * km2 + 2.0 * km3 + km4);

        const Matrix kv1 = cov_rate(diff_A[g], v);
        const Matrix kv2 = cov_rate(a_mid, v + 0.5 * h * kv1);
        const Matrix kv3 = cov_rate(a_mid, v + 0.5 * h * kv2);
        const Matrix kv4 = cov_rate(diff_A[g + 1], v + h * kv3);
        v += (h / 6.0) * (kv1 + 2.0 * kv2 + 2.0 * kv3 + kv4);
        out.max_asymmetry = std::max(out.max_asymmetry, (v - v.transpose()).cwiseAbs().maxCoeff());
        v = 0.5 * (v + v.transpose()).eval();

        out.mean.push_back(m);
        out.cov.push_back(v);
    }
    return out;
}

OUMoments limit_moments(const NetworkSpec& spec, const ChainSummary& summary, const AveragedRates& avg,
                        const FluidSolution& fluid, double alpha, const Vector& m0, const Matrix& v0,
                        const MomentOptions& options) {
    OUMoments out = ou_moments(ou_drift(avg, fluid), ou_diffusion(spec, avg, summary, fluid, alpha), avg.drift, m0,
                               v0, fluid.grid, options);
    out.regime = noise_regime(alpha);
    return out;
}

Matrix psd_cholesky(const Matrix& a, double psd_tolerance, int epoch) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if (a.size() > 0 && min_eigenvalue(a) < -psd_tolerance * scale) {
        throw Error(ErrorCode::NonPSDDiffusion, "diffusion matrix at epoch " + std::to_string(epoch) +
                                                    " is not positive semidefinite");
    }
    const Eigen::Index n = a.rows();
    for (double jitter : {0.0, 1e-12, 1e-11, 1e-10}) {
        Eigen::LLT<Matrix> llt(a + jitter * Matrix::Identity(n, n));
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    throw Error(ErrorCode::NonPSDDiffusion, "Cholesky failed at epoch " + std::to_string(epoch) +
                                                " even with 1e-10 diagonal jitter");
}

OUSampler::OUSampler(VectorPath drift_b, const MatrixPath& diff_A, Matrix drift, TimeGrid grid, double psd_tolerance)
    : drift_b_(std::move(drift_b)), drift_(std::move(drift)), grid_(grid) {
    require_grid(drift_b_.size(), grid_, "drift path");
    require_grid(diff_A.size(), grid_, "diffusion path");
    chol_.reserve(diff_A.size());
    for (std::size_t g = 0; g < diff_A.size(); ++g)
        chol_.push_back(psd_cholesky(diff_A[g], psd_tolerance, static_cast<int>(g)));
}

template <class Visit>
void OUSampler::run(const Vector& x0, Rng& rng, Visit&& visit) const {
    const Eigen::Index L = drift_.rows();
    if (x0.size() != L) throw Error(ErrorCode::DimensionMismatch, "x0 does not match the drift matrix");
    const double h = grid_.step();
    const double root_h = std::sqrt(h);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x = x0;
    Vector xi(L);
    Vector incr(L);
    visit(std::size_t{0}, x);
    for (std::size_t g = 0; g + 1 < grid_.size(); ++g) {
        for (Eigen::Index k = 0; k < L; ++k) xi(k) = normal(rng);
        incr.noalias() = drift_ * x;
        incr += drift_b_[g];
        incr *= h;
        incr.noalias() += root_h * (chol_[g] * xi);
        x += incr;
        visit(g + 1, x);
    }
}

VectorPath OUSampler::path(const Vector& x0, Rng& rng) const {
    VectorPath out;
    out.reserve(grid_.size());
    run(x0, rng, [&](std::size_t, const Vector& x) { out.push_back(x); });
    return out;
}

Vector OUSampler::terminal(const Vector& x0, Rng& rng) const {
    Vector last;
    run(x0, rng, [&](std::size_t g, const Vector& x) {
        if (g + 1 == grid_.size()) last = x;
    });
    return last;
}

Matrix OUSampler::terminal_batch(const Vector& x0, std::size_t count, Rng& rng) const {
    const Eigen::Index L = drift_.rows();
    if (x0.size() != L) throw Error(ErrorCode::DimensionMismatch, "x0 does not match the drift matrix");
    const auto B = static_cast<Eigen::Index>(count);
    const double h = grid_.step();
    const double root_h = std::sqrt(h);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix x = x0.replicate(1, B);
    Matrix xi(L, B);
    Matrix incr(L, B);
    for (std::size_t g = 0; g + 1 < grid_.size(); ++g) {
        for (Eigen::Index c = 0; c < B; ++c)
            for (Eigen::Index k = 0; k < L; ++k) xi(k, c) = normal(rng);
        incr.noalias() = drift_ * x;
        incr.colwise() += drift_b_[g];
        x += h * incr;
        x.noalias() += root_h * (chol_[g] * xi);
    }
    return x;
}

VectorPath sample_ou_path(const VectorPath& drift_b, const MatrixPath& diff_A, const Matrix& drift, const Vector& x0,
                          const TimeGrid& grid, Rng& rng) {
    return OUSampler(drift_b, diff_A, drift, grid).path(x0, rng);
}

}  // namespace mmq
