#include "oracles.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace mmq::oracle {

TwoStateChain symmetric_two_state(double q) {
    TwoStateChain out;
    out.pi = Vector::Constant(2, 0.5);
    out.deviation.resize(2, 2);
    out.deviation << 1, -1, -1, 1;
    out.deviation /= 4.0 * q;
    out.sigma = out.deviation;
    return out;
}

double mminf_variance(double lambda, double mu, double t) { return lambda / mu * (1.0 - std::exp(-mu * t)); }

Matrix lyapunov_constant(const Matrix& drift, const Matrix& diffusion, const Matrix& v0, double t) {
    const Eigen::Index L = drift.rows();
    const Eigen::Index n = L * L;
    const Matrix eye = Matrix::Identity(L, L);
    // Column-major vec: vec(M V) = (I (x) M) vec V, vec(V M^T) = (M (x) I) vec V.
    const Matrix k = Eigen::kroneckerProduct(eye, drift).eval() + Eigen::kroneckerProduct(drift, eye).eval();
    Matrix block = Matrix::Zero(n + 1, n + 1);
    block.topLeftCorner(n, n) = k * t;
    block.topRightCorner(n, 1) = Eigen::Map<const Vector>(diffusion.data(), n) * t;
    Vector z(n + 1);
    z << Eigen::Map<const Vector>(v0.data(), n), 1.0;
    const Vector vt = (block.exp() * z).head(n);
    return Eigen::Map<const Matrix>(vt.data(), L, L);
}

DeviationResidual deviation_residual(const Matrix& generator, const Vector& pi, const Matrix& deviation) {
    const Eigen::Index d = generator.rows();
    const Matrix Pi = Vector::Ones(d) * pi.transpose();
    return {(generator * deviation - (Pi - Matrix::Identity(d, d))).norm(),
            (pi.transpose() * deviation).cwiseAbs().maxCoeff()};
}

}  // namespace mmq::oracle
