#include "mmq/ctmc.hpp"

#include "support.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace mmq;
using mmq::test::thrown_code;
using mmq::test::two_state;
using Catch::Approx;

namespace {

/// D from its integral form: int_0^T e^{Qs} ds read off the block exponential
/// of [[Q, I], [0, 0]], minus T Pi. Accurate once e^{-gap T} is negligible.
Matrix deviation_by_integral(const Matrix& q, const Vector& pi, double horizon) {
    const int d = static_cast<int>(q.rows());
    Matrix block = Matrix::Zero(2 * d, 2 * d);
    block.topLeftCorner(d, d) = q * horizon;
    block.topRightCorner(d, d) = Matrix::Identity(d, d) * horizon;
    const Matrix e = block.exp();
    const Matrix Pi = Vector::Ones(d) * pi.transpose();
    return e.topRightCorner(d, d) - horizon * Pi;
}

/// Stationary law from the left null vector of Q via SVD.
Vector pi_by_svd(const Matrix& q) {
    Eigen::JacobiSVD<Matrix> svd(q.transpose(), Eigen::ComputeFullV);
    Vector v = svd.matrixV().col(q.rows() - 1);
    return v / v.sum();
}

}  // namespace

TEST_CASE("two-state chain closed forms", "[ctmc]") {
    for (double q : {0.25, 1.0, 3.0}) {
        const Generator gen = validate_generator(two_state(q, q));
        const ChainSummary s = summarize(gen);
        CHECK(s.pi(0) == Approx(0.5).margin(1e-14));
        CHECK(s.pi(1) == Approx(0.5).margin(1e-14));
        Matrix expected(2, 2);
        expected << 1, -1, -1, 1;
        expected /= 4.0 * q;
        CHECK((s.deviation - expected).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((s.sigma - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("asymmetric two-state chain", "[ctmc]") {
    const double a = 0.7, b = 2.3, s = a + b;
    const ChainSummary out = summarize(validate_generator(two_state(a, b)));
    CHECK(out.pi(0) == Approx(b / s).epsilon(1e-13));
    CHECK(out.pi(1) == Approx(a / s).epsilon(1e-13));
    Matrix d(2, 2);
    d << a, -a, -b, b;
    d /= s * s;
    CHECK((out.deviation - d).cwiseAbs().maxCoeff() < 1e-12);
    // Sigma(1,1) = 2 pi_1 D_11 = 2ab / s^3.
    CHECK(out.sigma(0, 0) == Approx(2 * a * b / (s * s * s)).epsilon(1e-12));
}

TEST_CASE("birth-death stationary law matches detailed balance", "[ctmc]") {
    const int d = 6;
    Matrix q = Matrix::Zero(d, d);
    Vector up(d - 1), down(d - 1);
    for (int i = 0; i < d - 1; ++i) {
        up(i) = 1.0 + 0.3 * i;
        down(i) = 2.0 - 0.2 * i;
        q(i, i + 1) = up(i);
        q(i + 1, i) = down(i);
    }
    for (int i = 0; i < d; ++i) q(i, i) = -q.row(i).sum();
    Vector expected(d);
    expected(0) = 1.0;
    for (int i = 1; i < d; ++i) expected(i) = expected(i - 1) * up(i - 1) / down(i - 1);
    expected /= expected.sum();
    const Vector pi = stationary_distribution(validate_generator(q));
    CHECK((pi - expected).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("deviation matrix agrees with the integral oracle", "[ctmc]") {
    Rng rng(7);
    for (int d : {2, 3, 5, 8}) {
        const Matrix q = test::random_generator(d, rng);
        const Generator gen = validate_generator(q);
        const Vector pi = stationary_distribution(gen);
        CHECK((pi - pi_by_svd(q)).cwiseAbs().maxCoeff() < 1e-12);
        const Matrix oracle = deviation_by_integral(q, pi, 80.0);
        CHECK((deviation_matrix(gen) - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("deviation matrix and covariance invariants on random chains", "[ctmc][property]") {
    Rng rng(2024);
    for (int trial = 0; trial < 60; ++trial) {
        const int d = 2 + trial % 9;
        const Matrix q = trial % 2 ? test::random_generator(d, rng) : test::random_sparse_generator(d, rng);
        const Generator gen = validate_generator(q);
        const ChainSummary s = summarize(gen);
        const Matrix Pi = Vector::Ones(d) * s.pi.transpose();
        INFO("trial " << trial << " d=" << d);
        CHECK(std::abs(s.pi.sum() - 1.0) < 1e-12);
        CHECK(s.pi.minCoeff() > 0.0);
        CHECK((s.pi.transpose() * q).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((q * s.deviation - (Pi - Matrix::Identity(d, d))).norm() < 1e-9);
        CHECK((s.pi.transpose() * s.deviation).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((s.deviation * Vector::Ones(d)).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((s.sigma * Vector::Ones(d)).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(s.sigma);
        CHECK(eig.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("single-state chain is trivial", "[ctmc]") {
    const ChainSummary s = summarize(validate_generator(Matrix::Zero(1, 1)));
    CHECK(s.pi(0) == 1.0);
    CHECK(s.deviation(0, 0) == Approx(0.0).margin(1e-15));
    CHECK(s.sigma(0, 0) == Approx(0.0).margin(1e-15));
}

TEST_CASE("generator validation errors", "[ctmc]") {
    Matrix bad_sum = two_state(1, 1);
    bad_sum(0, 0) = -0.9;
    CHECK(thrown_code([&] { (void)validate_generator(bad_sum); }) == ErrorCode::RowSumNonzero);

    Matrix negative(2, 2);
    negative << 1, -1, 1, -1;
    CHECK(thrown_code([&] { (void)validate_generator(negative); }) == ErrorCode::NegativeOffDiagonal);

    Matrix reducible = Matrix::Zero(3, 3);
    reducible << -1, 1, 0, 1, -1, 0, 0, 0, 0;
    CHECK(thrown_code([&] { (void)validate_generator(reducible); }) == ErrorCode::Reducible);

    Matrix absorbing(2, 2);
    absorbing << -1, 1, 0, 0;
    CHECK(thrown_code([&] { (void)validate_generator(absorbing); }) == ErrorCode::Reducible);

    CHECK(thrown_code([&] { (void)validate_generator(Matrix::Zero(2, 3)); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("chain sampler respects timescale and stationarity", "[ctmc]") {
    const Generator gen = validate_generator(two_state(1.0, 3.0));
    const ChainSampler fast(gen, 50.0);
    CHECK(fast.exit_rate(0) == Approx(50.0));
    CHECK(fast.exit_rate(1) == Approx(150.0));

    Rng rng(3);
    const ChainPath path = fast.sample(200.0, rng);
    REQUIRE(path.times.front() == 0.0);
    for (std::size_t i = 1; i < path.times.size(); ++i) {
        REQUIRE(path.times[i] > path.times[i - 1]);
        REQUIRE(path.states[i] != path.states[i - 1]);
    }
    const Vector occ = occupation_time(path, 200.0);
    CHECK(occ.sum() == Approx(200.0).epsilon(1e-12));
    // pi = (0.75, 0.25); the long-run fraction is within a few percent.
    CHECK(occ(0) / 200.0 == Approx(0.75).margin(0.01));
    // Expected jumps: 2 * horizon * timescale / (mean cycle 1 + 1/3).
    CHECK(static_cast<double>(path.jumps()) == Approx(2 * 200.0 * 50.0 / (4.0 / 3.0)).epsilon(0.03));
}

TEST_CASE("occupation helpers", "[ctmc]") {
    ChainPath path;
    path.times = {0.0, 1.0, 2.5};
    path.states = {0, 1, 0};
    path.horizon = 4.0;
    CHECK(path.state_at(0.0) == 0);
    CHECK(path.state_at(1.0) == 1);
    CHECK(path.state_at(2.4) == 1);
    CHECK(path.state_at(4.0) == 0);
    const Vector occ = occupation_time(path, 3.0);
    CHECK(occ(0) == Approx(1.5));
    CHECK(occ(1) == Approx(1.5));
    const Vector dev = occupation_deviation(path, test::vec({0.5, 0.5}), 3.0);
    CHECK(dev.cwiseAbs().maxCoeff() < 1e-15);
    CHECK(thrown_code([&] { (void)occupation_time(path, 4.5); }) == ErrorCode::TimeOutOfRange);
    CHECK(thrown_code([&] { (void)occupation_time(path, -0.1); }) == ErrorCode::TimeOutOfRange);
}

TEST_CASE("chain sampling is reproducible per seed", "[ctmc]") {
    const Generator gen = validate_generator(test::two_state(2.0, 1.0));
    Rng a(99), b(99), c(100);
    const ChainPath pa = sample_chain_path(gen, 10.0, 5.0, a);
    const ChainPath pb = sample_chain_path(gen, 10.0, 5.0, b);
    const ChainPath pc = sample_chain_path(gen, 10.0, 5.0, c);
    CHECK(pa.times == pb.times);
    CHECK(pa.states == pb.states);
    CHECK(pa.times != pc.times);
}
