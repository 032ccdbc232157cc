#include "mmq/network.hpp"

#include "support.hpp"

using namespace mmq;
using mmq::test::thrown_code;
using mmq::test::two_state;
using mmq::test::vec;
using Catch::Approx;

namespace {

RawNetwork tandem_raw() {
    RawNetwork raw;
    raw.generator = two_state(1, 1);
    raw.lambda = Matrix::Zero(2, 2);
    raw.lambda.row(0) << 2, 4;
    raw.mu = RateTensor(2, 2);
    raw.mu(0, 1, 0) = 1.0;
    raw.mu(0, 1, 1) = 3.0;
    return raw;
}

}  // namespace

TEST_CASE("tandem with absorbing second queue validates", "[network]") {
    RawNetwork raw = tandem_raw();
    raw.sink = {false, true};
    const NetworkSpec spec = validate_network(raw);
    CHECK(spec.queues() == 2);
    CHECK(spec.states() == 2);
    CHECK(spec.is_absorbing(1));
    CHECK_FALSE(spec.is_absorbing(0));
    CHECK(spec.lambda_hat.isZero());
    CHECK(spec.mu_hat.at_state(1).isZero());
}

TEST_CASE("network validation errors", "[network]") {
    SECTION("one queue") {
        RawNetwork raw;
        raw.generator = two_state(1, 1);
        raw.lambda = Matrix::Ones(1, 2);
        raw.mu = RateTensor(1, 2);
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::TooFewQueues);
    }
    SECTION("self service") {
        RawNetwork raw = tandem_raw();
        raw.mu(0, 0, 0) = 0.5;
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::NonzeroSelfService);
    }
    SECTION("self service in the perturbation") {
        RawNetwork raw = tandem_raw();
        raw.mu_hat = RateTensor(2, 2);
        raw.mu_hat(1, 1, 0) = -0.1;
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::NonzeroSelfService);
    }
    SECTION("negative rate") {
        RawNetwork raw = tandem_raw();
        raw.lambda(1, 0) = -1;
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::NegativeRate);
    }
    SECTION("lambda rows") {
        RawNetwork raw = tandem_raw();
        raw.mu = RateTensor(3, 2);
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::DimensionMismatch);
    }
    SECTION("lambda columns") {
        RawNetwork raw = tandem_raw();
        raw.lambda = Matrix::Zero(2, 3);
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::DimensionMismatch);
    }
    SECTION("sink that is not absorbing") {
        RawNetwork raw = tandem_raw();
        raw.sink = {true, false};
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::InvalidArgument);
    }
    SECTION("sink flags of the wrong length") {
        RawNetwork raw = tandem_raw();
        raw.sink = {false, false, true};
        CHECK(thrown_code([&] { (void)validate_network(raw); }) == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("averaged rates", "[network]") {
    RawNetwork raw = tandem_raw();
    const NetworkSpec spec = validate_network(raw);
    const AveragedRates avg = averaged_rates(spec, summarize(spec.gen));
    CHECK(avg.lambda_pi(0) == Approx(3.0));
    CHECK(avg.lambda_pi(1) == Approx(0.0));
    CHECK(avg.mu_pi(0, 1) == Approx(2.0));
    Matrix m(2, 2);
    m << -2, 0, 2, 0;
    CHECK((avg.drift - m).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("single state averages equal raw rates", "[network]") {
    RawNetwork raw;
    raw.generator = Matrix::Zero(1, 1);
    raw.lambda = Matrix::Zero(3, 1);
    raw.lambda(0, 0) = 1.5;
    raw.mu = RateTensor(3, 1);
    raw.mu(0, 1, 0) = 0.5;
    raw.mu(1, 2, 0) = 0.25;
    const NetworkSpec spec = validate_network(raw);
    const AveragedRates avg = averaged_rates(spec, summarize(spec.gen));
    CHECK(avg.lambda_pi(0) == 1.5);
    CHECK(avg.mu_pi(0, 1) == 0.5);
    CHECK(avg.mu_pi(1, 2) == 0.25);
}

TEST_CASE("drift matrix layout", "[network]") {
    CHECK(drift_matrix(Matrix::Zero(3, 3)).isZero());
    Matrix cycle = Matrix::Zero(3, 3);
    cycle(0, 1) = cycle(1, 2) = cycle(2, 0) = 1.0;
    Matrix expected(3, 3);
    expected << -1, 0, 1, 1, -1, 0, 0, 1, -1;
    CHECK(drift_matrix(cycle) == expected);

    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int L = 2 + trial % 5;
        Matrix mu(L, L);
        for (int k = 0; k < L; ++k)
            for (int l = 0; l < L; ++l) mu(k, l) = k == l ? 0.0 : u(rng);
        CHECK((Vector::Ones(L).transpose() * drift_matrix(mu)).cwiseAbs().maxCoeff() < 1e-13);
    }
}

TEST_CASE("routing view", "[network]") {
    RawNetwork raw;
    raw.generator = Matrix::Zero(1, 1);
    raw.lambda = Matrix::Zero(3, 1);
    raw.lambda(0, 0) = 1.0;
    raw.mu = RateTensor(3, 1);
    raw.mu(0, 1, 0) = 2.0;
    raw.mu(0, 2, 0) = 2.0;
    const NetworkSpec spec = validate_network(raw);
    const RoutingView view = routing_view(spec, 0);
    CHECK(view.leave_rate(0) == 4.0);
    CHECK(view.probability(0, 1) == 0.5);
    CHECK(view.probability(0, 2) == 0.5);
    CHECK(view.probability.row(0).sum() == 1.0);
    CHECK(view.absorbing[1]);
    CHECK(view.absorbing[2]);
    CHECK(view.probability.row(1).isZero());
}

TEST_CASE("Model III reduction by substitution", "[network]") {
    const Model3Spec m3 = validate_model3(two_state(1, 1), vec({1, 2}), vec({3, 4}), vec({5, 6}));
    const NetworkSpec net = reduce_model3(m3);
    REQUIRE(net.queues() == 3);
    CHECK(net.lambda(0, 0) == 1.0);
    CHECK(net.lambda(0, 1) == 0.0);
    CHECK(net.lambda(1, 0) == 0.0);
    CHECK(net.lambda(1, 1) == 2.0);
    CHECK(net.lambda.row(2).isZero());
    CHECK(net.mu(0, 2, 0) == 15.0);
    CHECK(net.mu(0, 2, 1) == 18.0);
    CHECK(net.mu(1, 2, 0) == 20.0);
    CHECK(net.mu(1, 2, 1) == 24.0);
    CHECK(net.mu(0, 1, 0) == 0.0);
    CHECK(net.is_absorbing(2));
    CHECK(net.sink == std::vector<bool>{false, false, true});
    // The reduction is a fixed point of validation.
    RawNetwork raw{net.gen.rates(), net.lambda, net.mu, net.lambda_hat, net.mu_hat, net.sink};
    CHECK(validate_network(raw) == net);
}

TEST_CASE("Model III with one state is a plain M/M/infinity with sink", "[network]") {
    const Model3Spec m3 = validate_model3(Matrix::Zero(1, 1), vec({2}), vec({0.5}), vec({3}));
    const NetworkSpec net = reduce_model3(m3);
    CHECK(net.queues() == 2);
    CHECK(net.lambda(0, 0) == 2.0);
    CHECK(net.mu(0, 1, 0) == 1.5);
    CHECK(net.is_absorbing(1));
}

TEST_CASE("Model III validation", "[network]") {
    CHECK(thrown_code([] { (void)validate_model3(two_state(1, 1), vec({1, -2}), vec({1, 1}), vec({1, 1})); }) ==
          ErrorCode::NegativeRate);
    CHECK(thrown_code([] { (void)validate_model3(two_state(1, 1), vec({1}), vec({1, 1}), vec({1, 1})); }) ==
          ErrorCode::DimensionMismatch);
}

TEST_CASE("arrival class splitting", "[network]") {
    const Generator gen = validate_generator(two_state(1, 2));
    Matrix p(2, 2);
    p << 0.25, 1.0, 0.0, 0.5;
    const NetworkSpec net = split_arrival_classes(gen, vec({3, 4}), vec({2, 6}), p);
    REQUIRE(net.queues() == 4);
    CHECK(net.lambda(0, 0) == 3.0);
    CHECK(net.lambda(0, 1) == 0.0);
    CHECK(net.lambda(1, 1) == 4.0);
    CHECK(net.mu(0, 2, 0) == 0.5);   // p(1,1) mu_A(1)
    CHECK(net.mu(0, 3, 0) == 1.5);   // (1 - p(1,1)) mu_A(1)
    CHECK(net.mu(0, 2, 1) == 6.0);
    CHECK(net.mu(0, 3, 1) == 0.0);
    CHECK(net.mu(1, 2, 1) == 3.0);
    CHECK(net.is_absorbing(2));
    CHECK(net.is_absorbing(3));

    p(0, 0) = 1.5;
    CHECK(thrown_code([&] { (void)split_arrival_classes(gen, vec({3, 4}), vec({2, 6}), p); }) ==
          ErrorCode::ProbabilityOutOfRange);
}
