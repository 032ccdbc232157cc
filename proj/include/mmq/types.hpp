#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace mmq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Values of a vector-valued function sampled on a time grid.
using VectorPath = std::vector<Vector>;
/// Values of a matrix-valued function sampled on a time grid.
using MatrixPath = std::vector<Matrix>;

using Population = std::vector<std::int64_t>;

/// Exact equality that tolerates differing shapes (Eigen asserts on those).
template <class A, class B>
[[nodiscard]] bool same_values(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.derived().array() == b.derived().array()).all();
}

/// Uniform epochs 0, h, 2h, ..., cells*h.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double step, int cells);

    /// Grid covering [0, horizon]; horizon must be an integer multiple of step.
    static TimeGrid covering(double horizon, double step);

    [[nodiscard]] double step() const noexcept { return step_; }
    [[nodiscard]] int cells() const noexcept { return cells_; }
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(cells_) + 1; }
    [[nodiscard]] double horizon() const noexcept { return step_ * cells_; }
    [[nodiscard]] double at(std::size_t g) const noexcept { return step_ * static_cast<double>(g); }
    /// Nearest epoch index for t, or -1 when t is not (within 1e-9 relative) on the grid.
    [[nodiscard]] int index_of(double t) const noexcept;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double step_ = 1.0;
    int cells_ = 0;
};

/// Three-index rate array r(from, to, state) as used for mu and mu_hat.
class RateTensor {
public:
    RateTensor() = default;
    RateTensor(int queues, int states)
        : queues_(queues), states_(states),
          data_(static_cast<std::size_t>(queues) * queues * states, 0.0) {}

    [[nodiscard]] int queues() const noexcept { return queues_; }
    [[nodiscard]] int states() const noexcept { return states_; }

    double& operator()(int from, int to, int state) { return data_[index(from, to, state)]; }
    double operator()(int from, int to, int state) const { return data_[index(from, to, state)]; }

    /// L x L slice for one background state.
    [[nodiscard]] Matrix at_state(int state) const;

    friend bool operator==(const RateTensor&, const RateTensor&) = default;

private:
    [[nodiscard]] std::size_t index(int from, int to, int state) const noexcept {
        return (static_cast<std::size_t>(from) * queues_ + to) * states_ + state;
    }

    int queues_ = 0;
    int states_ = 0;
    std::vector<double> data_;
};

}  // namespace mmq
