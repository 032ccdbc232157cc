#include "mmq/error.hpp"
#include "mmq/replicate.hpp"
#include "mmq/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace mmq {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::RowSumNonzero: return "RowSumNonzero";
        case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
        case ErrorCode::Reducible: return "Reducible";
        case ErrorCode::SingularSolve: return "SingularSolve";
        case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
        case ErrorCode::TooFewQueues: return "TooFewQueues";
        case ErrorCode::NegativeRate: return "NegativeRate";
        case ErrorCode::NonzeroSelfService: return "NonzeroSelfService";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
        case ErrorCode::NonpositiveAlpha: return "NonpositiveAlpha";
        case ErrorCode::NegativeEffectiveRate: return "NegativeEffectiveRate";
        case ErrorCode::ExplodedPopulation: return "ExplodedPopulation";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::NonPSDDiffusion: return "NonPSDDiffusion";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnknownField: return "UnknownField";
        case ErrorCode::MissingRequired: return "MissingRequired";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

TimeGrid::TimeGrid(double step, int cells) : step_(step), cells_(cells) {
    if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidArgument, "grid step must be positive");
    if (cells < 0) throw Error(ErrorCode::InvalidArgument, "grid cell count must be nonnegative");
}

TimeGrid TimeGrid::covering(double horizon, double step) {
    if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "grid step must be positive");
    if (!(horizon >= 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be nonnegative");
    const double ratio = horizon / step;
    const double cells = std::round(ratio);
    if (std::abs(ratio - cells) > 1e-9 * std::max(1.0, ratio)) {
        throw Error(ErrorCode::GridMismatch, "horizon " + std::to_string(horizon) +
                                                 " is not a multiple of grid step " + std::to_string(step));
    }
    return TimeGrid(step, static_cast<int>(cells));
}

int TimeGrid::index_of(double t) const noexcept {
    const double ratio = t / step_;
    const double g = std::round(ratio);
    if (g < 0 || g > cells_ || std::abs(ratio - g) > 1e-9 * std::max(1.0, ratio)) return -1;
    return static_cast<int>(g);
}

Matrix RateTensor::at_state(int state) const {
    Matrix m(queues_, queues_);
    for (int k = 0; k < queues_; ++k)
        for (int l = 0; l < queues_; ++l) m(k, l) = (*this)(k, l, state);
    return m;
}

}  // namespace mmq

namespace mmq {

unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("MMQ_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace mmq
