#pragma once

#include "mmq/rng.hpp"

#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace mmq {

/// Worker count: explicit value if nonzero, else MMQ_THREADS, else hardware.
[[nodiscard]] unsigned resolve_workers(unsigned requested);

/// Runs body(rep, rng) for rep = 0..reps-1, each on its own stream derived
/// from the master seed. Results are returned in replication order, so any
/// reduction over them is independent of the worker count.
template <class Body>
auto run_replications(std::size_t reps, std::uint64_t master_seed, unsigned workers, Body&& body)
    -> std::vector<std::invoke_result_t<Body&, std::size_t, Rng&>> {
    using Result = std::invoke_result_t<Body&, std::size_t, Rng&>;
    std::vector<Result> results(reps);
    const unsigned pool = std::max(1u, std::min<unsigned>(resolve_workers(workers),
                                                          static_cast<unsigned>(std::max<std::size_t>(reps, 1))));

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned worker) {
        try {
            for (std::size_t rep = worker; rep < reps; rep += pool) {
                Rng rng = make_stream(master_seed, rep);
                results[rep] = body(rep, rng);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    if (pool == 1) {
        work(0);
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(pool);
        for (unsigned w = 0; w < pool; ++w) threads.emplace_back(work, w);
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace mmq
