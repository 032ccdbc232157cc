#pragma once

#include "mmq/network.hpp"
#include "mmq/simulate.hpp"
#include "mmq/verify.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mmq {

inline constexpr int kSchemaVersion = 1;

struct ScalingBlock {
    double alpha = 1.0;
    std::int64_t n = 100;
    std::vector<std::int64_t> n_list;
    InitRule init_rule = InitRule::Floor;
    Vector rho0;  // empty means zero

    friend bool operator==(const ScalingBlock& a, const ScalingBlock& b) {
        return a.alpha == b.alpha && a.n == b.n && a.n_list == b.n_list && a.init_rule == b.init_rule &&
               same_values(a.rho0, b.rho0);
    }
};

struct RunBlock {
    double horizon = 1.0;
    double grid_step = 0.01;
    std::size_t reps = 100;
    std::uint64_t seed = 1;
    unsigned worker_count = 0;  // 0 defers to MMQ_THREADS, then the hardware
    std::vector<double> check_times;
    double population_cap = 1e8;

    friend bool operator==(const RunBlock&, const RunBlock&) = default;
};

struct OutputBlock {
    std::string directory = "mmq-out";
    std::vector<std::string> formats{"csv", "json"};
    bool keep_raw = false;

    [[nodiscard]] bool wants(const std::string& format) const;

    friend bool operator==(const OutputBlock&, const OutputBlock&) = default;
};

/// Everything one CLI invocation needs. Exactly one of network and model3 is set.
struct RunConfig {
    int schema_version = kSchemaVersion;
    std::optional<NetworkSpec> network;
    std::optional<Model3Spec> model3;
    ScalingBlock scaling;
    RunBlock run;
    VerifyTolerances tolerance;
    double psd_tolerance = 1e-9;
    ReferenceOverrides overrides;
    OutputBlock output;

    /// The network block, or the reduction of the model3 block.
    [[nodiscard]] NetworkSpec spec() const;
    /// n_list when given, otherwise the single n.
    [[nodiscard]] std::vector<std::int64_t> ns() const;
    [[nodiscard]] VerifySettings verify_settings() const;

    friend bool operator==(const RunConfig& a, const RunConfig& b) {
        return a.schema_version == b.schema_version && a.network == b.network && a.model3 == b.model3 &&
               a.scaling == b.scaling && a.run == b.run && a.tolerance == b.tolerance &&
               a.psd_tolerance == b.psd_tolerance && a.overrides == b.overrides && a.output == b.output;
    }
};

[[nodiscard]] RunConfig parse_config(const std::filesystem::path& path);
[[nodiscard]] RunConfig parse_config_text(const std::string& text);
[[nodiscard]] RunConfig config_from_json(const nlohmann::ordered_json& doc);

/// Full config with every default filled in.
[[nodiscard]] nlohmann::ordered_json config_to_json(const RunConfig& config);
[[nodiscard]] std::string serialize_config(const RunConfig& config);

/// Network block alone, in the config layout (used by reduce-model3).
[[nodiscard]] nlohmann::ordered_json network_to_json(const NetworkSpec& spec);

}  // namespace mmq
