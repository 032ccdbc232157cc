#include "mmq/io.hpp"

#include "mmq/error.hpp"

#include <cstdio>
#include <fstream>

namespace mmq {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<std::string> numbered(std::vector<std::string> head, const std::string& stem, int count) {
    for (int k = 1; k <= count; ++k) head.push_back(stem + std::to_string(k));
    return head;
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out = open_for_write(path);
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
        out << '\n';
    }
    finish(out, path);
}

std::vector<std::string> fluid_header(int queues) { return numbered({"t"}, "rho_", queues); }

std::vector<std::string> trajectory_header(int queues) { return numbered({"t", "j_state"}, "q_", queues); }

std::vector<std::string> moments_header(int queues) {
    auto head = numbered({"t"}, "m_", queues);
    for (int k = 1; k <= queues; ++k)
        for (int l = k; l <= queues; ++l) head.push_back(queues < 10 ? "V_" + std::to_string(k) + std::to_string(l)
                                          : "V_" + std::to_string(k) + "_" + std::to_string(l));
    return head;
}

void write_trajectory_csv(const std::filesystem::path& path, const TrajectoryBundle& bundle) {
    const int L = static_cast<int>(bundle.initial.size());
    std::vector<std::vector<double>> rows;
    rows.reserve(bundle.queue.size());
    for (std::size_t g = 0; g < bundle.queue.size(); ++g) {
        std::vector<double> row{bundle.grid.at(g), static_cast<double>(bundle.chain_state[g] + 1)};
        for (int k = 0; k < L; ++k) row.push_back(static_cast<double>(bundle.queue[g][static_cast<std::size_t>(k)]));
        rows.push_back(std::move(row));
    }
    write_csv(path, trajectory_header(L), rows);
}

void write_fluid_csv(const std::filesystem::path& path, const FluidSolution& fluid, int queues) {
    std::vector<std::vector<double>> rows;
    for (std::size_t g = 0; g < fluid.rho.size(); ++g) {
        std::vector<double> row{fluid.grid.at(g)};
        for (int k = 0; k < queues; ++k) row.push_back(fluid.rho[g](k));
        rows.push_back(std::move(row));
    }
    write_csv(path, fluid_header(queues), rows);
}

void write_moments_csv(const std::filesystem::path& path, const OUMoments& moments, int queues) {
    std::vector<std::vector<double>> rows;
    for (std::size_t g = 0; g < moments.mean.size(); ++g) {
        std::vector<double> row{moments.grid.at(g)};
        for (int k = 0; k < queues; ++k) row.push_back(moments.mean[g](k));
        for (int k = 0; k < queues; ++k)
            for (int l = k; l < queues; ++l) row.push_back(moments.cov[g](k, l));
        rows.push_back(std::move(row));
    }
    write_csv(path, moments_header(queues), rows);
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc) {
    std::ofstream out = open_for_write(path);
    out << doc.dump(2) << '\n';
    finish(out, path);
}

}  // namespace mmq
