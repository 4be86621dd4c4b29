#pragma once

// Test-only helpers: brute-force oracles that stay independent of the code
// paths they check, plus small fixtures.

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include "rkranks/rkranks.hpp"

namespace rkranks::testing {

inline VectorSet make_set(Role role, std::size_t dim, std::vector<float> data) {
    return VectorSet::with_sequential_ids(role, dim, std::move(data));
}

/// Exact 1 + |{p : u.p > t_j}| for every column of user i, straight from the oracle.
inline std::vector<double> exact_row(const RankTableIndex& index, std::size_t i, const VectorSet& users,
                                     const VectorSet& items) {
    std::vector<double> row(index.tau);
    for (std::size_t j = 0; j < index.tau; ++j)
        row[j] = static_cast<double>(exact_rank_at(index.rows[i].threshold(j), users.row(i), items));
    return row;
}

/// The pre-processing loop written out literally: per stratum, per sample,
/// walk the columns and stop at the first threshold the product does not exceed.
inline std::vector<double> literal_estimate_row(std::span<const float> u, const ThresholdRow& row, std::size_t tau,
                                                const Partitioning& part, const VectorSet& items) {
    std::vector<double> cells(tau, 1.0);
    for (std::size_t l = 0; l < part.strata(); ++l) {
        std::vector<double> counts(tau, 0.0);
        for (std::size_t p : part.samples[l]) {
            double ip = 0.0;
            for (std::size_t x = 0; x < u.size(); ++x) ip += double(u[x]) * double(items.row(p)[x]);
            for (std::size_t j = 0; j < tau; ++j) {
                if (ip > row.threshold(j))
                    counts[j] += 1.0;
                else
                    break;
            }
        }
        for (std::size_t j = 0; j < tau; ++j)
            cells[j] += double(part.stratum_size(l)) * counts[j] / double(part.samples[l].size());
    }
    return cells;
}

/// Largest divisor of m not above `hint`, so every stratum can be sampled exhaustively.
inline std::size_t dividing_omega(std::size_t m, std::size_t hint) {
    for (std::size_t w = std::min(hint, m); w > 1; --w)
        if (m % w == 0) return w;
    return 1;
}

inline BuildParams full_sampling_params(std::size_t m, std::size_t tau, RangeMode mode, std::size_t omega_hint = 4) {
    BuildParams p;
    p.tau = tau;
    p.omega = dividing_omega(m, omega_hint);
    p.samples = m / p.omega;
    p.range_mode = mode;
    return p;
}

struct Instance {
    VectorSet users;
    VectorSet items;
};

inline Instance random_instance(std::mt19937_64& rng, std::size_t max_n, std::size_t max_m, std::size_t max_d) {
    std::uniform_int_distribution<std::size_t> pick_n(1, max_n), pick_m(1, max_m), pick_d(1, max_d);
    const std::size_t n = pick_n(rng), m = pick_m(rng), d = pick_d(rng);
    const auto profile = rng() % 2 == 0 ? NormProfile::gaussian : NormProfile::uniform;
    return {generate_synthetic(n, d, rng(), profile, Role::users), generate_synthetic(m, d, rng(), profile, Role::items)};
}

inline std::vector<char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("rkranks-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace rkranks::testing
