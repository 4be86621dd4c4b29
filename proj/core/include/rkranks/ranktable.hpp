#pragma once

// Rank-table index: for each user, a uniform grid of tau inner-product
// thresholds and, per threshold, the estimated rank an item with exactly that
// inner product would have. Estimates come from norm-stratified sampling of
// the item set, so building costs O((n + m) d + m log m) instead of O(n m d).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "rkranks/vecdata.hpp"

namespace rkranks {

enum class RangeMode : std::uint8_t {
    /// f_max = |u| * max|p|, f_min = -f_max. O(d) per user.
    cauchy_schwarz = 0,
    /// True extrema of u.p over all items. O(m d) per user.
    exact = 1,
};

std::string_view to_string(RangeMode mode);
RangeMode parse_range_mode(std::string_view text);

struct BuildParams {
    std::size_t tau = 100;
    std::size_t omega = 10;
    std::size_t samples = 20;
    std::uint64_t seed = 0;
    RangeMode range_mode = RangeMode::cauchy_schwarz;

    friend bool operator==(const BuildParams&, const BuildParams&) = default;
};

/// Items ordered by descending norm and cut into omega contiguous strata.
struct Partitioning {
    /// Item rows by descending norm (ties by ascending id).
    std::vector<std::size_t> order;
    /// omega + 1 offsets into `order`.
    std::vector<std::size_t> boundaries;
    /// Per stratum, sampled item rows. Empty until draw_samples.
    std::vector<std::vector<std::size_t>> samples;

    std::size_t strata() const noexcept { return boundaries.empty() ? 0 : boundaries.size() - 1; }
    std::size_t stratum_size(std::size_t l) const noexcept { return boundaries[l + 1] - boundaries[l]; }
    std::span<const std::size_t> stratum(std::size_t l) const noexcept {
        return std::span<const std::size_t>(order).subspan(boundaries[l], stratum_size(l));
    }
};

/// Uniform threshold grid t_j = t_min + j * step for j in [0, tau).
struct ThresholdRow {
    float t_min = 0.0f;
    float step = 0.0f;

    /// Thresholds are always reconstructed through this function so that the
    /// build, the query and the tests compare against identical values.
    double threshold(std::size_t j) const noexcept {
        return static_cast<double>(t_min) + static_cast<double>(j) * static_cast<double>(step);
    }

    friend bool operator==(const ThresholdRow&, const ThresholdRow&) = default;
};

struct BuildStats {
    /// Item norms (m) plus user-item products: n*omega*s sampled, and n*m more
    /// in exact range mode.
    std::uint64_t inner_products = 0;
    std::uint64_t build_millis = 0;

    friend bool operator==(const BuildStats&, const BuildStats&) = default;
};

struct RankTableIndex {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t tau = 0;
    BuildParams params;
    std::vector<ThresholdRow> rows;
    /// n x tau, row-major. Non-increasing along each row, each in [1, m + 1].
    std::vector<float> cells;
    BuildStats stats;

    std::span<const float> row_cells(std::size_t user_row) const noexcept {
        return std::span<const float>(cells).subspan(user_row * tau, tau);
    }
    float cell(std::size_t user_row, std::size_t j) const noexcept { return cells[user_row * tau + j]; }

    friend bool operator==(const RankTableIndex&, const RankTableIndex&) = default;
};

/// Strata sizes differ by at most one; the first (m mod omega) strata, which
/// hold the largest norms, get the extra item.
Partitioning sort_and_partition(const VectorSet& items, std::size_t omega);

/// Draws s rows per stratum uniformly without replacement. Deterministic in seed.
Partitioning draw_samples(Partitioning partitioning, std::size_t s, std::uint64_t seed);

ThresholdRow make_threshold_row(double f_min, double f_max, std::size_t tau);

/// `max_item_norm` lets callers amortize the item scan in cauchy_schwarz mode.
ThresholdRow compute_threshold_row(std::span<const float> u, const VectorSet& items, std::size_t tau,
                                   RangeMode mode, double max_item_norm = -1.0);

/// Number of thresholds of `row` strictly below ip. Thresholds ascend, so
/// these are always the first columns.
std::size_t columns_below(const ThresholdRow& row, std::size_t tau, double ip) noexcept;

/// Stratified estimate of 1 + |{p : u.p > t_j}| for every column j.
std::vector<float> estimate_row(std::span<const float> u, const ThresholdRow& row, std::size_t tau,
                                const Partitioning& partitioning, const VectorSet& items);

void validate_build_params(const BuildParams& params, std::size_t item_count);

/// threads = 0 uses every core. The result does not depend on the thread count.
RankTableIndex build_index(const VectorSet& users, const VectorSet& items, const BuildParams& params,
                           unsigned threads = 0);

inline constexpr std::size_t kIndexHeaderBytes = 4 + 2 + 8 + 8 + 4 + 4 + 4 + 8 + 1;
inline constexpr std::size_t kIndexTrailerBytes = 8 + 8;
inline constexpr std::uint16_t kIndexVersion = 1;

constexpr std::size_t serialized_index_size(std::size_t n, std::size_t tau) {
    return kIndexHeaderBytes + n * (8 + 4 * tau) + kIndexTrailerBytes;
}

void save_index(const RankTableIndex& index, const std::filesystem::path& path);
RankTableIndex load_index(const std::filesystem::path& path);

}  // namespace rkranks
