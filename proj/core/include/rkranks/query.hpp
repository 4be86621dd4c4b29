#pragma once

// c-approximate reverse k-ranks query over a rank-table index. One inner
// product per user; everything else is table lookups and O(n) selection.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rkranks/ranktable.hpp"
#include "rkranks/vecdata.hpp"

namespace rkranks {

enum class Bracket : std::uint8_t { in_range, below_range, above_range };

struct RankBounds {
    double lower = 1.0;
    double upper = 1.0;
    Bracket bracket = Bracket::in_range;
    /// 0-based j with t_j <= ip <= t_{j+1}; meaningful when in range.
    std::size_t column = 0;
    double ip = 0.0;
};

enum class Admission : std::uint8_t { bound, interpolation };
std::string_view to_string(Admission a);

struct QueryEntry {
    std::uint64_t user_id = 0;
    std::size_t user_row = 0;
    double estimated_rank = 0.0;
    Admission admitted_by = Admission::bound;

    friend bool operator==(const QueryEntry&, const QueryEntry&) = default;
};

struct QueryStats {
    std::uint64_t inner_products = 0;
    /// Users with r_up <= c * R_down_k before truncation to k.
    std::uint64_t users_admitted = 0;
    /// Users discarded because r_down > R_up_k.
    std::uint64_t users_filtered = 0;
    /// Users left undecided by the bounds, ranked by interpolation.
    std::uint64_t users_interpolated = 0;
    bool early_exit = false;

    friend bool operator==(const QueryStats&, const QueryStats&) = default;
};

struct QueryResult {
    /// Exactly k entries ascending by (estimated_rank, user_id).
    std::vector<QueryEntry> entries;
    double r_down_k = 0.0;
    double r_up_k = 0.0;
    QueryStats stats;

    friend bool operator==(const QueryResult&, const QueryResult&) = default;
};

RankBounds rank_bounds(const RankTableIndex& index, std::size_t user_row, double ip);

/// k-th smallest (1-based) by linear-time selection.
double kth_smallest(std::vector<double> values, std::size_t k);

double interpolate_rank(const RankBounds& bounds, const ThresholdRow& row);

/// Throws on k outside [1, n], c < 1, dimension mismatch, or a user set that
/// does not match the index.
QueryResult query(const RankTableIndex& index, const VectorSet& users, std::span<const float> q, std::size_t k,
                  double c, unsigned threads = 1);

/// How step 2 classified each user. On early exit every user is `admitted`.
enum class Decision : std::uint8_t { admitted, filtered, undecided };

/// query() that also reports the per-user step-2 decision, indexed by user row.
QueryResult query_traced(const RankTableIndex& index, const VectorSet& users, std::span<const float> q,
                         std::size_t k, double c, std::vector<Decision>& decisions, unsigned threads = 1);

/// {query_id, k, c, entries[{user_id, est_rank, admitted_by}], thresholds{r_down_k, r_up_k}, stats}.
std::string query_result_json(const QueryResult& result, std::uint64_t query_id, std::size_t k, double c,
                              int indent = 2);

}  // namespace rkranks
