#pragma once

// Exact brute-force reverse k-ranks. Costs n*m inner products per query and
// serves as ground truth for tests and evaluation metrics.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "rkranks/vecdata.hpp"

namespace rkranks {

struct RankedUser {
    std::uint64_t user_id;
    std::uint64_t exact_rank;
    friend bool operator==(const RankedUser&, const RankedUser&) = default;
};

struct ExactRankList {
    std::uint64_t query_id = 0;
    /// Ascending by exact_rank, ties by ascending user_id.
    std::vector<RankedUser> entries;

    std::vector<std::uint64_t> ranks() const;
};

/// 1 + |{p in items : u.p > u.q}|. Strict comparison: ties with u.q do not count.
std::uint64_t exact_rank(std::span<const float> q, std::span<const float> u, const VectorSet& items);

/// Same count given a precomputed u.q, for callers that already hold it.
std::uint64_t exact_rank_at(double threshold, std::span<const float> u, const VectorSet& items);

/// Exact rank of q for every user, indexed by user row.
std::vector<std::uint64_t> exact_ranks_all(std::span<const float> q, const VectorSet& users,
                                           const VectorSet& items, unsigned threads = 1);

/// Orders all users by (exact rank, user id) and keeps the first k.
ExactRankList select_reverse_k_ranks(std::span<const std::uint64_t> ranks_by_row, const VectorSet& users,
                                     std::size_t k, std::uint64_t query_id = 0);

ExactRankList exact_reverse_k_ranks(std::span<const float> q, std::size_t k, const VectorSet& users,
                                    const VectorSet& items, std::uint64_t query_id = 0, unsigned threads = 1);

/// Position i is true iff candidate_ranks[i] <= c * truth_ranks[i].
std::vector<bool> validate_c_approx(std::span<const std::uint64_t> candidate_ranks,
                                    std::span<const std::uint64_t> truth_ranks, double c);
std::vector<bool> validate_c_approx(std::span<const std::uint64_t> candidate_ranks, const ExactRankList& truth,
                                    double c);

/// CSV rows "query_id,user_id,exact_rank" with a header line.
void write_rank_list_csv(const ExactRankList& list, std::ostream& out, bool header = true);

}  // namespace rkranks
