#include "rkranks/oracle.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "rkranks/error.hpp"
#include "rkranks/parallel.hpp"

namespace rkranks {

std::vector<std::uint64_t> ExactRankList::ranks() const {
    std::vector<std::uint64_t> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(e.exact_rank);
    return out;
}

std::uint64_t exact_rank_at(double threshold, std::span<const float> u, const VectorSet& items) {
    if (u.size() != items.dim())
        throw Error("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(items.dim()));
    std::uint64_t above = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (dot_unchecked(u.data(), items.row(i).data(), u.size()) > threshold) ++above;
    }
    return 1 + above;
}

std::uint64_t exact_rank(std::span<const float> q, std::span<const float> u, const VectorSet& items) {
    return exact_rank_at(inner_product(u, q), u, items);
}

std::vector<std::uint64_t> exact_ranks_all(std::span<const float> q, const VectorSet& users,
                                           const VectorSet& items, unsigned threads) {
    if (q.size() != users.dim() || users.dim() != items.dim())
        throw Error("dimension mismatch between query, users and items");
    std::vector<std::uint64_t> ranks(users.size());
    parallel_for(users.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) ranks[i] = exact_rank(q, users.row(i), items);
    });
    return ranks;
}

ExactRankList select_reverse_k_ranks(std::span<const std::uint64_t> ranks_by_row, const VectorSet& users,
                                     std::size_t k, std::uint64_t query_id) {
    if (ranks_by_row.size() != users.size()) throw Error("rank array does not match user count");
    if (k < 1 || k > users.size())
        throw Error("k=" + std::to_string(k) + " outside [1, n=" + std::to_string(users.size()) + "]");
    std::vector<std::size_t> rows(users.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    auto less = [&](std::size_t a, std::size_t b) {
        if (ranks_by_row[a] != ranks_by_row[b]) return ranks_by_row[a] < ranks_by_row[b];
        return users.id(a) < users.id(b);
    };
    std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(k), rows.end(), less);
    ExactRankList list;
    list.query_id = query_id;
    list.entries.reserve(k);
    for (std::size_t i = 0; i < k; ++i) list.entries.push_back({users.id(rows[i]), ranks_by_row[rows[i]]});
    return list;
}

ExactRankList exact_reverse_k_ranks(std::span<const float> q, std::size_t k, const VectorSet& users,
                                    const VectorSet& items, std::uint64_t query_id, unsigned threads) {
    if (k < 1 || k > users.size())
        throw Error("k=" + std::to_string(k) + " outside [1, n=" + std::to_string(users.size()) + "]");
    auto ranks = exact_ranks_all(q, users, items, threads);
    return select_reverse_k_ranks(ranks, users, k, query_id);
}

std::vector<bool> validate_c_approx(std::span<const std::uint64_t> candidate_ranks,
                                    std::span<const std::uint64_t> truth_ranks, double c) {
    if (candidate_ranks.size() != truth_ranks.size())
        throw Error("length mismatch: " + std::to_string(candidate_ranks.size()) + " candidates vs " +
                    std::to_string(truth_ranks.size()) + " truth entries");
    if (!(c >= 1.0)) throw Error("c must be >= 1");
    std::vector<bool> ok(candidate_ranks.size());
    for (std::size_t i = 0; i < ok.size(); ++i)
        ok[i] = static_cast<double>(candidate_ranks[i]) <= c * static_cast<double>(truth_ranks[i]);
    return ok;
}

std::vector<bool> validate_c_approx(std::span<const std::uint64_t> candidate_ranks, const ExactRankList& truth,
                                    double c) {
    auto truth_ranks = truth.ranks();
    return validate_c_approx(candidate_ranks, truth_ranks, c);
}

void write_rank_list_csv(const ExactRankList& list, std::ostream& out, bool header) {
    if (header) out << "query_id,user_id,exact_rank\n";
    for (const auto& e : list.entries) out << list.query_id << ',' << e.user_id << ',' << e.exact_rank << '\n';
}

}  // namespace rkranks
