#include "rkranks/query.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "rkranks/error.hpp"
#include "rkranks/parallel.hpp"

namespace rkranks {

std::string_view to_string(Admission a) { return a == Admission::bound ? "bound" : "interpolation"; }

RankBounds rank_bounds(const RankTableIndex& index, std::size_t user_row, double ip) {
    const std::size_t tau = index.tau;
    const ThresholdRow& row = index.rows[user_row];
    auto cells = index.row_cells(user_row);
    const double m_plus_one = static_cast<double>(index.m) + 1.0;

    RankBounds b;
    b.ip = ip;
    if (ip > row.threshold(tau - 1)) {
        b.bracket = Bracket::above_range;
        b.column = tau - 1;
        b.lower = 1.0;
        b.upper = cells[tau - 1];
        return b;
    }
    if (ip < row.threshold(0)) {
        b.bracket = Bracket::below_range;
        b.column = 0;
        b.lower = cells[0];
        b.upper = m_plus_one;
        return b;
    }
    std::size_t j = 0;
    if (row.step > 0.0f) {
        const double x = (ip - static_cast<double>(row.t_min)) / static_cast<double>(row.step);
        j = x <= 0.0 ? 0 : std::min(static_cast<std::size_t>(x), tau - 2);
        // Floating-point clamps.
        while (j > 0 && ip < row.threshold(j)) --j;
        while (j < tau - 2 && ip > row.threshold(j + 1)) ++j;
    }
    b.column = j;
    b.lower = cells[j + 1];
    b.upper = cells[j];
    return b;
}

double kth_smallest(std::vector<double> values, std::size_t k) {
    if (k < 1 || k > values.size())
        throw Error("k=" + std::to_string(k) + " outside [1, " + std::to_string(values.size()) + "]");
    auto nth = values.begin() + static_cast<std::ptrdiff_t>(k - 1);
    std::nth_element(values.begin(), nth, values.end());
    return *nth;
}

double interpolate_rank(const RankBounds& bounds, const ThresholdRow& row) {
    if (bounds.bracket != Bracket::in_range) return 0.5 * (bounds.lower + bounds.upper);
    if (row.step == 0.0f) return bounds.lower;
    const double t_lo = row.threshold(bounds.column);
    const double t_hi = row.threshold(bounds.column + 1);
    const double frac = std::clamp((bounds.ip - t_lo) / (t_hi - t_lo), 0.0, 1.0);
    return bounds.upper + frac * (bounds.lower - bounds.upper);
}

namespace {

QueryResult run_query(const RankTableIndex& index, const VectorSet& users, std::span<const float> q, std::size_t k,
                      double c, unsigned threads, std::vector<Decision>* trace) {
    const std::size_t n = users.size();
    if (index.n != n)
        throw Error("index has " + std::to_string(index.n) + " users, user set has " + std::to_string(n));
    if (k < 1 || k > n) throw Error("k=" + std::to_string(k) + " outside [1, n=" + std::to_string(n) + "]");
    if (!(c >= 1.0)) throw Error("c must be >= 1");
    if (q.size() != users.dim())
        throw Error("query has dim " + std::to_string(q.size()) + ", users have dim " + std::to_string(users.dim()));

    // Step 1: one inner product per user, then bounds and their k-th order statistics.
    std::vector<RankBounds> bounds(n);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i)
            bounds[i] = rank_bounds(index, i, dot_unchecked(users.row(i).data(), q.data(), q.size()));
    });
    std::vector<double> lowers(n), uppers(n);
    for (std::size_t i = 0; i < n; ++i) {
        lowers[i] = bounds[i].lower;
        uppers[i] = bounds[i].upper;
    }

    QueryResult result;
    result.stats.inner_products = n;
    result.r_down_k = kth_smallest(std::move(lowers), k);
    result.r_up_k = kth_smallest(uppers, k);
    const double admit_cut = c * result.r_down_k;

    std::vector<double> interp(n);
    for (std::size_t i = 0; i < n; ++i) interp[i] = interpolate_rank(bounds[i], index.rows[i]);

    auto by_upper = [&](std::size_t a, std::size_t b) {
        if (uppers[a] != uppers[b]) return uppers[a] < uppers[b];
        if (interp[a] != interp[b]) return interp[a] < interp[b];
        return users.id(a) < users.id(b);
    };
    auto take_smallest = [](std::vector<std::size_t>& rows, std::size_t count, auto less) {
        count = std::min(count, rows.size());
        std::partial_sort(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(count), rows.end(), less);
        rows.resize(count);
    };

    // Step 2: Lemma-1 admission and exclusion.
    std::vector<std::size_t> admitted;
    std::vector<std::size_t> undecided;
    if (trace) trace->assign(n, Decision::admitted);
    result.stats.early_exit = admit_cut >= result.r_up_k;
    for (std::size_t i = 0; i < n; ++i) {
        // On early exit every user stays eligible and the k smallest upper bounds win.
        if (result.stats.early_exit || uppers[i] <= admit_cut) {
            admitted.push_back(i);
        } else if (bounds[i].lower > result.r_up_k) {
            ++result.stats.users_filtered;
            if (trace) (*trace)[i] = Decision::filtered;
        } else {
            undecided.push_back(i);
            if (trace) (*trace)[i] = Decision::undecided;
        }
    }
    result.stats.users_admitted = static_cast<std::uint64_t>(
        std::count_if(uppers.begin(), uppers.end(), [&](double u) { return u <= admit_cut; }));
    take_smallest(admitted, k, by_upper);
    for (std::size_t i : admitted) result.entries.push_back({users.id(i), i, uppers[i], Admission::bound});

    // Step 3: fill the remainder by interpolated rank.
    if (result.entries.size() < k) {
        result.stats.users_interpolated = undecided.size();
        take_smallest(undecided, k - result.entries.size(), [&](std::size_t a, std::size_t b) {
            if (interp[a] != interp[b]) return interp[a] < interp[b];
            return users.id(a) < users.id(b);
        });
        for (std::size_t i : undecided)
            result.entries.push_back({users.id(i), i, interp[i], Admission::interpolation});
    }
    if (result.entries.size() != k) throw Error("internal: query produced fewer than k users");

    std::sort(result.entries.begin(), result.entries.end(), [](const QueryEntry& a, const QueryEntry& b) {
        if (a.estimated_rank != b.estimated_rank) return a.estimated_rank < b.estimated_rank;
        return a.user_id < b.user_id;
    });
    return result;
}

}  // namespace

QueryResult query(const RankTableIndex& index, const VectorSet& users, std::span<const float> q, std::size_t k,
                  double c, unsigned threads) {
    return run_query(index, users, q, k, c, threads, nullptr);
}

QueryResult query_traced(const RankTableIndex& index, const VectorSet& users, std::span<const float> q,
                         std::size_t k, double c, std::vector<Decision>& decisions, unsigned threads) {
    return run_query(index, users, q, k, c, threads, &decisions);
}

std::string query_result_json(const QueryResult& result, std::uint64_t query_id, std::size_t k, double c,
                              int indent) {
    nlohmann::ordered_json j;
    j["query_id"] = query_id;
    j["k"] = k;
    j["c"] = c;
    auto& entries = j["entries"] = nlohmann::ordered_json::array();
    for (const auto& e : result.entries) {
        entries.push_back(
            {{"user_id", e.user_id}, {"est_rank", e.estimated_rank}, {"admitted_by", to_string(e.admitted_by)}});
    }
    j["thresholds"] = {{"r_down_k", result.r_down_k}, {"r_up_k", result.r_up_k}};
    j["stats"] = {{"inner_products", result.stats.inner_products},
                  {"users_admitted", result.stats.users_admitted},
                  {"users_filtered", result.stats.users_filtered},
                  {"users_interpolated", result.stats.users_interpolated},
                  {"early_exit", result.stats.early_exit}};
    return j.dump(indent);
}

}  // namespace rkranks
