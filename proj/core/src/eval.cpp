#include "rkranks/eval.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include <json.hpp>

#include "rkranks/error.hpp"
#include "rkranks/oracle.hpp"
#include "rkranks/query.hpp"

namespace rkranks {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw Error("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
    if (a == 0) throw Error("rank arrays must be non-empty");
}

double millis_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

double accuracy(std::span<const std::uint64_t> candidate_ranks, std::span<const std::uint64_t> truth_ranks,
                double c) {
    check_lengths(candidate_ranks.size(), truth_ranks.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < candidate_ranks.size(); ++i)
        hits += static_cast<double>(candidate_ranks[i]) <= c * static_cast<double>(truth_ranks[i]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(candidate_ranks.size());
}

double overall_ratio(std::span<const std::uint64_t> candidate_ranks, std::span<const std::uint64_t> truth_ranks) {
    check_lengths(candidate_ranks.size(), truth_ranks.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < candidate_ranks.size(); ++i) {
        if (truth_ranks[i] == 0) throw Error("truth ranks must be >= 1");
        sum += static_cast<double>(candidate_ranks[i]) / static_cast<double>(truth_ranks[i]);
    }
    return sum / static_cast<double>(candidate_ranks.size());
}

std::vector<std::size_t> sample_query_rows(std::size_t m, std::size_t count, std::uint64_t seed) {
    if (count < 1 || count > m)
        throw Error("query count " + std::to_string(count) + " outside [1, m=" + std::to_string(m) + "]");
    std::vector<std::size_t> rows(m);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, m - 1);
        std::swap(rows[i], rows[pick(rng)]);
    }
    rows.resize(count);
    return rows;
}

EvalReport run_benchmark(const VectorSet& users, const VectorSet& items, const RankTableIndex& index,
                         const BenchConfig& config) {
    if (config.k_list.empty() || config.c_list.empty()) throw Error("k and c lists must be non-empty");
    for (std::size_t k : config.k_list) {
        if (k < 1 || k > users.size())
            throw Error("k=" + std::to_string(k) + " outside [1, n=" + std::to_string(users.size()) + "]");
    }
    for (double c : config.c_list) {
        if (!(c >= 1.0)) throw Error("c must be >= 1");
    }
    if (index.m != items.size())
        throw Error("index was built over " + std::to_string(index.m) + " items, item set has " +
                    std::to_string(items.size()));

    EvalReport report;
    report.config = config;
    report.build_params = index.params;
    report.n = users.size();
    report.m = items.size();
    report.dim = users.dim();

    const auto query_rows = sample_query_rows(items.size(), config.query_count, config.seed);

    // Warm-up, excluded from timing.
    (void)query(index, users, items.row(query_rows.front()), config.k_list.front(), config.c_list.front());

    const std::size_t configs = config.k_list.size() * config.c_list.size();
    report.per_query.reserve(query_rows.size() * configs);
    for (std::size_t qr : query_rows) {
        auto q = items.row(qr);
        const auto truth_start = std::chrono::steady_clock::now();
        const auto exact = exact_ranks_all(q, users, items, config.threads);
        std::vector<std::uint64_t> sorted_truth = exact;
        std::sort(sorted_truth.begin(), sorted_truth.end());
        report.truth_millis += millis_since(truth_start);

        for (std::size_t k : config.k_list) {
            std::span<const std::uint64_t> truth(sorted_truth.data(), k);
            for (double c : config.c_list) {
                const auto start = std::chrono::steady_clock::now();
                const QueryResult result = query(index, users, q, k, c);
                const double elapsed = millis_since(start);

                std::vector<std::uint64_t> candidate;
                candidate.reserve(k);
                for (const auto& e : result.entries) candidate.push_back(exact[e.user_row]);
                std::sort(candidate.begin(), candidate.end());

                report.per_query.push_back({items.id(qr), k, c, accuracy(candidate, truth, c),
                                            overall_ratio(candidate, truth), elapsed,
                                            result.stats.inner_products});
            }
        }
    }

    for (std::size_t k : config.k_list) {
        for (double c : config.c_list) {
            AggregateRow row{k, c};
            for (const auto& pq : report.per_query) {
                if (pq.k != k || pq.c != c) continue;
                ++row.queries;
                row.accuracy += pq.accuracy;
                row.overall_ratio += pq.overall_ratio;
                row.query_millis += pq.query_millis;
                row.inner_products += static_cast<double>(pq.inner_products);
            }
            const double count = static_cast<double>(row.queries);
            row.accuracy /= count;
            row.overall_ratio /= count;
            row.query_millis /= count;
            row.inner_products /= count;
            report.aggregates.push_back(row);
        }
    }
    return report;
}

EvalReport run_benchmark(const VectorSet& users, const VectorSet& items, const BuildParams& params,
                         const BenchConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const RankTableIndex index = build_index(users, items, params, config.threads);
    const double build_millis = millis_since(start);
    EvalReport report = run_benchmark(users, items, index, config);
    report.index_millis = build_millis;
    return report;
}

std::string report_json(const EvalReport& report, bool include_timing, int indent) {
    nlohmann::ordered_json j;
    const auto& cfg = report.config;
    j["config"] = {{"k", cfg.k_list},
                   {"c", cfg.c_list},
                   {"tau", report.build_params.tau},
                   {"omega", report.build_params.omega},
                   {"s", report.build_params.samples},
                   {"range_mode", to_string(report.build_params.range_mode)},
                   {"build_seed", report.build_params.seed},
                   {"seed", cfg.seed},
                   {"queries", cfg.query_count},
                   {"users", cfg.users_label},
                   {"items", cfg.items_label},
                   {"n", report.n},
                   {"m", report.m},
                   {"d", report.dim}};
    if (include_timing) {
        j["timing"] = {{"index_millis", report.index_millis}, {"truth_millis", report.truth_millis}};
    }
    auto& aggregates = j["aggregates"] = nlohmann::ordered_json::array();
    for (const auto& a : report.aggregates) {
        nlohmann::ordered_json row = {{"k", a.k},
                                      {"c", a.c},
                                      {"queries", a.queries},
                                      {"accuracy", a.accuracy},
                                      {"overall_ratio", a.overall_ratio},
                                      {"inner_products", a.inner_products}};
        if (include_timing) row["query_millis"] = a.query_millis;
        aggregates.push_back(std::move(row));
    }
    auto& per_query = j["per_query"] = nlohmann::ordered_json::array();
    for (const auto& pq : report.per_query) {
        nlohmann::ordered_json row = {{"query_id", pq.query_id},
                                      {"k", pq.k},
                                      {"c", pq.c},
                                      {"accuracy", pq.accuracy},
                                      {"overall_ratio", pq.overall_ratio},
                                      {"inner_products", pq.inner_products}};
        if (include_timing) row["query_millis"] = pq.query_millis;
        per_query.push_back(std::move(row));
    }
    return j.dump(indent);
}

void write_report_csv(const EvalReport& report, std::ostream& out, bool include_timing) {
    out << "query_id,k,c,accuracy,overall_ratio,inner_products";
    if (include_timing) out << ",query_millis";
    out << '\n';
    for (const auto& pq : report.per_query) {
        out << pq.query_id << ',' << pq.k << ',' << pq.c << ',' << pq.accuracy << ',' << pq.overall_ratio << ','
            << pq.inner_products;
        if (include_timing) out << ',' << pq.query_millis;
        out << '\n';
    }
}

}  // namespace rkranks
