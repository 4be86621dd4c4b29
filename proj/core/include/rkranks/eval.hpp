#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rkranks/ranktable.hpp"
#include "rkranks/vecdata.hpp"

namespace rkranks {

/// Fraction of positions with candidate_ranks[i] <= c * truth_ranks[i].
/// Both arrays must be sorted ascending; see run_benchmark.
double accuracy(std::span<const std::uint64_t> candidate_ranks, std::span<const std::uint64_t> truth_ranks,
                double c);

/// Mean of candidate_ranks[i] / truth_ranks[i].
double overall_ratio(std::span<const std::uint64_t> candidate_ranks, std::span<const std::uint64_t> truth_ranks);

struct BenchConfig {
    std::size_t query_count = 100;
    std::vector<std::size_t> k_list{10};
    std::vector<double> c_list{2.0};
    std::uint64_t seed = 0;
    /// Used for the index build and ground truth; queries always run single-threaded.
    unsigned threads = 0;
    std::string users_label;
    std::string items_label;
};

struct QueryMeasurement {
    std::uint64_t query_id = 0;
    std::size_t k = 0;
    double c = 0.0;
    double accuracy = 0.0;
    double overall_ratio = 0.0;
    double query_millis = 0.0;
    std::uint64_t inner_products = 0;
};

struct AggregateRow {
    std::size_t k = 0;
    double c = 0.0;
    std::size_t queries = 0;
    double accuracy = 0.0;
    double overall_ratio = 0.0;
    double query_millis = 0.0;
    double inner_products = 0.0;
};

struct EvalReport {
    BenchConfig config;
    BuildParams build_params;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t dim = 0;
    /// Index build or load time, reported apart from query time.
    double index_millis = 0.0;
    double truth_millis = 0.0;
    std::vector<QueryMeasurement> per_query;
    /// One row per (k, c), in k_list x c_list order.
    std::vector<AggregateRow> aggregates;
};

/// `count` distinct rows of [0, m), seeded.
std::vector<std::size_t> sample_query_rows(std::size_t m, std::size_t count, std::uint64_t seed);

/// Queries are items sampled without replacement from `items`. Ground truth
/// per query is computed once and shared by every (k, c).
EvalReport run_benchmark(const VectorSet& users, const VectorSet& items, const RankTableIndex& index,
                         const BenchConfig& config);
EvalReport run_benchmark(const VectorSet& users, const VectorSet& items, const BuildParams& params,
                         const BenchConfig& config);

std::string report_json(const EvalReport& report, bool include_timing = true, int indent = 2);
/// One row per query x configuration.
void write_report_csv(const EvalReport& report, std::ostream& out, bool include_timing = true);

}  // namespace rkranks
