#include "cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rkranks/rkranks.hpp"

namespace rkranks::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

unsigned default_threads() {
    if (const char* env = std::getenv("RKRANKS_THREADS")) {
        try {
            return static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw Error(std::string("RKRANKS_THREADS is not a number: '") + env + "'");
        }
    }
    return 0;
}

VectorFormat resolve_format(const std::string& flag, const std::string& path) {
    if (flag == "binary") return VectorFormat::binary;
    if (flag == "csv") return VectorFormat::csv;
    return detect_format(path);
}

VectorSet load(const std::string& path, const std::string& format, Role role) {
    return load_vectors(path, resolve_format(format, path), role);
}

std::vector<float> parse_vector(const std::string& text) {
    std::vector<float> values;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stof(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw Error("cannot parse query component '" + field + "'");
        }
    }
    if (values.empty()) throw Error("empty query vector");
    return values;
}

// ---------------------------------------------------------------- gen

struct GenOptions {
    std::string role = "items";
    std::size_t count = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 0;
    std::string profile = "gaussian";
    std::string format = "binary";
    std::string out;
};

int cmd_gen(const GenOptions& o, std::ostream& out, std::ostream& err) {
    const VectorSet vs = generate_synthetic(o.count, o.dim, o.seed, parse_norm_profile(o.profile), parse_role(o.role));
    save_vectors(vs, o.out, o.format == "csv" ? VectorFormat::csv : VectorFormat::binary);

    const NormTable norms = compute_norms(vs);
    const double count = static_cast<double>(vs.size());
    const auto [lo, hi] = std::minmax_element(norms.norms.begin(), norms.norms.end());
    double mean = 0.0;
    for (double x : norms.norms) mean += x;
    mean /= count;
    double var = 0.0;
    for (double x : norms.norms) var += (x - mean) * (x - mean);
    const double stddev = std::sqrt(var / count);

    ordered_json j = {{"out", o.out},
                      {"role", to_string(vs.role())},
                      {"count", vs.size()},
                      {"dim", vs.dim()},
                      {"seed", o.seed},
                      {"profile", o.profile},
                      {"norms", {{"min", *lo}, {"mean", mean}, {"max", *hi}, {"stddev", stddev}}}};
    out << j.dump(2) << '\n';
    err << "wrote " << vs.size() << " x " << vs.dim() << " " << to_string(vs.role()) << " to " << o.out << '\n'
        << "norms  min " << *lo << "  mean " << mean << "  max " << *hi << "  stddev " << stddev << '\n';
    return 0;
}

// ---------------------------------------------------------------- build

struct BuildOptions {
    std::string users;
    std::string items;
    std::string format = "auto";
    std::size_t tau = 100;
    std::size_t omega = 10;
    std::size_t samples = 20;
    std::uint64_t seed = 0;
    std::string range_mode = "cauchy_schwarz";
    std::string out;
    unsigned threads = 0;
};

BuildParams to_params(const BuildOptions& o) {
    BuildParams p;
    p.tau = o.tau;
    p.omega = o.omega;
    p.samples = o.samples;
    p.seed = o.seed;
    p.range_mode = parse_range_mode(o.range_mode);
    return p;
}

int cmd_build(const BuildOptions& o, std::ostream& out, std::ostream& err) {
    const VectorSet users = load(o.users, o.format, Role::users);
    const VectorSet items = load(o.items, o.format, Role::items);
    const BuildParams params = to_params(o);
    const RankTableIndex index = build_index(users, items, params, o.threads);
    save_index(index, o.out);

    ordered_json j = {{"out", o.out},
                      {"n", index.n},
                      {"m", index.m},
                      {"tau", index.tau},
                      {"omega", params.omega},
                      {"s", params.samples},
                      {"seed", params.seed},
                      {"range_mode", to_string(params.range_mode)},
                      {"inner_products", index.stats.inner_products},
                      {"build_millis", index.stats.build_millis},
                      {"bytes", serialized_index_size(index.n, index.tau)}};
    out << j.dump(2) << '\n';
    err << "built " << index.n << " x " << index.tau << " rank table over " << index.m << " items in "
        << index.stats.build_millis << " ms (" << index.stats.inner_products << " inner products)\n";
    return 0;
}

// ---------------------------------------------------------------- query

struct QueryOptions {
    std::string index;
    std::string users;
    std::string items;
    std::string format = "auto";
    std::optional<std::uint64_t> item_id;
    std::string vector;
    std::size_t k = 10;
    double c = 2.0;
    bool verify = false;
    unsigned threads = 1;
};

int cmd_query(const QueryOptions& o, std::ostream& out, std::ostream& err) {
    const RankTableIndex index = load_index(o.index);
    const VectorSet users = load(o.users, o.format, Role::users);
    if (o.k > users.size())
        throw Error("k=" + std::to_string(o.k) + " exceeds the number of users n=" + std::to_string(users.size()));

    std::optional<VectorSet> items;
    if (!o.items.empty()) items.emplace(load(o.items, o.format, Role::items));
    if ((o.item_id || o.verify) && !items) throw Error("--items is required with --item-id or --verify");

    std::vector<float> q;
    std::uint64_t query_id = 0;
    if (o.item_id) {
        const auto row = items->find(*o.item_id);
        if (!row) throw Error("item id " + std::to_string(*o.item_id) + " not found in " + o.items);
        auto r = items->row(*row);
        q.assign(r.begin(), r.end());
        query_id = *o.item_id;
    } else {
        q = parse_vector(o.vector);
    }

    const QueryResult result = query(index, users, q, o.k, o.c, o.threads);
    ordered_json j = ordered_json::parse(query_result_json(result, query_id, o.k, o.c));

    if (o.verify) {
        const auto exact = exact_ranks_all(q, users, *items, o.threads);
        std::vector<std::uint64_t> in_order;
        for (const auto& e : result.entries) in_order.push_back(exact[e.user_row]);
        std::vector<std::uint64_t> candidate = in_order;
        std::sort(candidate.begin(), candidate.end());
        const auto truth = select_reverse_k_ranks(exact, users, o.k, query_id).ranks();
        const auto valid = validate_c_approx(candidate, truth, o.c);
        j["verify"] = {{"exact_ranks", in_order},
                       {"candidate_ranks_sorted", candidate},
                       {"truth_ranks", truth},
                       {"valid", valid},
                       {"accuracy", accuracy(candidate, truth, o.c)},
                       {"overall_ratio", overall_ratio(candidate, truth)}};
    }
    out << j.dump(2) << '\n';
    err << "R_down_k " << result.r_down_k << "  R_up_k " << result.r_up_k << "  admitted "
        << result.stats.users_admitted << "  filtered " << result.stats.users_filtered << "  interpolated "
        << result.stats.users_interpolated << '\n';
    return 0;
}

// ---------------------------------------------------------------- bench

struct BenchOptions {
    BuildOptions build;
    std::string index;
    std::size_t queries = 100;
    std::vector<std::size_t> k_list{10, 50, 100};
    std::vector<double> c_list{1.5, 2.0, 4.0};
    std::uint64_t seed = 0;
    std::string json_out;
    std::string csv_out;
};

int cmd_bench(const BenchOptions& o, std::ostream& out, std::ostream& err) {
    const VectorSet users = load(o.build.users, o.build.format, Role::users);
    const VectorSet items = load(o.build.items, o.build.format, Role::items);

    BenchConfig config;
    config.query_count = o.queries;
    config.k_list = o.k_list;
    config.c_list = o.c_list;
    config.seed = o.seed;
    config.threads = o.build.threads;
    config.users_label = o.build.users;
    config.items_label = o.build.items;

    EvalReport report;
    if (!o.index.empty()) {
        const auto start = std::chrono::steady_clock::now();
        const RankTableIndex index = load_index(o.index);
        const double load_millis =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        report = run_benchmark(users, items, index, config);
        report.index_millis = load_millis;
    } else {
        report = run_benchmark(users, items, to_params(o.build), config);
    }

    const std::string json = report_json(report);
    if (!o.json_out.empty()) {
        std::ofstream f(o.json_out);
        if (!(f << json << '\n')) throw Error("cannot write " + o.json_out);
    } else {
        out << json << '\n';
    }
    if (!o.csv_out.empty()) {
        std::ofstream f(o.csv_out);
        write_report_csv(report, f);
        if (!f) throw Error("cannot write " + o.csv_out);
    }

    err << std::left << std::setw(8) << "k" << std::setw(8) << "c" << std::setw(12) << "accuracy" << std::setw(14)
        << "overall_ratio" << std::setw(12) << "query_ms" << "inner_products\n";
    for (const auto& a : report.aggregates) {
        err << std::setw(8) << a.k << std::setw(8) << a.c << std::setw(12) << a.accuracy << std::setw(14)
            << a.overall_ratio << std::setw(12) << a.query_millis << a.inner_products << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------- inspect

int cmd_inspect(const std::string& path, std::ostream& out, std::ostream& err) {
    const RankTableIndex index = load_index(path);
    float lo = std::numeric_limits<float>::infinity();
    float hi = -lo;
    for (float c : index.cells) {
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    ordered_json j = {{"path", path},
                      {"version", kIndexVersion},
                      {"n", index.n},
                      {"m", index.m},
                      {"tau", index.tau},
                      {"omega", index.params.omega},
                      {"s", index.params.samples},
                      {"seed", index.params.seed},
                      {"range_mode", to_string(index.params.range_mode)},
                      {"build_stats",
                       {{"inner_products", index.stats.inner_products}, {"build_millis", index.stats.build_millis}}},
                      {"cells", {{"min", lo}, {"max", hi}}},
                      {"bytes", serialized_index_size(index.n, index.tau)}};
    out << j.dump(2) << '\n';
    err << index.n << " users x " << index.tau << " columns over " << index.m << " items\n";
    return 0;
}

CLI::Option* add_build_flags(CLI::App* sub, BuildOptions& o, bool require_out, const std::string& seed_flag) {
    sub->add_option("--users", o.users, "User vector file")->required()->check(CLI::ExistingFile);
    sub->add_option("--items", o.items, "Item vector file")->required()->check(CLI::ExistingFile);
    sub->add_option("--format", o.format, "Input format")->check(CLI::IsMember({"auto", "binary", "csv"}));
    sub->add_option("--tau", o.tau, "Thresholds per user (>= 2)")
        ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::uint32_t>::max() + std::size_t{0}));
    sub->add_option("--omega", o.omega, "Norm strata")->check(CLI::PositiveNumber);
    sub->add_option("--samples", o.samples, "Samples per stratum")->check(CLI::PositiveNumber);
    sub->add_option(seed_flag, o.seed, "Index sampling seed");
    sub->add_option("--range-mode", o.range_mode, "Threshold range")
        ->check(CLI::IsMember({"cauchy_schwarz", "exact"}));
    if (require_out) sub->add_option("--out", o.out, "Index output path")->required();
    return sub->add_option("--threads", o.threads, "Worker threads (0 = all cores; env RKRANKS_THREADS)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Approximate reverse k-ranks queries over rank-table indexes", "rkranks"};
    app.require_subcommand(1);

    GenOptions gen;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic vector file");
    gen_cmd->add_option("--role", gen.role, "users or items")->check(CLI::IsMember({"users", "items"}));
    gen_cmd->add_option("--count", gen.count, "Number of vectors")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--dim", gen.dim, "Dimensionality")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "Generator seed");
    gen_cmd->add_option("--profile", gen.profile, "Component distribution")
        ->check(CLI::IsMember({"gaussian", "uniform"}));
    gen_cmd->add_option("--format", gen.format, "Output format")->check(CLI::IsMember({"binary", "csv"}));
    gen_cmd->add_option("--out", gen.out, "Output path")->required();

    BuildOptions build;
    auto* build_cmd = app.add_subcommand("build", "Build a rank-table index");
    auto* build_threads = add_build_flags(build_cmd, build, true, "--seed");

    QueryOptions qo;
    auto* query_cmd = app.add_subcommand("query", "Run one c-approximate reverse k-ranks query");
    query_cmd->add_option("--index", qo.index, "Index file")->required()->check(CLI::ExistingFile);
    query_cmd->add_option("--users", qo.users, "User vector file")->required()->check(CLI::ExistingFile);
    query_cmd->add_option("--items", qo.items, "Item vector file")->check(CLI::ExistingFile);
    query_cmd->add_option("--format", qo.format, "Input format")->check(CLI::IsMember({"auto", "binary", "csv"}));
    auto* id_opt = query_cmd->add_option("--item-id", qo.item_id, "Use this item as the query");
    auto* vec_opt = query_cmd->add_option("--vector", qo.vector, "Inline query vector, comma separated");
    id_opt->excludes(vec_opt);
    query_cmd->add_option("--k", qo.k, "Result size")->check(CLI::PositiveNumber);
    query_cmd->add_option("--c", qo.c, "Approximation factor (>= 1)")
        ->check(CLI::Range(1.0, std::numeric_limits<double>::max()));
    query_cmd->add_flag("--verify", qo.verify, "Check the result against exact ranks");
    query_cmd->add_option("--threads", qo.threads, "Worker threads for step 1 and verification");

    BenchOptions bo;
    auto* bench_cmd = app.add_subcommand("bench", "Run a k/c sweep against exact ground truth");
    auto* bench_threads = add_build_flags(bench_cmd, bo.build, false, "--build-seed");
    bench_cmd->add_option("--index", bo.index, "Prebuilt index (otherwise built from the flags)")
        ->check(CLI::ExistingFile);
    bench_cmd->add_option("--queries", bo.queries, "Number of query items")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--k", bo.k_list, "Result sizes")->delimiter(',')->check(CLI::PositiveNumber);
    bench_cmd->add_option("--c", bo.c_list, "Approximation factors")
        ->delimiter(',')
        ->check(CLI::Range(1.0, std::numeric_limits<double>::max()));
    bench_cmd->add_option("--seed", bo.seed, "Query sampling seed");
    bench_cmd->add_option("--json", bo.json_out, "JSON report path (stdout when omitted)");
    bench_cmd->add_option("--csv", bo.csv_out, "Per-query CSV report path");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print an index header and build stats");
    inspect_cmd->add_option("--index", inspect_path, "Index file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e, out, err);
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*build_cmd && build_threads->count() == 0) build.threads = default_threads();
        if (*bench_cmd && bench_threads->count() == 0) bo.build.threads = default_threads();
        if (*gen_cmd) return cmd_gen(gen, out, err);
        if (*build_cmd) return cmd_build(build, out, err);
        if (*query_cmd) {
            if (!qo.item_id && qo.vector.empty()) throw Error("one of --item-id or --vector is required");
            return cmd_query(qo, out, err);
        }
        if (*bench_cmd) return cmd_bench(bo, out, err);
        if (*inspect_cmd) return cmd_inspect(inspect_path, out, err);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"rkranks"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace rkranks::cli
