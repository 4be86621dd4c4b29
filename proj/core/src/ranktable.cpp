#include "rkranks/ranktable.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "rkranks/error.hpp"
#include "rkranks/parallel.hpp"

namespace rkranks {

namespace {

constexpr std::array<char, 4> kIndexMagic{'R', 'K', 'T', '1'};

Partitioning partition_order(std::vector<std::size_t> order, std::size_t omega) {
    const std::size_t m = order.size();
    if (omega < 1 || omega > m)
        throw Error("omega=" + std::to_string(omega) + " outside [1, m=" + std::to_string(m) + "]");
    Partitioning p;
    p.order = std::move(order);
    p.boundaries.resize(omega + 1);
    const std::size_t base = m / omega;
    const std::size_t extra = m % omega;
    p.boundaries[0] = 0;
    for (std::size_t l = 0; l < omega; ++l) p.boundaries[l + 1] = p.boundaries[l] + base + (l < extra ? 1 : 0);
    return p;
}

std::size_t smallest_stratum(std::size_t m, std::size_t omega) { return m / omega; }

}  // namespace

std::string_view to_string(RangeMode mode) { return mode == RangeMode::exact ? "exact" : "cauchy_schwarz"; }

RangeMode parse_range_mode(std::string_view text) {
    if (text == "cauchy_schwarz") return RangeMode::cauchy_schwarz;
    if (text == "exact") return RangeMode::exact;
    throw Error("unknown range mode '" + std::string(text) + "'");
}

Partitioning sort_and_partition(const VectorSet& items, std::size_t omega) {
    return partition_order(compute_norms(items).order, omega);
}

Partitioning draw_samples(Partitioning partitioning, std::size_t s, std::uint64_t seed) {
    const std::size_t omega = partitioning.strata();
    if (omega == 0) throw Error("partitioning has no strata");
    if (s < 1) throw Error("samples per stratum must be >= 1");
    for (std::size_t l = 0; l < omega; ++l) {
        if (s > partitioning.stratum_size(l))
            throw Error("s=" + std::to_string(s) + " exceeds stratum " + std::to_string(l) + " size " +
                        std::to_string(partitioning.stratum_size(l)));
    }
    std::mt19937_64 rng(seed);
    partitioning.samples.assign(omega, {});
    for (std::size_t l = 0; l < omega; ++l) {
        auto stratum = partitioning.stratum(l);
        std::vector<std::size_t> pool(stratum.begin(), stratum.end());
        // Partial Fisher-Yates: the first s slots become the sample.
        for (std::size_t i = 0; i < s; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
        }
        pool.resize(s);
        partitioning.samples[l] = std::move(pool);
    }
    return partitioning;
}

ThresholdRow make_threshold_row(double f_min, double f_max, std::size_t tau) {
    if (tau < 2) throw Error("tau must be >= 2");
    if (!(f_max >= f_min)) throw Error("threshold range has f_max < f_min");
    ThresholdRow row;
    row.t_min = static_cast<float>(f_min);
    row.step = static_cast<float>((f_max - f_min) / static_cast<double>(tau - 1));
    return row;
}

ThresholdRow compute_threshold_row(std::span<const float> u, const VectorSet& items, std::size_t tau,
                                   RangeMode mode, double max_item_norm) {
    if (u.size() != items.dim())
        throw Error("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(items.dim()));
    if (mode == RangeMode::cauchy_schwarz) {
        if (max_item_norm < 0.0) {
            max_item_norm = 0.0;
            for (std::size_t i = 0; i < items.size(); ++i) {
                auto p = items.row(i);
                max_item_norm = std::max(max_item_norm, std::sqrt(dot_unchecked(p.data(), p.data(), p.size())));
            }
        }
        const double f_max = std::sqrt(dot_unchecked(u.data(), u.data(), u.size())) * max_item_norm;
        return make_threshold_row(-f_max, f_max, tau);
    }
    double f_min = std::numeric_limits<double>::infinity();
    double f_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < items.size(); ++i) {
        const double ip = dot_unchecked(u.data(), items.row(i).data(), u.size());
        f_min = std::min(f_min, ip);
        f_max = std::max(f_max, ip);
    }
    return make_threshold_row(f_min, f_max, tau);
}

std::size_t columns_below(const ThresholdRow& row, std::size_t tau, double ip) noexcept {
    if (row.step == 0.0f) return ip > row.threshold(0) ? tau : 0;
    // Arithmetic guess on the uniform grid, then exact correction against the
    // reconstructed thresholds. Equivalent to scanning columns until the first
    // threshold >= ip.
    const double x = (ip - static_cast<double>(row.t_min)) / static_cast<double>(row.step);
    std::size_t g = 0;
    if (x > 0.0) g = x >= static_cast<double>(tau) ? tau : static_cast<std::size_t>(std::ceil(x));
    while (g > 0 && !(ip > row.threshold(g - 1))) --g;
    while (g < tau && ip > row.threshold(g)) ++g;
    return g;
}

namespace {

// Writes the tau cells of one user into `out`. `hist` is scratch of size tau + 1.
void estimate_row_into(std::span<const float> u, const ThresholdRow& row, std::size_t tau,
                       const Partitioning& part, const VectorSet& items, std::span<float> out,
                       std::vector<std::uint32_t>& hist, std::vector<double>& acc) {
    acc.assign(tau, 1.0);
    const std::size_t omega = part.strata();
    for (std::size_t l = 0; l < omega; ++l) {
        const auto& sample = part.samples[l];
        hist.assign(tau + 1, 0);
        for (std::size_t p : sample) {
            const double ip = dot_unchecked(u.data(), items.row(p).data(), u.size());
            ++hist[columns_below(row, tau, ip)];
        }
        // count[j] = #samples whose ip exceeds t_j = #samples with columns_below > j.
        const double weight = static_cast<double>(part.stratum_size(l));
        const double s = static_cast<double>(sample.size());
        std::uint64_t above = 0;
        for (std::size_t j = tau; j-- > 0;) {
            above += hist[j + 1];
            acc[j] += (weight * static_cast<double>(above)) / s;
        }
    }
    for (std::size_t j = 0; j < tau; ++j) out[j] = static_cast<float>(acc[j]);
}

}  // namespace

std::vector<float> estimate_row(std::span<const float> u, const ThresholdRow& row, std::size_t tau,
                                const Partitioning& partitioning, const VectorSet& items) {
    if (u.size() != items.dim()) throw Error("dimension mismatch between user and items");
    if (partitioning.samples.size() != partitioning.strata()) throw Error("partitioning has no samples drawn");
    std::vector<float> cells(tau);
    std::vector<std::uint32_t> hist;
    std::vector<double> acc;
    estimate_row_into(u, row, tau, partitioning, items, cells, hist, acc);
    return cells;
}

void validate_build_params(const BuildParams& params, std::size_t item_count) {
    if (params.tau < 2) throw Error("tau must be >= 2, got " + std::to_string(params.tau));
    if (params.omega < 1 || params.omega > item_count)
        throw Error("omega must be in [1, m=" + std::to_string(item_count) + "], got " +
                    std::to_string(params.omega));
    if (params.samples < 1) throw Error("samples per stratum must be >= 1");
    const std::size_t cap = smallest_stratum(item_count, params.omega);
    if (params.samples > cap)
        throw Error("samples=" + std::to_string(params.samples) + " exceeds smallest stratum size " +
                    std::to_string(cap));
}

RankTableIndex build_index(const VectorSet& users, const VectorSet& items, const BuildParams& params,
                           unsigned threads) {
    if (users.dim() != items.dim())
        throw Error("users have dim " + std::to_string(users.dim()) + ", items have dim " +
                    std::to_string(items.dim()));
    validate_build_params(params, items.size());
    const auto start = std::chrono::steady_clock::now();

    const std::size_t n = users.size();
    const std::size_t m = items.size();
    const std::size_t tau = params.tau;

    NormTable norms = compute_norms(items);
    const double max_item_norm = norms.norms[norms.order.front()];
    Partitioning part = draw_samples(partition_order(std::move(norms.order), params.omega), params.samples,
                                     params.seed);

    RankTableIndex index;
    index.n = n;
    index.m = m;
    index.tau = tau;
    index.params = params;
    index.rows.resize(n);
    index.cells.resize(n * tau);

    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::uint32_t> hist;
        std::vector<double> acc;
        for (std::size_t i = begin; i < end; ++i) {
            auto u = users.row(i);
            index.rows[i] = compute_threshold_row(u, items, tau, params.range_mode, max_item_norm);
            estimate_row_into(u, index.rows[i], tau, part, items,
                              std::span<float>(index.cells).subspan(i * tau, tau), hist, acc);
        }
    });

    std::uint64_t products = m + static_cast<std::uint64_t>(n) * params.omega * params.samples;
    if (params.range_mode == RangeMode::exact) products += static_cast<std::uint64_t>(n) * m;
    index.stats.inner_products = products;
    index.stats.build_millis = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
    return index;
}

void save_index(const RankTableIndex& index, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    detail::write_span(out, std::span<const char>(kIndexMagic));
    detail::write_pod(out, kIndexVersion);
    detail::write_pod(out, static_cast<std::uint64_t>(index.n));
    detail::write_pod(out, static_cast<std::uint64_t>(index.m));
    detail::write_pod(out, static_cast<std::uint32_t>(index.tau));
    detail::write_pod(out, static_cast<std::uint32_t>(index.params.omega));
    detail::write_pod(out, static_cast<std::uint32_t>(index.params.samples));
    detail::write_pod(out, static_cast<std::uint64_t>(index.params.seed));
    detail::write_pod(out, static_cast<std::uint8_t>(index.params.range_mode));
    for (std::size_t i = 0; i < index.n; ++i) {
        detail::write_pod(out, index.rows[i].t_min);
        detail::write_pod(out, index.rows[i].step);
        detail::write_span(out, index.row_cells(i));
    }
    detail::write_pod(out, index.stats.inner_products);
    detail::write_pod(out, index.stats.build_millis);
    if (!out) throw Error("write failed for " + path.string());
}

RankTableIndex load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::array<char, 4> magic{};
    detail::read_span(in, std::span<char>(magic), "magic");
    if (magic != kIndexMagic) throw Error("bad magic in " + path.string());
    const auto version = detail::read_pod<std::uint16_t>(in, "version");
    if (version != kIndexVersion) throw Error("unsupported index version " + std::to_string(version));

    RankTableIndex index;
    index.n = detail::read_pod<std::uint64_t>(in, "n");
    index.m = detail::read_pod<std::uint64_t>(in, "m");
    index.tau = detail::read_pod<std::uint32_t>(in, "tau");
    index.params.tau = index.tau;
    index.params.omega = detail::read_pod<std::uint32_t>(in, "omega");
    index.params.samples = detail::read_pod<std::uint32_t>(in, "s");
    index.params.seed = detail::read_pod<std::uint64_t>(in, "seed");
    const auto mode = detail::read_pod<std::uint8_t>(in, "range_mode");
    if (mode > 1) throw Error("bad range_mode byte " + std::to_string(mode));
    index.params.range_mode = static_cast<RangeMode>(mode);
    if (index.n == 0 || index.m == 0 || index.tau < 2 || index.params.omega == 0 || index.params.samples == 0)
        throw Error("malformed index header");

    const auto file_size = std::filesystem::file_size(path);
    if (index.n > file_size || file_size != serialized_index_size(index.n, index.tau))
        throw Error("index file size " + std::to_string(file_size) + " does not match header (expected " +
                    std::to_string(serialized_index_size(index.n, index.tau)) + ")");

    index.rows.resize(index.n);
    index.cells.resize(index.n * index.tau);
    for (std::size_t i = 0; i < index.n; ++i) {
        index.rows[i].t_min = detail::read_pod<float>(in, "t_min");
        index.rows[i].step = detail::read_pod<float>(in, "step");
        detail::read_span(in, std::span<float>(index.cells).subspan(i * index.tau, index.tau), "cells");
    }
    index.stats.inner_products = detail::read_pod<std::uint64_t>(in, "inner_products");
    index.stats.build_millis = detail::read_pod<std::uint64_t>(in, "build_millis");
    detail::expect_eof(in);
    for (float c : index.cells) {
        if (!std::isfinite(c)) throw Error("non-finite cell in index");
    }
    return index;
}

}  // namespace rkranks
