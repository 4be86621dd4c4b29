#include "rkranks/vecdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <unordered_set>

#include "binary_io.hpp"
#include "rkranks/error.hpp"

namespace rkranks {

namespace {

constexpr std::array<char, 4> kVectorMagic{'R', 'K', 'V', '1'};

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

float parse_float(std::string_view text, std::size_t row) {
    // std::from_chars for float is available in libstdc++ 11.
    float value = 0.0f;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error("row " + std::to_string(row) + ": cannot parse value '" + std::string(text) + "'");
    return value;
}

std::uint64_t parse_id(std::string_view text, std::size_t row) {
    std::uint64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error("row " + std::to_string(row) + ": cannot parse id '" + std::string(text) + "'");
    return value;
}

VectorSet load_csv(const std::filesystem::path& path, Role role, std::size_t expected_dim) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<float> data;
    std::vector<std::uint64_t> ids;
    std::size_t dim = expected_dim;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_csv(line);
        if (dim == 0) {
            if (fields.size() < 2) throw Error("row 0: expected an id and at least one value");
            dim = fields.size() - 1;
        }
        if (fields.size() != dim + 1)
            throw Error("row " + std::to_string(row) + ": expected " + std::to_string(dim) +
                        " values, got " + std::to_string(fields.size() - 1));
        ids.push_back(parse_id(fields[0], row));
        for (std::size_t c = 1; c < fields.size(); ++c) data.push_back(parse_float(fields[c], row));
        ++row;
    }
    if (ids.empty()) throw Error("no vectors in " + path.string());
    return VectorSet(role, dim, std::move(data), std::move(ids));
}

VectorSet load_binary(const std::filesystem::path& path, Role role) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::array<char, 4> magic{};
    detail::read_span(in, std::span<char>(magic), "magic");
    if (magic != kVectorMagic) throw Error("bad magic in " + path.string());
    const auto stored_role = detail::read_pod<std::uint8_t>(in, "role");
    if (stored_role > 1) throw Error("bad role byte " + std::to_string(stored_role));
    if (static_cast<Role>(stored_role) != role)
        throw Error(path.string() + " holds " + std::string(to_string(static_cast<Role>(stored_role))) +
                    ", expected " + std::string(to_string(role)));
    const auto count = detail::read_pod<std::uint64_t>(in, "count");
    const auto dim = detail::read_pod<std::uint32_t>(in, "dim");
    if (count == 0 || dim == 0) throw Error("malformed header: count and dim must be positive");
    const auto file_size = std::filesystem::file_size(path);
    const std::uint64_t header = 4 + 1 + 8 + 4;
    // Reject absurd headers before allocating.
    if (count > file_size || count * (8 + 4ull * dim) != file_size - header)
        throw Error("malformed header: size does not match count=" + std::to_string(count) +
                    " dim=" + std::to_string(dim));
    std::vector<std::uint64_t> ids(count);
    std::vector<float> data(count * dim);
    detail::read_span(in, std::span<std::uint64_t>(ids), "ids");
    detail::read_span(in, std::span<float>(data), "data");
    detail::expect_eof(in);
    return VectorSet(role, dim, std::move(data), std::move(ids));
}

}  // namespace

std::string_view to_string(Role role) { return role == Role::users ? "users" : "items"; }

Role parse_role(std::string_view text) {
    if (text == "users") return Role::users;
    if (text == "items") return Role::items;
    throw Error("unknown role '" + std::string(text) + "'");
}

NormProfile parse_norm_profile(std::string_view text) {
    if (text == "gaussian") return NormProfile::gaussian;
    if (text == "uniform") return NormProfile::uniform;
    throw Error("unknown norm profile '" + std::string(text) + "'");
}

VectorSet::VectorSet(Role role, std::size_t dim, std::vector<float> data, std::vector<std::uint64_t> ids)
    : role_(role), dim_(dim), data_(std::move(data)), ids_(std::move(ids)) {
    if (dim_ == 0) throw Error("vector dimension must be >= 1");
    if (ids_.empty()) throw Error("vector set must hold at least one vector");
    if (data_.size() != ids_.size() * dim_)
        throw Error("data holds " + std::to_string(data_.size()) + " floats, expected " +
                    std::to_string(ids_.size() * dim_));
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) throw Error("row " + std::to_string(i / dim_) + ": non-finite value");
    }
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(ids_.size());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (!seen.insert(ids_[i]).second)
            throw Error("row " + std::to_string(i) + ": duplicate id " + std::to_string(ids_[i]));
    }
}

VectorSet VectorSet::with_sequential_ids(Role role, std::size_t dim, std::vector<float> data) {
    if (dim == 0) throw Error("vector dimension must be >= 1");
    std::vector<std::uint64_t> ids(data.size() / dim);
    std::iota(ids.begin(), ids.end(), std::uint64_t{0});
    return VectorSet(role, dim, std::move(data), std::move(ids));
}

std::optional<std::size_t> VectorSet::find(std::uint64_t id) const {
    auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

double inner_product(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw Error("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    return dot_unchecked(a.data(), b.data(), a.size());
}

NormTable compute_norms(const VectorSet& vs) {
    NormTable table;
    table.norms.resize(vs.size());
    for (std::size_t i = 0; i < vs.size(); ++i) {
        auto r = vs.row(i);
        table.norms[i] = std::sqrt(dot_unchecked(r.data(), r.data(), r.size()));
    }
    table.order.resize(vs.size());
    std::iota(table.order.begin(), table.order.end(), std::size_t{0});
    std::sort(table.order.begin(), table.order.end(), [&](std::size_t a, std::size_t b) {
        if (table.norms[a] != table.norms[b]) return table.norms[a] > table.norms[b];
        return vs.id(a) < vs.id(b);
    });
    return table;
}

VectorFormat detect_format(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    return (in.gcount() == 4 && magic == kVectorMagic) ? VectorFormat::binary : VectorFormat::csv;
}

VectorSet load_vectors(const std::filesystem::path& path, VectorFormat format, Role role,
                       std::size_t expected_dim) {
    VectorSet vs = format == VectorFormat::binary ? load_binary(path, role) : load_csv(path, role, expected_dim);
    if (expected_dim != 0 && vs.dim() != expected_dim)
        throw Error(path.string() + ": dimension " + std::to_string(vs.dim()) + ", expected " +
                    std::to_string(expected_dim));
    return vs;
}

void save_vectors(const VectorSet& vs, const std::filesystem::path& path, VectorFormat format) {
    if (format == VectorFormat::binary) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        detail::write_span(out, std::span<const char>(kVectorMagic));
        detail::write_pod(out, static_cast<std::uint8_t>(vs.role()));
        detail::write_pod(out, static_cast<std::uint64_t>(vs.size()));
        detail::write_pod(out, static_cast<std::uint32_t>(vs.dim()));
        detail::write_span(out, vs.ids());
        detail::write_span(out, vs.data());
        if (!out) throw Error("write failed for " + path.string());
        return;
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    std::array<char, 64> buf{};
    for (std::size_t i = 0; i < vs.size(); ++i) {
        out << vs.id(i);
        for (float v : vs.row(i)) {
            // Shortest round-trip representation.
            auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
            out << ',' << std::string_view(buf.data(), static_cast<std::size_t>(ptr - buf.data()));
        }
        out << '\n';
    }
    if (!out) throw Error("write failed for " + path.string());
}

VectorSet generate_synthetic(std::size_t count, std::size_t dim, std::uint64_t seed, NormProfile profile,
                             Role role) {
    if (count == 0 || dim == 0) throw Error("count and dim must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<float> data(count * dim);
    if (profile == NormProfile::gaussian) {
        std::normal_distribution<float> dist(0.0f, 1.0f);
        for (auto& x : data) x = dist(rng);
    } else {
        std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
        for (auto& x : data) x = dist(rng);
    }
    return VectorSet::with_sequential_ids(role, dim, std::move(data));
}

}  // namespace rkranks
