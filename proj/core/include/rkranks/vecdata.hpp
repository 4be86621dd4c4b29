#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rkranks {

enum class Role : std::uint8_t { users = 0, items = 1 };
enum class VectorFormat { binary, csv };
enum class NormProfile { gaussian, uniform };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);
NormProfile parse_norm_profile(std::string_view text);

/// Dense row-major set of float vectors with 64-bit ids.
///
/// Immutable after construction. The constructor enforces count >= 1,
/// dim >= 1, finite components and unique ids; violations throw Error.
class VectorSet {
public:
    VectorSet(Role role, std::size_t dim, std::vector<float> data, std::vector<std::uint64_t> ids);

    /// Ids 0..count-1.
    static VectorSet with_sequential_ids(Role role, std::size_t dim, std::vector<float> data);

    Role role() const noexcept { return role_; }
    std::size_t size() const noexcept { return ids_.size(); }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const float> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    std::uint64_t id(std::size_t i) const noexcept { return ids_[i]; }
    std::span<const std::uint64_t> ids() const noexcept { return ids_; }
    std::span<const float> data() const noexcept { return data_; }

    /// Row index of the vector carrying `id`, if any.
    std::optional<std::size_t> find(std::uint64_t id) const;

    friend bool operator==(const VectorSet&, const VectorSet&) = default;

private:
    Role role_;
    std::size_t dim_;
    std::vector<float> data_;
    std::vector<std::uint64_t> ids_;
};

/// Sum of a_i * b_i accumulated in double. Throws on dimension mismatch.
double inner_product(std::span<const float> a, std::span<const float> b);

/// Same as inner_product without the size check; callers guarantee equal sizes.
inline double dot_unchecked(const float* a, const float* b, std::size_t dim) noexcept {
    double acc = 0.0;
    for (std::size_t i = 0; i < dim; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

struct NormTable {
    std::vector<double> norms;
    /// Row indices sorted by norm descending; ties by ascending id.
    std::vector<std::size_t> order;
};

NormTable compute_norms(const VectorSet& vs);

/// `expected_dim` only matters for csv; 0 infers the dimension from row 0.
/// For binary files the stored role must match `role`.
VectorSet load_vectors(const std::filesystem::path& path, VectorFormat format, Role role,
                       std::size_t expected_dim = 0);
void save_vectors(const VectorSet& vs, const std::filesystem::path& path, VectorFormat format);

/// Picks binary when the file starts with the binary magic, csv otherwise.
VectorFormat detect_format(const std::filesystem::path& path);

VectorSet generate_synthetic(std::size_t count, std::size_t dim, std::uint64_t seed,
                             NormProfile profile, Role role = Role::items);

}  // namespace rkranks
