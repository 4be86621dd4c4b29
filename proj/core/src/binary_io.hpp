#pragma once

// Little-endian raw field IO shared by the vector and index file formats.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>

#include "rkranks/error.hpp"

namespace rkranks::detail {

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; big-endian hosts need byte swapping");

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    static_assert(std::is_trivially_copyable_v<T>);
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
void write_span(std::ostream& out, std::span<const T> values) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
}

template <typename T>
T read_pod(std::istream& in, const char* field) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
        throw Error(std::string("truncated file while reading ") + field);
    return value;
}

template <typename T>
void read_span(std::istream& in, std::span<T> values, const char* field) {
    in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    if (in.gcount() != static_cast<std::streamsize>(values.size_bytes()))
        throw Error(std::string("truncated file while reading ") + field);
}

inline void expect_eof(std::istream& in) {
    if (in.peek() != std::char_traits<char>::eof()) throw Error("trailing bytes after end of file payload");
}

}  // namespace rkranks::detail
