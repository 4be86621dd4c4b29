#pragma once

#include <stdexcept>
#include <string>

namespace rkranks {

/// Raised for every contract violation in the library: bad arguments,
/// malformed files, precondition failures. The message is a single line.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rkranks
