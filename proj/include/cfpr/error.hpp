#pragma once

#include <stdexcept>
#include <string>

namespace cfpr {

// All recoverable failures (parse errors, shape mismatches, config
// problems) are reported as Error with a human-readable message that
// names the offending key, field, or index.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace cfpr
