#pragma once

#include <stdexcept>
#include <string>

namespace contractlab {

// Invalid or inconsistent run configuration (bad key, bad range, bad file
// contents). The message names the offending key or flag.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failure; the message carries the path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// A well-posed search found no feasible solution.
struct InfeasibleError : std::runtime_error {
    explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace contractlab
