#pragma once
#include <stdexcept>
#include <string>

namespace chmc {

// Invalid user-supplied configuration or parameters.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numerical failure: NaN, instability, singular matrix, band exit.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// A quantitative check that a scenario asserts about its own output failed.
struct assertion_error : std::runtime_error {
    explicit assertion_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chmc
