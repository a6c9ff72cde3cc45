#pragma once

#include <stdexcept>
#include <string>

namespace jslight {

// Base for every failure the library reports through exceptions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace jslight
