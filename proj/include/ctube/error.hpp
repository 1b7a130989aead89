#pragma once

#include <stdexcept>
#include <string>

namespace ctube {

struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw PreconditionError(what);
}

}  // namespace ctube
