#pragma once

#include <stdexcept>
#include <string>

namespace assortknap {

/// Invalid caller input: bad indices, malformed files, violated preconditions.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical failure inside the LP solver (cycling, iteration cap).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken internal invariant; indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Inconsistent state detected while simulating a trajectory.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace assortknap
