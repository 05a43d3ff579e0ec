#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace porobound {

// Malformed or inconsistent user input (files, indices, configuration).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Singular systems, ill-conditioning, solver breakdown.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverDivergedError : public NumericalError {
public:
    SolverDivergedError(const std::string &what, std::vector<double> history)
        : NumericalError(what), m_history(std::move(history)) {}

    // Relative residual after each iteration.
    const std::vector<double> &residual_history() const { return m_history; }

private:
    std::vector<double> m_history;
};

} // namespace porobound
