#pragma once

#include <stdexcept>
#include <string>

namespace arbgeo {

// Point or parameter outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Caller violated a documented precondition (bad shape, open path, ...).
struct PreconditionError : std::invalid_argument {
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// Operation defined only for a specific dimension (e.g. scalar curl needs 2-D).
struct UnsupportedDimensionError : PreconditionError {
    explicit UnsupportedDimensionError(const std::string& what) : PreconditionError(what) {}
};

// Direction field vanishes where a curve was asked to start.
struct DegenerateDirectionError : std::runtime_error {
    explicit DegenerateDirectionError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver exhausted its iteration budget.
struct ConvergenceError : std::runtime_error {
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Fisher metric failed the positive-definiteness check (non-minimal family).
struct DegenerateMetricError : std::runtime_error {
    explicit DegenerateMetricError(const std::string& what) : std::runtime_error(what) {}
};

// Matrix inversion requested on a singular or ill-conditioned matrix.
struct SingularityError : std::runtime_error {
    explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

// Probability mass underflowed below representable range during enumeration.
struct UnderflowError : std::runtime_error {
    explicit UnderflowError(const std::string& what) : std::runtime_error(what) {}
};

// Adaptive integrator halved its step below the allowed floor.
struct StiffnessError : std::runtime_error {
    explicit StiffnessError(const std::string& what) : std::runtime_error(what) {}
};

// Structural problem with a graph query (missing edge, unknown node, ...).
struct GraphError : std::runtime_error {
    explicit GraphError(const std::string& what) : std::runtime_error(what) {}
};

// Enumeration request exceeds the configured size bound.
struct SizeError : std::length_error {
    explicit SizeError(const std::string& what) : std::length_error(what) {}
};

// Same ordered node pair appears twice in an edge list.
struct DuplicateEdgeError : GraphError {
    explicit DuplicateEdgeError(const std::string& what) : GraphError(what) {}
};

// Malformed input file; message names line (and column where known).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace arbgeo
