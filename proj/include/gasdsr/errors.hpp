#pragma once

#include <stdexcept>
#include <string>

namespace gasdsr {

/// File could not be read or is not syntactically valid.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// A structural or numeric invariant of the data model is violated.
/// The message carries the offending field path, e.g. "nodes[2].density_min".
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class GridError : public std::runtime_error {
public:
    explicit GridError(const std::string& what) : std::runtime_error(what) {}
};

class BuildError : public std::runtime_error {
public:
    explicit BuildError(const std::string& what) : std::runtime_error(what) {}
};

/// Newton iteration on the transient or steady equations failed to converge.
class NewtonDivergence : public std::runtime_error {
public:
    explicit NewtonDivergence(const std::string& what) : std::runtime_error(what) {}
};

/// A nonpositive density (or other physically meaningless state) was produced.
class NonPhysical : public std::runtime_error {
public:
    explicit NonPhysical(const std::string& what) : std::runtime_error(what) {}
};

/// Interior-point linear algebra broke down; message includes the iteration trace.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what) : std::runtime_error(what) {}
};

/// No sampled cap value produced a rank-one solution (search failure).
class NoRankOneFound : public std::runtime_error {
public:
    explicit NoRankOneFound(const std::string& what) : std::runtime_error(what) {}
};

/// Boundary re-simulation detected security violations.
class VerificationFailed : public std::runtime_error {
public:
    explicit VerificationFailed(const std::string& what) : std::runtime_error(what) {}
};

} // namespace gasdsr
