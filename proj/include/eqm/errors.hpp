#pragma once

#include <stdexcept>
#include <string>

namespace eqm {

// Bad caller input: wrong dimension, bad side lengths, out-of-range levels.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numeric range exceeded (radius overflow, K(r) below the first bracket).
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class UnsupportedGeometry : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// The generated region does not cover what a query needs; enlarge the margin.
class UndecidableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateSample : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace eqm
