#pragma once

#include <stdexcept>
#include <string>

namespace sandpile {

/// Malformed lattice geometry (empty dims, zero extent, bad site list).
class GeometryError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Exhaustive oracle or enumeration would exceed its configured size limit.
class CapacityError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace sandpile
