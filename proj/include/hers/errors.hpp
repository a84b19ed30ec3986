// Copyright 2026 The HERS Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef HERS_ERRORS_HPP
#define HERS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hers {

// Base class for every error the library raises on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid HeParams (non-power-of-two degree, bad primes, bad scale).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Malformed call arguments (length mismatch, non-power-of-two width, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Input outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Scaled plaintext coefficients do not fit the modulus chain.
class EncodingError : public Error {
public:
    using Error::Error;
};

// An operation needed more multiplicative depth than the ciphertext has.
class DepthError : public Error {
public:
    DepthError(const std::string& what, int required, int available)
        : Error(what + " (required levels: " + std::to_string(required) +
                ", available: " + std::to_string(available) + ")"),
          required_levels(required),
          available_levels(available) {}
    int required_levels;
    int available_levels;
};

// Missing key-switching material (e.g. rotation key for a step).
class KeyError : public Error {
public:
    using Error::Error;
};

// Operands that cannot be combined (params digest, scale, level mismatch).
class IncompatibilityError : public Error {
public:
    using Error::Error;
};

// Min-max fit over a constant sample.
class DegenerateRangeError : public Error {
public:
    using Error::Error;
};

// Gallery store problems: duplicate ids, digest mismatch, bad manifest.
class StoreError : public Error {
public:
    using Error::Error;
};

// Enrolling an id that is already present.
class ConflictError : public StoreError {
public:
    using StoreError::StoreError;
};

// Not enough impostor samples to resolve an FMR target.
class ResolutionError : public Error {
public:
    using Error::Error;
};

// Corrupt or mismatched serialized blobs.
class SerializationError : public Error {
public:
    using Error::Error;
};

// I/O failures while touching workspace files.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace hers

#endif  // HERS_ERRORS_HPP
