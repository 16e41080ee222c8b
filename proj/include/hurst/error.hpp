// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hurst {

// Invalid parameter (H outside (0,1), n < 2, bad index).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A lattice series could not be brought below the requested tolerance
// before the radius cap was reached.
class ToleranceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data for which the statistic is undefined (e.g. V = 0).
class DegenerateDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; the message carries the row and column.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Path generation failure (non-definite embedding, oversize Cholesky).
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invariant violated inside the library; indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace hurst
