#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evgraph {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input data (event files, config files, weight files).
// Carries the byte offset of the offending data and, for record-structured
// inputs, the index of the offending record (-1 when not applicable).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset,
               std::ptrdiff_t record_index = -1)
        : Error(what), byte_offset(byte_offset), record_index(record_index) {}

    std::size_t byte_offset = 0;
    std::ptrdiff_t record_index = -1;
};

// Inconsistent model configuration or weights (dimension mismatches,
// unsupported variants, checksum failures).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Multiplier planning cannot satisfy the throughput bound.
class PlanError : public Error {
public:
    using Error::Error;
};

} // namespace evgraph
