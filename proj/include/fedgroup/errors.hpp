#pragma once

#include <stdexcept>
#include <string>

namespace fedgroup {

// Error taxonomy shared by all modules. Everything derives from Error so
// callers can catch the whole family at the experiment boundary.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user-supplied configuration (bad dims, bad keys, violated bounds).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// A caller broke an API precondition (shape mismatch, empty input, ...).
class ContractError : public Error {
public:
  explicit ContractError(const std::string& msg) : Error(msg) {}
};

// Malformed external data (IDX files, serialized LSH families).
class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// A dataset cannot satisfy a requested composition.
class CapacityError : public Error {
public:
  explicit CapacityError(const std::string& msg) : Error(msg) {}
};

// Non-finite values or integer overflow produced at runtime.
class NumericError : public Error {
public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// I/O failure on an output path.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace fedgroup
