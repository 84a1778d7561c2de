#pragma once

#include <stdexcept>
#include <string>

namespace sbk {

// Base for everything the engine can throw on bad input or bad state.
// Subtypes carry enough context (line numbers, ucodes, positions) to
// produce a usable diagnostic without a debugger.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column = 0)
        : Error(msg + " (line " + std::to_string(line) +
                (column > 0 ? ", col " + std::to_string(column) : "") + ")"),
          line_(line),
          column_(column) {}

    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class UnknownEntityError : public Error {
public:
    explicit UnknownEntityError(const std::string& ucode)
        : Error("unknown entity: " + ucode), ucode_(ucode) {}

    const std::string& ucode() const { return ucode_; }

private:
    std::string ucode_;
};

// A relation whose predicate does not fit its endpoint kinds, or an
// entity whose optional fields violate its kind.
class TypeViolationError : public Error {
public:
    explicit TypeViolationError(const std::string& msg) : Error(msg) {}
};

class DanglingReferenceError : public Error {
public:
    explicit DanglingReferenceError(const std::string& ucode)
        : Error("relation references undeclared ucode: " + ucode), ucode_(ucode) {}

    const std::string& ucode() const { return ucode_; }

private:
    std::string ucode_;
};

// Raised when an event or space cannot be tied to the topology pieces an
// operation needs (missing parent storey, no elevator hall on a floor, ...).
class TopologyResolutionError : public Error {
public:
    explicit TopologyResolutionError(const std::string& msg) : Error(msg) {}
};

class RankDeficiencyError : public Error {
public:
    explicit RankDeficiencyError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace sbk
