#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spectra {

/// Base class for all library errors. `code()` is the stable machine-readable
/// tag the CLI prints as `error[CODE]: message`.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

    /// Process exit class: 1 = validation / malformed input, 2 = numerical.
    virtual int exit_class() const noexcept { return 1; }

private:
    std::string code_;
};

struct InvalidDescriptor : Error {
    explicit InvalidDescriptor(const std::string& msg) : Error("DESCRIPTOR", msg) {}
};

struct LevelTooLarge : Error {
    explicit LevelTooLarge(const std::string& msg) : Error("LEVEL", msg) {}
};

struct GroupMismatch : Error {
    explicit GroupMismatch(const std::string& msg) : Error("MISMATCH", msg) {}
};

struct LevelMismatch : Error {
    explicit LevelMismatch(const std::string& msg) : Error("MISMATCH", msg) {}
};

/// A dual index is finer than the level it is used with.
struct LevelTooCoarse : Error {
    explicit LevelTooCoarse(const std::string& msg) : Error("COARSE", msg) {}
};

struct BadExponent : Error {
    explicit BadExponent(const std::string& msg) : Error("EXPONENT", msg) {}
};

/// Positioned parse failure for the symbol expression grammar.
struct SyntaxError : Error {
    SyntaxError(int line_, int col_, const std::string& expected_)
        : Error("SYNTAX",
                "line " + std::to_string(line_) + ", col " + std::to_string(col_) +
                    ": expected " + expected_),
          line(line_), col(col_), expected(expected_) {}

    int line;
    int col;
    std::string expected;
};

/// Runtime evaluation failure (division by zero, log of zero, ...) with the
/// source position of the offending node.
struct EvalError : Error {
    EvalError(const std::string& what_, int line_, int col_)
        : Error("EVAL", what_ + " (at line " + std::to_string(line_) + ", col " +
                            std::to_string(col_) + ")"),
          line(line_), col(col_) {}

    int exit_class() const noexcept override { return 2; }

    int line;
    int col;
};

struct NumericalFailure : Error {
    explicit NumericalFailure(const std::string& msg) : Error("NUMERIC", msg) {}
    int exit_class() const noexcept override { return 2; }
};

struct SingularMatrix : Error {
    explicit SingularMatrix(const std::string& msg) : Error("SINGULAR", msg) {}
    int exit_class() const noexcept override { return 2; }
};

/// sigma - lambda vanishes at a grid node, so 1/(sigma - lambda) is not evaluable.
struct SymbolZero : Error {
    explicit SymbolZero(const std::string& msg) : Error("SYMBOLZERO", msg) {}
    int exit_class() const noexcept override { return 2; }
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("IO", msg) {}
};

struct FormatError : Error {
    FormatError(std::uint64_t offset_, const std::string& reason_)
        : Error("FORMAT", "offset " + std::to_string(offset_) + ": " + reason_),
          offset(offset_), reason(reason_) {}

    std::uint64_t offset;
    std::string reason;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("CONFIG", msg) {}
};

struct EmptyGrid : Error {
    explicit EmptyGrid(const std::string& msg) : Error("CONFIG", msg) {}
};

}  // namespace spectra
