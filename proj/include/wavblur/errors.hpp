#pragma once

#include <stdexcept>
#include <string>

namespace wavblur {

// Exit codes used by the CLI; library code throws, the CLI maps.
enum ExitCode {
    kExitOk = 0,
    kExitUsage = 2,
    kExitIo = 3,
    kExitFormat = 4,
    kExitGeometry = 5,
    kExitInfeasible = 6,
};

class Error : public std::runtime_error {
public:
    Error(std::string msg, int exit_code)
        : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

// File missing, unreadable, or unwritable.
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg, kExitIo) {}
};

// Bad magic bytes, unsupported bit depth, truncated payload.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg, kExitFormat) {}
};

// Stored checksum disagrees with the recomputed one.
class ChecksumError : public Error {
public:
    explicit ChecksumError(const std::string& msg) : Error(msg, kExitFormat) {}
};

// Text input violates a documented grammar; carries line/column.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int column)
        : Error(msg + " (line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ")",
                kExitFormat),
          line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

// Image sizes disagree or are not powers of two.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error(msg, kExitGeometry) {}
};

// Decomposition depth incompatible with the signal length.
class LevelError : public Error {
public:
    explicit LevelError(const std::string& msg) : Error(msg, kExitGeometry) {}
};

// Coefficient set inconsistent with its declared geometry.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg, kExitGeometry) {}
};

// Sub-band index outside the transform's index space.
class IndexError : public Error {
public:
    explicit IndexError(const std::string& msg) : Error(msg, kExitGeometry) {}
};

// Pattern or mask inconsistent with the transform geometry.
class GeometryError : public Error {
public:
    explicit GeometryError(const std::string& msg) : Error(msg, kExitGeometry) {}
};

// Coordinates outside the kernel's domain.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg, kExitGeometry) {}
};

// Problem too small or collapsed (for example no usable coefficient pairs).
class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& msg) : Error(msg, kExitGeometry) {}
};

// Stored operator metadata disagrees with the requested transform.
class MetaMismatch : public Error {
public:
    explicit MetaMismatch(const std::string& msg) : Error(msg, kExitGeometry) {}
};

}  // namespace wavblur
