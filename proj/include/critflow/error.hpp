#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace critflow {

enum class ErrorKind {
    InvalidField,
    AsymmetricSpectrum,
    RankMismatch,
    GridMismatch,
    NonZeroMean,
    UnsupportedOrder,
    InvalidExponents,
    InvalidConfig,
    InvalidMask,
    NotSolenoidal,
    NoConvergence,
    NoContraction,
    SeriesDiverges,
    IterateBlowup,
    Unstable,
    SchemesDisagree,
    FormatError,
    IoError,
};

std::string_view to_string(ErrorKind k);

// One exception type; callers switch on kind() when they care.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& what) { throw Error(k, what); }

inline void require(bool cond, ErrorKind k, const std::string& what) {
    if (!cond) fail(k, what);
}

}  // namespace critflow
