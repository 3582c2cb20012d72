#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dyncon {

using Complex = std::complex<double>;
using Index = Eigen::Index;

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

enum class ErrorCode {
    InvalidArgument,
    NotConnected,
    NoConvergence,
    PoleOfInverse,      // g_i^{-1}(s) has a pole (numerator of g_i vanishes)
    CoherentUndefined,  // mu(s) = 0, so the coherent dynamics is undefined
    SingularMatrix,     // evaluation at a network pole
    NearSingularSchur,
    WrongNodeKind,
    Divergence,
    StabilityGuard,
    ImproperTransferFunction,
    GridMismatch,
    Parse,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid argument";
        case ErrorCode::NotConnected: return "graph not connected";
        case ErrorCode::NoConvergence: return "no convergence";
        case ErrorCode::PoleOfInverse: return "pole of inverse";
        case ErrorCode::CoherentUndefined: return "coherent dynamics undefined";
        case ErrorCode::SingularMatrix: return "singular matrix";
        case ErrorCode::NearSingularSchur: return "near-singular Schur complement";
        case ErrorCode::WrongNodeKind: return "wrong node kind";
        case ErrorCode::Divergence: return "divergence";
        case ErrorCode::StabilityGuard: return "stability guard";
        case ErrorCode::ImproperTransferFunction: return "improper transfer function";
        case ErrorCode::GridMismatch: return "time grid mismatch";
        case ErrorCode::Parse: return "parse error";
        case ErrorCode::Io: return "i/o error";
    }
    return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

    ErrorCode code() const noexcept { return code_; }
    /// The message without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

}  // namespace dyncon
