#pragma once

// Network transfer matrix T(s) = (diag{g_i^{-1}(s)} + f(s) L)^{-1} in direct
// and eigenbasis form, the eigenbasis matrix H with its first-row/column
// block partition and Schur-complement inverse, and the deviation from the
// coherent rank-one dynamics (1/n) gbar(s) 11^T.

#include "dyncon/graph.hpp"
#include "dyncon/node_dynamics.hpp"
#include "dyncon/rng.hpp"
#include "dyncon/types.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

namespace dyncon {

// ---------------------------------------------------------------------------
// Operator 2-norm
// ---------------------------------------------------------------------------

struct NormEstimate {
    double value = 0.0;
    bool converged = true;
};

/// Largest singular value by power iteration on M^H M with three
/// deterministic random restarts; the maximum over restarts is returned.
///
/// A restart stops once the residual ||M^H M v - rho v|| falls below
/// `rel_tol * rho`, or when rho stalls to machine precision. After 32 plain
/// steps the iterate is advanced with repeated squares (M^H M)^(2^p), p <= 8,
/// so near-degenerate top singular values do not exhaust the cap; the
/// residual is always measured against M^H M itself.
inline NormEstimate spectral_norm_estimate(const ComplexMatrix& m, double rel_tol = 1e-10, int max_iter = 10000,
                                           int restarts = 3) {
    require(m.allFinite(), ErrorCode::InvalidArgument, "spectral_norm: non-finite entries");
    const Index cols = m.cols();
    NormEstimate best{0.0, true};
    if (cols == 0 || m.rows() == 0) return best;
    if (m.cwiseAbs().maxCoeff() == 0.0) return best;

    constexpr int plain_steps = 32;
    constexpr std::size_t max_squarings = 8;
    ComplexMatrix gram;                 // M^H M, formed on first need
    std::vector<ComplexMatrix> powers;  // normalized (M^H M)^(2^p), p = 1, 2, ...

    for (int r = 0; r < restarts; ++r) {
        SplitMix64 rng(mix_seed({0x5eedULL, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(cols)}));
        ComplexVector v(cols);
        for (Index i = 0; i < cols; ++i) v(i) = Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        v.normalize();

        double rho = 0.0;
        double prev = -1.0;
        bool converged = false;
        std::size_t level = 0;  // squarings in use
        for (int it = 0; it < max_iter; ++it) {
            ComplexVector w;
            if (gram.size() == 0) {
                const ComplexVector mv = m * v;
                w = m.adjoint() * mv;
                rho = mv.squaredNorm();  // Rayleigh quotient v^H M^H M v
            } else {
                w = gram * v;
                rho = v.dot(w).real();
            }
            if (rho == 0.0) {
                // v fell into the null space; perturb deterministically.
                v(it % cols) += 1.0;
                v.normalize();
                continue;
            }
            const double residual = (w - rho * v).norm();
            if (residual <= rel_tol * rho || std::abs(rho - prev) <= 4.0 * std::numeric_limits<double>::epsilon() * rho) {
                converged = true;
                break;
            }
            prev = rho;
            if ((it + 1) % plain_steps == 0 && level < max_squarings) {
                if (gram.size() == 0) gram = m.adjoint() * m;
                if (powers.size() <= level) {
                    const ComplexMatrix& base = level == 0 ? gram : powers[level - 1];
                    ComplexMatrix sq = base * base;
                    sq /= sq.cwiseAbs().maxCoeff();
                    powers.push_back(std::move(sq));
                }
                ++level;
            }
            if (level > 0) w = powers[level - 1] * v;
            v = w / w.norm();
        }
        const double sigma = std::sqrt(rho);
        if (sigma > best.value) best.value = sigma;
        best.converged = best.converged && converged;
    }
    return best;
}

inline double spectral_norm(const ComplexMatrix& m) { return spectral_norm_estimate(m).value; }

// ---------------------------------------------------------------------------
// Network model
// ---------------------------------------------------------------------------

/// Frequency scaling f(s) of the Laplacian: the effective coupling is f(s) L.
enum class LapScale { One, InverseS };

inline const char* to_string(LapScale scale) { return scale == LapScale::One ? "one" : "inverse_s"; }

inline Complex lap_factor(LapScale scale, Complex s) {
    if (scale == LapScale::One) return 1.0;
    require(s != 0.0, ErrorCode::InvalidArgument, "Laplacian scaling 1/s is undefined at s = 0");
    return 1.0 / s;
}

struct NetworkModel {
    NodeEnsemble ensemble;
    RealMatrix laplacian;
    SpectralData spectral;
    LapScale lap_scale = LapScale::One;

    Index size() const noexcept { return laplacian.rows(); }
};

inline NetworkModel make_network(NodeEnsemble ensemble, const RealMatrix& lap, LapScale scale = LapScale::One) {
    require(ensemble.size() == lap.rows(), ErrorCode::InvalidArgument,
            "ensemble size " + std::to_string(ensemble.size()) + " does not match Laplacian dimension " +
                std::to_string(lap.rows()));
    SpectralData sd = spectral(lap);
    return NetworkModel{std::move(ensemble), lap, std::move(sd), scale};
}

inline NetworkModel make_network(NodeEnsemble ensemble, const RealMatrix& lap, SpectralData sd,
                                 LapScale scale = LapScale::One) {
    require(ensemble.size() == lap.rows() && sd.size() == lap.rows(), ErrorCode::InvalidArgument,
            "ensemble, Laplacian and spectral data sizes differ");
    return NetworkModel{std::move(ensemble), lap, std::move(sd), scale};
}

namespace detail {

// LU with partial pivoting; rejects pivots below 1e-13 * max|a_ij|.
inline Eigen::PartialPivLU<ComplexMatrix> checked_lu(const ComplexMatrix& a, const char* what) {
    const double scale = a.cwiseAbs().maxCoeff();
    require(scale > 0.0, ErrorCode::SingularMatrix, std::string(what) + " is the zero matrix");
    Eigen::PartialPivLU<ComplexMatrix> lu(a);
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot >= 1e-13 * scale))
        throw Error(ErrorCode::SingularMatrix, std::string(what) + " is singular (evaluation at a network pole)");
    return lu;
}

inline ComplexMatrix checked_inverse(const ComplexMatrix& a, const char* what) {
    if (a.rows() == 0) return a;
    return checked_lu(a, what).inverse();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// T(s), direct and eigenbasis forms
// ---------------------------------------------------------------------------

/// T(s) = (diag{g_i^{-1}(s)} + f(s) L)^{-1}. Needs no spectral data, so it
/// also covers disconnected couplings such as L = 0.
inline ComplexMatrix assemble_T_direct(const NodeEnsemble& ens, const RealMatrix& lap, LapScale scale, Complex s) {
    require(ens.size() == lap.rows(), ErrorCode::InvalidArgument, "ensemble and Laplacian sizes differ");
    const Complex f = lap_factor(scale, s);
    ComplexMatrix m = f * lap.cast<Complex>();
    m.diagonal() += inverse_values(ens, s);
    return detail::checked_inverse(m, "diag{g^-1(s)} + f(s) L");
}

inline ComplexMatrix assemble_T_direct(const NetworkModel& net, Complex s) {
    return assemble_T_direct(net.ensemble, net.laplacian, net.lap_scale, s);
}

/// First-row/column partition of H:
/// H = [h11, h12^T; h21, H22] with Schur scalar a = h11 - h12^T H22^{-1} h21.
struct HBlocks {
    Complex h11;
    ComplexVector h12;
    ComplexVector h21;
    ComplexMatrix h22;
    Complex a;
};

inline HBlocks partition(const ComplexMatrix& h) {
    const Index n = h.rows();
    require(n >= 1 && h.cols() == n, ErrorCode::InvalidArgument, "H must be square and nonempty");
    HBlocks b;
    b.h11 = h(0, 0);
    b.h12 = h.row(0).tail(n - 1).transpose();
    b.h21 = h.col(0).tail(n - 1);
    b.h22 = h.bottomRightCorner(n - 1, n - 1);
    if (n == 1) {
        b.a = b.h11;
    } else {
        const ComplexVector solved = detail::checked_lu(b.h22, "H22").solve(b.h21);
        // Bilinear form h12^T x (no conjugation).
        b.a = b.h11 - (b.h12.transpose() * solved)(0, 0);
    }
    return b;
}

struct HSystem {
    ComplexMatrix h;
    HBlocks blocks;
    MuValue mu;
};

/// V^T diag{x} V for real orthonormal V.
inline ComplexMatrix eigenbasis_diagonal(const RealMatrix& v, const ComplexVector& x) {
    const RealMatrix re = v.transpose() * (x.real().asDiagonal() * v);
    const RealMatrix im = v.transpose() * (x.imag().asDiagonal() * v);
    ComplexMatrix out(v.cols(), v.cols());
    out.real() = re;
    out.imag() = im;
    return out;
}

/// H = V^T diag{g_i^{-1}(s)} V + f(s) Lambda, partitioned, with mu(s).
inline HSystem build_H(const NetworkModel& net, Complex s) {
    const MuValue mu = coherent_inverse(net.ensemble, s);
    const Complex f = lap_factor(net.lap_scale, s);
    ComplexMatrix h = eigenbasis_diagonal(net.spectral.vectors, inverse_values(net.ensemble, s));
    h.diagonal() += f * net.spectral.values.cast<Complex>();
    HBlocks blocks = partition(h);
    return HSystem{std::move(h), std::move(blocks), mu};
}

/// Centered perturbation D = V^T diag{g_i^{-1}(s) - mu} V.
inline ComplexMatrix perturbation_matrix(const NetworkModel& net, Complex s) {
    const MuValue mu = coherent_inverse(net.ensemble, s);
    ComplexVector centered = inverse_values(net.ensemble, s);
    centered.array() -= mu.mu;
    return eigenbasis_diagonal(net.spectral.vectors, centered);
}

/// H^{-1} from the 2x2 block formula
/// [ 1/a,                 -(1/a) h12^T H22^{-1}                           ]
/// [ -(1/a) H22^{-1} h21,  H22^{-1} + (1/a) H22^{-1} h21 h12^T H22^{-1}   ].
inline ComplexMatrix schur_inverse(const HBlocks& b) {
    const Index m = b.h22.rows();
    if (b.a == 0.0 || std::abs(b.a) < 1e-13 * std::abs(b.h11))
        throw Error(ErrorCode::NearSingularSchur, "Schur complement a is numerically zero");
    const Complex inv_a = 1.0 / b.a;
    ComplexMatrix out(m + 1, m + 1);
    out(0, 0) = inv_a;
    if (m == 0) return out;

    const ComplexMatrix h22_inv = detail::checked_inverse(b.h22, "H22");
    const ComplexVector left = h22_inv * b.h21;                            // H22^{-1} h21
    const ComplexVector right = (b.h12.transpose() * h22_inv).transpose();  // (h12^T H22^{-1})^T
    out.block(0, 1, 1, m) = -inv_a * right.transpose();
    out.block(1, 0, m, 1) = -inv_a * left;
    out.bottomRightCorner(m, m) = h22_inv + inv_a * left * right.transpose();
    return out;
}

/// T(s) = V H^{-1} V^T.
inline ComplexMatrix assemble_T_eigen(const NetworkModel& net, Complex s) {
    const HSystem hs = build_H(net, s);
    const ComplexMatrix vc = net.spectral.vectors.cast<Complex>();
    return vc * schur_inverse(hs.blocks) * vc.transpose();
}

// ---------------------------------------------------------------------------
// Deviation from coherent dynamics
// ---------------------------------------------------------------------------

struct DeviationResult {
    Complex s;
    double dev_direct = 0.0;  // ||T - (1/n) gbar 11^T||_2
    double dev_H = 0.0;       // ||H^{-1} - mu^{-1} e1 e1^T||_2 (canonical)
    Complex mu;
    bool norm_converged = true;
};

/// ||H^{-1} - mu^{-1} e1 e1^T||_2 only.
inline NormEstimate deviation_h(const NetworkModel& net, Complex s) {
    const HSystem hs = build_H(net, s);
    ComplexMatrix dev = schur_inverse(hs.blocks);
    dev(0, 0) -= hs.mu.gbar;
    return spectral_norm_estimate(dev);
}

inline DeviationResult deviation(const NetworkModel& net, Complex s) {
    const HSystem hs = build_H(net, s);
    const auto n = static_cast<double>(net.size());

    ComplexMatrix direct = assemble_T_direct(net, s);
    direct.array() -= hs.mu.gbar / n;
    const NormEstimate nd = spectral_norm_estimate(direct);

    ComplexMatrix eig = schur_inverse(hs.blocks);
    eig(0, 0) -= hs.mu.gbar;
    const NormEstimate nh = spectral_norm_estimate(eig);

    return DeviationResult{s, nd.value, nh.value, hs.mu.mu, nd.converged && nh.converged};
}

}  // namespace dyncon
