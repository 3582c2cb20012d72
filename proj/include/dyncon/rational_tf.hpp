#pragma once

#include "dyncon/types.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dyncon {

/// Real polynomial, coefficients in ascending powers of s.
using Polynomial = std::vector<double>;

namespace poly {

inline Polynomial trimmed(Polynomial p) {
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
    if (p.empty()) p.push_back(0.0);
    return p;
}

inline int degree(const Polynomial& p) {
    for (std::size_t k = p.size(); k-- > 0;)
        if (p[k] != 0.0) return static_cast<int>(k);
    return -1;  // zero polynomial
}

inline bool is_zero(const Polynomial& p) { return degree(p) < 0; }

inline Polynomial add(const Polynomial& a, const Polynomial& b) {
    Polynomial out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t k = 0; k < a.size(); ++k) out[k] += a[k];
    for (std::size_t k = 0; k < b.size(); ++k) out[k] += b[k];
    return trimmed(std::move(out));
}

inline Polynomial multiply(const Polynomial& a, const Polynomial& b) {
    if (a.empty() || b.empty()) return {0.0};
    Polynomial out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return trimmed(std::move(out));
}

inline Polynomial scale(Polynomial p, double c) {
    for (double& x : p) x *= c;
    return trimmed(std::move(p));
}

/// Horner evaluation at a complex point.
inline Complex evaluate(const Polynomial& p, Complex s) {
    Complex acc = 0.0;
    for (std::size_t k = p.size(); k-- > 0;) acc = acc * s + p[k];
    return acc;
}

/// Upper bound on |p(s)| from the triangle inequality; used as a
/// cancellation scale.
inline double magnitude_bound(const Polynomial& p, Complex s) {
    const double r = std::abs(s);
    double acc = 0.0;
    for (std::size_t k = p.size(); k-- > 0;) acc = acc * r + std::abs(p[k]);
    return acc;
}

}  // namespace poly

class RationalTF {
public:
    RationalTF() : num_{0.0}, den_{1.0} {}

    RationalTF(Polynomial num, Polynomial den) : num_(poly::trimmed(std::move(num))), den_(poly::trimmed(std::move(den))) {
        require(!poly::is_zero(den_), ErrorCode::InvalidArgument, "transfer function denominator is zero");
        for (double c : num_) require(std::isfinite(c), ErrorCode::InvalidArgument, "non-finite numerator coefficient");
        for (double c : den_) require(std::isfinite(c), ErrorCode::InvalidArgument, "non-finite denominator coefficient");
    }

    const Polynomial& num() const noexcept { return num_; }
    const Polynomial& den() const noexcept { return den_; }

    int order() const { return poly::degree(den_); }
    bool is_proper() const { return poly::degree(num_) <= poly::degree(den_); }
    bool is_strictly_proper() const { return poly::degree(num_) < poly::degree(den_); }

    Complex operator()(Complex s) const { return poly::evaluate(num_, s) / poly::evaluate(den_, s); }

    bool operator==(const RationalTF&) const = default;

private:
    Polynomial num_;
    Polynomial den_;
};

/// g^{-1}(s) = den(s) / num(s).
inline Complex eval_inv(const RationalTF& tf, Complex s) {
    const Complex n = poly::evaluate(tf.num(), s);
    const double scale = poly::magnitude_bound(tf.num(), s);
    if (scale == 0.0 || std::abs(n) < 1e-14 * scale)
        throw Error(ErrorCode::PoleOfInverse, "transfer function numerator vanishes at the evaluation point");
    return poly::evaluate(tf.den(), s) / n;
}

}  // namespace dyncon
