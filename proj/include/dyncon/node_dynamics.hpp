#pragma once

// Nodal transfer functions: random ensembles, inverse evaluation, the
// expected coherent dynamics and the two reduced-order grid models.

#include "dyncon/quadrature.hpp"
#include "dyncon/rational_tf.hpp"
#include "dyncon/rng.hpp"
#include "dyncon/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace dyncon {

enum class NodeKind {
    Integrator,  // g(s) = k / s
    Swing,       // g(s) = 1 / (m s + d)
    Turbine,     // swing plus optional turbine governor loop
    Explicit,    // transfer functions supplied directly, no parameters
};

inline const char* to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Integrator: return "integrator";
        case NodeKind::Swing: return "swing";
        case NodeKind::Turbine: return "turbine";
        case NodeKind::Explicit: return "explicit";
    }
    return "unknown";
}

/// Closed interval for a uniform draw; lo == hi means a fixed value.
struct ParamRange {
    double lo = 0.0;
    double hi = 0.0;

    double mean() const noexcept { return 0.5 * (lo + hi); }
    bool fixed() const noexcept { return lo == hi; }
    bool operator==(const ParamRange&) const = default;
};

struct NodeDistributionSpec {
    NodeKind kind = NodeKind::Integrator;
    ParamRange gain{1.0, 5.0};
    // Power-network defaults are configuration placeholders, not data.
    ParamRange inertia{1.0, 10.0};
    ParamRange damping{0.1, 5.0};
    ParamRange droop{2.0, 10.0};  // r^{-1}
    ParamRange turbine_time{1.0, 1.0};
    std::vector<double> turbine_time_choices{1.0, 2.0, 4.0};  // overrides turbine_time when nonempty
    double turbine_fraction = 0.0;

    bool operator==(const NodeDistributionSpec&) const = default;

    static NodeDistributionSpec integrator(double lo, double hi) {
        NodeDistributionSpec spec;
        spec.kind = NodeKind::Integrator;
        spec.gain = {lo, hi};
        return spec;
    }

    static NodeDistributionSpec swing(ParamRange inertia, ParamRange damping) {
        NodeDistributionSpec spec;
        spec.kind = NodeKind::Swing;
        spec.inertia = inertia;
        spec.damping = damping;
        return spec;
    }

    static NodeDistributionSpec turbine(ParamRange inertia, ParamRange damping, ParamRange droop,
                                        std::vector<double> time_choices, double fraction) {
        NodeDistributionSpec spec;
        spec.kind = NodeKind::Turbine;
        spec.inertia = inertia;
        spec.damping = damping;
        spec.droop = droop;
        spec.turbine_time_choices = std::move(time_choices);
        spec.turbine_fraction = fraction;
        return spec;
    }

    void validate() const {
        auto check = [](const ParamRange& r, const char* name) {
            require(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo > 0.0 && r.lo <= r.hi,
                    ErrorCode::InvalidArgument,
                    std::string("range for ") + name + " must be finite, positive and ordered");
        };
        switch (kind) {
            case NodeKind::Integrator: check(gain, "gain"); break;
            case NodeKind::Turbine:
                check(droop, "droop");
                if (turbine_time_choices.empty()) {
                    check(turbine_time, "turbine time constant");
                } else {
                    for (double tau : turbine_time_choices)
                        require(std::isfinite(tau) && tau > 0.0, ErrorCode::InvalidArgument,
                                "turbine time constant choices must be positive");
                }
                require(turbine_fraction >= 0.0 && turbine_fraction <= 1.0, ErrorCode::InvalidArgument,
                        "turbine fraction must lie in [0, 1]");
                [[fallthrough]];
            case NodeKind::Swing:
                check(inertia, "inertia");
                check(damping, "damping");
                break;
            case NodeKind::Explicit:
                throw Error(ErrorCode::InvalidArgument, "explicit ensembles have no distribution");
        }
    }
};

/// Raw per-node parameters. turbine_time == 0 means no turbine control.
struct NodeParams {
    double gain = 0.0;
    double inertia = 0.0;
    double damping = 0.0;
    double droop = 0.0;
    double turbine_time = 0.0;

    bool has_turbine() const noexcept { return turbine_time > 0.0; }
    bool operator==(const NodeParams&) const = default;
};

inline RationalTF node_transfer_function(NodeKind kind, const NodeParams& p) {
    switch (kind) {
        case NodeKind::Integrator: return RationalTF({p.gain}, {0.0, 1.0});
        case NodeKind::Swing: return RationalTF({1.0}, {p.damping, p.inertia});
        case NodeKind::Turbine:
            if (!p.has_turbine()) return RationalTF({1.0}, {p.damping, p.inertia});
            // (tau s + 1) / ((m s + d)(tau s + 1) + r^{-1})
            return RationalTF({1.0, p.turbine_time},
                              {p.damping + p.droop, p.inertia + p.damping * p.turbine_time, p.inertia * p.turbine_time});
        case NodeKind::Explicit: break;
    }
    throw Error(ErrorCode::WrongNodeKind, "explicit nodes have no parametric transfer function");
}

struct NodeEnsemble {
    NodeKind kind = NodeKind::Explicit;
    std::optional<NodeDistributionSpec> spec;
    std::vector<NodeParams> params;  // empty for explicit ensembles
    std::vector<RationalTF> nodes;
    std::uint64_t seed = 0;

    Index size() const noexcept { return static_cast<Index>(nodes.size()); }
    bool operator==(const NodeEnsemble&) const = default;
};

/// Builds an ensemble from given parameters (no distribution attached).
inline NodeEnsemble make_ensemble(NodeKind kind, std::vector<NodeParams> params) {
    require(kind != NodeKind::Explicit, ErrorCode::InvalidArgument, "use make_explicit_ensemble");
    require(!params.empty(), ErrorCode::InvalidArgument, "ensemble needs at least one node");
    NodeEnsemble ens;
    ens.kind = kind;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const NodeParams& p = params[i];
        const std::string where = " at node " + std::to_string(i);
        if (kind == NodeKind::Integrator) {
            require(p.gain > 0.0 && std::isfinite(p.gain), ErrorCode::InvalidArgument, "gain must be positive" + where);
        } else {
            require(p.inertia > 0.0 && std::isfinite(p.inertia), ErrorCode::InvalidArgument, "inertia must be positive" + where);
            require(p.damping >= 0.0 && std::isfinite(p.damping), ErrorCode::InvalidArgument, "damping must be nonnegative" + where);
            require(p.droop >= 0.0 && p.turbine_time >= 0.0, ErrorCode::InvalidArgument,
                    "droop and turbine time must be nonnegative" + where);
            require(kind == NodeKind::Turbine || !p.has_turbine(), ErrorCode::InvalidArgument,
                    "swing nodes cannot carry a turbine" + where);
        }
        ens.nodes.push_back(node_transfer_function(kind, p));
    }
    ens.params = std::move(params);
    return ens;
}

inline NodeEnsemble make_explicit_ensemble(std::vector<RationalTF> nodes) {
    require(!nodes.empty(), ErrorCode::InvalidArgument, "ensemble needs at least one node");
    NodeEnsemble ens;
    ens.kind = NodeKind::Explicit;
    ens.nodes = std::move(nodes);
    return ens;
}

namespace slot {
inline constexpr std::uint64_t gain = 0;
inline constexpr std::uint64_t inertia = 1;
inline constexpr std::uint64_t damping = 2;
inline constexpr std::uint64_t droop = 3;
inline constexpr std::uint64_t turbine_time = 4;
inline constexpr std::uint64_t shuffle = 5;
}  // namespace slot

/// Draws n i.i.d. nodes. Every parameter is keyed by (seed, node, slot);
/// for turbine specs the first round(fraction * n) nodes of a seeded
/// shuffle receive a turbine.
inline NodeEnsemble sample_ensemble(const NodeDistributionSpec& spec, Index n, std::uint64_t seed) {
    spec.validate();
    require(n >= 2, ErrorCode::InvalidArgument, "ensemble size must be at least 2");
    const CounterRng rng(seed);
    const auto count = static_cast<std::size_t>(n);
    std::vector<NodeParams> params(count);

    auto draw = [&](const ParamRange& r, std::size_t i, std::uint64_t s) {
        return r.fixed() ? r.lo : rng.uniform(r.lo, r.hi, i, s);
    };

    for (std::size_t i = 0; i < count; ++i) {
        NodeParams& p = params[i];
        if (spec.kind == NodeKind::Integrator) {
            p.gain = draw(spec.gain, i, slot::gain);
        } else {
            p.inertia = draw(spec.inertia, i, slot::inertia);
            p.damping = draw(spec.damping, i, slot::damping);
        }
    }

    if (spec.kind == NodeKind::Turbine) {
        std::vector<std::size_t> order(count);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = count - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(rng.unit(i, slot::shuffle) * static_cast<double>(i + 1));
            std::swap(order[i], order[std::min(j, i)]);
        }
        const auto turbines = static_cast<std::size_t>(std::lround(spec.turbine_fraction * static_cast<double>(n)));
        for (std::size_t r = 0; r < turbines; ++r) {
            const std::size_t i = order[r];
            NodeParams& p = params[i];
            p.droop = draw(spec.droop, i, slot::droop);
            if (spec.turbine_time_choices.empty()) {
                p.turbine_time = draw(spec.turbine_time, i, slot::turbine_time);
            } else {
                const auto m = spec.turbine_time_choices.size();
                const auto pick = std::min(m - 1, static_cast<std::size_t>(rng.unit(i, slot::turbine_time) * static_cast<double>(m)));
                p.turbine_time = spec.turbine_time_choices[pick];
            }
        }
    }

    NodeEnsemble ens = make_ensemble(spec.kind, std::move(params));
    ens.spec = spec;
    ens.seed = seed;
    return ens;
}

/// mu = E[g_i^{-1}(s)] and the coherent dynamics gbar = 1/mu.
struct MuValue {
    Complex mu;
    Complex gbar;
};

namespace detail {

inline MuValue make_mu(Complex mu, double scale) {
    if (scale == 0.0 || std::abs(mu) <= 1e-14 * scale)
        throw Error(ErrorCode::CoherentUndefined, "E[g^{-1}(s)] vanishes, gbar(s) is undefined");
    return {mu, 1.0 / mu};
}

// E[1/(tau s + 1)] over the distribution's turbine time constants.
inline Complex expected_turbine_lag(const NodeDistributionSpec& spec, Complex s) {
    if (!spec.turbine_time_choices.empty()) {
        Complex acc = 0.0;
        for (double tau : spec.turbine_time_choices) acc += 1.0 / (tau * s + 1.0);
        return acc / static_cast<double>(spec.turbine_time_choices.size());
    }
    const ParamRange& r = spec.turbine_time;
    if (r.fixed()) return 1.0 / (r.lo * s + 1.0);
    const Complex integral = adaptive_simpson([s](double tau) { return Complex(1.0) / (tau * s + 1.0); }, r.lo, r.hi, 1e-10);
    return integral / (r.hi - r.lo);
}

}  // namespace detail

/// Closed-form expectation of g_i^{-1}(s) under a distribution spec.
inline MuValue expected_inv(const NodeDistributionSpec& spec, Complex s) {
    spec.validate();
    switch (spec.kind) {
        case NodeKind::Integrator: {
            const ParamRange& k = spec.gain;
            const double mean_inv = k.fixed() ? 1.0 / k.lo : std::log(k.hi / k.lo) / (k.hi - k.lo);
            return detail::make_mu(s * mean_inv, std::abs(s) * mean_inv);
        }
        case NodeKind::Swing: {
            const Complex mu = s * spec.inertia.mean() + spec.damping.mean();
            return detail::make_mu(mu, std::abs(s) * spec.inertia.mean() + spec.damping.mean());
        }
        case NodeKind::Turbine: {
            const Complex lag = detail::expected_turbine_lag(spec, s);
            const Complex governor = spec.turbine_fraction * spec.droop.mean() * lag;
            const Complex mu = s * spec.inertia.mean() + spec.damping.mean() + governor;
            return detail::make_mu(mu, std::abs(s) * spec.inertia.mean() + spec.damping.mean() + std::abs(governor));
        }
        case NodeKind::Explicit: break;
    }
    throw Error(ErrorCode::InvalidArgument, "explicit ensembles have no distribution");
}

/// Values g_i^{-1}(s) for every node.
inline ComplexVector inverse_values(const NodeEnsemble& ens, Complex s) {
    ComplexVector out(ens.size());
    for (Index i = 0; i < ens.size(); ++i) out(i) = eval_inv(ens.nodes[static_cast<std::size_t>(i)], s);
    return out;
}

/// (1/n) sum_i g_i^{-1}(s).
inline Complex mean_inverse(const NodeEnsemble& ens, Complex s) {
    require(ens.size() > 0, ErrorCode::InvalidArgument, "empty ensemble");
    return inverse_values(ens, s).mean();
}

/// gtilde(s) = ((1/n) sum_i g_i^{-1}(s))^{-1}.
inline Complex empirical_gtilde(const NodeEnsemble& ens, Complex s) {
    const ComplexVector inv = inverse_values(ens, s);
    const Complex mean = inv.mean();
    return detail::make_mu(mean, inv.cwiseAbs().mean()).gbar;
}

/// Coherent inverse used by the network analysis: the distribution mean
/// when the ensemble was sampled from a spec, the sample mean otherwise.
inline MuValue coherent_inverse(const NodeEnsemble& ens, Complex s) {
    if (ens.spec) return expected_inv(*ens.spec, s);
    const ComplexVector inv = inverse_values(ens, s);
    return detail::make_mu(inv.mean(), inv.cwiseAbs().mean());
}

namespace detail {

struct CoefficientAverages {
    double inertia = 0.0;
    double damping = 0.0;
    double droop = 0.0;         // averaged over all n nodes
    double turbine_time = 0.0;  // averaged over the turbine set only
    std::size_t turbines = 0;
};

inline CoefficientAverages coefficient_averages(const NodeEnsemble& ens) {
    require(ens.kind == NodeKind::Swing || ens.kind == NodeKind::Turbine, ErrorCode::WrongNodeKind,
            "reduced grid models need a swing or turbine ensemble");
    require(!ens.params.empty(), ErrorCode::InvalidArgument, "ensemble has no parameters");
    CoefficientAverages avg;
    for (const NodeParams& p : ens.params) {
        avg.inertia += p.inertia;
        avg.damping += p.damping;
        avg.droop += p.droop;
        if (p.has_turbine()) {
            avg.turbine_time += p.turbine_time;
            ++avg.turbines;
        }
    }
    const auto n = static_cast<double>(ens.params.size());
    avg.inertia /= n;
    avg.damping /= n;
    avg.droop /= n;
    if (avg.turbines > 0) avg.turbine_time /= static_cast<double>(avg.turbines);
    return avg;
}

}  // namespace detail

/// Representative generator built from coefficient averages:
/// ghat(s) = (tau s + 1) / ((m s + d)(tau s + 1) + r^{-1}).
inline RationalTF reduced_representative(const NodeEnsemble& ens) {
    const auto avg = detail::coefficient_averages(ens);
    if (avg.turbines == 0) {
        require(avg.droop == 0.0, ErrorCode::InvalidArgument,
                "ensemble has droop gain but no turbine time constants");
        return RationalTF({1.0}, {avg.damping, avg.inertia});
    }
    NodeParams mean;
    mean.inertia = avg.inertia;
    mean.damping = avg.damping;
    mean.droop = avg.droop;
    mean.turbine_time = avg.turbine_time;
    return node_transfer_function(NodeKind::Turbine, mean);
}

/// Higher-order reduced model
/// gtilde(s) = (m s + d + (1/n) sum_{i in T} r_i^{-1} / (tau_i s + 1))^{-1}
/// collected over the distinct time constants into one rational function.
/// Its order is 1 + (number of distinct tau_i).
inline RationalTF reduced_empirical_tf(const NodeEnsemble& ens) {
    const auto avg = detail::coefficient_averages(ens);
    const auto n = static_cast<double>(ens.params.size());

    std::map<double, double> droop_by_tau;  // tau -> (1/n) sum of r^{-1}
    for (const NodeParams& p : ens.params)
        if (p.has_turbine()) droop_by_tau[p.turbine_time] += p.droop / n;

    const Polynomial swing{avg.damping, avg.inertia};
    Polynomial lag_product{1.0};
    for (const auto& [tau, r] : droop_by_tau) lag_product = poly::multiply(lag_product, {1.0, tau});

    Polynomial den = poly::multiply(swing, lag_product);
    for (const auto& [tau, r] : droop_by_tau) {
        Polynomial others{r};
        for (const auto& [tau2, r2] : droop_by_tau)
            if (tau2 != tau) others = poly::multiply(others, {1.0, tau2});
        den = poly::add(den, others);
    }
    return RationalTF(lag_product, den);
}

}  // namespace dyncon
