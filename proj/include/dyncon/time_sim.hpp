#pragma once

// State-space realizations of the consensus and power networks, fixed-step
// RK4 simulation, scalar reduced-model simulation and output comparison.

#include "dyncon/node_dynamics.hpp"
#include "dyncon/rational_tf.hpp"
#include "dyncon/rng.hpp"
#include "dyncon/transfer_matrix.hpp"
#include "dyncon/types.hpp"

#include <Eigen/Sparse>

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace dyncon {

/// x' = A x + B u, y = C x + D u.
struct StateSpace {
    RealMatrix A;
    RealMatrix B;
    RealMatrix C;
    RealMatrix D;  // zero unless the realized transfer function is biproper
    RealVector x0;
    std::vector<std::string> labels;  // one per state
    std::string model = "ss";

    Index states() const noexcept { return A.rows(); }
    Index inputs() const noexcept { return B.cols(); }
    Index outputs() const noexcept { return C.rows(); }

    void validate() const {
        const Index m = A.rows();
        require(A.cols() == m, ErrorCode::InvalidArgument, "A must be square");
        require(B.rows() == m, ErrorCode::InvalidArgument, "B rows must match the state dimension");
        require(C.cols() == m, ErrorCode::InvalidArgument, "C columns must match the state dimension");
        require(D.rows() == C.rows() && D.cols() == B.cols(), ErrorCode::InvalidArgument, "D must be outputs x inputs");
        require(x0.size() == m, ErrorCode::InvalidArgument, "x0 length must match the state dimension");
        require(A.allFinite() && B.allFinite() && C.allFinite() && D.allFinite() && x0.allFinite(),
                ErrorCode::InvalidArgument, "state-space matrices must be finite");
    }
};

struct InputSignal {
    enum class Kind { ImpulseAsInitialCondition, Step, Sinusoid };

    Kind kind = Kind::Step;
    RealVector direction;
    double amplitude = 1.0;
    double angular_frequency = 0.0;  // rad/s, sinusoid only

    static InputSignal impulse(RealVector direction, double amplitude = 1.0) {
        return {Kind::ImpulseAsInitialCondition, std::move(direction), amplitude, 0.0};
    }
    static InputSignal step(RealVector direction, double amplitude = 1.0) {
        return {Kind::Step, std::move(direction), amplitude, 0.0};
    }
    static InputSignal sinusoid(RealVector direction, double amplitude, double angular_frequency) {
        return {Kind::Sinusoid, std::move(direction), amplitude, angular_frequency};
    }

    /// Scalar time profile multiplying amplitude * direction.
    double waveform(double t) const {
        switch (kind) {
            case Kind::ImpulseAsInitialCondition: return 0.0;
            case Kind::Step: return 1.0;
            case Kind::Sinusoid: return std::sin(angular_frequency * t);
        }
        return 0.0;
    }

    void validate(Index inputs) const {
        require(direction.size() == inputs, ErrorCode::InvalidArgument,
                "input direction has length " + std::to_string(direction.size()) + ", expected " + std::to_string(inputs));
        require(direction.allFinite() && std::isfinite(amplitude), ErrorCode::InvalidArgument, "input must be finite");
        if (kind == Kind::Sinusoid)
            require(angular_frequency > 0.0, ErrorCode::InvalidArgument, "sinusoid frequency must be positive");
    }
};

inline const char* to_string(InputSignal::Kind kind) {
    switch (kind) {
        case InputSignal::Kind::ImpulseAsInitialCondition: return "impulse";
        case InputSignal::Kind::Step: return "step";
        case InputSignal::Kind::Sinusoid: return "sinusoid";
    }
    return "unknown";
}

/// Unit vector e_i of length n.
inline RealVector unit_direction(Index n, Index i) {
    require(i >= 0 && i < n, ErrorCode::InvalidArgument, "unit direction index out of range");
    RealVector e = RealVector::Zero(n);
    e(i) = 1.0;
    return e;
}

struct Trajectory {
    RealVector times;
    RealMatrix outputs;  // one row per sample
    double dt = 0.0;     // sample spacing
    std::string method = "rk4";
    std::string model;

    Index samples() const noexcept { return times.size(); }
};

// ---------------------------------------------------------------------------
// Realizations
// ---------------------------------------------------------------------------

/// x' = -K L x + K u, y = x, with K = diag{k_i}.
inline StateSpace build_consensus_ss(const NodeEnsemble& ens, const RealMatrix& lap) {
    require(ens.kind == NodeKind::Integrator, ErrorCode::WrongNodeKind, "consensus realization needs integrator nodes");
    const Index n = ens.size();
    require(lap.rows() == n && lap.cols() == n, ErrorCode::InvalidArgument, "Laplacian size does not match ensemble");
    RealVector k(n);
    for (Index i = 0; i < n; ++i) k(i) = ens.params[static_cast<std::size_t>(i)].gain;
    StateSpace ss;
    ss.A = -(k.asDiagonal() * lap);
    ss.B = k.asDiagonal();
    ss.C = RealMatrix::Identity(n, n);
    ss.D = RealMatrix::Zero(n, n);
    ss.x0 = RealVector::Zero(n);
    for (Index i = 0; i < n; ++i) ss.labels.push_back("x" + std::to_string(i));
    ss.model = "consensus";
    return ss;
}

inline StateSpace build_consensus_ss(const NetworkModel& net) {
    require(net.lap_scale == LapScale::One, ErrorCode::InvalidArgument, "consensus realization needs a static Laplacian");
    return build_consensus_ss(net.ensemble, net.laplacian);
}

/// Swing/turbine generators coupled through L(s) = L_B / s. States are the
/// phases theta, the frequencies omega and one governor state q per
/// turbine node:
///   theta_i' = omega_i
///   m_i omega_i' = -d_i omega_i + q_i + u_i - (L_B theta)_i
///   tau_i q_i' = -q_i - r_i^{-1} omega_i
/// Output y = omega.
inline StateSpace build_power_ss(const NodeEnsemble& ens, const RealMatrix& bus_laplacian) {
    require(ens.kind == NodeKind::Swing || ens.kind == NodeKind::Turbine, ErrorCode::WrongNodeKind,
            "power realization needs swing or turbine nodes");
    const Index n = ens.size();
    require(bus_laplacian.rows() == n && bus_laplacian.cols() == n, ErrorCode::InvalidArgument,
            "bus Laplacian size does not match ensemble");

    std::vector<Index> governor_state(static_cast<std::size_t>(n), -1);
    Index m = 2 * n;
    for (Index i = 0; i < n; ++i)
        if (ens.params[static_cast<std::size_t>(i)].has_turbine()) governor_state[static_cast<std::size_t>(i)] = m++;

    StateSpace ss;
    ss.A = RealMatrix::Zero(m, m);
    ss.B = RealMatrix::Zero(m, n);
    ss.C = RealMatrix::Zero(n, m);
    ss.D = RealMatrix::Zero(n, n);
    ss.x0 = RealVector::Zero(m);
    ss.labels.resize(static_cast<std::size_t>(m));
    for (Index i = 0; i < n; ++i) {
        const NodeParams& p = ens.params[static_cast<std::size_t>(i)];
        const Index theta = i;
        const Index omega = n + i;
        ss.labels[static_cast<std::size_t>(theta)] = "theta" + std::to_string(i);
        ss.labels[static_cast<std::size_t>(omega)] = "omega" + std::to_string(i);
        ss.A(theta, omega) = 1.0;
        ss.A.row(omega).head(n) = -bus_laplacian.row(i) / p.inertia;
        ss.A(omega, omega) = -p.damping / p.inertia;
        ss.B(omega, i) = 1.0 / p.inertia;
        ss.C(i, omega) = 1.0;
        if (const Index q = governor_state[static_cast<std::size_t>(i)]; q >= 0) {
            ss.labels[static_cast<std::size_t>(q)] = "q" + std::to_string(i);
            ss.A(omega, q) = 1.0 / p.inertia;
            ss.A(q, q) = -1.0 / p.turbine_time;
            ss.A(q, omega) = -p.droop / p.turbine_time;
        }
    }
    ss.model = "power";
    return ss;
}

inline StateSpace build_power_ss(const NetworkModel& net) { return build_power_ss(net.ensemble, net.laplacian); }

/// Controllable canonical realization of a proper scalar transfer function.
inline StateSpace realize(const RationalTF& tf) {
    if (!tf.is_proper()) throw Error(ErrorCode::ImproperTransferFunction, "cannot realize an improper transfer function");
    const int order = tf.order();
    const double lead = tf.den()[static_cast<std::size_t>(order)];
    std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
    std::vector<double> b(static_cast<std::size_t>(order) + 1, 0.0);
    for (int k = 0; k <= order; ++k) a[static_cast<std::size_t>(k)] = tf.den()[static_cast<std::size_t>(k)] / lead;
    for (std::size_t k = 0; k < tf.num().size(); ++k) b[k] = tf.num()[k] / lead;

    const double feedthrough = b[static_cast<std::size_t>(order)];
    StateSpace ss;
    ss.A = RealMatrix::Zero(order, order);
    ss.B = RealMatrix::Zero(order, 1);
    ss.C = RealMatrix::Zero(1, order);
    ss.D = RealMatrix::Constant(1, 1, feedthrough);
    ss.x0 = RealVector::Zero(order);
    for (int k = 0; k < order; ++k) {
        if (k + 1 < order) ss.A(k, k + 1) = 1.0;
        ss.A(order - 1, k) = -a[static_cast<std::size_t>(k)];
        ss.C(0, k) = b[static_cast<std::size_t>(k)] - feedthrough * a[static_cast<std::size_t>(k)];
        ss.labels.push_back("z" + std::to_string(k));
    }
    if (order > 0) ss.B(order - 1, 0) = 1.0;
    ss.model = "reduced";
    return ss;
}

/// C (sI - A)^{-1} B + D.
inline ComplexMatrix frequency_response(const StateSpace& ss, Complex s) {
    ss.validate();
    const Index m = ss.states();
    ComplexMatrix out = ss.D.cast<Complex>();
    if (m == 0) return out;
    ComplexMatrix resolvent = -ss.A.cast<Complex>();
    resolvent.diagonal().array() += s;
    const ComplexMatrix x = detail::checked_lu(resolvent, "sI - A").solve(ss.B.cast<Complex>());
    out += ss.C.cast<Complex>() * x;
    return out;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Spectral radius estimate from the growth rate of ||A^k v|| (geometric
/// mean of the last half of 400 normalized power steps).
inline double estimate_spectral_radius(const RealMatrix& a) {
    const Index m = a.rows();
    if (m == 0 || a.cwiseAbs().maxCoeff() == 0.0) return 0.0;
    SplitMix64 rng(mix_seed({0xa11ceULL, static_cast<std::uint64_t>(m)}));
    RealVector v(m);
    for (Index i = 0; i < m; ++i) v(i) = rng.uniform(-1.0, 1.0);
    v.normalize();
    constexpr int iterations = 400;
    double log_sum = 0.0;
    int counted = 0;
    for (int it = 0; it < iterations; ++it) {
        RealVector w = a * v;
        const double growth = w.norm();
        if (growth == 0.0) return 0.0;  // nilpotent direction
        if (it >= iterations / 2) {
            log_sum += std::log(growth);
            ++counted;
        }
        v = w / growth;
    }
    return std::exp(log_sum / counted);
}

/// 1 / (divisor * rho(A)), divisor 20 by default; falls back to
/// t_final / 1000 when A has no dynamics.
inline double default_dt(const StateSpace& ss, double t_final, double divisor = 20.0) {
    require(divisor > 0.0, ErrorCode::InvalidArgument, "dt divisor must be positive");
    const double rho = estimate_spectral_radius(ss.A);
    return rho > 0.0 ? 1.0 / (divisor * rho) : t_final / 1000.0;
}

struct SimulationOptions {
    Index sample_every = 1;  // keep every k-th step
    double max_state = 1e12;
    double stability_limit = 2.5;  // dt * rho(A) must stay below this
};

/// Classical fixed-step RK4 from t = 0 to t_final. Impulses are applied as
/// an initial jump x(0) = x0 + B * amplitude * direction.
inline Trajectory simulate(const StateSpace& ss, const InputSignal& sig, double t_final, double dt,
                           const SimulationOptions& opts = {}) {
    ss.validate();
    sig.validate(ss.inputs());
    require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidArgument, "dt must be positive");
    require(t_final >= 0.0 && std::isfinite(t_final), ErrorCode::InvalidArgument, "t_final must be nonnegative");
    require(opts.sample_every >= 1, ErrorCode::InvalidArgument, "sample_every must be at least 1");

    const double rho = estimate_spectral_radius(ss.A);
    if (!(dt * rho < opts.stability_limit))
        throw Error(ErrorCode::StabilityGuard, "dt * rho(A) = " + std::to_string(dt * rho) + " exceeds " +
                                                   std::to_string(opts.stability_limit));

    Index steps = static_cast<Index>(std::ceil(t_final / dt - 1e-9));
    if (steps % opts.sample_every != 0) steps += opts.sample_every - steps % opts.sample_every;
    const Index samples = steps / opts.sample_every + 1;

    const RealVector forcing = ss.B * (sig.amplitude * sig.direction);
    RealVector x = ss.x0;
    const bool impulse = sig.kind == InputSignal::Kind::ImpulseAsInitialCondition;
    if (impulse) x += forcing;

    const Index m = ss.states();
    const bool use_sparse = m >= 64 && (ss.A.array() != 0.0).count() < m * m / 2;
    Eigen::SparseMatrix<double> a_sparse;
    if (use_sparse) a_sparse = ss.A.sparseView();

    auto derivative = [&](double t, const RealVector& state) -> RealVector {
        RealVector dx = use_sparse ? RealVector(a_sparse * state) : RealVector(ss.A * state);
        if (!impulse) dx.noalias() += sig.waveform(t) * forcing;
        return dx;
    };
    const RealVector feed = ss.D * (sig.amplitude * sig.direction);
    auto output = [&](double t, const RealVector& state) -> RealVector {
        RealVector y = ss.C * state;
        if (!impulse) y += sig.waveform(t) * feed;
        return y;
    };

    Trajectory traj;
    traj.times.resize(samples);
    traj.outputs.resize(samples, ss.outputs());
    traj.dt = dt * static_cast<double>(opts.sample_every);
    traj.model = ss.model;
    traj.times(0) = 0.0;
    traj.outputs.row(0) = output(0.0, x).transpose();

    for (Index k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const RealVector k1 = derivative(t, x);
        const RealVector k2 = derivative(t + 0.5 * dt, x + 0.5 * dt * k1);
        const RealVector k3 = derivative(t + 0.5 * dt, x + 0.5 * dt * k2);
        const RealVector k4 = derivative(t + dt, x + dt * k3);
        x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

        if (!x.allFinite() || (m > 0 && x.cwiseAbs().maxCoeff() > opts.max_state))
            throw Error(ErrorCode::Divergence, "state exceeded " + std::to_string(opts.max_state) + " at t = " +
                                                   std::to_string(t + dt));
        if ((k + 1) % opts.sample_every == 0) {
            const Index row = (k + 1) / opts.sample_every;
            const double tk = static_cast<double>(k + 1) * dt;
            traj.times(row) = tk;
            traj.outputs.row(row) = output(tk, x).transpose();
        }
    }
    return traj;
}

/// Coherent reduced response: the scalar tf driven by the average input
/// (1/n) sum_j u_j(t). One output column, shared by every node.
inline Trajectory simulate_reduced(const RationalTF& tf, const InputSignal& sig, Index n, double t_final, double dt,
                                   const SimulationOptions& opts = {}) {
    require(n >= 1, ErrorCode::InvalidArgument, "network size must be positive");
    sig.validate(n);
    StateSpace ss = realize(tf);
    InputSignal averaged = sig;
    averaged.direction = RealVector::Constant(1, sig.direction.sum() / static_cast<double>(n));
    Trajectory traj = simulate(ss, averaged, t_final, dt, opts);
    traj.model = "reduced";
    return traj;
}

struct ComparisonMetrics {
    double relative_l2_error = 0.0;  // ||ybar - y_reduced|| / ||ybar||
    double coherence = 0.0;          // max_i ||y_i - ybar|| / ||ybar||
};

/// Compares the node-average output of `full` against the single output of
/// `reduced`. The first `discard_fraction` of the samples is dropped.
inline ComparisonMetrics compare_outputs(const Trajectory& full, const Trajectory& reduced, double discard_fraction = 0.0) {
    require(full.samples() == reduced.samples(), ErrorCode::GridMismatch, "trajectories have different sample counts");
    require(full.samples() > 0, ErrorCode::GridMismatch, "empty trajectory");
    const double tol = 1e-9 * std::max(full.dt, 1e-300);
    require((full.times - reduced.times).cwiseAbs().maxCoeff() <= tol, ErrorCode::GridMismatch,
            "trajectories use different time grids");
    require(reduced.outputs.cols() >= 1 && full.outputs.cols() >= 1, ErrorCode::InvalidArgument, "trajectories have no outputs");
    require(discard_fraction >= 0.0 && discard_fraction < 1.0, ErrorCode::InvalidArgument, "discard fraction must be in [0, 1)");

    const auto start = static_cast<Index>(std::floor(discard_fraction * static_cast<double>(full.samples())));
    const Index len = full.samples() - start;
    const RealMatrix nodes = full.outputs.bottomRows(len);
    const RealVector average = nodes.rowwise().mean();
    const RealVector reference = reduced.outputs.col(0).tail(len);

    auto relative = [](double num, double den) {
        if (den > 0.0) return num / den;
        return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    };
    const double scale = average.norm();
    ComparisonMetrics out;
    out.relative_l2_error = relative((average - reference).norm(), scale);
    double worst = 0.0;
    for (Index i = 0; i < nodes.cols(); ++i) worst = std::max(worst, (nodes.col(i) - average).norm());
    out.coherence = relative(worst, scale);
    return out;
}

}  // namespace dyncon
