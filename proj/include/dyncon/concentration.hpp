#pragma once

// Monte Carlo harness for dynamics concentration: sup-over-frequency
// deviations across network sizes, first-row/column statistics of the
// perturbation matrix, and Hoeffding tail checks.

#include "dyncon/graph.hpp"
#include "dyncon/node_dynamics.hpp"
#include "dyncon/parallel.hpp"
#include "dyncon/rng.hpp"
#include "dyncon/transfer_matrix.hpp"
#include "dyncon/types.hpp"

#include <boost/math/distributions/binomial.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace dyncon {

// ---------------------------------------------------------------------------
// Frequency grids
// ---------------------------------------------------------------------------

/// `count` points j*omega with omega uniform on [omega_lo, omega_hi].
/// s = 0 is dropped when `exclude_zero` is set.
inline std::vector<Complex> imaginary_axis_grid(double omega_lo, double omega_hi, Index count, bool exclude_zero) {
    require(count >= 1, ErrorCode::InvalidArgument, "frequency grid needs at least one point");
    require(omega_lo <= omega_hi, ErrorCode::InvalidArgument, "frequency grid bounds are reversed");
    std::vector<Complex> grid;
    for (Index i = 0; i < count; ++i) {
        const double omega = count == 1 ? omega_lo
                                        : omega_lo + (omega_hi - omega_lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        if (exclude_zero && std::abs(omega) < 1e-15) continue;
        grid.emplace_back(0.0, omega);
    }
    require(!grid.empty(), ErrorCode::InvalidArgument, "frequency grid is empty after excluding s = 0");
    return grid;
}

/// Symmetric band {j omega : |omega| <= omega_max}, 13 points by default.
inline std::vector<Complex> default_band(NodeKind kind, LapScale scale, double omega_max = 0.3 * std::numbers::pi,
                                         Index count = 13) {
    const bool exclude_zero = scale == LapScale::InverseS || kind == NodeKind::Integrator;
    return imaginary_axis_grid(-omega_max, omega_max, count, exclude_zero);
}

// ---------------------------------------------------------------------------
// Order statistics and tests
// ---------------------------------------------------------------------------

/// Linear-interpolation quantile of unsorted data (q in [0, 1]).
inline double quantile(std::vector<double> data, double q) {
    require(!data.empty(), ErrorCode::InvalidArgument, "quantile of empty data");
    std::sort(data.begin(), data.end());
    const double pos = q * static_cast<double>(data.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, data.size() - 1);
    return data[lo] + (pos - static_cast<double>(lo)) * (data[hi] - data[lo]);
}

inline double median(std::vector<double> data) { return quantile(std::move(data), 0.5); }

struct SignTest {
    Index decreases = 0;  // pairs with after < before
    Index pairs = 0;      // non-tied pairs
    double p_value = 1.0;
};

/// One-sided paired sign test of H1: `after` tends to be smaller than `before`.
inline SignTest sign_test_decreasing(std::span<const double> before, std::span<const double> after) {
    require(before.size() == after.size(), ErrorCode::InvalidArgument, "sign test needs paired samples");
    SignTest out;
    for (std::size_t i = 0; i < before.size(); ++i) {
        if (!std::isfinite(before[i]) || !std::isfinite(after[i]) || before[i] == after[i]) continue;
        ++out.pairs;
        if (after[i] < before[i]) ++out.decreases;
    }
    if (out.pairs == 0) return out;
    const boost::math::binomial_distribution<double> null(static_cast<double>(out.pairs), 0.5);
    // P(X >= decreases)
    out.p_value = out.decreases == 0 ? 1.0 : boost::math::cdf(boost::math::complement(null, static_cast<double>(out.decreases - 1)));
    return out;
}

// ---------------------------------------------------------------------------
// Sup over frequency grid
// ---------------------------------------------------------------------------

struct SupDeviation {
    double value = 0.0;
    Index evaluated = 0;
    Index skipped = 0;           // grid points at a network or mu pole
    bool norm_converged = true;  // false flags a power-iteration shortfall
};

inline bool is_pole_error(ErrorCode c) {
    return c == ErrorCode::SingularMatrix || c == ErrorCode::PoleOfInverse || c == ErrorCode::CoherentUndefined ||
           c == ErrorCode::NearSingularSchur;
}

/// max over the grid of ||H^{-1}(s) - mu^{-1}(s) e1 e1^T||. Pole points are
/// skipped and counted; fails only when every point is skipped.
inline SupDeviation sup_deviation(const NetworkModel& net, std::span<const Complex> grid) {
    require(!grid.empty(), ErrorCode::InvalidArgument, "empty frequency grid");
    SupDeviation out;
    for (const Complex& s : grid) {
        try {
            const NormEstimate d = deviation_h(net, s);
            out.value = std::max(out.value, d.value);
            out.norm_converged = out.norm_converged && d.converged;
            ++out.evaluated;
        } catch (const Error& e) {
            if (!is_pole_error(e.code())) throw;
            ++out.skipped;
        }
    }
    require(out.evaluated > 0, ErrorCode::SingularMatrix, "every frequency grid point is a pole");
    return out;
}

// ---------------------------------------------------------------------------
// Tail sweep
// ---------------------------------------------------------------------------

struct SweepConfig {
    GraphRule graph;
    NodeDistributionSpec nodes;
    LapScale lap_scale = LapScale::One;
    std::vector<Index> n_list;
    std::vector<Complex> s_grid;
    Index trials = 1;
    double epsilon = 0.1;
    std::uint64_t base_seed = 1;

    bool operator==(const SweepConfig&) const = default;

    void validate() const {
        nodes.validate();
        require(!n_list.empty(), ErrorCode::InvalidArgument, "sweep needs at least one network size");
        require(std::is_sorted(n_list.begin(), n_list.end()) &&
                    std::adjacent_find(n_list.begin(), n_list.end()) == n_list.end(),
                ErrorCode::InvalidArgument, "n_list must be strictly ascending");
        for (Index n : n_list) {
            require(n >= 2, ErrorCode::InvalidArgument, "network sizes must be at least 2");
            graph.validate(n);
        }
        require(trials >= 1, ErrorCode::InvalidArgument, "trials must be at least 1");
        require(!s_grid.empty(), ErrorCode::InvalidArgument, "frequency grid is empty");
        require(epsilon >= 0.0, ErrorCode::InvalidArgument, "epsilon must be nonnegative");
        for (const Complex& s : s_grid) {
            if (lap_scale == LapScale::InverseS)
                require(s != 0.0, ErrorCode::InvalidArgument, "s = 0 is a pole of the 1/s Laplacian scaling");
            expected_inv(nodes, s);  // throws when mu(s) = 0
        }
    }
};

inline std::uint64_t trial_seed(std::uint64_t base_seed, Index n, Index trial) {
    return mix_seed({base_seed, static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(trial)});
}

struct TrialRecord {
    Index n = 0;
    Index trial = 0;
    std::uint64_t seed = 0;
    double sup_dev = std::numeric_limits<double>::quiet_NaN();
    Index skipped_points = 0;
    bool flagged = false;
    std::string message;
};

struct SizeSummary {
    Index n = 0;
    Index valid_trials = 0;
    double tail_probability = 0.0;  // P(sup_dev >= epsilon)
    double q25 = 0.0;
    double median = 0.0;
    double q75 = 0.0;
};

struct ConcentrationReport {
    SweepConfig config;
    std::vector<TrialRecord> trials;  // ordered by (n, trial)
    std::vector<SizeSummary> sizes;

    std::vector<double> sup_devs(Index n) const {
        std::vector<double> out;
        for (const TrialRecord& r : trials)
            if (r.n == n) out.push_back(r.sup_dev);
        return out;
    }

    double tail_probability(Index n, double eps) const {
        Index hits = 0;
        Index valid = 0;
        for (const TrialRecord& r : trials) {
            if (r.n != n || !std::isfinite(r.sup_dev)) continue;
            ++valid;
            if (r.sup_dev >= eps) ++hits;
        }
        require(valid > 0, ErrorCode::InvalidArgument, "no valid trials at n = " + std::to_string(n));
        return static_cast<double>(hits) / static_cast<double>(valid);
    }

    bool any_flagged() const {
        return std::any_of(trials.begin(), trials.end(), [](const TrialRecord& r) { return r.flagged; });
    }
};

/// For each size and trial: sample an ensemble, build the graph by rule and
/// record the sup deviation. Per-trial failures become flagged records.
/// Output is identical for any thread count.
inline ConcentrationReport tail_sweep(const SweepConfig& cfg, unsigned threads = 1) {
    cfg.validate();
    ConcentrationReport report;
    report.config = cfg;

    for (Index n : cfg.n_list) {
        const RealMatrix lap = laplacian(build_graph(cfg.graph, n));
        const SpectralData sd = spectral(lap);
        std::vector<TrialRecord> records(static_cast<std::size_t>(cfg.trials));

        parallel_for(records.size(), threads, [&](std::size_t t) {
            TrialRecord& rec = records[t];
            rec.n = n;
            rec.trial = static_cast<Index>(t);
            rec.seed = trial_seed(cfg.base_seed, n, rec.trial);
            try {
                const NetworkModel net = make_network(sample_ensemble(cfg.nodes, n, rec.seed), lap, sd, cfg.lap_scale);
                const SupDeviation sup = sup_deviation(net, cfg.s_grid);
                rec.sup_dev = sup.value;
                rec.skipped_points = sup.skipped;
                if (sup.skipped > 0) {
                    rec.flagged = true;
                    rec.message = std::to_string(sup.skipped) + " grid point(s) skipped at poles";
                }
                if (!sup.norm_converged) {
                    rec.flagged = true;
                    rec.message += rec.message.empty() ? "" : "; ";
                    rec.message += "spectral norm power iteration hit its cap";
                }
            } catch (const std::exception& e) {
                rec.flagged = true;
                rec.message = e.what();
            }
        });

        SizeSummary summary;
        summary.n = n;
        std::vector<double> valid;
        for (const TrialRecord& r : records)
            if (std::isfinite(r.sup_dev)) valid.push_back(r.sup_dev);
        summary.valid_trials = static_cast<Index>(valid.size());
        if (!valid.empty()) {
            const auto hits = std::count_if(valid.begin(), valid.end(), [&](double v) { return v >= cfg.epsilon; });
            summary.tail_probability = static_cast<double>(hits) / static_cast<double>(valid.size());
            summary.q25 = quantile(valid, 0.25);
            summary.median = quantile(valid, 0.5);
            summary.q75 = quantile(valid, 0.75);
        } else {
            summary.tail_probability = summary.q25 = summary.median = summary.q75 = std::numeric_limits<double>::quiet_NaN();
        }
        report.sizes.push_back(summary);
        report.trials.insert(report.trials.end(), records.begin(), records.end());
    }
    return report;
}

// ---------------------------------------------------------------------------
// First row/column of the perturbation matrix D
// ---------------------------------------------------------------------------

struct DStats {
    Complex d11;
    double d11_abs = 0.0;
    double row1_norm = 0.0;  // ||h12||_2, first row without d11
    double col1_norm = 0.0;  // ||h21||_2
    double full_norm = 0.0;  // ||D||_2
};

inline DStats d_first_rowcol_stats(const NetworkModel& net, Complex s) {
    const ComplexMatrix d = perturbation_matrix(net, s);
    const Index n = d.rows();
    DStats out;
    out.d11 = d(0, 0);
    out.d11_abs = std::abs(out.d11);
    out.row1_norm = d.row(0).tail(n - 1).norm();
    out.col1_norm = d.col(0).tail(n - 1).norm();
    out.full_norm = spectral_norm(d);
    return out;
}

// ---------------------------------------------------------------------------
// Hoeffding checks
// ---------------------------------------------------------------------------

struct UniformDist {
    double lo = 0.0;
    double hi = 1.0;

    double mean() const noexcept { return 0.5 * (lo + hi); }
    double width() const noexcept { return hi - lo; }
};

struct HoeffdingRow {
    double t = 0.0;
    double empirical_tail = 0.0;
    double bound = 0.0;
    double standard_error = 0.0;  // binomial SE of the empirical tail

    bool within_bound() const noexcept { return empirical_tail <= bound + 3.0 * standard_error; }
};

namespace detail {

inline std::vector<HoeffdingRow> tail_rows(const std::vector<double>& deviations, std::span<const double> t_grid,
                                           const std::function<double(double)>& bound) {
    std::vector<HoeffdingRow> rows;
    const auto trials = static_cast<double>(deviations.size());
    for (double t : t_grid) {
        const auto hits = std::count_if(deviations.begin(), deviations.end(), [t](double d) { return d >= t; });
        HoeffdingRow row;
        row.t = t;
        row.empirical_tail = static_cast<double>(hits) / trials;
        row.bound = bound(t);
        row.standard_error = std::sqrt(row.empirical_tail * (1.0 - row.empirical_tail) / trials);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace detail

/// Empirical P(|mean_n - E X| >= t) against 2 exp(-2 n t^2 / (b - a)^2).
inline std::vector<HoeffdingRow> hoeffding_tail_check(const UniformDist& dist, Index n, std::span<const double> t_grid,
                                                      Index trials, std::uint64_t seed) {
    require(dist.lo < dist.hi, ErrorCode::InvalidArgument, "uniform support must satisfy lo < hi");
    require(n >= 1 && trials >= 1, ErrorCode::InvalidArgument, "n and trials must be positive");
    std::vector<double> deviations(static_cast<std::size_t>(trials));
    for (Index k = 0; k < trials; ++k) {
        SplitMix64 rng(mix_seed({seed, static_cast<std::uint64_t>(k)}));
        double sum = 0.0;
        for (Index i = 0; i < n; ++i) sum += rng.uniform(dist.lo, dist.hi);
        deviations[static_cast<std::size_t>(k)] = std::abs(sum / static_cast<double>(n) - dist.mean());
    }
    const double nn = static_cast<double>(n);
    const double w2 = dist.width() * dist.width();
    return detail::tail_rows(deviations, t_grid, [=](double t) { return 2.0 * std::exp(-2.0 * nn * t * t / w2); });
}

/// Complex variant Z = X + jY with independent uniform parts. The bound is
/// the union of the real and imaginary Hoeffding bounds at t / sqrt(2).
inline std::vector<HoeffdingRow> hoeffding_tail_check_complex(const UniformDist& re, const UniformDist& im, Index n,
                                                              std::span<const double> t_grid, Index trials,
                                                              std::uint64_t seed) {
    require(re.lo < re.hi && im.lo < im.hi, ErrorCode::InvalidArgument, "uniform support must satisfy lo < hi");
    require(n >= 1 && trials >= 1, ErrorCode::InvalidArgument, "n and trials must be positive");
    std::vector<double> deviations(static_cast<std::size_t>(trials));
    for (Index k = 0; k < trials; ++k) {
        SplitMix64 rng(mix_seed({seed, static_cast<std::uint64_t>(k), 0x1ULL}));
        Complex sum = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double x = rng.uniform(re.lo, re.hi);
            const double y = rng.uniform(im.lo, im.hi);
            sum += Complex(x, y);
        }
        deviations[static_cast<std::size_t>(k)] = std::abs(sum / static_cast<double>(n) - Complex(re.mean(), im.mean()));
    }
    const double nn = static_cast<double>(n);
    const double wr = re.width() * re.width();
    const double wi = im.width() * im.width();
    return detail::tail_rows(deviations, t_grid, [=](double t) {
        const double u2 = 0.5 * t * t;
        return 2.0 * std::exp(-2.0 * nn * u2 / wr) + 2.0 * std::exp(-2.0 * nn * u2 / wi);
    });
}

/// Least-squares slope of log(empirical tail) against t^2 over rows with a
/// positive tail; negative for sub-Gaussian decay.
inline double log_tail_slope(std::span<const HoeffdingRow> rows) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (const HoeffdingRow& r : rows) {
        if (r.empirical_tail <= 0.0 || r.t <= 0.0) continue;
        const double x = r.t * r.t;
        const double y = std::log(r.empirical_tail);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    require(count >= 2, ErrorCode::InvalidArgument, "slope fit needs two positive tail values");
    const double denom = count * sxx - sx * sx;
    require(denom > 0.0, ErrorCode::InvalidArgument, "slope fit needs distinct t values");
    return (count * sxy - sx * sy) / denom;
}

}  // namespace dyncon
