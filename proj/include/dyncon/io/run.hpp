#pragma once

// Experiment dispatch: builds the models named by an ExperimentConfig, writes
// the CSV outputs and a JSON manifest into the output directory.
//
// Outputs (P = output_prefix):
//   spectrum       P_spectrum.csv        n,index,lambda
//   deviation      P_deviation.csv       n,s_re,s_im,mu_re,mu_im,dev_direct,dev_H
//   sweep          P_sweep.csv           record,n,trial,seed,sup_dev,skipped_points,flagged,
//                                        valid_trials,tail_probability,q25,median,q75
//                  P_dstats.csv          n,trial,seed,d11_abs,row1_norm,col1_norm,full_norm,ratio
//   hoeffding      P_hoeffding.csv       t,empirical_tail,hoeffding_bound,standard_error
//   consensus-sim  P_n{n}.csv            t,y_0,...,y_{n-1}
//                  P_reference.csv       t,y  (gbar impulse response)
//   power-sim      P_full.csv, P_ghat.csv, P_gtilde.csv
//   reduce         P_reduced.csv         model,power,num_coeff,den_coeff
//   always         P_manifest.json

#include "dyncon/concentration.hpp"
#include "dyncon/graph.hpp"
#include "dyncon/io/config.hpp"
#include "dyncon/io/csv.hpp"
#include "dyncon/io/grid_table.hpp"
#include "dyncon/node_dynamics.hpp"
#include "dyncon/parallel.hpp"
#include "dyncon/time_sim.hpp"
#include "dyncon/transfer_matrix.hpp"

#include <Eigen/Eigenvalues>
#include <boost/crc.hpp>
#include <json.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#ifndef DYNCON_VERSION
#define DYNCON_VERSION "0.0.0"
#endif

namespace dyncon::io {

struct OutputFile {
    std::string name;
    std::size_t bytes = 0;
    std::uint32_t crc32 = 0;
};

struct ResultManifest {
    std::string kind;
    std::string version = DYNCON_VERSION;
    std::string config_echo;  // canonical config text
    std::vector<OutputFile> files;
    std::string started_at;  // UTC, ISO 8601
    double elapsed_seconds = 0.0;
    unsigned threads = 1;
    std::vector<std::string> errors;
    std::vector<std::string> flags;
    std::map<std::string, double> metrics;

    bool ok() const { return errors.empty() && flags.empty(); }
    int exit_code() const { return ok() ? 0 : 1; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = kind;
        j["version"] = version;
        j["status"] = errors.empty() ? (flags.empty() ? "ok" : "flagged") : "error";
        j["started_at"] = started_at;
        j["elapsed_seconds"] = elapsed_seconds;
        j["threads"] = threads;
        j["config"] = config_echo;
        j["files"] = nlohmann::json::array();
        for (const auto& f : files) {
            char crc[9];
            std::snprintf(crc, sizeof(crc), "%08x", f.crc32);
            j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"crc32", crc}});
        }
        j["errors"] = errors;
        j["flags"] = flags;
        j["metrics"] = metrics;
        return j;
    }
};

struct RunOptions {
    std::string out_dir = ".";
    unsigned threads = 1;
    bool verbose = false;
    std::ostream* log = &std::cerr;
};

inline std::uint32_t crc32_of(std::string_view bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

namespace detail {

inline std::string utc_timestamp(std::chrono::system_clock::time_point tp) {
    const std::time_t t = std::chrono::system_clock::to_time_t(tp);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Smallest |Re lambda| over the eigenvalues of A, ignoring eigenvalues
/// with |lambda| <= 1e-9 * max|lambda| (the uniform phase-shift mode of a
/// power network). 0 when nothing is left.
inline double slowest_decay_rate(const RealMatrix& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::EigenSolver<RealMatrix> es(a, false);
    const auto& ev = es.eigenvalues();
    const double largest = ev.cwiseAbs().maxCoeff();
    double slowest = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < ev.size(); ++k)
        if (std::abs(ev(k)) > 1e-9 * largest) slowest = std::min(slowest, std::abs(ev(k).real()));
    return std::isfinite(slowest) ? slowest : 0.0;
}

/// Companion-matrix version for a scalar transfer function's poles.
inline double slowest_decay_rate(const RationalTF& tf) {
    const int order = tf.order();
    if (order <= 0) return 0.0;
    const Polynomial& den = tf.den();
    const double lead = den[static_cast<std::size_t>(order)];
    RealMatrix companion = RealMatrix::Zero(order, order);
    for (int k = 0; k < order; ++k) {
        companion(0, k) = -den[static_cast<std::size_t>(order - 1 - k)] / lead;
        if (k + 1 < order) companion(k + 1, k) = 1.0;
    }
    return slowest_decay_rate(companion);
}

class Runner {
public:
    Runner(const ExperimentConfig& cfg, const RunOptions& opts, ResultManifest& manifest)
        : cfg_(cfg), opts_(opts), m_(manifest) {}

    void dispatch() {
        switch (cfg_.kind) {
            case ExperimentKind::Spectrum: spectrum(); break;
            case ExperimentKind::Deviation: deviation_grid(); break;
            case ExperimentKind::Sweep: sweep(); break;
            case ExperimentKind::Hoeffding: hoeffding(); break;
            case ExperimentKind::ConsensusSim: consensus(); break;
            case ExperimentKind::PowerSim: power(); break;
            case ExperimentKind::Reduce: reduce(); break;
        }
    }

private:
    const ExperimentConfig& cfg_;
    const RunOptions& opts_;
    ResultManifest& m_;

    void log(const std::string& msg) const {
        if (opts_.verbose && opts_.log) *opts_.log << "[dyncon] " << msg << '\n';
    }

    void emit(const std::string& suffix, const std::string& text) {
        const std::string name = cfg_.output_prefix + "_" + suffix;
        write_file((std::filesystem::path(opts_.out_dir) / name).string(), text);
        m_.files.push_back(OutputFile{name, text.size(), crc32_of(text)});
        log("wrote " + name);
    }

    static std::string num(double x) { return format_number(x); }
    static std::string idx(long long x) { return std::to_string(x); }

    Index graph_size(Index n) const {
        if (cfg_.graph.family == GraphFamily::EdgeList && n == 0) return read_edge_list(cfg_.graph.path).size();
        return n;
    }

    RealMatrix bus_laplacian(Index n) const { return laplacian(build_graph(cfg_.graph, n)); }

    std::vector<Complex> grid(NodeKind kind) const {
        if (!cfg_.frequency.points.empty()) return cfg_.frequency.points;
        const bool exclude_zero = cfg_.lap_scale == LapScale::InverseS || kind == NodeKind::Integrator;
        return imaginary_axis_grid(cfg_.frequency.omega_min, cfg_.frequency.omega_max, cfg_.frequency.count,
                                   exclude_zero);
    }

    NodeEnsemble ensemble(Index n, std::uint64_t seed) {
        if (cfg_.grid_table.empty()) return sample_ensemble(cfg_.nodes, n, seed);
        GridTable table = ingest_grid_table(cfg_.grid_table);
        m_.metrics["table_rows"] = static_cast<double>(table.report.rows);
        m_.metrics["table_turbines"] = static_cast<double>(table.report.turbines);
        m_.metrics["table_distinct_tau"] = static_cast<double>(table.report.distinct_tau.size());
        if (table.report.ignored_droop_rows > 0)
            log(std::to_string(table.report.ignored_droop_rows) + " row(s) with tau = 0 carry an unused r_inv");
        return std::move(table.ensemble);
    }

    InputSignal signal(Index n) const {
        const auto& s = cfg_.simulation;
        const RealVector dir = s.input_node < 0 ? RealVector::Ones(n) : unit_direction(n, s.input_node);
        switch (s.input) {
            case InputSignal::Kind::ImpulseAsInitialCondition: return InputSignal::impulse(dir, s.amplitude);
            case InputSignal::Kind::Step: return InputSignal::step(dir, s.amplitude);
            case InputSignal::Kind::Sinusoid: return InputSignal::sinusoid(dir, s.amplitude, s.angular_frequency);
        }
        return InputSignal::step(dir, s.amplitude);
    }

    SimulationOptions sampling(double t_final, double dt) const {
        SimulationOptions o;
        if (cfg_.simulation.samples > 0) {
            const double steps = std::ceil(t_final / dt - 1e-9);
            o.sample_every = std::max<Index>(1, static_cast<Index>(std::ceil(steps / static_cast<double>(cfg_.simulation.samples))));
        }
        return o;
    }

    // -- experiments --------------------------------------------------------

    void spectrum() {
        CsvWriter csv({"n", "index", "lambda"});
        for (Index n : cfg_.sizes()) {
            const SpectralData sd = spectral(bus_laplacian(graph_size(n)));
            const Index size = sd.size();
            for (Index i = 0; i < size; ++i) csv.row({idx(size), idx(i), num(sd.values(i))});
            const double l2 = algebraic_connectivity(sd);
            m_.metrics["lambda2_n" + std::to_string(size)] = l2;
            m_.metrics["lambda2_over_n_n" + std::to_string(size)] = l2 / static_cast<double>(size);
            log("n=" + std::to_string(size) + " lambda2=" + num(l2));
        }
        emit("spectrum.csv", csv.text());
    }

    void deviation_grid() {
        CsvWriter csv({"n", "s_re", "s_im", "mu_re", "mu_im", "dev_direct", "dev_H"});
        Index skipped = 0;
        for (Index n0 : cfg_.sizes()) {
            NodeEnsemble ens = ensemble(cfg_.grid_table.empty() ? graph_size(n0) : 0, trial_seed(cfg_.seed, n0, 0));
            const Index n = ens.size();
            const NetworkModel net = make_network(std::move(ens), bus_laplacian(n), cfg_.lap_scale);
            const auto points = grid(net.ensemble.kind);
            std::vector<std::optional<DeviationResult>> results(points.size());
            parallel_for(points.size(), opts_.threads, [&](std::size_t i) {
                try {
                    results[i] = deviation(net, points[i]);
                } catch (const Error& e) {
                    if (!is_pole_error(e.code())) throw;
                }
            });
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (!results[i]) {
                    ++skipped;
                    log("skipped pole at s=" + format_complex(points[i]));
                    continue;
                }
                const auto& r = *results[i];
                if (!r.norm_converged)
                    m_.flags.push_back("n=" + std::to_string(n) + " s=" + format_complex(r.s) +
                                       ": spectral norm power iteration hit its cap");
                csv.row({idx(n), num(r.s.real()), num(r.s.imag()), num(r.mu.real()), num(r.mu.imag()),
                         num(r.dev_direct), num(r.dev_H)});
            }
        }
        m_.metrics["skipped_points"] = static_cast<double>(skipped);
        emit("deviation.csv", csv.text());
    }

    SweepConfig sweep_config() const {
        SweepConfig sc;
        sc.graph = cfg_.graph;
        sc.nodes = cfg_.nodes;
        sc.lap_scale = cfg_.lap_scale;
        sc.n_list = cfg_.sizes();
        sc.s_grid = grid(cfg_.nodes.kind);
        sc.trials = cfg_.trials;
        sc.epsilon = cfg_.epsilon;
        sc.base_seed = cfg_.seed;
        return sc;
    }

    void sweep() {
        const SweepConfig sc = sweep_config();
        const ConcentrationReport report = tail_sweep(sc, opts_.threads);
        CsvWriter csv({"record", "n", "trial", "seed", "sup_dev", "skipped_points", "flagged", "valid_trials",
                       "tail_probability", "q25", "median", "q75"});
        for (const TrialRecord& r : report.trials) {
            csv.row({"trial", idx(r.n), idx(r.trial), std::to_string(r.seed), num(r.sup_dev), idx(r.skipped_points),
                     r.flagged ? "1" : "0", "", "", "", "", ""});
            if (r.flagged)
                m_.flags.push_back("n=" + std::to_string(r.n) + " trial=" + std::to_string(r.trial) + ": " + r.message);
        }
        for (const SizeSummary& s : report.sizes) {
            csv.row({"aggregate", idx(s.n), "", "", "", "", "", idx(s.valid_trials), num(s.tail_probability), num(s.q25),
                     num(s.median), num(s.q75)});
            m_.metrics["median_n" + std::to_string(s.n)] = s.median;
            m_.metrics["tail_probability_n" + std::to_string(s.n)] = s.tail_probability;
        }
        for (std::size_t k = 1; k < sc.n_list.size(); ++k) {
            const SignTest st = sign_test_decreasing(report.sup_devs(sc.n_list[k - 1]), report.sup_devs(sc.n_list[k]));
            m_.metrics["sign_test_p_n" + std::to_string(sc.n_list[k - 1]) + "_n" + std::to_string(sc.n_list[k])] =
                st.p_value;
        }
        emit("sweep.csv", csv.text());
        if (cfg_.dstats_s) dstats(sc, *cfg_.dstats_s);
    }

    void dstats(const SweepConfig& sc, Complex s) {
        CsvWriter csv({"n", "trial", "seed", "d11_abs", "row1_norm", "col1_norm", "full_norm", "ratio"});
        for (Index n : sc.n_list) {
            const RealMatrix lap = bus_laplacian(n);
            const SpectralData sd = spectral(lap);
            const auto trials = static_cast<std::size_t>(sc.trials);
            std::vector<DStats> stats(trials);
            parallel_for(trials, opts_.threads, [&](std::size_t t) {
                const std::uint64_t seed = trial_seed(sc.base_seed, n, static_cast<Index>(t));
                const NetworkModel net = make_network(sample_ensemble(sc.nodes, n, seed), lap, sd, sc.lap_scale);
                stats[t] = d_first_rowcol_stats(net, s);
            });
            std::vector<double> ratios;
            for (std::size_t t = 0; t < trials; ++t) {
                const DStats& d = stats[t];
                const double ratio = d.full_norm > 0.0 ? d.row1_norm / d.full_norm : 0.0;
                ratios.push_back(ratio);
                csv.row({idx(n), idx(static_cast<long long>(t)), std::to_string(trial_seed(sc.base_seed, n, static_cast<Index>(t))),
                         num(d.d11_abs), num(d.row1_norm), num(d.col1_norm), num(d.full_norm), num(ratio)});
            }
            m_.metrics["dstats_median_ratio_n" + std::to_string(n)] = median(ratios);
        }
        emit("dstats.csv", csv.text());
    }

    void hoeffding() {
        const auto& h = cfg_.hoeffding;
        const auto rows = h.complex ? hoeffding_tail_check_complex({h.lo, h.hi}, {h.im_lo, h.im_hi}, h.n, h.t_values,
                                                                   h.trials, cfg_.seed)
                                    : hoeffding_tail_check({h.lo, h.hi}, h.n, h.t_values, h.trials, cfg_.seed);
        CsvWriter csv({"t", "empirical_tail", "hoeffding_bound", "standard_error"});
        Index within = 0;
        for (const HoeffdingRow& r : rows) {
            csv.row({num(r.t), num(r.empirical_tail), num(r.bound), num(r.standard_error)});
            within += r.within_bound() ? 1 : 0;
        }
        m_.metrics["rows_within_bound"] = static_cast<double>(within);
        m_.metrics["log_tail_slope"] = log_tail_slope(rows);
        emit("hoeffding.csv", csv.text());
    }

    void consensus() {
        double longest = 0.0;
        Index largest = 0;
        for (Index n0 : cfg_.sizes()) {
            const Index n = graph_size(n0);
            const std::uint64_t seed = trial_seed(cfg_.seed, n0, 0);
            const NetworkModel net = make_network(sample_ensemble(cfg_.nodes, n, seed), bus_laplacian(n));
            const StateSpace ss = build_consensus_ss(net);
            const double l2 = algebraic_connectivity(net.spectral);
            const double t_final = cfg_.simulation.t_final > 0.0 ? cfg_.simulation.t_final : 200.0 / l2;
            const double dt = cfg_.simulation.dt > 0.0 ? cfg_.simulation.dt : default_dt(ss, t_final, cfg_.simulation.dt_divisor);
            log("n=" + std::to_string(n) + " t_final=" + num(t_final) + " dt=" + num(dt));
            const Trajectory traj = simulate(ss, signal(n), t_final, dt, sampling(t_final, dt));
            emit("n" + std::to_string(n) + ".csv", trajectory_csv(traj).text());

            double inv_sum = 0.0;
            for (const NodeParams& p : net.ensemble.params) inv_sum += 1.0 / p.gain;
            const RealVector last = traj.outputs.row(traj.samples() - 1).transpose();
            const std::string tag = "_n" + std::to_string(n);
            m_.metrics["terminal_mean" + tag] = last.mean();
            m_.metrics["terminal_spread" + tag] = last.maxCoeff() - last.minCoeff();
            m_.metrics["weighted_average" + tag] = static_cast<double>(n) / inv_sum;
            m_.metrics["t_final" + tag] = t_final;
            if (t_final > longest) longest = t_final;
            largest = std::max(largest, n);
        }
        // gbar(t) for the distribution: gbar(s) = 1 / (s E[1/k]).
        const double mean_inv_gain = expected_inv(cfg_.nodes, Complex(1.0)).mu.real();
        const RationalTF gbar({1.0 / mean_inv_gain}, {0.0, 1.0});
        const Index samples = std::max<Index>(cfg_.simulation.samples, 1);
        const double dt = longest / static_cast<double>(samples);
        const Trajectory ref = simulate_reduced(gbar, signal(largest), largest, longest, dt);
        m_.metrics["gbar_gain"] = 1.0 / mean_inv_gain;
        emit("reference.csv", trajectory_csv(ref).text());
    }

    void power() {
        NodeEnsemble ens = ensemble(cfg_.grid_table.empty() ? graph_size(cfg_.n) : 0, trial_seed(cfg_.seed, cfg_.n, 0));
        const Index n = ens.size();
        require(cfg_.simulation.input_node < n, ErrorCode::InvalidArgument, "[simulation] input_node is out of range");
        const StateSpace ss = build_power_ss(ens, bus_laplacian(n));
        const RationalTF ghat = reduced_representative(ens);
        const RationalTF gtilde = reduced_empirical_tf(ens);

        double t_final = cfg_.simulation.t_final;
        if (t_final <= 0.0) {
            // Ten of the slowest time constants of the full network (of
            // gtilde for very large models), and at least four periods of a
            // sinusoidal input.
            const double rate = ss.states() <= 2000 ? slowest_decay_rate(ss.A) : slowest_decay_rate(gtilde);
            t_final = rate > 0.0 ? 10.0 / rate : 100.0;
            if (cfg_.simulation.input == InputSignal::Kind::Sinusoid)
                t_final = std::max(t_final, 8.0 * std::numbers::pi / cfg_.simulation.angular_frequency);
        }
        const double dt = cfg_.simulation.dt > 0.0 ? cfg_.simulation.dt : default_dt(ss, t_final, cfg_.simulation.dt_divisor);
        const SimulationOptions so = sampling(t_final, dt);
        log("n=" + std::to_string(n) + " t_final=" + num(t_final) + " dt=" + num(dt));

        const InputSignal sig = signal(n);
        const Trajectory full = simulate(ss, sig, t_final, dt, so);
        const Trajectory red_hat = simulate_reduced(ghat, sig, n, t_final, dt, so);
        const Trajectory red_tilde = simulate_reduced(gtilde, sig, n, t_final, dt, so);
        emit("full.csv", trajectory_csv(full).text());
        emit("ghat.csv", trajectory_csv(red_hat).text());
        emit("gtilde.csv", trajectory_csv(red_tilde).text());

        const double discard = cfg_.simulation.discard_fraction;
        const ComparisonMetrics mh = compare_outputs(full, red_hat, discard);
        const ComparisonMetrics mt = compare_outputs(full, red_tilde, discard);
        m_.metrics["n"] = static_cast<double>(n);
        m_.metrics["t_final"] = t_final;
        m_.metrics["dt"] = dt;
        m_.metrics["error_ghat"] = mh.relative_l2_error;
        m_.metrics["error_gtilde"] = mt.relative_l2_error;
        m_.metrics["coherence"] = mt.coherence;
        m_.metrics["order_ghat"] = ghat.order();
        m_.metrics["order_gtilde"] = gtilde.order();
        if (sig.kind == InputSignal::Kind::Step) {
            double damping = 0.0;
            for (const NodeParams& p : ens.params) damping += p.damping + (p.has_turbine() ? p.droop : 0.0);
            const double omega_ss = sig.amplitude * sig.direction.sum() / damping;
            const RealVector last = full.outputs.row(full.samples() - 1).transpose();
            m_.metrics["omega_ss_expected"] = omega_ss;
            m_.metrics["omega_ss_max_relative_error"] =
                omega_ss != 0.0 ? (last.array() - omega_ss).abs().maxCoeff() / std::abs(omega_ss) : 0.0;
        }
    }

    void reduce() {
        NodeEnsemble ens = ensemble(cfg_.grid_table.empty() ? graph_size(cfg_.n) : 0, trial_seed(cfg_.seed, cfg_.n, 0));
        CsvWriter csv({"model", "power", "num_coeff", "den_coeff"});
        auto add = [&](const char* name, const RationalTF& tf) {
            const std::size_t len = std::max(tf.num().size(), tf.den().size());
            for (std::size_t k = 0; k < len; ++k)
                csv.row({name, idx(static_cast<long long>(k)), num(k < tf.num().size() ? tf.num()[k] : 0.0),
                         num(k < tf.den().size() ? tf.den()[k] : 0.0)});
            m_.metrics[std::string("order_") + name] = tf.order();
        };
        add("ghat", reduced_representative(ens));
        add("gtilde", reduced_empirical_tf(ens));
        Index turbines = 0;
        for (const NodeParams& p : ens.params) turbines += p.has_turbine() ? 1 : 0;
        m_.metrics["n"] = static_cast<double>(ens.size());
        m_.metrics["turbines"] = static_cast<double>(turbines);
        emit("reduced.csv", csv.text());
    }
};

}  // namespace detail

/// Runs one experiment. Module errors are caught and recorded in the
/// manifest; the manifest itself is always written.
inline ResultManifest run(const ExperimentConfig& cfg, const RunOptions& opts = {}) {
    const auto wall_start = std::chrono::system_clock::now();
    const auto start = std::chrono::steady_clock::now();
    ResultManifest m;
    m.kind = to_string(cfg.kind);
    m.config_echo = serialize(cfg);
    m.started_at = detail::utc_timestamp(wall_start);
    m.threads = std::max(1u, opts.threads);

    std::filesystem::create_directories(opts.out_dir);
    try {
        validate(cfg);
        RunOptions effective = opts;
        effective.threads = m.threads;
        detail::Runner(cfg, effective, m).dispatch();
    } catch (const Error& e) {
        m.errors.push_back(e.what());
    } catch (const std::exception& e) {
        m.errors.push_back(std::string("internal: ") + e.what());
    }
    m.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file((std::filesystem::path(opts.out_dir) / (cfg.output_prefix + "_manifest.json")).string(),
               m.to_json().dump(2) + "\n");
    return m;
}

}  // namespace dyncon::io
