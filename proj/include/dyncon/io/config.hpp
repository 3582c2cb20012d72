#pragma once

// Experiment configuration: sectioned `key = value` text.
//
//   [experiment]  kind, seed, output_prefix
//   [graph]       family, n, n_list, k, k_fraction, weight, path
//   [nodes]       kind, gain, inertia, damping, droop, tau, tau_choices,
//                 turbine_fraction, table
//   [network]     lap_scale
//   [frequency]   omega_min, omega_max, count, points
//   [sweep]       trials, epsilon, dstats_s
//   [hoeffding]   variant, lo, hi, im_lo, im_hi, n, t_values, trials
//   [simulation]  input, input_node, amplitude, angular_frequency, t_final,
//                 dt, dt_divisor, samples, discard_fraction
//
// Ranges are written `lo, hi` (a single value fixes the parameter), lists
// are comma separated, complex numbers use `a+bj`, and reals accept a `pi`
// suffix (`0.3pi`). `#` and `;` start comments.

#include "dyncon/concentration.hpp"
#include "dyncon/graph.hpp"
#include "dyncon/io/csv.hpp"
#include "dyncon/io/grid_table.hpp"
#include "dyncon/node_dynamics.hpp"
#include "dyncon/time_sim.hpp"
#include "dyncon/transfer_matrix.hpp"
#include "dyncon/types.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dyncon::io {

enum class ExperimentKind { Spectrum, Deviation, Sweep, Hoeffding, ConsensusSim, PowerSim, Reduce };

inline const char* to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Spectrum: return "spectrum";
        case ExperimentKind::Deviation: return "deviation";
        case ExperimentKind::Sweep: return "sweep";
        case ExperimentKind::Hoeffding: return "hoeffding";
        case ExperimentKind::ConsensusSim: return "consensus-sim";
        case ExperimentKind::PowerSim: return "power-sim";
        case ExperimentKind::Reduce: return "reduce";
    }
    return "?";
}

struct FrequencySettings {
    double omega_min = -0.3 * std::numbers::pi;
    double omega_max = 0.3 * std::numbers::pi;
    Index count = 13;
    std::vector<Complex> points;  // overrides the band when nonempty

    bool operator==(const FrequencySettings&) const = default;
};

struct HoeffdingSettings {
    bool complex = false;
    double lo = 1.0;
    double hi = 5.0;
    double im_lo = 0.0;
    double im_hi = 1.0;
    Index n = 50;
    std::vector<double> t_values{0.2, 0.4, 0.6};
    Index trials = 100000;

    bool operator==(const HoeffdingSettings&) const = default;
};

struct SimulationSettings {
    InputSignal::Kind input = InputSignal::Kind::Step;
    Index input_node = -1;  // -1: every node
    double amplitude = 1.0;
    double angular_frequency = 0.0;
    double t_final = 0.0;  // 0: per-experiment heuristic
    double dt = 0.0;       // 0: 1 / (dt_divisor * rho(A))
    double dt_divisor = 20.0;
    Index samples = 1000;  // approximate rows per trajectory CSV, 0 keeps every step
    double discard_fraction = 0.25;

    bool operator==(const SimulationSettings&) const = default;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Spectrum;
    std::uint64_t seed = 1;
    std::string output_prefix = "run";

    GraphRule graph;
    Index n = 0;
    std::vector<Index> n_list;

    NodeDistributionSpec nodes;
    std::string grid_table;  // nodes come from this table when set

    LapScale lap_scale = LapScale::One;
    FrequencySettings frequency;

    Index trials = 30;
    double epsilon = 0.1;
    std::optional<Complex> dstats_s;

    HoeffdingSettings hoeffding;
    SimulationSettings simulation;

    bool operator==(const ExperimentConfig&) const = default;

    /// Network sizes the experiment runs over: n_list, else {n}.
    std::vector<Index> sizes() const { return n_list.empty() ? std::vector<Index>{n} : n_list; }
};

// ---------------------------------------------------------------------------
// Value parsing
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<double> parse_real(std::string text) {
    text = trim(text);
    double factor = 1.0;
    if (text.size() >= 2 && text.compare(text.size() - 2, 2, "pi") == 0) {
        factor = std::numbers::pi;
        text = trim(text.substr(0, text.size() - 2));
        if (!text.empty() && text.back() == '*') text = trim(text.substr(0, text.size() - 1));
        if (text.empty() || text == "+") text = "1";
        if (text == "-") text = "-1";
    }
    double v = 0.0;
    if (!parse_double(text, v)) return std::nullopt;
    return v * factor;
}

inline std::optional<long long> parse_integer(const std::string& raw) {
    const std::string text = trim(raw);
    long long v = 0;
    const char* first = text.data();
    if (!text.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) return std::nullopt;
    return v;
}

/// `a`, `bj`, `a+bj`, `a-bj`, `j`, `-j`; `i` is accepted for `j`.
inline std::optional<Complex> parse_complex(const std::string& raw) {
    std::string text;
    for (char c : raw)
        if (c != ' ' && c != '\t') text += c;
    if (text.empty()) return std::nullopt;
    const char last = text.back();
    if (last != 'j' && last != 'i') {
        const auto re = parse_real(text);
        if (!re) return std::nullopt;
        return Complex(*re, 0.0);
    }
    text.pop_back();
    std::size_t split = std::string::npos;
    for (std::size_t k = text.size(); k-- > 1;) {
        if ((text[k] == '+' || text[k] == '-') && text[k - 1] != 'e' && text[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    auto imag_part = [](std::string s) -> std::optional<double> {
        if (s.empty() || s == "+") return 1.0;
        if (s == "-") return -1.0;
        return parse_real(s);
    };
    if (split == std::string::npos) {
        const auto im = imag_part(text);
        if (!im) return std::nullopt;
        return Complex(0.0, *im);
    }
    const auto re = parse_real(text.substr(0, split));
    const auto im = imag_part(text.substr(split));
    if (!re || !im) return std::nullopt;
    return Complex(*re, *im);
}

inline std::string format_complex(Complex z) {
    std::string im = format_shortest(z.imag());
    if (im.front() != '-') im = "+" + im;
    return format_shortest(z.real()) + im + "j";
}

template <class T>
std::string join(const std::vector<T>& items, auto&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i > 0) out += ", ";
        out += fmt(items[i]);
    }
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
};

// Allowed keys per section.
inline const std::map<std::string, std::vector<std::string>>& schema() {
    static const std::map<std::string, std::vector<std::string>> s{
        {"experiment", {"kind", "seed", "output_prefix"}},
        {"graph", {"family", "n", "n_list", "k", "k_fraction", "weight", "path"}},
        {"nodes", {"kind", "gain", "inertia", "damping", "droop", "tau", "tau_choices", "turbine_fraction", "table"}},
        {"network", {"lap_scale"}},
        {"frequency", {"omega_min", "omega_max", "count", "points"}},
        {"sweep", {"trials", "epsilon", "dstats_s"}},
        {"hoeffding", {"variant", "lo", "hi", "im_lo", "im_hi", "n", "t_values", "trials"}},
        {"simulation",
         {"input", "input_node", "amplitude", "angular_frequency", "t_final", "dt", "dt_divisor", "samples",
          "discard_fraction"}},
    };
    return s;
}

class Reader {
public:
    std::map<std::string, Entry> entries;  // "section.key"
    std::map<std::string, int> section_lines;

    bool has(const std::string& key) const { return entries.count(key) > 0; }
    int line(const std::string& key) const {
        if (auto it = entries.find(key); it != entries.end()) return it->second.line;
        const auto section = key.substr(0, key.find('.'));
        if (auto it = section_lines.find(section); it != section_lines.end()) return it->second;
        return 0;
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        const int l = line(key);
        throw Error(ErrorCode::Parse, (l > 0 ? "line " + std::to_string(l) + ": " : std::string()) + "[" +
                                          key.substr(0, key.find('.')) + "] " + key.substr(key.find('.') + 1) +
                                          ": " + msg);
    }

    const std::string* raw(const std::string& key) const {
        auto it = entries.find(key);
        return it == entries.end() ? nullptr : &it->second.value;
    }

    void real(const std::string& key, double& out) const {
        if (const auto* v = raw(key)) {
            const auto x = parse_real(*v);
            if (!x) fail(key, "expected a number, got '" + *v + "'");
            out = *x;
        }
    }
    void integer(const std::string& key, Index& out) const {
        if (const auto* v = raw(key)) {
            const auto x = parse_integer(*v);
            if (!x) fail(key, "expected an integer, got '" + *v + "'");
            out = static_cast<Index>(*x);
        }
    }
    void unsigned_integer(const std::string& key, std::uint64_t& out) const {
        if (const auto* v = raw(key)) {
            std::uint64_t x = 0;
            const std::string t = trim(*v);
            const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
            if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
                fail(key, "expected a nonnegative integer, got '" + *v + "'");
            out = x;
        }
    }
    void text(const std::string& key, std::string& out) const {
        if (const auto* v = raw(key)) {
            std::string t = trim(*v);
            if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
            out = t;
        }
    }
    void range(const std::string& key, ParamRange& out) const {
        if (const auto* v = raw(key)) {
            const auto parts = split(*v, ',');
            std::vector<double> xs;
            for (const auto& p : parts) {
                const auto x = parse_real(p);
                if (!x) fail(key, "expected `lo, hi`, got '" + *v + "'");
                xs.push_back(*x);
            }
            if (xs.size() == 1) xs.push_back(xs[0]);
            if (xs.size() != 2) fail(key, "expected `lo, hi`, got '" + *v + "'");
            out = {xs[0], xs[1]};
        }
    }
    template <class T, class Parse>
    void list(const std::string& key, std::vector<T>& out, Parse&& parse, const char* what) const {
        if (const auto* v = raw(key)) {
            out.clear();
            if (trim(*v).empty()) return;
            for (const auto& p : split(*v, ',')) {
                const auto x = parse(p);
                if (!x) fail(key, std::string("expected a list of ") + what + ", got '" + p + "'");
                out.push_back(static_cast<T>(*x));
            }
        }
    }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// parse / validate / serialize
// ---------------------------------------------------------------------------

/// Checks every embedded invariant. With a reader attached, errors are
/// prefixed by the source line of the offending entry.
inline void validate(const ExperimentConfig& cfg, const detail::Reader* src = nullptr) {
    auto guard = [&](const std::string& key, auto&& check) {
        try {
            check();
        } catch (const Error& e) {
            std::string where = key;
            // Distribution errors name the offending parameter.
            if (key == "nodes.kind" && src) {
                static const std::vector<std::pair<std::string, std::string>> names{
                    {"range for gain", "nodes.gain"},           {"range for inertia", "nodes.inertia"},
                    {"range for damping", "nodes.damping"},     {"range for droop", "nodes.droop"},
                    {"constant choices", "nodes.tau_choices"},  {"range for turbine time", "nodes.tau"},
                    {"turbine fraction", "nodes.turbine_fraction"}};
                for (const auto& [needle, k] : names)
                    if (e.message().find(needle) != std::string::npos && src->has(k)) {
                        where = k;
                        break;
                    }
            }
            const int l = src ? src->line(where) : 0;
            throw Error(e.code(), (l > 0 ? "line " + std::to_string(l) + ": " : std::string()) + e.message());
        }
    };
    const bool table = !cfg.grid_table.empty();
    const std::string graph_key = src && src->has("graph.k") ? "graph.k" : (src && src->has("graph.n_list") ? "graph.n_list" : "graph.n");

    require(!cfg.output_prefix.empty() && cfg.output_prefix.find('/') == std::string::npos, ErrorCode::InvalidArgument,
            "output_prefix must be a nonempty file name prefix");

    auto need_sizes = [&] {
        guard(graph_key, [&] {
            if (cfg.graph.family == GraphFamily::EdgeList && cfg.n == 0 && cfg.n_list.empty()) {
                cfg.graph.validate(0);
                return;
            }
            const auto sizes = cfg.sizes();
            require(!sizes.empty() && sizes.front() > 0, ErrorCode::InvalidArgument,
                    "[graph] needs n or n_list for a " + std::string(to_string(cfg.kind)) + " experiment");
            for (Index n : sizes) {
                require(n >= 2, ErrorCode::InvalidArgument, "network sizes must be at least 2");
                cfg.graph.validate(n);
            }
        });
    };
    auto need_distribution = [&] {
        guard("nodes.kind", [&] {
            require(!table, ErrorCode::InvalidArgument,
                    std::string(to_string(cfg.kind)) + " experiments sample nodes from a distribution, not a table");
            cfg.nodes.validate();
        });
    };
    auto need_grid = [&] {
        guard("frequency.points", [&] {
            if (!cfg.frequency.points.empty()) return;
            require(cfg.frequency.count >= 1, ErrorCode::InvalidArgument, "[frequency] count must be at least 1");
            require(cfg.frequency.omega_min <= cfg.frequency.omega_max, ErrorCode::InvalidArgument,
                    "[frequency] omega_min must not exceed omega_max");
        });
    };
    auto need_power_nodes = [&] {
        guard(table ? "nodes.table" : "nodes.kind", [&] {
            if (table) return;
            require(cfg.nodes.kind == NodeKind::Swing || cfg.nodes.kind == NodeKind::Turbine, ErrorCode::WrongNodeKind,
                    std::string(to_string(cfg.kind)) + " needs swing or turbine nodes");
            cfg.nodes.validate();
        });
    };

    switch (cfg.kind) {
        case ExperimentKind::Spectrum: need_sizes(); break;
        case ExperimentKind::Deviation:
            need_sizes();
            if (!table) need_distribution();
            need_grid();
            break;
        case ExperimentKind::Sweep:
            need_sizes();
            need_distribution();
            need_grid();
            guard("sweep.trials", [&] {
                require(cfg.trials >= 1, ErrorCode::InvalidArgument, "[sweep] trials must be at least 1");
                require(cfg.epsilon >= 0.0, ErrorCode::InvalidArgument, "[sweep] epsilon must be nonnegative");
            });
            break;
        case ExperimentKind::Hoeffding:
            guard("hoeffding.n", [&] {
                const auto& h = cfg.hoeffding;
                require(h.lo < h.hi, ErrorCode::InvalidArgument, "[hoeffding] needs lo < hi");
                require(!h.complex || h.im_lo < h.im_hi, ErrorCode::InvalidArgument, "[hoeffding] needs im_lo < im_hi");
                require(h.n >= 1 && h.trials >= 1, ErrorCode::InvalidArgument, "[hoeffding] n and trials must be positive");
                require(!h.t_values.empty(), ErrorCode::InvalidArgument, "[hoeffding] t_values is empty");
                for (double t : h.t_values) require(t > 0.0, ErrorCode::InvalidArgument, "[hoeffding] t values must be positive");
            });
            break;
        case ExperimentKind::ConsensusSim:
            need_sizes();
            need_distribution();
            guard("nodes.kind", [&] {
                require(cfg.nodes.kind == NodeKind::Integrator, ErrorCode::WrongNodeKind,
                        "consensus-sim needs integrator nodes");
                require(cfg.lap_scale == LapScale::One, ErrorCode::InvalidArgument,
                        "consensus-sim needs a static Laplacian (lap_scale = one)");
            });
            break;
        case ExperimentKind::PowerSim:
            need_power_nodes();
            if (!table) need_sizes();
            break;
        case ExperimentKind::Reduce:
            need_power_nodes();
            if (!table) need_sizes();
            break;
    }

    if (cfg.kind == ExperimentKind::PowerSim || cfg.kind == ExperimentKind::ConsensusSim) {
        guard("simulation.input", [&] {
            const auto& s = cfg.simulation;
            require(s.input_node >= -1, ErrorCode::InvalidArgument, "[simulation] input_node must be a node index or `all`");
            if (!table)
                for (Index n : cfg.sizes())
                    require(s.input_node < n, ErrorCode::InvalidArgument, "[simulation] input_node is out of range");
            require(std::isfinite(s.amplitude), ErrorCode::InvalidArgument, "[simulation] amplitude must be finite");
            if (s.input == InputSignal::Kind::Sinusoid)
                require(s.angular_frequency > 0.0, ErrorCode::InvalidArgument,
                        "[simulation] sinusoid needs angular_frequency > 0");
            require(s.t_final >= 0.0 && s.dt >= 0.0 && s.dt_divisor > 0.0, ErrorCode::InvalidArgument,
                    "[simulation] t_final and dt must be nonnegative, dt_divisor positive");
            require(s.samples >= 0, ErrorCode::InvalidArgument, "[simulation] samples must be nonnegative");
            require(s.discard_fraction >= 0.0 && s.discard_fraction < 1.0, ErrorCode::InvalidArgument,
                    "[simulation] discard_fraction must lie in [0, 1)");
        });
    }
}

/// Parses and validates. Relative `path`/`table` entries become absolute,
/// resolved against `base_dir` (the working directory when empty).
inline ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = "") {
    using namespace detail;
    Reader rd;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    auto fail = [&](const std::string& msg) {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail("malformed section header '" + t + "'");
            section = trim(t.substr(1, t.size() - 2));
            if (!schema().count(section)) fail("unknown section [" + section + "]");
            if (rd.section_lines.count(section)) fail("duplicate section [" + section + "]");
            rd.section_lines[section] = line_no;
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail("expected `key = value`");
        if (section.empty()) fail("entry outside of any section");
        const std::string key = trim(t.substr(0, eq));
        const auto& allowed = schema().at(section);
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            fail("unknown key '" + key + "' in section [" + section + "]");
        const std::string full = section + "." + key;
        if (rd.entries.count(full)) fail("duplicate key '" + key + "' in section [" + section + "]");
        rd.entries[full] = Entry{trim(t.substr(eq + 1)), line_no};
    }

    ExperimentConfig cfg;
    auto resolve = [&](std::string p) {
        if (p.empty() || std::filesystem::path(p).is_absolute()) return p;
        return std::filesystem::absolute(std::filesystem::path(base_dir) / p).lexically_normal().string();
    };

    // [experiment]
    if (!rd.has("experiment.kind")) throw Error(ErrorCode::Parse, "missing required key [experiment] kind");
    {
        std::string kind;
        rd.text("experiment.kind", kind);
        static const std::map<std::string, ExperimentKind> kinds{
            {"spectrum", ExperimentKind::Spectrum},         {"deviation", ExperimentKind::Deviation},
            {"sweep", ExperimentKind::Sweep},               {"hoeffding", ExperimentKind::Hoeffding},
            {"consensus-sim", ExperimentKind::ConsensusSim}, {"power-sim", ExperimentKind::PowerSim},
            {"reduce", ExperimentKind::Reduce}};
        const auto it = kinds.find(kind);
        if (it == kinds.end()) rd.fail("experiment.kind", "unknown experiment kind '" + kind + "'");
        cfg.kind = it->second;
    }
    rd.unsigned_integer("experiment.seed", cfg.seed);
    rd.text("experiment.output_prefix", cfg.output_prefix);

    // [graph]
    if (const auto* v = rd.raw("graph.family")) {
        const std::string f = trim(*v);
        if (f == "ring") cfg.graph.family = GraphFamily::Ring;
        else if (f == "complete") cfg.graph.family = GraphFamily::Complete;
        else if (f == "edge_list") cfg.graph.family = GraphFamily::EdgeList;
        else rd.fail("graph.family", "expected ring, complete or edge_list, got '" + f + "'");
    }
    rd.integer("graph.n", cfg.n);
    rd.list("graph.n_list", cfg.n_list, parse_integer, "integers");
    rd.integer("graph.k", cfg.graph.k);
    rd.real("graph.k_fraction", cfg.graph.k_fraction);
    rd.real("graph.weight", cfg.graph.weight);
    rd.text("graph.path", cfg.graph.path);
    cfg.graph.path = resolve(cfg.graph.path);
    if (cfg.n < 0) rd.fail("graph.n", "must be nonnegative");
    if (cfg.graph.k < 0) rd.fail("graph.k", "must be nonnegative (0 selects k_fraction)");

    // [nodes]
    if (const auto* v = rd.raw("nodes.kind")) {
        const std::string k = trim(*v);
        if (k == "integrator") cfg.nodes.kind = NodeKind::Integrator;
        else if (k == "swing") cfg.nodes.kind = NodeKind::Swing;
        else if (k == "turbine") cfg.nodes.kind = NodeKind::Turbine;
        else if (k != "table") rd.fail("nodes.kind", "expected integrator, swing, turbine or table, got '" + k + "'");
        if (k == "table" && !rd.has("nodes.table")) rd.fail("nodes.kind", "kind = table needs a `table` path");
    }
    rd.range("nodes.gain", cfg.nodes.gain);
    rd.range("nodes.inertia", cfg.nodes.inertia);
    rd.range("nodes.damping", cfg.nodes.damping);
    rd.range("nodes.droop", cfg.nodes.droop);
    rd.range("nodes.tau", cfg.nodes.turbine_time);
    rd.list("nodes.tau_choices", cfg.nodes.turbine_time_choices, parse_real, "numbers");
    rd.real("nodes.turbine_fraction", cfg.nodes.turbine_fraction);
    rd.text("nodes.table", cfg.grid_table);
    if (!cfg.grid_table.empty() && rd.has("nodes.kind") && trim(*rd.raw("nodes.kind")) != "table")
        rd.fail("nodes.table", "a grid table requires kind = table");
    cfg.grid_table = resolve(cfg.grid_table);

    // [network]
    if (const auto* v = rd.raw("network.lap_scale")) {
        const std::string s = trim(*v);
        if (s == "one") cfg.lap_scale = LapScale::One;
        else if (s == "inverse_s") cfg.lap_scale = LapScale::InverseS;
        else rd.fail("network.lap_scale", "expected one or inverse_s, got '" + s + "'");
    }

    // [frequency]
    rd.real("frequency.omega_min", cfg.frequency.omega_min);
    rd.real("frequency.omega_max", cfg.frequency.omega_max);
    rd.integer("frequency.count", cfg.frequency.count);
    rd.list("frequency.points", cfg.frequency.points, parse_complex, "complex numbers");

    // [sweep]
    rd.integer("sweep.trials", cfg.trials);
    rd.real("sweep.epsilon", cfg.epsilon);
    if (const auto* v = rd.raw("sweep.dstats_s"); v && !trim(*v).empty()) {
        const auto z = parse_complex(*v);
        if (!z) rd.fail("sweep.dstats_s", "expected a complex number, got '" + *v + "'");
        cfg.dstats_s = *z;
    }

    // [hoeffding]
    if (const auto* v = rd.raw("hoeffding.variant")) {
        const std::string s = trim(*v);
        if (s != "real" && s != "complex") rd.fail("hoeffding.variant", "expected real or complex, got '" + s + "'");
        cfg.hoeffding.complex = s == "complex";
    }
    rd.real("hoeffding.lo", cfg.hoeffding.lo);
    rd.real("hoeffding.hi", cfg.hoeffding.hi);
    rd.real("hoeffding.im_lo", cfg.hoeffding.im_lo);
    rd.real("hoeffding.im_hi", cfg.hoeffding.im_hi);
    rd.integer("hoeffding.n", cfg.hoeffding.n);
    rd.list("hoeffding.t_values", cfg.hoeffding.t_values, parse_real, "numbers");
    rd.integer("hoeffding.trials", cfg.hoeffding.trials);

    // [simulation]
    if (const auto* v = rd.raw("simulation.input")) {
        const std::string s = trim(*v);
        if (s == "impulse") cfg.simulation.input = InputSignal::Kind::ImpulseAsInitialCondition;
        else if (s == "step") cfg.simulation.input = InputSignal::Kind::Step;
        else if (s == "sinusoid") cfg.simulation.input = InputSignal::Kind::Sinusoid;
        else rd.fail("simulation.input", "expected impulse, step or sinusoid, got '" + s + "'");
    } else if (cfg.kind == ExperimentKind::ConsensusSim) {
        cfg.simulation.input = InputSignal::Kind::ImpulseAsInitialCondition;
    }
    if (const auto* v = rd.raw("simulation.input_node")) {
        if (trim(*v) == "all") cfg.simulation.input_node = -1;
        else rd.integer("simulation.input_node", cfg.simulation.input_node);
    }
    rd.real("simulation.amplitude", cfg.simulation.amplitude);
    rd.real("simulation.angular_frequency", cfg.simulation.angular_frequency);
    rd.real("simulation.t_final", cfg.simulation.t_final);
    rd.real("simulation.dt", cfg.simulation.dt);
    rd.real("simulation.dt_divisor", cfg.simulation.dt_divisor);
    rd.integer("simulation.samples", cfg.simulation.samples);
    rd.real("simulation.discard_fraction", cfg.simulation.discard_fraction);

    validate(cfg, &rd);
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), std::filesystem::path(path).parent_path().string());
}

/// Canonical text: every section and key in a fixed order, numbers in
/// shortest round-trip form. parse_config(serialize(c)) == c.
inline std::string serialize(const ExperimentConfig& cfg) {
    using detail::format_complex;
    using detail::join;
    auto num = [](double x) { return format_shortest(x); };
    auto range = [&](const ParamRange& r) { return num(r.lo) + ", " + num(r.hi); };
    auto idx = [](Index x) { return std::to_string(x); };
    std::ostringstream o;
    o << "[experiment]\n"
      << "kind = " << to_string(cfg.kind) << "\n"
      << "seed = " << cfg.seed << "\n"
      << "output_prefix = " << cfg.output_prefix << "\n\n";

    const char* family = cfg.graph.family == GraphFamily::Ring       ? "ring"
                         : cfg.graph.family == GraphFamily::Complete ? "complete"
                                                                     : "edge_list";
    o << "[graph]\n"
      << "family = " << family << "\n"
      << "n = " << cfg.n << "\n"
      << "n_list = " << join(cfg.n_list, idx) << "\n"
      << "k = " << cfg.graph.k << "\n"
      << "k_fraction = " << num(cfg.graph.k_fraction) << "\n"
      << "weight = " << num(cfg.graph.weight) << "\n"
      << "path = " << cfg.graph.path << "\n\n";

    const char* node_kind = !cfg.grid_table.empty()                   ? "table"
                            : cfg.nodes.kind == NodeKind::Integrator ? "integrator"
                            : cfg.nodes.kind == NodeKind::Swing      ? "swing"
                                                                     : "turbine";
    o << "[nodes]\n"
      << "kind = " << node_kind << "\n"
      << "gain = " << range(cfg.nodes.gain) << "\n"
      << "inertia = " << range(cfg.nodes.inertia) << "\n"
      << "damping = " << range(cfg.nodes.damping) << "\n"
      << "droop = " << range(cfg.nodes.droop) << "\n"
      << "tau = " << range(cfg.nodes.turbine_time) << "\n"
      << "tau_choices = " << join(cfg.nodes.turbine_time_choices, num) << "\n"
      << "turbine_fraction = " << num(cfg.nodes.turbine_fraction) << "\n"
      << "table = " << cfg.grid_table << "\n\n";

    o << "[network]\n"
      << "lap_scale = " << to_string(cfg.lap_scale) << "\n\n";

    o << "[frequency]\n"
      << "omega_min = " << num(cfg.frequency.omega_min) << "\n"
      << "omega_max = " << num(cfg.frequency.omega_max) << "\n"
      << "count = " << cfg.frequency.count << "\n"
      << "points = " << join(cfg.frequency.points, [](Complex z) { return format_complex(z); }) << "\n\n";

    o << "[sweep]\n"
      << "trials = " << cfg.trials << "\n"
      << "epsilon = " << num(cfg.epsilon) << "\n"
      << "dstats_s = " << (cfg.dstats_s ? format_complex(*cfg.dstats_s) : std::string()) << "\n\n";

    const auto& h = cfg.hoeffding;
    o << "[hoeffding]\n"
      << "variant = " << (h.complex ? "complex" : "real") << "\n"
      << "lo = " << num(h.lo) << "\n"
      << "hi = " << num(h.hi) << "\n"
      << "im_lo = " << num(h.im_lo) << "\n"
      << "im_hi = " << num(h.im_hi) << "\n"
      << "n = " << h.n << "\n"
      << "t_values = " << join(h.t_values, num) << "\n"
      << "trials = " << h.trials << "\n\n";

    const auto& s = cfg.simulation;
    const char* input = s.input == InputSignal::Kind::ImpulseAsInitialCondition ? "impulse"
                        : s.input == InputSignal::Kind::Step                   ? "step"
                                                                               : "sinusoid";
    o << "[simulation]\n"
      << "input = " << input << "\n"
      << "input_node = " << (s.input_node < 0 ? std::string("all") : std::to_string(s.input_node)) << "\n"
      << "amplitude = " << num(s.amplitude) << "\n"
      << "angular_frequency = " << num(s.angular_frequency) << "\n"
      << "t_final = " << num(s.t_final) << "\n"
      << "dt = " << num(s.dt) << "\n"
      << "dt_divisor = " << num(s.dt_divisor) << "\n"
      << "samples = " << s.samples << "\n"
      << "discard_fraction = " << num(s.discard_fraction) << "\n";
    return o.str();
}

}  // namespace dyncon::io
