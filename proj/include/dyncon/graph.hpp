#pragma once

// Undirected weighted graphs, their Laplacians, and orthonormal spectral
// decompositions with the consensus direction pinned as the first eigenvector.

#include "dyncon/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

namespace dyncon {

struct Edge {
    Index i = 0;
    Index j = 0;
    double weight = 1.0;
};

class WeightedGraph {
public:
    WeightedGraph(Index n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)) {
        require(n_ >= 1, ErrorCode::InvalidArgument, "graph needs at least one node");
        for (const Edge& e : edges_) {
            require(e.i >= 0 && e.i < n_ && e.j >= 0 && e.j < n_, ErrorCode::InvalidArgument,
                    "edge endpoint out of range: (" + std::to_string(e.i) + ", " + std::to_string(e.j) + ")");
            require(e.i != e.j, ErrorCode::InvalidArgument, "self-loop at node " + std::to_string(e.i));
            require(std::isfinite(e.weight) && e.weight >= 0.0, ErrorCode::InvalidArgument,
                    "edge weight must be finite and nonnegative");
        }
    }

    Index size() const noexcept { return n_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    std::vector<Index> degrees() const {
        std::vector<Index> deg(static_cast<std::size_t>(n_), 0);
        for (const Edge& e : edges_) {
            if (e.weight > 0.0) {
                ++deg[static_cast<std::size_t>(e.i)];
                ++deg[static_cast<std::size_t>(e.j)];
            }
        }
        return deg;
    }

    /// Connectivity over positive-weight edges (union-find).
    bool is_connected() const {
        std::vector<Index> parent(static_cast<std::size_t>(n_));
        std::iota(parent.begin(), parent.end(), Index{0});
        auto find = [&](Index x) {
            while (parent[static_cast<std::size_t>(x)] != x) {
                auto& p = parent[static_cast<std::size_t>(x)];
                p = parent[static_cast<std::size_t>(p)];
                x = p;
            }
            return x;
        };
        Index components = n_;
        for (const Edge& e : edges_) {
            if (e.weight <= 0.0) continue;
            Index a = find(e.i);
            Index b = find(e.j);
            if (a != b) {
                parent[static_cast<std::size_t>(a)] = b;
                --components;
            }
        }
        return components == 1;
    }

private:
    Index n_;
    std::vector<Edge> edges_;
};

/// Circulant ring: each node is joined to its k nearest neighbours on each side.
inline WeightedGraph build_ring(Index n, Index k, double weight = 1.0) {
    require(n >= 3, ErrorCode::InvalidArgument, "ring needs n >= 3");
    require(k >= 1, ErrorCode::InvalidArgument, "ring needs k >= 1");
    require(2 * k < n, ErrorCode::InvalidArgument,
            "ring neighbour radius must satisfy k < n/2 (got n=" + std::to_string(n) + ", k=" + std::to_string(k) + ")");
    require(weight > 0.0, ErrorCode::InvalidArgument, "ring edge weight must be positive");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n * k));
    for (Index i = 0; i < n; ++i) {
        for (Index offset = 1; offset <= k; ++offset) edges.push_back({i, (i + offset) % n, weight});
    }
    return WeightedGraph(n, std::move(edges));
}

/// Neighbour radius for the k ~ fraction * n ring family.
inline Index ring_radius(Index n, double fraction) {
    return std::max<Index>(1, static_cast<Index>(std::lround(fraction * static_cast<double>(n))));
}

inline WeightedGraph build_complete(Index n, double weight = 1.0) {
    require(n >= 2, ErrorCode::InvalidArgument, "complete graph needs n >= 2");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) edges.push_back({i, j, weight});
    return WeightedGraph(n, std::move(edges));
}

/// L = D - A. The diagonal is the negated sum of the row's off-diagonal
/// entries taken in column order, so row sums vanish in that order.
inline RealMatrix laplacian(const WeightedGraph& g) {
    const Index n = g.size();
    RealMatrix lap = RealMatrix::Zero(n, n);
    for (const Edge& e : g.edges()) {
        lap(e.i, e.j) -= e.weight;
        lap(e.j, e.i) -= e.weight;
    }
    for (Index i = 0; i < n; ++i) {
        double off = 0.0;
        for (Index j = 0; j < n; ++j)
            if (j != i) off += lap(i, j);
        lap(i, i) = -off;
    }
    return lap;
}

struct SpectralData {
    RealMatrix vectors;  // columns are orthonormal eigenvectors
    RealVector values;   // ascending

    Index size() const noexcept { return values.size(); }
};

namespace detail {

// Cyclic Jacobi rotations on a dense symmetric matrix. Returns unsorted
// eigenpairs; throws NoConvergence past the rotation cap.
inline void jacobi_eigen(RealMatrix a, RealVector& values, RealMatrix& vectors) {
    const Index n = a.rows();
    vectors = RealMatrix::Identity(n, n);
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    const double threshold = 1e-12 * scale;
    const long long rotation_cap = 100LL * static_cast<long long>(n) * static_cast<long long>(n);
    long long rotations = 0;

    auto off_norm = [&]() {
        double sum = 0.0;
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < j; ++i) sum += a(i, j) * a(i, j);
        return std::sqrt(2.0 * sum);
    };

    while (off_norm() > threshold) {
        bool rotated = false;
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Skip entries that are already negligible next to both diagonals.
                const double app = a(p, p);
                const double aqq = a(q, q);
                if (std::abs(apq) < 1e-18 * std::max(std::abs(app), std::abs(aqq))) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                double* colp = a.col(p).data();
                double* colq = a.col(q).data();
                for (Index k = 0; k < n; ++k) {
                    const double akp = colp[k];
                    const double akq = colq[k];
                    colp[k] = c * akp - s * akq;
                    colq[k] = s * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    a(p, k) = a(k, p);
                    a(q, k) = a(k, q);
                }
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = a(q, p) = 0.0;

                double* vp = vectors.col(p).data();
                double* vq = vectors.col(q).data();
                for (Index k = 0; k < n; ++k) {
                    const double vkp = vp[k];
                    const double vkq = vq[k];
                    vp[k] = c * vkp - s * vkq;
                    vq[k] = s * vkp + c * vkq;
                }
                rotated = true;
                if (++rotations > rotation_cap)
                    throw Error(ErrorCode::NoConvergence, "Jacobi eigensolver exceeded rotation cap");
            }
        }
        if (!rotated) break;
    }
    values = a.diagonal();
}

}  // namespace detail

/// Orthonormal eigendecomposition of a connected graph Laplacian.
///
/// Eigenvalues ascend; each eigenvector is signed so its largest-magnitude
/// entry is positive; column 0 is replaced by exactly 1/sqrt(n) and its
/// eigenvalue by exactly 0.
inline SpectralData spectral(const RealMatrix& lap) {
    const Index n = lap.rows();
    require(n >= 1 && lap.cols() == n, ErrorCode::InvalidArgument, "Laplacian must be square and nonempty");
    require(lap.allFinite(), ErrorCode::InvalidArgument, "Laplacian has non-finite entries");
    const double asym = (lap - lap.transpose()).cwiseAbs().maxCoeff();
    require(asym < 1e-12, ErrorCode::InvalidArgument, "Laplacian is not symmetric");
    const double scale = std::max(1.0, lap.cwiseAbs().maxCoeff());
    require(lap.rowwise().sum().cwiseAbs().maxCoeff() < 1e-10 * scale * static_cast<double>(n),
            ErrorCode::InvalidArgument, "Laplacian row sums are not zero");

    RealVector raw_values;
    RealMatrix raw_vectors;
    detail::jacobi_eigen(lap, raw_values, raw_vectors);

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index x, Index y) { return raw_values(x) < raw_values(y); });

    SpectralData out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index c = 0; c < n; ++c) {
        const Index src = order[static_cast<std::size_t>(c)];
        out.values(c) = raw_values(src);
        RealVector v = raw_vectors.col(src);
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        out.vectors.col(c) = v;
    }

    if (n >= 2) {
        require(out.values(1) >= 1e-10, ErrorCode::NotConnected,
                "second Laplacian eigenvalue " + std::to_string(out.values(1)) + " is below 1e-10");
    }
    out.values(0) = 0.0;
    out.vectors.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
    return out;
}

inline double algebraic_connectivity(const SpectralData& sd) {
    require(sd.size() >= 2, ErrorCode::InvalidArgument, "algebraic connectivity needs n >= 2");
    return sd.values(1);
}

enum class GraphFamily { Ring, Complete, EdgeList };

inline const char* to_string(GraphFamily f) {
    switch (f) {
        case GraphFamily::Ring: return "ring";
        case GraphFamily::Complete: return "complete";
        case GraphFamily::EdgeList: return "edge_list";
    }
    return "unknown";
}

/// How to build the interconnection for a given network size. For rings the
/// neighbour radius is `k` when positive, else round(k_fraction * n).
struct GraphRule {
    GraphFamily family = GraphFamily::Ring;
    Index k = 0;
    double k_fraction = 0.15;
    double weight = 1.0;
    std::string path;  // edge-list file

    bool operator==(const GraphRule&) const = default;

    Index radius(Index n) const { return k > 0 ? k : ring_radius(n, k_fraction); }

    void validate(Index n) const {
        require(weight > 0.0 && std::isfinite(weight), ErrorCode::InvalidArgument, "graph weight must be positive");
        if (family == GraphFamily::Ring) {
            require(n >= 3, ErrorCode::InvalidArgument, "ring needs n >= 3");
            require(k > 0 || (k_fraction > 0.0 && std::isfinite(k_fraction)), ErrorCode::InvalidArgument,
                    "ring needs k >= 1 or a positive k_fraction");
            const Index r = radius(n);
            require(2 * r < n, ErrorCode::InvalidArgument,
                    "ring neighbour radius must satisfy k < n/2 (n=" + std::to_string(n) + ", k=" + std::to_string(r) + ")");
        } else if (family == GraphFamily::Complete) {
            require(n >= 2, ErrorCode::InvalidArgument, "complete graph needs n >= 2");
        } else {
            require(!path.empty(), ErrorCode::InvalidArgument, "edge_list graph needs a path");
        }
    }
};

/// Edge list: one `i j weight` triple per line, 0-indexed, `#` comments.
/// The node count is the largest index + 1 unless `n` is given.
inline WeightedGraph read_edge_list(std::istream& in, Index n = 0) {
    std::vector<Edge> edges;
    std::string line;
    Index max_index = -1;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        Edge e;
        if (!(ls >> e.i)) {
            std::string rest;
            ls.clear();
            if (ls >> rest)
                throw Error(ErrorCode::Parse, "edge list line " + std::to_string(line_no) + ": expected `i j weight`");
            continue;
        }
        std::string extra;
        if (!(ls >> e.j >> e.weight) || (ls >> extra))
            throw Error(ErrorCode::Parse, "edge list line " + std::to_string(line_no) + ": expected `i j weight`");
        if (e.i < 0 || e.j < 0 || e.i == e.j || !(e.weight >= 0.0) || !std::isfinite(e.weight))
            throw Error(ErrorCode::Parse, "edge list line " + std::to_string(line_no) + ": invalid edge");
        max_index = std::max({max_index, e.i, e.j});
        edges.push_back(e);
    }
    const Index size = n > 0 ? n : max_index + 1;
    require(size >= 1, ErrorCode::Parse, "edge list is empty");
    require(max_index < size, ErrorCode::Parse, "edge list references a node beyond n");
    WeightedGraph g(size, std::move(edges));
    require(g.is_connected(), ErrorCode::NotConnected, "edge list graph is not connected");
    return g;
}

inline WeightedGraph read_edge_list(const std::string& path, Index n = 0) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::Io, "cannot open edge list " + path);
    return read_edge_list(in, n);
}


inline WeightedGraph build_graph(const GraphRule& rule, Index n) {
    switch (rule.family) {
        case GraphFamily::Ring:
            rule.validate(n);
            return build_ring(n, rule.radius(n), rule.weight);
        case GraphFamily::Complete:
            rule.validate(n);
            return build_complete(n, rule.weight);
        case GraphFamily::EdgeList: {
            WeightedGraph g = read_edge_list(rule.path, n);
            if (rule.weight == 1.0) return g;
            std::vector<Edge> scaled = g.edges();
            for (Edge& e : scaled) e.weight *= rule.weight;
            return WeightedGraph(g.size(), std::move(scaled));
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown graph family");
}

}  // namespace dyncon
