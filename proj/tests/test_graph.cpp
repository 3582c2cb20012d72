#include "dyncon/graph.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace dyncon;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::ContainsSubstring;

namespace {

// Circulant closed form for ring(n, k): lambda_m = sum_j 2 (1 - cos(2 pi m j / n)).
double ring_eigenvalue(Index n, Index k, Index m) {
    double sum = 0.0;
    for (Index j = 1; j <= k; ++j) sum += 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * double(m * j) / double(n)));
    return sum;
}

void check_spectral_invariants(const RealMatrix& lap, const SpectralData& sd) {
    const Index n = lap.rows();
    REQUIRE(sd.size() == n);
    CHECK((sd.vectors.transpose() * sd.vectors - RealMatrix::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((sd.vectors * sd.values.asDiagonal() * sd.vectors.transpose() - lap).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(sd.values(0) == 0.0);
    for (Index i = 1; i < n; ++i) CHECK(sd.values(i) >= sd.values(i - 1));
    for (Index i = 0; i < n; ++i) CHECK(sd.vectors(i, 0) == 1.0 / std::sqrt(double(n)));
}

}  // namespace

TEST_CASE("ring construction", "[graph]") {
    SECTION("cycle C6") {
        const auto g = build_ring(6, 1);
        CHECK(g.edges().size() == 6);
        for (Index d : g.degrees()) CHECK(d == 2);
    }
    SECTION("n = 20 with k = round(0.15 n)") {
        CHECK(ring_radius(20, 0.15) == 3);
        for (Index d : build_ring(20, ring_radius(20, 0.15)).degrees()) CHECK(d == 6);
    }
    SECTION("n = 8, k = 3 against brute-force enumeration") {
        const auto g = build_ring(8, 3);
        std::set<std::pair<Index, Index>> expected;
        for (Index i = 0; i < 8; ++i)
            for (Index j = 0; j < 8; ++j) {
                const Index gap = std::min((i - j + 8) % 8, (j - i + 8) % 8);
                if (i < j && gap >= 1 && gap <= 3) expected.insert({i, j});
            }
        std::set<std::pair<Index, Index>> got;
        for (const Edge& e : g.edges()) got.insert({std::min(e.i, e.j), std::max(e.i, e.j)});
        CHECK(got == expected);
        CHECK(got.size() == 24);
        const RealMatrix lap = laplacian(g);
        for (Index i = 0; i < 8; ++i) CHECK(lap.row(i).sum() == 0.0);
    }
    SECTION("radius must stay below n/2") {
        CHECK_THROWS_WITH(build_ring(6, 3), ContainsSubstring("k < n/2"));
        CHECK_THROWS_AS(build_ring(2, 1), Error);
        CHECK_THROWS_AS(build_ring(6, 0), Error);
    }
}

TEST_CASE("complete graph", "[graph]") {
    CHECK(build_complete(3).edges().size() == 3);
    const RealMatrix l4 = laplacian(build_complete(4));
    for (Index i = 0; i < 4; ++i) CHECK(l4(i, i) == 3.0);
    const SpectralData sd = spectral(laplacian(build_complete(5)));
    for (Index i = 1; i < 5; ++i) CHECK_THAT(sd.values(i), WithinAbs(5.0, 1e-10));
    CHECK_THAT(algebraic_connectivity(sd), WithinAbs(5.0, 1e-10));
}

TEST_CASE("laplacian assembly", "[graph]") {
    RealMatrix tri(3, 3);
    tri << 2, -1, -1, -1, 2, -1, -1, -1, 2;
    CHECK(laplacian(build_ring(3, 1)) == tri);

    RealMatrix path(2, 2);
    path << 2, -2, -2, 2;
    CHECK(laplacian(WeightedGraph(2, {{0, 1, 2.0}})) == path);

    const RealMatrix ring6 = laplacian(build_ring(6, 1));
    RealVector first(6);
    first << 2, -1, 0, 0, 0, -1;
    CHECK(RealVector(ring6.row(0).transpose()) == first);
    for (Index r = 1; r < 6; ++r)
        for (Index c = 0; c < 6; ++c) CHECK(ring6(r, c) == ring6(0, (c - r + 6) % 6));
}

TEST_CASE("laplacian is exactly symmetric with exact zero row sums", "[graph]") {
    for (Index n : {7, 20, 64}) {
        WeightedGraph g = build_ring(n, ring_radius(n, 0.15), 0.1);
        const RealMatrix lap = laplacian(g);
        CHECK(lap == lap.transpose());
        for (Index i = 0; i < n; ++i) {
            double off = 0.0;
            for (Index j = 0; j < n; ++j)
                if (j != i) off += lap(i, j);
            CHECK(lap(i, i) == -off);
            CHECK(std::abs(lap.row(i).sum()) < 1e-15);
        }
    }
}

TEST_CASE("spectral decomposition", "[graph]") {
    SECTION("K3") {
        const SpectralData sd = spectral(laplacian(build_complete(3)));
        CHECK_THAT(sd.values(0), WithinAbs(0.0, 1e-10));
        CHECK_THAT(sd.values(1), WithinAbs(3.0, 1e-10));
        CHECK_THAT(sd.values(2), WithinAbs(3.0, 1e-10));
    }
    SECTION("ring(6,1) has lambda_2 = 1") {
        const SpectralData sd = spectral(laplacian(build_ring(6, 1)));
        CHECK_THAT(algebraic_connectivity(sd), WithinAbs(1.0, 1e-10));
    }
    SECTION("ring(20,3) matches the circulant formula") {
        // 2[(1-cos(pi/10)) + (1-cos(pi/5)) + (1-cos(3pi/10))] = 1.30428247...
        const SpectralData sd = spectral(laplacian(build_ring(20, 3)));
        CHECK_THAT(algebraic_connectivity(sd), WithinAbs(ring_eigenvalue(20, 3, 1), 1e-10));
        CHECK_THAT(algebraic_connectivity(sd), WithinAbs(1.3042824740749, 1e-12));
    }
    SECTION("ring(n,1) lambda_2 = 2 - 2 cos(2 pi / n)") {
        for (Index n : {5, 9, 16, 33})
            CHECK_THAT(algebraic_connectivity(spectral(laplacian(build_ring(n, 1)))),
                       WithinAbs(2.0 - 2.0 * std::cos(2.0 * std::numbers::pi / double(n)), 1e-10));
    }
}

TEST_CASE("ring spectra match the circulant closed form up to n = 64", "[graph][property]") {
    for (Index n = 3; n <= 64; n += 3) {
        for (Index k = 1; 2 * k < n; k += std::max<Index>(1, n / 7)) {
            const RealMatrix lap = laplacian(build_ring(n, k));
            const SpectralData sd = spectral(lap);
            std::vector<double> expected;
            for (Index m = 0; m < n; ++m) expected.push_back(ring_eigenvalue(n, k, m));
            std::sort(expected.begin(), expected.end());
            for (Index m = 0; m < n; ++m) CHECK_THAT(sd.values(m), WithinAbs(expected[std::size_t(m)], 1e-8));
            check_spectral_invariants(lap, sd);
        }
    }
}

TEST_CASE("spectral invariants on larger and weighted graphs", "[graph][property]") {
    check_spectral_invariants(laplacian(build_ring(500, 75)), spectral(laplacian(build_ring(500, 75))));

    // Random weighted connected graph against an independent eigensolver.
    std::vector<Edge> edges;
    for (Index i = 0; i + 1 < 30; ++i) edges.push_back({i, i + 1, 0.5 + 0.1 * double(i % 7)});
    for (Index i = 0; i < 30; i += 4) edges.push_back({i, (i + 7) % 30, 1.7});
    const RealMatrix lap = laplacian(WeightedGraph(30, edges));
    const SpectralData sd = spectral(lap);
    check_spectral_invariants(lap, sd);
    Eigen::SelfAdjointEigenSolver<RealMatrix> oracle(lap);
    for (Index i = 0; i < 30; ++i) CHECK_THAT(sd.values(i), WithinAbs(oracle.eigenvalues()(i), 1e-9));
}

TEST_CASE("eigenvector sign convention", "[graph]") {
    const SpectralData sd = spectral(laplacian(build_ring(11, 2)));
    for (Index c = 1; c < sd.size(); ++c) {
        Index arg = 0;
        sd.vectors.col(c).cwiseAbs().maxCoeff(&arg);
        CHECK(sd.vectors(arg, c) > 0.0);
    }
}

TEST_CASE("spectral rejects invalid input", "[graph]") {
    RealMatrix disconnected = RealMatrix::Zero(4, 4);
    disconnected << 1, -1, 0, 0, -1, 1, 0, 0, 0, 0, 1, -1, 0, 0, -1, 1;
    try {
        spectral(disconnected);
        FAIL("expected NotConnected");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotConnected);
    }
    RealMatrix asym = laplacian(build_ring(4, 1));
    asym(0, 1) += 1e-6;
    asym(0, 0) -= 1e-6;
    CHECK_THROWS_AS(spectral(asym), Error);
    RealMatrix bad_rows = laplacian(build_ring(4, 1));
    bad_rows(0, 0) += 1.0;
    CHECK_THROWS_AS(spectral(bad_rows), Error);
}

TEST_CASE("graph validation", "[graph]") {
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 0, 1.0}}), Error);
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 3, 1.0}}), Error);
    CHECK_THROWS_AS(WeightedGraph(3, {{0, 1, -1.0}}), Error);
    CHECK_FALSE(WeightedGraph(3, {{0, 1, 1.0}}).is_connected());
    CHECK(WeightedGraph(3, {{0, 1, 1.0}, {1, 2, 1.0}}).is_connected());
}

TEST_CASE("lambda_2 / n settles for rings with k = round(0.15 n)", "[graph]") {
    std::vector<double> ratios;
    for (Index n : {40, 80, 160}) {
        const double l2 = algebraic_connectivity(spectral(laplacian(build_ring(n, ring_radius(n, 0.15)))));
        CHECK_THAT(l2, WithinAbs(ring_eigenvalue(n, ring_radius(n, 0.15), 1), 1e-9));
        ratios.push_back(l2 / double(n));
    }
    for (double r : ratios) CHECK(std::abs(r / ratios.back() - 1.0) < 0.2);
}

TEST_CASE("edge list ingestion", "[graph][io]") {
    std::istringstream ok("# triangle\n0 1 1.5\n1 2 1   # inline comment\n\n2 0 2\n");
    const WeightedGraph g = read_edge_list(ok);
    CHECK(g.size() == 3);
    CHECK(g.edges().size() == 3);
    CHECK(laplacian(g)(0, 0) == 3.5);

    std::istringstream bad("0 1 1\n1 x 2\n");
    CHECK_THROWS_WITH(read_edge_list(bad), ContainsSubstring("line 2"));

    std::istringstream split("0 1 1\n2 3 1\n");
    CHECK_THROWS_AS(read_edge_list(split), Error);
}

TEST_CASE("graph rules", "[graph]") {
    GraphRule rule;
    CHECK(rule.radius(100) == 15);
    CHECK_NOTHROW(rule.validate(20));
    rule.k = 10;
    CHECK_THROWS_WITH(rule.validate(20), ContainsSubstring("k < n/2"));
    GraphRule complete{GraphFamily::Complete};
    CHECK(build_graph(complete, 6).edges().size() == 15);
}
