#include "dyncon/concentration.hpp"
#include "dyncon/parallel.hpp"

#include <catch_amalgamated.hpp>

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

using namespace dyncon;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SweepConfig integrator_sweep(std::vector<Index> n_list, std::vector<Complex> grid, Index trials, double eps) {
    SweepConfig cfg;
    cfg.graph.k_fraction = 0.15;
    cfg.nodes = NodeDistributionSpec::integrator(1, 5);
    cfg.n_list = std::move(n_list);
    cfg.s_grid = std::move(grid);
    cfg.trials = trials;
    cfg.epsilon = eps;
    cfg.base_seed = 3;
    return cfg;
}

NetworkModel ring_integrators(Index n, Index k, std::uint64_t seed) {
    return make_network(sample_ensemble(NodeDistributionSpec::integrator(1, 5), n, seed), laplacian(build_ring(n, k)));
}

}  // namespace

TEST_CASE("frequency grids", "[grid]") {
    const auto g = imaginary_axis_grid(-1.0, 1.0, 5, false);
    REQUIRE(g.size() == 5);
    CHECK(g[2] == Complex(0.0, 0.0));
    CHECK(g[4] == Complex(0.0, 1.0));
    CHECK(imaginary_axis_grid(-1.0, 1.0, 5, true).size() == 4);
    CHECK(default_band(NodeKind::Integrator, LapScale::One).size() == 12);
    CHECK(default_band(NodeKind::Swing, LapScale::One).size() == 13);
    CHECK_THROWS_AS(imaginary_axis_grid(0.0, 0.0, 1, true), Error);
    CHECK_THROWS_AS(imaginary_axis_grid(1.0, 0.0, 3, false), Error);
}

TEST_CASE("order statistics and the sign test", "[stats]") {
    CHECK(quantile({4, 1, 3, 2}, 0.0) == 1.0);
    CHECK(quantile({4, 1, 3, 2}, 1.0) == 4.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK(quantile({1, 2, 3, 4, 5}, 0.25) == 2.0);
    CHECK_THROWS_AS(median({}), Error);

    std::vector<double> before(30, 1.0), after(30, 2.0);
    for (int i = 0; i < 20; ++i) after[std::size_t(i)] = 0.5;
    const SignTest st = sign_test_decreasing(before, after);
    CHECK(st.pairs == 30);
    CHECK(st.decreases == 20);
    CHECK_THAT(st.p_value, WithinAbs(0.0493685733526945, 1e-12));

    const std::vector<double> tied{1, 1};
    CHECK(sign_test_decreasing(tied, tied).p_value == 1.0);
}

TEST_CASE("sup deviation over a grid", "[sweep]") {
    SECTION("homogeneous closed form") {
        NodeParams p;
        p.gain = 2.0;
        const NetworkModel net =
            make_network(make_ensemble(NodeKind::Integrator, std::vector<NodeParams>(10, p)), laplacian(build_ring(10, 2)));
        const std::vector<Complex> grid{{0, 0.5}, {0, 1.0}, {0.2, 2.0}};
        double expected = 0.0;
        for (const Complex& s : grid)
            for (Index i = 1; i < 10; ++i) expected = std::max(expected, 1.0 / std::abs(s / 2.0 + net.spectral.values(i)));
        CHECK_THAT(sup_deviation(net, grid).value, WithinAbs(expected, 1e-10));
    }
    SECTION("single point equals deviation") {
        const NetworkModel net = ring_integrators(30, 4, 7);
        const std::vector<Complex> grid{{0, 0.7}};
        CHECK(sup_deviation(net, grid).value == deviation(net, grid[0]).dev_H);
    }
    SECTION("ring(50,8), seed 11, brute-force max of three points") {
        const NetworkModel net = ring_integrators(50, 8, 11);
        const double pi = std::numbers::pi;
        const std::vector<Complex> grid{{0, 0.1 * pi}, {0, 0.2 * pi}, {0, 0.3 * pi}};
        double brute = 0.0;
        for (const Complex& s : grid) brute = std::max(brute, deviation(net, s).dev_H);
        const SupDeviation sup = sup_deviation(net, grid);
        CHECK(sup.value == brute);
        CHECK(sup.evaluated == 3);
        CHECK(sup.skipped == 0);
    }
    SECTION("pole points are skipped") {
        const NetworkModel net = ring_integrators(12, 2, 1);
        const std::vector<Complex> grid{{0, 0}, {0, 0.5}};
        const SupDeviation sup = sup_deviation(net, grid);
        CHECK(sup.skipped == 1);
        CHECK(sup.evaluated == 1);
        const std::vector<Complex> only_pole{{0, 0}};
        CHECK_THROWS_AS(sup_deviation(net, only_pole), Error);
    }
}

TEST_CASE("tail sweep", "[sweep]") {
    const std::vector<Complex> grid{{0, 0.2 * std::numbers::pi}};
    SECTION("epsilon extremes") {
        for (double eps : {0.0, 1e6}) {
            const ConcentrationReport rep = tail_sweep(integrator_sweep({20, 40}, grid, 5, eps));
            for (const SizeSummary& s : rep.sizes) CHECK(s.tail_probability == (eps == 0.0 ? 1.0 : 0.0));
        }
    }
    SECTION("schema and quantile ordering") {
        const ConcentrationReport rep = tail_sweep(integrator_sweep({20, 40}, grid, 6, 0.3));
        REQUIRE(rep.trials.size() == 12);
        CHECK(rep.trials[0].n == 20);
        CHECK(rep.trials[6].n == 40);
        CHECK(rep.trials[7].trial == 1);
        CHECK(rep.trials[7].seed == trial_seed(3, 40, 1));
        CHECK_FALSE(rep.any_flagged());
        for (const SizeSummary& s : rep.sizes) {
            CHECK(s.valid_trials == 6);
            CHECK(s.q25 <= s.median);
            CHECK(s.median <= s.q75);
            CHECK(s.tail_probability >= 0.0);
            CHECK(s.tail_probability <= 1.0);
        }
    }
    SECTION("deterministic and independent of thread count") {
        const SweepConfig cfg = integrator_sweep({20, 30}, grid, 8, 0.3);
        const ConcentrationReport a = tail_sweep(cfg, 1);
        const ConcentrationReport b = tail_sweep(cfg, 4);
        REQUIRE(a.trials.size() == b.trials.size());
        for (std::size_t i = 0; i < a.trials.size(); ++i) {
            CHECK(a.trials[i].seed == b.trials[i].seed);
            CHECK(a.trials[i].sup_dev == b.trials[i].sup_dev);
        }
    }
    SECTION("tail probability is nonincreasing in epsilon") {
        const ConcentrationReport rep = tail_sweep(integrator_sweep({30}, grid, 20, 0.3));
        double previous = 1.0;
        for (double eps = 0.0; eps <= 2.0; eps += 0.05) {
            const double p = rep.tail_probability(30, eps);
            CHECK(p <= previous);
            previous = p;
        }
    }
    SECTION("invalid configurations") {
        CHECK_THROWS_AS(tail_sweep(integrator_sweep({40, 20}, grid, 3, 0.1)), Error);
        CHECK_THROWS_AS(tail_sweep(integrator_sweep({20}, {}, 3, 0.1)), Error);
        CHECK_THROWS_AS(tail_sweep(integrator_sweep({20}, grid, 0, 0.1)), Error);
        CHECK_THROWS_AS(tail_sweep(integrator_sweep({20}, {Complex(0, 0)}, 3, 0.1)), Error);
    }
}

TEST_CASE("median sup deviation decreases with n", "[sweep][slow]") {
    const std::vector<Complex> grid{{0, 0.2 * std::numbers::pi}};
    const ConcentrationReport rep = tail_sweep(integrator_sweep({20, 50, 100, 200}, grid, 50, 0.3));
    for (std::size_t i = 1; i < rep.sizes.size(); ++i) CHECK(rep.sizes[i].median < rep.sizes[i - 1].median);
}

TEST_CASE("first row and column statistics of D", "[dstats]") {
    SECTION("homogeneous network") {
        NodeParams p;
        p.gain = 3.0;
        const NetworkModel net =
            make_network(make_ensemble(NodeKind::Integrator, std::vector<NodeParams>(8, p)), laplacian(build_ring(8, 2)));
        const DStats d = d_first_rowcol_stats(net, Complex(0, 1));
        CHECK(d.d11_abs < 1e-14);
        CHECK(d.row1_norm < 1e-14);
        CHECK(d.col1_norm < 1e-14);
        CHECK(d.full_norm < 1e-14);
    }
    SECTION("n = 2 with inverses mu +- delta") {
        const NodeEnsemble ens = make_explicit_ensemble({RationalTF({1.0}, {2.7}), RationalTF({1.0}, {1.3})});
        const DStats d = d_first_rowcol_stats(make_network(ens, laplacian(build_complete(2))), 1.0);
        CHECK(d.d11_abs < 1e-14);
        CHECK_THAT(d.row1_norm, WithinAbs(0.7, 1e-14));
        CHECK_THAT(d.full_norm, WithinAbs(0.7, 1e-12));
    }
    SECTION("d11 identity and norm bounds") {
        for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
            const auto ens = sample_ensemble(NodeDistributionSpec::integrator(1, 5), 40, seed);
            const NetworkModel net = make_network(ens, laplacian(build_ring(40, 6)));
            const DStats d = d_first_rowcol_stats(net, 1.0);
            CHECK(std::abs(d.d11 - (mean_inverse(ens, 1.0) - coherent_inverse(ens, 1.0).mu)) < 1e-10);
            CHECK(d.row1_norm <= d.full_norm + 1e-12);
            CHECK(d.col1_norm <= d.full_norm + 1e-12);
            CHECK(d.d11_abs <= d.full_norm + 1e-12);
        }
    }
}

TEST_CASE("Hoeffding tail check", "[hoeffding]") {
    SECTION("t = 0 is certain") {
        const std::vector<double> t{0.0};
        const auto rows = hoeffding_tail_check({1, 5}, 50, t, 1000, 1);
        CHECK(rows[0].empirical_tail == 1.0);
        CHECK(rows[0].bound == 2.0);
    }
    SECTION("U(1,5), n = 50") {
        const std::vector<double> t{0.2, 0.4, 0.5, 0.6};
        const auto rows = hoeffding_tail_check({1, 5}, 50, t, 100000, 7);
        CHECK_THAT(rows[2].bound, WithinAbs(2.0 * std::exp(-1.5625), 1e-15));
        CHECK_THAT(rows[2].bound, WithinAbs(0.41922, 1e-5));
        for (const auto& r : rows) CHECK(r.within_bound());
        // Central limit oracle 2 (1 - Phi(t / sigma)), sigma = (4 / sqrt 12) / sqrt 50.
        const boost::math::normal_distribution<double> z;
        const double sigma = 4.0 / std::sqrt(12.0) / std::sqrt(50.0);
        for (const auto& r : rows) {
            const double clt = 2.0 * boost::math::cdf(boost::math::complement(z, r.t / sigma));
            CHECK(std::abs(r.empirical_tail - clt) < 5.0 * std::sqrt(clt * (1 - clt) / 100000.0) + 1e-3 * clt);
        }
        CHECK(log_tail_slope(rows) < 0.0);
    }
    SECTION("complex variant") {
        const std::vector<double> t{0.2, 0.4};
        const auto rows = hoeffding_tail_check_complex({-1, 1}, {-1, 1}, 50, t, 50000, 3);
        for (const auto& r : rows) {
            CHECK_THAT(r.bound, WithinRel(4.0 * std::exp(-50.0 * r.t * r.t / 4.0), 1e-14));
            CHECK(r.empirical_tail <= r.bound);
        }
    }
    SECTION("deterministic") {
        const std::vector<double> t{0.3};
        CHECK(hoeffding_tail_check({0, 1}, 10, t, 500, 5)[0].empirical_tail ==
              hoeffding_tail_check({0, 1}, 10, t, 500, 5)[0].empirical_tail);
    }
}

TEST_CASE("parallel_for covers every index once", "[parallel]") {
    for (unsigned threads : {1u, 2u, 7u}) {
        std::vector<int> hits(101, 0);
        parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += 1; });
        CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    }
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 4) throw Error(ErrorCode::InvalidArgument, "boom");
                    }),
                    Error);
}
