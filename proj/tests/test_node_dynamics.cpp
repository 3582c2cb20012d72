#include "dyncon/node_dynamics.hpp"
#include "dyncon/quadrature.hpp"
#include "dyncon/rational_tf.hpp"
#include "dyncon/rng.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace dyncon;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double rel_err(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::vector<Complex> random_points(std::size_t count, std::uint64_t seed, double radius = 3.0) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(-radius, radius);
    std::vector<Complex> pts;
    for (std::size_t i = 0; i < count; ++i) pts.emplace_back(u(gen), u(gen));
    return pts;
}

NodeParams swing(double m, double d) {
    NodeParams p;
    p.inertia = m;
    p.damping = d;
    return p;
}

NodeParams turbine(double m, double d, double tau, double r_inv) {
    NodeParams p = swing(m, d);
    p.turbine_time = tau;
    p.droop = r_inv;
    return p;
}

}  // namespace

TEST_CASE("polynomial helpers", "[rational]") {
    CHECK(poly::multiply({1, 1}, {1, -1}) == Polynomial{1, 0, -1});
    CHECK(poly::add({1, 2, 3}, {0, 0, -3}) == Polynomial{1, 2});
    CHECK(poly::degree({0.0}) == -1);
    CHECK(poly::evaluate({1, 2, 3}, Complex(0, 1)) == Complex(-2, 2));
}

TEST_CASE("rational transfer functions", "[rational]") {
    CHECK_THROWS_AS(RationalTF({1.0}, {0.0}), Error);
    const RationalTF improper({0, 0, 1}, {1, 1});
    CHECK_FALSE(improper.is_proper());
    const RationalTF tf({1, 2}, {3, 4, 5});
    CHECK(tf.order() == 2);
    CHECK(tf.is_strictly_proper());
    const Complex s(0.3, -1.2);
    CHECK(rel_err(tf(s), (1.0 + 2.0 * s) / (3.0 + 4.0 * s + 5.0 * s * s)) < 1e-15);
}

TEST_CASE("eval_inv", "[node]") {
    CHECK(rel_err(eval_inv(RationalTF({2.0}, {0, 1}), Complex(0, 1)), Complex(0, 0.5)) < 1e-15);
    CHECK(eval_inv(node_transfer_function(NodeKind::Swing, swing(1, 1)), 0.0) == Complex(1.0));
    const RationalTF t = node_transfer_function(NodeKind::Turbine, turbine(1, 1, 2, 4));
    CHECK(rel_err(eval_inv(t, Complex(0, 1)), Complex(1.8, -0.6)) < 1e-14);

    try {
        eval_inv(RationalTF({0.0, 1.0}, {1.0, 1.0}), 0.0);
        FAIL("expected a pole of the inverse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PoleOfInverse);
    }
}

TEST_CASE("eval_inv times eval is one", "[node][property]") {
    const auto ens = sample_ensemble(NodeDistributionSpec::turbine({1, 10}, {0.1, 5}, {2, 10}, {1, 2, 4}, 0.5), 12, 9);
    for (const RationalTF& tf : ens.nodes)
        for (const Complex& s : random_points(100, 17))
            CHECK(std::abs(eval_inv(tf, s) * tf(s) - 1.0) < 1e-12);
}

TEST_CASE("sampling is deterministic", "[node]") {
    const auto spec = NodeDistributionSpec::integrator(1, 5);
    CHECK(sample_ensemble(spec, 4, 7) == sample_ensemble(spec, 4, 7));
    CHECK_FALSE(sample_ensemble(spec, 4, 7) == sample_ensemble(spec, 4, 8));

    // Prefix stability: node i depends only on (seed, i, slot).
    const auto small = sample_ensemble(spec, 5, 42);
    const auto big = sample_ensemble(spec, 50, 42);
    for (std::size_t i = 0; i < 5; ++i) CHECK(small.params[i] == big.params[i]);
    CHECK_THROWS_AS(sample_ensemble(spec, 1, 1), Error);
}

TEST_CASE("integrator sample mean of 1/k", "[node]") {
    const auto ens = sample_ensemble(NodeDistributionSpec::integrator(1, 5), 10000, 1);
    double mean = 0.0;
    for (const auto& p : ens.params) {
        CHECK(p.gain >= 1.0);
        CHECK(p.gain <= 5.0);
        mean += 1.0 / p.gain;
    }
    mean /= 10000.0;
    // Var(1/k) = E[1/k^2] - E[1/k]^2 = 1/5 - (ln5/4)^2 = 0.0381.
    const double sigma = std::sqrt(0.2 - std::pow(std::log(5.0) / 4.0, 2)) / 100.0;
    CHECK(std::abs(mean - std::log(5.0) / 4.0) < 3.0 * sigma);
}

TEST_CASE("swing sampling", "[node]") {
    const auto ens = sample_ensemble(NodeDistributionSpec::swing({1, 10}, {0.1, 5}), 5, 3);
    REQUIRE(ens.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        const RationalTF& tf = ens.nodes[i];
        CHECK(tf.is_strictly_proper());
        CHECK(tf.order() == 1);
        CHECK(tf.num() == Polynomial{1.0});
        CHECK(tf.den() == Polynomial{ens.params[i].damping, ens.params[i].inertia});
    }
}

TEST_CASE("turbine sampling assigns exactly round(fraction n) turbines", "[node]") {
    for (double fraction : {0.0, 0.3, 0.57, 1.0}) {
        const auto ens = sample_ensemble(NodeDistributionSpec::turbine({1, 10}, {0.1, 5}, {2, 10}, {1, 2, 4}, fraction), 35, 11);
        long count = 0;
        for (const auto& p : ens.params) {
            if (p.has_turbine()) {
                ++count;
                CHECK((p.turbine_time == 1.0 || p.turbine_time == 2.0 || p.turbine_time == 4.0));
            } else {
                CHECK(p.droop == 0.0);
            }
        }
        CHECK(count == std::lround(fraction * 35.0));
    }
}

TEST_CASE("expected inverse closed forms", "[node]") {
    const MuValue integ = expected_inv(NodeDistributionSpec::integrator(1, 5), 1.0);
    CHECK_THAT(integ.mu.real(), WithinAbs(0.402359478108525, 1e-12));
    CHECK_THAT(integ.gbar.real(), WithinAbs(2.485339738238447, 1e-12));
    CHECK(std::abs(integ.mu * integ.gbar - 1.0) < 1e-12);

    const MuValue sw = expected_inv(NodeDistributionSpec::swing({1, 10}, {0.1, 5}), Complex(0, 1));
    CHECK(std::abs(sw.mu - Complex(2.55, 5.5)) < 1e-12);

    try {
        expected_inv(NodeDistributionSpec::integrator(1, 5), 0.0);
        FAIL("expected an undefined coherent dynamics");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::CoherentUndefined);
    }
}

TEST_CASE("turbine lag expectation over a tau range", "[node]") {
    // E[1/(tau s + 1)] for tau ~ U(a, b) is ln((b s + 1)/(a s + 1)) / (s (b - a)).
    NodeDistributionSpec spec = NodeDistributionSpec::turbine({1, 10}, {0.1, 5}, {2, 10}, {}, 0.4);
    spec.turbine_time = {0.5, 3.0};
    for (Complex s : {Complex(0, 0.2), Complex(0, 1.0), Complex(0.5, 2.0), Complex(1.0, 0.0)}) {
        const Complex lag = std::log((3.0 * s + 1.0) / (0.5 * s + 1.0)) / (s * 2.5);
        const Complex expected = s * 5.5 + 2.55 + 0.4 * 6.0 * lag;
        CHECK(std::abs(expected_inv(spec, s).mu - expected) < 1e-9);
    }
}

TEST_CASE("expected inverse agrees with a Monte Carlo oracle", "[node][property]") {
    // Independent draws from the standard library generator, 10^6 per kind.
    constexpr int draws = 1000000;
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> k(1, 5), m(1, 10), d(0.1, 5), r(2, 10), u01(0, 1);
    const std::vector<double> taus{1, 2, 4};
    const auto turbine_spec = NodeDistributionSpec::turbine({1, 10}, {0.1, 5}, {2, 10}, taus, 0.4);
    const std::vector<Complex> freqs{{0, 0.1}, {0, 0.5}, {0, 1.0}, {0.3, 2.0}, {1.0, 0.0}};

    for (const Complex& s : freqs) {
        Complex sum_i = 0, sum_s = 0, sum_t = 0;
        double sq_i = 0, sq_s = 0, sq_t = 0;
        for (int i = 0; i < draws; ++i) {
            const Complex xi = s / k(gen);
            const double mi = m(gen), di = d(gen);
            const Complex xs = mi * s + di;
            Complex xt = xs;
            if (u01(gen) < 0.4) xt += r(gen) / (taus[std::size_t(u01(gen) * 3.0)] * s + 1.0);
            sum_i += xi;
            sum_s += xs;
            sum_t += xt;
            sq_i += std::norm(xi);
            sq_s += std::norm(xs);
            sq_t += std::norm(xt);
        }
        auto check = [&](Complex sum, double sq, Complex closed) {
            const Complex mean = sum / double(draws);
            const double se = std::sqrt((sq / draws - std::norm(mean)) / draws);
            CHECK(std::abs(mean - closed) < 4.0 * se);
        };
        check(sum_i, sq_i, expected_inv(NodeDistributionSpec::integrator(1, 5), s).mu);
        check(sum_s, sq_s, expected_inv(NodeDistributionSpec::swing({1, 10}, {0.1, 5}), s).mu);
        check(sum_t, sq_t, expected_inv(turbine_spec, s).mu);
    }
}

TEST_CASE("empirical gtilde", "[node]") {
    const RationalTF g({1.0, 0.5}, {2.0, 1.0, 3.0});
    const auto homogeneous = make_explicit_ensemble({g, g, g});
    for (const Complex& s : random_points(5, 3)) CHECK(rel_err(empirical_gtilde(homogeneous, s), g(s)) < 1e-12);

    NodeParams k1, k4;
    k1.gain = 1;
    k4.gain = 4;
    CHECK_THAT(empirical_gtilde(make_ensemble(NodeKind::Integrator, {k1, k4}), 1.0).real(), WithinAbs(1.6, 1e-14));

    const auto big = sample_ensemble(NodeDistributionSpec::integrator(1, 5), 10000, 1);
    CHECK(std::abs(empirical_gtilde(big, 1.0) - 2.485340) < 0.1);
}

TEST_CASE("coherent inverse uses the distribution when one is attached", "[node]") {
    const auto spec = NodeDistributionSpec::integrator(1, 5);
    auto ens = sample_ensemble(spec, 30, 4);
    CHECK(coherent_inverse(ens, Complex(0, 1)).mu == expected_inv(spec, Complex(0, 1)).mu);
    ens.spec.reset();
    CHECK(std::abs(coherent_inverse(ens, Complex(0, 1)).mu - mean_inverse(ens, Complex(0, 1))) < 1e-15);
}

TEST_CASE("reduced representative", "[node][reduce]") {
    const auto ens = make_ensemble(NodeKind::Turbine, {turbine(1, 1, 2, 4), turbine(3, 1, 2, 4)});
    const RationalTF ghat = reduced_representative(ens);
    for (const Complex& s : random_points(10, 5))
        CHECK(rel_err(ghat(s), (2.0 * s + 1.0) / ((2.0 * s + 1.0) * (2.0 * s + 1.0) + 4.0)) < 1e-12);

    const auto same = make_ensemble(NodeKind::Turbine, {turbine(2, 0.5, 3, 6), turbine(2, 0.5, 3, 6)});
    for (const Complex& s : random_points(10, 6)) CHECK(rel_err(reduced_representative(same)(s), same.nodes[0](s)) < 1e-12);

    const auto sw = make_ensemble(NodeKind::Swing, {swing(1, 0.1), swing(10, 5)});
    for (const Complex& s : random_points(10, 7))
        CHECK(rel_err(reduced_representative(sw)(s), 1.0 / (5.5 * s + 2.55)) < 1e-12);

    // Droop without any turbine time constant is ill-formed.
    CHECK_THROWS_AS(reduced_representative(make_ensemble(NodeKind::Turbine, {turbine(1, 1, 0, 2), swing(1, 1)})), Error);
    CHECK_THROWS_AS(reduced_representative(sample_ensemble(NodeDistributionSpec::integrator(1, 5), 3, 1)), Error);
}

TEST_CASE("reduced empirical transfer function", "[node][reduce]") {
    SECTION("no turbines") {
        const auto ens = make_ensemble(NodeKind::Turbine, {swing(1, 2), swing(3, 4)});
        const RationalTF g = reduced_empirical_tf(ens);
        CHECK(g.order() == 1);
        for (const Complex& s : random_points(10, 8)) CHECK(rel_err(g(s), 1.0 / (2.0 * s + 3.0)) < 1e-12);
    }
    SECTION("one distinct tau") {
        const auto ens = make_ensemble(NodeKind::Turbine, {turbine(1, 1, 2, 4), turbine(1, 1, 2, 4)});
        const RationalTF g = reduced_empirical_tf(ens);
        CHECK(g.order() == 2);
        for (const Complex& s : random_points(10, 9))
            CHECK(rel_err(g(s), (2.0 * s + 1.0) / ((s + 1.0) * (2.0 * s + 1.0) + 4.0)) < 1e-12);
    }
    SECTION("two distinct tau, zero damping") {
        const auto ens = make_ensemble(NodeKind::Turbine, {turbine(1, 0, 1, 2), turbine(1, 0, 2, 2)});
        const RationalTF g = reduced_empirical_tf(ens);
        CHECK(g.order() == 3);
        for (const Complex& s : random_points(10, 10)) {
            const Complex inv = s + 1.0 / (s + 1.0) + 1.0 / (2.0 * s + 1.0);
            CHECK(std::abs(g(s) * inv - 1.0) < 1e-12);
        }
    }
}

TEST_CASE("reduced empirical tf equals its sum form", "[node][reduce][property]") {
    const auto ens = sample_ensemble(NodeDistributionSpec::turbine({1, 10}, {0.1, 5}, {2, 10}, {1, 2, 4}, 0.6), 40, 21);
    const RationalTF g = reduced_empirical_tf(ens);
    double m = 0, d = 0;
    for (const auto& p : ens.params) {
        m += p.inertia / 40.0;
        d += p.damping / 40.0;
    }
    CHECK(g.order() == 4);
    for (const Complex& s : random_points(100, 12)) {
        Complex inv = m * s + d;
        for (const auto& p : ens.params)
            if (p.has_turbine()) inv += p.droop / 40.0 / (p.turbine_time * s + 1.0);
        CHECK(rel_err(1.0 / g(s), inv) < 1e-10);
    }
}

TEST_CASE("adaptive Simpson", "[quadrature]") {
    CHECK_THAT(adaptive_simpson([](double x) { return std::exp(x); }, 0.0, 1.0), WithinAbs(std::numbers::e - 1.0, 1e-10));
    CHECK_THAT(adaptive_simpson([](double x) { return std::sin(x); }, 0.0, std::numbers::pi), WithinAbs(2.0, 1e-10));
    const Complex s(0, 0.7);
    const Complex z = adaptive_simpson([s](double t) { return 1.0 / (t * s + 1.0); }, 1.0, 4.0);
    CHECK(std::abs(z - std::log((4.0 * s + 1.0) / (s + 1.0)) / s) < 1e-10);
}

TEST_CASE("counter-based generator", "[rng]") {
    const CounterRng rng(99);
    CHECK(rng.bits(3, 1) == CounterRng(99).bits(3, 1));
    CHECK(rng.bits(3, 1) != rng.bits(3, 2));
    CHECK(rng.bits(3, 1) != rng.bits(4, 1));
    double mean = 0.0;
    for (std::uint64_t i = 0; i < 100000; ++i) {
        const double u = rng.unit(i, 0);
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        mean += u;
    }
    CHECK_THAT(mean / 100000.0, WithinAbs(0.5, 0.005));
    CHECK(mix_seed({1, 2, 3}) == mix_seed({1, 2, 3}));
    CHECK(mix_seed({1, 2, 3}) != mix_seed({1, 3, 2}));
}
