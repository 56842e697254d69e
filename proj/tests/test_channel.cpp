#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "swipt/channel.hpp"

using namespace swipt;
using namespace swipt::testing;

TEST_CASE("pathloss at the reference distance equals the Friis factor") {
    PathlossSpec spec{2.0, 1.0, 1.0, 2.45e9};
    // (c / (4 pi f_c d0))^2 at 2.45 GHz; hand value 9.4818e-5 (-40.23 dB)
    const double g = pathloss_gain(spec);
    CHECK(g == doctest::Approx(9.4818e-5).epsilon(1e-3));
    CHECK(10.0 * std::log10(g) == doctest::Approx(-40.23).epsilon(1e-3));
}

TEST_CASE("pathloss exponent scaling: 10 m at alpha=2 costs 20 dB") {
    PathlossSpec ref{2.0, 1.0, 1.0, 2.45e9};
    PathlossSpec far{2.0, 10.0, 1.0, 2.45e9};
    const double db_ref = 10.0 * std::log10(pathloss_gain(ref));
    const double db_far = 10.0 * std::log10(pathloss_gain(far));
    CHECK(db_far == doctest::Approx(db_ref - 20.0).epsilon(1e-6));
    CHECK(db_far == doctest::Approx(-60.23).epsilon(1e-3));
}

TEST_CASE("pathloss rejects distances below the reference") {
    PathlossSpec spec{2.0, 0.5, 1.0, 2.45e9};
    CHECK_THROWS_AS(pathloss_gain(spec), std::domain_error);
}

TEST_CASE("fading draws have unit mean square") {
    Rng rng(7);
    PathlossSpec spec{2.0, 1.0, 1.0, 2.45e9};
    const double base = pathloss_gain(spec);
    for (FadingKind kind : {FadingKind::Rayleigh, FadingKind::Rician}) {
        FadingSpec f;
        f.kind = kind;
        f.rician_k = 1.0;
        double acc = 0.0;
        const int n = 20000;
        for (int i = 0; i < n; ++i) acc += pathloss_gain(spec, f, rng);
        CHECK(acc / n / base == doctest::Approx(1.0).epsilon(0.03));
    }
}

TEST_CASE("log I0 matches the standard library across the series/asymptotic split") {
    for (double z : {0.0, 0.5, 3.0, 10.0, 24.9, 25.1, 50.0, 200.0, 600.0}) {
        const double ref = std::log(std::cyl_bessel_i(0.0, z));
        CHECK(log_bessel_i0(z) == doctest::Approx(ref).epsilon(1e-9));
    }
    // far beyond double overflow of I0 itself
    CHECK(log_bessel_i0(5.0e4) == doctest::Approx(5.0e4 - 0.5 * std::log(2.0 * std::numbers::pi * 5.0e4)).epsilon(1e-6));
}

namespace {

struct SmallChannel {
    Constellation cons = Constellation::uniform(8, 2.0);
    double h_i = 0.8;
    double sigma_sq = 0.05;
    MiEvaluator ev{cons, h_i, sigma_sq, 2048};
};

}  // namespace

TEST_CASE("degenerate-at-zero input gives the Rayleigh output density and zero MI") {
    SmallChannel c;
    std::vector<double> p(c.cons.size(), 0.0);
    p[0] = 1.0;
    const auto q = c.ev.output_density(p);
    const auto& r = c.ev.grid();
    for (std::size_t g = 1; g < r.size(); g += 97) {
        const double expected =
            r[g] / c.sigma_sq * std::exp(-r[g] * r[g] / (2.0 * c.sigma_sq));
        CHECK(q[g] == doctest::Approx(expected).epsilon(1e-9));
    }
    CHECK(c.ev.mutual_information(p) == doctest::Approx(0.0).epsilon(1e-3));
    CHECK(c.ev.mutual_information(p) >= 0.0);
}

TEST_CASE("output density integrates to one for random pdfs") {
    SmallChannel c;
    Rng rng(3);
    for (int t = 0; t < 8; ++t) {
        const auto p = random_pdf(c.cons.size(), rng);
        CHECK(c.ev.density_normalization(p) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("simulated amplitude histogram matches the density (chi-square, 5% level)") {
    SmallChannel c;
    Rng rng(11);
    const auto p = random_pdf(c.cons.size(), rng);
    const std::size_t n_samples = 1000000;
    const auto& r = c.ev.grid();
    const double h = r[1] - r[0];
    // bins aligned to whole grid intervals so the per-bin expected mass
    // integrates cleanly (trapezoid inside each bin)
    const std::size_t stride = 10;
    const std::size_t n_bins = (r.size() - 1) / stride;
    const double bin_width = h * stride;
    const double hist_cap = bin_width * n_bins;

    const double sigma = std::sqrt(c.sigma_sq);
    std::vector<double> counts(n_bins, 0.0);
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t k = rng.sample_index(p);
        const double phi = 2.0 * std::numbers::pi * rng.uniform();
        const std::complex<double> x =
            c.cons.amplitudes[k] * std::exp(std::complex<double>(0.0, phi));
        const std::complex<double> y =
            c.h_i * x + std::complex<double>(sigma * rng.gaussian(), sigma * rng.gaussian());
        const double ry = std::abs(y);
        if (ry >= hist_cap) continue;
        counts[static_cast<std::size_t>(ry / bin_width)] += 1.0;
    }
    const auto q = c.ev.output_density(p);
    std::vector<double> expected(n_bins, 0.0);
    for (std::size_t b = 0; b < n_bins; ++b) {
        double mass = 0.0;
        for (std::size_t g = b * stride; g < (b + 1) * stride; ++g)
            mass += 0.5 * h * (q[g] + q[g + 1]);
        expected[b] = mass * n_samples;
    }
    double chi2 = 0.0;
    double dof = 0.0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (expected[b] < 20.0) continue;  // merge-tail guard
        chi2 += (counts[b] - expected[b]) * (counts[b] - expected[b]) / expected[b];
        dof += 1.0;
    }
    CHECK(chi2 < chi2_critical_5pct(dof));
}

TEST_CASE("MI agrees with a Monte-Carlo estimator on random pdfs") {
    SmallChannel c;
    Rng rng(17);
    for (int t = 0; t < 3; ++t) {
        const auto p = random_pdf(c.cons.size(), rng);
        const double mi = c.ev.mutual_information(p);
        const auto est = mc_mutual_information(c.cons.amplitudes, p, c.h_i, c.sigma_sq, 150000,
                                               1000 + t);
        CHECK(std::abs(mi - est.bits) < 0.05);
    }
}

TEST_CASE("shrinking the noise increases MI for a fixed two-mass pdf") {
    Constellation cons = Constellation::uniform(8, 2.0);
    std::vector<double> p(8, 0.0);
    p[0] = 0.5;
    p[7] = 0.5;
    MiEvaluator loud(cons, 1.0, 0.05, 2048);
    MiEvaluator quiet(cons, 1.0, 0.0005, 2048);
    CHECK(quiet.mutual_information(p) > loud.mutual_information(p) + 0.5);
}

TEST_CASE("analytic MI gradient matches central finite differences") {
    SmallChannel c;
    Rng rng(23);
    const double fd_step = 1e-5;
    for (int t = 0; t < 6; ++t) {
        auto p = random_pdf(c.cons.size(), rng);
        const auto grad = c.ev.mi_gradient(p);
        for (std::size_t k = 0; k < p.size(); k += 3) {
            auto hi = p, lo = p;
            hi[k] += fd_step;
            lo[k] -= fd_step;
            const double fd =
                (c.ev.mutual_information(hi) - c.ev.mutual_information(lo)) / (2.0 * fd_step);
            CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("MI is concave along random directions") {
    SmallChannel c;
    Rng rng(29);
    for (int t = 0; t < 10; ++t) {
        const auto p1 = random_pdf(c.cons.size(), rng);
        const auto p2 = random_pdf(c.cons.size(), rng);
        std::vector<double> mid(p1.size());
        for (std::size_t k = 0; k < p1.size(); ++k) mid[k] = 0.5 * (p1[k] + p2[k]);
        const double lhs = c.ev.mutual_information(mid);
        const double rhs = 0.5 * c.ev.mutual_information(p1) + 0.5 * c.ev.mutual_information(p2);
        CHECK(lhs >= rhs - 1e-9);

        // first-order over-estimation (gradient inequality)
        const auto g = c.ev.mi_gradient(p1);
        double lin = c.ev.mutual_information(p1);
        for (std::size_t k = 0; k < p1.size(); ++k) lin += g[k] * (p2[k] - p1[k]);
        CHECK(c.ev.mutual_information(p2) <= lin + 1e-9);
    }
}

TEST_CASE("MI is invariant under joint gain/noise rescaling") {
    Constellation cons = Constellation::uniform(8, 2.0);
    Rng rng(31);
    const auto p = random_pdf(8, rng);
    MiEvaluator base(cons, 0.8, 0.05, 2048);
    const double scale = 12.0;
    MiEvaluator scaled(cons, 0.8 * scale, 0.05 * scale * scale, 2048);
    CHECK(base.mutual_information(p) == doctest::Approx(scaled.mutual_information(p)).epsilon(1e-6));
}

TEST_CASE("expected MI reduces to plain MI for state-independent pdfs") {
    SmallChannel c;
    Rng rng(37);
    const auto p = random_pdf(c.cons.size(), rng);
    std::vector<std::vector<double>> pi(4);
    const double gammas[4] = {0.1, 0.4, 0.3, 0.2};
    for (int i = 0; i < 4; ++i) {
        pi[i].resize(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) pi[i][k] = gammas[i] * p[k];
    }
    CHECK(expected_mutual_information(pi, c.ev) ==
          doctest::Approx(c.ev.mutual_information(p)).epsilon(1e-9));
}

TEST_CASE("expected MI of two equal-mass states averages the per-state values") {
    SmallChannel c;
    Rng rng(41);
    const auto pa = random_pdf(c.cons.size(), rng);
    const auto pb = random_pdf(c.cons.size(), rng);
    std::vector<std::vector<double>> pi(2);
    pi[0].resize(pa.size());
    pi[1].resize(pb.size());
    for (std::size_t k = 0; k < pa.size(); ++k) {
        pi[0][k] = 0.5 * pa[k];
        pi[1][k] = 0.5 * pb[k];
    }
    const double expect =
        0.5 * c.ev.mutual_information(pa) + 0.5 * c.ev.mutual_information(pb);
    CHECK(expected_mutual_information(pi, c.ev) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("uniform phase dominates a half-circle phase law (Monte-Carlo)") {
    SmallChannel c;
    Rng rng(43);
    for (int t = 0; t < 2; ++t) {
        const auto p = random_pdf(c.cons.size(), rng);
        const double mi_uniform = c.ev.mutual_information(p);
        const auto est = mc_mutual_information_half_phase(c.cons.amplitudes, p, c.h_i,
                                                          c.sigma_sq, 30000, 500 + t);
        CHECK(mi_uniform >= est.bits - 3.0 * est.std_error);
    }
}

TEST_CASE("single-amplitude constellation: zero directional derivative on the simplex") {
    Constellation cons = Constellation::uniform(1, 0.0);
    MiEvaluator ev(cons, 1.0, 0.05, 512);
    const std::vector<double> p = {1.0};
    CHECK(ev.mutual_information(p) == doctest::Approx(0.0).epsilon(1e-6));
    const auto g = ev.mi_gradient(p);
    REQUIRE(g.size() == 1);
    // the only simplex direction is the zero vector
}
