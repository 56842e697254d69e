#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "swipt/channel.hpp"
#include "swipt/util.hpp"

namespace swipt::testing {

inline double logsumexp(const std::vector<double>& v) {
    double m = -1e308;
    for (double x : v) m = std::max(m, x);
    if (m <= -1e307) return m;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - m);
    return m + std::log(acc);
}

// log CN(y; mean, 2 sigma_sq) with per-dimension variance sigma_sq
inline double log_cn_density(std::complex<double> y, std::complex<double> mean, double sigma_sq) {
    const double d2 = std::norm(y - mean);
    return -std::log(2.0 * std::numbers::pi * sigma_sq) - d2 / (2.0 * sigma_sq);
}

// log of the phase-averaged conditional density p(y | amplitude a) under a
// uniform phase law
inline double log_cond_density_uniform_phase(std::complex<double> y, double a, double h_i,
                                             double sigma_sq) {
    const double ay = std::abs(y) * a * h_i / sigma_sq;
    return -std::log(2.0 * std::numbers::pi * sigma_sq) -
           (std::norm(y) + a * a * h_i * h_i) / (2.0 * sigma_sq) + log_bessel_i0(ay);
}

struct MiEstimate {
    double bits = 0.0;
    double std_error = 0.0;
};

// Monte-Carlo estimate of I(x; y) for amplitude pdf p with uniform phase.
inline MiEstimate mc_mutual_information(const std::vector<double>& amps,
                                        const std::vector<double>& p, double h_i, double sigma_sq,
                                        std::size_t n_samples, std::uint64_t seed) {
    Rng rng(seed);
    const double sigma = std::sqrt(sigma_sq);
    double acc = 0.0, acc2 = 0.0;
    std::vector<double> terms(amps.size());
    for (std::size_t n = 0; n < n_samples; ++n) {
        const std::size_t k = rng.sample_index(p);
        const double phi = 2.0 * std::numbers::pi * rng.uniform() - std::numbers::pi;
        const std::complex<double> x = amps[k] * std::exp(std::complex<double>(0.0, phi));
        const std::complex<double> y =
            h_i * x + std::complex<double>(sigma * rng.gaussian(), sigma * rng.gaussian());
        const double lnum = log_cn_density(y, h_i * x, sigma_sq);
        for (std::size_t j = 0; j < amps.size(); ++j)
            terms[j] = p[j] > 0.0
                           ? std::log(p[j]) + log_cond_density_uniform_phase(y, amps[j], h_i, sigma_sq)
                           : -1e308;
        const double lden = logsumexp(terms);
        const double val = (lnum - lden) / std::numbers::ln2;
        acc += val;
        acc2 += val * val;
    }
    MiEstimate est;
    est.bits = acc / static_cast<double>(n_samples);
    const double var = std::max(0.0, acc2 / static_cast<double>(n_samples) - est.bits * est.bits);
    est.std_error = std::sqrt(var / static_cast<double>(n_samples));
    return est;
}

// Monte-Carlo MI of the complex channel when the phase is drawn uniformly
// from the half circle [-pi/2, pi/2); the phase average in the mixture
// density uses Gauss-Legendre quadrature.
inline MiEstimate mc_mutual_information_half_phase(const std::vector<double>& amps,
                                                   const std::vector<double>& p, double h_i,
                                                   double sigma_sq, std::size_t n_samples,
                                                   std::uint64_t seed) {
    // 32-point Gauss-Legendre nodes/weights on [-1, 1]
    static const int kn = 32;
    std::vector<double> nodes(kn), weights(kn);
    for (int i = 0; i < kn; ++i) {
        // Newton iteration on Legendre polynomials
        double x = std::cos(std::numbers::pi * (i + 0.75) / (kn + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= kn; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            const double dp = kn * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int j = 2; j <= kn; ++j) {
            const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
            p0 = p1;
            p1 = p2;
        }
        const double dp = kn * (x * p1 - p0) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }

    Rng rng(seed);
    const double sigma = std::sqrt(sigma_sq);
    double acc = 0.0, acc2 = 0.0;
    std::vector<double> terms;
    terms.reserve(amps.size() * static_cast<std::size_t>(kn));
    for (std::size_t n = 0; n < n_samples; ++n) {
        const std::size_t k = rng.sample_index(p);
        const double phi = 0.5 * std::numbers::pi * (2.0 * rng.uniform() - 1.0);
        const std::complex<double> x = amps[k] * std::exp(std::complex<double>(0.0, phi));
        const std::complex<double> y =
            h_i * x + std::complex<double>(sigma * rng.gaussian(), sigma * rng.gaussian());
        const double lnum = log_cn_density(y, h_i * x, sigma_sq);
        terms.clear();
        for (std::size_t j = 0; j < amps.size(); ++j) {
            if (p[j] <= 0.0) continue;
            for (int q = 0; q < kn; ++q) {
                const double ph = 0.25 * std::numbers::pi * nodes[q] * 2.0;
                const std::complex<double> mean =
                    h_i * amps[j] * std::exp(std::complex<double>(0.0, ph));
                // weight/2 integrates the uniform density over the half circle
                terms.push_back(std::log(p[j] * weights[q] * 0.5) + log_cn_density(y, mean, sigma_sq));
            }
        }
        const double lden = logsumexp(terms);
        const double val = (lnum - lden) / std::numbers::ln2;
        acc += val;
        acc2 += val * val;
    }
    MiEstimate est;
    est.bits = acc / static_cast<double>(n_samples);
    const double var = std::max(0.0, acc2 / static_cast<double>(n_samples) - est.bits * est.bits);
    est.std_error = std::sqrt(var / static_cast<double>(n_samples));
    return est;
}

// random point on the probability simplex (exponential spacings)
inline std::vector<double> random_pdf(std::size_t n, Rng& rng) {
    std::vector<double> p(n);
    double total = 0.0;
    for (auto& v : p) {
        v = -std::log(std::max(rng.uniform(), 1e-300));
        total += v;
    }
    for (auto& v : p) v /= total;
    return p;
}

// upper 5% critical value of chi-square with k degrees of freedom
// (Wilson-Hilferty)
inline double chi2_critical_5pct(double k) {
    const double z = 1.6448536269514722;
    const double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

}  // namespace swipt::testing
