#pragma once

#include <cstddef>
#include <vector>

#include "swipt/util.hpp"

namespace swipt {

/// Equally spaced amplitude constellation: r_k = k * r_max / (S-1), r_0 = 0.
struct Constellation {
    std::vector<double> amplitudes;  // sqrt-watts, nondecreasing, first entry 0
    double r_max = 0.0;

    static Constellation uniform(std::size_t size, double r_max);
    std::size_t size() const { return amplitudes.size(); }
};

enum class FadingKind { None, Rayleigh, Rician };

struct FadingSpec {
    FadingKind kind = FadingKind::None;
    double rician_k = 1.0;  // ratio of LOS to scattered power; |h~|^2 has unit mean
};

struct PathlossSpec {
    double exponent = 2.0;
    double distance_m = 1.0;
    double reference_distance_m = 1.0;
    double carrier_hz = 2.45e9;
};

/// Deterministic pathloss power gain |h|^2 = (c/(4 pi f_c d0))^2 (d0/d)^alpha.
/// Throws std::domain_error if distance < reference distance.
double pathloss_gain(const PathlossSpec& spec);

/// Pathloss with a small-scale fading draw |h~|^2 of unit mean square:
/// Rayleigh -> exponential(1); Rician(K) -> |sqrt(K/(K+1)) e^{j theta} + CN(0, 1/(K+1))|^2.
double pathloss_gain(const PathlossSpec& spec, const FadingSpec& fading, Rng& rng);

/// Magnitude gains and per-dimension noise variance of the two links.
/// sigma_sq is the variance of each real noise dimension; the complex noise
/// power is 2*sigma_sq.
struct ChannelSpec {
    double h_i_mag = 1.0;    // IR link amplitude gain |h_I|
    double h_e_mag = 1.0;    // EH link amplitude gain |h_E|
    double sigma_sq = 1.0;   // per-dimension AWGN variance at the IR, watts
};

/// Probability distribution over constellation amplitudes.
struct AmplitudePdf {
    std::vector<double> p;

    void validate(double tol = 1e-9) const;
    double average_power(const Constellation& cons) const;  // sum p_k r_k^2
};

/// log I0(z) for z >= 0, stable for large z (series below z=25, asymptotic
/// expansion above).
double log_bessel_i0(double z);

/**
 * Quadrature grid and Rice kernel table for the amplitude channel
 * r_y | r_x=r_k.  The kernel of amplitude k is
 *
 *   c_k(r) = (r/s2) exp(-(r^2 + a_k^2)/(2 s2)) I0(r a_k / s2),  a_k = |h_I| r_k,
 *
 * assembled in the log domain (the exponents overflow otherwise) and stored
 * linearly.  Mutual information of the complex channel under uniform phase:
 *
 *   I(p) = -Int q log2(q/r) dr - log2(e s2),  q = sum_k p_k c_k.
 *
 * Construction refines the grid (doubling) until I of the uniform pdf moves
 * by less than `refine_tol_bits`.  All evaluation methods are const and
 * thread-safe.
 */
class MiEvaluator {
public:
    MiEvaluator(const Constellation& cons, double h_i_mag, double sigma_sq,
                std::size_t base_grid = 4096, double refine_tol_bits = 1e-4);

    std::size_t amplitude_count() const { return n_amp_; }
    std::size_t grid_size() const { return n_grid_; }
    const std::vector<double>& grid() const { return r_; }
    double sigma_sq() const { return sigma_sq_; }

    /// Mixture output density evaluated on the internal grid. Accepts
    /// unnormalized weights (the density then integrates to their sum).
    std::vector<double> output_density(const std::vector<double>& p) const;

    /// Raw quadrature of q (ln q - ln r) dr in nats; building block for the
    /// perspective form of the expected mutual information.
    double entropy_integral(const std::vector<double>& q) const;

    /// log2(e sigma^2), the additive noise term of the MI expression.
    double noise_floor_bits() const;

    /// Integral of the output density (should be 1 for a valid pdf).
    double density_normalization(const std::vector<double>& p) const;

    /// Mutual information in bits/symbol, clamped below at 0.
    double mutual_information(const std::vector<double>& p) const;

    /// Analytic gradient dI/dp_k in bits per unit probability.
    std::vector<double> mi_gradient(const std::vector<double>& p) const;

    /// MI along the segment p0 + alpha (p1 - p0) with the two mixture
    /// densities precomputed; used by line searches.
    class Segment {
    public:
        Segment(const MiEvaluator& ev, const std::vector<double>& p0,
                const std::vector<double>& p1);
        double operator()(double alpha) const;

    private:
        const MiEvaluator* ev_;
        std::vector<double> q0_, q1_;
    };

private:
    void build(std::size_t n_grid);
    void verify_coverage() const;
    double mi_of_density(const std::vector<double>& q) const;
    void mix(const std::vector<double>& p, std::vector<double>& q) const;

    std::size_t n_amp_ = 0, n_grid_ = 0;
    double sigma_sq_ = 0.0;
    std::vector<double> amp_;     // a_k = |h_I| r_k
    std::vector<double> r_;       // grid points
    std::vector<double> log_r_;
    std::vector<double> w_;       // trapezoid weights
    std::vector<double> kernel_;  // n_amp x n_grid, row-major

    friend class Segment;
};

/// Expected mutual information over EH states: sum_i gamma_i I(pi_i / gamma_i),
/// where gamma_i is the row sum of pi. Rows with gamma_i < 1e-12 contribute 0.
double expected_mutual_information(const std::vector<std::vector<double>>& pi,
                                   const MiEvaluator& ev);

}  // namespace swipt
