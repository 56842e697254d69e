#include "swipt/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace swipt {

namespace {
constexpr double kSpeedOfLight = 299792458.0;
constexpr double kLn2 = std::numbers::ln2;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
// log of the smallest useful density value; mixture bins below this are
// treated as zero mass
constexpr double kLogFloor = -745.0;
}  // namespace

Constellation Constellation::uniform(std::size_t size, double r_max) {
    if (size == 0) throw std::invalid_argument("constellation size must be >= 1");
    if (r_max < 0.0) throw std::invalid_argument("constellation r_max must be >= 0");
    Constellation c;
    c.r_max = r_max;
    c.amplitudes.resize(size);
    if (size == 1) {
        c.amplitudes[0] = 0.0;
    } else {
        for (std::size_t k = 0; k < size; ++k)
            c.amplitudes[k] = static_cast<double>(k) * r_max / static_cast<double>(size - 1);
    }
    return c;
}

double pathloss_gain(const PathlossSpec& spec) {
    if (spec.reference_distance_m <= 0.0)
        throw std::domain_error("pathloss: reference distance must be positive");
    if (spec.distance_m < spec.reference_distance_m)
        throw std::domain_error("pathloss: distance below reference distance");
    const double ref = kSpeedOfLight / (2.0 * kTwoPi * spec.carrier_hz * spec.reference_distance_m);
    return ref * ref * std::pow(spec.reference_distance_m / spec.distance_m, spec.exponent);
}

double pathloss_gain(const PathlossSpec& spec, const FadingSpec& fading, Rng& rng) {
    double small_scale = 1.0;
    switch (fading.kind) {
        case FadingKind::None:
            break;
        case FadingKind::Rayleigh: {
            const double re = rng.gaussian() / std::sqrt(2.0);
            const double im = rng.gaussian() / std::sqrt(2.0);
            small_scale = re * re + im * im;
            break;
        }
        case FadingKind::Rician: {
            const double k = fading.rician_k;
            if (k < 0.0) throw std::domain_error("pathloss: Rician factor must be >= 0");
            const double los = std::sqrt(k / (k + 1.0));
            const double s = std::sqrt(1.0 / (2.0 * (k + 1.0)));
            const double theta = kTwoPi * rng.uniform();
            const double re = los * std::cos(theta) + s * rng.gaussian();
            const double im = los * std::sin(theta) + s * rng.gaussian();
            small_scale = re * re + im * im;
            break;
        }
    }
    return small_scale * pathloss_gain(spec);
}

void AmplitudePdf::validate(double tol) const {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= -tol)) throw std::invalid_argument("amplitude pdf has negative mass");
        total += v;
    }
    if (std::abs(total - 1.0) > tol)
        throw std::invalid_argument("amplitude pdf does not sum to 1");
}

double AmplitudePdf::average_power(const Constellation& cons) const {
    if (p.size() != cons.size())
        throw std::invalid_argument("amplitude pdf / constellation size mismatch");
    double ap = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k)
        ap += p[k] * cons.amplitudes[k] * cons.amplitudes[k];
    return ap;
}

double log_bessel_i0(double z) {
    if (z < 0.0) z = -z;
    if (z <= 32.0) {
        // power series sum_k (z^2/4)^k / (k!)^2
        const double x = 0.25 * z * z;
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < 96; ++k) {
            term *= x / (static_cast<double>(k) * static_cast<double>(k));
            sum += term;
            if (term < sum * 1e-17) break;
        }
        return std::log(sum);
    }
    // log I0(z) = z - 0.5 log(2 pi z) + log(1 + 1/(8z) + 9/(128 z^2) + ...)
    const double iz = 1.0 / (8.0 * z);
    const double corr = 1.0 + iz * (1.0 + iz * (4.5 + iz * (37.5 + iz * 459.375)));
    return z - 0.5 * std::log(kTwoPi * z) + std::log(corr);
}

MiEvaluator::MiEvaluator(const Constellation& cons, double h_i_mag, double sigma_sq,
                         std::size_t base_grid, double refine_tol_bits) {
    if (sigma_sq <= 0.0) throw std::invalid_argument("MiEvaluator: sigma_sq must be positive");
    if (h_i_mag < 0.0) throw std::invalid_argument("MiEvaluator: negative channel gain");
    if (base_grid < 16) base_grid = 16;
    sigma_sq_ = sigma_sq;
    n_amp_ = cons.size();
    amp_.resize(n_amp_);
    for (std::size_t k = 0; k < n_amp_; ++k) amp_[k] = h_i_mag * cons.amplitudes[k];

    // refine by doubling until MI of the uniform pdf moves less than the
    // tolerance between successive grids; coverage is verified on the grid
    // that is kept
    const std::vector<double> uni(n_amp_, 1.0 / static_cast<double>(n_amp_));
    build(base_grid / 2);
    double prev = mutual_information(uni);
    for (int pass = 0; pass < 7; ++pass) {
        build(base_grid << pass);
        const double cur = mutual_information(uni);
        if (std::abs(cur - prev) < refine_tol_bits) {
            verify_coverage();
            return;
        }
        prev = cur;
    }
    throw numerical_error("MiEvaluator: quadrature did not stabilize below tolerance");
}

void MiEvaluator::build(std::size_t n_grid) {
    const double sigma = std::sqrt(sigma_sq_);
    const double a_max = amp_.empty() ? 0.0 : amp_.back();
    const double r_cap = a_max + 10.0 * sigma;
    n_grid_ = n_grid | 1;  // composite Simpson needs an even interval count
    r_.resize(n_grid_);
    log_r_.resize(n_grid_);
    w_.resize(n_grid_);
    const double h = r_cap / static_cast<double>(n_grid_ - 1);
    for (std::size_t g = 0; g < n_grid_; ++g) {
        r_[g] = h * static_cast<double>(g);
        log_r_[g] = (g == 0) ? kLogFloor : std::log(r_[g]);
        if (g == 0 || g + 1 == n_grid_)
            w_[g] = h / 3.0;
        else
            w_[g] = (g % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
    }

    kernel_.assign(n_amp_ * n_grid_, 0.0);
    const double inv2s = 1.0 / (2.0 * sigma_sq_);
    const double log_s2 = std::log(sigma_sq_);
    for (std::size_t k = 0; k < n_amp_; ++k) {
        const double a = amp_[k];
        double* row = kernel_.data() + k * n_grid_;
        for (std::size_t g = 1; g < n_grid_; ++g) {
            const double r = r_[g];
            const double lc = log_r_[g] - log_s2 - (r * r + a * a) * inv2s +
                              log_bessel_i0(r * a / sigma_sq_);
            row[g] = (lc > kLogFloor) ? std::exp(lc) : 0.0;
        }
    }
}

void MiEvaluator::verify_coverage() const {
    for (std::size_t k = 0; k < n_amp_; ++k) {
        const double* row = kernel_.data() + k * n_grid_;
        double mass = 0.0;
        for (std::size_t g = 0; g < n_grid_; ++g) mass += w_[g] * row[g];
        if (std::abs(mass - 1.0) > 1e-6)
            throw numerical_error("MiEvaluator: quadrature grid does not cover the output density");
    }
}

void MiEvaluator::mix(const std::vector<double>& p, std::vector<double>& q) const {
    if (p.size() != n_amp_) throw std::invalid_argument("MiEvaluator: pdf size mismatch");
    q.assign(n_grid_, 0.0);
    for (std::size_t k = 0; k < n_amp_; ++k) {
        const double pk = p[k];
        if (pk == 0.0) continue;
        const double* row = kernel_.data() + k * n_grid_;
        for (std::size_t g = 0; g < n_grid_; ++g) q[g] += pk * row[g];
    }
}

std::vector<double> MiEvaluator::output_density(const std::vector<double>& p) const {
    std::vector<double> q;
    mix(p, q);
    return q;
}

double MiEvaluator::entropy_integral(const std::vector<double>& q) const {
    if (q.size() != n_grid_) throw std::invalid_argument("entropy_integral: grid size mismatch");
    double acc = 0.0;
    for (std::size_t g = 1; g < n_grid_; ++g) {
        const double qg = q[g];
        if (qg <= 0.0) continue;
        acc += w_[g] * qg * (std::log(qg) - log_r_[g]);
    }
    return acc;
}

double MiEvaluator::noise_floor_bits() const { return std::log2(std::numbers::e * sigma_sq_); }

double MiEvaluator::density_normalization(const std::vector<double>& p) const {
    std::vector<double> q;
    mix(p, q);
    double total = 0.0;
    for (std::size_t g = 0; g < n_grid_; ++g) total += w_[g] * q[g];
    return total;
}

double MiEvaluator::mi_of_density(const std::vector<double>& q) const {
    // I = -(1/ln2) Int q (ln q - ln r) dr - log2(e sigma^2)
    double acc = 0.0;
    for (std::size_t g = 1; g < n_grid_; ++g) {
        const double qg = q[g];
        if (qg <= 0.0) continue;
        acc += w_[g] * qg * (std::log(qg) - log_r_[g]);
    }
    const double bits = -acc / kLn2 - std::log2(std::numbers::e * sigma_sq_);
    return std::max(0.0, bits);
}

double MiEvaluator::mutual_information(const std::vector<double>& p) const {
    std::vector<double> q;
    mix(p, q);
    return mi_of_density(q);
}

std::vector<double> MiEvaluator::mi_gradient(const std::vector<double>& p) const {
    std::vector<double> q;
    mix(p, q);
    // factor_g = (ln q - ln r + 1); where q underflowed use the double floor,
    // a bounded one-sided value
    std::vector<double> factor(n_grid_, 0.0);
    for (std::size_t g = 1; g < n_grid_; ++g) {
        const double lq = (q[g] > 0.0) ? std::log(q[g]) : kLogFloor;
        factor[g] = w_[g] * (lq - log_r_[g] + 1.0);
    }
    std::vector<double> grad(n_amp_, 0.0);
    for (std::size_t k = 0; k < n_amp_; ++k) {
        const double* row = kernel_.data() + k * n_grid_;
        double acc = 0.0;
        for (std::size_t g = 1; g < n_grid_; ++g) acc += row[g] * factor[g];
        grad[k] = -acc / kLn2;
    }
    return grad;
}

MiEvaluator::Segment::Segment(const MiEvaluator& ev, const std::vector<double>& p0,
                              const std::vector<double>& p1)
    : ev_(&ev) {
    ev.mix(p0, q0_);
    ev.mix(p1, q1_);
}

double MiEvaluator::Segment::operator()(double alpha) const {
    const std::size_t n = ev_->n_grid_;
    std::vector<double> q(n);
    for (std::size_t g = 0; g < n; ++g) q[g] = q0_[g] + alpha * (q1_[g] - q0_[g]);
    return ev_->mi_of_density(q);
}

double expected_mutual_information(const std::vector<std::vector<double>>& pi,
                                   const MiEvaluator& ev) {
    double total = 0.0;
    std::vector<double> cond(ev.amplitude_count());
    for (const auto& row : pi) {
        if (row.size() != ev.amplitude_count())
            throw std::invalid_argument("expected_mutual_information: row size mismatch");
        double gamma = 0.0;
        for (double v : row) gamma += v;
        if (gamma < 1e-12) continue;
        for (std::size_t k = 0; k < row.size(); ++k) cond[k] = row[k] / gamma;
        total += gamma * ev.mutual_information(cond);
    }
    return total;
}

}  // namespace swipt
