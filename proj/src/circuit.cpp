#include "swipt/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace swipt {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double guarded_exp(double x) { return std::exp(std::min(x, 600.0)); }

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
}  // namespace

void DiodeParams::validate() const {
    if (saturation_current <= 0.0 || thermal_voltage <= 0.0 || series_resistance <= 0.0)
        throw std::invalid_argument("diode parameters must be strictly positive");
    if (ideality < 1.0 || ideality > 2.0)
        throw std::invalid_argument("diode ideality must lie in [1, 2]");
    if (breakdown_voltage <= 0.0)
        throw std::invalid_argument("diode breakdown voltage must be positive");
}

void MatchingNetworkSpec::validate() const {
    if (inductance_l1 <= 0.0 || capacitance_c1 <= 0.0)
        throw std::invalid_argument("matching network L1 and C1 must be positive");
    if (capacitance_c2 && *capacitance_c2 <= 0.0)
        throw std::invalid_argument("matching network C2 must be positive when present");
}

void CircuitSpec::validate() const {
    diode.validate();
    matching.validate();
    if (antenna_resistance <= 0.0 || load_capacitance <= 0.0 || load_resistance <= 0.0 ||
        carrier_frequency <= 0.0 || symbol_duration <= 0.0)
        throw std::invalid_argument("circuit spec fields must be strictly positive");
}

std::string CircuitSpec::cache_key() const {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%d|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g|%d|%.17g|%.17g|%.17g|%.17g|%.17g|%.17g",
                  static_cast<int>(topology), diode.saturation_current, diode.ideality,
                  diode.thermal_voltage, diode.series_resistance, diode.breakdown_voltage,
                  matching.inductance_l1, matching.capacitance_c1, matching.capacitance_c2 ? 1 : 0,
                  matching.capacitance_c2.value_or(0.0), antenna_resistance, load_capacitance,
                  load_resistance, carrier_frequency, symbol_duration);
    return std::string(buf);
}

CircuitSpec half_wave_reference(double design_dbm) {
    CircuitSpec s;
    s.topology = RectifierTopology::HalfWave;
    s.matching.design_power = dbm_to_watts(design_dbm);
    if (design_dbm <= -6.0) {
        s.matching.inductance_l1 = 26.7e-9;
        s.matching.capacitance_c1 = 0.73e-12;
    } else {
        s.matching.inductance_l1 = 9.62e-9;
        s.matching.capacitance_c1 = 1.41e-12;
        s.matching.capacitance_c2 = 0.375e-12;
    }
    return s;
}

CircuitSpec full_wave_reference(double design_dbm) {
    CircuitSpec s;
    s.topology = RectifierTopology::FullWaveBridge;
    s.matching.design_power = dbm_to_watts(design_dbm);
    if (design_dbm <= -6.0) {
        s.matching.inductance_l1 = 23.2e-9;
        s.matching.capacitance_c1 = 0.3e-12;
    } else {
        s.matching.inductance_l1 = 11.1e-9;
        s.matching.capacitance_c1 = 2.72e-12;
        s.matching.capacitance_c2 = 0.3e-12;
    }
    return s;
}

CircuitSpec scaled_carrier(const CircuitSpec& spec, double factor) {
    if (factor <= 0.0) throw std::invalid_argument("carrier scale factor must be positive");
    CircuitSpec s = spec;
    s.carrier_frequency = spec.carrier_frequency / factor;
    s.matching.inductance_l1 = spec.matching.inductance_l1 * factor;
    s.matching.capacitance_c1 = spec.matching.capacitance_c1 * factor;
    if (spec.matching.capacitance_c2)
        s.matching.capacitance_c2 = *spec.matching.capacitance_c2 * factor;
    return s;
}

double source_peak_voltage(double r_e, double antenna_resistance) {
    if (r_e < 0.0) throw std::domain_error("received amplitude must be nonnegative");
    if (antenna_resistance <= 0.0) throw std::invalid_argument("antenna resistance must be positive");
    return r_e * std::sqrt(8.0 * antenna_resistance);
}

// ---------------------------------------------------------------------------
// Diode terminal law
// ---------------------------------------------------------------------------

double DiodeLaw::junction_voltage(double u) const {
    const double is = p_.saturation_current;
    const double nvt = p_.ideality * p_.thermal_voltage;
    const double vt = p_.thermal_voltage;
    const double rs = p_.series_resistance;
    const double bv = p_.breakdown_voltage;

    if (u >= 0.0) {
        // (u - vj)/Rs = Is (exp(vj/nVt) - 1), vj in [0, u]
        double lo = 0.0, hi = u, vj = std::min(u, nvt * std::log1p(u / (rs * is) + 1.0));
        for (int it = 0; it < 200; ++it) {
            const double ex = guarded_exp(vj / nvt);
            const double f = (u - vj) / rs - is * (ex - 1.0);
            if (f > 0.0) lo = vj; else hi = vj;
            const double fp = -1.0 / rs - is * ex / nvt;
            double step = -f / fp;
            double next = vj + step;
            if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
            if (std::abs(next - vj) < 1e-15 + 1e-14 * std::abs(vj)) return next;
            vj = next;
        }
        return vj;
    }
    if (u >= -bv) return u;  // blocked region carries no current
    // breakdown: (u - vj)/Rs = -Is (exp(-(vj+Bv)/Vt) - 1), vj in [u, -bv]
    double lo = u, hi = -bv, vj = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double ex = guarded_exp(-(vj + bv) / vt);
        const double f = (u - vj) / rs + is * (ex - 1.0);
        if (f > 0.0) lo = vj; else hi = vj;
        const double fp = -1.0 / rs - is * ex / vt;
        double step = -f / fp;
        double next = vj + step;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - vj) < 1e-15 + 1e-14 * std::abs(vj)) return next;
        vj = next;
    }
    return vj;
}

double DiodeLaw::current(double u) const {
    if (u >= -p_.breakdown_voltage && u <= 0.0) return 0.0;
    const double vj = junction_voltage(u);
    return (u - vj) / p_.series_resistance;
}

double DiodeLaw::conductance(double u) const {
    const double nvt = p_.ideality * p_.thermal_voltage;
    if (u > 0.0) {
        const double vj = junction_voltage(u);
        const double gj = p_.saturation_current * guarded_exp(vj / nvt) / nvt;
        return std::max(kGmin, gj / (1.0 + gj * p_.series_resistance));
    }
    if (u >= -p_.breakdown_voltage) return kGmin;
    const double vj = junction_voltage(u);
    const double gj =
        p_.saturation_current * guarded_exp(-(vj + p_.breakdown_voltage) / p_.thermal_voltage) /
        p_.thermal_voltage;
    return std::max(kGmin, gj / (1.0 + gj * p_.series_resistance));
}

// ---------------------------------------------------------------------------
// Small dense MNA transient engine
// ---------------------------------------------------------------------------

namespace {

constexpr int kGround = -1;

struct CapState {
    int a, b;
    double c;
    double v_prev = 0.0, i_prev = 0.0;
};

struct IndState {
    int a, b;
    double l;
    double i_prev = 0.0;
    int unknown = -1;
};

struct ResEl {
    int a, b;
    double g;
};

struct DiodeEl {
    int a, b;
    const DiodeLaw* law;
};

// Rectenna circuit in MNA form. Unknowns: node voltages, inductor currents,
// optionally one clamp-source current when the load is replaced by a fixed
// voltage (envelope-map mode).
class RectennaMna {
public:
    RectennaMna(const CircuitSpec& spec, const DiodeLaw& law, bool clamp_output)
        : spec_(spec), clamped_(clamp_output) {
        const bool has_c2 = spec.matching.capacitance_c2.has_value();
        const bool full = spec.topology == RectifierTopology::FullWaveBridge;
        // nodes: 0 = MC input, 1 = rectifier input; half-wave: 2 = load;
        // full-wave: 2 = load+, 3 = load-. C1 shunts the antenna node, L1
        // feeds the rectifier in series; C2 (when present) shunts the
        // rectifier input.
        n_nodes_ = full ? 4 : 3;
        src_node_ = 0;
        src_g_ = 1.0 / spec.antenna_resistance;
        res_.push_back({0, kGround, src_g_});
        caps_.push_back({0, kGround, spec.matching.capacitance_c1});
        inds_.push_back({0, 1, spec.matching.inductance_l1});
        if (has_c2) caps_.push_back({1, kGround, *spec.matching.capacitance_c2});
        if (full) {
            out_pos_ = 2;
            out_neg_ = 3;
            diodes_.push_back({1, 2, &law});
            diodes_.push_back({kGround, 2, &law});
            diodes_.push_back({3, 1, &law});
            diodes_.push_back({3, kGround, &law});
        } else {
            out_pos_ = 2;
            out_neg_ = kGround;
            diodes_.push_back({1, 2, &law});
        }
        if (!clamp_output) {
            caps_.push_back({out_pos_, out_neg_, spec.load_capacitance});
            res_.push_back({out_pos_, out_neg_, 1.0 / spec.load_resistance});
        }
        n_unknowns_ = n_nodes_ + static_cast<int>(inds_.size()) + (clamp_output ? 1 : 0);
        for (std::size_t i = 0; i < inds_.size(); ++i)
            inds_[i].unknown = n_nodes_ + static_cast<int>(i);
        clamp_unknown_ = clamp_output ? n_unknowns_ - 1 : -1;
        x_.assign(n_unknowns_, 0.0);
    }

    void reset(double v_load) {
        std::fill(x_.begin(), x_.end(), 0.0);
        for (auto& c : caps_) { c.v_prev = 0.0; c.i_prev = 0.0; }
        for (auto& l : inds_) l.i_prev = 0.0;
        if (clamped_) {
            clamp_value_ = v_load;
            x_[out_pos_] = v_load;
            if (out_neg_ != kGround) x_[out_neg_] = 0.0;
        } else {
            x_[out_pos_] = v_load;
            if (out_neg_ != kGround) x_[out_neg_] = 0.0;
            caps_.back().v_prev = v_load;  // the load capacitor is pushed last
        }
    }

    void set_clamp(double v_load) {
        clamp_value_ = v_load;
        x_[out_pos_] = v_load + (out_neg_ != kGround ? x_[out_neg_] : 0.0);
    }

    double load_voltage() const {
        return x_[out_pos_] - (out_neg_ == kGround ? 0.0 : x_[out_neg_]);
    }

    double clamp_current() const { return clamped_ ? x_[clamp_unknown_] : 0.0; }

    // Advance one trapezoidal step of size h with source voltage v_src at the
    // end of the step. Throws numerical_error when Newton stalls.
    void step(double h, double v_src) {
        const int n = n_unknowns_;
        std::vector<double>& x = x_;
        std::vector<double> a(static_cast<std::size_t>(n) * n);
        std::vector<double> b(n);
        std::vector<double> xn(n);
        const double j_src = v_src * src_g_;

        for (int iter = 0; iter < 200; ++iter) {
            std::fill(a.begin(), a.end(), 0.0);
            std::fill(b.begin(), b.end(), 0.0);
            auto A = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };
            auto stamp_g = [&](int p, int q, double g) {
                if (p != kGround) A(p, p) += g;
                if (q != kGround) A(q, q) += g;
                if (p != kGround && q != kGround) { A(p, q) -= g; A(q, p) -= g; }
            };
            auto stamp_i = [&](int p, int q, double j) {  // j flows p -> q
                if (p != kGround) b[p] -= j;
                if (q != kGround) b[q] += j;
            };
            for (int nd = 0; nd < n_nodes_; ++nd) A(nd, nd) += DiodeLaw::kGmin;
            stamp_i(kGround, src_node_, j_src);
            for (const auto& r : res_) stamp_g(r.a, r.b, r.g);
            for (const auto& c : caps_) {
                const double geq = 2.0 * c.c / h;
                stamp_g(c.a, c.b, geq);
                stamp_i(c.b, c.a, geq * c.v_prev + c.i_prev);
            }
            for (const auto& l : inds_) {
                const double zeq = 2.0 * l.l / h;
                // KCL coupling
                if (l.a != kGround) A(l.a, l.unknown) += 1.0;
                if (l.b != kGround) A(l.b, l.unknown) -= 1.0;
                // branch: v_a - v_b - zeq i = -v_prev - zeq i_prev
                if (l.a != kGround) A(l.unknown, l.a) += 1.0;
                if (l.b != kGround) A(l.unknown, l.b) -= 1.0;
                A(l.unknown, l.unknown) -= zeq;
                b[l.unknown] = -prev_v_ind(l) - zeq * l.i_prev;
            }
            for (const auto& d : diodes_) {
                const double va = d.a == kGround ? 0.0 : x[d.a];
                const double vb = d.b == kGround ? 0.0 : x[d.b];
                const double u = va - vb;
                const double g = d.law->conductance(u);
                const double i0 = d.law->current(u);
                stamp_g(d.a, d.b, g);
                stamp_i(d.a, d.b, i0 - g * u);
            }
            if (clamped_) {
                const int j = clamp_unknown_;
                if (out_pos_ != kGround) { A(out_pos_, j) += 1.0; A(j, out_pos_) += 1.0; }
                if (out_neg_ != kGround) { A(out_neg_, j) -= 1.0; A(j, out_neg_) -= 1.0; }
                b[j] = clamp_value_;
            }

            solve_dense(a, b, xn, n);

            double maxd = 0.0;
            for (int k = 0; k < n_nodes_; ++k) maxd = std::max(maxd, std::abs(xn[k] - x[k]));
            double scale = 1.0;
            if (maxd > 0.6) scale = 0.6 / maxd;
            for (int k = 0; k < n; ++k) x[k] += scale * (xn[k] - x[k]);
            if (scale == 1.0 && maxd < 1e-11 + 1e-10 * max_abs_v()) {
                commit(h);
                return;
            }
        }
        throw numerical_error("rectenna transient: diode Newton iteration did not converge");
    }

private:
    double prev_v_ind(const IndState& l) const {
        const double va = l.a == kGround ? 0.0 : x_prev_[l.a];
        const double vb = l.b == kGround ? 0.0 : x_prev_[l.b];
        return va - vb;
    }

    double max_abs_v() const {
        double m = 0.0;
        for (int k = 0; k < n_nodes_; ++k) m = std::max(m, std::abs(x_[k]));
        return m;
    }

    void commit(double h) {
        for (auto& c : caps_) {
            const double va = c.a == kGround ? 0.0 : x_[c.a];
            const double vb = c.b == kGround ? 0.0 : x_[c.b];
            const double v = va - vb;
            const double geq = 2.0 * c.c / h;
            const double i = geq * (v - c.v_prev) - c.i_prev;
            c.v_prev = v;
            c.i_prev = i;
        }
        for (auto& l : inds_) l.i_prev = x_[l.unknown];
        x_prev_ = x_;
    }

    static void solve_dense(std::vector<double>& a, std::vector<double>& b,
                            std::vector<double>& x, int n) {
        auto A = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };
        for (int col = 0; col < n; ++col) {
            int piv = col;
            for (int r = col + 1; r < n; ++r)
                if (std::abs(A(r, col)) > std::abs(A(piv, col))) piv = r;
            if (std::abs(A(piv, col)) < 1e-300)
                throw numerical_error("rectenna transient: singular MNA matrix");
            if (piv != col) {
                for (int c = 0; c < n; ++c) std::swap(A(piv, c), A(col, c));
                std::swap(b[piv], b[col]);
            }
            const double inv = 1.0 / A(col, col);
            for (int r = col + 1; r < n; ++r) {
                const double f = A(r, col) * inv;
                if (f == 0.0) continue;
                for (int c = col; c < n; ++c) A(r, c) -= f * A(col, c);
                b[r] -= f * b[col];
            }
        }
        x.assign(n, 0.0);
        for (int r = n - 1; r >= 0; --r) {
            double s = b[r];
            for (int c = r + 1; c < n; ++c) s -= A(r, c) * x[c];
            x[r] = s / A(r, r);
        }
    }

public:
    // exposes x_prev_ init for reset()
    void prime() { x_prev_ = x_; }

private:
    CircuitSpec spec_;
    bool clamped_;
    int n_nodes_ = 0, n_unknowns_ = 0;
    int src_node_ = 0, out_pos_ = 0, out_neg_ = kGround, clamp_unknown_ = -1;
    double src_g_ = 0.0;
    double clamp_value_ = 0.0;
    std::vector<CapState> caps_;
    std::vector<IndState> inds_;
    std::vector<ResEl> res_;
    std::vector<DiodeEl> diodes_;
    std::vector<double> x_;
    std::vector<double> x_prev_;
};

}  // namespace

SymbolResponse transient_simulate(const CircuitSpec& spec, double v0, double r_e,
                                  const TransientOptions& opts) {
    spec.validate();
    if (r_e < 0.0) throw std::domain_error("received amplitude must be nonnegative");
    if (v0 < 0.0) throw std::domain_error("initial load voltage must be nonnegative");
    const double h = 1.0 / (spec.carrier_frequency * opts.steps_per_cycle);
    const double total = spec.symbol_duration;
    const std::uint64_t n_steps = static_cast<std::uint64_t>(std::ceil(total / h));
    if (n_steps > opts.max_steps)
        throw numerical_error(
            "transient backend: step count " + std::to_string(n_steps) +
            " exceeds the limit; run at a down-scaled carrier (scaled_carrier)");

    DiodeLaw law(spec.diode);
    RectennaMna mna(spec, law, /*clamp_output=*/false);
    mna.reset(v0);
    mna.prime();

    const double v_peak = source_peak_voltage(r_e, spec.antenna_resistance);
    const double omega = kTwoPi * spec.carrier_frequency;
    double energy = 0.0;
    double v_prev = v0;
    double t = 0.0;
    for (std::uint64_t s = 0; s < n_steps; ++s) {
        double hh = std::min(h, total - t);
        if (hh <= 0.0) break;
        t += hh;
        mna.step(hh, v_peak * std::sin(omega * t));
        const double v = mna.load_voltage();
        energy += 0.5 * hh * (v_prev * v_prev + v * v) / spec.load_resistance;
        v_prev = v;
    }
    SymbolResponse out;
    out.final_voltage = std::max(0.0, v_prev);
    out.average_power = energy / total;
    return out;
}

// ---------------------------------------------------------------------------
// Envelope backend
// ---------------------------------------------------------------------------

namespace {

// cycle-averaged current delivered into the clamped output for one grid point
double period_average_current(RectennaMna& mna, double v_peak, double v_load, double f_c,
                              int steps_per_cycle, int settle_periods, int average_periods) {
    mna.set_clamp(v_load);
    const double h = 1.0 / (f_c * steps_per_cycle);
    const double omega = kTwoPi * f_c;
    double t = 0.0;
    for (int p = 0; p < settle_periods; ++p)
        for (int s = 0; s < steps_per_cycle; ++s) {
            t += h;
            mna.step(h, v_peak * std::sin(omega * t));
        }
    double acc = 0.0;
    double i_prev = mna.clamp_current();
    for (int p = 0; p < average_periods; ++p)
        for (int s = 0; s < steps_per_cycle; ++s) {
            t += h;
            mna.step(h, v_peak * std::sin(omega * t));
            const double i = mna.clamp_current();
            acc += 0.5 * h * (i_prev + i);
            i_prev = i;
        }
    return acc * f_c / average_periods;
}

struct MapBuildResult {
    std::vector<double> table;  // drive-major
    double drive_max, volt_max;
    int nd, nv;
};

MapBuildResult build_current_map(const CircuitSpec& spec, double drive_max, double volt_max,
                                 int nd, int nv, int steps_per_cycle, int settle, int avg) {
    MapBuildResult out;
    out.drive_max = drive_max;
    out.volt_max = volt_max;
    out.nd = nd;
    out.nv = nv;
    out.table.assign(static_cast<std::size_t>(nd) * nv, 0.0);
    DiodeLaw law(spec.diode);
    parallel_for(static_cast<std::size_t>(nd), [&](std::size_t i) {
        const double v_peak = drive_max * static_cast<double>(i) / (nd - 1);
        RectennaMna mna(spec, law, /*clamp_output=*/true);
        mna.reset(0.0);
        mna.prime();
        for (int j = 0; j < nv; ++j) {
            const double v_load = volt_max * static_cast<double>(j) / (nv - 1);
            out.table[i * static_cast<std::size_t>(nv) + j] = period_average_current(
                mna, v_peak, v_load, spec.carrier_frequency, steps_per_cycle, settle, avg);
        }
    });
    return out;
}

double bilinear(const std::vector<double>& table, int nd, int nv, double dmax, double vmax,
                double d, double v) {
    d = std::clamp(d, 0.0, dmax);
    v = std::clamp(v, 0.0, vmax);
    const double fx = d / dmax * (nd - 1);
    const double fy = v / vmax * (nv - 1);
    int ix = std::min(static_cast<int>(fx), nd - 2);
    int iy = std::min(static_cast<int>(fy), nv - 2);
    const double tx = fx - ix;
    const double ty = fy - iy;
    auto at = [&](int i, int j) { return table[static_cast<std::size_t>(i) * nv + j]; };
    return (1 - tx) * ((1 - ty) * at(ix, iy) + ty * at(ix, iy + 1)) +
           tx * ((1 - ty) * at(ix + 1, iy) + ty * at(ix + 1, iy + 1));
}

double map_equilibrium(const MapBuildResult& m, double r_load, double drive) {
    auto f = [&](double v) {
        return bilinear(m.table, m.nd, m.nv, m.drive_max, m.volt_max, drive, v) - v / r_load;
    };
    double lo = 0.0, hi = m.volt_max;
    if (f(hi) > 0.0) return m.volt_max;  // equilibrium beyond the table
    if (f(lo) <= 0.0) return 0.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

EnvelopeModel::EnvelopeModel(const CircuitSpec& spec, double r_e_max, const EnvelopeOptions& opts)
    : spec_(spec), opts_(opts), r_e_max_(r_e_max) {
    spec.validate();
    if (r_e_max < 0.0) throw std::domain_error("r_e_max must be nonnegative");

    drive_max_ = std::max(source_peak_voltage(r_e_max, spec.antenna_resistance), 1e-6);
    const int n_series = spec.topology == RectifierTopology::FullWaveBridge ? 2 : 1;
    double cap = n_series * spec.diode.breakdown_voltage + 4.0 * drive_max_ + 0.2;

    // coarse pass to locate the voltage ceiling, then the final map
    double v_eq = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
        MapBuildResult coarse = build_current_map(spec, drive_max_, cap, 17, 17,
                                                  std::max(48, opts.steps_per_cycle / 2), 6, 1);
        v_eq = 0.0;
        for (int i = 0; i < coarse.nd; ++i) {
            const double d = coarse.drive_max * i / (coarse.nd - 1);
            v_eq = std::max(v_eq, map_equilibrium(coarse, spec.load_resistance, d));
        }
        if (v_eq < 0.98 * cap) break;
        cap *= 2.0;
    }
    volt_max_ = std::max(1.05 * v_eq, 1e-3);

    MapBuildResult fin =
        build_current_map(spec, drive_max_, volt_max_, opts.drive_grid, opts.voltage_grid,
                          opts.steps_per_cycle, opts.settle_periods, opts.average_periods);
    table_ = std::move(fin.table);

    double v_eq_final = 0.0;
    MapBuildResult view{table_, drive_max_, volt_max_, opts.drive_grid, opts.voltage_grid};
    for (int i = 0; i < opts.drive_grid; ++i) {
        const double d = drive_max_ * i / (opts.drive_grid - 1);
        v_eq_final = std::max(v_eq_final, map_equilibrium(view, spec.load_resistance, d));
    }
    v_max_ = std::max(1.02 * v_eq_final, 1e-6);
}

double EnvelopeModel::average_current(double v_source_peak, double v_load) const {
    return bilinear(table_, opts_.drive_grid, opts_.voltage_grid, drive_max_, volt_max_,
                    v_source_peak, v_load);
}

double EnvelopeModel::equilibrium_voltage(double v_source_peak) const {
    MapBuildResult view{table_, drive_max_, volt_max_, opts_.drive_grid, opts_.voltage_grid};
    return map_equilibrium(view, spec_.load_resistance, v_source_peak);
}

SymbolResponse EnvelopeModel::simulate(double v0, double r_e) const {
    if (r_e < 0.0) throw std::domain_error("received amplitude must be nonnegative");
    if (v0 < -1e-12 || v0 > v_max_ * (1.0 + 1e-9) + 1e-12)
        throw std::domain_error("initial load voltage outside [0, v_max]");
    if (r_e > r_e_max_ * (1.0 + 1e-9))
        throw std::domain_error("received amplitude beyond the model's calibrated range");
    v0 = std::clamp(v0, 0.0, v_max_);

    const double v_peak = source_peak_voltage(r_e, spec_.antenna_resistance);
    const double inv_c = 1.0 / spec_.load_capacitance;
    const double g_load = 1.0 / spec_.load_resistance;
    auto deriv = [&](double v, double& dv, double& de) {
        dv = (average_current(v_peak, v) - v * g_load) * inv_c;
        de = v * v * g_load;
    };

    // Dormand-Prince 5(4)
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static const double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                        e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                        e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

    const double t_end = spec_.symbol_duration;
    double t = 0.0, v = v0, en = 0.0;
    double h = t_end / 50.0;
    const double h_min = t_end * 1e-12;
    const double atol = opts_.ode_abs_tol;
    const double rtol = 1e-9;
    double k1v, k1e;
    deriv(v, k1v, k1e);
    int steps = 0;
    while (t < t_end) {
        if (++steps > 200000) throw numerical_error("envelope backend: ODE step failure");
        h = std::min(h, t_end - t);
        double k2v, k2e, k3v, k3e, k4v, k4e, k5v, k5e, k6v, k6e, k7v, k7e;
        deriv(v + h * a21 * k1v, k2v, k2e);
        deriv(v + h * (a31 * k1v + a32 * k2v), k3v, k3e);
        deriv(v + h * (a41 * k1v + a42 * k2v + a43 * k3v), k4v, k4e);
        deriv(v + h * (a51 * k1v + a52 * k2v + a53 * k3v + a54 * k4v), k5v, k5e);
        deriv(v + h * (a61 * k1v + a62 * k2v + a63 * k3v + a64 * k4v + a65 * k5v), k6v, k6e);
        const double v5 = v + h * (b1 * k1v + b3 * k3v + b4 * k4v + b5 * k5v + b6 * k6v);
        const double e5sum = en + h * (b1 * k1e + b3 * k3e + b4 * k4e + b5 * k5e + b6 * k6e);
        deriv(v5, k7v, k7e);
        const double err_v =
            h * (e1 * k1v + e3 * k3v + e4 * k4v + e5 * k5v + e6 * k6v + e7 * k7v);
        const double scale = atol + rtol * std::max(std::abs(v), std::abs(v5));
        const double err = std::abs(err_v) / scale;
        if (err <= 1.0) {
            t += h;
            v = v5;
            en = e5sum;
            k1v = k7v;
            k1e = k7e;
        }
        const double factor = (err > 1e-12) ? 0.9 * std::pow(err, -0.2) : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
        if (h < h_min) throw numerical_error("envelope backend: ODE step underflow");
    }
    SymbolResponse out;
    out.final_voltage = std::clamp(v, 0.0, v_max_);
    out.average_power = en / t_end;
    return out;
}

SymbolResponse simulate_symbol(const CircuitSpec& spec, double v0, double r_e,
                               CircuitBackend backend) {
    if (backend == CircuitBackend::Transient) return transient_simulate(spec, v0, r_e);
    static std::mutex mu;
    static std::map<std::uint64_t, std::shared_ptr<EnvelopeModel>> cache;
    const std::uint64_t key = fnv1a(spec.cache_key());
    std::shared_ptr<EnvelopeModel> model;
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end() && it->second->r_e_max() >= r_e) model = it->second;
    }
    if (!model) {
        model = std::make_shared<EnvelopeModel>(spec, std::max(2.0 * r_e, 1e-3));
        std::lock_guard<std::mutex> lock(mu);
        cache[key] = model;
    }
    return model->simulate(std::min(v0, model->v_max()), r_e);
}

std::vector<DatasetSample> generate_dataset(const EnvelopeModel& model, std::size_t n_samples,
                                            std::uint64_t seed) {
    std::vector<DatasetSample> data(n_samples);
    Rng rng(seed);
    for (auto& s : data) {
        s.v_init = rng.uniform(0.0, model.v_max());
        s.r_e = rng.uniform(0.0, model.r_e_max());
    }
    parallel_for(n_samples, [&](std::size_t i) {
        const SymbolResponse r = model.simulate(data[i].v_init, data[i].r_e);
        data[i].v_final = r.final_voltage;
        data[i].p_avg = r.average_power;
    });
    return data;
}

std::vector<DatasetSample> grid_dataset(const EnvelopeModel& model, std::size_t n_voltage,
                                        std::size_t n_amplitude) {
    if (n_voltage < 2 || n_amplitude < 2)
        throw std::invalid_argument("grid dataset needs at least 2 points per axis");
    std::vector<DatasetSample> data(n_voltage * n_amplitude);
    for (std::size_t i = 0; i < n_voltage; ++i)
        for (std::size_t j = 0; j < n_amplitude; ++j) {
            auto& s = data[i * n_amplitude + j];
            s.v_init = model.v_max() * static_cast<double>(i) / (n_voltage - 1);
            s.r_e = model.r_e_max() * static_cast<double>(j) / (n_amplitude - 1);
        }
    parallel_for(data.size(), [&](std::size_t i) {
        const SymbolResponse r = model.simulate(data[i].v_init, data[i].r_e);
        data[i].v_final = r.final_voltage;
        data[i].p_avg = r.average_power;
    });
    return data;
}

std::string dataset_to_csv(const std::vector<DatasetSample>& data) {
    std::ostringstream out;
    out << "v_init,r_E,v_final,p_avg\n";
    for (const auto& s : data)
        out << format_sig9(s.v_init) << ',' << format_sig9(s.r_e) << ',' << format_sig9(s.v_final)
            << ',' << format_sig9(s.p_avg) << '\n';
    return out.str();
}

std::vector<DatasetSample> dataset_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line.rfind("v_init,", 0) != 0)
        throw std::invalid_argument("dataset CSV: missing v_init,r_E,v_final,p_avg header");
    std::vector<DatasetSample> data;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        DatasetSample s;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &s.v_init, &s.r_e, &s.v_final,
                        &s.p_avg) != 4)
            throw std::invalid_argument("dataset CSV: malformed row: " + line);
        data.push_back(s);
    }
    return data;
}

}  // namespace swipt
