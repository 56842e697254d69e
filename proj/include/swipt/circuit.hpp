#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "swipt/util.hpp"

namespace swipt {

struct DiodeParams {
    double saturation_current = 5e-6;   // amperes
    double ideality = 1.05;
    double thermal_voltage = 0.02585;   // volts (300 K)
    double series_resistance = 20.0;    // ohms
    double breakdown_voltage = 2.0;     // volts

    void validate() const;
};

struct MatchingNetworkSpec {
    double inductance_l1 = 0.0;          // henries
    double capacitance_c1 = 0.0;         // farads
    std::optional<double> capacitance_c2;  // farads, only on the 0 dBm designs
    double design_power = 0.0;           // watts the network was tuned for

    void validate() const;
};

enum class RectifierTopology { HalfWave, FullWaveBridge };

struct CircuitSpec {
    RectifierTopology topology = RectifierTopology::HalfWave;
    DiodeParams diode;
    MatchingNetworkSpec matching;
    double antenna_resistance = 50.0;   // ohms
    double load_capacitance = 1e-9;     // farads
    double load_resistance = 1e4;       // ohms
    double carrier_frequency = 2.45e9;  // hertz
    double symbol_duration = 1e-5;      // seconds

    void validate() const;

    /// Stable byte serialization for cache keys and provenance hashes.
    std::string cache_key() const;
};

/// Reference designs; matching element values depend on the power level the
/// network was tuned for (-13 dBm or 0 dBm).
CircuitSpec half_wave_reference(double design_dbm = -13.0);
CircuitSpec full_wave_reference(double design_dbm = -13.0);

/// Returns a copy with the carrier divided by `factor` and the matching
/// reactances rescaled so impedances at the new carrier are unchanged. Used
/// to make full transient runs affordable.
CircuitSpec scaled_carrier(const CircuitSpec& spec, double factor);

struct SymbolResponse {
    double final_voltage = 0.0;  // volts
    double average_power = 0.0;  // watts dissipated in the load over the symbol
};

/// Peak voltage of the antenna Thevenin source for received amplitude r_E,
/// sqrt(8 Rs r_E^2); the available source power then equals r_E^2.
double source_peak_voltage(double r_e, double antenna_resistance);

/**
 * Diode terminal law (junction + series resistance) used by both backends:
 * Shockley forward conduction for positive bias, no conduction between
 * -breakdown and 0, and steep reverse conduction past -breakdown. The inner
 * junction/series-resistance split is solved internally.
 */
class DiodeLaw {
public:
    explicit DiodeLaw(const DiodeParams& params) : p_(params) { p_.validate(); }

    double current(double u) const;       // terminal current, amperes
    double conductance(double u) const;   // di/du, clamped below at gmin

    static constexpr double kGmin = 1e-12;

private:
    double junction_voltage(double u) const;
    DiodeParams p_;
};

struct TransientOptions {
    int steps_per_cycle = 256;
    std::uint64_t max_steps = 30000000;
};

/// Full MNA transient of the rectenna over one symbol at the carrier rate.
/// Intended as a test oracle at a down-scaled carrier; a symbol at 2.45 GHz
/// exceeds max_steps by design.
SymbolResponse transient_simulate(const CircuitSpec& spec, double v0, double r_e,
                                  const TransientOptions& opts = {});

struct EnvelopeOptions {
    int drive_grid = 64;
    int voltage_grid = 64;
    int steps_per_cycle = 96;
    int settle_periods = 8;
    int average_periods = 2;
    double ode_abs_tol = 1e-6;  // volts
};

/**
 * Envelope backend: a cycle-averaged rectified-current map
 * i_avg(source amplitude, load voltage) is tabulated by solving single RF
 * periods with the load clamped, then the slow dynamics
 *
 *   C_L dv/dt = i_avg(V_s, v) - v/R_L
 *
 * are integrated with adaptive Runge-Kutta. The map covers source amplitudes
 * for received amplitudes in [0, r_e_max]; v_max() is the calibrated state
 * ceiling (steady state at the peak amplitude times 1.02).
 */
class EnvelopeModel {
public:
    EnvelopeModel(const CircuitSpec& spec, double r_e_max, const EnvelopeOptions& opts = {});

    SymbolResponse simulate(double v0, double r_e) const;
    double v_max() const { return v_max_; }
    double r_e_max() const { return r_e_max_; }
    const CircuitSpec& spec() const { return spec_; }

    /// Rectified-current map lookup (bilinear, clamped to the table hull).
    double average_current(double v_source_peak, double v_load) const;

private:
    double equilibrium_voltage(double v_source_peak) const;
    CircuitSpec spec_;
    EnvelopeOptions opts_;
    double r_e_max_ = 0.0;
    double v_max_ = 0.0;
    double drive_max_ = 0.0;  // source-voltage axis upper edge
    double volt_max_ = 0.0;   // load-voltage axis upper edge
    std::vector<double> table_;  // drive-major [i_drive][i_volt]
};

enum class CircuitBackend { Envelope, Transient };

/// One-shot simulation; envelope models are cached internally per spec.
SymbolResponse simulate_symbol(const CircuitSpec& spec, double v0, double r_e,
                               CircuitBackend backend = CircuitBackend::Envelope);

struct DatasetSample {
    double v_init = 0.0;
    double r_e = 0.0;
    double v_final = 0.0;
    double p_avg = 0.0;
};

/// i.i.d. training tuples: r_E uniform over [0, r_e_max], v_init uniform over
/// [0, v_max]; reproducible from the seed.
std::vector<DatasetSample> generate_dataset(const EnvelopeModel& model, std::size_t n_samples,
                                            std::uint64_t seed);

/// Rectangular grid of samples (for the interpolation-table backend).
std::vector<DatasetSample> grid_dataset(const EnvelopeModel& model, std::size_t n_voltage,
                                        std::size_t n_amplitude);

std::string dataset_to_csv(const std::vector<DatasetSample>& data);
std::vector<DatasetSample> dataset_from_csv(const std::string& csv);

}  // namespace swipt
