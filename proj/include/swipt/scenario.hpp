#pragma once

#include <cstdint>
#include <string>

#include "swipt/channel.hpp"
#include "swipt/circuit.hpp"
#include "swipt/optimizer.hpp"

namespace swipt {

/**
 * One batch-job configuration: circuit, links, transmitter limits, MDP
 * quantization, and solver settings. All stored values are SI; dB-valued
 * JSON fields carry explicit _dbm suffixes and are converted on load.
 */
struct Scenario {
    std::string name = "scenario";

    CircuitSpec circuit;

    PathlossSpec ir_path{3.0, 40.0, 1.0, 2.45e9};
    PathlossSpec eh_path{2.0, 10.0, 1.0, 2.45e9};
    FadingSpec ir_fading;
    FadingSpec eh_fading;
    std::uint64_t fading_seed = 1;
    double noise_power_dbm = -70.0;  // complex noise power E|n|^2 in dBm

    double peak_power_dbm = 50.0;
    double avg_power_dbm = 42.0;
    std::size_t constellation_size = 64;

    std::size_t state_count = 50;
    std::size_t subsamples = 32;
    std::size_t mi_grid = 4096;

    SolverConfig solver;

    std::string backend = "circuit";  // circuit | surrogate | table
    std::uint64_t dataset_seed = 1;
    std::uint64_t rollout_seed = 1;
    std::string output_dir = "out";

    // derived quantities
    double r_max() const;             // sqrt-watts, from the peak-power limit
    double ap_budget_watts() const;   // sigma_{r_x}^2
    double noise_sigma_sq() const;    // per-dimension variance, watts
    Constellation constellation() const;

    /// Amplitude gains |h_I|, |h_E| and the noise variance; fading draws (if
    /// any) come from fading_seed.
    ChannelSpec channel_spec() const;

    void validate() const;  // throws std::invalid_argument with the field path

    static Scenario from_json_text(const std::string& text);
    static Scenario load(const std::string& path);
    std::string to_json() const;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

}  // namespace swipt
