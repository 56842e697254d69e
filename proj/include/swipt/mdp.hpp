#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "swipt/circuit.hpp"
#include "swipt/util.hpp"

namespace swipt {

/// Uniform quantization of the load voltage into S states over [0, v_max].
/// Boundaries are v_l = v_max l / S; state i covers [v_i, v_{i+1}) with the
/// top boundary closed into the last state.
struct VoltageQuantizer {
    std::size_t state_count = 0;
    double v_max = 0.0;

    VoltageQuantizer() = default;
    VoltageQuantizer(std::size_t states, double v_max_volts);

    double boundary(std::size_t l) const;  // l in [0, state_count]
    double midpoint(std::size_t i) const;  // i in [0, state_count)

    /// Bin index of v; values outside [0, v_max] clamp to the boundary states
    /// and set *clamped when provided.
    std::size_t state_of(double v, bool* clamped = nullptr) const;
};

/// Circuit response backend seen by the MDP builder: final load voltage and
/// symbol-averaged harvested power for (initial voltage, received amplitude).
class SymbolResponder {
public:
    virtual ~SymbolResponder() = default;
    virtual SymbolResponse respond(double v0, double r_e) const = 0;
};

class EnvelopeResponder : public SymbolResponder {
public:
    explicit EnvelopeResponder(const EnvelopeModel& model) : model_(&model) {}
    SymbolResponse respond(double v0, double r_e) const override {
        return model_->simulate(v0, r_e);
    }

private:
    const EnvelopeModel* model_;
};

/// Test backend built from plain functions of (v0, r_E).
class FunctionResponder : public SymbolResponder {
public:
    using Fn = std::function<double(double, double)>;
    FunctionResponder(Fn final_voltage, Fn average_power)
        : fv_(std::move(final_voltage)), pw_(std::move(average_power)) {}
    SymbolResponse respond(double v0, double r_e) const override {
        return {fv_(v0, r_e), pw_(v0, r_e)};
    }

private:
    Fn fv_, pw_;
};

/**
 * The MDP: transition tensor rho[i][j][k] (source state, destination state,
 * amplitude index) and reward matrix (watts) over quantized voltage states
 * and constellation amplitudes. Every slice rho[i][.][k] sums to 1.
 */
struct TransitionModel {
    VoltageQuantizer quantizer;
    std::vector<double> amplitudes;  // transmit amplitudes r_k, sqrt-watts
    double eh_gain = 1.0;            // |h_E|
    std::size_t n_states = 0, n_amps = 0;
    std::vector<double> rho;     // [i][j][k] row-major
    std::vector<double> reward;  // [i][k] row-major
    std::size_t clamp_warnings = 0;  // backend outputs outside [0, v_max]

    double rho_at(std::size_t i, std::size_t j, std::size_t k) const {
        return rho[(i * n_states + j) * n_amps + k];
    }
    double reward_at(std::size_t i, std::size_t k) const { return reward[i * n_amps + k]; }

    /// Chain matrix P[i][j] = sum_k policy_i(k) rho_ijk for a shared pdf.
    std::vector<std::vector<double>> chain_matrix(const std::vector<double>& pdf) const;

    std::string to_json() const;
    static TransitionModel from_json(const std::string& text);
};

/// Riemann approximation of the state-to-state transition law: each source
/// interval is sampled at `subsamples` midpoints and pushed through the
/// backend. reward[i][k] = P'(midpoint_i, |h_E| r_k).
TransitionModel build_transition_model(const SymbolResponder& backend,
                                       const VoltageQuantizer& quantizer,
                                       const std::vector<double>& amplitudes, double eh_gain,
                                       std::size_t subsamples);

struct JointDistribution {
    std::vector<std::vector<double>> pi;  // [state][amplitude]
    double balance_residual = 0.0;

    double total_mass() const;
};

struct StateDistribution {
    std::vector<double> gamma;
    double residual = 0.0;
};

/// Steady-state joint pdf pi_i(r_k) for a per-state policy (one amplitude pdf
/// per state). Throws ergodicity_error if the induced chain is not unichain.
JointDistribution steady_state_joint(const TransitionModel& model,
                                     const std::vector<std::vector<double>>& per_state_pdf);

/// Shared-pdf overload (the policy every state uses).
JointDistribution steady_state_joint(const TransitionModel& model,
                                     const std::vector<double>& shared_pdf);

/// Least-squares fit of the state marginals from the stacked balance system
/// R(p) gamma = e (last row all ones). Tiny negative entries are clipped and
/// the result renormalized; residuals above 1e-6 raise ergodicity_error.
StateDistribution fit_states_pseudoinverse(const TransitionModel& model,
                                           const std::vector<double>& shared_pdf);

/// Expected harvested power sum_ik pi_i(r_k) reward_i(r_k), watts.
double average_power(const TransitionModel& model, const JointDistribution& pi);

struct RolloutResult {
    double average_power = 0.0;
    std::vector<double> state_histogram;  // normalized over counted steps
};

/// Simulates the chain for `steps` counted steps after a 500-step burn-in,
/// starting from `start_state` (the lowest voltage state by default);
/// reproducible from the seed.
RolloutResult monte_carlo_rollout(const TransitionModel& model,
                                  const std::vector<std::vector<double>>& per_state_pdf,
                                  std::size_t steps, std::uint64_t seed,
                                  std::size_t start_state = 0);

RolloutResult monte_carlo_rollout(const TransitionModel& model,
                                  const std::vector<double>& shared_pdf, std::size_t steps,
                                  std::uint64_t seed, std::size_t start_state = 0);

}  // namespace swipt
