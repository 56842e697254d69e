#include "swipt/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace swipt {

using json = nlohmann::json;

VoltageQuantizer::VoltageQuantizer(std::size_t states, double v_max_volts)
    : state_count(states), v_max(v_max_volts) {
    if (states == 0) throw std::invalid_argument("quantizer needs at least one state");
    if (v_max_volts <= 0.0) throw std::invalid_argument("quantizer v_max must be positive");
}

double VoltageQuantizer::boundary(std::size_t l) const {
    return v_max * static_cast<double>(l) / static_cast<double>(state_count);
}

double VoltageQuantizer::midpoint(std::size_t i) const {
    return 0.5 * (boundary(i) + boundary(i + 1));
}

std::size_t VoltageQuantizer::state_of(double v, bool* clamped) const {
    if (clamped) *clamped = false;
    if (v < 0.0) {
        if (clamped) *clamped = true;
        return 0;
    }
    if (v >= v_max) {
        // the exact top boundary belongs to the last state; beyond is clamped
        if (clamped && v > v_max) *clamped = true;
        return state_count - 1;
    }
    const std::size_t i =
        static_cast<std::size_t>(v / v_max * static_cast<double>(state_count));
    return std::min(i, state_count - 1);
}

std::vector<std::vector<double>> TransitionModel::chain_matrix(
    const std::vector<double>& pdf) const {
    if (pdf.size() != n_amps) throw std::invalid_argument("pdf size does not match amplitudes");
    std::vector<std::vector<double>> p(n_states, std::vector<double>(n_states, 0.0));
    for (std::size_t i = 0; i < n_states; ++i)
        for (std::size_t j = 0; j < n_states; ++j) {
            double acc = 0.0;
            const double* slice = rho.data() + (i * n_states + j) * n_amps;
            for (std::size_t k = 0; k < n_amps; ++k) acc += pdf[k] * slice[k];
            p[i][j] = acc;
        }
    return p;
}

TransitionModel build_transition_model(const SymbolResponder& backend,
                                       const VoltageQuantizer& quantizer,
                                       const std::vector<double>& amplitudes, double eh_gain,
                                       std::size_t subsamples) {
    if (subsamples == 0) throw std::invalid_argument("subsamples must be >= 1");
    if (amplitudes.empty()) throw std::invalid_argument("amplitude set must be nonempty");
    TransitionModel m;
    m.quantizer = quantizer;
    m.amplitudes = amplitudes;
    m.eh_gain = eh_gain;
    m.n_states = quantizer.state_count;
    m.n_amps = amplitudes.size();
    m.rho.assign(m.n_states * m.n_states * m.n_amps, 0.0);
    m.reward.assign(m.n_states * m.n_amps, 0.0);

    const double frac = 1.0 / static_cast<double>(subsamples);
    std::vector<std::size_t> clamp_counts(m.n_states, 0);
    parallel_for(m.n_states, [&](std::size_t i) {
        const double lo = quantizer.boundary(i);
        const double width = quantizer.boundary(i + 1) - lo;
        for (std::size_t k = 0; k < m.n_amps; ++k) {
            const double r_e = eh_gain * amplitudes[k];
            for (std::size_t s = 0; s < subsamples; ++s) {
                const double v0 = lo + (static_cast<double>(s) + 0.5) * width * frac;
                const double vf = backend.respond(v0, r_e).final_voltage;
                bool clamped = false;
                const std::size_t j = quantizer.state_of(vf, &clamped);
                if (clamped) ++clamp_counts[i];
                m.rho[(i * m.n_states + j) * m.n_amps + k] += frac;
            }
            m.reward[i * m.n_amps + k] =
                backend.respond(quantizer.midpoint(i), r_e).average_power;
        }
    });
    for (std::size_t c : clamp_counts) m.clamp_warnings += c;
    return m;
}

double JointDistribution::total_mass() const {
    double total = 0.0;
    for (const auto& row : pi)
        for (double v : row) total += v;
    return total;
}

namespace {

// Solves the stacked stationary system [I - P^T; 1^T] gamma = [0; 1] by least
// squares and verifies the chain is unichain.
std::vector<double> solve_stationary(const std::vector<std::vector<double>>& chain,
                                     double* residual_out) {
    const std::size_t n = chain.size();
    Eigen::MatrixXd a(n + 1, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
                (i == j ? 1.0 : 0.0) - chain[i][j];
    for (std::size_t i = 0; i < n; ++i) a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(i)) = 1.0;
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n + 1);
    e(static_cast<Eigen::Index>(n)) = 1.0;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv(sv.size() - 1) < 1e-12 * sv(0))
        throw ergodicity_error("stationary solve: chain is not unichain (rank deficient)");
    Eigen::VectorXd gamma = svd.solve(e);

    double residual = (a * gamma - e).lpNorm<Eigen::Infinity>();
    if (residual_out) *residual_out = residual;

    std::vector<double> out(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double g = gamma(static_cast<Eigen::Index>(i));
        if (g < 0.0) {
            if (g < -1e-9)
                throw ergodicity_error("stationary solve: significantly negative state mass");
            g = 0.0;
        }
        out[i] = g;
        total += g;
    }
    for (double& g : out) g /= total;
    return out;
}

std::vector<std::vector<double>> induced_chain(
    const TransitionModel& model, const std::vector<std::vector<double>>& per_state_pdf) {
    if (per_state_pdf.size() != model.n_states)
        throw std::invalid_argument("policy must provide one pdf per state");
    std::vector<std::vector<double>> p(model.n_states, std::vector<double>(model.n_states, 0.0));
    for (std::size_t i = 0; i < model.n_states; ++i) {
        if (per_state_pdf[i].size() != model.n_amps)
            throw std::invalid_argument("policy pdf size does not match amplitudes");
        for (std::size_t j = 0; j < model.n_states; ++j) {
            double acc = 0.0;
            const double* slice = model.rho.data() + (i * model.n_states + j) * model.n_amps;
            for (std::size_t k = 0; k < model.n_amps; ++k) acc += per_state_pdf[i][k] * slice[k];
            p[i][j] = acc;
        }
    }
    return p;
}

}  // namespace

JointDistribution steady_state_joint(const TransitionModel& model,
                                     const std::vector<std::vector<double>>& per_state_pdf) {
    const auto chain = induced_chain(model, per_state_pdf);
    JointDistribution out;
    const auto gamma = solve_stationary(chain, &out.balance_residual);
    if (out.balance_residual > 1e-9)
        throw ergodicity_error("steady state: balance residual above 1e-9");
    out.pi.resize(model.n_states);
    for (std::size_t i = 0; i < model.n_states; ++i) {
        out.pi[i].resize(model.n_amps);
        for (std::size_t k = 0; k < model.n_amps; ++k)
            out.pi[i][k] = gamma[i] * per_state_pdf[i][k];
    }
    return out;
}

JointDistribution steady_state_joint(const TransitionModel& model,
                                     const std::vector<double>& shared_pdf) {
    return steady_state_joint(
        model, std::vector<std::vector<double>>(model.n_states, shared_pdf));
}

StateDistribution fit_states_pseudoinverse(const TransitionModel& model,
                                           const std::vector<double>& shared_pdf) {
    const auto chain = model.chain_matrix(shared_pdf);
    StateDistribution out;
    out.gamma = solve_stationary(chain, &out.residual);
    if (out.residual > 1e-6)
        throw ergodicity_error("pseudoinverse state fit: residual above 1e-6 (non-ergodic policy)");
    return out;
}

double average_power(const TransitionModel& model, const JointDistribution& pi) {
    if (pi.pi.size() != model.n_states)
        throw std::invalid_argument("joint distribution state count mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < model.n_states; ++i) {
        if (pi.pi[i].size() != model.n_amps)
            throw std::invalid_argument("joint distribution amplitude count mismatch");
        for (std::size_t k = 0; k < model.n_amps; ++k)
            total += pi.pi[i][k] * model.reward_at(i, k);
    }
    return total;
}

RolloutResult monte_carlo_rollout(const TransitionModel& model,
                                  const std::vector<std::vector<double>>& per_state_pdf,
                                  std::size_t steps, std::uint64_t seed,
                                  std::size_t start_state) {
    if (steps == 0) throw std::invalid_argument("rollout needs at least one step");
    if (per_state_pdf.size() != model.n_states)
        throw std::invalid_argument("policy must provide one pdf per state");
    if (start_state >= model.n_states) throw std::invalid_argument("rollout start state out of range");
    Rng rng(seed);
    constexpr std::size_t kBurnIn = 500;
    std::size_t state = start_state;
    RolloutResult res;
    res.state_histogram.assign(model.n_states, 0.0);
    double power_acc = 0.0;
    std::vector<double> dest(model.n_states);
    for (std::size_t t = 0; t < kBurnIn + steps; ++t) {
        const bool counted = t >= kBurnIn;
        if (counted) res.state_histogram[state] += 1.0;
        const std::size_t k = rng.sample_index(per_state_pdf[state]);
        if (counted) power_acc += model.reward_at(state, k);
        for (std::size_t j = 0; j < model.n_states; ++j) dest[j] = model.rho_at(state, j, k);
        state = rng.sample_index(dest);
    }
    res.average_power = power_acc / static_cast<double>(steps);
    for (double& h : res.state_histogram) h /= static_cast<double>(steps);
    return res;
}

RolloutResult monte_carlo_rollout(const TransitionModel& model,
                                  const std::vector<double>& shared_pdf, std::size_t steps,
                                  std::uint64_t seed, std::size_t start_state) {
    return monte_carlo_rollout(model, std::vector<std::vector<double>>(model.n_states, shared_pdf),
                               steps, seed, start_state);
}

std::string TransitionModel::to_json() const {
    json j;
    j["format_version"] = 1;
    j["n_states"] = n_states;
    j["n_amplitudes"] = n_amps;
    j["v_max"] = quantizer.v_max;
    j["eh_gain"] = eh_gain;
    j["amplitudes"] = amplitudes;
    j["rho"] = rho;
    j["reward"] = reward;
    j["clamp_warnings"] = clamp_warnings;
    return j.dump();
}

TransitionModel TransitionModel::from_json(const std::string& text) {
    json j = json::parse(text);
    TransitionModel m;
    m.n_states = j.at("n_states").get<std::size_t>();
    m.n_amps = j.at("n_amplitudes").get<std::size_t>();
    m.quantizer = VoltageQuantizer(m.n_states, j.at("v_max").get<double>());
    m.eh_gain = j.at("eh_gain").get<double>();
    m.amplitudes = j.at("amplitudes").get<std::vector<double>>();
    m.rho = j.at("rho").get<std::vector<double>>();
    m.reward = j.at("reward").get<std::vector<double>>();
    m.clamp_warnings = j.value("clamp_warnings", std::size_t{0});
    if (m.rho.size() != m.n_states * m.n_states * m.n_amps ||
        m.reward.size() != m.n_states * m.n_amps || m.amplitudes.size() != m.n_amps)
        throw std::invalid_argument("transition model JSON: inconsistent dimensions");
    return m;
}

}  // namespace swipt
