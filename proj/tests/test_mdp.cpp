#include <doctest.h>

#include <cmath>

#include "swipt/channel.hpp"
#include "swipt/mdp.hpp"

using namespace swipt;

namespace {

// hand-filled 2-state, 1-amplitude chain with given leave probabilities
TransitionModel two_state_chain(double leave_1, double leave_2, double reward_1,
                                double reward_2) {
    TransitionModel m;
    m.quantizer = VoltageQuantizer(2, 1.0);
    m.amplitudes = {1.0};
    m.n_states = 2;
    m.n_amps = 1;
    m.rho = {1.0 - leave_1, leave_1, leave_2, 1.0 - leave_2};
    m.reward = {reward_1, reward_2};
    return m;
}

// smooth saturating charge curve used as a synthetic circuit
double synth_fv(double v, double r_e) {
    const double target = 0.9 * r_e / (r_e + 0.05);
    return target + (v - target) * std::exp(-1.2);
}

double synth_power(double v, double r_e) {
    const double vf = synth_fv(v, r_e);
    return 0.5 * (v * v + vf * vf);
}

TransitionModel synth_model(std::size_t n_states, std::size_t n_amps, std::size_t subsamples) {
    FunctionResponder backend(synth_fv, synth_power);
    VoltageQuantizer quant(n_states, 1.0);
    Constellation cons = Constellation::uniform(n_amps, 1.0);
    return build_transition_model(backend, quant, cons.amplitudes, 1.0, subsamples);
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return 0.5 * acc;
}

}  // namespace

TEST_CASE("quantizer boundaries, midpoints and bin lookup") {
    VoltageQuantizer q(4, 1.0);
    CHECK(q.boundary(0) == doctest::Approx(0.0));
    CHECK(q.boundary(2) == doctest::Approx(0.5));
    CHECK(q.boundary(4) == doctest::Approx(1.0));
    CHECK(q.midpoint(0) == doctest::Approx(0.125));
    CHECK(q.midpoint(3) == doctest::Approx(0.875));
    CHECK(q.state_of(0.0) == 0);
    CHECK(q.state_of(0.25) == 1);       // half-open bins
    CHECK(q.state_of(0.2499999) == 0);
    CHECK(q.state_of(1.0) == 3);        // top boundary closed into the last state
    bool clamped = false;
    CHECK(q.state_of(1.5, &clamped) == 3);
    CHECK(clamped);
    clamped = false;
    CHECK(q.state_of(-0.1, &clamped) == 0);
    CHECK(clamped);
}

TEST_CASE("identity backend gives pure self-transitions at zero amplitude") {
    FunctionResponder backend([](double v, double) { return v; },
                              [](double, double) { return 0.0; });
    VoltageQuantizer quant(6, 1.0);
    auto m = build_transition_model(backend, quant, {0.0}, 1.0, 16);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            CHECK(m.rho_at(i, j, 0) == doctest::Approx(i == j ? 1.0 : 0.0));
}

TEST_CASE("state-independent backend yields identical source rows") {
    FunctionResponder backend([](double, double r) { return 0.8 * r; },
                              [](double, double r) { return r * r; });
    VoltageQuantizer quant(5, 1.0);
    Constellation cons = Constellation::uniform(4, 1.0);
    auto m = build_transition_model(backend, quant, cons.amplitudes, 1.0, 8);
    for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t j = 0; j < 5; ++j)
            for (std::size_t i = 1; i < 5; ++i)
                CHECK(m.rho_at(i, j, k) == doctest::Approx(m.rho_at(0, j, k)));
}

TEST_CASE("linear decay map matches exact preimage measures") {
    VoltageQuantizer quant(4, 1.0);
    const std::size_t subsamples = 64;

    // f(v) = v/2: state 3 (interval [0.5, 0.75)) maps inside [0.25, 0.5)
    FunctionResponder half([](double v, double) { return 0.5 * v; },
                           [](double, double) { return 0.0; });
    auto m1 = build_transition_model(half, quant, {0.0}, 1.0, subsamples);
    CHECK(m1.rho_at(2, 1, 0) == doctest::Approx(1.0));

    // f(v) = 0.7 v: the image of [0.5, 0.75) straddles the 0.5 boundary;
    // exact split = measure{v < 0.5/0.7} / 0.25
    FunctionResponder seventy([](double v, double) { return 0.7 * v; },
                              [](double, double) { return 0.0; });
    auto m2 = build_transition_model(seventy, quant, {0.0}, 1.0, subsamples);
    const double exact = (0.5 / 0.7 - 0.5) / 0.25;
    CHECK(std::abs(m2.rho_at(2, 1, 0) - exact) <= 1.0 / subsamples);
    CHECK(std::abs(m2.rho_at(2, 2, 0) - (1.0 - exact)) <= 1.0 / subsamples);
}

TEST_CASE("every transition row is stochastic") {
    auto m = synth_model(8, 5, 16);
    for (std::size_t i = 0; i < m.n_states; ++i)
        for (std::size_t k = 0; k < m.n_amps; ++k) {
            double sum = 0.0;
            for (std::size_t j = 0; j < m.n_states; ++j) sum += m.rho_at(i, j, k);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("doubling the subsample count moves entries by less than 1/M") {
    auto coarse = synth_model(6, 4, 16);
    auto fine = synth_model(6, 4, 32);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 6; ++j)
            for (std::size_t k = 0; k < 4; ++k)
                CHECK(std::abs(coarse.rho_at(i, j, k) - fine.rho_at(i, j, k)) <= 1.0 / 16.0);
}

TEST_CASE("two-state symmetric chain has the uniform stationary law") {
    auto m = two_state_chain(0.5, 0.5, 0.0, 0.0);
    auto joint = steady_state_joint(m, std::vector<double>{1.0});
    CHECK(joint.pi[0][0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(joint.pi[1][0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(joint.total_mass() == doctest::Approx(1.0));
}

TEST_CASE("two-state flow balance: gamma = [2/3, 1/3] for leave rates 0.2/0.4") {
    auto m = two_state_chain(0.2, 0.4, 0.0, 0.0);
    auto joint = steady_state_joint(m, std::vector<double>{1.0});
    CHECK(joint.pi[0][0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(joint.pi[1][0] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));

    auto fit = fit_states_pseudoinverse(m, {1.0});
    CHECK(fit.gamma[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(fit.gamma[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("memoryless chain: state fit equals the one-step distribution") {
    FunctionResponder backend([](double, double r) { return r; },
                              [](double, double) { return 0.0; });
    VoltageQuantizer quant(4, 1.0);
    Constellation cons = Constellation::uniform(4, 0.9);
    auto m = build_transition_model(backend, quant, cons.amplitudes, 1.0, 8);
    std::vector<double> p = {0.4, 0.3, 0.2, 0.1};
    auto fit = fit_states_pseudoinverse(m, p);
    for (std::size_t j = 0; j < m.n_states; ++j) {
        double expect = 0.0;
        for (std::size_t k = 0; k < m.n_amps; ++k) expect += p[k] * m.rho_at(0, j, k);
        CHECK(fit.gamma[j] == doctest::Approx(expect).epsilon(1e-9));
    }
}

TEST_CASE("pseudoinverse fit agrees with the steady-state marginals") {
    auto m = synth_model(8, 5, 16);
    std::vector<double> p = {0.3, 0.25, 0.2, 0.15, 0.1};
    auto joint = steady_state_joint(m, p);
    auto fit = fit_states_pseudoinverse(m, p);
    for (std::size_t i = 0; i < m.n_states; ++i) {
        double gamma_i = 0.0;
        for (double v : joint.pi[i]) gamma_i += v;
        CHECK(std::abs(fit.gamma[i] - gamma_i) <= 1e-8);
    }
}

TEST_CASE("steady state is a fixed point of the induced chain") {
    auto m = synth_model(8, 5, 16);
    std::vector<double> p = {0.2, 0.2, 0.2, 0.2, 0.2};
    auto joint = steady_state_joint(m, p);
    const auto chain = m.chain_matrix(p);
    for (std::size_t j = 0; j < m.n_states; ++j) {
        double next = 0.0, cur = 0.0;
        for (std::size_t i = 0; i < m.n_states; ++i) {
            double gi = 0.0;
            for (double v : joint.pi[i]) gi += v;
            next += gi * chain[i][j];
        }
        for (double v : joint.pi[j]) cur += v;
        CHECK(std::abs(next - cur) <= 1e-8);
    }
}

TEST_CASE("disconnected chains raise an ergodicity error") {
    TransitionModel m;
    m.quantizer = VoltageQuantizer(2, 1.0);
    m.amplitudes = {1.0};
    m.n_states = 2;
    m.n_amps = 1;
    m.rho = {1.0, 0.0, 0.0, 1.0};  // two absorbing states
    m.reward = {0.0, 0.0};
    CHECK_THROWS_AS(steady_state_joint(m, std::vector<double>{1.0}), ergodicity_error);
    CHECK_THROWS_AS(fit_states_pseudoinverse(m, {1.0}), ergodicity_error);
}

TEST_CASE("constant rewards average to the constant") {
    auto m = synth_model(6, 4, 8);
    for (auto& r : m.reward) r = 3.25e-6;
    std::vector<double> p = {0.25, 0.25, 0.25, 0.25};
    auto joint = steady_state_joint(m, p);
    CHECK(average_power(m, joint) == doctest::Approx(3.25e-6).epsilon(1e-9));
}

TEST_CASE("hand-computed expectation on a 2-state/2-amplitude instance") {
    TransitionModel m;
    m.quantizer = VoltageQuantizer(2, 1.0);
    m.amplitudes = {0.0, 1.0};
    m.n_states = 2;
    m.n_amps = 2;
    m.rho.assign(2 * 2 * 2, 0.25);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) {
            m.rho[(i * 2 + 0) * 2 + k] = 0.5;
            m.rho[(i * 2 + 1) * 2 + k] = 0.5;
        }
    m.reward = {1e-6, 2e-6, 3e-6, 4e-6};  // [i][k]
    JointDistribution pi;
    pi.pi = {{0.1, 0.2}, {0.3, 0.4}};
    const double expect = 0.1 * 1e-6 + 0.2 * 2e-6 + 0.3 * 3e-6 + 0.4 * 4e-6;
    CHECK(average_power(m, pi) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("rollout matches the balance-equation solution (K = 5000)") {
    auto m = synth_model(8, 5, 16);
    std::vector<double> p = {0.3, 0.25, 0.2, 0.15, 0.1};
    auto joint = steady_state_joint(m, p);
    std::vector<double> gamma(m.n_states, 0.0);
    for (std::size_t i = 0; i < m.n_states; ++i)
        for (double v : joint.pi[i]) gamma[i] += v;

    auto roll = monte_carlo_rollout(m, p, 5000, 42);
    CHECK(tv_distance(roll.state_histogram, gamma) <= 0.02);
    const double exact = average_power(m, joint);
    CHECK(std::abs(roll.average_power - exact) / exact <= 0.02);
}

TEST_CASE("deterministic chain with constant reward gives the exact reward") {
    TransitionModel m;
    m.quantizer = VoltageQuantizer(3, 1.0);
    m.amplitudes = {1.0};
    m.n_states = 3;
    m.n_amps = 1;
    m.rho.assign(9, 0.0);
    // cycle 0 -> 1 -> 2 -> 0
    m.rho[(0 * 3 + 1) * 1] = 1.0;
    m.rho[(1 * 3 + 2) * 1] = 1.0;
    m.rho[(2 * 3 + 0) * 1] = 1.0;
    m.reward = {5e-7, 5e-7, 5e-7};
    auto roll = monte_carlo_rollout(m, std::vector<double>{1.0}, 300, 1);
    CHECK(roll.average_power == doctest::Approx(5e-7));
    for (double h : roll.state_histogram) CHECK(h == doctest::Approx(1.0 / 3.0).epsilon(0.01));
}

TEST_CASE("rollouts are reproducible and seed-sensitive") {
    auto m = synth_model(6, 4, 8);
    std::vector<double> p = {0.25, 0.25, 0.25, 0.25};
    auto a = monte_carlo_rollout(m, p, 2000, 9);
    auto b = monte_carlo_rollout(m, p, 2000, 9);
    CHECK(a.average_power == b.average_power);
    CHECK(a.state_histogram == b.state_histogram);

    // two independent seeds agree within 3x the batch std error
    auto c = monte_carlo_rollout(m, p, 2000, 10);
    const double rel = std::abs(a.average_power - c.average_power) /
                       std::max(a.average_power, c.average_power);
    CHECK(rel < 0.05);
}

TEST_CASE("average power is independent of the rollout start state") {
    auto m = synth_model(8, 5, 16);
    std::vector<double> p = {0.3, 0.25, 0.2, 0.15, 0.1};
    auto lo = monte_carlo_rollout(m, p, 5000, 4, 0);
    auto hi = monte_carlo_rollout(m, p, 5000, 4, m.n_states - 1);
    CHECK(std::abs(lo.average_power - hi.average_power) /
              std::max(lo.average_power, hi.average_power) <=
          0.02);
}

TEST_CASE("doubling the state count changes average power by < 2%") {
    std::vector<double> p = {0.3, 0.25, 0.2, 0.15, 0.1};
    auto coarse = synth_model(8, 5, 32);
    auto fine = synth_model(16, 5, 32);
    const double pc = average_power(coarse, steady_state_joint(coarse, p));
    const double pf = average_power(fine, steady_state_joint(fine, p));
    CHECK(std::abs(pc - pf) / pf < 0.02);
}

TEST_CASE("transition model JSON round trip") {
    auto m = synth_model(5, 3, 8);
    const std::string text = m.to_json();
    auto back = TransitionModel::from_json(text);
    CHECK(back.n_states == m.n_states);
    CHECK(back.n_amps == m.n_amps);
    CHECK(back.rho == m.rho);
    CHECK(back.reward == m.reward);
    CHECK(back.quantizer.v_max == m.quantizer.v_max);
}
