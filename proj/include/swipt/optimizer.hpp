#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "swipt/channel.hpp"
#include "swipt/lp.hpp"
#include "swipt/mdp.hpp"

namespace swipt {

struct SolverConfig {
    double i_req_bits = 0.0;
    double avg_power_budget = 0.0;  // sigma_{r_x}^2, watts

    double eps_tol_initial = 0.5;   // relaxed-balance tolerance, outer iteration 1
    double eps_shrink = 0.5;        // tolerance decrease factor, in (0,1)
    std::size_t m_max = 15;         // outer iteration cap
    std::size_t n_max = 10;         // inner iteration cap
    double inner_term_eps = 1e-7;   // L1 termination threshold, inner loop
    double outer_term_eps = 1e-7;   // L1 termination threshold, outer loop

    std::size_t fw_max_iters = 400;
    double fw_rel_gap = 1e-7;
    double lambda_bisect_tol = 1e-9;
    double mi_match_tol_bits = 1e-4;

    void validate() const;
};

enum class SolveStatus { Optimal, LimitPoint, Infeasible };

std::string to_string(SolveStatus s);

struct TraceEntry {
    std::size_t outer = 0;  // m (0 outside Algorithm-style loops)
    std::size_t inner = 0;  // n
    std::string stage;
    double objective = 0.0;  // achieved power at this point, watts
    double mi = 0.0;         // bits/symbol
    double residual = 0.0;   // max balance violation
};

struct SolveResult {
    SolveStatus status = SolveStatus::Infeasible;
    JointDistribution joint;      // scheme I; for scheme II the expanded pair
    StateDistribution states;     // scheme II
    AmplitudePdf amplitude_pdf;   // schemes II and III
    double achieved_power = 0.0;  // watts
    double achieved_mi = 0.0;     // bits/symbol
    double balance_residual = 0.0;
    double lambda = 0.0;          // MI multiplier at the returned point
    double fw_gap = 0.0;          // duality gap of the last conditional-gradient solve
    std::size_t inner_iterations_max = 0;  // scheme II: worst inner count
    std::size_t outer_iterations = 0;      // scheme II
    bool terminated_by_tolerance = false;  // scheme II: L1 conditions met within caps
    std::vector<TraceEntry> trace;
};

/// Bounded polytope over nonnegative variables, shared by the LP oracle and
/// the conditional-gradient solver.
struct Polytope {
    std::vector<std::vector<double>> a_eq;
    std::vector<double> b_eq;
    std::vector<std::vector<double>> a_ub;
    std::vector<double> b_ub;

    LpResult lp_maximize(const std::vector<double>& objective) const;
};

struct ConcaveObjective {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
    /// Optional factory for a cheap 1-D restriction phi(alpha) along
    /// x0 -> x1; falls back to value() when absent.
    std::function<std::function<double(double)>(const std::vector<double>&,
                                                const std::vector<double>&)>
        segment;
};

struct FwResult {
    std::vector<double> x;
    double value = 0.0;
    double gap = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Conditional-gradient (Frank-Wolfe) maximization of a concave objective
/// over the polytope: linearize, call the LP oracle, line-search, repeat
/// until the duality gap falls below rel_gap * |F| or max_iters. Returns the
/// best iterate seen. x0 must be feasible.
FwResult solve_concave_over_polytope(const ConcaveObjective& objective, const Polytope& polytope,
                                     std::vector<double> x0, std::size_t max_iters,
                                     double rel_gap);

/// Scheme I: known EH state. Maximizes expected harvested power over the
/// joint state/amplitude pdf subject to expected MI >= i_req, the average
/// power budget, normalization, and the balance equations; solved by
/// lambda-scalarization with conditional-gradient inner solves and bisection
/// on the MI multiplier.
SolveResult solve_scheme1(const TransitionModel& model, const MiEvaluator& ev,
                          const SolverConfig& config,
                          const std::vector<std::vector<double>>* warm_start_pi = nullptr);

/// Scheme II: unknown EH state (alternating optimization with relaxed
/// balance constraints tightened outer iteration by outer iteration).
SolveResult solve_scheme2(const TransitionModel& model, const MiEvaluator& ev,
                          const SolverConfig& config);

/// Scheme III: memoryless limit over a per-amplitude power profile.
SolveResult solve_scheme3(const std::vector<double>& power_profile, const Constellation& cons,
                          const MiEvaluator& ev, const SolverConfig& config);

/// State-averaged power profile used when scheme III runs against a full
/// transition model (rewards averaged over states with uniform weights).
std::vector<double> memoryless_power_profile(const TransitionModel& model);

/// Largest achievable MI over the shared-pdf feasible set (AP + normalization).
double max_mutual_information(const Constellation& cons, const MiEvaluator& ev,
                              const SolverConfig& config, std::vector<double>* argmax = nullptr);

/// Largest achievable expected MI over the scheme-I polytope.
double max_expected_mutual_information(const TransitionModel& model, const MiEvaluator& ev,
                                       const SolverConfig& config);

enum class Scheme { I, II, III };

struct RatePowerPoint {
    double i_req_bits = 0.0;
    double mi_bits = 0.0;
    double power_watts = 0.0;
    SolveStatus status = SolveStatus::Infeasible;
};

/// Sweeps i_req from 0 to the maximum achievable MI in `points` steps and
/// solves the chosen scheme at each point; infeasible points are omitted.
/// The result is sorted by MI.
std::vector<RatePowerPoint> sweep_rate_power(Scheme scheme, const TransitionModel& model,
                                             const MiEvaluator& ev, const SolverConfig& config,
                                             std::size_t points);

/// Power of a shared amplitude pdf evaluated on the full MDP (its true
/// stationary distribution refit first).
double power_of_shared_pdf(const TransitionModel& model, const std::vector<double>& pdf);

}  // namespace swipt
