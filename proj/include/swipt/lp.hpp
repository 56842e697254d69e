#pragma once

#include <vector>

namespace swipt {

/**
 * Dense linear program over nonnegative variables:
 *
 *   maximize   c . x
 *   subject to a_eq x  = b_eq
 *              a_ub x <= b_ub
 *              x >= 0
 *
 * Solved by a two-phase primal simplex with Bland's rule, so the returned
 * vertex is deterministic: among equally good pivots the lowest variable
 * index wins. Redundant equality rows are tolerated.
 */
struct LpProblem {
    std::vector<double> c;
    std::vector<std::vector<double>> a_eq;
    std::vector<double> b_eq;
    std::vector<std::vector<double>> a_ub;
    std::vector<double> b_ub;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective = 0.0;
};

LpResult lp_solve(const LpProblem& prob);

}  // namespace swipt
