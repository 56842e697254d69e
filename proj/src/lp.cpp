#include "swipt/lp.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>

namespace swipt {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kCostTol = 1e-10;
constexpr double kFeasTol = 1e-8;

// Dense tableau simplex. Columns: structural vars, then slacks/surpluses,
// then artificials; last column is the RHS.
struct Tableau {
    std::size_t rows = 0, cols = 0;  // cols excludes RHS
    std::vector<double> t;           // (rows) x (cols+1), row-major
    std::vector<std::size_t> basis;  // basic variable index per row

    double& at(std::size_t r, std::size_t c) { return t[r * (cols + 1) + c]; }
    double at(std::size_t r, std::size_t c) const { return t[r * (cols + 1) + c]; }
    double& rhs(std::size_t r) { return t[r * (cols + 1) + cols]; }
    double rhs(std::size_t r) const { return t[r * (cols + 1) + cols]; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double p = at(pr, pc);
        const double inv = 1.0 / p;
        for (std::size_t c = 0; c <= cols; ++c) at(pr, c) *= inv;
        at(pr, pc) = 1.0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c <= cols; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
        }
        basis[pr] = pc;
    }
};

// One simplex phase maximizing obj (length cols). Bland's rule throughout.
// Returns false if unbounded.
bool run_simplex(Tableau& tab, const std::vector<double>& obj, std::size_t allowed_cols) {
    const std::size_t m = tab.rows;
    std::vector<double> red(allowed_cols);
    for (;;) {
        // reduced costs: obj_j - sum_r obj_basis(r) * a_rj
        for (std::size_t j = 0; j < allowed_cols; ++j) red[j] = obj[j];
        for (std::size_t r = 0; r < m; ++r) {
            const double cb = obj[tab.basis[r]];
            if (cb == 0.0) continue;
            for (std::size_t j = 0; j < allowed_cols; ++j) red[j] -= cb * tab.at(r, j);
        }
        std::size_t enter = allowed_cols;
        for (std::size_t j = 0; j < allowed_cols; ++j) {
            bool basic = false;
            for (std::size_t r = 0; r < m; ++r)
                if (tab.basis[r] == j) { basic = true; break; }
            if (!basic && red[j] > kCostTol) { enter = j; break; }
        }
        if (enter == allowed_cols) return true;  // optimal

        std::size_t leave = m;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < m; ++r) {
            const double a = tab.at(r, enter);
            if (a > kPivotTol) {
                const double ratio = tab.rhs(r) / a;
                if (ratio < best_ratio - 1e-15 ||
                    (std::abs(ratio - best_ratio) <= 1e-15 &&
                     (leave == m || tab.basis[r] < tab.basis[leave]))) {
                    best_ratio = ratio;
                    leave = r;
                }
            }
        }
        if (leave == m) return false;  // unbounded direction
        tab.pivot(leave, enter);
    }
}

}  // namespace

LpResult lp_solve(const LpProblem& prob) {
    const std::size_t n = prob.c.size();
    const std::size_t m_ub = prob.a_ub.size();
    const std::size_t m_eq = prob.a_eq.size();
    const std::size_t m = m_ub + m_eq;
    if (prob.b_ub.size() != m_ub || prob.b_eq.size() != m_eq)
        throw std::invalid_argument("lp_solve: constraint/RHS size mismatch");

    LpResult res;
    if (m == 0) {
        res.x.assign(n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            if (prob.c[j] > kCostTol) { res.status = LpStatus::Unbounded; return res; }
        res.status = LpStatus::Optimal;
        res.objective = 0.0;
        return res;
    }

    // Column layout: [structural n][one slack/surplus per ub row][artificials].
    // Rows are normalized to nonnegative RHS; '<=' rows with negative RHS
    // become '>=' and need an artificial, as do equality rows.
    std::vector<int> row_needs_art(m, 0);
    std::vector<double> sign(m, 1.0);
    std::size_t n_art = 0;
    for (std::size_t i = 0; i < m_ub; ++i) {
        if (prob.b_ub[i] < 0.0) { sign[i] = -1.0; row_needs_art[i] = 1; ++n_art; }
    }
    for (std::size_t i = 0; i < m_eq; ++i) {
        if (prob.b_eq[i] < 0.0) sign[m_ub + i] = -1.0;
        row_needs_art[m_ub + i] = 1;
        ++n_art;
    }

    const std::size_t n_slack = m_ub;
    const std::size_t cols = n + n_slack + n_art;
    Tableau tab;
    tab.rows = m;
    tab.cols = cols;
    tab.t.assign(m * (cols + 1), 0.0);
    tab.basis.assign(m, 0);

    std::size_t art_at = n + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
        const bool is_ub = i < m_ub;
        const std::vector<double>& row = is_ub ? prob.a_ub[i] : prob.a_eq[i - m_ub];
        const double b = is_ub ? prob.b_ub[i] : prob.b_eq[i - m_ub];
        if (row.size() != n) throw std::invalid_argument("lp_solve: row length mismatch");
        for (std::size_t j = 0; j < n; ++j) tab.at(i, j) = sign[i] * row[j];
        tab.rhs(i) = sign[i] * b;
        if (is_ub) tab.at(i, n + i) = sign[i];  // slack (or surplus when flipped)
        if (row_needs_art[i]) {
            tab.at(i, art_at) = 1.0;
            tab.basis[i] = art_at;
            ++art_at;
        } else {
            tab.basis[i] = n + i;  // slack basic
        }
    }

    // Phase 1: maximize -(sum of artificials).
    if (n_art > 0) {
        std::vector<double> obj1(cols, 0.0);
        for (std::size_t j = n + n_slack; j < cols; ++j) obj1[j] = -1.0;
        if (!run_simplex(tab, obj1, cols))
            throw std::runtime_error("lp_solve: phase 1 unbounded (internal error)");
        double art_sum = 0.0;
        for (std::size_t r = 0; r < m; ++r)
            if (tab.basis[r] >= n + n_slack) art_sum += tab.rhs(r);
        if (art_sum > kFeasTol) {
            res.status = LpStatus::Infeasible;
            return res;
        }
        // Pivot out any artificial stuck basic at zero; rows with no real
        // coefficients are redundant and left inert.
        for (std::size_t r = 0; r < m; ++r) {
            if (tab.basis[r] < n + n_slack) continue;
            std::size_t pc = cols;
            for (std::size_t j = 0; j < n + n_slack; ++j) {
                if (std::abs(tab.at(r, j)) > 1e-9) { pc = j; break; }
            }
            if (pc != cols) tab.pivot(r, pc);
        }
    }

    // Phase 2: artificials excluded from entering.
    std::vector<double> obj2(cols, 0.0);
    for (std::size_t j = 0; j < n; ++j) obj2[j] = prob.c[j];
    if (!run_simplex(tab, obj2, n + n_slack)) {
        res.status = LpStatus::Unbounded;
        return res;
    }

    res.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        if (tab.basis[r] < n) res.x[tab.basis[r]] = std::max(0.0, tab.rhs(r));
    res.objective = 0.0;
    for (std::size_t j = 0; j < n; ++j) res.objective += prob.c[j] * res.x[j];
    res.status = LpStatus::Optimal;
    return res;
}

}  // namespace swipt
