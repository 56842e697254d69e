#include "swipt/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace swipt {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kMiFeasSlack = 1e-9;  // feasibility slack on MI, bits

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double l1_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace

void SolverConfig::validate() const {
    if (i_req_bits < 0.0) throw std::invalid_argument("i_req must be nonnegative");
    if (avg_power_budget < 0.0) throw std::invalid_argument("power budget must be nonnegative");
    if (eps_tol_initial <= 0.0) throw std::invalid_argument("eps_tol_initial must be positive");
    if (eps_shrink <= 0.0 || eps_shrink >= 1.0)
        throw std::invalid_argument("eps_shrink must lie in (0, 1)");
    if (inner_term_eps <= 0.0 || outer_term_eps <= 0.0)
        throw std::invalid_argument("termination thresholds must be positive");
    if (m_max == 0 || n_max == 0) throw std::invalid_argument("iteration caps must be >= 1");
    if (fw_max_iters == 0) throw std::invalid_argument("fw_max_iters must be >= 1");
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::LimitPoint: return "limit_point";
        case SolveStatus::Infeasible: return "infeasible";
    }
    return "?";
}

LpResult Polytope::lp_maximize(const std::vector<double>& objective) const {
    // rescale the objective so simplex pivoting tolerances see O(1) numbers
    LpProblem prob;
    const double scale = max_abs(objective);
    prob.c = objective;
    if (scale > 0.0)
        for (double& c : prob.c) c /= scale;
    prob.a_eq = a_eq;
    prob.b_eq = b_eq;
    prob.a_ub = a_ub;
    prob.b_ub = b_ub;
    LpResult res = lp_solve(prob);
    res.objective *= scale;
    return res;
}

namespace {

// concave 1-D maximization on [0,1] by golden section; returns (beta, value)
std::pair<double, double> golden_max(const std::function<double(double)>& phi, int iters) {
    double lo = 0.0, hi = 1.0;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double m1 = hi - gr * (hi - lo), m2 = lo + gr * (hi - lo);
    double f1 = phi(m1), f2 = phi(m2);
    for (int it = 0; it < iters; ++it) {
        if (f1 < f2) {
            lo = m1; m1 = m2; f1 = f2;
            m2 = lo + gr * (hi - lo);
            f2 = phi(m2);
        } else {
            hi = m2; m2 = m1; f2 = f1;
            m1 = hi - gr * (hi - lo);
            f1 = phi(m1);
        }
    }
    const double beta = 0.5 * (lo + hi);
    double fb = phi(beta);
    const double f_one = phi(1.0);
    if (f_one > fb) return {1.0, f_one};
    return {beta, fb};
}

}  // namespace

// Pairwise variant of the conditional-gradient method: the iterate is kept as
// a convex combination of oracle vertices and mass moves from the worst
// active vertex to the LP vertex each step. Same LP oracle and duality-gap
// certificate as the textbook method, but with linear convergence on
// polytopes, which the tight gap tolerances here require.
FwResult solve_concave_over_polytope(const ConcaveObjective& objective, const Polytope& polytope,
                                     std::vector<double> x0, std::size_t max_iters,
                                     double rel_gap) {
    const std::size_t n = x0.size();
    FwResult out;
    std::vector<std::vector<double>> atoms{std::move(x0)};
    std::vector<double> weights{1.0};
    std::vector<double> x = atoms[0];
    double fx = objective.value(x);
    out.x = x;
    out.value = fx;

    auto blend = [&](const std::vector<double>& from, const std::vector<double>& to) {
        return objective.segment ? objective.segment(from, to)
                                 : std::function<double(double)>([&, from, to](double b) {
                                       std::vector<double> y(n);
                                       for (std::size_t i = 0; i < n; ++i)
                                           y[i] = from[i] + b * (to[i] - from[i]);
                                       return objective.value(y);
                                   });
    };

    for (std::size_t t = 0; t < max_iters; ++t) {
        out.iterations = t + 1;
        const std::vector<double> g = objective.gradient(x);
        const LpResult lp = polytope.lp_maximize(g);
        if (lp.status == LpStatus::Infeasible)
            throw numerical_error("conditional gradient: polytope is empty");
        if (lp.status == LpStatus::Unbounded)
            throw numerical_error("conditional gradient: polytope is unbounded");
        const std::vector<double>& v = lp.x;

        double gap = 0.0;
        for (std::size_t i = 0; i < n; ++i) gap += g[i] * (v[i] - x[i]);
        out.gap = gap;
        if (gap <= rel_gap * (std::abs(fx) + 1e-18)) {
            out.converged = true;
            break;
        }

        // away atom: the active vertex the gradient likes least
        std::size_t away = 0;
        double away_score = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < atoms.size(); ++a) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += g[i] * atoms[a][i];
            if (s < away_score) {
                away_score = s;
                away = a;
            }
        }

        // pairwise direction x + alpha (v - atom_away), alpha <= weight_away;
        // degenerate pairs fall back to the plain step towards v
        double d_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) d_norm += std::abs(v[i] - atoms[away][i]);
        bool pairwise = d_norm > 1e-14;
        double alpha_max = pairwise ? weights[away] : 1.0;

        std::vector<double> x1(n);
        if (pairwise)
            for (std::size_t i = 0; i < n; ++i)
                x1[i] = x[i] + alpha_max * (v[i] - atoms[away][i]);
        else
            x1 = v;

        auto [beta, f_new] = golden_max(blend(x, x1), 24);
        if (!pairwise) {
            // keep the classic fallback step available
            const double fb = 2.0 / static_cast<double>(t + 2);
            const double f_fb = blend(x, x1)(fb);
            if (f_fb > f_new) { beta = fb; f_new = f_fb; }
        }
        if (f_new <= fx + 1e-18 * std::abs(fx)) {
            // no ascent along either direction: numerically converged
            if (pairwise) {
                auto [b2, f2] = golden_max(blend(x, v), 24);
                if (f2 > fx + 1e-18 * std::abs(fx)) {
                    for (std::size_t i = 0; i < n; ++i) x[i] += b2 * (v[i] - x[i]);
                    atoms.assign(1, x);
                    weights.assign(1, 1.0);
                    fx = f2;
                    if (fx > out.value) { out.value = fx; out.x = x; }
                    continue;
                }
            }
            out.converged = true;
            break;
        }

        const double alpha = beta * alpha_max;
        if (pairwise) {
            weights[away] -= alpha;
            // find or append the LP vertex among the atoms
            std::size_t hit = atoms.size();
            for (std::size_t a = 0; a < atoms.size(); ++a) {
                double diff = 0.0;
                for (std::size_t i = 0; i < n; ++i) diff += std::abs(atoms[a][i] - v[i]);
                if (diff <= 1e-14) { hit = a; break; }
            }
            if (hit == atoms.size()) {
                atoms.push_back(v);
                weights.push_back(alpha);
            } else {
                weights[hit] += alpha;
            }
            // prune empty atoms and renormalize the iterate from its support
            for (std::size_t a = atoms.size(); a-- > 0;) {
                if (weights[a] <= 1e-15) {
                    atoms.erase(atoms.begin() + static_cast<std::ptrdiff_t>(a));
                    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(a));
                }
            }
            std::fill(x.begin(), x.end(), 0.0);
            for (std::size_t a = 0; a < atoms.size(); ++a)
                for (std::size_t i = 0; i < n; ++i) x[i] += weights[a] * atoms[a][i];
        } else {
            for (std::size_t i = 0; i < n; ++i) x[i] += alpha * (x1[i] - x[i]);
            atoms.assign(1, x);
            weights.assign(1, 1.0);
        }
        fx = f_new;
        if (fx > out.value) {
            out.value = fx;
            out.x = x;
        }
    }
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// Expected mutual information over EH states in perspective form
// ---------------------------------------------------------------------------

// Ibar(pi) = sum_i gamma_i I(pi_i / gamma_i), evaluated from unnormalized rows:
// gamma I = -EI(q)/ln2 + gamma log2 gamma - gamma log2(e s2), q the
// unnormalized mixture of the row.
class ExpectedMiEngine {
public:
    ExpectedMiEngine(const MiEvaluator& ev, std::size_t n_states)
        : ev_(&ev), n_states_(n_states), n_amps_(ev.amplitude_count()),
          noise_bits_(ev.noise_floor_bits()) {}

    double state_term(const std::vector<double>& q_row, double gamma) const {
        if (gamma < 1e-12) return 0.0;
        const double val =
            -ev_->entropy_integral(q_row) / kLn2 + gamma * std::log2(gamma) - gamma * noise_bits_;
        return std::max(0.0, val);
    }

    double value(const std::vector<double>& x) const {
        double total = 0.0;
        std::vector<double> row(n_amps_);
        for (std::size_t i = 0; i < n_states_; ++i) {
            double gamma = 0.0;
            for (std::size_t k = 0; k < n_amps_; ++k) {
                row[k] = x[i * n_amps_ + k];
                gamma += row[k];
            }
            if (gamma < 1e-12) continue;
            total += state_term(ev_->output_density(row), gamma);
        }
        return total;
    }

    std::vector<double> gradient(const std::vector<double>& x) const {
        std::vector<double> grad(x.size(), 0.0);
        std::vector<double> cond(n_amps_);
        for (std::size_t i = 0; i < n_states_; ++i) {
            double gamma = 0.0;
            for (std::size_t k = 0; k < n_amps_; ++k) gamma += x[i * n_amps_ + k];
            if (gamma < 1e-12) {
                std::fill(cond.begin(), cond.end(), 1.0 / static_cast<double>(n_amps_));
            } else {
                for (std::size_t k = 0; k < n_amps_; ++k) cond[k] = x[i * n_amps_ + k] / gamma;
            }
            const double mi = ev_->mutual_information(cond);
            const std::vector<double> gi = ev_->mi_gradient(cond);
            const double gdotp = dot(gi, cond);
            for (std::size_t k = 0; k < n_amps_; ++k)
                grad[i * n_amps_ + k] = mi + gi[k] - gdotp;
        }
        return grad;
    }

    // 1-D restriction along x0 -> x1 from cached per-state mixtures
    std::function<double(double)> segment(const std::vector<double>& x0,
                                          const std::vector<double>& x1) const {
        auto q0 = std::make_shared<std::vector<std::vector<double>>>(n_states_);
        auto dq = std::make_shared<std::vector<std::vector<double>>>(n_states_);
        auto g0 = std::make_shared<std::vector<double>>(n_states_);
        auto dg = std::make_shared<std::vector<double>>(n_states_);
        std::vector<double> row0(n_amps_), row1(n_amps_);
        for (std::size_t i = 0; i < n_states_; ++i) {
            double ga = 0.0, gb = 0.0;
            for (std::size_t k = 0; k < n_amps_; ++k) {
                row0[k] = x0[i * n_amps_ + k];
                row1[k] = x1[i * n_amps_ + k];
                ga += row0[k];
                gb += row1[k];
            }
            (*q0)[i] = ev_->output_density(row0);
            std::vector<double> q1 = ev_->output_density(row1);
            (*dq)[i].resize(q1.size());
            for (std::size_t gidx = 0; gidx < q1.size(); ++gidx)
                (*dq)[i][gidx] = q1[gidx] - (*q0)[i][gidx];
            (*g0)[i] = ga;
            (*dg)[i] = gb - ga;
        }
        const ExpectedMiEngine* self = this;
        return [self, q0, dq, g0, dg](double alpha) {
            double total = 0.0;
            std::vector<double> q;
            for (std::size_t i = 0; i < self->n_states_; ++i) {
                const double gamma = (*g0)[i] + alpha * (*dg)[i];
                if (gamma < 1e-12) continue;
                const auto& a = (*q0)[i];
                const auto& d = (*dq)[i];
                q.resize(a.size());
                for (std::size_t gidx = 0; gidx < a.size(); ++gidx)
                    q[gidx] = std::max(0.0, a[gidx] + alpha * d[gidx]);
                total += self->state_term(q, gamma);
            }
            return total;
        };
    }

private:
    const MiEvaluator* ev_;
    std::size_t n_states_, n_amps_;
    double noise_bits_;
};

// ---------------------------------------------------------------------------
// Lambda-scalarized power maximization under an MI floor
// ---------------------------------------------------------------------------

struct MiCallbacks {
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
    std::function<std::function<double(double)>(const std::vector<double>&,
                                                const std::vector<double>&)>
        segment;
};

struct ScalarizedOut {
    std::vector<double> x;
    double power = 0.0;
    double mi = 0.0;
    double lambda = 0.0;
    double fw_gap = 0.0;
    bool fw_converged = false;
    bool feasible = false;
};

// Maximizes c.x subject to mi(x) >= i_req over the polytope by bisecting the
// MI multiplier; every returned point satisfies the MI floor. The floor
// point, when given, caps regressions: it is returned if the bisection ends
// below its power.
ScalarizedOut scalarized_maximize_power(const Polytope& polytope, const std::vector<double>& c,
                                        const MiCallbacks& mi, double i_req,
                                        const SolverConfig& cfg, const std::vector<double>& x0,
                                        double lambda_hint,
                                        const std::vector<double>* floor_point) {
    ScalarizedOut out;

    auto solve_at = [&](double lambda, const std::vector<double>& warm) {
        ConcaveObjective obj;
        obj.value = [&, lambda](const std::vector<double>& x) {
            return dot(c, x) + lambda * mi.value(x);
        };
        obj.gradient = [&, lambda](const std::vector<double>& x) {
            std::vector<double> g = mi.gradient(x);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = c[i] + lambda * g[i];
            return g;
        };
        if (mi.segment) {
            obj.segment = [&, lambda](const std::vector<double>& a, const std::vector<double>& b) {
                auto mseg = mi.segment(a, b);
                const double ca = dot(c, a);
                const double cd = dot(c, b) - ca;
                return [mseg, ca, cd, lambda](double alpha) {
                    return ca + alpha * cd + lambda * mseg(alpha);
                };
            };
        }
        return solve_concave_over_polytope(obj, polytope, warm, cfg.fw_max_iters, cfg.fw_rel_gap);
    };

    auto consider = [&](const FwResult& fw, double lambda) {
        const double mi_val = mi.value(fw.x);
        const double pw = dot(c, fw.x);
        if (mi_val >= i_req - kMiFeasSlack &&
            (!out.feasible || pw > out.power ||
             (pw == out.power && mi_val < out.mi))) {
            out.x = fw.x;
            out.power = pw;
            out.mi = mi_val;
            out.lambda = lambda;
            out.fw_gap = fw.gap;
            out.fw_converged = fw.converged;
            out.feasible = true;
        }
        return mi_val;
    };

    // lambda = 0: pure power maximization
    FwResult fw0 = solve_at(0.0, x0);
    double mi0 = consider(fw0, 0.0);
    if (mi0 >= i_req - kMiFeasSlack) {
        // MI constraint inactive
        if (floor_point && out.power < dot(c, *floor_point)) {
            out.x = *floor_point;
            out.power = dot(c, *floor_point);
            out.mi = mi.value(*floor_point);
            out.lambda = 0.0;
        }
        return out;
    }

    // bracket: grow lambda until the solve is feasible
    double lambda_lo = 0.0;
    double lambda_hi = lambda_hint > 0.0 ? lambda_hint : std::max(max_abs(c), 1e-15);
    std::vector<double> warm = fw0.x;
    bool bracketed = false;
    for (int d = 0; d < 60; ++d) {
        FwResult fw = solve_at(lambda_hi, warm);
        warm = fw.x;
        const double mi_val = consider(fw, lambda_hi);
        if (mi_val >= i_req - kMiFeasSlack) {
            bracketed = true;
            break;
        }
        lambda_lo = lambda_hi;
        lambda_hi *= 2.0;
    }
    if (!bracketed) return out;  // out.feasible == false -> caller maps to Infeasible

    for (int it = 0; it < 80; ++it) {
        if (out.mi - i_req <= cfg.mi_match_tol_bits) break;
        if (lambda_hi - lambda_lo <= cfg.lambda_bisect_tol * std::max(1.0, lambda_hi)) break;
        const double mid = 0.5 * (lambda_lo + lambda_hi);
        FwResult fw = solve_at(mid, warm);
        warm = fw.x;
        const double mi_val = consider(fw, mid);
        if (mi_val >= i_req - kMiFeasSlack)
            lambda_hi = mid;
        else
            lambda_lo = mid;
    }

    if (floor_point) {
        const double floor_power = dot(c, *floor_point);
        if (!out.feasible || out.power < floor_power) {
            out.x = *floor_point;
            out.power = floor_power;
            out.mi = mi.value(*floor_point);
            out.lambda = lambda_hi;
            out.feasible = true;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Polytope builders
// ---------------------------------------------------------------------------

Polytope scheme1_polytope(const TransitionModel& model, double ap_budget) {
    const std::size_t s = model.n_states, a = model.n_amps, n = s * a;
    Polytope poly;
    poly.a_eq.push_back(std::vector<double>(n, 1.0));
    poly.b_eq.push_back(1.0);
    for (std::size_t j = 0; j < s; ++j) {
        std::vector<double> row(n, 0.0);
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t k = 0; k < a; ++k)
                row[i * a + k] = (i == j ? 1.0 : 0.0) - model.rho_at(i, j, k);
        poly.a_eq.push_back(std::move(row));
        poly.b_eq.push_back(0.0);
    }
    std::vector<double> ap(n, 0.0);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t k = 0; k < a; ++k)
            ap[i * a + k] = model.amplitudes[k] * model.amplitudes[k];
    poly.a_ub.push_back(std::move(ap));
    poly.b_ub.push_back(ap_budget);
    return poly;
}

Polytope simplex_ap_polytope(const std::vector<double>& amplitudes, double ap_budget) {
    const std::size_t n = amplitudes.size();
    Polytope poly;
    poly.a_eq.push_back(std::vector<double>(n, 1.0));
    poly.b_eq.push_back(1.0);
    std::vector<double> ap(n);
    for (std::size_t k = 0; k < n; ++k) ap[k] = amplitudes[k] * amplitudes[k];
    poly.a_ub.push_back(std::move(ap));
    poly.b_ub.push_back(ap_budget);
    return poly;
}

// relaxed-balance rows |sum_k B_jk p_k| <= eps for fixed gamma
void add_relaxed_balance_rows(Polytope& poly, const TransitionModel& model,
                              const std::vector<double>& gamma, double eps) {
    const std::size_t s = model.n_states, a = model.n_amps;
    for (std::size_t j = 0; j < s; ++j) {
        std::vector<double> row(a, 0.0);
        for (std::size_t k = 0; k < a; ++k) {
            double acc = 0.0;
            for (std::size_t i = 0; i < s; ++i)
                acc += gamma[i] * ((i == j ? 1.0 : 0.0) - model.rho_at(i, j, k));
            row[k] = acc;
        }
        std::vector<double> neg(row);
        for (double& v : neg) v = -v;
        poly.a_ub.push_back(std::move(row));
        poly.b_ub.push_back(eps);
        poly.a_ub.push_back(std::move(neg));
        poly.b_ub.push_back(eps);
    }
}

double max_balance_violation(const TransitionModel& model, const std::vector<double>& gamma,
                             const std::vector<double>& pdf) {
    const std::size_t s = model.n_states, a = model.n_amps;
    double worst = 0.0;
    for (std::size_t j = 0; j < s; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            const double gi = gamma[i];
            if (gi == 0.0) continue;
            for (std::size_t k = 0; k < a; ++k)
                acc += gi * pdf[k] * ((i == j ? 1.0 : 0.0) - model.rho_at(i, j, k));
        }
        worst = std::max(worst, std::abs(acc));
    }
    return worst;
}

std::vector<double> delta_pdf(std::size_t n) {
    std::vector<double> p(n, 0.0);
    p[0] = 1.0;
    return p;
}

MiCallbacks single_pdf_callbacks(const MiEvaluator& ev) {
    MiCallbacks cb;
    cb.value = [&ev](const std::vector<double>& p) { return ev.mutual_information(p); };
    cb.gradient = [&ev](const std::vector<double>& p) { return ev.mi_gradient(p); };
    cb.segment = [&ev](const std::vector<double>& a, const std::vector<double>& b) {
        auto seg = std::make_shared<MiEvaluator::Segment>(ev, a, b);
        return [seg](double alpha) { return (*seg)(alpha); };
    };
    return cb;
}

}  // namespace

std::vector<double> memoryless_power_profile(const TransitionModel& model) {
    std::vector<double> profile(model.n_amps, 0.0);
    for (std::size_t k = 0; k < model.n_amps; ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < model.n_states; ++i) acc += model.reward_at(i, k);
        profile[k] = acc / static_cast<double>(model.n_states);
    }
    return profile;
}

double max_mutual_information(const Constellation& cons, const MiEvaluator& ev,
                              const SolverConfig& config, std::vector<double>* argmax) {
    Polytope poly = simplex_ap_polytope(cons.amplitudes, config.avg_power_budget);
    ConcaveObjective obj;
    obj.value = [&ev](const std::vector<double>& p) { return ev.mutual_information(p); };
    obj.gradient = [&ev](const std::vector<double>& p) { return ev.mi_gradient(p); };
    obj.segment = [&ev](const std::vector<double>& a, const std::vector<double>& b) {
        auto seg = std::make_shared<MiEvaluator::Segment>(ev, a, b);
        return [seg](double alpha) { return (*seg)(alpha); };
    };
    FwResult fw = solve_concave_over_polytope(obj, poly, delta_pdf(cons.size()),
                                              std::max<std::size_t>(config.fw_max_iters, 800),
                                              config.fw_rel_gap);
    if (argmax) *argmax = fw.x;
    return fw.value;
}

double max_expected_mutual_information(const TransitionModel& model, const MiEvaluator& ev,
                                       const SolverConfig& config) {
    Polytope poly = scheme1_polytope(model, config.avg_power_budget);
    ExpectedMiEngine engine(ev, model.n_states);
    ConcaveObjective obj;
    obj.value = [&engine](const std::vector<double>& x) { return engine.value(x); };
    obj.gradient = [&engine](const std::vector<double>& x) { return engine.gradient(x); };
    obj.segment = [&engine](const std::vector<double>& a, const std::vector<double>& b) {
        return engine.segment(a, b);
    };

    const auto p0 = delta_pdf(model.n_amps);
    const StateDistribution gamma = fit_states_pseudoinverse(model, p0);
    std::vector<double> x0(model.n_states * model.n_amps, 0.0);
    for (std::size_t i = 0; i < model.n_states; ++i) x0[i * model.n_amps] = gamma.gamma[i];

    FwResult fw = solve_concave_over_polytope(obj, poly, x0,
                                              std::max<std::size_t>(config.fw_max_iters, 800),
                                              config.fw_rel_gap);
    return fw.value;
}

SolveResult solve_scheme1(const TransitionModel& model, const MiEvaluator& ev,
                          const SolverConfig& config,
                          const std::vector<std::vector<double>>* warm_start_pi) {
    config.validate();
    if (ev.amplitude_count() != model.n_amps)
        throw std::invalid_argument("scheme1: evaluator/model amplitude mismatch");
    const std::size_t s = model.n_states, a = model.n_amps, n = s * a;

    SolveResult res;
    if (config.i_req_bits > 0.0) {
        const double max_mi = max_expected_mutual_information(model, ev, config);
        res.trace.push_back({0, 0, "max_mi", 0.0, max_mi, 0.0});
        if (config.i_req_bits > max_mi + 1e-12) {
            res.status = SolveStatus::Infeasible;
            return res;
        }
    }

    Polytope poly = scheme1_polytope(model, config.avg_power_budget);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t k = 0; k < a; ++k) c[i * a + k] = model.reward_at(i, k);

    std::vector<double> x0;
    std::vector<double> warm_flat;
    if (warm_start_pi) {
        warm_flat.reserve(n);
        for (const auto& row : *warm_start_pi)
            warm_flat.insert(warm_flat.end(), row.begin(), row.end());
        x0 = warm_flat;
    } else {
        const auto p0 = delta_pdf(a);
        const StateDistribution gamma = fit_states_pseudoinverse(model, p0);
        x0.assign(n, 0.0);
        for (std::size_t i = 0; i < s; ++i) x0[i * a] = gamma.gamma[i];
    }

    ExpectedMiEngine engine(ev, s);
    MiCallbacks cb;
    cb.value = [&engine](const std::vector<double>& x) { return engine.value(x); };
    cb.gradient = [&engine](const std::vector<double>& x) { return engine.gradient(x); };
    cb.segment = [&engine](const std::vector<double>& p, const std::vector<double>& q) {
        return engine.segment(p, q);
    };

    ScalarizedOut sc = scalarized_maximize_power(poly, c, cb, config.i_req_bits, config, x0, -1.0,
                                                 warm_start_pi ? &warm_flat : nullptr);
    if (!sc.feasible) {
        res.status = SolveStatus::Infeasible;
        return res;
    }

    res.joint.pi.assign(s, std::vector<double>(a, 0.0));
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t k = 0; k < a; ++k) res.joint.pi[i][k] = sc.x[i * a + k];
    double bal = 0.0;
    for (std::size_t j = 1; j <= s; ++j)  // equality rows after the normalization row
        bal = std::max(bal, std::abs(dot(poly.a_eq[j], sc.x)));
    res.joint.balance_residual = bal;
    res.balance_residual = bal;
    res.achieved_power = sc.power;
    res.achieved_mi = sc.mi;
    res.lambda = sc.lambda;
    res.fw_gap = sc.fw_gap;
    const bool slack_ok = sc.lambda <= config.lambda_bisect_tol ||
                          sc.mi - config.i_req_bits <= config.mi_match_tol_bits;
    res.status = (sc.fw_converged && slack_ok) ? SolveStatus::Optimal : SolveStatus::LimitPoint;
    res.trace.push_back({0, 0, "scalarized", sc.power, sc.mi, bal});
    return res;
}

SolveResult solve_scheme3(const std::vector<double>& power_profile, const Constellation& cons,
                          const MiEvaluator& ev, const SolverConfig& config) {
    config.validate();
    if (power_profile.size() != cons.size() || cons.size() != ev.amplitude_count())
        throw std::invalid_argument("scheme3: profile/constellation size mismatch");
    for (double w : power_profile)
        if (w < 0.0) throw std::invalid_argument("scheme3: power profile must be nonnegative");

    SolveResult res;
    if (config.i_req_bits > 0.0) {
        const double max_mi = max_mutual_information(cons, ev, config);
        res.trace.push_back({0, 0, "max_mi", 0.0, max_mi, 0.0});
        if (config.i_req_bits > max_mi + 1e-12) {
            res.status = SolveStatus::Infeasible;
            return res;
        }
    }

    Polytope poly = simplex_ap_polytope(cons.amplitudes, config.avg_power_budget);
    ScalarizedOut sc =
        scalarized_maximize_power(poly, power_profile, single_pdf_callbacks(ev),
                                  config.i_req_bits, config, delta_pdf(cons.size()), -1.0, nullptr);
    if (!sc.feasible) {
        res.status = SolveStatus::Infeasible;
        return res;
    }
    res.amplitude_pdf.p = sc.x;
    res.achieved_power = sc.power;
    res.achieved_mi = sc.mi;
    res.lambda = sc.lambda;
    res.fw_gap = sc.fw_gap;
    const bool slack_ok = sc.lambda <= config.lambda_bisect_tol ||
                          sc.mi - config.i_req_bits <= config.mi_match_tol_bits;
    res.status = (sc.fw_converged && slack_ok) ? SolveStatus::Optimal : SolveStatus::LimitPoint;
    res.trace.push_back({0, 0, "scalarized", sc.power, sc.mi, 0.0});
    return res;
}

SolveResult solve_scheme2(const TransitionModel& model, const MiEvaluator& ev,
                          const SolverConfig& config) {
    config.validate();
    const std::size_t s = model.n_states, a = model.n_amps;

    SolveResult res;
    Constellation cons;
    cons.amplitudes = model.amplitudes;
    cons.r_max = model.amplitudes.back();

    // initial pdf: the memoryless solution at the same MI requirement
    SolveResult warm = solve_scheme3(memoryless_power_profile(model), cons, ev, config);
    if (warm.status == SolveStatus::Infeasible) {
        res.status = SolveStatus::Infeasible;
        res.trace = std::move(warm.trace);
        return res;
    }

    auto true_power = [&](const std::vector<double>& gamma, const std::vector<double>& p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            double row = 0.0;
            for (std::size_t k = 0; k < a; ++k) row += p[k] * model.reward_at(i, k);
            acc += gamma[i] * row;
        }
        return acc;
    };

    std::vector<double> p_cur = warm.amplitude_pdf.p;
    std::vector<double> p_prev_outer;
    double eps = config.eps_tol_initial;
    double lambda_hint = warm.lambda;

    std::vector<double> best_p;
    std::vector<double> best_gamma;
    double best_power = -1.0;
    double best_residual = 0.0;

    bool terminated = false;
    std::size_t outer_done = 0;
    std::size_t inner_worst = 0;
    bool backoff = false;

    MiCallbacks cb = single_pdf_callbacks(ev);

    for (std::size_t m = 1; m <= config.m_max; ++m) {
        StateDistribution fit = fit_states_pseudoinverse(model, p_cur);
        std::vector<double> gamma = fit.gamma;
        const double p_true = true_power(gamma, p_cur);
        res.trace.push_back({m, 0, "outer_init", p_true, ev.mutual_information(p_cur), fit.residual});
        if (p_true > best_power) {
            best_power = p_true;
            best_p = p_cur;
            best_gamma = gamma;
            best_residual = fit.residual;
        }
        if (m >= 2 && l1_diff(p_cur, p_prev_outer) <= config.outer_term_eps) {
            terminated = true;
            break;
        }
        p_prev_outer = p_cur;
        outer_done = m;

        std::vector<double> p_inner = p_cur;
        std::size_t inner_count = 0;
        try {
            for (std::size_t nn = 1; nn <= config.n_max; ++nn) {
                inner_count = nn;
                // Step 1: optimize the amplitude pdf at fixed state distribution
                Polytope poly = simplex_ap_polytope(model.amplitudes, config.avg_power_budget);
                add_relaxed_balance_rows(poly, model, gamma, eps);
                std::vector<double> c(a, 0.0);
                for (std::size_t k = 0; k < a; ++k) {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < s; ++i)
                        acc += gamma[i] * model.reward_at(i, k);
                    c[k] = acc;
                }
                ScalarizedOut sc = scalarized_maximize_power(poly, c, cb, config.i_req_bits,
                                                             config, p_inner, lambda_hint,
                                                             &p_inner);
                if (!sc.feasible) throw numerical_error("scheme2: step-1 subproblem infeasible");
                lambda_hint = sc.lambda > 0.0 ? sc.lambda : lambda_hint;
                std::vector<double> p_new = sc.x;
                res.trace.push_back({m, nn, "step1", true_power(gamma, p_new), sc.mi,
                                     max_balance_violation(model, gamma, p_new)});

                // Step 2: optimize the state distribution at fixed pdf (pure LP)
                Polytope gpoly;
                gpoly.a_eq.push_back(std::vector<double>(s, 1.0));
                gpoly.b_eq.push_back(1.0);
                for (std::size_t j = 0; j < s; ++j) {
                    std::vector<double> row(s, 0.0);
                    for (std::size_t i = 0; i < s; ++i) {
                        double acc = 0.0;
                        for (std::size_t k = 0; k < a; ++k)
                            acc += p_new[k] * ((i == j ? 1.0 : 0.0) - model.rho_at(i, j, k));
                        row[i] = acc;
                    }
                    std::vector<double> neg(row);
                    for (double& v : neg) v = -v;
                    gpoly.a_ub.push_back(std::move(row));
                    gpoly.b_ub.push_back(eps);
                    gpoly.a_ub.push_back(std::move(neg));
                    gpoly.b_ub.push_back(eps);
                }
                std::vector<double> w(s, 0.0);
                for (std::size_t i = 0; i < s; ++i) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < a; ++k) acc += p_new[k] * model.reward_at(i, k);
                    w[i] = acc;
                }
                LpResult glp = gpoly.lp_maximize(w);
                if (glp.status != LpStatus::Optimal)
                    throw numerical_error("scheme2: step-2 subproblem infeasible");
                // keep the previous gamma when the LP vertex is no better
                if (dot(w, glp.x) >= dot(w, gamma)) gamma = glp.x;
                res.trace.push_back({m, nn, "step2", true_power(gamma, p_new),
                                     ev.mutual_information(p_new),
                                     max_balance_violation(model, gamma, p_new)});

                const double moved = l1_diff(p_new, p_inner);
                p_inner = std::move(p_new);
                if (moved <= config.inner_term_eps) break;
            }
        } catch (const numerical_error&) {
            backoff = true;
            res.trace.push_back({m, inner_count, "backoff", best_power, 0.0, eps});
            break;
        }
        inner_worst = std::max(inner_worst, inner_count);
        p_cur = p_inner;
        eps *= config.eps_shrink;
    }

    if (best_p.empty()) {
        res.status = SolveStatus::Infeasible;
        return res;
    }
    res.amplitude_pdf.p = best_p;
    res.states.gamma = best_gamma;
    res.states.residual = best_residual;
    res.joint.pi.assign(s, std::vector<double>(a, 0.0));
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t k = 0; k < a; ++k) res.joint.pi[i][k] = best_gamma[i] * best_p[k];
    res.joint.balance_residual = best_residual;
    res.balance_residual = best_residual;
    res.achieved_power = best_power;
    res.achieved_mi = ev.mutual_information(best_p);
    res.lambda = lambda_hint;
    res.outer_iterations = outer_done;
    res.inner_iterations_max = inner_worst;
    res.terminated_by_tolerance = terminated && !backoff;
    res.status = SolveStatus::LimitPoint;
    return res;
}

double power_of_shared_pdf(const TransitionModel& model, const std::vector<double>& pdf) {
    const StateDistribution fit = fit_states_pseudoinverse(model, pdf);
    double acc = 0.0;
    for (std::size_t i = 0; i < model.n_states; ++i)
        for (std::size_t k = 0; k < model.n_amps; ++k)
            acc += fit.gamma[i] * pdf[k] * model.reward_at(i, k);
    return acc;
}

std::vector<RatePowerPoint> sweep_rate_power(Scheme scheme, const TransitionModel& model,
                                             const MiEvaluator& ev, const SolverConfig& config,
                                             std::size_t points) {
    if (points < 2) throw std::invalid_argument("sweep needs at least 2 points");
    Constellation cons;
    cons.amplitudes = model.amplitudes;
    cons.r_max = model.amplitudes.back();

    const double max_mi = scheme == Scheme::I
                              ? max_expected_mutual_information(model, ev, config)
                              : max_mutual_information(cons, ev, config);

    std::vector<RatePowerPoint> out;
    const std::vector<double> profile = memoryless_power_profile(model);
    for (std::size_t j = 0; j < points; ++j) {
        SolverConfig cfg = config;
        cfg.i_req_bits = max_mi * static_cast<double>(j) / static_cast<double>(points - 1);
        SolveResult r;
        switch (scheme) {
            case Scheme::I: r = solve_scheme1(model, ev, cfg); break;
            case Scheme::II: r = solve_scheme2(model, ev, cfg); break;
            case Scheme::III: r = solve_scheme3(profile, cons, ev, cfg); break;
        }
        if (r.status == SolveStatus::Infeasible) continue;
        out.push_back({cfg.i_req_bits, r.achieved_mi, r.achieved_power, r.status});
    }
    std::sort(out.begin(), out.end(),
              [](const RatePowerPoint& a, const RatePowerPoint& b) { return a.mi_bits < b.mi_bits; });
    return out;
}

}  // namespace swipt
