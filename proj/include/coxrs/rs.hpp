#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "coxrs/step_function.hpp"
#include "coxrs/survival.hpp"

namespace coxrs {

// Monte-Carlo (or deterministic weighted) representation of the joint measure
// P(t, Delta, y, z | S).  Members are stored sorted by time; members sharing a
// time form a group (deterministic populations put many members on one atom).
class RSPopulation {
public:
    // i.i.d. sampling path: y, z standard normal, (t, Delta) from the survival
    // model with linear predictor S*y.  Weights are uniform.
    static RSPopulation sample(std::size_t m, double S, const HazardSpec& hazard,
                               const CensoringSpec& censoring, std::uint64_t seed);

    // Deterministic path for empirical step hazards: one member per
    // (time atom, Gauss-Hermite y node, Gauss-Hermite z node), weighted by the
    // exact discrete-measure probabilities.  Leftover mass beyond the last
    // atom is carried as a censored member at t = +infinity.
    static RSPopulation quadrature(const StepFunction& hazard_cumhaz,
                                   const StepFunction& censoring_cumhaz,
                                   double S, int y_order, int z_order);

    std::size_t size() const { return static_cast<std::size_t>(t_.size()); }
    double signal_strength() const { return S_; }

    const Eigen::ArrayXd& t() const { return t_; }
    const Eigen::ArrayXd& delta() const { return delta_; }
    const Eigen::ArrayXd& y() const { return y_; }
    const Eigen::ArrayXd& z() const { return z_; }
    const Eigen::ArrayXd& weight() const { return weight_; }
    const Eigen::ArrayXd& xi() const { return xi_; }
    // W(u^2 Lambda(t_l) e^{u^2 Delta_l + v z_l + w y_l}) from the last xi update.
    const Eigen::ArrayXd& lambert() const { return lambert_; }
    // Base cumulative hazard at member times (integration-by-parts w-update).
    const Eigen::ArrayXd& base_cumhaz_at_members() const { return lambda0_member_; }
    // Lambda of the current sweep, at member times.
    const Eigen::ArrayXd& lambda_at_members() const { return lambda_member_; }

    double weighted_mean(const Eigen::ArrayXd& values) const {
        return (values * weight_).sum() / total_weight_;
    }
    double empirical_event_fraction() const { return weighted_mean(delta_); }

    // xi_l = u^2 Delta_l + v z_l + w y_l - W(u^2 Lambda(t_l) e^{...}), using
    // the current Lambda values.
    void update_xi(double u, double v, double w);

    // Population Breslow at the current xi, as cumulative values on the
    // group times.  Jumps with an empty risk set are dropped and counted.
    Eigen::ArrayXd compute_lambda_groups(int* dropped_jumps = nullptr) const;
    void set_lambda_groups(const Eigen::ArrayXd& group_values);
    const Eigen::ArrayXd& lambda_groups() const { return lambda_group_; }
    StepFunction lambda_step_function() const;

    const std::vector<double>& group_times() const { return group_times_; }

private:
    void finalize(const HazardSpec* hazard, const StepFunction* hazard_step);

    double S_ = 0.0;
    double total_weight_ = 0.0;
    Eigen::ArrayXd t_, delta_, y_, z_, weight_, xi_, lambert_, lambda_member_, lambda0_member_;
    Eigen::ArrayXd lambda_group_;
    std::vector<double> group_times_;       // unique times ascending (+inf last if present)
    std::vector<std::size_t> group_start_;  // size = #groups + 1
    std::vector<std::size_t> group_of_member_;
};

struct RSOptions {
    double damping = 0.5;
    double tol = 1e-6;       // relative, on (u,v,w) and on Lambda at group times
    int max_sweeps = 500;
    std::uint64_t seed = 1;
    std::size_t min_population = 10000;
    // false: w <- <y xi> (default); true: the integration-by-parts form
    // w <- S <xi (D - Lambda0(t) e^{S y})> / (1 - <1/(1+W)>), which needs the
    // base hazard and whose Monte-Carlo noise scales like 1/zeta (the
    // denominator equals zeta at the fixed point) -- cross-check only.
    bool w_update_by_parts = false;
};

struct RSResiduals {
    double v_eq = 0.0;       // relative residual of the v equation
    double u_eq = 0.0;       // absolute residual of 1 - zeta = <1/(1+W)>
    double w_eq = 0.0;       // relative residual of the w update used
    double lambda_change = 0.0;
};

struct RSSolution {
    double u_star = 0.0, v_star = 0.0, w_star = 0.0;
    double kappa_star = 0.0;  // w/S (NaN when S = 0)
    StepFunction lambda_rs;
    RSResiduals residuals;
    bool converged = false;
    int sweeps = 0;
    int dropped_jumps = 0;
    RSPopulation population;
};

// Solves 1 - zeta = <1/(1 + W(u^2 Lambda(t_l) e^{u^2 Delta_l + v z_l + w y_l}))>
// for u >= 0, Newton safeguarded by a geometrically grown bisection bracket.
double solve_u(double zeta, double v, double w, const RSPopulation& pop, double u_init = 0.5);

// Damped fixed-point sweep over (xi, Lambda, v, w, u) on a fresh population.
RSSolution solve_rs(double zeta, double S, const HazardSpec& hazard,
                    const CensoringSpec& censoring, std::size_t m,
                    const RSOptions& options = {});

// Same sweep on a caller-supplied population (debias quadrature path); the
// initial (u, v, w) allow warm starts.  w0 < 0 means "use S".  A non-null
// lambda_init seeds Lambda instead of the population Breslow at xi = 0.
RSSolution solve_rs_on_population(double zeta, RSPopulation population,
                                  const RSOptions& options,
                                  double u0 = 0.1, double v0 = 0.1, double w0 = -1.0,
                                  const StepFunction* lambda_init = nullptr);

// Parametric (Lambda0(t), Lambda(t)) curve at the population's event atoms.
struct RSCurve {
    std::vector<double> times;
    std::vector<double> lambda0;
    std::vector<double> lambda_rs;
};
RSCurve rs_predicted_curve(const RSSolution& solution, const HazardSpec& hazard);

}  // namespace coxrs
