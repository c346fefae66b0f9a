#pragma once

#include <Eigen/Core>
#include <vector>

#include "coxrs/cox.hpp"
#include "coxrs/rs.hpp"
#include "coxrs/step_function.hpp"
#include "coxrs/survival.hpp"

namespace coxrs {

// Unbiased ML estimator of the censoring cumulative hazard: jumps
// (1 - Delta_i)/R_i at censored times, with R_i the at-risk count.
StepFunction censoring_cumhaz(const SurvivalDataset& data);

struct FixedPointOptions {
    double damping = 0.5;
    double tol = 1e-9;   // sup-norm relative change at event times
    int max_iter = 2000; // the damped map contracts slowly at large S
    int quad_order = kDefaultQuadOrder;
};

// Marginal-likelihood fixed point for the base cumulative hazard at signal
// strength S; reduces to Nelson-Aalen at S = 0.  An optional warm start
// (values at the data's event times) replaces the Nelson-Aalen initializer.
// When history is given it receives the relative change of each iteration.
StepFunction frailty_cumhaz_fixed_point(const SurvivalDataset& data, double S,
                                        const FixedPointOptions& options = {},
                                        const StepFunction* warm_start = nullptr,
                                        std::vector<double>* history = nullptr);

enum class DebiasPath { quadrature, population };

struct DebiasOptions {
    double s_lo = 0.05, s_hi = 5.0;
    double s_tol = 1e-3;
    DebiasPath path = DebiasPath::quadrature;
    int y_order = 16, z_order = 12;     // quadrature path
    std::size_t m = 100000;             // population path
    std::uint64_t seed = 1;
    RSOptions rs;
    FixedPointOptions fixed_point;
    // Alternative S equation when the covariate covariance A is known:
    // match beta_hat . A beta_hat against w^2 + v^2 instead of the
    // observable (1/n) sum (beta_hat . z_i)^2 against (1-zeta) v^2 + w^2.
    bool use_known_covariance = false;
    Eigen::MatrixXd known_covariance;  // empty means identity
};

struct DebiasTraceEntry {
    double S;
    double residual;   // (1-zeta) v^2 + w^2 - observed second moment
    double u, v, w;
    int sweeps;
    bool converged;
};

struct DebiasResult {
    double S_star = 0.0;
    double u_star = 0.0, v_star = 0.0, w_star = 0.0;
    double kappa_star = 0.0;
    Eigen::VectorXd beta_tilde;        // beta_hat / kappa_star
    StepFunction lambda_tilde;         // fixed point at S_star
    StepFunction lambda_c_tilde;
    double predicted_sd = 0.0;         // v_star / (kappa_star * sqrt(p))
    bool s_at_lower_edge = false;      // S_star pinned at the bracket's lower end
    std::vector<DebiasTraceEntry> trace;
};

// Outer scalar root-find on S wrapping the inner RS solve on the empirical
// hazards, matching the observable (1/n) sum (beta_hat . z_i)^2.
DebiasResult debias_solve(const SurvivalDataset& data, const CoxFit& fit,
                          const DebiasOptions& options = {});

// The two candidate de-biased cumulative hazards: the marginal-likelihood
// fixed point at S_star, and the Breslow estimator rescaled by 1/kappa_star.
struct DebiasedCumhaz {
    StepFunction fixed_point;
    StepFunction rescaled_breslow;
};
DebiasedCumhaz debiased_cumhaz(const DebiasResult& result, const CoxFit& fit);

}  // namespace coxrs
