#pragma once

#include <Eigen/Core>

#include "coxrs/step_function.hpp"
#include "coxrs/survival.hpp"

namespace coxrs {

struct CoxFitOptions {
    int max_iter = 100;
    double grad_tol = 1e-8;         // sup-norm of the gradient
    double divergence_radius = 50;  // |beta| beyond this flags separation
    int max_halvings = 30;
};

struct CoxFit {
    Eigen::VectorXd beta_hat;
    StepFunction breslow;
    bool converged = false;
    bool separation_detected = false;
    int iterations = 0;
    double final_gradient_norm = 0.0;
};

struct OverfitMarkers {
    double kappa_hat = 0.0;
    double v_hat = 0.0;
    double second_moment = 0.0;  // (1/n) sum (beta_hat . z_i)^2
};

// Log of Cox's partial likelihood, with the subject at risk at its own event
// time and log-sum-exp stabilization.
double partial_log_likelihood(const Eigen::VectorXd& beta, const SurvivalDataset& data);

void plik_gradient_hessian(const Eigen::VectorXd& beta, const SurvivalDataset& data,
                           Eigen::VectorXd& grad, Eigen::MatrixXd& hessian);

// Damped Newton ascent from beta = 0.
CoxFit fit_cox(const SurvivalDataset& data, const CoxFitOptions& options = {});

// Breslow cumulative hazard at the given beta; Nelson-Aalen when beta = 0.
StepFunction breslow(const SurvivalDataset& data, const Eigen::VectorXd& beta);
StepFunction nelson_aalen(const SurvivalDataset& data);

OverfitMarkers overfit_markers(const Eigen::VectorXd& beta_hat,
                               const Eigen::VectorXd& beta0,
                               const Eigen::MatrixXd& covariance,
                               const Eigen::MatrixXd& covariates);

}  // namespace coxrs
