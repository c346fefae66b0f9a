#include "coxrs/cox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace coxrs {

namespace {

void check_inputs(const Eigen::VectorXd& beta, const SurvivalDataset& data) {
    if (beta.size() != data.p())
        throw std::invalid_argument("cox: beta size does not match covariates");
    if (!beta.allFinite() || !data.covariates.allFinite() || !data.times.allFinite())
        throw std::domain_error("cox: non-finite covariate or beta entries");
}

// Indices sorted by (time ascending, events first on ties): deterministic
// risk sets for tied times.
std::vector<Eigen::Index> time_order(const SurvivalDataset& data) {
    std::vector<Eigen::Index> order(data.n());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (data.times(a) != data.times(b)) return data.times(a) < data.times(b);
        return data.events(a) > data.events(b);
    });
    return order;
}

// One pass over the risk sets.  Any of ll/grad/hess may be null.  The
// suffix sums use exp(eta - max(eta)) for stabilization.
void risk_set_sweep(const Eigen::VectorXd& beta, const SurvivalDataset& data,
                    double* ll, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
    const Eigen::Index n = data.n(), p = data.p();
    const Eigen::VectorXd eta = data.covariates * beta;
    const double M = eta.maxCoeff();
    const double logn = std::log(static_cast<double>(n));
    const auto order = time_order(data);

    if (ll) *ll = 0.0;
    if (grad) grad->setZero(p);
    if (hess) hess->setZero(p, p);

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2;
    if (hess) s2.setZero(p, p);

    std::ptrdiff_t i = n - 1;
    while (i >= 0) {
        const double t = data.times(order[i]);
        // Add the whole tied group to the suffix first (theta(0) = 1).
        std::ptrdiff_t g = i;
        while (g >= 0 && data.times(order[g]) == t) {
            const Eigen::Index j = order[g];
            const double w = std::exp(eta(j) - M);
            s0 += w;
            if (grad) s1.noalias() += w * data.covariates.row(j).transpose();
            if (hess)
                s2.noalias() += w * data.covariates.row(j).transpose() * data.covariates.row(j);
            --g;
        }
        for (std::ptrdiff_t k = i; k > g; --k) {
            const Eigen::Index j = order[k];
            if (data.events(j) == 0.0) continue;
            if (ll) *ll += eta(j) - (M + std::log(s0) - logn);
            if (grad)
                grad->noalias() += data.covariates.row(j).transpose() - s1 / s0;
            if (hess) {
                const Eigen::VectorXd zbar = s1 / s0;
                hess->noalias() -= s2 / s0;
                hess->noalias() += zbar * zbar.transpose();
            }
        }
        i = g;
    }
}

}  // namespace

double partial_log_likelihood(const Eigen::VectorXd& beta, const SurvivalDataset& data) {
    check_inputs(beta, data);
    double ll;
    risk_set_sweep(beta, data, &ll, nullptr, nullptr);
    return ll;
}

void plik_gradient_hessian(const Eigen::VectorXd& beta, const SurvivalDataset& data,
                           Eigen::VectorXd& grad, Eigen::MatrixXd& hessian) {
    check_inputs(beta, data);
    risk_set_sweep(beta, data, nullptr, &grad, &hessian);
}

StepFunction breslow(const SurvivalDataset& data, const Eigen::VectorXd& beta) {
    check_inputs(beta, data);
    const Eigen::Index n = data.n();
    const Eigen::VectorXd eta = data.covariates * beta;
    const double M = eta.maxCoeff();
    const auto order = time_order(data);

    std::vector<std::pair<double, double>> jumps;
    double s0 = 0.0;
    std::ptrdiff_t i = n - 1;
    while (i >= 0) {
        const double t = data.times(order[i]);
        std::ptrdiff_t g = i;
        double events_here = 0.0;
        while (g >= 0 && data.times(order[g]) == t) {
            s0 += std::exp(eta(order[g]) - M);
            events_here += data.events(order[g]);
            --g;
        }
        if (events_here > 0.0) jumps.emplace_back(t, events_here / s0 * std::exp(-M));
        i = g;
    }
    return StepFunction::from_increments(std::move(jumps));
}

StepFunction nelson_aalen(const SurvivalDataset& data) {
    return breslow(data, Eigen::VectorXd::Zero(data.p()));
}

CoxFit fit_cox(const SurvivalDataset& data, const CoxFitOptions& options) {
    if (data.events.sum() == 0.0)
        throw std::runtime_error("fit_cox: dataset has no events");

    const Eigen::Index p = data.p();
    CoxFit fit;
    fit.beta_hat = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd grad(p);
    Eigen::MatrixXd hess(p, p);

    double ll = partial_log_likelihood(fit.beta_hat, data);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        fit.iterations = iter;
        risk_set_sweep(fit.beta_hat, data, nullptr, &grad, &hess);
        fit.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
        if (fit.final_gradient_norm <= options.grad_tol) {
            fit.converged = true;
            break;
        }

        Eigen::MatrixXd neg_hess = -hess;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(neg_hess);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
            neg_hess.diagonal().array() += 1e-10;
            ldlt.compute(neg_hess);
        }
        Eigen::VectorXd step = ldlt.solve(grad);

        // Backtracking: halve until the likelihood does not decrease.  The
        // slack covers float rounding of ll (magnitude ~n); without it the
        // final Newton steps are rejected and the gradient stalls just above
        // the tolerance.
        const double slack = 1e-12 * (std::abs(ll) + 1.0);
        double scale = 1.0;
        double ll_new = -std::numeric_limits<double>::infinity();
        Eigen::VectorXd beta_new;
        for (int h = 0; h <= options.max_halvings; ++h) {
            beta_new = fit.beta_hat + scale * step;
            ll_new = partial_log_likelihood(beta_new, data);
            if (std::isfinite(ll_new) && ll_new >= ll - slack) break;
            scale *= 0.5;
        }
        if (!std::isfinite(ll_new))
            throw std::runtime_error("fit_cox: non-finite likelihood at iteration " +
                                     std::to_string(iter));
        fit.beta_hat = beta_new;
        ll = ll_new;

        if (fit.beta_hat.norm() > options.divergence_radius) {
            fit.separation_detected = true;
            break;
        }
    }
    if (!fit.converged && !fit.separation_detected) {
        risk_set_sweep(fit.beta_hat, data, nullptr, &grad, nullptr);
        fit.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
        fit.converged = fit.final_gradient_norm <= options.grad_tol;
        if (fit.converged) fit.iterations = options.max_iter;
    }
    fit.breslow = breslow(data, fit.beta_hat);
    return fit;
}

OverfitMarkers overfit_markers(const Eigen::VectorXd& beta_hat,
                               const Eigen::VectorXd& beta0,
                               const Eigen::MatrixXd& covariance,
                               const Eigen::MatrixXd& covariates) {
    if (beta_hat.size() != beta0.size() || covariance.rows() != beta0.size() ||
        covariance.cols() != beta0.size())
        throw std::invalid_argument("overfit_markers: dimension mismatch");
    const Eigen::VectorXd A_beta0 = covariance * beta0;
    const double denom = beta0.dot(A_beta0);
    if (!(denom > 0.0))
        throw std::domain_error("overfit_markers: beta0 . A beta0 must be positive");

    OverfitMarkers m;
    m.kappa_hat = beta_hat.dot(A_beta0) / denom;
    const double v2 = beta_hat.dot(covariance * beta_hat) - m.kappa_hat * m.kappa_hat * denom;
    m.v_hat = std::sqrt(std::max(0.0, v2));
    const Eigen::VectorXd scores = covariates * beta_hat;
    m.second_moment = scores.squaredNorm() / static_cast<double>(covariates.rows());
    return m;
}

}  // namespace coxrs
