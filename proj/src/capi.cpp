#include "coxrs.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <stdexcept>
#include <string>

#include "coxrs/cox.hpp"
#include "coxrs/debias.hpp"
#include "coxrs/io.hpp"
#include "coxrs/rs.hpp"
#include "coxrs/survival.hpp"

namespace {

thread_local std::string g_last_error;

int set_error(int code, const char* what) {
    g_last_error = what;
    return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return COXRS_OK;
    } catch (const std::invalid_argument& e) {
        return set_error(COXRS_ERR_INVALID, e.what());
    } catch (const std::domain_error& e) {
        return set_error(COXRS_ERR_DOMAIN, e.what());
    } catch (const std::exception& e) {
        return set_error(COXRS_ERR_RUNTIME, e.what());
    }
}

coxrs::HazardSpec hazard_from_kind(int kind) {
    switch (kind) {
        case COXRS_HAZARD_LOG_LOGISTIC: return coxrs::HazardSpec::log_logistic();
        case COXRS_HAZARD_WEIBULL: return coxrs::HazardSpec::weibull_like();
    }
    throw std::invalid_argument("unknown hazard kind");
}

coxrs::CensoringSpec censoring_from_kind(int kind, double t_max) {
    switch (kind) {
        case COXRS_CENSORING_UNIFORM: return coxrs::CensoringSpec::uniform(t_max);
        case COXRS_CENSORING_NONE: return coxrs::CensoringSpec::none();
    }
    throw std::invalid_argument("unknown censoring kind");
}

void copy_step(const coxrs::StepFunction& step, double* times, double* cumhaz) {
    std::memcpy(times, step.jump_times().data(), step.size() * sizeof(double));
    std::memcpy(cumhaz, step.cumulative_values().data(), step.size() * sizeof(double));
}

}  // namespace

struct coxrs_dataset {
    coxrs::SurvivalDataset data;
};
struct coxrs_fit {
    coxrs::CoxFit fit;
};
struct coxrs_rs_solution {
    coxrs::RSSolution sol;
    coxrs::RSCurve curve;
};
struct coxrs_debias_result {
    coxrs::DebiasResult res;
};

extern "C" {

const char* coxrs_last_error(void) { return g_last_error.c_str(); }
const char* coxrs_version(void) { return "0.1.0"; }

int coxrs_dataset_generate(long n, long p, const double* beta0, int hazard_kind,
                           int censoring_kind, double t_max, uint64_t seed,
                           coxrs_dataset** out) {
    if (!beta0 || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] {
        Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(beta0, p);
        auto handle = new coxrs_dataset{coxrs::generate_dataset(
            n, p, b, hazard_from_kind(hazard_kind),
            censoring_from_kind(censoring_kind, t_max), seed)};
        *out = handle;
    });
}

int coxrs_dataset_load_csv(const char* path, coxrs_dataset** out) {
    if (!path || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] { *out = new coxrs_dataset{coxrs::read_dataset_csv(path)}; });
}

int coxrs_dataset_save_csv(const coxrs_dataset* data, const char* csv_path,
                           const char* meta_path_or_null) {
    if (!data || !csv_path) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] {
        coxrs::write_dataset_csv(data->data, csv_path);
        if (meta_path_or_null) coxrs::write_dataset_meta(data->data, meta_path_or_null);
    });
}

long coxrs_dataset_n(const coxrs_dataset* data) { return data ? data->data.n() : -1; }
long coxrs_dataset_p(const coxrs_dataset* data) { return data ? data->data.p() : -1; }

int coxrs_dataset_times(const coxrs_dataset* data, double* out) {
    if (!data || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    std::memcpy(out, data->data.times.data(), data->data.n() * sizeof(double));
    return COXRS_OK;
}

int coxrs_dataset_events(const coxrs_dataset* data, double* out) {
    if (!data || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    std::memcpy(out, data->data.events.data(), data->data.n() * sizeof(double));
    return COXRS_OK;
}

int coxrs_dataset_covariates(const coxrs_dataset* data, double* out) {
    if (!data || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    const auto& Z = data->data.covariates;
    for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.cols(); ++j) out[i * Z.cols() + j] = Z(i, j);
    return COXRS_OK;
}

int coxrs_dataset_event_fraction(const coxrs_dataset* data, double* out) {
    if (!data || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    *out = data->data.event_fraction();
    return COXRS_OK;
}

void coxrs_dataset_free(coxrs_dataset* data) { delete data; }

int coxrs_expected_event_fraction(double S, int hazard_kind, int censoring_kind,
                                  double t_max, int quad_order, double* out) {
    if (!out) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] {
        const auto rule =
            coxrs::make_quadrature(coxrs::QuadKind::gauss_hermite_probabilist, quad_order);
        *out = coxrs::expected_event_fraction(S, hazard_from_kind(hazard_kind),
                                              censoring_from_kind(censoring_kind, t_max),
                                              rule);
    });
}

int coxrs_cox_fit(const coxrs_dataset* data, int max_iter, double grad_tol,
                  coxrs_fit** out) {
    if (!data || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] {
        coxrs::CoxFitOptions opts;
        if (max_iter > 0) opts.max_iter = max_iter;
        if (grad_tol > 0) opts.grad_tol = grad_tol;
        *out = new coxrs_fit{coxrs::fit_cox(data->data, opts)};
    });
}

int coxrs_fit_beta(const coxrs_fit* fit, double* out) {
    if (!fit || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    std::memcpy(out, fit->fit.beta_hat.data(), fit->fit.beta_hat.size() * sizeof(double));
    return COXRS_OK;
}

int coxrs_fit_converged(const coxrs_fit* fit) { return fit ? fit->fit.converged : -1; }
int coxrs_fit_separation_detected(const coxrs_fit* fit) {
    return fit ? fit->fit.separation_detected : -1;
}
int coxrs_fit_iterations(const coxrs_fit* fit) { return fit ? fit->fit.iterations : -1; }

long coxrs_fit_breslow_size(const coxrs_fit* fit) {
    return fit ? static_cast<long>(fit->fit.breslow.size()) : -1;
}

int coxrs_fit_breslow(const coxrs_fit* fit, double* times, double* cumhaz) {
    if (!fit || !times || !cumhaz) return set_error(COXRS_ERR_NULL, "null pointer");
    copy_step(fit->fit.breslow, times, cumhaz);
    return COXRS_OK;
}

void coxrs_fit_free(coxrs_fit* fit) { delete fit; }

int coxrs_overfit_markers(const coxrs_fit* fit, const coxrs_dataset* data,
                          const double* beta0, double* kappa_hat, double* v_hat,
                          double* second_moment) {
    if (!fit || !data || !beta0) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] {
        const Eigen::Index p = data->data.p();
        Eigen::VectorXd b0 = Eigen::Map<const Eigen::VectorXd>(beta0, p);
        const auto markers = coxrs::overfit_markers(
            fit->fit.beta_hat, b0, Eigen::MatrixXd::Identity(p, p), data->data.covariates);
        if (kappa_hat) *kappa_hat = markers.kappa_hat;
        if (v_hat) *v_hat = markers.v_hat;
        if (second_moment) *second_moment = markers.second_moment;
    });
}

int coxrs_rs_solve(double zeta, double S, int hazard_kind, int censoring_kind,
                   double t_max, uint64_t m, uint64_t seed, double damping,
                   double tol, int max_sweeps, coxrs_rs_solution** out) {
    if (!out) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] {
        coxrs::RSOptions opts;
        if (damping > 0) opts.damping = damping;
        if (tol > 0) opts.tol = tol;
        if (max_sweeps > 0) opts.max_sweeps = max_sweeps;
        opts.seed = seed;
        const auto hazard = hazard_from_kind(hazard_kind);
        auto sol = coxrs::solve_rs(zeta, S, hazard,
                                   censoring_from_kind(censoring_kind, t_max), m, opts);
        auto curve = coxrs::rs_predicted_curve(sol, hazard);
        *out = new coxrs_rs_solution{std::move(sol), std::move(curve)};
    });
}

int coxrs_rs_values(const coxrs_rs_solution* sol, double* u, double* v, double* w,
                    double* kappa) {
    if (!sol) return set_error(COXRS_ERR_NULL, "null pointer");
    if (u) *u = sol->sol.u_star;
    if (v) *v = sol->sol.v_star;
    if (w) *w = sol->sol.w_star;
    if (kappa) *kappa = sol->sol.kappa_star;
    return COXRS_OK;
}

int coxrs_rs_converged(const coxrs_rs_solution* sol) {
    return sol ? sol->sol.converged : -1;
}

int coxrs_rs_residual(const coxrs_rs_solution* sol, double* max_residual) {
    if (!sol || !max_residual) return set_error(COXRS_ERR_NULL, "null pointer");
    const auto& r = sol->sol.residuals;
    *max_residual = std::max({r.v_eq, r.u_eq, r.w_eq, r.lambda_change});
    return COXRS_OK;
}

long coxrs_rs_curve_size(const coxrs_rs_solution* sol) {
    return sol ? static_cast<long>(sol->curve.times.size()) : -1;
}

int coxrs_rs_curve(const coxrs_rs_solution* sol, double* t, double* lambda0,
                   double* lambda_rs) {
    if (!sol || !t || !lambda0 || !lambda_rs)
        return set_error(COXRS_ERR_NULL, "null pointer");
    const auto& c = sol->curve;
    std::memcpy(t, c.times.data(), c.times.size() * sizeof(double));
    std::memcpy(lambda0, c.lambda0.data(), c.lambda0.size() * sizeof(double));
    std::memcpy(lambda_rs, c.lambda_rs.data(), c.lambda_rs.size() * sizeof(double));
    return COXRS_OK;
}

void coxrs_rs_free(coxrs_rs_solution* sol) { delete sol; }

int coxrs_debias(const coxrs_dataset* data, const coxrs_fit* fit, double s_lo,
                 double s_hi, double s_tol, int y_order, int z_order,
                 double rs_damping, double rs_tol, int rs_max_sweeps,
                 coxrs_debias_result** out) {
    if (!data || !fit || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    return guarded([&] {
        coxrs::DebiasOptions opts;
        if (s_lo > 0) opts.s_lo = s_lo;
        if (s_hi > 0) opts.s_hi = s_hi;
        if (s_tol > 0) opts.s_tol = s_tol;
        if (y_order > 0) opts.y_order = y_order;
        if (z_order > 0) opts.z_order = z_order;
        if (rs_damping > 0) opts.rs.damping = rs_damping;
        if (rs_tol > 0) opts.rs.tol = rs_tol;
        if (rs_max_sweeps > 0) opts.rs.max_sweeps = rs_max_sweeps;
        *out = new coxrs_debias_result{coxrs::debias_solve(data->data, fit->fit, opts)};
    });
}

int coxrs_debias_values(const coxrs_debias_result* res, double* S_star, double* u,
                        double* v, double* w, double* kappa, double* predicted_sd,
                        int* s_at_lower_edge) {
    if (!res) return set_error(COXRS_ERR_NULL, "null pointer");
    if (S_star) *S_star = res->res.S_star;
    if (u) *u = res->res.u_star;
    if (v) *v = res->res.v_star;
    if (w) *w = res->res.w_star;
    if (kappa) *kappa = res->res.kappa_star;
    if (predicted_sd) *predicted_sd = res->res.predicted_sd;
    if (s_at_lower_edge) *s_at_lower_edge = res->res.s_at_lower_edge ? 1 : 0;
    return COXRS_OK;
}

int coxrs_debias_beta_tilde(const coxrs_debias_result* res, double* out) {
    if (!res || !out) return set_error(COXRS_ERR_NULL, "null pointer");
    std::memcpy(out, res->res.beta_tilde.data(), res->res.beta_tilde.size() * sizeof(double));
    return COXRS_OK;
}

long coxrs_debias_lambda_tilde_size(const coxrs_debias_result* res) {
    return res ? static_cast<long>(res->res.lambda_tilde.size()) : -1;
}

int coxrs_debias_lambda_tilde(const coxrs_debias_result* res, double* times,
                              double* cumhaz) {
    if (!res || !times || !cumhaz) return set_error(COXRS_ERR_NULL, "null pointer");
    copy_step(res->res.lambda_tilde, times, cumhaz);
    return COXRS_OK;
}

long coxrs_debias_lambda_c_size(const coxrs_debias_result* res) {
    return res ? static_cast<long>(res->res.lambda_c_tilde.size()) : -1;
}

int coxrs_debias_lambda_c(const coxrs_debias_result* res, double* times,
                          double* cumhaz) {
    if (!res || !times || !cumhaz) return set_error(COXRS_ERR_NULL, "null pointer");
    copy_step(res->res.lambda_c_tilde, times, cumhaz);
    return COXRS_OK;
}

long coxrs_debias_trace_size(const coxrs_debias_result* res) {
    return res ? static_cast<long>(res->res.trace.size()) : -1;
}

int coxrs_debias_trace(const coxrs_debias_result* res, double* S, double* residual) {
    if (!res || !S || !residual) return set_error(COXRS_ERR_NULL, "null pointer");
    for (std::size_t i = 0; i < res->res.trace.size(); ++i) {
        S[i] = res->res.trace[i].S;
        residual[i] = res->res.trace[i].residual;
    }
    return COXRS_OK;
}

void coxrs_debias_free(coxrs_debias_result* res) { delete res; }

}  // extern "C"
