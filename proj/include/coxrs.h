/* C API for the coxrs shared library: survival-data simulation, Cox partial
 * likelihood fitting, replica-symmetric order-parameter solving, and
 * overfitting de-biasing, in the proportional regime p/n fixed.
 *
 * All functions return a status code (COXRS_OK on success) unless documented
 * otherwise; coxrs_last_error() describes the most recent failure on the
 * calling thread.  Objects are opaque handles released with the matching
 * _free function.  Handles are immutable after creation and safe to share
 * across threads.
 */
#ifndef COXRS_H
#define COXRS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define COXRS_OK 0
#define COXRS_ERR_INVALID 1  /* bad argument */
#define COXRS_ERR_DOMAIN 2   /* input outside the mathematical domain */
#define COXRS_ERR_RUNTIME 3  /* solver or I/O failure */
#define COXRS_ERR_NULL 4     /* null handle or output pointer */

#define COXRS_HAZARD_LOG_LOGISTIC 0 /* Lambda0(t) = log(1 + t^2) */
#define COXRS_HAZARD_WEIBULL 1      /* Lambda0(t) = t^2 / 2      */

#define COXRS_CENSORING_UNIFORM 0 /* uniform on [0, t_max] */
#define COXRS_CENSORING_NONE 1

typedef struct coxrs_dataset coxrs_dataset;
typedef struct coxrs_fit coxrs_fit;
typedef struct coxrs_rs_solution coxrs_rs_solution;
typedef struct coxrs_debias_result coxrs_debias_result;

const char* coxrs_last_error(void);
const char* coxrs_version(void);

/* ---- datasets ---- */

int coxrs_dataset_generate(long n, long p, const double* beta0, int hazard_kind,
                           int censoring_kind, double t_max, uint64_t seed,
                           coxrs_dataset** out);
int coxrs_dataset_load_csv(const char* path, coxrs_dataset** out);
int coxrs_dataset_save_csv(const coxrs_dataset* data, const char* csv_path,
                           const char* meta_path_or_null);
long coxrs_dataset_n(const coxrs_dataset* data);
long coxrs_dataset_p(const coxrs_dataset* data);
int coxrs_dataset_times(const coxrs_dataset* data, double* out);
int coxrs_dataset_events(const coxrs_dataset* data, double* out);
/* row-major n x p */
int coxrs_dataset_covariates(const coxrs_dataset* data, double* out);
int coxrs_dataset_event_fraction(const coxrs_dataset* data, double* out);
void coxrs_dataset_free(coxrs_dataset* data);

/* <Delta> by nested quadrature; censoring_kind COXRS_CENSORING_NONE gives 1. */
int coxrs_expected_event_fraction(double S, int hazard_kind, int censoring_kind,
                                  double t_max, int quad_order, double* out);

/* ---- Cox maximum partial likelihood ---- */

int coxrs_cox_fit(const coxrs_dataset* data, int max_iter, double grad_tol,
                  coxrs_fit** out);
int coxrs_fit_beta(const coxrs_fit* fit, double* out);
int coxrs_fit_converged(const coxrs_fit* fit);          /* 0/1, -1 on null */
int coxrs_fit_separation_detected(const coxrs_fit* fit);/* 0/1, -1 on null */
int coxrs_fit_iterations(const coxrs_fit* fit);
long coxrs_fit_breslow_size(const coxrs_fit* fit);
int coxrs_fit_breslow(const coxrs_fit* fit, double* times, double* cumhaz);
void coxrs_fit_free(coxrs_fit* fit);

/* Observable overfitting markers against a known beta0, identity covariance. */
int coxrs_overfit_markers(const coxrs_fit* fit, const coxrs_dataset* data,
                          const double* beta0, double* kappa_hat, double* v_hat,
                          double* second_moment);

/* ---- replica-symmetric order parameters ---- */

int coxrs_rs_solve(double zeta, double S, int hazard_kind, int censoring_kind,
                   double t_max, uint64_t m, uint64_t seed, double damping,
                   double tol, int max_sweeps, coxrs_rs_solution** out);
int coxrs_rs_values(const coxrs_rs_solution* sol, double* u, double* v, double* w,
                    double* kappa);
int coxrs_rs_converged(const coxrs_rs_solution* sol);
int coxrs_rs_residual(const coxrs_rs_solution* sol, double* max_residual);
long coxrs_rs_curve_size(const coxrs_rs_solution* sol);
/* Parametric (t, Lambda0(t), LambdaRS(t)) curve at the population atoms. */
int coxrs_rs_curve(const coxrs_rs_solution* sol, double* t, double* lambda0,
                   double* lambda_rs);
void coxrs_rs_free(coxrs_rs_solution* sol);

/* ---- de-biasing ---- */

int coxrs_debias(const coxrs_dataset* data, const coxrs_fit* fit, double s_lo,
                 double s_hi, double s_tol, int y_order, int z_order,
                 double rs_damping, double rs_tol, int rs_max_sweeps,
                 coxrs_debias_result** out);
int coxrs_debias_values(const coxrs_debias_result* res, double* S_star, double* u,
                        double* v, double* w, double* kappa, double* predicted_sd,
                        int* s_at_lower_edge);
int coxrs_debias_beta_tilde(const coxrs_debias_result* res, double* out);
long coxrs_debias_lambda_tilde_size(const coxrs_debias_result* res);
int coxrs_debias_lambda_tilde(const coxrs_debias_result* res, double* times,
                              double* cumhaz);
long coxrs_debias_lambda_c_size(const coxrs_debias_result* res);
int coxrs_debias_lambda_c(const coxrs_debias_result* res, double* times,
                          double* cumhaz);
long coxrs_debias_trace_size(const coxrs_debias_result* res);
int coxrs_debias_trace(const coxrs_debias_result* res, double* S, double* residual);
void coxrs_debias_free(coxrs_debias_result* res);

#ifdef __cplusplus
}
#endif

#endif /* COXRS_H */
