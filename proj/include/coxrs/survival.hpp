#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

#include "coxrs/special_math.hpp"
#include "coxrs/step_function.hpp"

namespace coxrs {

enum class HazardKind { log_logistic, weibull_like, empirical_step };
enum class CensoringKind { uniform_interval, none, empirical_step };

// Cumulative base hazard.  Closed forms: log_logistic Lambda0(t) = log(1+t^2),
// weibull_like Lambda0(t) = t^2/2.
struct HazardSpec {
    HazardKind kind = HazardKind::log_logistic;
    StepFunction step;  // empirical_step only

    static HazardSpec log_logistic() { return {HazardKind::log_logistic, {}}; }
    static HazardSpec weibull_like() { return {HazardKind::weibull_like, {}}; }
    static HazardSpec empirical(StepFunction s) { return {HazardKind::empirical_step, std::move(s)}; }

    double cumhaz(double t) const;
    // Exact inverse for closed forms, generalized (right-continuous) inverse
    // for empirical steps (+infinity beyond the last jump).
    double inv_cumhaz(double x) const;
    bool closed_form() const { return kind != HazardKind::empirical_step; }
};

struct CensoringSpec {
    CensoringKind kind = CensoringKind::uniform_interval;
    double t_max = 4.0;         // uniform_interval only
    StepFunction step;          // empirical_step only

    static CensoringSpec uniform(double t_max) { return {CensoringKind::uniform_interval, t_max, {}}; }
    static CensoringSpec none() { return {CensoringKind::none, 0.0, {}}; }
    static CensoringSpec empirical(StepFunction s) { return {CensoringKind::empirical_step, 0.0, std::move(s)}; }

    double cumhaz(double t) const;
};

struct GenerationMeta {
    Eigen::VectorXd beta0;
    double signal_strength = 0.0;  // |beta0| for identity covariance
    HazardKind hazard_kind;
    CensoringKind censoring_kind;
    double t_max = 0.0;
    std::uint64_t seed = 0;
};

struct SurvivalDataset {
    Eigen::VectorXd times;              // n, all > 0 (or +inf capped, see generator)
    Eigen::VectorXd events;             // n, entries in {0,1}
    Eigen::MatrixXd covariates;         // n x p
    std::optional<GenerationMeta> meta;

    Eigen::Index n() const { return times.size(); }
    Eigen::Index p() const { return covariates.cols(); }
    double event_fraction() const { return events.mean(); }
};

// i.i.d. standard normal entries, reproducible for a given seed.
Eigen::MatrixXd sample_covariates(Eigen::Index n, Eigen::Index p, std::uint64_t seed);

// Inverse-transform generation: per subject draw E ~ Exp(1), T =
// Lambda0^{-1}(E * exp(-beta0.z)), C from the censoring spec, then
// t = min(T, C), Delta = 1[T < C].  Draws landing beyond the last jump of an
// empirical hazard are capped at the last jump time (flat-tail approximation).
SurvivalDataset generate_dataset(Eigen::Index n, Eigen::Index p,
                                 const Eigen::VectorXd& beta0,
                                 const HazardSpec& hazard,
                                 const CensoringSpec& censoring,
                                 std::uint64_t seed);

// <Delta> = 1 - (1/t_max) \int_0^{t_max} dt \int Dy exp(-Lambda0(t) e^{S y}),
// by nested quadrature.  Closed-form hazards with uniform or no censoring only.
double expected_event_fraction(double S, const HazardSpec& hazard,
                               const CensoringSpec& censoring,
                               const QuadratureRule& rule);

// Single observation draw given linear predictor h, shared by the dataset
// generator and the RS population builder.
struct ObservationDraw {
    double time;
    double event;
};
ObservationDraw draw_observation(double linear_predictor, const HazardSpec& hazard,
                                 const CensoringSpec& censoring,
                                 double exp_draw, double cens_uniform_or_exp);

}  // namespace coxrs
