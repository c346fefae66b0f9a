#include "coxrs/survival.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace coxrs {

double HazardSpec::cumhaz(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind) {
        case HazardKind::log_logistic: return std::log1p(t * t);
        case HazardKind::weibull_like: return 0.5 * t * t;
        case HazardKind::empirical_step: return step.eval(t);
    }
    return 0.0;
}

double HazardSpec::inv_cumhaz(double x) const {
    if (x <= 0.0) return 0.0;
    switch (kind) {
        case HazardKind::log_logistic: return std::sqrt(std::expm1(x));
        case HazardKind::weibull_like: return std::sqrt(2.0 * x);
        case HazardKind::empirical_step: return step.inv(x);
    }
    return 0.0;
}

double CensoringSpec::cumhaz(double t) const {
    if (t <= 0.0) return 0.0;
    switch (kind) {
        case CensoringKind::uniform_interval:
            if (t >= t_max) return std::numeric_limits<double>::infinity();
            return -std::log1p(-t / t_max);
        case CensoringKind::none: return 0.0;
        case CensoringKind::empirical_step: return step.eval(t);
    }
    return 0.0;
}

Eigen::MatrixXd sample_covariates(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    if (n < 1 || p < 1)
        throw std::invalid_argument("sample_covariates: dimensions must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd Z(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) Z(i, j) = normal(rng);
    return Z;
}

ObservationDraw draw_observation(double linear_predictor, const HazardSpec& hazard,
                                 const CensoringSpec& censoring,
                                 double exp_draw, double cens_uniform_or_exp) {
    const double inf = std::numeric_limits<double>::infinity();
    double T = hazard.inv_cumhaz(exp_draw * std::exp(-linear_predictor));
    bool event_fired = std::isfinite(T);
    double event_cap = event_fired ? T : hazard.step.last_time();

    double C = inf;
    bool cens_fired = false;
    double cens_cap = inf;
    switch (censoring.kind) {
        case CensoringKind::uniform_interval:
            C = censoring.t_max * cens_uniform_or_exp;
            cens_fired = true;
            break;
        case CensoringKind::none:
            break;
        case CensoringKind::empirical_step:
            C = censoring.step.inv(cens_uniform_or_exp);
            cens_fired = std::isfinite(C);
            cens_cap = censoring.step.last_time();
            break;
    }

    if (event_fired && cens_fired) return {std::min(T, C), T < C ? 1.0 : 0.0};
    if (event_fired) return {T, 1.0};
    if (cens_fired) return {C, 0.0};
    // Neither process fired within the observed range of an empirical step:
    // flat-tail approximation, censored at the earliest last jump.
    return {std::min(event_cap, cens_cap), 0.0};
}

SurvivalDataset generate_dataset(Eigen::Index n, Eigen::Index p,
                                 const Eigen::VectorXd& beta0,
                                 const HazardSpec& hazard,
                                 const CensoringSpec& censoring,
                                 std::uint64_t seed) {
    if (beta0.size() != p)
        throw std::invalid_argument("generate_dataset: beta0 size must equal p");
    if (hazard.kind == HazardKind::empirical_step && hazard.step.empty())
        throw std::runtime_error("generate_dataset: empirical hazard has no jumps");

    SurvivalDataset data;
    data.covariates = sample_covariates(n, p, seed);
    data.times.resize(n);
    data.events.resize(n);

    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h = data.covariates.row(i).dot(beta0);
        const double e_draw = -std::log1p(-unif(rng));  // Exp(1)
        double cdraw;
        if (censoring.kind == CensoringKind::uniform_interval)
            cdraw = unif(rng);
        else
            cdraw = -std::log1p(-unif(rng));
        const ObservationDraw obs = draw_observation(h, hazard, censoring, e_draw, cdraw);
        if (!(obs.time > 0.0) || !std::isfinite(obs.time))
            throw std::runtime_error("generate_dataset: invalid time for subject " +
                                     std::to_string(i));
        data.times(i) = obs.time;
        data.events(i) = obs.event;
    }

    GenerationMeta meta;
    meta.beta0 = beta0;
    meta.signal_strength = beta0.norm();
    meta.hazard_kind = hazard.kind;
    meta.censoring_kind = censoring.kind;
    meta.t_max = censoring.t_max;
    meta.seed = seed;
    data.meta = std::move(meta);
    return data;
}

double expected_event_fraction(double S, const HazardSpec& hazard,
                               const CensoringSpec& censoring,
                               const QuadratureRule& rule) {
    if (S < 0.0) throw std::domain_error("expected_event_fraction: S must be >= 0");
    if (!hazard.closed_form())
        throw std::invalid_argument(
            "expected_event_fraction: empirical step hazards are not supported");
    if (censoring.kind == CensoringKind::none) return 1.0;
    if (censoring.kind != CensoringKind::uniform_interval)
        throw std::invalid_argument(
            "expected_event_fraction: unsupported censoring kind");
    if (rule.kind != QuadKind::gauss_hermite_probabilist)
        throw std::invalid_argument("expected_event_fraction: rule must be gauss_hermite");

    const QuadratureRule time_rule = make_quadrature(QuadKind::gauss_legendre, 200);
    const double half = 0.5 * censoring.t_max;
    double outer = 0.0;
    for (int a = 0; a < time_rule.order; ++a) {
        const double t = half * (time_rule.nodes[a] + 1.0);
        const double lam = hazard.cumhaz(t);
        double inner = 0.0;
        for (int b = 0; b < rule.order; ++b)
            inner += rule.weights[b] * std::exp(-lam * std::exp(S * rule.nodes[b]));
        outer += time_rule.weights[a] * half * inner;
    }
    return 1.0 - outer / censoring.t_max;
}

}  // namespace coxrs
