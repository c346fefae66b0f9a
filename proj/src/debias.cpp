#include "coxrs/debias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "coxrs/special_math.hpp"

namespace coxrs {

namespace {

// At-risk ordering shared by the estimators below: indices by ascending time.
std::vector<Eigen::Index> ascending_times(const SurvivalDataset& data) {
    std::vector<Eigen::Index> order(data.n());
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (data.times(a) != data.times(b)) return data.times(a) < data.times(b);
        return data.events(a) > data.events(b);
    });
    return order;
}

}  // namespace

StepFunction censoring_cumhaz(const SurvivalDataset& data) {
    const auto order = ascending_times(data);
    const Eigen::Index n = data.n();
    std::vector<std::pair<double, double>> jumps;
    std::ptrdiff_t i = n - 1;
    double at_risk = 0.0;
    while (i >= 0) {
        const double t = data.times(order[i]);
        std::ptrdiff_t g = i;
        double censored_here = 0.0;
        while (g >= 0 && data.times(order[g]) == t) {
            at_risk += 1.0;
            censored_here += 1.0 - data.events(order[g]);
            --g;
        }
        if (censored_here > 0.0) jumps.emplace_back(t, censored_here / at_risk);
        i = g;
    }
    return StepFunction::from_increments(std::move(jumps));
}

StepFunction frailty_cumhaz_fixed_point(const SurvivalDataset& data, double S,
                                        const FixedPointOptions& options,
                                        const StepFunction* warm_start,
                                        std::vector<double>* history) {
    if (S < 0.0) throw std::domain_error("frailty_cumhaz_fixed_point: S must be >= 0");
    if (data.events.sum() == 0.0)
        throw std::runtime_error("frailty_cumhaz_fixed_point: dataset has no events");

    const auto order = ascending_times(data);
    const Eigen::Index n = data.n();
    const QuadratureRule rule =
        make_quadrature(QuadKind::gauss_hermite_probabilist, options.quad_order);

    // Lambda at each subject's time (ordered ascending); initialized from
    // Nelson-Aalen or the warm start.
    Eigen::ArrayXd lam(n);
    {
        const StepFunction init = warm_start ? *warm_start : nelson_aalen(data);
        for (Eigen::Index i = 0; i < n; ++i) lam(i) = init.eval(data.times(order[i]));
    }

    Eigen::ArrayXd lam_new(n);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        // Suffix sums of the frailty ratios over the risk sets.
        double suffix = 0.0;
        Eigen::ArrayXd jump(n);
        std::ptrdiff_t i = n - 1;
        while (i >= 0) {
            const double t = data.times(order[i]);
            std::ptrdiff_t g = i;
            double events_here = 0.0;
            while (g >= 0 && data.times(order[g]) == t) {
                const int delta = data.events(order[g]) > 0.0 ? 1 : 0;
                const double x = lam(g);
                suffix += phi_delta(x, S, delta + 1, rule) / phi_delta(x, S, delta, rule);
                events_here += data.events(order[g]);
                --g;
            }
            const double j = (events_here > 0.0 && suffix > 0.0) ? events_here / suffix : 0.0;
            for (std::ptrdiff_t k = i; k > g; --k) jump(k) = (k == g + 1) ? j : 0.0;
            i = g;
        }
        double cum = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            cum += jump(k);
            lam_new(k) = cum;
        }

        const double change =
            ((lam_new - lam).abs() / (lam.abs() + 1e-10)).maxCoeff();
        if (history) history->push_back(change);
        lam = (1.0 - options.damping) * lam + options.damping * lam_new;
        if (change <= options.tol) break;
        if (iter == options.max_iter - 1)
            throw std::runtime_error(
                "frailty_cumhaz_fixed_point: not converged, last relative change " +
                std::to_string(change));
    }

    std::vector<std::pair<double, double>> jumps;
    double prev = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (lam(k) > prev) {
            jumps.emplace_back(data.times(order[k]), lam(k) - prev);
            prev = lam(k);
        }
    }
    return StepFunction::from_increments(std::move(jumps));
}

DebiasResult debias_solve(const SurvivalDataset& data, const CoxFit& fit,
                          const DebiasOptions& options) {
    if (!fit.converged || fit.separation_detected)
        throw std::invalid_argument("debias_solve: requires a converged, non-separated fit");
    const double zeta = static_cast<double>(data.p()) / static_cast<double>(data.n());
    if (!(zeta > 0.0 && zeta < 1.0))
        throw std::invalid_argument("debias_solve: zeta must be in (0, 1)");

    const Eigen::VectorXd scores = data.covariates * fit.beta_hat;
    const double second_moment = scores.squaredNorm() / static_cast<double>(data.n());
    double known_quadratic = 0.0;
    if (options.use_known_covariance)
        known_quadratic = options.known_covariance.size() == 0
                              ? fit.beta_hat.squaredNorm()
                              : fit.beta_hat.dot(options.known_covariance * fit.beta_hat);

    DebiasResult result;
    result.lambda_c_tilde = censoring_cumhaz(data);

    // Inner solve at candidate S; warm starts across candidates.
    StepFunction lambda0_prev, rs_lambda_prev;
    double u_warm = 0.1, v_warm = 0.1, w_warm = -1.0;
    auto residual_at = [&](double S) {
        const StepFunction lambda0 = frailty_cumhaz_fixed_point(
            data, S, options.fixed_point, lambda0_prev.empty() ? nullptr : &lambda0_prev);
        lambda0_prev = lambda0;

        RSOptions rs_opts = options.rs;
        // The integration-by-parts w-update assumes a continuous base hazard;
        // on the empirical step hazards used here its score term is biased
        // (all mass sits at or above the first atom), so use the direct form.
        rs_opts.w_update_by_parts = false;
        // The bracket endpoints only feed a sign decision; don't spend the
        // full sweep budget there (extreme S relaxes slowly).
        if (result.trace.size() < 2)
            rs_opts.max_sweeps = std::min(rs_opts.max_sweeps, 150);
        RSSolution sol;
        const StepFunction* lam_warm = rs_lambda_prev.empty() ? nullptr : &rs_lambda_prev;
        if (options.path == DebiasPath::quadrature) {
            RSPopulation pop = RSPopulation::quadrature(lambda0, result.lambda_c_tilde, S,
                                                        options.y_order, options.z_order);
            sol = solve_rs_on_population(zeta, std::move(pop), rs_opts, u_warm, v_warm,
                                         w_warm, lam_warm);
        } else {
            rs_opts.seed = options.seed;  // common random numbers across candidates
            RSPopulation pop =
                RSPopulation::sample(options.m, S, HazardSpec::empirical(lambda0),
                                     CensoringSpec::empirical(result.lambda_c_tilde),
                                     rs_opts.seed);
            sol = solve_rs_on_population(zeta, std::move(pop), rs_opts, u_warm, v_warm,
                                         w_warm, lam_warm);
        }
        u_warm = sol.u_star;
        v_warm = sol.v_star;
        w_warm = sol.w_star;
        rs_lambda_prev = sol.lambda_rs;

        const double r =
            options.use_known_covariance
                ? sol.w_star * sol.w_star + sol.v_star * sol.v_star - known_quadratic
                : (1.0 - zeta) * sol.v_star * sol.v_star + sol.w_star * sol.w_star -
                      second_moment;
        result.trace.push_back({S, r, sol.u_star, sol.v_star, sol.w_star, sol.sweeps,
                                sol.converged});
        return std::pair<double, RSSolution>(r, std::move(sol));
    };

    double a = options.s_lo, b = options.s_hi;
    auto [ra, sol_a] = residual_at(a);
    auto [rb, sol_b] = residual_at(b);
    if ((ra > 0.0) == (rb > 0.0) && ra != 0.0 && rb != 0.0)
        throw std::runtime_error(
            "debias_solve: no sign change of the S residual on the bracket");

    const bool a_closer = std::abs(ra) <= std::abs(rb);
    RSSolution best = a_closer ? std::move(sol_a) : std::move(sol_b);
    double fa = ra, fb = rb;
    double s_star = a_closer ? a : b;
    bool force_bisect = false;
    while (b - a > options.s_tol) {
        // Secant proposal, safeguarded by bisection whenever the bracket
        // stopped shrinking.
        const double width_before = b - a;
        double s = 0.5 * (a + b);
        if (!force_bisect && fb != fa) {
            const double sec = a - fa * (b - a) / (fb - fa);
            const double margin = 0.02 * (b - a);
            if (sec > a + margin && sec < b - margin) s = sec;
        }
        auto [r, sol] = residual_at(s);
        best = std::move(sol);
        s_star = s;
        // |r| small relative to the local slope means s is within s_tol of
        // the root; no need to shrink the bracket further.
        const double slope = std::abs((fb - fa) / (b - a));
        if (std::abs(r) <= options.s_tol * std::max(slope, 1e-3)) break;
        if ((r > 0.0) == (fa > 0.0)) {
            a = s;
            fa = r;
        } else {
            b = s;
            fb = r;
        }
        force_bisect = (b - a) > 0.6 * width_before;
    }

    result.S_star = s_star;
    result.u_star = best.u_star;
    result.v_star = best.v_star;
    result.w_star = best.w_star;
    result.kappa_star = best.w_star / s_star;
    result.beta_tilde = fit.beta_hat / result.kappa_star;
    result.lambda_tilde = frailty_cumhaz_fixed_point(data, s_star, options.fixed_point,
                                                     lambda0_prev.empty() ? nullptr
                                                                          : &lambda0_prev);
    result.predicted_sd =
        result.v_star / (result.kappa_star * std::sqrt(static_cast<double>(data.p())));
    result.s_at_lower_edge = s_star <= options.s_lo + options.s_tol;
    return result;
}

DebiasedCumhaz debiased_cumhaz(const DebiasResult& result, const CoxFit& fit) {
    DebiasedCumhaz out;
    out.fixed_point = result.lambda_tilde;
    out.rescaled_breslow = fit.breslow.scaled(1.0 / result.kappa_star);
    return out;
}

}  // namespace coxrs
