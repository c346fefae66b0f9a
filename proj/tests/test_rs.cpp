#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "coxrs/cox.hpp"
#include "coxrs/debias.hpp"
#include "coxrs/rs.hpp"
#include "coxrs/survival.hpp"

using coxrs::CensoringSpec;
using coxrs::HazardSpec;
using coxrs::RSOptions;
using coxrs::RSPopulation;
using coxrs::StepFunction;

namespace {

RSOptions fast_options() {
    RSOptions o;
    o.min_population = 10000;
    return o;
}

// Independent weighted population-Breslow: direct double loop over members.
Eigen::ArrayXd naive_lambda(const RSPopulation& pop) {
    const Eigen::Index m = static_cast<Eigen::Index>(pop.size());
    const auto& times = pop.group_times();
    Eigen::ArrayXd values(static_cast<Eigen::Index>(times.size()));
    double cum = 0.0;
    for (std::size_t g = 0; g < times.size(); ++g) {
        double events = 0.0, risk = 0.0;
        for (Eigen::Index l = 0; l < m; ++l) {
            if (pop.t()(l) == times[g]) events += pop.weight()(l) * pop.delta()(l);
            if (pop.t()(l) >= times[g]) risk += pop.weight()(l) * std::exp(pop.xi()(l));
        }
        if (events > 0.0 && risk > 0.0) cum += events / risk;
        values(static_cast<Eigen::Index>(g)) = cum;
    }
    return values;
}

// Fine discretization of a parametric hazard plus uniform censoring on
// [0, t_max], for exercising the deterministic quadrature path against
// known continuum limits.
std::pair<StepFunction, StepFunction> discretized(const HazardSpec& hazard,
                                                  double t_max, int atoms) {
    std::vector<std::pair<double, double>> hj, cj;
    double prev_h = 0.0, prev_c = 0.0;
    for (int k = 1; k <= atoms; ++k) {
        const double t = t_max * k / (atoms + 1);
        const double h = hazard.cumhaz(t);
        const double c = -std::log1p(-t / t_max);
        hj.emplace_back(t, h - prev_h);
        cj.emplace_back(t, c - prev_c);
        prev_h = h;
        prev_c = c;
    }
    return {StepFunction::from_increments(std::move(hj)),
            StepFunction::from_increments(std::move(cj))};
}

}  // namespace

TEST_CASE("sampled population basics") {
    const std::size_t m = 20000;
    auto pop = RSPopulation::sample(m, 0.0, HazardSpec::log_logistic(),
                                    CensoringSpec::uniform(4.0), 5);
    REQUIRE(pop.size() == m);
    // S = 0: no dependence of (t, Delta) on y.
    const double my = pop.weighted_mean(pop.y());
    const double mt = pop.weighted_mean(pop.t());
    const double cov = pop.weighted_mean((pop.y() - my) * (pop.t() - mt));
    const double corr = cov / std::sqrt(pop.weighted_mean((pop.y() - my).square()) *
                                        pop.weighted_mean((pop.t() - mt).square()));
    CHECK(std::abs(corr) <= 3.0 / std::sqrt(double(m)));
}

TEST_CASE("sampled population event fraction and determinism") {
    const std::size_t m = 200000;
    auto pop = RSPopulation::sample(m, 1.0, HazardSpec::log_logistic(),
                                    CensoringSpec::uniform(4.0), 7);
    const auto rule = coxrs::make_quadrature(coxrs::QuadKind::gauss_hermite_probabilist,
                                             coxrs::kDefaultQuadOrder);
    const double expect = coxrs::expected_event_fraction(
        1.0, HazardSpec::log_logistic(), CensoringSpec::uniform(4.0), rule);
    CHECK(std::abs(pop.empirical_event_fraction() - expect) <=
          3.0 * std::sqrt(expect * (1.0 - expect) / double(m)));

    auto again = RSPopulation::sample(1000, 1.0, HazardSpec::log_logistic(),
                                      CensoringSpec::uniform(4.0), 7);
    auto pop2 = RSPopulation::sample(1000, 1.0, HazardSpec::log_logistic(),
                                     CensoringSpec::uniform(4.0), 7);
    CHECK((again.t() == pop2.t()).all());
    CHECK((again.y() == pop2.y()).all());
}

TEST_CASE("xi update trivial cases") {
    auto pop = RSPopulation::sample(500, 1.0, HazardSpec::log_logistic(),
                                    CensoringSpec::uniform(4.0), 9);
    // Lambda = 0 everywhere: xi is the linear part.
    pop.set_lambda_groups(
        Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(pop.group_times().size())));
    pop.update_xi(1.3, 0.7, -0.4);
    Eigen::ArrayXd expect = 1.3 * 1.3 * pop.delta() + 0.7 * pop.z() - 0.4 * pop.y();
    CHECK(((pop.xi() - expect).abs() < 1e-14).all());

    // u = 0 with nonzero Lambda.
    pop.set_lambda_groups(Eigen::ArrayXd::Constant(
        static_cast<Eigen::Index>(pop.group_times().size()), 2.0));
    pop.update_xi(0.0, 0.7, -0.4);
    expect = 0.7 * pop.z() - 0.4 * pop.y();
    CHECK(((pop.xi() - expect).abs() < 1e-14).all());
}

TEST_CASE("single-atom quadrature member solves to xi = 0") {
    // One event atom carrying all mass; S = 0 keeps y at the single node 0.
    StepFunction hazard({1.0}, {40.0});
    auto pop = RSPopulation::quadrature(hazard, StepFunction(), 0.0, 1, 1);
    REQUIRE(pop.size() == 1);
    CHECK(pop.delta()(0) == 1.0);
    pop.set_lambda_groups(Eigen::ArrayXd::Constant(1, 1.0));
    pop.update_xi(1.0, 0.0, 0.0);
    // xi = 1 - W(e) = 0.
    CHECK(pop.xi()(0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("population breslow on a two-atom hand example") {
    // Masses 1/2 at t = 1 and t = 2, both events, xi = 0.
    StepFunction hazard({1.0, 2.0}, {std::log(2.0), 60.0});
    auto pop = RSPopulation::quadrature(hazard, StepFunction(), 0.0, 1, 1);
    REQUIRE(pop.size() == 2);
    CHECK(pop.weight()(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(pop.weight()(1) == doctest::Approx(0.5).epsilon(1e-12));
    const auto lam = pop.compute_lambda_groups();
    CHECK(lam(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lam(1) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("population breslow matches a naive double loop") {
    auto pop = RSPopulation::sample(300, 1.0, HazardSpec::weibull_like(),
                                    CensoringSpec::uniform(4.0), 13);
    pop.set_lambda_groups(
        Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(pop.group_times().size())));
    pop.update_xi(0.5, 0.3, 0.8);
    const auto fast = pop.compute_lambda_groups();
    const auto slow = naive_lambda(pop);
    REQUIRE(fast.size() == slow.size());
    CHECK(((fast - slow).abs() / (slow.abs() + 1e-12) < 1e-10).all());
}

TEST_CASE("solve_u equation is monotone and bracketable") {
    auto pop = RSPopulation::sample(20000, 1.0, HazardSpec::log_logistic(),
                                    CensoringSpec::uniform(4.0), 15);
    pop.set_lambda_groups(pop.compute_lambda_groups());
    const double v = 0.5, w = 1.0;
    auto rhs = [&](double u) {
        const double u2 = u * u;
        double acc = 0.0;
        for (Eigen::Index l = 0; l < static_cast<Eigen::Index>(pop.size()); ++l) {
            const double arg = u2 * pop.lambda_at_members()(l) *
                               std::exp(u2 * pop.delta()(l) + v * pop.z()(l) + w * pop.y()(l));
            acc += pop.weight()(l) / (1.0 + coxrs::lambert_w(arg));
        }
        return acc / pop.weight().sum();
    };
    double prev = rhs(0.0);
    CHECK(prev == doctest::Approx(1.0));
    for (double u = 0.25; u <= 3.0; u += 0.25) {
        const double cur = rhs(u);
        CHECK(cur < prev);
        prev = cur;
    }

    for (double zeta : {0.1, 0.3}) {
        const double u = coxrs::solve_u(zeta, v, w, pop);
        CHECK(u > 0.0);
        CHECK(rhs(u) == doctest::Approx(1.0 - zeta).epsilon(1e-9));
    }
    CHECK_THROWS_AS(coxrs::solve_u(1.5, v, w, pop), std::invalid_argument);
}

TEST_CASE("classical limit of the order parameters") {
    // Deterministic quadrature path: at zeta -> 0 the w equation's restoring
    // force is O(zeta + u^2), so Monte-Carlo moment noise of a sampled
    // population would shift the empirical fixed point by O(1/(zeta sqrt(m))).
    RSOptions opts = fast_options();
    const auto [lam0, lamc] = discretized(HazardSpec::log_logistic(), 4.0, 1500);
    auto pop = RSPopulation::quadrature(lam0, lamc, 1.0, 24, 16);
    const auto sol = coxrs::solve_rs_on_population(1e-3, std::move(pop), opts);
    REQUIRE(sol.converged);
    CHECK(sol.kappa_star == doctest::Approx(1.0).epsilon(0.01));
    CHECK(sol.v_star <= 0.05);
    CHECK(sol.u_star < 0.2);

    // Re-solving u on the converged population reproduces u_star.
    const double u_again =
        coxrs::solve_u(1e-3, sol.v_star, sol.w_star, sol.population, sol.u_star);
    CHECK(u_again == doctest::Approx(sol.u_star).epsilon(1e-8));
}

TEST_CASE("converged solutions satisfy the stored-population identity") {
    RSOptions opts = fast_options();
    const std::size_t m = 100000;
    for (double zeta : {0.25, 0.5}) {
        const auto sol = coxrs::solve_rs(zeta, 1.0, HazardSpec::weibull_like(),
                                         CensoringSpec::uniform(4.0), m, opts);
        REQUIRE(sol.converged);
        const double lhs = (1.0 - zeta) * sol.v_star * sol.v_star + sol.w_star * sol.w_star;
        const double rhs = sol.population.weighted_mean(sol.population.xi().square());
        CHECK(std::abs(lhs - rhs) / std::abs(rhs) <= 5.0 / std::sqrt(double(m)));
        // The identity's corollary: the predicted second moment of the
        // inferred risk factors is a valid (non-negative) second moment.
        CHECK(lhs >= 0.0);
        // Per-equation residuals at the reported tolerance scale.
        CHECK(sol.residuals.v_eq < 50 * opts.tol);
        CHECK(sol.residuals.u_eq < 1e-8);
        CHECK(sol.residuals.w_eq < 50 * opts.tol);
    }
}

TEST_CASE("both w-update forms agree") {
    RSOptions opts = fast_options();
    const std::size_t m = 100000;
    opts.w_update_by_parts = true;
    const auto a = coxrs::solve_rs(0.3, 1.0, HazardSpec::log_logistic(),
                                   CensoringSpec::uniform(4.0), m, opts);
    opts.w_update_by_parts = false;
    const auto b = coxrs::solve_rs(0.3, 1.0, HazardSpec::log_logistic(),
                                   CensoringSpec::uniform(4.0), m, opts);
    REQUIRE(a.converged);
    REQUIRE(b.converged);
    // The by-parts form divides by zeta, so its noise is 1/zeta times larger.
    CHECK(std::abs(a.w_star - b.w_star) / a.w_star <= 5.0 / (0.3 * std::sqrt(double(m))));
    CHECK(std::abs(a.v_star - b.v_star) / a.v_star <= 5.0 / (0.3 * std::sqrt(double(m))));
}

TEST_CASE("population size stability") {
    RSOptions opts = fast_options();
    std::vector<double> small_u, big_u;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        opts.seed = seed;
        small_u.push_back(coxrs::solve_rs(0.3, 1.0, HazardSpec::log_logistic(),
                                          CensoringSpec::uniform(4.0), 20000, opts)
                              .u_star);
        big_u.push_back(coxrs::solve_rs(0.3, 1.0, HazardSpec::log_logistic(),
                                        CensoringSpec::uniform(4.0), 80000, opts)
                            .u_star);
    }
    auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / v.size();
    };
    auto sd = [&](const std::vector<double>& v) {
        const double m = mean(v);
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return std::sqrt(s / (v.size() - 1));
    };
    // The nonlinear solve carries a small O(1/sqrt(m)) bias on top of the
    // seed scatter, hence the absolute allowance.
    CHECK(std::abs(mean(small_u) - mean(big_u)) <=
          2.0 * sd(small_u) + 1.0 / std::sqrt(20000.0));
}

TEST_CASE("sampled and quadrature paths agree on empirical hazards") {
    // Empirical step hazards from a simulated dataset; both population paths
    // must produce the same order parameters up to Monte-Carlo error.
    Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(2);
    beta0(0) = 1.0;
    const auto data = coxrs::generate_dataset(400, 2, beta0, HazardSpec::log_logistic(),
                                              CensoringSpec::uniform(4.0), 77);
    const StepFunction lam0 = coxrs::nelson_aalen(data);
    const StepFunction lamc = coxrs::censoring_cumhaz(data);

    RSOptions opts = fast_options();
    auto quad_pop = RSPopulation::quadrature(lam0, lamc, 1.0, 16, 12);
    const auto qsol = coxrs::solve_rs_on_population(0.3, std::move(quad_pop), opts);
    REQUIRE(qsol.converged);

    const std::size_t m = 200000;
    auto samp_pop = RSPopulation::sample(m, 1.0, HazardSpec::empirical(lam0),
                                         CensoringSpec::empirical(lamc), 3);
    const auto ssol = coxrs::solve_rs_on_population(0.3, std::move(samp_pop), opts);
    REQUIRE(ssol.converged);

    const double tol = 5.0 / std::sqrt(double(m));
    CHECK(std::abs(qsol.v_star - ssol.v_star) / qsol.v_star <= tol + 0.01);
    CHECK(std::abs(qsol.w_star - ssol.w_star) / qsol.w_star <= tol + 0.01);
    CHECK(std::abs(qsol.u_star - ssol.u_star) / qsol.u_star <= tol + 0.02);
}

TEST_CASE("rs predicted curve shape") {
    RSOptions opts = fast_options();
    const auto sol = coxrs::solve_rs(0.25, 1.0, HazardSpec::log_logistic(),
                                     CensoringSpec::uniform(4.0), 100000, opts);
    REQUIRE(sol.converged);
    const auto curve = coxrs::rs_predicted_curve(sol, HazardSpec::log_logistic());
    REQUIRE(curve.times.size() > 100);
    for (std::size_t i = 1; i < curve.times.size(); ++i) {
        CHECK(curve.lambda0[i] >= curve.lambda0[i - 1]);
        CHECK(curve.lambda_rs[i] >= curve.lambda_rs[i - 1]);
    }
    // The distortion crosses the diagonal: the inferred curve starts below
    // the truth and overshoots it in the tail (checked against simulated
    // Breslow staircases, which reproduce both regimes).
    CHECK(curve.lambda_rs.front() < curve.lambda0.front());
    CHECK(curve.lambda_rs.back() > 1.2 * curve.lambda0.back());
}

TEST_CASE("small-zeta curve approaches the diagonal") {
    RSOptions opts = fast_options();
    const auto [lam0, lamc] = discretized(HazardSpec::weibull_like(), 4.0, 1500);
    auto pop = RSPopulation::quadrature(lam0, lamc, 1.0, 24, 16);
    const auto sol = coxrs::solve_rs_on_population(1e-3, std::move(pop), opts);
    REQUIRE(sol.converged);
    const auto curve = coxrs::rs_predicted_curve(sol, HazardSpec::weibull_like());
    const std::size_t n = curve.times.size();
    double worst = 0.0;
    for (std::size_t i = n / 20; i < n - n / 20; ++i)
        worst = std::max(worst,
                         std::abs(curve.lambda_rs[i] - curve.lambda0[i]) /
                             std::max(curve.lambda0[i], 0.05));
    CHECK(worst < 0.1);
}

TEST_CASE("solver input validation") {
    RSOptions opts = fast_options();
    CHECK_THROWS_AS(coxrs::solve_rs(0.3, 1.0, HazardSpec::log_logistic(),
                                    CensoringSpec::uniform(4.0), 100, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(coxrs::solve_rs(0.0, 1.0, HazardSpec::log_logistic(),
                                    CensoringSpec::uniform(4.0), 20000, opts),
                    std::invalid_argument);
    CHECK_THROWS_AS(RSPopulation::sample(100, -1.0, HazardSpec::log_logistic(),
                                         CensoringSpec::uniform(4.0), 1),
                    std::invalid_argument);
}
