#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>

#include "coxrs/cox.hpp"
#include "coxrs/survival.hpp"

using coxrs::CensoringSpec;
using coxrs::HazardSpec;
using coxrs::SurvivalDataset;

namespace {

SurvivalDataset make_dataset(std::vector<double> times, std::vector<double> events,
                             Eigen::MatrixXd covariates) {
    SurvivalDataset data;
    const Eigen::Index n = static_cast<Eigen::Index>(times.size());
    data.times = Eigen::Map<Eigen::VectorXd>(times.data(), n);
    data.events = Eigen::Map<Eigen::VectorXd>(events.data(), n);
    data.covariates = std::move(covariates);
    return data;
}

// Naive double-loop evaluation of the partial log-likelihood, independent of
// the suffix-sum implementation.
double naive_plik(const Eigen::VectorXd& beta, const SurvivalDataset& data) {
    const Eigen::Index n = data.n();
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (data.events(i) == 0.0) continue;
        double risk = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (data.times(j) >= data.times(i))
                risk += std::exp(beta.dot(data.covariates.row(j)));
        ll += beta.dot(data.covariates.row(i)) - std::log(risk / double(n));
    }
    return ll;
}

SurvivalDataset random_instance(int n, int p, std::uint64_t seed, double censor_frac = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    std::vector<double> times(n), events(n);
    Eigen::MatrixXd Z(n, p);
    for (int i = 0; i < n; ++i) {
        times[i] = 0.1 + 3.0 * unif(rng);
        events[i] = unif(rng) < censor_frac ? 0.0 : 1.0;
        for (int j = 0; j < p; ++j) Z(i, j) = normal(rng);
    }
    events[0] = 1.0;
    return make_dataset(std::move(times), std::move(events), std::move(Z));
}

}  // namespace

TEST_CASE("single-subject partial likelihood vanishes") {
    Eigen::MatrixXd Z(1, 1);
    Z << 2.3;
    const auto data = make_dataset({1.0}, {1.0}, Z);
    Eigen::VectorXd beta(1);
    for (double b : {-1.0, 0.0, 3.7}) {
        beta << b;
        CHECK(coxrs::partial_log_likelihood(beta, data) == doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("partial likelihood at beta = 0 counts risk sets") {
    const auto data = random_instance(40, 2, 1);
    double expect = 0.0;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.events(i) == 0.0) continue;
        int R = 0;
        for (Eigen::Index j = 0; j < data.n(); ++j)
            if (data.times(j) >= data.times(i)) ++R;
        expect -= std::log(double(R) / double(data.n()));
    }
    CHECK(coxrs::partial_log_likelihood(Eigen::VectorXd::Zero(2), data) ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("partial likelihood matches a naive oracle") {
    for (std::uint64_t seed : {2u, 3u, 4u}) {
        const auto data = random_instance(25, 3, seed);
        std::mt19937_64 rng(seed + 100);
        std::normal_distribution<double> normal;
        Eigen::VectorXd beta(3);
        for (int j = 0; j < 3; ++j) beta(j) = 0.5 * normal(rng);
        CHECK(coxrs::partial_log_likelihood(beta, data) ==
              doctest::Approx(naive_plik(beta, data)).epsilon(1e-11));
    }
}

TEST_CASE("partial likelihood rejects non-finite input") {
    const auto data = random_instance(10, 2, 5);
    Eigen::VectorXd beta(2);
    beta << std::nan(""), 0.0;
    CHECK_THROWS_AS(coxrs::partial_log_likelihood(beta, data), std::domain_error);
    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(coxrs::partial_log_likelihood(wrong, data), std::invalid_argument);
}

TEST_CASE("identical covariates give a zero gradient") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(8, 2, 1.5);
    const auto data = make_dataset({1, 2, 3, 4, 5, 6, 7, 8}, {1, 1, 0, 1, 1, 0, 1, 1}, Z);
    Eigen::VectorXd grad(2);
    Eigen::MatrixXd hess(2, 2);
    for (double b : {-0.5, 0.0, 2.0}) {
        coxrs::plik_gradient_hessian(Eigen::VectorXd::Constant(2, b), data, grad, hess);
        CHECK(grad.norm() == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("gradient and hessian match finite differences") {
    const auto data = random_instance(30, 3, 7);
    Eigen::VectorXd beta(3);
    beta << 0.3, -0.2, 0.1;
    Eigen::VectorXd grad(3);
    Eigen::MatrixXd hess(3, 3);
    coxrs::plik_gradient_hessian(beta, data, grad, hess);

    const double h = 1e-5;
    for (int j = 0; j < 3; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
        e(j) = h;
        const double fd =
            (coxrs::partial_log_likelihood(beta + e, data) -
             coxrs::partial_log_likelihood(beta - e, data)) / (2.0 * h);
        CHECK(grad(j) == doctest::Approx(fd).epsilon(1e-6));

        Eigen::VectorXd gp(3), gm(3);
        Eigen::MatrixXd dummy(3, 3);
        coxrs::plik_gradient_hessian(beta + e, data, gp, dummy);
        coxrs::plik_gradient_hessian(beta - e, data, gm, dummy);
        for (int k = 0; k < 3; ++k)
            CHECK(hess(k, j) ==
                  doctest::Approx((gp(k) - gm(k)) / (2.0 * h)).epsilon(1e-5));
    }
    CHECK((hess - hess.transpose()).norm() < 1e-10);
}

TEST_CASE("partial likelihood is concave along random segments") {
    const auto data = random_instance(25, 2, 9);
    std::mt19937_64 rng(10);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd a(2), b(2);
        for (int j = 0; j < 2; ++j) {
            a(j) = normal(rng);
            b(j) = normal(rng);
        }
        std::vector<double> vals;
        for (int k = 0; k <= 10; ++k)
            vals.push_back(coxrs::partial_log_likelihood(a + (k / 10.0) * (b - a), data));
        for (int k = 1; k < 10; ++k)
            CHECK(vals[k] >= 0.5 * (vals[k - 1] + vals[k + 1]) - 1e-9);
    }
}

TEST_CASE("breslow at beta = 0 is nelson-aalen") {
    const auto data = random_instance(60, 2, 11);
    const auto a = coxrs::breslow(data, Eigen::VectorXd::Zero(2));
    const auto b = coxrs::nelson_aalen(data);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.jump_times()[i] == b.jump_times()[i]);
        CHECK(a.cumulative_values()[i] == b.cumulative_values()[i]);
    }
    // Hand check of the reduced formula: jump 1/R_i at each event time.
    double cum = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double t = b.jump_times()[i];
        int R = 0;
        double d = 0.0;
        for (Eigen::Index j = 0; j < data.n(); ++j) {
            if (data.times(j) >= t) ++R;
            if (data.times(j) == t && data.events(j) > 0.0) d += 1.0;
        }
        cum += d / R;
        CHECK(b.cumulative_values()[i] == doctest::Approx(cum).epsilon(1e-12));
    }
}

TEST_CASE("two-event hand example") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(2, 1);
    const auto data = make_dataset({1.0, 2.0}, {1.0, 1.0}, Z);
    const auto lam = coxrs::breslow(data, Eigen::VectorXd::Zero(1));
    CHECK(lam.eval(1.5) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(lam.eval(2.5) == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("early censored subject leaves breslow unchanged") {
    Eigen::MatrixXd Z2 = Eigen::MatrixXd::Zero(2, 1);
    const auto base = make_dataset({1.0, 2.0}, {1.0, 1.0}, Z2);
    Eigen::MatrixXd Z3 = Eigen::MatrixXd::Zero(3, 1);
    const auto extra = make_dataset({1.0, 2.0, 0.5}, {1.0, 1.0, 0.0}, Z3);
    const auto a = coxrs::breslow(base, Eigen::VectorXd::Zero(1));
    const auto b = coxrs::breslow(extra, Eigen::VectorXd::Zero(1));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a.cumulative_values()[i] == b.cumulative_values()[i]);
}

TEST_CASE("breslow calibration identity") {
    const auto data = random_instance(50, 2, 13);
    Eigen::VectorXd beta(2);
    beta << 0.4, -0.3;
    const auto lam = coxrs::breslow(data, beta);
    double total = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < lam.size(); ++i) {
        const double t = lam.jump_times()[i];
        const double jump = lam.cumulative_values()[i] - prev;
        prev = lam.cumulative_values()[i];
        double risk = 0.0;
        for (Eigen::Index j = 0; j < data.n(); ++j)
            if (data.times(j) >= t) risk += std::exp(beta.dot(data.covariates.row(j)));
        total += jump * risk;
    }
    CHECK(total == doctest::Approx(data.events.sum()).epsilon(1e-10));
}

TEST_CASE("time rescaling moves jumps but not magnitudes") {
    const auto data = random_instance(40, 2, 15);
    SurvivalDataset scaled = data;
    scaled.times *= 3.5;
    const auto fit_a = coxrs::fit_cox(data);
    const auto fit_b = coxrs::fit_cox(scaled);
    CHECK((fit_a.beta_hat - fit_b.beta_hat).norm() < 1e-8);
    REQUIRE(fit_a.breslow.size() == fit_b.breslow.size());
    for (std::size_t i = 0; i < fit_a.breslow.size(); ++i) {
        CHECK(fit_b.breslow.jump_times()[i] ==
              doctest::Approx(3.5 * fit_a.breslow.jump_times()[i]));
        CHECK(fit_b.breslow.cumulative_values()[i] ==
              doctest::Approx(fit_a.breslow.cumulative_values()[i]).epsilon(1e-9));
    }
}

TEST_CASE("classical regime recovers beta0") {
    const int n = 10000, p = 100;
    Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(p);
    beta0(0) = 1.0;
    const auto data = coxrs::generate_dataset(n, p, beta0, HazardSpec::log_logistic(),
                                              CensoringSpec::uniform(4.0), 31);
    const auto fit = coxrs::fit_cox(data);
    REQUIRE(fit.converged);
    REQUIRE(!fit.separation_detected);

    // Classical standard error from the inverse observed information.
    Eigen::VectorXd grad(p);
    Eigen::MatrixXd hess(p, p);
    coxrs::plik_gradient_hessian(fit.beta_hat, data, grad, hess);
    const Eigen::MatrixXd info_inv = (-hess).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
    const double se = std::sqrt(info_inv(0, 0));
    CHECK(std::abs(fit.beta_hat(0) - 1.0) <= 1.96 * se);
}

TEST_CASE("monotone likelihood is flagged as separation") {
    // Covariate rank order equal to event-time order drives |beta| to infinity.
    const int n = 20;
    Eigen::MatrixXd Z(n, 1);
    std::vector<double> times(n), events(n, 1.0);
    // Small gaps keep the gradient from underflowing before |beta| crosses
    // the divergence radius.
    for (int i = 0; i < n; ++i) {
        times[i] = i + 1.0;
        Z(i, 0) = 0.1 * (i + 1.0);
    }
    const auto data = make_dataset(std::move(times), std::move(events), Z);
    const auto fit = coxrs::fit_cox(data);
    CHECK(fit.separation_detected);
    CHECK(!fit.converged);
}

TEST_CASE("degenerate fits") {
    Eigen::MatrixXd Z = Eigen::MatrixXd::Constant(6, 1, 2.0);
    const auto flat = make_dataset({1, 2, 3, 4, 5, 6}, {1, 1, 1, 0, 1, 1}, Z);
    const auto fit = coxrs::fit_cox(flat);
    CHECK(fit.converged);
    CHECK(fit.beta_hat(0) == 0.0);  // gradient identically zero at the start

    const auto none = make_dataset({1, 2}, {0, 0}, Eigen::MatrixXd::Zero(2, 1));
    CHECK_THROWS(coxrs::fit_cox(none));
}

TEST_CASE("overfit markers definitions") {
    const int p = 4;
    Eigen::VectorXd beta0 = Eigen::VectorXd::Zero(p);
    beta0(0) = 1.0;
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(p, p);
    const Eigen::MatrixXd Z = coxrs::sample_covariates(200, p, 3);

    auto m = coxrs::overfit_markers(beta0, beta0, A, Z);
    CHECK(m.kappa_hat == doctest::Approx(1.0));
    CHECK(m.v_hat == doctest::Approx(0.0));

    m = coxrs::overfit_markers(2.0 * beta0, beta0, A, Z);
    CHECK(m.kappa_hat == doctest::Approx(2.0));
    CHECK(m.v_hat == doctest::Approx(0.0));

    Eigen::VectorXd perp = Eigen::VectorXd::Zero(p);
    perp(1) = 3.0;
    m = coxrs::overfit_markers(perp, beta0, A, Z);
    CHECK(m.kappa_hat == doctest::Approx(0.0));
    CHECK(m.v_hat == doctest::Approx(3.0));
    CHECK(m.second_moment ==
          doctest::Approx((Z * perp).squaredNorm() / 200.0).epsilon(1e-12));

    CHECK_THROWS_AS(coxrs::overfit_markers(beta0, Eigen::VectorXd::Zero(p), A, Z),
                    std::domain_error);
}
