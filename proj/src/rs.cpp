#include "coxrs/rs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "coxrs/special_math.hpp"

namespace coxrs {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

template <typename Vec>
Eigen::ArrayXd to_array(const Vec& v) {
    return Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// W(c e^a) for c >= 0, safe against overflow of c e^a: beyond the double
// range the asymptotic W(x) = log x - log log x + log log x / log x is
// accurate to ~1e-5, plenty for members this deep in the tail.
double lambert_w_log_arg(double c, double a) {
    if (c == 0.0) return 0.0;
    const double L = std::log(c) + a;
    if (L > 690.0) return L - std::log(L) + std::log(L) / L;
    // exp(L), not c * exp(a): the factor exp(a) alone may overflow.
    return lambert_w(std::exp(L));
}
}  // namespace

RSPopulation RSPopulation::sample(std::size_t m, double S, const HazardSpec& hazard,
                                  const CensoringSpec& censoring, std::uint64_t seed) {
    if (S < 0.0) throw std::invalid_argument("RSPopulation::sample: S must be >= 0");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<double> t(m), delta(m), y(m), z(m);
    for (std::size_t l = 0; l < m; ++l) {
        y[l] = normal(rng);
        z[l] = normal(rng);
    }
    // Standardize the Gaussian draws (exact zero mean, unit second moment).
    // The O(1/sqrt(m)) sampling error of <y^2> otherwise dominates the
    // O(zeta) restoring force of the w equation at small zeta and can make
    // the empirical fixed point unstable.
    for (auto* col : {&y, &z}) {
        double s1 = 0.0, s2 = 0.0;
        for (double x : *col) s1 += x;
        const double mean = s1 / double(m);
        for (double x : *col) s2 += (x - mean) * (x - mean);
        const double sd = std::sqrt(s2 / double(m));
        for (double& x : *col) x = (x - mean) / sd;
    }
    for (std::size_t l = 0; l < m; ++l) {
        const double e_draw = -std::log1p(-unif(rng));
        double cdraw;
        if (censoring.kind == CensoringKind::uniform_interval)
            cdraw = unif(rng);
        else
            cdraw = -std::log1p(-unif(rng));
        const ObservationDraw obs = draw_observation(S * y[l], hazard, censoring, e_draw, cdraw);
        t[l] = obs.time;
        delta[l] = obs.event;
    }

    RSPopulation pop;
    pop.S_ = S;
    pop.t_ = to_array(t);
    pop.delta_ = to_array(delta);
    pop.y_ = to_array(y);
    pop.z_ = to_array(z);
    pop.weight_ = Eigen::ArrayXd::Constant(static_cast<Eigen::Index>(m), 1.0 / m);
    pop.finalize(&hazard, nullptr);
    return pop;
}

RSPopulation RSPopulation::quadrature(const StepFunction& hazard_cumhaz,
                                      const StepFunction& censoring_cumhaz,
                                      double S, int y_order, int z_order) {
    if (hazard_cumhaz.empty())
        throw std::invalid_argument("RSPopulation::quadrature: hazard has no atoms");
    const QuadratureRule yq = make_quadrature(QuadKind::gauss_hermite_probabilist, y_order);
    const QuadratureRule zq = make_quadrature(QuadKind::gauss_hermite_probabilist, z_order);

    // Merge the hazard and censoring atoms on the time axis.
    struct Atom {
        double time;
        double increment;
        bool event;
    };
    std::vector<Atom> atoms;
    {
        double prev = 0.0;
        for (std::size_t i = 0; i < hazard_cumhaz.size(); ++i) {
            atoms.push_back({hazard_cumhaz.jump_times()[i],
                             hazard_cumhaz.cumulative_values()[i] - prev, true});
            prev = hazard_cumhaz.cumulative_values()[i];
        }
        prev = 0.0;
        for (std::size_t i = 0; i < censoring_cumhaz.size(); ++i) {
            atoms.push_back({censoring_cumhaz.jump_times()[i],
                             censoring_cumhaz.cumulative_values()[i] - prev, false});
            prev = censoring_cumhaz.cumulative_values()[i];
        }
        std::sort(atoms.begin(), atoms.end(),
                  [](const Atom& a, const Atom& b) { return a.time < b.time; });
    }

    std::vector<double> t, delta, y, z, weight;
    const std::size_t reserve = (atoms.size() + 1) * yq.order * zq.order;
    t.reserve(reserve);
    delta.reserve(reserve);
    y.reserve(reserve);
    z.reserve(reserve);
    weight.reserve(reserve);

    for (int b = 0; b < yq.order; ++b) {
        const double yb = yq.nodes[b];
        const double risk = std::exp(S * yb);
        double surv = yq.weights[b];
        for (const Atom& a : atoms) {
            const double rate = a.event ? a.increment * risk : a.increment;
            const double p_here = surv * (-std::expm1(-rate));
            surv *= std::exp(-rate);
            if (p_here < 1e-15) continue;
            for (int c = 0; c < zq.order; ++c) {
                t.push_back(a.time);
                delta.push_back(a.event ? 1.0 : 0.0);
                y.push_back(yb);
                z.push_back(zq.nodes[c]);
                weight.push_back(p_here * zq.weights[c]);
            }
        }
        if (surv > 1e-15) {
            for (int c = 0; c < zq.order; ++c) {
                t.push_back(kInf);
                delta.push_back(0.0);
                y.push_back(yb);
                z.push_back(zq.nodes[c]);
                weight.push_back(surv * zq.weights[c]);
            }
        }
    }

    RSPopulation pop;
    pop.S_ = S;
    pop.t_ = to_array(t);
    pop.delta_ = to_array(delta);
    pop.y_ = to_array(y);
    pop.z_ = to_array(z);
    pop.weight_ = to_array(weight);
    pop.finalize(nullptr, &hazard_cumhaz);
    return pop;
}

void RSPopulation::finalize(const HazardSpec* hazard, const StepFunction* hazard_step) {
    const Eigen::Index m = t_.size();
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return t_(a) < t_(b); });

    auto permute = [&](Eigen::ArrayXd& arr) {
        Eigen::ArrayXd out(m);
        for (Eigen::Index i = 0; i < m; ++i) out(i) = arr(order[i]);
        arr.swap(out);
    };
    permute(t_);
    permute(delta_);
    permute(y_);
    permute(z_);
    permute(weight_);

    group_times_.clear();
    group_start_.clear();
    group_of_member_.assign(m, 0);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (group_times_.empty() || t_(i) != group_times_.back()) {
            group_times_.push_back(t_(i));
            group_start_.push_back(static_cast<std::size_t>(i));
        }
        group_of_member_[i] = group_times_.size() - 1;
    }
    group_start_.push_back(static_cast<std::size_t>(m));

    total_weight_ = weight_.sum();
    xi_ = Eigen::ArrayXd::Zero(m);
    lambert_ = Eigen::ArrayXd::Zero(m);
    lambda_member_ = Eigen::ArrayXd::Zero(m);
    lambda_group_ = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(group_times_.size()));

    lambda0_member_.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (hazard)
            lambda0_member_(i) = std::isinf(t_(i)) ? hazard->cumhaz(1e300) : hazard->cumhaz(t_(i));
        else
            lambda0_member_(i) = std::isinf(t_(i)) ? hazard_step->total() : hazard_step->eval(t_(i));
    }
}

void RSPopulation::update_xi(double u, double v, double w) {
    const double u2 = u * u;
    const Eigen::Index m = t_.size();
    for (Eigen::Index l = 0; l < m; ++l) {
        const double a = u2 * delta_(l) + v * z_(l) + w * y_(l);
        const double W = lambert_w_log_arg(u2 * lambda_member_(l), a);
        lambert_(l) = W;
        xi_(l) = a - W;
    }
}

Eigen::ArrayXd RSPopulation::compute_lambda_groups(int* dropped_jumps) const {
    const std::size_t G = group_times_.size();
    const double mx = xi_.maxCoeff();
    Eigen::ArrayXd wexp = weight_ * (xi_ - mx).exp();

    Eigen::ArrayXd values(static_cast<Eigen::Index>(G));
    // Descending sweep: suffix risk mass, then jump = events / risk.
    std::vector<double> jump(G, 0.0);
    double suffix = 0.0;
    int dropped = 0;
    for (std::size_t g = G; g-- > 0;) {
        double events = 0.0;
        for (std::size_t i = group_start_[g]; i < group_start_[g + 1]; ++i) {
            suffix += wexp(static_cast<Eigen::Index>(i));
            events += weight_(static_cast<Eigen::Index>(i)) * delta_(static_cast<Eigen::Index>(i));
        }
        if (events > 0.0) {
            if (suffix > 0.0)
                jump[g] = events / suffix * std::exp(-mx);
            else
                ++dropped;
        }
    }
    double cum = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
        cum += jump[g];
        values(static_cast<Eigen::Index>(g)) = cum;
    }
    if (dropped_jumps) *dropped_jumps = dropped;
    return values;
}

void RSPopulation::set_lambda_groups(const Eigen::ArrayXd& group_values) {
    if (group_values.size() != static_cast<Eigen::Index>(group_times_.size()))
        throw std::invalid_argument("set_lambda_groups: size mismatch");
    lambda_group_ = group_values;
    for (std::size_t l = 0; l < group_of_member_.size(); ++l)
        lambda_member_(static_cast<Eigen::Index>(l)) =
            lambda_group_(static_cast<Eigen::Index>(group_of_member_[l]));
}

StepFunction RSPopulation::lambda_step_function() const {
    std::vector<double> times, values;
    for (std::size_t g = 0; g < group_times_.size(); ++g) {
        if (std::isinf(group_times_[g])) continue;
        times.push_back(group_times_[g]);
        values.push_back(lambda_group_(static_cast<Eigen::Index>(g)));
    }
    return StepFunction(std::move(times), std::move(values));
}

double solve_u(double zeta, double v, double w, const RSPopulation& pop, double u_init) {
    if (!(zeta > 0.0 && zeta < 1.0))
        throw std::invalid_argument("solve_u: zeta must be in (0, 1)");
    const Eigen::ArrayXd& lam = pop.lambda_at_members();
    const Eigen::ArrayXd a = v * pop.z() + w * pop.y();
    const Eigen::ArrayXd& delta = pop.delta();
    const Eigen::ArrayXd& weight = pop.weight();
    const double total = weight.sum();
    const Eigen::Index m = lam.size();

    // f(u) = <1/(1+W(u))> - (1 - zeta); f(0) = zeta > 0, strictly decreasing.
    auto f_and_df = [&](double u, double* df) {
        const double u2 = u * u;
        double acc = 0.0, dacc = 0.0;
        for (Eigen::Index l = 0; l < m; ++l) {
            if (u2 * lam(l) == 0.0) {
                acc += weight(l);
                continue;
            }
            const double W = lambert_w_log_arg(u2 * lam(l), u2 * delta(l) + a(l));
            const double denom = 1.0 + W;
            acc += weight(l) / denom;
            if (df) {
                const double dW = W * (2.0 / u + 2.0 * u * delta(l)) / denom;
                dacc -= weight(l) * dW / (denom * denom);
            }
        }
        if (df) *df = dacc / total;
        return acc / total - (1.0 - zeta);
    };

    double lo = 0.0;
    double hi = std::min(std::max(u_init, 1e-3), 1e100);
    double f_hi = f_and_df(hi, nullptr);
    int grow = 0;
    while (f_hi > 0.0) {
        lo = hi;
        hi *= 2.0;
        // u^2 must stay a normal double; far before that, such a u means the
        // fraction 1 - zeta is not reachable for this population.
        if (++grow > 60 || hi > 1e100)
            throw std::runtime_error(
                "solve_u: no sign change found; zeta appears beyond the attainable range");
        f_hi = f_and_df(hi, nullptr);
    }

    double u = 0.5 * (lo + hi);
    for (int iter = 0; iter < 100; ++iter) {
        double df;
        const double fu = f_and_df(u, &df);
        if (std::abs(fu) <= 1e-12) return u;
        if (fu > 0.0)
            lo = u;
        else
            hi = u;
        double u_next = (df != 0.0) ? u - fu / df : 0.5 * (lo + hi);
        if (!(u_next > lo && u_next < hi)) u_next = 0.5 * (lo + hi);
        if (std::abs(u_next - u) <= 1e-14 * (1.0 + u)) return u_next;
        u = u_next;
    }
    return u;
}

RSSolution solve_rs_on_population(double zeta, RSPopulation population,
                                  const RSOptions& options,
                                  double u0, double v0, double w0,
                                  const StepFunction* lambda_init) {
    if (!(zeta > 0.0 && zeta < 1.0))
        throw std::invalid_argument("solve_rs: zeta must be in (0, 1)");
    RSPopulation& pop = population;
    const double S = pop.signal_strength();
    const double eta = options.damping;

    double u = u0, v = v0, w = (w0 < 0.0 ? S : w0);

    // Nelson-Aalen initializer (population Breslow at xi = 0), unless the
    // caller supplies a warm start.
    RSSolution sol;
    if (lambda_init && !lambda_init->empty()) {
        const auto& times = pop.group_times();
        Eigen::ArrayXd vals(static_cast<Eigen::Index>(times.size()));
        for (std::size_t g = 0; g < times.size(); ++g)
            vals(static_cast<Eigen::Index>(g)) = std::isinf(times[g])
                                                     ? lambda_init->total()
                                                     : lambda_init->eval(times[g]);
        pop.set_lambda_groups(vals);
    } else {
        pop.set_lambda_groups(pop.compute_lambda_groups(&sol.dropped_jumps));
    }

    auto w_raw = [&]() {
        if (options.w_update_by_parts) {
            // Gaussian integration by parts of <y xi>: the data score
            // Delta - Lambda0(t) e^{Sy} picks up the y-dependence of the
            // measure, and <dxi/dy> = w <1/(1+W)> supplies the denominator.
            const Eigen::ArrayXd score =
                pop.delta() - pop.base_cumhaz_at_members() * (S * pop.y()).exp();
            const double denom = 1.0 - pop.weighted_mean((1.0 + pop.lambert()).inverse());
            if (denom <= 1e-12) return w;
            return S * pop.weighted_mean(pop.xi() * score) / denom;
        }
        return pop.weighted_mean(pop.y() * pop.xi());
    };

    double lambda_change = 0.0;
    double sv_prev = 0.0, sw_prev = 0.0;
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        sol.sweeps = sweep + 1;
        pop.update_xi(u, v, w);

        int dropped = 0;
        const Eigen::ArrayXd lam_new = pop.compute_lambda_groups(&dropped);
        sol.dropped_jumps = dropped;
        if (!lam_new.isFinite().all())
            throw std::runtime_error(
                "solve_rs: order parameters diverged; zeta appears beyond the "
                "attainable range for this model");
        const Eigen::ArrayXd lam_old = pop.lambda_groups();
        lambda_change =
            ((lam_new - lam_old).abs() / (lam_old.abs() + 1e-10)).maxCoeff();
        pop.set_lambda_groups((1.0 - eta) * lam_old + eta * lam_new);

        const Eigen::ArrayXd resid = pop.xi() - v * pop.z() - w * pop.y();
        const double radicand = pop.weighted_mean(resid.square()) / zeta;
        const double v_new = radicand >= 0.0 ? (1.0 - eta) * v + eta * std::sqrt(radicand) : v;

        // The plain relaxation w <- <y xi> contracts like 1 - O(zeta), which
        // stalls at small zeta; a Newton step on <y xi> - w = 0 with slope
        // 1 - <y^2/(1+W)> stays well-scaled for any zeta.
        double w_new;
        if (options.w_update_by_parts) {
            w_new = (1.0 - eta) * w + eta * w_raw();
        } else {
            const double g = w_raw() - w;
            const double slope =
                1.0 - pop.weighted_mean(pop.y().square() / (1.0 + pop.lambert()));
            w_new = slope > 1e-12 ? w + eta * g / slope : (1.0 - eta) * w + eta * (w + g);
        }

        const double dv = std::abs(v_new - v) / std::max(std::abs(v), 1e-8);
        const double dw = std::abs(w_new - w) / std::max(std::abs(w), 1e-8);
        const double sv = v_new - v, sw = w_new - w;
        v = v_new;
        w = w_new;

        // The damped map relaxes (v, w) along slow, nearly linear modes;
        // once the per-sweep change ratio is stable, jump to the geometric
        // limit.  Clamped to avoid overshooting early transients.
        if (sweep >= 8 && sweep % 5 == 3) {
            auto extrapolate = [](double cur, double s, double s_prev) {
                if (s_prev == 0.0 || s == 0.0) return cur;
                const double rho = s / s_prev;
                if (!(rho > 0.2 && rho < 0.98)) return cur;
                const double gain = std::min(rho / (1.0 - rho), 30.0);
                return cur + s * gain;
            };
            v = extrapolate(v, sv, sv_prev);
            w = extrapolate(w, sw, sw_prev);
        }
        sv_prev = sv;
        sw_prev = sw;

        if (!(std::isfinite(v) && std::isfinite(w)) || std::abs(v) > 1e6 ||
            std::abs(w) > 1e6)
            throw std::runtime_error(
                "solve_rs: order parameters diverged; zeta appears beyond the "
                "attainable range for this model");

        const double u_new = solve_u(zeta, v, w, pop, std::max(u, 1e-2));
        const double du = std::abs(u_new - u) / std::max(std::abs(u), 1e-8);
        u = u_new;

        if (sweep >= 3 && std::max({du, dv, dw, eta * lambda_change}) <= options.tol) {
            sol.converged = true;
            break;
        }
    }

    pop.update_xi(u, v, w);
    sol.u_star = u;
    sol.v_star = v;
    sol.w_star = w;
    sol.kappa_star = S > 0.0 ? w / S : std::numeric_limits<double>::quiet_NaN();

    const Eigen::ArrayXd resid = pop.xi() - v * pop.z() - w * pop.y();
    sol.residuals.v_eq =
        std::abs(zeta * v * v - pop.weighted_mean(resid.square())) /
        std::max(zeta * v * v, 1e-12);
    sol.residuals.u_eq =
        std::abs((1.0 - zeta) - pop.weighted_mean((1.0 + pop.lambert()).inverse()));
    sol.residuals.w_eq = std::abs(w - w_raw()) / std::max(std::abs(w), 1e-8);
    sol.residuals.lambda_change = lambda_change;

    sol.lambda_rs = pop.lambda_step_function();
    sol.population = std::move(population);
    return sol;
}

RSSolution solve_rs(double zeta, double S, const HazardSpec& hazard,
                    const CensoringSpec& censoring, std::size_t m,
                    const RSOptions& options) {
    if (m < options.min_population)
        throw std::invalid_argument("solve_rs: population size below the configured floor");
    RSPopulation pop = RSPopulation::sample(m, S, hazard, censoring, options.seed);
    return solve_rs_on_population(zeta, std::move(pop), options);
}

RSCurve rs_predicted_curve(const RSSolution& solution, const HazardSpec& hazard) {
    RSCurve curve;
    const StepFunction& lam = solution.lambda_rs;
    for (std::size_t i = 0; i < lam.size(); ++i) {
        const double t = lam.jump_times()[i];
        curve.times.push_back(t);
        curve.lambda0.push_back(hazard.cumhaz(t));
        curve.lambda_rs.push_back(lam.cumulative_values()[i]);
    }
    return curve;
}

}  // namespace coxrs
