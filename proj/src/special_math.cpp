#include "coxrs/special_math.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace coxrs {

double lambert_w(double x) {
    if (!std::isfinite(x) || x < 0.0)
        throw std::domain_error("lambert_w: argument must be finite and non-negative");
    if (x == 0.0) return 0.0;

    double w;
    if (x < 1.0)
        w = x * (1.0 - x + 1.5 * x * x) / (1.0 + 0.5 * x);
    else if (x < std::exp(1.0) * 4.0)
        w = 0.5 * std::log1p(x);
    else {
        const double lx = std::log(x);
        w = lx - std::log(lx);
    }

    for (int iter = 0; iter < 50; ++iter) {
        const double ew = std::exp(w);
        const double f = w * ew - x;
        const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
        const double step = f / denom;
        w -= step;
        if (std::abs(step) <= 1e-15 * (1.0 + std::abs(w))) break;
    }
    return w < 0.0 ? 0.0 : w;
}

QuadratureRule make_quadrature(QuadKind kind, int order) {
    if (order < 1 || order > 20000)
        throw std::invalid_argument("make_quadrature: order must be in [1, 20000]");

    QuadratureRule rule;
    rule.kind = kind;
    rule.order = order;
    rule.nodes.resize(order);
    rule.weights.resize(order);

    if (order == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = (kind == QuadKind::gauss_hermite_probabilist) ? 1.0 : 2.0;
        return rule;
    }

    // Golub-Welsch: eigen-decomposition of the symmetric tridiagonal Jacobi
    // matrix of the orthogonal-polynomial recurrence.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        double b;
        if (kind == QuadKind::gauss_hermite_probabilist)
            b = std::sqrt(static_cast<double>(k));
        else
            b = k / std::sqrt(4.0 * k * k - 1.0);
        J(k, k - 1) = J(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    const double mu0 = (kind == QuadKind::gauss_hermite_probabilist) ? 1.0 : 2.0;
    for (int k = 0; k < order; ++k) {
        rule.nodes[k] = es.eigenvalues()(k);
        const double v0 = es.eigenvectors()(0, k);
        rule.weights[k] = mu0 * v0 * v0;
    }
    return rule;
}

double phi_delta(double x, double s, int delta, const QuadratureRule& rule) {
    if (!std::isfinite(x) || x < 0.0)
        throw std::domain_error("phi_delta: x must be finite and non-negative");
    if (s < 0.0) throw std::domain_error("phi_delta: s must be non-negative");
    if (delta < 0) throw std::domain_error("phi_delta: delta must be non-negative");
    if (rule.kind != QuadKind::gauss_hermite_probabilist)
        throw std::invalid_argument("phi_delta: rule must be gauss_hermite_probabilist");

    double acc = 0.0;
    for (int k = 0; k < rule.order; ++k) {
        const double sy = s * rule.nodes[k];
        acc += rule.weights[k] * std::exp(delta * sy - x * std::exp(sy));
    }
    return acc;
}

}  // namespace coxrs
