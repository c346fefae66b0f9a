#pragma once

#include <cstddef>
#include <vector>

namespace coxrs {

// Principal branch of the Lambert W function, restricted to x >= 0.
// Solves w * exp(w) = x by Halley iteration.  Throws std::domain_error
// for negative or non-finite input.
double lambert_w(double x);

enum class QuadKind {
    gauss_hermite_probabilist,  // weight (2*pi)^{-1/2} exp(-y^2/2), weights sum to 1
    gauss_legendre              // weight 1 on [-1, 1], weights sum to 2
};

struct QuadratureRule {
    QuadKind kind;
    int order = 0;
    std::vector<double> nodes;    // strictly increasing
    std::vector<double> weights;  // all positive
};

// Golub-Welsch construction. order >= 1; throws std::invalid_argument otherwise.
QuadratureRule make_quadrature(QuadKind kind, int order);

// phi_Delta(x, s) = \int Dy exp(Delta*s*y - x*exp(s*y)), for x >= 0, s >= 0.
// delta may be any non-negative integer (the fixed-point update needs delta+1).
double phi_delta(double x, double s, int delta, const QuadratureRule& rule);

inline constexpr int kDefaultQuadOrder = 60;

}  // namespace coxrs
