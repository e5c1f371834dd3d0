#pragma once
// Test-only closed forms, independent of the library's production paths.
#include "chmc/ambient.hpp"

#include <cmath>
#include <vector>

namespace chmc::oracles {

// Principal curvature of the centered coordinate sphere of euclidean radius
// r0 in the conformally flat metric psi^2 delta (conformal transformation of
// the euclidean sphere curvatures).
inline double sphere_lambda_conformal(int n, double m, double r0) {
    double base = 1.0 + m / (2.0 * std::pow(r0, n - 2));
    double psi = std::pow(base, 2.0 / (n - 2));
    double dpsi = -m * std::pow(r0, 1.0 - n) * std::pow(base, (4.0 - n) / double(n - 2));
    return 1.0 / (psi * r0) + dpsi / (psi * psi);
}

// Christoffel symbols of a conformally flat metric exp(2w) delta with
// w = 2 log phi: Gamma^c_ab = 2(delta^c_a d_b log phi + delta^c_b d_a log phi
//                              - delta_ab d_c log phi).
inline Tensor3 conformal_christoffel(int n, double m, const VecN& y) {
    double r = y.norm();
    double base = 1.0 + m / (2.0 * std::pow(r, n - 2));
    // d_a log phi = (1/(n-2)) * base' / base with base' = -(n-2)m/(2 r^{n-1}) * y_a/r
    VecN dlog = VecN::Zero(n);
    double fac = -m / (2.0 * std::pow(r, double(n))) / base;
    for (int a = 0; a < n; ++a) dlog[a] = fac * y[a];
    Tensor3 gam(n);
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                double v = 0.0;
                if (c == a) v += dlog[b];
                if (c == b) v += dlog[a];
                if (a == b) v -= dlog[c];
                gam(c, a, b) = 2.0 * v;
            }
    return gam;
}

// Meridian-formula principal curvatures of a euclidean surface of revolution
// with polar profile rho(theta) about the origin; returns (lambda_meridian,
// lambda_parallel) at theta.
inline std::pair<double, double> revolution_curvatures(double rho, double drho, double ddrho,
                                                       double theta) {
    double denom = std::sqrt(rho * rho + drho * drho);
    double lam_m = (rho * rho + 2.0 * drho * drho - rho * ddrho) / (denom * denom * denom);
    double lam_p = (rho * std::sin(theta) - drho * std::cos(theta)) /
                   (rho * std::sin(theta) * denom);
    return {lam_m, lam_p};
}

// Direct evaluation of the perturbation closed form for metric_at tests.
inline double perturbation_direct(double eps, int n, double delta, double cutoff,
                                  const std::vector<double>& coeffs, double r, double costheta) {
    double x = (r - cutoff) / cutoff;
    double chi = x <= 0 ? 0.0 : (x >= 1 ? 1.0 : x * x * x * (10.0 + x * (-15.0 + 6.0 * x)));
    double q = 0.0;
    for (std::size_t k = 0; k < coeffs.size(); ++k) q += coeffs[k] * std::cos(k * std::acos(costheta));
    return eps * std::pow(r, 1.0 - n - delta) * chi * q;
}

}  // namespace chmc::oracles
