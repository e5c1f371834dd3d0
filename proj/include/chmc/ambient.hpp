#pragma once
#include <Eigen/Dense>
#include <array>
#include <vector>

namespace chmc {

// Point tensors live in R^n with n <= CHMC_MAX_DIM; fixed-capacity Eigen types
// keep the hot path allocation-free.
inline constexpr int kMaxDim = 6;
using VecN = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using MatN = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Rank-3 and rank-4 tensors at a point, row-major flat storage.
struct Tensor3 {
    int n = 0;
    std::vector<double> v;
    explicit Tensor3(int dim = 0) : n(dim), v(std::size_t(dim) * dim * dim, 0.0) {}
    double& operator()(int a, int b, int c) { return v[std::size_t((a * n + b) * n + c)]; }
    double operator()(int a, int b, int c) const { return v[std::size_t((a * n + b) * n + c)]; }
};

struct Tensor4 {
    int n = 0;
    std::vector<double> v;
    explicit Tensor4(int dim = 0) : n(dim), v(std::size_t(dim) * dim * dim * dim, 0.0) {}
    double& operator()(int a, int b, int c, int d) {
        return v[std::size_t(((a * n + b) * n + c) * n + d)];
    }
    double operator()(int a, int b, int c, int d) const {
        return v[std::size_t(((a * n + b) * n + c) * n + d)];
    }
};

// Axisymmetric conformal-diagonal perturbation of the background metric:
//   P_ab(y) = epsilon * r^{1-n-delta} * chi(r) * q(theta) * delta_ab
// where q is a truncated cosine series in the polar angle about the x1 axis
// and chi is a C^2 ramp from 0 to 1 over [cutoff_radius, 2*cutoff_radius].
struct PerturbationSpec {
    double epsilon = 0.0;
    std::vector<double> cosine_coeffs = {1.0};
    double cutoff_radius = 4.0;
};

// Asymptotically Schwarzschild background on R^n \ B_1(0),
//   g_ab = (1 + m/(2 r^{n-2}))^{4/(n-2)} delta_ab + P_ab.
// Optional axial recentering (metric evaluated at y - center*e1) and an axial
// dipole term b*x1/r^n inside the conformal factor; both are used by the
// center-of-mass experiments and default to zero.
struct AmbientMetric {
    int n = 3;
    double m = 2.0;
    double delta = 0.0;
    PerturbationSpec perturbation;
    double fd_step_rel = 1e-4;
    double center = 0.0;    // axial shift of the metric center
    double dipole_b = 0.0;  // axial dipole coefficient B_1 (ramped by chi)

    void validate() const;  // throws config_error
};

// Full curvature data of the ambient metric at one point.
struct CurvatureAtPoint {
    int n = 0;
    MatN metric;
    MatN inverse_metric;
    Tensor3 christoffel;  // Gamma^c_{ab}, index order (c,a,b)
    Tensor4 riemann;      // R_{a s mu nu} = g_{al} (d_mu Gamma^l_{nu s} - d_nu Gamma^l_{mu s} + GG)
    MatN ricci;           // R_{s nu} = R^l_{s l nu}; matches the Schwarzschild closed form
    double scalar = 0.0;
    Tensor4 weyl;
};

// Scalar conformal perturbation p(y) with P_ab = p * delta_ab.
double perturbation_at(const AmbientMetric& amb, const VecN& y);

// g_ab(y); throws numeric_error when |y - center| < 1 (excluded ball).
MatN metric_at(const AmbientMetric& amb, const VecN& y);

// Levi-Civita Gamma^c_{ab} by central differences of metric_at with
// step h = fd_step_rel * r.
Tensor3 christoffel_at(const AmbientMetric& amb, const VecN& y);

// Riemann/Ricci/scalar/Weyl by nested central differences of christoffel_at.
CurvatureAtPoint curvature_at(const AmbientMetric& amb, const VecN& y);

// Exact Schwarzschild Ricci (Lemma-level closed form); ignores P.
MatN ricci_closed_form(const AmbientMetric& amb, const VecN& y);

// Realized decay constants sup_dirs |d^l P| * r^{n-1+l+delta} for l = 0..3.
struct PerturbationDecayRow {
    double radius = 0.0;
    std::array<double, 4> constants{};  // index l
};
std::vector<PerturbationDecayRow> perturbation_decay_report(const AmbientMetric& amb,
                                                            const std::vector<double>& radii);

// Conformal factor of the Schwarzschild part, phi = (1 + m/(2 r^{n-2}))^{1/(n-2)}.
double schwarzschild_phi(const AmbientMetric& amb, double r);

// Scalar conformal factor of the full metric: g = conf(y) * delta. The metric
// family is conformally diagonal by construction, so this is exact.
double conformal_factor(const AmbientMetric& amb, const VecN& y);

}  // namespace chmc
