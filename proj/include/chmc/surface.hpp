#pragma once
#include "chmc/ambient.hpp"

#include <string>
#include <vector>

namespace chmc {

// Axisymmetric radial graph over S^{n-1}: the node at polar angle
// theta_k = (k+1/2)*pi/N sits at center_offset*e1 + rho_k*(cos theta_k,
// sin theta_k * omega). The grid is cell-centered, no nodes at the poles.
struct Surface {
    int n = 3;
    double center_offset = 0.0;
    std::vector<double> profile;  // rho_k > 1

    int nodes() const { return int(profile.size()); }
    double dtheta() const { return M_PI / nodes(); }
    double theta(int k) const { return (k + 0.5) * dtheta(); }
    void validate() const;  // throws config_error
};

Surface make_coordinate_sphere(int n, double sigma, double center_offset, int nodes);

// Per-node extrinsic geometry in the meridian half-plane. x is the axial
// coordinate, s the distance from the axis; (nu_x, nu_s) is the gbar-unit
// outward normal expressed in that plane.
struct GeometryField {
    int n = 3;
    double dtheta = 0.0;
    std::vector<double> theta, x, s;
    std::vector<double> ex, es;            // e_theta components (d position / d theta)
    std::vector<double> nu_x, nu_s;        // unit normal w.r.t. gbar
    std::vector<double> g_tt, g_ff;        // induced metric components
    std::vector<double> h_tt, h_ff;        // second fundamental form
    std::vector<double> lambda_t, lambda_f;
    std::vector<double> H, F;
    std::vector<double> ring_a;            // |ringA|
    std::vector<double> grad_ring_a;       // |nabla ringA|
    std::vector<double> weight;            // area measure per node (includes omega_{n-2} dtheta)
    std::vector<double> conf;              // ambient conformal factor at the node
    std::vector<unsigned char> bad_node;   // lambda <= 0, F undefined
    double area = 0.0;

    bool all_curvatures_positive() const;
};

GeometryField geometry(const Surface& surf, const AmbientMetric& amb);

// 1 / sum(1/lambda_i); throws numeric_error when any lambda <= 0.
double harmonic_mean_curvature(const std::vector<double>& lambdas);

struct BandReport {
    double sigma = 0.0;
    double b1_margin = 0.0;  // max |r - sigma|
    double b2_margin = 0.0;  // max |ringA| * sigma^{n+delta}
    double b3_margin = 0.0;  // max |grad ringA| * sigma^{n+1+delta}
    bool in_band = false;
};

BandReport band_membership(const Surface& surf, const AmbientMetric& amb, double sigma, double B1,
                           double B2, double B3);
BandReport band_membership(const GeometryField& geo, const AmbientMetric& amb, double sigma,
                           double B1, double B2, double B3);

// Area of the surface and enclosed volume relative to the coordinate unit
// ball, both w.r.t. gbar. Volume by per-ray Gauss-Legendre quadrature.
std::pair<double, double> area_and_volume(const Surface& surf, const AmbientMetric& amb);

struct GaussCodazziResidual {
    double gauss = 0.0;    // max |R_ijkl - (Rbar_ijkl + h_il h_jk - h_ik h_jl)|
    double codazzi = 0.0;  // max |nabla_k h_ij - nabla_j h_ik - Rbar_{nu i j k}|
    double h_scale = 0.0;  // max |h|^2 for normalization
};
GaussCodazziResidual gauss_codazzi_residual(const Surface& surf, const AmbientMetric& amb);

// Least-squares round sphere through the nodes: center a*e1 and radius r0.
struct SphereFit {
    double center = 0.0;
    double radius = 0.0;
};
SphereFit best_fit_sphere(const Surface& surf);
SphereFit best_fit_sphere(const GeometryField& geo);

// Re-express the surface as a radial graph about new_center (interpolating the
// meridian curve); used by the flow step and foliation comparisons.
Surface reproject(const Surface& surf, double new_center);

// Radial graph samples rho(theta_k) of `surf` about an arbitrary axis point.
std::vector<double> profile_about(const Surface& surf, double center);

// Diagnostics used by tests: tangential projection of Ric(nu,.) and the
// derivative norms entering the Lemma-style gradient inequality.
struct DerivativeDiagnostics {
    std::vector<double> grad_a_sq;   // |nabla A|^2
    std::vector<double> grad_h_sq;   // |nabla H|^2
    std::vector<double> w_sq;        // |w|^2, w = tangential Ric(nu,.)
};
DerivativeDiagnostics derivative_diagnostics(const Surface& surf, const AmbientMetric& amb);

// Paper-convention normal-normal curvature contraction sum_i F^{ii} Rbar_{nu i nu i}
// and related frame quantities, used by flow/spectral potentials.
struct NormalCurvature {
    double r_nu_tt = 0.0;  // Rbar(nu, e_t, nu, e_t), unit principal directions
    double r_nu_ff = 0.0;  // one azimuthal direction (multiplicity n-2)
};
NormalCurvature normal_curvature(const AmbientMetric& amb, const GeometryField& geo, int k);

// Euclidean-measure area and axial centroid (for the center-of-mass module).
std::pair<double, double> euclidean_area_centroid(const Surface& surf);

// JSON (de)serialization of the surface exchange format.
std::string surface_to_json(const Surface& surf);
Surface surface_from_json(const std::string& text);

// GeometryField CSV, one row per node.
std::string geometry_to_csv(const GeometryField& geo);

}  // namespace chmc
