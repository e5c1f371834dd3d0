#pragma once
#include "chmc/surface.hpp"

#include <Eigen/Dense>

namespace chmc {

// Discretized linearized harmonic-mean-curvature operator L, its
// symmetrization S (flux form), and the per-node fields entering them,
// restricted to axisymmetric modes.
struct OperatorMatrices {
    int n = 0;
    double sigma = 0.0;
    Eigen::MatrixXd L;                   // row(k) = (Lu)_k
    Eigen::MatrixXd S;                   // flux-form symmetric part
    Eigen::VectorXd weights;             // area measure per node
    std::vector<double> f_tt, f_ff;      // F^{ii} in the principal frame
    std::vector<double> potential;       // F^{ij}h_jk h_ik - F^{ij} Rbar_{nu i nu j}
    std::vector<double> div_f;           // (nabla_i F^{ij}) theta-component, lowered norm
    std::vector<double> div_div_f;       // F^{ij}_{,ij}
    std::vector<double> scratch_f_up_tt;  // F^{theta theta} contravariant, reused by assemble_S
    std::vector<double> scratch_omega;    // area density per node
    bool has_S = false;
};

OperatorMatrices assemble_L(const Surface& surf, const AmbientMetric& amb, double sigma);

// Adds the flux-form S; throws numeric_error if the weighted asymmetry of the
// result exceeds 1e-8 relative.
void assemble_S(OperatorMatrices& op);

struct SpectralReport {
    double sigma = 0.0;
    int n = 0;
    double m = 0.0;
    double delta = 0.0;
    double mu0 = 0.0;   // lowest eigenvalue of S on area-weighted mean-zero functions
    double eta0 = 0.0;  // lowest unconstrained eigenvalue
    double eta1 = 0.0;  // second eigenvalue
    double smin = 0.0;  // smallest singular value of S (weighted)
    double mu0_pred = 0.0;
    double eta0_pred = 0.0;
    double mu0_ratio = 0.0;
    double eta0_ratio = 0.0;
    double smin_scaled = 0.0;  // smin * sigma^n / m
};

SpectralReport eigen_report(const OperatorMatrices& op, const AmbientMetric& amb);

// Eigenvalues of the non-symmetric L in the weighted inner product (real
// parts, sorted), for the L-vs-S comparison experiments.
Eigen::VectorXd l_spectrum_real(const OperatorMatrices& op);

// Rayleigh quotient and relative residual of the axial-translation function
// u = gbar(e1, nu) as an approximate eigenfunction of L.
struct TranslationModeCheck {
    double rayleigh = 0.0;
    double residual_rel = 0.0;  // ||Lu - rayleigh u|| / (rayleigh ||u||), weighted norms
};
TranslationModeCheck translation_mode_check(const OperatorMatrices& op, const Surface& surf,
                                            const AmbientMetric& amb);

}  // namespace chmc
