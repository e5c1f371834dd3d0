#pragma once
#include "chmc/flow.hpp"
#include "chmc/spectral.hpp"

#include <optional>

namespace chmc {

struct LadderEntry {
    double sigma = 0.0;
    double F_value = 0.0;  // constant harmonic mean curvature of the limit
    Surface surface;
    bool converged = false;
    double sup_deficit = 0.0;
    std::optional<SpectralReport> spectral;
};

struct FoliationLadder {
    std::vector<LadderEntry> entries;
    std::optional<std::string> failure;  // first flow failure; completed entries kept
};

// Runs the flow from the coordinate sphere of each sigma (increasing order).
// A flow failure aborts the ladder; completed entries are preserved in the
// returned partial ladder carried by the thrown diagnostic.
FoliationLadder build_ladder(const std::vector<double>& sigmas, const AmbientMetric& amb,
                             const FlowConfig& cfg, int nodes, int jobs = 1,
                             bool with_spectral = false);

struct FoliationGap {
    double sigma_lo = 0.0, sigma_hi = 0.0;
    double min_gap = 0.0;
    double theta_at_min = 0.0;
    bool recentred_warning = false;
};

struct FoliationCheck {
    std::vector<FoliationGap> gaps;
    bool ordered = true;        // all gaps strictly positive
    bool f_decreasing = true;   // F_value strictly decreasing in sigma
};

FoliationCheck check_foliation(const FoliationLadder& ladder);

struct CenterSample {
    double parameter = 0.0;  // sigma (CHMC centroid) or radius (ADM)
    double value = 0.0;
};

struct CenterReport {
    std::vector<CenterSample> chm;   // per-sigma euclidean centroids
    double chm_extrapolated = 0.0;   // c_inf of the fit c(sigma) = c_inf + b sigma^{-1/2}
    double chm_fit_residual = 0.0;
    std::vector<CenterSample> adm;   // per-radius flux values
    double adm_extrapolated = 0.0;   // Richardson in 1/R
    double b_term = 0.0;             // configured dipole coefficient, if any
};

// Euclidean-measure centroids of the ladder leaves plus sigma^{-1/2} fit.
CenterReport center_of_mass_chm(const FoliationLadder& ladder);

// ADM flux integral on coordinate spheres |x| = R plus Richardson
// extrapolation; radii must be increasing, preferably a doubling ladder.
CenterReport center_of_mass_adm(const AmbientMetric& amb, const std::vector<double>& radii,
                                int quadrature_nodes = 512);

// Single-radius ADM flux value (axial component).
double adm_flux_value(const AmbientMetric& amb, double radius, int quadrature_nodes = 512);

}  // namespace chmc
