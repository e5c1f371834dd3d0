#pragma once
#include "chmc/surface.hpp"

#include <functional>
#include <optional>

namespace chmc {

struct FlowConfig {
    double dt_safety = 0.1;        // kappa in dt = kappa (sigma dtheta)^2
    double tol_l2 = -1.0;          // stopping threshold; <0 means the sigma-scaled default
    double max_time = 1e9;
    long max_steps = 50'000'000;
    double backoff_factor = 0.5;   // dt scale on instability
    int retry_limit = 8;
    double B1 = 5.0, B2 = 60.0, B3 = 600.0;  // band constants monitored along the run
    int sample_every = 25;         // diagnostics cadence (steps)
    int volume_every = 200;        // volume quadrature cadence (steps)
    bool check_band = true;

    void validate() const;
};

struct FlowSample {
    double t = 0.0;
    double l2_deficit = 0.0;
    double sup_deficit = 0.0;
    double f = 0.0;
    double volume = 0.0;
    double max_r = 0.0;
    double b1_margin = 0.0, b2_margin = 0.0, b3_margin = 0.0;
};

struct FlowState {
    Surface surface;
    double t = 0.0;
    double f = 0.0;
    double l2_deficit = 0.0;
    double sup_deficit = 0.0;
    double volume = 0.0;
    BandReport band;
    long steps = 0;
    double dt_scale = 1.0;  // cumulative instability backoff
    bool converged = false;
};

struct DecayFit {
    bool available = false;
    double fitted_rate = 0.0;
    double predicted_rate = 0.0;  // 2m / sigma^n with sigma the final best-fit radius
    int samples_used = 0;
};

// Default stopping threshold: sup-deficit scale 1e-6 sigma^{-n-1} squared
// times the area.
double default_tol_l2(int n, double sigma, double area);

// One explicit Euler step with radial re-projection. Updates state in place;
// the BandReport uses `sigma` for the margin scalings.
void step(FlowState& state, const AmbientMetric& amb, const FlowConfig& cfg, double sigma);

// Area-weighted average of F over the surface.
double average_F(const GeometryField& geo);

struct FlowResult {
    FlowState state;
    DecayFit decay;
    std::vector<FlowSample> series;
};

FlowResult run_to_convergence(const Surface& initial, const AmbientMetric& amb,
                              const FlowConfig& cfg, double sigma);

// Least-squares exponential rate of the positive tail of the series,
// excluding the first 10% of samples and anything at the noise floor.
DecayFit decay_rate_fit(const std::vector<FlowSample>& series, double predicted_rate);

std::string series_to_csv(const std::vector<FlowSample>& series);

}  // namespace chmc
