#include "chmc/foliation.hpp"
#include "chmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>

namespace chmc {

FoliationLadder build_ladder(const std::vector<double>& sigmas, const AmbientMetric& amb,
                             const FlowConfig& cfg, int nodes, int jobs, bool with_spectral) {
    for (std::size_t i = 0; i + 1 < sigmas.size(); ++i)
        if (!(sigmas[i] < sigmas[i + 1]))
            throw config_error("build_ladder: sigmas must be strictly increasing");

    FoliationLadder ladder;
    ladder.entries.resize(sigmas.size());

    std::vector<std::string> errors(sigmas.size());
    auto run_one = [&](std::size_t i) {
        double sigma = sigmas[i];
        try {
            Surface start = make_coordinate_sphere(amb.n, sigma, 0.0, nodes);
            FlowResult res = run_to_convergence(start, amb, cfg, sigma);
            LadderEntry e;
            e.sigma = sigma;
            e.surface = res.state.surface;
            e.F_value = res.state.f;
            e.converged = res.state.converged;
            e.sup_deficit = res.state.sup_deficit;
            if (with_spectral) {
                OperatorMatrices op = assemble_L(e.surface, amb, sigma);
                assemble_S(op);
                e.spectral = eigen_report(op, amb);
            }
            ladder.entries[i] = std::move(e);
        } catch (const std::exception& ex) {
            std::ostringstream os;
            os << "sigma=" << sigma << ": " << ex.what();
            errors[i] = os.str();
        }
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < sigmas.size(); ++i) {
            run_one(i);
            if (!errors[i].empty()) break;  // abort remaining entries, keep partials
        }
    } else {
        std::vector<std::future<void>> pending;
        std::size_t next = 0;
        while (next < sigmas.size() || !pending.empty()) {
            while (int(pending.size()) < jobs && next < sigmas.size()) {
                pending.push_back(std::async(std::launch::async, run_one, next));
                ++next;
            }
            pending.front().get();
            pending.erase(pending.begin());
        }
    }
    for (const auto& msg : errors)
        if (!msg.empty()) {
            ladder.failure = msg;
            break;
        }
    // drop unfinished tail entries
    while (!ladder.entries.empty() && ladder.entries.back().surface.profile.empty())
        ladder.entries.pop_back();
    return ladder;
}

FoliationCheck check_foliation(const FoliationLadder& ladder) {
    if (ladder.entries.size() < 2)
        throw config_error("check_foliation: need at least two ladder entries");
    FoliationCheck out;
    for (std::size_t i = 0; i + 1 < ladder.entries.size(); ++i) {
        const Surface& lo = ladder.entries[i].surface;
        const Surface& hi = ladder.entries[i + 1].surface;
        FoliationGap gap;
        gap.sigma_lo = ladder.entries[i].sigma;
        gap.sigma_hi = ladder.entries[i + 1].sigma;

        double c_common = 0.5 * (best_fit_sphere(lo).center + best_fit_sphere(hi).center);
        double spread = std::abs(best_fit_sphere(lo).center - best_fit_sphere(hi).center);
        gap.recentred_warning = spread > 0.5 * (gap.sigma_hi - gap.sigma_lo);

        std::vector<double> rho_lo = profile_about(lo, c_common);
        std::vector<double> rho_hi = profile_about(hi, c_common);
        double min_gap = std::numeric_limits<double>::infinity();
        double th_at = 0.0;
        int N = int(rho_lo.size());
        for (int k = 0; k < N; ++k) {
            double g = rho_hi[std::size_t(k)] - rho_lo[std::size_t(k)];
            if (g < min_gap) {
                min_gap = g;
                th_at = (k + 0.5) * M_PI / N;
            }
        }
        gap.min_gap = min_gap;
        gap.theta_at_min = th_at;
        out.gaps.push_back(gap);
        if (!(min_gap > 0.0)) out.ordered = false;
        if (!(ladder.entries[i + 1].F_value < ladder.entries[i].F_value)) out.f_decreasing = false;
    }
    return out;
}

CenterReport center_of_mass_chm(const FoliationLadder& ladder) {
    if (ladder.entries.empty()) throw config_error("center_of_mass_chm: empty ladder");
    CenterReport rep;
    for (const auto& e : ladder.entries) {
        auto [area, centroid] = euclidean_area_centroid(e.surface);
        (void)area;
        rep.chm.push_back({e.sigma, centroid});
    }
    // fit c(sigma) = c_inf + b * sigma^{-1/2}
    double s00 = 0.0, s01 = 0.0, s11 = 0.0, r0 = 0.0, r1 = 0.0;
    for (const auto& p : rep.chm) {
        double phi = std::pow(p.parameter, -0.5);
        s00 += 1.0;
        s01 += phi;
        s11 += phi * phi;
        r0 += p.value;
        r1 += p.value * phi;
    }
    double det = s00 * s11 - s01 * s01;
    if (std::abs(det) > 1e-300 && rep.chm.size() >= 2) {
        double c_inf = (s11 * r0 - s01 * r1) / det;
        double b = (s00 * r1 - s01 * r0) / det;
        rep.chm_extrapolated = c_inf;
        double res = 0.0;
        for (const auto& p : rep.chm) {
            double pred = c_inf + b * std::pow(p.parameter, -0.5);
            res = std::max(res, std::abs(p.value - pred));
        }
        rep.chm_fit_residual = res;
    } else {
        rep.chm_extrapolated = rep.chm.back().value;
    }
    return rep;
}

double adm_flux_value(const AmbientMetric& amb, double radius, int quadrature_nodes) {
    const int n = amb.n;
    const int Nq = quadrature_nodes;
    const double dth = M_PI / Nq;
    double omega_n2 = 2.0 * std::pow(M_PI, (n - 1) / 2.0) / std::tgamma((n - 1) / 2.0);
    double omega_n1 = 2.0 * std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0);

    double total = 0.0;
    VecN y = VecN::Zero(n), yp = VecN::Zero(n), ym = VecN::Zero(n);
    for (int q = 0; q < Nq; ++q) {
        double th = (q + 0.5) * dth;
        double ux = std::cos(th), us = std::sin(th);
        y.setZero();
        y[0] = radius * ux;
        y[1] = radius * us;
        double h = amb.fd_step_rel * radius;

        // dgm[a](i,j) = g_{ij,a}
        std::array<MatN, kMaxDim> dgm;
        for (int a = 0; a < n; ++a) {
            yp = y;
            ym = y;
            yp[a] += h;
            ym[a] -= h;
            dgm[std::size_t(a)] = (metric_at(amb, yp) - metric_at(amb, ym)) / (2.0 * h);
        }
        MatN g = metric_at(amb, y);
        VecN nu_e = VecN::Zero(n);
        nu_e[0] = ux;
        nu_e[1] = us;

        const int k = 0;  // axial component; transverse ones vanish by symmetry
        double term1 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                term1 += y[k] * (dgm[std::size_t(i)](i, j) - dgm[std::size_t(j)](i, i)) * nu_e[j];
        double term2 = 0.0;
        for (int i = 0; i < n; ++i) term2 += g(i, k) * nu_e[i] - g(i, i) * nu_e[k];

        total += (term1 - term2) * std::pow(us, n - 2.0) * dth;
    }
    total *= omega_n2 * std::pow(radius, n - 1.0);
    return total / (2.0 * amb.m * (n - 1) * omega_n1);
}

CenterReport center_of_mass_adm(const AmbientMetric& amb, const std::vector<double>& radii,
                                int quadrature_nodes) {
    if (radii.size() < 2) throw config_error("center_of_mass_adm: need at least two radii");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] < radii[i + 1]))
            throw config_error("center_of_mass_adm: radii must be increasing");
    double ramp_end = 2.0 * amb.perturbation.cutoff_radius;
    if (radii.front() < ramp_end)
        throw config_error("center_of_mass_adm: radii must lie beyond the cutoff ramp");

    CenterReport rep;
    rep.b_term = amb.dipole_b;
    for (double r : radii) rep.adm.push_back({r, adm_flux_value(amb, r, quadrature_nodes)});

    // Richardson in 1/R assuming a doubling ladder; first eliminate the 1/R
    // term pairwise, then the 1/R^2 remainder.
    std::vector<double> v;
    for (const auto& p : rep.adm) v.push_back(p.value);
    std::vector<double> r1;
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        double ratio = rep.adm[i + 1].parameter / rep.adm[i].parameter;
        r1.push_back((ratio * v[i + 1] - v[i]) / (ratio - 1.0));
    }
    if (r1.size() >= 2) {
        std::vector<double> r2;
        for (std::size_t i = 0; i + 1 < r1.size(); ++i) {
            double ratio = rep.adm[i + 1].parameter / rep.adm[i].parameter;
            double q = ratio * ratio;
            r2.push_back((q * r1[i + 1] - r1[i]) / (q - 1.0));
        }
        rep.adm_extrapolated = r2.back();
    } else {
        rep.adm_extrapolated = r1.empty() ? v.back() : r1.back();
    }
    return rep;
}

}  // namespace chmc
