#include "chmc/flow.hpp"
#include "chmc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

namespace chmc {

void FlowConfig::validate() const {
    if (!(dt_safety > 0.0) || dt_safety > 1.0)
        throw config_error("flow: dt_safety must lie in (0, 1]");
    if (max_steps <= 0) throw config_error("flow: max_steps must be positive");
    if (!(backoff_factor > 0.0) || backoff_factor >= 1.0)
        throw config_error("flow: backoff_factor must lie in (0, 1)");
    if (retry_limit < 0) throw config_error("flow: retry_limit must be >= 0");
    if (sample_every < 1 || volume_every < 1)
        throw config_error("flow: sampling cadences must be >= 1");
}

double default_tol_l2(int n, double sigma, double area) {
    double sup = 1e-6 * std::pow(sigma, -double(n) - 1.0);
    return sup * sup * area;
}

double average_F(const GeometryField& geo) {
    double s = 0.0;
    for (std::size_t k = 0; k < geo.F.size(); ++k) s += geo.weight[k] * geo.F[k];
    return s / geo.area;
}

namespace {

struct StepEval {
    double f = 0.0, l2 = 0.0, sup = 0.0;
};

StepEval evaluate_deficit(const GeometryField& geo) {
    StepEval e;
    if (!geo.all_curvatures_positive())
        throw numeric_error("flow: non-positive principal curvature, F undefined");
    e.f = average_F(geo);
    for (std::size_t k = 0; k < geo.F.size(); ++k) {
        double d = geo.F[k] - e.f;
        e.l2 += geo.weight[k] * d * d;
        e.sup = std::max(e.sup, std::abs(d));
    }
    return e;
}

// Advance the profile by dt along (f - F) nu and re-express as a radial graph.
void advance_profile(Surface& surf, const GeometryField& geo, double f, double dt) {
    const int N = surf.nodes();
    const double c = surf.center_offset;
    std::vector<double> beta(std::size_t(N)), dist(std::size_t(N));
    for (int k = 0; k < N; ++k) {
        double speed = dt * (f - geo.F[std::size_t(k)]);
        double px = geo.x[std::size_t(k)] + speed * geo.nu_x[std::size_t(k)] - c;
        double ps = geo.s[std::size_t(k)] + speed * geo.nu_s[std::size_t(k)];
        beta[std::size_t(k)] = std::atan2(ps, px);
        dist[std::size_t(k)] = std::hypot(px, ps);
    }
    for (int k = 0; k + 1 < N; ++k)
        if (beta[std::size_t(k)] >= beta[std::size_t(k) + 1])
            throw numeric_error("flow: surface lost its radial-graph structure");

    // 4-point Lagrange interpolation of dist(beta) at the grid angles,
    // even reflection at both poles
    std::vector<double> xe(std::size_t(N) + 4), ye(std::size_t(N) + 4);
    xe[0] = -beta[1];
    xe[1] = -beta[0];
    ye[0] = dist[1];
    ye[1] = dist[0];
    for (int i = 0; i < N; ++i) {
        xe[std::size_t(i) + 2] = beta[std::size_t(i)];
        ye[std::size_t(i) + 2] = dist[std::size_t(i)];
    }
    xe[std::size_t(N) + 2] = 2.0 * M_PI - beta[std::size_t(N) - 1];
    xe[std::size_t(N) + 3] = 2.0 * M_PI - beta[std::size_t(N) - 2];
    ye[std::size_t(N) + 2] = dist[std::size_t(N) - 1];
    ye[std::size_t(N) + 3] = dist[std::size_t(N) - 2];

    for (int k = 0; k < N; ++k) {
        double q = surf.theta(k);
        auto it = std::upper_bound(xe.begin(), xe.end(), q);
        int j = std::clamp(int(it - xe.begin()) - 2, 0, int(xe.size()) - 4);
        double v = 0.0;
        for (int a = 0; a < 4; ++a) {
            double la = 1.0;
            for (int b = 0; b < 4; ++b)
                if (a != b)
                    la *= (q - xe[std::size_t(j + b)]) /
                          (xe[std::size_t(j + a)] - xe[std::size_t(j + b)]);
            v += la * ye[std::size_t(j + a)];
        }
        surf.profile[std::size_t(k)] = v;
    }
}

}  // namespace

void step(FlowState& state, const AmbientMetric& amb, const FlowConfig& cfg, double sigma) {
    GeometryField geo = geometry(state.surface, amb);
    StepEval e = evaluate_deficit(geo);
    SphereFit fit = best_fit_sphere(geo);
    double dth = state.surface.dtheta();
    double dt = cfg.dt_safety * state.dt_scale * (fit.radius * dth) * (fit.radius * dth);
    advance_profile(state.surface, geo, e.f, dt);
    state.t += dt;
    state.steps += 1;
    state.f = e.f;
    state.l2_deficit = e.l2;
    state.sup_deficit = e.sup;
    state.band = band_membership(geo, amb, sigma, cfg.B1, cfg.B2, cfg.B3);
}

FlowResult run_to_convergence(const Surface& initial, const AmbientMetric& amb,
                              const FlowConfig& cfg, double sigma) {
    cfg.validate();
    initial.validate();

    FlowResult out;
    FlowState st;
    st.surface = initial;

    double tol = cfg.tol_l2;
    {
        GeometryField geo0 = geometry(initial, amb);
        if (tol < 0.0) tol = default_tol_l2(amb.n, sigma, geo0.area);
    }

    std::deque<double> l2_hist;
    std::deque<Surface> checkpoints;
    std::deque<double> checkpoint_t;
    std::deque<long> checkpoint_steps;
    int retries = 0;
    double fmax_seen = 0.0;
    double last_volume = 0.0;
    bool have_volume = false;

    while (true) {
        GeometryField geo = geometry(st.surface, amb);
        StepEval e = evaluate_deficit(geo);
        fmax_seen = std::max(fmax_seen, std::abs(e.f));

        bool bad = !std::isfinite(e.l2) || !std::isfinite(e.f);
        double noise_floor = std::pow(64.0 * 2.2e-16 * fmax_seen, 2) * geo.area;
        if (!bad && st.steps >= 10 && !l2_hist.empty() && e.l2 > std::max(noise_floor * 16.0, 4.0 * tol) &&
            e.l2 > 2.0 * l2_hist.front())
            bad = true;
        if (bad) {
            if (retries >= cfg.retry_limit)
                throw numeric_error("flow: instability persisted after dt backoff");
            ++retries;
            st.dt_scale *= cfg.backoff_factor;
            if (!checkpoints.empty()) {
                st.surface = checkpoints.front();
                st.t = checkpoint_t.front();
                st.steps = checkpoint_steps.front();
            }
            l2_hist.clear();
            checkpoints.clear();
            checkpoint_t.clear();
            checkpoint_steps.clear();
            continue;
        }

        BandReport band = band_membership(geo, amb, sigma, cfg.B1, cfg.B2, cfg.B3);
        if (cfg.check_band && !band.in_band) {
            std::ostringstream os;
            os << "flow: surface left the band class at t=" << st.t
               << " (margins " << band.b1_margin << ", " << band.b2_margin << ", "
               << band.b3_margin << ")";
            throw numeric_error(os.str());
        }

        st.f = e.f;
        st.l2_deficit = e.l2;
        st.sup_deficit = e.sup;
        st.band = band;

        if (st.steps % cfg.sample_every == 0 || e.l2 < tol) {
            FlowSample smp;
            smp.t = st.t;
            smp.l2_deficit = e.l2;
            smp.sup_deficit = e.sup;
            smp.f = e.f;
            if (st.steps % (std::max(cfg.volume_every, cfg.sample_every)) == 0 || !have_volume) {
                last_volume = area_and_volume(st.surface, amb).second;
                have_volume = true;
            }
            smp.volume = last_volume;
            double maxr = 0.0;
            for (std::size_t k = 0; k < geo.x.size(); ++k)
                maxr = std::max(maxr, std::hypot(geo.x[k], geo.s[k]));
            smp.max_r = maxr;
            smp.b1_margin = band.b1_margin;
            smp.b2_margin = band.b2_margin;
            smp.b3_margin = band.b3_margin;
            out.series.push_back(smp);
        }

        if (e.l2 < tol) {
            st.converged = true;
            break;
        }
        if (st.t >= cfg.max_time || st.steps >= cfg.max_steps) break;

        // bookkeeping for instability rollback (state from 10 steps ago)
        l2_hist.push_back(e.l2);
        checkpoints.push_back(st.surface);
        checkpoint_t.push_back(st.t);
        checkpoint_steps.push_back(st.steps);
        if (l2_hist.size() > 10) {
            l2_hist.pop_front();
            checkpoints.pop_front();
            checkpoint_t.pop_front();
            checkpoint_steps.pop_front();
        }

        SphereFit fit = best_fit_sphere(geo);
        double dth = st.surface.dtheta();
        double dt = cfg.dt_safety * st.dt_scale * (fit.radius * dth) * (fit.radius * dth);
        advance_profile(st.surface, geo, e.f, dt);
        st.t += dt;
        st.steps += 1;
    }

    st.volume = area_and_volume(st.surface, amb).second;
    out.state = st;
    double pred = 2.0 * amb.m / std::pow(best_fit_sphere(st.surface).radius, amb.n);
    out.decay = decay_rate_fit(out.series, pred);
    return out;
}

DecayFit decay_rate_fit(const std::vector<FlowSample>& series, double predicted_rate) {
    DecayFit fit;
    fit.predicted_rate = predicted_rate;

    double fmax = 0.0;
    for (const auto& s : series) fmax = std::max(fmax, std::abs(s.f));
    double sup_floor = 1e3 * 2.2e-16 * fmax;

    std::vector<std::pair<double, double>> pts;  // (t, log l2)
    std::size_t start = series.size() / 10;
    for (std::size_t i = start; i < series.size(); ++i) {
        if (series[i].l2_deficit > 0.0 && series[i].sup_deficit > sup_floor)
            pts.emplace_back(series[i].t, std::log(series[i].l2_deficit));
    }
    if (pts.size() < 20) return fit;  // unavailable

    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    for (auto& [t, l] : pts) {
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
    }
    double nn = double(pts.size());
    double denom = nn * stt - st * st;
    if (denom <= 0.0) return fit;
    fit.fitted_rate = -(nn * stl - st * sl) / denom;
    fit.samples_used = int(pts.size());
    fit.available = true;
    return fit;
}

std::string series_to_csv(const std::vector<FlowSample>& series) {
    std::ostringstream os;
    os << "t,l2_deficit,sup_deficit,f,volume,max_r,B1_margin,B2_margin,B3_margin\n";
    os.precision(17);
    for (const auto& s : series)
        os << s.t << ',' << s.l2_deficit << ',' << s.sup_deficit << ',' << s.f << ',' << s.volume
           << ',' << s.max_r << ',' << s.b1_margin << ',' << s.b2_margin << ',' << s.b3_margin
           << '\n';
    return os.str();
}

}  // namespace chmc
