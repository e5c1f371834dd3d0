#include "chmc/ambient.hpp"
#include "chmc/errors.hpp"

#include <cmath>

namespace chmc {
namespace {

// x^p for small non-negative integer p, else std::pow. The conformal exponent
// 4/(n-2) is integral for n = 3, 4, 6, which covers the desk-scale runs.
double pow_maybe_int(double x, double p) {
    int ip = int(p);
    if (double(ip) == p && ip >= 0 && ip <= 8) {
        double r = 1.0;
        for (int i = 0; i < ip; ++i) r *= x;
        return r;
    }
    return std::pow(x, p);
}

// C^2 ramp: 0 below cutoff, 1 above 2*cutoff.
double smoothstep_ramp(double r, double cutoff) {
    double x = (r - cutoff) / cutoff;
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

// Truncated cosine series via Chebyshev recurrence, ct = cos(theta).
double cosine_series(const std::vector<double>& c, double ct) {
    if (c.empty()) return 0.0;
    double q = c[0];
    double tkm1 = 1.0, tk = ct;
    for (std::size_t k = 1; k < c.size(); ++k) {
        q += c[k] * tk;
        double tkp1 = 2.0 * ct * tk - tkm1;
        tkm1 = tk;
        tk = tkp1;
    }
    return q;
}

}  // namespace

void AmbientMetric::validate() const {
    if (n < 3) throw config_error("ambient: dimension n must be >= 3");
    if (n > kMaxDim) throw config_error("ambient: dimension n exceeds supported maximum");
    if (!(m > 0.0)) throw config_error("ambient: mass m must be positive");
    if (delta < 0.0) throw config_error("ambient: decay exponent delta must be >= 0");
    if (!(fd_step_rel > 0.0) || fd_step_rel > 0.05)
        throw config_error("ambient: fd_step_rel must lie in (0, 0.05]");
    if (perturbation.cutoff_radius < 1.0)
        throw config_error("ambient: perturbation cutoff_radius must be >= 1");
    if (!std::isfinite(perturbation.epsilon)) throw config_error("ambient: epsilon not finite");
}

double schwarzschild_phi(const AmbientMetric& amb, double r) {
    return std::pow(1.0 + amb.m / (2.0 * pow_maybe_int(r, double(amb.n - 2))), 1.0 / (amb.n - 2));
}

double perturbation_at(const AmbientMetric& amb, const VecN& y) {
    const PerturbationSpec& p = amb.perturbation;
    if (p.epsilon == 0.0) return 0.0;
    VecN z = y;
    z[0] -= amb.center;
    double r = z.norm();
    double chi = smoothstep_ramp(r, p.cutoff_radius);
    if (chi == 0.0) return 0.0;
    double ct = z[0] / r;
    double q = cosine_series(p.cosine_coeffs, ct);
    return p.epsilon * std::pow(r, 1.0 - amb.n - amb.delta) * chi * q;
}

double conformal_factor(const AmbientMetric& amb, const VecN& y) {
    VecN z = y;
    z[0] -= amb.center;
    double r = z.norm();
    if (r < 1.0) throw numeric_error("ambient: point inside excluded ball B_1");
    double u = 1.0 + amb.m / (2.0 * pow_maybe_int(r, double(amb.n - 2)));
    if (amb.dipole_b != 0.0) {
        double chi = smoothstep_ramp(r, amb.perturbation.cutoff_radius);
        u += chi * amb.dipole_b * z[0] / pow_maybe_int(r, double(amb.n));
    }
    double base = pow_maybe_int(u, 4.0 / (amb.n - 2));
    return base + perturbation_at(amb, y);
}

MatN metric_at(const AmbientMetric& amb, const VecN& y) {
    double c = conformal_factor(amb, y);
    MatN g = MatN::Zero(amb.n, amb.n);
    for (int a = 0; a < amb.n; ++a) g(a, a) = c;
    return g;
}

Tensor3 christoffel_at(const AmbientMetric& amb, const VecN& y) {
    const int n = amb.n;
    VecN z = y;
    z[0] -= amb.center;
    double r = z.norm();
    double h = amb.fd_step_rel * r;
    if (r - h < 1.0) throw numeric_error("ambient: finite-difference stencil leaves the domain");

    // dg[a](i,j) = d g_ij / d y^a
    std::array<MatN, kMaxDim> dg;
    VecN yp = y, ym = y;
    for (int a = 0; a < n; ++a) {
        yp[a] += h;
        ym[a] -= h;
        dg[a] = (metric_at(amb, yp) - metric_at(amb, ym)) / (2.0 * h);
        yp[a] = y[a];
        ym[a] = y[a];
    }
    MatN g = metric_at(amb, y);
    MatN ginv = g.inverse();
    if (!ginv.allFinite()) throw numeric_error("ambient: metric not invertible");

    Tensor3 gam(n);
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                double s = 0.0;
                for (int d = 0; d < n; ++d)
                    s += ginv(c, d) * (dg[a](d, b) + dg[b](d, a) - dg[d](a, b));
                gam(c, a, b) = 0.5 * s;
                gam(c, b, a) = 0.5 * s;
            }
    return gam;
}

CurvatureAtPoint curvature_at(const AmbientMetric& amb, const VecN& y) {
    const int n = amb.n;
    VecN z = y;
    z[0] -= amb.center;
    double r = z.norm();
    double h = amb.fd_step_rel * r;

    CurvatureAtPoint out;
    out.n = n;
    out.metric = metric_at(amb, y);
    out.inverse_metric = out.metric.inverse();
    out.christoffel = christoffel_at(amb, y);

    std::vector<Tensor3> dgam(n, Tensor3(n));
    VecN yp = y, ym = y;
    for (int a = 0; a < n; ++a) {
        yp[a] += h;
        ym[a] -= h;
        Tensor3 gp = christoffel_at(amb, yp);
        Tensor3 gm = christoffel_at(amb, ym);
        for (std::size_t i = 0; i < gp.v.size(); ++i)
            dgam[a].v[i] = (gp.v[i] - gm.v[i]) / (2.0 * h);
        yp[a] = y[a];
        ym[a] = y[a];
    }

    // R^r_{s mu nu} = d_mu Gamma^r_{nu s} - d_nu Gamma^r_{mu s} + Gamma Gamma
    Tensor4 riem_up(n);
    const Tensor3& G = out.christoffel;
    for (int rr = 0; rr < n; ++rr)
        for (int s = 0; s < n; ++s)
            for (int mu = 0; mu < n; ++mu)
                for (int nu = 0; nu < n; ++nu) {
                    double v = dgam[mu](rr, nu, s) - dgam[nu](rr, mu, s);
                    for (int l = 0; l < n; ++l)
                        v += G(rr, mu, l) * G(l, nu, s) - G(rr, nu, l) * G(l, mu, s);
                    riem_up(rr, s, mu, nu) = v;
                }

    out.riemann = Tensor4(n);
    for (int a = 0; a < n; ++a)
        for (int s = 0; s < n; ++s)
            for (int mu = 0; mu < n; ++mu)
                for (int nu = 0; nu < n; ++nu) {
                    double v = 0.0;
                    for (int l = 0; l < n; ++l) v += out.metric(a, l) * riem_up(l, s, mu, nu);
                    out.riemann(a, s, mu, nu) = v;
                }

    out.ricci = MatN::Zero(n, n);
    for (int s = 0; s < n; ++s)
        for (int nu = 0; nu < n; ++nu) {
            double v = 0.0;
            for (int l = 0; l < n; ++l) v += riem_up(l, s, l, nu);
            out.ricci(s, nu) = v;
        }
    out.scalar = 0.0;
    for (int s = 0; s < n; ++s)
        for (int nu = 0; nu < n; ++nu) out.scalar += out.inverse_metric(s, nu) * out.ricci(s, nu);

    // Weyl part of the decomposition; trace-free by construction up to FD error.
    out.weyl = Tensor4(n);
    const MatN& g = out.metric;
    const MatN& ric = out.ricci;
    double scal = out.scalar;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d) {
                    double w = out.riemann(a, b, c, d);
                    w += (ric(a, d) * g(b, c) + ric(b, c) * g(a, d) - ric(a, c) * g(b, d) -
                          ric(b, d) * g(a, c)) /
                         (n - 2);
                    w += scal / double((n - 1) * (n - 2)) * (g(a, c) * g(b, d) - g(a, d) * g(b, c));
                    out.weyl(a, b, c, d) = w;
                }
    return out;
}

MatN ricci_closed_form(const AmbientMetric& amb, const VecN& y) {
    const int n = amb.n;
    VecN z = y;
    z[0] -= amb.center;
    double r = z.norm();
    if (r < 1.0) throw numeric_error("ambient: point inside excluded ball B_1");
    double phi = schwarzschild_phi(amb, r);
    double pref = (n - 2) * amb.m / pow_maybe_int(r, double(n)) * std::pow(phi, 4.0 - 2.0 * n);
    MatN ric = MatN::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) ric(a, b) = -pref * n * z[a] * z[b] / (r * r);
        ric(a, a) += pref;
    }
    return ric;
}

namespace {

// Nested central differences of the scalar perturbation along Cartesian axes.
double p_mixed_partial(const AmbientMetric& amb, VecN y, const int* idx, int l, double h) {
    if (l == 0) return perturbation_at(amb, y);
    VecN yp = y, ym = y;
    yp[idx[0]] += h;
    ym[idx[0]] -= h;
    return (p_mixed_partial(amb, yp, idx + 1, l - 1, h) -
            p_mixed_partial(amb, ym, idx + 1, l - 1, h)) /
           (2.0 * h);
}

}  // namespace

std::vector<PerturbationDecayRow> perturbation_decay_report(const AmbientMetric& amb,
                                                            const std::vector<double>& radii) {
    const int n = amb.n;
    const int ndirs = 17;
    std::vector<PerturbationDecayRow> rows;
    for (double r : radii) {
        PerturbationDecayRow row;
        row.radius = r;
        double h = 5e-3 * r;
        for (int l = 0; l <= 3; ++l) {
            double best = 0.0;
            for (int s = 0; s < ndirs; ++s) {
                double th = (s + 0.5) * M_PI / ndirs;
                VecN y = VecN::Zero(n);
                y[0] = amb.center + r * std::cos(th);
                y[1] = r * std::sin(th);
                // enumerate index tuples (i1..il), i_k in {0..n-1}
                int idx[3] = {0, 0, 0};
                int count = 1;
                for (int k = 0; k < l; ++k) count *= n;
                for (int t = 0; t < count; ++t) {
                    int tt = t;
                    for (int k = 0; k < l; ++k) {
                        idx[k] = tt % n;
                        tt /= n;
                    }
                    double v = std::abs(p_mixed_partial(amb, y, idx, l, h));
                    best = std::max(best, v);
                }
            }
            row.constants[std::size_t(l)] = best * std::pow(r, n - 1.0 + l + amb.delta);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace chmc
