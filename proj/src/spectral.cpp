#include "chmc/spectral.hpp"
#include "chmc/errors.hpp"

#include <algorithm>
#include <cmath>

namespace chmc {
namespace {

inline double at(const std::vector<double>& a, int k, int p0, int p1) {
    int N = int(a.size());
    if (k < 0) return p0 * a[std::size_t(-k - 1)];
    if (k >= N) return p1 * a[std::size_t(2 * N - 1 - k)];
    return a[std::size_t(k)];
}

std::vector<double> d_dtheta2(const std::vector<double>& a, double dth, int p0, int p1) {
    int N = int(a.size());
    std::vector<double> d(a.size());
    for (int k = 0; k < N; ++k)
        d[std::size_t(k)] = (at(a, k + 1, p0, p1) - at(a, k - 1, p0, p1)) / (2.0 * dth);
    return d;
}

}  // namespace

OperatorMatrices assemble_L(const Surface& surf, const AmbientMetric& amb, double sigma) {
    GeometryField geo = geometry(surf, amb);
    if (!geo.all_curvatures_positive())
        throw numeric_error("spectral: surface has non-positive principal curvatures");
    const int n = surf.n;
    const int N = surf.nodes();
    const double dth = surf.dtheta();

    OperatorMatrices op;
    op.n = n;
    op.sigma = sigma;
    op.weights = Eigen::VectorXd(N);
    op.f_tt.resize(N);
    op.f_ff.resize(N);
    op.potential.resize(N);

    std::vector<double> B_tt(std::size_t(N)), B_ff(std::size_t(N));
    for (int k = 0; k < N; ++k) {
        double lt = geo.lambda_t[std::size_t(k)], lf = geo.lambda_f[std::size_t(k)];
        double Fv = geo.F[std::size_t(k)];
        op.f_tt[std::size_t(k)] = Fv * Fv / (lt * lt);
        op.f_ff[std::size_t(k)] = Fv * Fv / (lf * lf);
        NormalCurvature nc = normal_curvature(amb, geo, k);
        B_tt[std::size_t(k)] = nc.r_nu_tt;
        B_ff[std::size_t(k)] = nc.r_nu_ff;
        op.potential[std::size_t(k)] =
            op.f_tt[std::size_t(k)] * (lt * lt - B_tt[std::size_t(k)]) +
            (n - 2) * op.f_ff[std::size_t(k)] * (lf * lf - B_ff[std::size_t(k)]);
        op.weights[k] = geo.weight[std::size_t(k)];
    }

    // coefficients of the second-order operator on axisymmetric functions
    std::vector<double> dgtt = d_dtheta2(geo.g_tt, dth, +1, +1);
    std::vector<double> dgff = d_dtheta2(geo.g_ff, dth, +1, +1);

    op.L = Eigen::MatrixXd::Zero(N, N);
    auto add = [&](int row, int col, double v) {
        int N_ = N;
        if (col < 0) col = -col - 1;          // even reflection at theta = 0
        if (col >= N_) col = 2 * N_ - 1 - col;  // even reflection at theta = pi
        op.L(row, col) += v;
    };
    for (int k = 0; k < N; ++k) {
        double a = op.f_tt[std::size_t(k)] / geo.g_tt[std::size_t(k)];
        double gamma_ttt = dgtt[std::size_t(k)] / (2.0 * geo.g_tt[std::size_t(k)]);
        double c = (n - 2) * op.f_ff[std::size_t(k)] * dgff[std::size_t(k)] /
                   (2.0 * geo.g_ff[std::size_t(k)] * geo.g_tt[std::size_t(k)]);
        // Lu = -(a (u'' - Gamma^t_tt u') + c u') - potential * u
        add(k, k + 1, -a / (dth * dth));
        add(k, k, 2.0 * a / (dth * dth));
        add(k, k - 1, -a / (dth * dth));
        double cc = (c - a * gamma_ttt) / (2.0 * dth);
        add(k, k + 1, -cc);
        add(k, k - 1, +cc);
        add(k, k, -op.potential[std::size_t(k)]);
    }

    // F^{ij} divergence fields (enter S and the decay diagnostics)
    std::vector<double> omega(std::size_t(N)), f_up_tt(std::size_t(N));
    for (int k = 0; k < N; ++k) {
        omega[std::size_t(k)] = geo.weight[std::size_t(k)];  // proportional to the area density
        f_up_tt[std::size_t(k)] = op.f_tt[std::size_t(k)] / geo.g_tt[std::size_t(k)];
    }
    int pw = (n % 2 == 1) ? -1 : +1;  // parity of sin^{n-2}
    std::vector<double> wf(std::size_t(N));
    for (int k = 0; k < N; ++k) wf[std::size_t(k)] = omega[std::size_t(k)] * f_up_tt[std::size_t(k)];
    std::vector<double> dwf = d_dtheta2(wf, dth, pw, pw);
    op.div_f.resize(N);
    std::vector<double> divf_theta(std::size_t(N));
    for (int k = 0; k < N; ++k) {
        double v = dwf[std::size_t(k)] / omega[std::size_t(k)] +
                   dgtt[std::size_t(k)] / (2.0 * geo.g_tt[std::size_t(k)]) * f_up_tt[std::size_t(k)] -
                   (n - 2) * dgff[std::size_t(k)] /
                       (2.0 * geo.g_tt[std::size_t(k)] * geo.g_ff[std::size_t(k)]) *
                       op.f_ff[std::size_t(k)];
        divf_theta[std::size_t(k)] = v;
        op.div_f[std::size_t(k)] = std::sqrt(geo.g_tt[std::size_t(k)]) * std::abs(v);
    }
    std::vector<double> wdiv(std::size_t(N));
    for (int k = 0; k < N; ++k)
        wdiv[std::size_t(k)] = omega[std::size_t(k)] * divf_theta[std::size_t(k)];
    std::vector<double> dwdiv = d_dtheta2(wdiv, dth, -pw, -pw);
    op.div_div_f.resize(N);
    for (int k = 0; k < N; ++k)
        op.div_div_f[std::size_t(k)] = dwdiv[std::size_t(k)] / omega[std::size_t(k)];

    op.S = Eigen::MatrixXd::Zero(N, N);
    op.has_S = false;
    op.scratch_f_up_tt = f_up_tt;
    op.scratch_omega = omega;
    return op;
}

void assemble_S(OperatorMatrices& op) {
    const int N = int(op.weights.size());
    const double dth = M_PI / N;
    const std::vector<double>& a = op.scratch_f_up_tt;
    const std::vector<double>& omega = op.scratch_omega;

    op.S.setZero();
    for (int k = 0; k < N; ++k) {
        double m_up = (k + 1 < N) ? 0.5 * (omega[std::size_t(k)] * a[std::size_t(k)] +
                                           omega[std::size_t(k) + 1] * a[std::size_t(k) + 1])
                                  : 0.0;  // zero flux through the poles
        double m_dn = (k - 1 >= 0) ? 0.5 * (omega[std::size_t(k)] * a[std::size_t(k)] +
                                            omega[std::size_t(k) - 1] * a[std::size_t(k) - 1])
                                   : 0.0;
        double inv = 1.0 / (omega[std::size_t(k)] * dth * dth);
        if (k + 1 < N) {
            op.S(k, k + 1) -= m_up * inv;
            op.S(k, k) += m_up * inv;
        }
        if (k - 1 >= 0) {
            op.S(k, k - 1) -= m_dn * inv;
            op.S(k, k) += m_dn * inv;
        }
        op.S(k, k) -= op.potential[std::size_t(k)] + 0.5 * op.div_div_f[std::size_t(k)];
    }

    // weighted symmetry check
    double scale = 0.0, asym = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            double wij = op.weights[i] * op.S(i, j);
            double wji = op.weights[j] * op.S(j, i);
            scale = std::max(scale, std::abs(wij));
            asym = std::max(asym, std::abs(wij - wji));
        }
    if (asym > 1e-8 * scale) throw numeric_error("spectral: S assembly lost self-adjointness");
    op.has_S = true;
}

namespace {

Eigen::MatrixXd weighted_symmetric(const OperatorMatrices& op) {
    const int N = int(op.weights.size());
    Eigen::VectorXd sq = op.weights.array().sqrt();
    Eigen::MatrixXd M(N, N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) M(i, j) = sq[i] * op.S(i, j) / sq[j];
    return 0.5 * (M + M.transpose());
}

}  // namespace

SpectralReport eigen_report(const OperatorMatrices& op, const AmbientMetric& amb) {
    if (!op.has_S) throw numeric_error("spectral: call assemble_S before eigen_report");
    const int N = int(op.weights.size());
    Eigen::MatrixXd M = weighted_symmetric(op);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    if (es.info() != Eigen::Success) throw numeric_error("spectral: eigensolver failed");
    const Eigen::VectorXd& ev = es.eigenvalues();

    SpectralReport rep;
    rep.sigma = op.sigma;
    rep.n = amb.n;
    rep.m = amb.m;
    rep.delta = amb.delta;
    rep.eta0 = ev[0];
    rep.eta1 = ev[1];
    rep.smin = ev.array().abs().minCoeff();

    // deflate the constant function: Householder reflection sending q -> e0
    Eigen::VectorXd q = op.weights.array().sqrt();
    q.normalize();
    Eigen::VectorXd v = q;
    v[0] += (q[0] >= 0.0 ? 1.0 : -1.0);
    v.normalize();
    Eigen::MatrixXd Hm = Eigen::MatrixXd::Identity(N, N) - 2.0 * v * v.transpose();
    Eigen::MatrixXd T = Hm * M * Hm;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es2(T.block(1, 1, N - 1, N - 1));
    rep.mu0 = es2.eigenvalues()[0];

    rep.mu0_pred = amb.n * amb.m / ((amb.n - 1) * std::pow(op.sigma, amb.n));
    rep.eta0_pred = -1.0 / ((amb.n - 1) * op.sigma * op.sigma) +
                    (amb.n * amb.n - 2 * amb.n + 2) * amb.m /
                        double((amb.n - 1) * (amb.n - 2)) / std::pow(op.sigma, amb.n);
    rep.mu0_ratio = rep.mu0 / rep.mu0_pred;
    rep.eta0_ratio = rep.eta0 / rep.eta0_pred;
    rep.smin_scaled = rep.smin * std::pow(op.sigma, amb.n) / amb.m;
    return rep;
}

Eigen::VectorXd l_spectrum_real(const OperatorMatrices& op) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(op.L);
    Eigen::VectorXd re = es.eigenvalues().real();
    std::sort(re.data(), re.data() + re.size());
    return re;
}

TranslationModeCheck translation_mode_check(const OperatorMatrices& op, const Surface& surf,
                                            const AmbientMetric& amb) {
    GeometryField geo = geometry(surf, amb);
    const int N = surf.nodes();
    Eigen::VectorXd u(N);
    for (int k = 0; k < N; ++k)
        u[k] = geo.conf[std::size_t(k)] * geo.nu_x[std::size_t(k)];  // gbar(e1, nu)

    Eigen::VectorXd Lu = op.L * u;
    double uu = 0.0, uLu = 0.0;
    for (int k = 0; k < N; ++k) {
        uu += op.weights[k] * u[k] * u[k];
        uLu += op.weights[k] * u[k] * Lu[k];
    }
    TranslationModeCheck chk;
    chk.rayleigh = uLu / uu;
    double res = 0.0;
    for (int k = 0; k < N; ++k) {
        double r = Lu[k] - chk.rayleigh * u[k];
        res += op.weights[k] * r * r;
    }
    chk.residual_rel = std::sqrt(res / uu) / std::abs(chk.rayleigh);
    return chk;
}

}  // namespace chmc
