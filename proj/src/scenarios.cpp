#include "chmc/scenarios.hpp"
#include "chmc/errors.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace chmc {

using nlohmann::json;

namespace {
constexpr const char* kVersion = "0.1.0";
}

int log_level() {
    static int lvl = [] {
        const char* env = std::getenv("CHMC_LOG");
        if (!env) return 0;
        return std::atoi(env);
    }();
    return lvl;
}

void log_line(int level, const std::string& msg) {
    if (log_level() >= level) std::cerr << "[chmc] " << msg << "\n";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "curvature-check") return Scenario::curvature_check;
    if (s == "flow") return Scenario::flow;
    if (s == "spectral") return Scenario::spectral;
    if (s == "foliation") return Scenario::foliation;
    if (s == "centers") return Scenario::centers;
    if (s == "uniqueness-probe") return Scenario::uniqueness_probe;
    throw config_error("unknown scenario: " + s);
}

std::string scenario_to_string(Scenario s) {
    switch (s) {
        case Scenario::curvature_check: return "curvature-check";
        case Scenario::flow: return "flow";
        case Scenario::spectral: return "spectral";
        case Scenario::foliation: return "foliation";
        case Scenario::centers: return "centers";
        case Scenario::uniqueness_probe: return "uniqueness-probe";
    }
    return "?";
}

void RunConfig::validate() const {
    ambient.validate();
    flow.validate();
    if (nodes < 64) throw config_error("grid: nodes must be >= 64");
    if (sigma <= 2.0) throw config_error("sigma must exceed 2");
    for (double s : sigma_list)
        if (s <= 2.0) throw config_error("sigma_list entries must exceed 2");
    if (std::abs(initial_profile.amplitude) >= 0.5 || std::abs(initial_profile_b.amplitude) >= 0.5)
        throw config_error("initial profile bump amplitude must stay below 0.5");
    if (jobs < 1) throw config_error("jobs must be >= 1");
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw config_error("config: unknown key \"" + it.key() + "\" in " + where);
}

BumpSpec parse_bump(const json& j, const std::string& where) {
    reject_unknown(j, {"bump_amplitude", "bump_power", "center_offset"}, where);
    BumpSpec b;
    b.amplitude = j.value("bump_amplitude", 0.0);
    b.power = j.value("bump_power", 2);
    b.center_offset = j.value("center_offset", 0.0);
    if (b.power < 0 || b.power > 16) throw config_error("config: bump_power out of range");
    return b;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const std::exception& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    reject_unknown(j,
                   {"scenario", "ambient", "grid", "flow", "sigma", "sigma_list", "radii_list",
                    "initial_profile", "initial_profile_b", "chmc_report_threshold",
                    "with_spectral", "dump_matrices", "output_dir", "seed", "jobs", "tol_sup"},
                   "top level");
    RunConfig cfg;
    if (!j.contains("scenario")) throw config_error("config: missing \"scenario\"");
    cfg.scenario = scenario_from_string(j["scenario"].get<std::string>());

    if (j.contains("ambient")) {
        const json& a = j["ambient"];
        reject_unknown(a, {"n", "m", "delta", "perturbation", "fd_step_rel", "center", "dipole_b"},
                       "ambient");
        cfg.ambient.n = a.value("n", 3);
        cfg.ambient.m = a.value("m", 2.0);
        cfg.ambient.delta = a.value("delta", 0.0);
        cfg.ambient.fd_step_rel = a.value("fd_step_rel", 1e-4);
        cfg.ambient.center = a.value("center", 0.0);
        cfg.ambient.dipole_b = a.value("dipole_b", 0.0);
        if (a.contains("perturbation")) {
            const json& p = a["perturbation"];
            reject_unknown(p, {"epsilon", "cosine_coeffs", "cutoff_radius"}, "ambient.perturbation");
            cfg.ambient.perturbation.epsilon = p.value("epsilon", 0.0);
            if (p.contains("cosine_coeffs"))
                cfg.ambient.perturbation.cosine_coeffs =
                    p["cosine_coeffs"].get<std::vector<double>>();
            cfg.ambient.perturbation.cutoff_radius = p.value("cutoff_radius", 4.0);
        }
    }
    if (j.contains("grid")) {
        reject_unknown(j["grid"], {"nodes"}, "grid");
        cfg.nodes = j["grid"].value("nodes", 256);
    }
    if (j.contains("flow")) {
        const json& f = j["flow"];
        reject_unknown(f,
                       {"dt_safety", "tol_l2", "max_time", "max_steps", "backoff_factor",
                        "retry_limit", "B1", "B2", "B3", "sample_every", "volume_every",
                        "check_band"},
                       "flow");
        cfg.flow.dt_safety = f.value("dt_safety", 0.1);
        if (f.contains("tol_l2") && !f["tol_l2"].is_null())
            cfg.flow.tol_l2 = f["tol_l2"].get<double>();
        cfg.flow.max_time = f.value("max_time", 1e9);
        cfg.flow.max_steps = f.value("max_steps", 50'000'000L);
        cfg.flow.backoff_factor = f.value("backoff_factor", 0.5);
        cfg.flow.retry_limit = f.value("retry_limit", 8);
        cfg.flow.B1 = f.value("B1", 5.0);
        cfg.flow.B2 = f.value("B2", 60.0);
        cfg.flow.B3 = f.value("B3", 600.0);
        cfg.flow.sample_every = f.value("sample_every", 25);
        cfg.flow.volume_every = f.value("volume_every", 200);
        cfg.flow.check_band = f.value("check_band", true);
    }
    cfg.tol_sup = j.value("tol_sup", -1.0);
    cfg.sigma = j.value("sigma", 20.0);
    if (j.contains("sigma_list")) cfg.sigma_list = j["sigma_list"].get<std::vector<double>>();
    if (j.contains("radii_list")) cfg.radii_list = j["radii_list"].get<std::vector<double>>();
    if (j.contains("initial_profile"))
        cfg.initial_profile = parse_bump(j["initial_profile"], "initial_profile");
    if (j.contains("initial_profile_b"))
        cfg.initial_profile_b = parse_bump(j["initial_profile_b"], "initial_profile_b");
    cfg.chmc_report_threshold = j.value("chmc_report_threshold", 1e-4);
    cfg.with_spectral = j.value("with_spectral", true);
    cfg.dump_matrices = j.value("dump_matrices", false);
    cfg.output_dir = j.value("output_dir", std::string("out"));
    cfg.seed = j.value("seed", 1L);
    cfg.jobs = j.value("jobs", 1);
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw config_error("config: cannot open " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

namespace {

struct OutputWriter {
    std::filesystem::path dir;
    std::vector<ManifestFile> files;
    bool failed = false;

    explicit OutputWriter(const std::string& d) : dir(d) {
        std::filesystem::create_directories(dir);
    }

    void write(const std::string& name, const std::string& content) {
        std::string final_name = failed ? name + ".partial" : name;
        std::filesystem::path p = dir / final_name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        out.close();
        std::ostringstream hex;
        hex << std::hex << fnv1a64(content);
        files.push_back({final_name, content.size(), hex.str()});
    }
};

json bump_to_json(const BumpSpec& b) {
    return json{{"bump_amplitude", b.amplitude},
                {"bump_power", b.power},
                {"center_offset", b.center_offset}};
}

json config_to_json(const RunConfig& c) {
    json a{{"n", c.ambient.n},
           {"m", c.ambient.m},
           {"delta", c.ambient.delta},
           {"fd_step_rel", c.ambient.fd_step_rel},
           {"center", c.ambient.center},
           {"dipole_b", c.ambient.dipole_b},
           {"perturbation",
            {{"epsilon", c.ambient.perturbation.epsilon},
             {"cosine_coeffs", c.ambient.perturbation.cosine_coeffs},
             {"cutoff_radius", c.ambient.perturbation.cutoff_radius}}}};
    return json{{"scenario", scenario_to_string(c.scenario)},
                {"ambient", a},
                {"grid", {{"nodes", c.nodes}}},
                {"flow",
                 {{"dt_safety", c.flow.dt_safety},
                  {"tol_l2", c.flow.tol_l2},
                  {"max_time", c.flow.max_time},
                  {"max_steps", c.flow.max_steps},
                  {"B1", c.flow.B1},
                  {"B2", c.flow.B2},
                  {"B3", c.flow.B3}}},
                {"tol_sup", c.tol_sup},
                {"sigma", c.sigma},
                {"sigma_list", c.sigma_list},
                {"radii_list", c.radii_list},
                {"initial_profile", bump_to_json(c.initial_profile)},
                {"initial_profile_b", bump_to_json(c.initial_profile_b)},
                {"output_dir", c.output_dir},
                {"seed", c.seed},
                {"jobs", c.jobs}};
}

Surface bumped_sphere(int n, double sigma, const BumpSpec& b, int nodes) {
    Surface s = make_coordinate_sphere(n, sigma, b.center_offset, nodes);
    for (int k = 0; k < nodes; ++k) {
        double c = std::cos(s.theta(k));
        double f = 1.0;
        for (int p = 0; p < b.power; ++p) f *= c;
        s.profile[std::size_t(k)] = sigma * (1.0 + b.amplitude * f);
    }
    s.validate();
    return s;
}

FlowConfig effective_flow_config(const RunConfig& cfg, double sigma, double area_hint) {
    FlowConfig f = cfg.flow;
    if (cfg.tol_sup >= 0.0) f.tol_l2 = cfg.tol_sup * cfg.tol_sup * area_hint;
    (void)sigma;
    return f;
}

double area_of_sphere_hint(const RunConfig& cfg, double sigma) {
    Surface s = make_coordinate_sphere(cfg.ambient.n, sigma, 0.0, 64);
    return geometry(s, cfg.ambient).area;
}

// ---------------------------------------------------------------- scenarios

void run_curvature_check(const RunConfig& cfg, OutputWriter& out, json& summary) {
    std::vector<double> radii = cfg.radii_list.empty() ? std::vector<double>{5.0, 10.0, 50.0}
                                                       : cfg.radii_list;
    const int n = cfg.ambient.n;
    std::ostringstream csv;
    csv << "r,theta,ricci_rel_err,scalar_r3,weyl_ratio,riemann_sym_res,bianchi_res\n";
    csv.precision(17);
    double worst_ricci = 0.0, worst_scalar = 0.0, worst_weyl = 0.0, worst_sym = 0.0,
           worst_bianchi = 0.0;
    for (double r : radii) {
        for (int s = 0; s < 5; ++s) {
            double th = (s + 0.5) * M_PI / 5;
            VecN y = VecN::Zero(n);
            y[0] = cfg.ambient.center + r * std::cos(th);
            y[1] = r * std::sin(th);
            CurvatureAtPoint cur = curvature_at(cfg.ambient, y);
            MatN ric_cf = ricci_closed_form(cfg.ambient, y);
            double scale = ric_cf.cwiseAbs().maxCoeff();
            double rel = (cur.ricci - ric_cf).cwiseAbs().maxCoeff() / scale;
            double sc3 = std::abs(cur.scalar) * r * r * r;
            double wmax = 0.0, rmax = 0.0, sym = 0.0, bianchi = 0.0;
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c)
                        for (int d = 0; d < n; ++d) {
                            double v = cur.riemann(a, b, c, d);
                            rmax = std::max(rmax, std::abs(v));
                            wmax = std::max(wmax, std::abs(cur.weyl(a, b, c, d)));
                            sym = std::max(sym, std::abs(v + cur.riemann(b, a, c, d)));
                            sym = std::max(sym, std::abs(v + cur.riemann(a, b, d, c)));
                            sym = std::max(sym, std::abs(v - cur.riemann(c, d, a, b)));
                            bianchi = std::max(bianchi,
                                               std::abs(v + cur.riemann(a, c, d, b) +
                                                        cur.riemann(a, d, b, c)));
                        }
            csv << r << ',' << th << ',' << rel << ',' << sc3 << ',' << wmax / scale << ','
                << sym / std::max(rmax, 1e-300) << ',' << bianchi / std::max(rmax, 1e-300)
                << '\n';
            worst_ricci = std::max(worst_ricci, rel);
            worst_scalar = std::max(worst_scalar, sc3);
            worst_weyl = std::max(worst_weyl, wmax / scale);
            worst_sym = std::max(worst_sym, sym / std::max(rmax, 1e-300));
            worst_bianchi = std::max(worst_bianchi, bianchi / std::max(rmax, 1e-300));
        }
    }
    out.write("ricci_comparison.csv", csv.str());
    summary["ricci_rel_err_max"] = worst_ricci;
    summary["scalar_r3_max"] = worst_scalar;
    summary["weyl_ratio_max"] = worst_weyl;
    summary["riemann_sym_res_max"] = worst_sym;
    summary["bianchi_res_max"] = worst_bianchi;
    if (cfg.ambient.perturbation.epsilon != 0.0) {
        auto rows = perturbation_decay_report(cfg.ambient, {20, 40, 80, 160});
        std::ostringstream dc;
        dc << "r,C1,C2,C3,C4\n";
        dc.precision(17);
        for (const auto& row : rows)
            dc << row.radius << ',' << row.constants[0] << ',' << row.constants[1] << ','
               << row.constants[2] << ',' << row.constants[3] << '\n';
        out.write("perturbation_decay.csv", dc.str());
    }
}

json decay_to_json(const DecayFit& d) {
    return json{{"available", d.available},
                {"fitted_rate", d.fitted_rate},
                {"predicted_rate", d.predicted_rate},
                {"samples_used", d.samples_used}};
}

void run_flow_scenario(const RunConfig& cfg, OutputWriter& out, json& summary) {
    double sigma = cfg.sigma;
    Surface start = bumped_sphere(cfg.ambient.n, sigma, cfg.initial_profile, cfg.nodes);
    FlowConfig fc = effective_flow_config(cfg, sigma, area_of_sphere_hint(cfg, sigma));
    FlowResult res = run_to_convergence(start, cfg.ambient, fc, sigma);

    out.write("series.csv", series_to_csv(res.series));
    out.write("final_surface.json", surface_to_json(res.state.surface));
    out.write("decay_fit.json", decay_to_json(res.decay).dump(2));

    double v0 = res.series.empty() ? 0.0 : res.series.front().volume;
    double v1 = res.state.volume;
    summary["converged"] = res.state.converged;
    summary["steps"] = res.state.steps;
    summary["t_end"] = res.state.t;
    summary["f_final"] = res.state.f;
    summary["sup_deficit_final"] = res.state.sup_deficit;
    summary["l2_deficit_final"] = res.state.l2_deficit;
    summary["volume_rel_drift"] = std::abs(v1 - v0) / std::abs(v0);
    summary["fitted_rate"] = res.decay.fitted_rate;
    summary["predicted_rate"] = res.decay.predicted_rate;
    summary["decay_fit_available"] = res.decay.available;
    double scaled = res.state.sup_deficit * std::pow(sigma, cfg.ambient.n + 1);
    summary["sup_deficit_scaled"] = scaled;
    summary["chmc_declared"] = scaled <= cfg.chmc_report_threshold;
    SphereFit fit = best_fit_sphere(res.state.surface);
    summary["best_fit_radius"] = fit.radius;
    summary["best_fit_center"] = fit.center;
}

void run_spectral_scenario(const RunConfig& cfg, OutputWriter& out, json& summary) {
    std::vector<double> sigmas = cfg.sigma_list.empty() ? std::vector<double>{cfg.sigma}
                                                        : cfg.sigma_list;
    json reports = json::array();
    std::mt19937 rng(std::uint32_t(cfg.seed));
    for (double sigma : sigmas) {
        Surface start = make_coordinate_sphere(cfg.ambient.n, sigma, 0.0, cfg.nodes);
        FlowConfig fc = effective_flow_config(cfg, sigma, area_of_sphere_hint(cfg, sigma));
        FlowResult res = run_to_convergence(start, cfg.ambient, fc, sigma);
        OperatorMatrices op = assemble_L(res.state.surface, cfg.ambient, sigma);
        assemble_S(op);
        SpectralReport rep = eigen_report(op, cfg.ambient);

        // seeded self-adjointness spot check in the weighted inner product
        int N = int(op.weights.size());
        std::normal_distribution<double> gauss;
        double max_asym = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd u(N), v(N);
            for (int k = 0; k < N; ++k) {
                u[k] = gauss(rng);
                v[k] = gauss(rng);
            }
            Eigen::VectorXd Su = op.S * u, Sv = op.S * v;
            double a = 0.0, b = 0.0, scale = 0.0;
            for (int k = 0; k < N; ++k) {
                a += op.weights[k] * Su[k] * v[k];
                b += op.weights[k] * u[k] * Sv[k];
                scale += op.weights[k] * std::abs(Su[k] * v[k]);
            }
            max_asym = std::max(max_asym, std::abs(a - b) / std::max(scale, 1e-300));
        }

        TranslationModeCheck tc = translation_mode_check(op, res.state.surface, cfg.ambient);
        double divf_max = *std::max_element(op.div_f.begin(), op.div_f.end());
        json r{{"sigma", sigma},
               {"n", cfg.ambient.n},
               {"m", cfg.ambient.m},
               {"delta", cfg.ambient.delta},
               {"mu0", rep.mu0},
               {"eta0", rep.eta0},
               {"eta1", rep.eta1},
               {"smin", rep.smin},
               {"mu0_pred", rep.mu0_pred},
               {"eta0_pred", rep.eta0_pred},
               {"ratios",
                {{"mu0", rep.mu0_ratio}, {"eta0", rep.eta0_ratio}, {"smin_scaled", rep.smin_scaled}}},
               {"self_adjoint_spot_max", max_asym},
               {"translation_rayleigh", tc.rayleigh},
               {"translation_residual_rel", tc.residual_rel},
               {"div_f_sup", divf_max},
               {"eta1_scaled", rep.eta1 * std::pow(sigma, cfg.ambient.n) / cfg.ambient.m},
               {"sup_deficit", res.state.sup_deficit}};
        reports.push_back(r);

        if (cfg.dump_matrices) {
            std::ostringstream ls, ss;
            ls.precision(17);
            ss.precision(17);
            for (int i = 0; i < N; ++i) {
                for (int k = 0; k < N; ++k) {
                    ls << op.L(i, k) << (k + 1 < N ? ',' : '\n');
                    ss << op.S(i, k) << (k + 1 < N ? ',' : '\n');
                }
            }
            std::ostringstream lname, sname;
            lname << "L_sigma" << sigma << ".csv";
            sname << "S_sigma" << sigma << ".csv";
            out.write(lname.str(), ls.str());
            out.write(sname.str(), ss.str());
        }
    }
    out.write("spectral_report.json", reports.dump(2));
    summary["reports"] = reports;
}

void run_foliation_scenario(const RunConfig& cfg, OutputWriter& out, json& summary) {
    std::vector<double> sigmas = cfg.sigma_list.empty()
                                     ? std::vector<double>{20, 24, 28, 32, 36, 40}
                                     : cfg.sigma_list;
    FlowConfig fc = effective_flow_config(cfg, sigmas.front(),
                                          area_of_sphere_hint(cfg, sigmas.front()));
    FoliationLadder ladder =
        build_ladder(sigmas, cfg.ambient, fc, cfg.nodes, cfg.jobs, cfg.with_spectral);
    for (const auto& e : ladder.entries) {
        std::ostringstream name;
        name << "surface_sigma" << e.sigma << ".json";
        out.write(name.str(), surface_to_json(e.surface));
    }
    if (ladder.failure) {
        out.failed = true;
        throw numeric_error("foliation ladder aborted: " + *ladder.failure);
    }
    FoliationCheck chk = check_foliation(ladder);

    std::ostringstream csv;
    csv << "sigma,F_value,min_gap_to_prev,centroid_axial,mu0,eta0\n";
    csv.precision(17);
    for (std::size_t i = 0; i < ladder.entries.size(); ++i) {
        const auto& e = ladder.entries[i];
        auto [ea, centroid] = euclidean_area_centroid(e.surface);
        (void)ea;
        double gap = i == 0 ? 0.0 : chk.gaps[i - 1].min_gap;
        double mu0 = e.spectral ? e.spectral->mu0 : 0.0;
        double eta0 = e.spectral ? e.spectral->eta0 : 0.0;
        csv << e.sigma << ',' << e.F_value << ',' << gap << ',' << centroid << ',' << mu0 << ','
            << eta0 << '\n';
    }
    out.write("ladder_summary.csv", csv.str());

    json gaps = json::array();
    for (const auto& g : chk.gaps)
        gaps.push_back(json{{"sigma_lo", g.sigma_lo},
                            {"sigma_hi", g.sigma_hi},
                            {"min_gap", g.min_gap},
                            {"theta_at_min", g.theta_at_min},
                            {"recentred_warning", g.recentred_warning}});
    json fol{{"ordered", chk.ordered}, {"f_decreasing", chk.f_decreasing}, {"gaps", gaps}};
    out.write("foliation_check.json", fol.dump(2));
    summary["ordered"] = chk.ordered;
    summary["f_decreasing"] = chk.f_decreasing;
    double min_gap = std::numeric_limits<double>::infinity();
    for (const auto& g : chk.gaps) min_gap = std::min(min_gap, g.min_gap);
    summary["min_gap"] = min_gap;
    json fv = json::array();
    for (const auto& e : ladder.entries) fv.push_back(e.F_value);
    summary["F_values"] = fv;
    if (!chk.ordered || !chk.f_decreasing)
        throw assertion_error("foliation: ladder ordering violated");
}

void run_centers_scenario(const RunConfig& cfg, OutputWriter& out, json& summary) {
    std::vector<double> sigmas = cfg.sigma_list.empty()
                                     ? std::vector<double>{20, 24, 28, 32, 36, 40}
                                     : cfg.sigma_list;
    std::vector<double> radii = cfg.radii_list.empty() ? std::vector<double>{20, 40, 80, 160}
                                                       : cfg.radii_list;
    FlowConfig fc = effective_flow_config(cfg, sigmas.front(),
                                          area_of_sphere_hint(cfg, sigmas.front()));
    FoliationLadder ladder = build_ladder(sigmas, cfg.ambient, fc, cfg.nodes, cfg.jobs, false);
    if (ladder.failure) {
        out.failed = true;
        throw numeric_error("centers ladder aborted: " + *ladder.failure);
    }
    CenterReport chm = center_of_mass_chm(ladder);
    CenterReport adm = center_of_mass_adm(cfg.ambient, radii);

    json chm_rows = json::array(), adm_rows = json::array();
    for (const auto& p : chm.chm) chm_rows.push_back(json{{"sigma", p.parameter}, {"centroid", p.value}});
    for (const auto& p : adm.adm) adm_rows.push_back(json{{"radius", p.parameter}, {"value", p.value}});
    json rep{{"chm", chm_rows},
             {"chm_extrapolated", chm.chm_extrapolated},
             {"chm_fit_residual", chm.chm_fit_residual},
             {"adm", adm_rows},
             {"adm_extrapolated", adm.adm_extrapolated},
             {"b_term", cfg.ambient.dipole_b},
             {"metric_center", cfg.ambient.center}};
    out.write("center_report.json", rep.dump(2));
    summary["chm_extrapolated"] = chm.chm_extrapolated;
    summary["adm_extrapolated"] = adm.adm_extrapolated;
    summary["center_difference"] = std::abs(chm.chm_extrapolated - adm.adm_extrapolated);
    summary["chm_per_sigma"] = chm_rows;
    summary["adm_per_radius"] = adm_rows;
}

void run_uniqueness_scenario(const RunConfig& cfg, OutputWriter& out, json& summary) {
    double sigma = cfg.sigma;
    double area = area_of_sphere_hint(cfg, sigma);
    FlowConfig fc = effective_flow_config(cfg, sigma, area);

    Surface sa = bumped_sphere(cfg.ambient.n, sigma, cfg.initial_profile, cfg.nodes);
    Surface sb = bumped_sphere(cfg.ambient.n, sigma, cfg.initial_profile_b, cfg.nodes);
    FlowResult ra = run_to_convergence(sa, cfg.ambient, fc, sigma);
    FlowResult rb = run_to_convergence(sb, cfg.ambient, fc, sigma);
    out.write("final_surface_a.json", surface_to_json(ra.state.surface));
    out.write("final_surface_b.json", surface_to_json(rb.state.surface));

    double diff = 0.0;
    for (int k = 0; k < cfg.nodes; ++k)
        diff = std::max(diff, std::abs(ra.state.surface.profile[std::size_t(k)] -
                                       rb.state.surface.profile[std::size_t(k)]));
    double sup_stop = std::max(ra.state.sup_deficit, rb.state.sup_deficit);
    double mu0_pred = cfg.ambient.n * cfg.ambient.m /
                      ((cfg.ambient.n - 1) * std::pow(sigma, cfg.ambient.n));
    double tol_displacement = sup_stop / mu0_pred;
    summary["profile_diff_max"] = diff;
    summary["sup_deficit_stop"] = sup_stop;
    summary["tol_induced_displacement"] = tol_displacement;
    summary["bound"] = 10.0 * tol_displacement;
    summary["within_bound"] = diff <= 10.0 * tol_displacement;
    if (diff > 10.0 * tol_displacement)
        throw assertion_error("uniqueness probe: limits differ beyond the tolerance bound");
}

}  // namespace

RunManifest run(const RunConfig& cfg) {
    cfg.validate();
    auto t0 = std::chrono::steady_clock::now();
    OutputWriter out(cfg.output_dir);
    json summary;
    summary["scenario"] = scenario_to_string(cfg.scenario);

    auto finalize = [&](bool ok) {
        summary["ok"] = ok;
        out.write("summary.json", summary.dump(2));
        RunManifest man;
        man.scenario = scenario_to_string(cfg.scenario);
        man.version = kVersion;
        man.wall_clock_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        man.files = out.files;
        man.config_echo = config_to_json(cfg).dump(2);
        json mj{{"scenario", man.scenario},
                {"version", man.version},
                {"wall_clock_sec", man.wall_clock_sec},
                {"config", config_to_json(cfg)},
                {"files", json::array()}};
        for (const auto& f : man.files)
            mj["files"].push_back(json{{"path", f.path}, {"bytes", f.bytes}, {"fnv1a64", f.fnv1a64}});
        std::ofstream mf(out.dir / "manifest.json");
        mf << mj.dump(2) << "\n";
        return man;
    };

    try {
        log_line(1, "running scenario " + scenario_to_string(cfg.scenario));
        switch (cfg.scenario) {
            case Scenario::curvature_check: run_curvature_check(cfg, out, summary); break;
            case Scenario::flow: run_flow_scenario(cfg, out, summary); break;
            case Scenario::spectral: run_spectral_scenario(cfg, out, summary); break;
            case Scenario::foliation: run_foliation_scenario(cfg, out, summary); break;
            case Scenario::centers: run_centers_scenario(cfg, out, summary); break;
            case Scenario::uniqueness_probe: run_uniqueness_scenario(cfg, out, summary); break;
        }
    } catch (const assertion_error& e) {
        summary["error"] = e.what();
        finalize(false);
        throw;
    } catch (const std::exception& e) {
        out.failed = true;
        summary["error"] = e.what();
        finalize(false);
        throw;
    }
    return finalize(true);
}

namespace {

void diff_json(const json& a, const json& b, const std::string& path, CompareResult& res) {
    if (a.is_number() && b.is_number()) {
        double va = a.get<double>(), vb = b.get<double>();
        double scale = std::max({std::abs(va), std::abs(vb), 1e-300});
        double rel = std::abs(va - vb) / scale;
        if (rel > 0.0) {
            std::ostringstream os;
            os << path << ": " << va << " vs " << vb << " (rel " << rel << ")";
            res.lines.push_back(os.str());
        }
        res.max_rel_diff = std::max(res.max_rel_diff, rel);
        return;
    }
    if (a.is_object() && b.is_object()) {
        for (auto it = a.begin(); it != a.end(); ++it)
            if (b.contains(it.key())) diff_json(it.value(), b[it.key()], path + "/" + it.key(), res);
        return;
    }
    if (a.is_array() && b.is_array() && a.size() == b.size()) {
        for (std::size_t i = 0; i < a.size(); ++i)
            diff_json(a[i], b[i], path + "[" + std::to_string(i) + "]", res);
        return;
    }
    if (a != b) {
        res.lines.push_back(path + ": structural difference");
        res.max_rel_diff = std::max(res.max_rel_diff, 1.0);
    }
}

}  // namespace

CompareResult compare_runs(const std::filesystem::path& manifest_a,
                           const std::filesystem::path& manifest_b) {
    auto load = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw config_error("compare: cannot open " + p.string());
        json j;
        in >> j;
        return j;
    };
    json ma = load(manifest_a), mb = load(manifest_b);
    if (ma.at("scenario") != mb.at("scenario"))
        throw config_error("compare: scenario mismatch (" + ma["scenario"].get<std::string>() +
                           " vs " + mb["scenario"].get<std::string>() + ")");
    json sa = load(manifest_a.parent_path() / "summary.json");
    json sb = load(manifest_b.parent_path() / "summary.json");
    CompareResult res;
    diff_json(sa, sb, "", res);
    return res;
}

}  // namespace chmc
