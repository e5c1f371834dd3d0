#pragma once
#include "chmc/foliation.hpp"

#include <filesystem>
#include <string>

namespace chmc {

enum class Scenario {
    curvature_check,
    flow,
    spectral,
    foliation,
    centers,
    uniqueness_probe,
};

Scenario scenario_from_string(const std::string& s);
std::string scenario_to_string(Scenario s);

struct BumpSpec {
    double amplitude = 0.0;
    int power = 2;  // rho = sigma (1 + amplitude cos^power theta)
    double center_offset = 0.0;
};

struct RunConfig {
    Scenario scenario = Scenario::curvature_check;
    AmbientMetric ambient;
    int nodes = 256;
    FlowConfig flow;
    double tol_sup = -1.0;  // sup-deficit stopping scale; overrides flow.tol_l2 when >= 0
    double sigma = 20.0;
    std::vector<double> sigma_list;
    std::vector<double> radii_list;
    BumpSpec initial_profile;
    BumpSpec initial_profile_b{0.0, 4, 0.0};
    double chmc_report_threshold = 1e-4;  // on sup_deficit * sigma^{n+1}
    bool with_spectral = true;            // foliation ladder option
    bool dump_matrices = false;
    std::string output_dir = "out";
    long seed = 1;
    int jobs = 1;

    void validate() const;
};

RunConfig parse_config(const std::string& json_text);  // strict: unknown keys rejected
RunConfig load_config(const std::filesystem::path& file);

struct ManifestFile {
    std::string path;
    std::uint64_t bytes = 0;
    std::string fnv1a64;
};

struct RunManifest {
    std::string scenario;
    std::string version;
    double wall_clock_sec = 0.0;
    std::vector<ManifestFile> files;
    std::string config_echo;
};

// Executes the scenario, writes outputs and manifest.json under
// config.output_dir. Throws chmc exceptions on failure after retaining
// partial outputs with a ".partial" suffix.
RunManifest run(const RunConfig& config);

struct CompareResult {
    double max_rel_diff = 0.0;
    std::vector<std::string> lines;  // per-field differences
};

// Field-wise relative differences of the two runs' summary JSONs.
CompareResult compare_runs(const std::filesystem::path& manifest_a,
                           const std::filesystem::path& manifest_b);

std::uint64_t fnv1a64(const std::string& bytes);

int log_level();  // CHMC_LOG: 0 silent (default), 1 progress, 2 debug
void log_line(int level, const std::string& msg);

}  // namespace chmc
