#pragma once
#include "crossdiff/mesh.hpp"
#include "crossdiff/models.hpp"
#include "crossdiff/stepper.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace crossdiff {

struct MeshConfig {
    int dim = 1;
    double a = 0.0, b = 1.0; // 1D interval
    int M = 16;
    int nx = 8, ny = 8;      // 2D structured triangulation
    Rect box{0.0, 0.0, 1.0, 1.0};
    int degree = 1;
    OrientationRule flux = OrientationRule::directional;
    double alpha = 0.5;      // centered fluxes only
    double eta = 1.0;
};

struct TimeConfig {
    bool adaptive = false;
    double tau = 1e-3;
    double T = 1.0;
    AdaptiveConfig adapt;
};

// Parsed and validated run description. Initial data and forcing are not part
// of the file format; `preset` names one of the built-in closed-form setups.
struct RunConfig {
    std::string model_name = "porous_medium";
    double pm_m = 2.0;
    std::array<std::array<double, 3>, 2> skt_a{};
    std::array<std::array<double, 3>, 2> skt_b{};
    std::optional<std::array<double, 2>> skt_box_cap;
    std::vector<double> mixture_p;
    double tumor_beta = 1.0;
    double tumor_theta = 1.0;
    double eps = 0.0;
    int ell = 0; // 0 = pick by dimension and model
    std::string preset;

    MeshConfig mesh;
    TimeConfig time;
    NewtonConfig newton;
    std::string output_dir;

    ModelSpec make_model() const;
    Mesh make_mesh() const;
};

FluxOrientation make_orientation(const Mesh& mesh, const MeshConfig& cfg);

// INI-style document with flat sections [model], [mesh], [time], [newton],
// [output]; '#' and ';' start comments. Unknown sections or keys are errors.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::string& path);

} // namespace crossdiff
