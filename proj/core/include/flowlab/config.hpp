#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "flowlab/dataset.hpp"
#include "flowlab/nn.hpp"
#include "flowlab/schedule.hpp"
#include "flowlab/solver.hpp"
#include "flowlab/trainer.hpp"

namespace flowlab::cfg {

struct DatasetConfig {
    enum class Kind { eight_gaussians, two_gaussians, gaussian_mixture, checkerboard, file };
    Kind kind = Kind::eight_gaussians;
    // eight_gaussians
    double radius = 2.0;
    double sigma = 0.1;
    std::size_t components = 8;
    // two_gaussians
    double separation = 3.0;
    double weight0 = 0.5;
    // gaussian_mixture
    std::vector<std::vector<double>> means;
    std::vector<double> sigmas;
    std::vector<double> weights;
    // checkerboard
    double extent = 2.0;
    std::size_t cells = 4;
    // file
    std::string path;
};

std::unique_ptr<data::DataSampler> make_dataset(const DatasetConfig& cfg);

struct ScheduleSpec {
    ode::ScheduleKind kind = ode::ScheduleKind::sigmoid;
    std::size_t steps = 5;
    double kappa = 20.0;
    double sigma_min = 0.002, sigma_max = 80.0, rho = 7.0;
};

ode::Schedule make_schedule(const ScheduleSpec& spec);

struct GuidanceSpec {
    enum class Kind { none, cfg, autoguide };
    Kind kind = Kind::none;
    double scale = 0.0;
    std::string aux_checkpoint;  // degraded net (autoguide) or unconditional labels (cfg)
};

struct SolverSpec {
    std::string name;  // row label in outputs; defaults to method/schedule
    ode::Method method = ode::Method::heun;
    double dpm_r = 1.0;
    ScheduleSpec schedule;
    bool final_step_euler = true;
    GuidanceSpec guidance;
};

ode::SolverCfg make_solver_cfg(const SolverSpec& spec);
std::string solver_label(const SolverSpec& spec);

struct CouplingConfig {
    enum class Kind { independent, pairs, minibatch_ot };
    Kind kind = Kind::independent;
    // pairs
    std::size_t n_backward_pairs = 8192;
    std::size_t n_forward_pairs = 0;
    double rho = 0.0;
    bool project = false;
    coupling::ProjectionConfig projection;
    SolverSpec pair_solver;  // used to simulate the pairs
    std::string pairs_path;  // load a pre-generated store instead
    // minibatch_ot
    std::size_t b_coupling = 512;
    double eps = 2.0;
    bool warm_start = true;
    std::optional<double> eps_decay_start;
};

struct EvalConfig {
    std::size_t n_samples = 4096;
    std::size_t n_traj = 2048;
    std::size_t fine_n = 48;
    std::size_t log_every_eval = 0;  // 0: only at the end
};

struct ExperimentConfig {
    std::string id = "experiment";
    std::uint64_t seed = 0;
    std::string out_dir;  // resolved against FLOWLAB_OUT_ROOT when relative
    DatasetConfig dataset;
    nn::DenoiserConfig model;
    train::TrainConfig train;
    CouplingConfig coupling;
    std::size_t reflow_rounds = 1;
    std::vector<SolverSpec> solvers;
    std::vector<std::string> metrics{"energy_distance", "straightness", "transport_cost"};
    EvalConfig eval;
};

// Parses and validates; error messages carry dotted field paths.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Serializes every resolved field; parse(dump(c)) == c.
std::string dump_config(const ExperimentConfig& cfg);

// Sets a field in raw JSON text by dotted path ("train.lr",
// "solvers.0.schedule.kappa"); the value is parsed as JSON, falling back
// to a string. Used by the ablation driver.
std::string set_config_field(const std::string& json_text, const std::string& dotted_path,
                             const std::string& value);

}  // namespace flowlab::cfg
