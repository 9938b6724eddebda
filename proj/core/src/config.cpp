#include "flowlab/config.hpp"

#include <fstream>
#include <sstream>

#include "flowlab/error.hpp"
#include "json_io.hpp"

namespace flowlab::cfg {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw config_error(path + ": " + what);
}

const json& member(const json& j, const std::string& base, const char* key) {
    if (!j.is_object()) fail(base, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(base + "." + key, "missing required field");
    return *it;
}

template <typename T>
T get_or(const json& j, const std::string& base, const char* key, T fallback) {
    if (!j.is_object()) fail(base, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        fail(base + "." + key, "has the wrong type");
    }
}

std::string get_string(const json& j, const std::string& base, const char* key,
                       const std::string& fallback) {
    return get_or<std::string>(j, base, key, fallback);
}

}  // namespace

std::unique_ptr<data::DataSampler> make_dataset(const DatasetConfig& cfg) {
    switch (cfg.kind) {
        case DatasetConfig::Kind::eight_gaussians:
            return std::make_unique<data::GaussianMixture>(
                data::eight_gaussians(cfg.radius, cfg.sigma, cfg.components));
        case DatasetConfig::Kind::two_gaussians:
            return std::make_unique<data::GaussianMixture>(
                data::two_gaussians(cfg.separation, cfg.sigma, cfg.weight0));
        case DatasetConfig::Kind::gaussian_mixture: {
            if (cfg.means.empty()) throw config_error("dataset.means: empty");
            const std::size_t k = cfg.means.size(), d = cfg.means.front().size();
            Tensor means({k, d});
            for (std::size_t i = 0; i < k; ++i) {
                if (cfg.means[i].size() != d) throw config_error("dataset.means: ragged");
                for (std::size_t j = 0; j < d; ++j) means[i * d + j] = cfg.means[i][j];
            }
            return std::make_unique<data::GaussianMixture>(std::move(means), cfg.sigmas,
                                                           cfg.weights);
        }
        case DatasetConfig::Kind::checkerboard:
            return std::make_unique<data::Checkerboard>(cfg.extent, cfg.cells);
        case DatasetConfig::Kind::file:
            return std::make_unique<data::FileDataset>(cfg.path);
    }
    throw config_error("dataset.kind: unknown");
}

ode::Schedule make_schedule(const ScheduleSpec& spec) {
    switch (spec.kind) {
        case ode::ScheduleKind::uniform: return ode::Schedule::uniform(spec.steps);
        case ode::ScheduleKind::sigmoid: return ode::Schedule::sigmoid(spec.steps, spec.kappa);
        case ode::ScheduleKind::edm:
            return ode::Schedule::edm(spec.steps, spec.sigma_min, spec.sigma_max, spec.rho);
    }
    throw config_error("schedule.kind: unknown");
}

ode::SolverCfg make_solver_cfg(const SolverSpec& spec) {
    ode::SolverCfg cfg;
    cfg.method = spec.method;
    cfg.dpm_r = spec.dpm_r;
    cfg.schedule = make_schedule(spec.schedule);
    cfg.final_step_euler = spec.final_step_euler;
    cfg.validate();
    return cfg;
}

std::string solver_label(const SolverSpec& spec) {
    if (!spec.name.empty()) return spec.name;
    std::ostringstream os;
    os << ode::method_name(spec.method);
    if (spec.method == ode::Method::dpm) os << "_r" << spec.dpm_r;
    os << "_" << ode::schedule_name(spec.schedule.kind) << "_N" << spec.schedule.steps;
    if (spec.schedule.kind == ode::ScheduleKind::sigmoid) os << "_k" << spec.schedule.kappa;
    return os.str();
}

// --- parsing -----------------------------------------------------------------

namespace {

DatasetConfig parse_dataset(const json& j, const std::string& base) {
    DatasetConfig cfg;
    const std::string kind = get_string(j, base, "kind", "eight_gaussians");
    if (kind == "eight_gaussians") {
        cfg.kind = DatasetConfig::Kind::eight_gaussians;
        cfg.radius = get_or(j, base, "radius", cfg.radius);
        cfg.sigma = get_or(j, base, "sigma", cfg.sigma);
        cfg.components = get_or(j, base, "components", cfg.components);
    } else if (kind == "two_gaussians") {
        cfg.kind = DatasetConfig::Kind::two_gaussians;
        cfg.separation = get_or(j, base, "separation", cfg.separation);
        cfg.sigma = get_or(j, base, "sigma", 0.3);
        cfg.weight0 = get_or(j, base, "weight0", cfg.weight0);
    } else if (kind == "gaussian_mixture") {
        cfg.kind = DatasetConfig::Kind::gaussian_mixture;
        cfg.means = get_or(j, base, "means", cfg.means);
        cfg.sigmas = get_or(j, base, "sigmas", cfg.sigmas);
        cfg.weights = get_or(j, base, "weights", cfg.weights);
    } else if (kind == "checkerboard") {
        cfg.kind = DatasetConfig::Kind::checkerboard;
        cfg.extent = get_or(j, base, "extent", cfg.extent);
        cfg.cells = get_or(j, base, "cells", cfg.cells);
    } else if (kind == "file") {
        cfg.kind = DatasetConfig::Kind::file;
        cfg.path = get_string(j, base, "path", "");
        if (cfg.path.empty()) fail(base + ".path", "required for file datasets");
    } else {
        fail(base + ".kind", "unknown dataset kind '" + kind + "'");
    }
    return cfg;
}

ScheduleSpec parse_schedule(const json& j, const std::string& base) {
    ScheduleSpec spec;
    spec.kind = ode::schedule_from_name(get_string(j, base, "kind", "sigmoid"));
    spec.steps = get_or<std::size_t>(j, base, "steps", spec.steps);
    if (spec.steps == 0) fail(base + ".steps", "must be >= 1");
    spec.kappa = get_or(j, base, "kappa", spec.kappa);
    spec.sigma_min = get_or(j, base, "sigma_min", spec.sigma_min);
    spec.sigma_max = get_or(j, base, "sigma_max", spec.sigma_max);
    spec.rho = get_or(j, base, "rho", spec.rho);
    return spec;
}

SolverSpec parse_solver(const json& j, const std::string& base) {
    SolverSpec spec;
    spec.name = get_string(j, base, "name", "");
    spec.method = ode::method_from_name(get_string(j, base, "method", "heun"));
    spec.dpm_r = get_or(j, base, "dpm_r", spec.dpm_r);
    if (j.contains("schedule")) spec.schedule = parse_schedule(j.at("schedule"), base + ".schedule");
    spec.final_step_euler = get_or(j, base, "final_step_euler", spec.final_step_euler);
    if (j.contains("guidance")) {
        const json& g = j.at("guidance");
        const std::string gkind = get_string(g, base + ".guidance", "kind", "none");
        if (gkind == "none") {
            spec.guidance.kind = GuidanceSpec::Kind::none;
        } else if (gkind == "cfg") {
            spec.guidance.kind = GuidanceSpec::Kind::cfg;
        } else if (gkind == "autoguide") {
            spec.guidance.kind = GuidanceSpec::Kind::autoguide;
        } else {
            fail(base + ".guidance.kind", "unknown guidance kind '" + gkind + "'");
        }
        spec.guidance.scale = get_or(g, base + ".guidance", "scale", 0.0);
        spec.guidance.aux_checkpoint = get_string(g, base + ".guidance", "aux_checkpoint", "");
    }
    return spec;
}

train::TrainConfig parse_train(const json& j, const std::string& base) {
    train::TrainConfig cfg;
    cfg.steps = get_or<std::size_t>(j, base, "steps", cfg.steps);
    cfg.batch = get_or<std::size_t>(j, base, "batch", cfg.batch);
    if (cfg.batch == 0) fail(base + ".batch", "must be >= 1");
    cfg.opt.lr = get_or(j, base, "lr", cfg.opt.lr);
    if (cfg.opt.lr <= 0.0) fail(base + ".lr", "must be positive");
    cfg.opt.beta1 = get_or(j, base, "beta1", cfg.opt.beta1);
    cfg.opt.beta2 = get_or(j, base, "beta2", cfg.opt.beta2);
    cfg.opt.ema_decay = get_or(j, base, "ema", cfg.opt.ema_decay);
    if (cfg.opt.ema_decay < 0.0 || cfg.opt.ema_decay >= 1.0) {
        fail(base + ".ema", "must lie in [0, 1)");
    }
    cfg.lr_final_frac = get_or(j, base, "lr_final_frac", cfg.lr_final_frac);
    cfg.t_min = get_or(j, base, "t_min", cfg.t_min);
    cfg.t_max = get_or(j, base, "t_max", cfg.t_max);
    if (!(cfg.t_min > 0.0 && cfg.t_min < cfg.t_max && cfg.t_max < 1.0)) {
        fail(base + ".t_min", "need 0 < t_min < t_max < 1");
    }
    cfg.log_every = std::max<std::size_t>(1, get_or<std::size_t>(j, base, "log_every", cfg.log_every));

    if (j.contains("weight")) {
        const json& w = j.at("weight");
        cfg.weight.kind = loss::weight_kind_from_name(get_string(w, base + ".weight", "kind", "one"));
        cfg.weight.tracker_hidden =
            get_or<std::size_t>(w, base + ".weight", "tracker_hidden", cfg.weight.tracker_hidden);
    }
    if (j.contains("time_dist")) {
        const json& t = j.at("time_dist");
        const std::string kind = get_string(t, base + ".time_dist", "kind", "uniform");
        loss::TimeDist dist;
        dist.kind = loss::time_dist_from_name(kind);
        dist.a = get_or(t, base + ".time_dist", "a", 10.0);
        dist.p_mean = get_or(t, base + ".time_dist", "p_mean", dist.p_mean);
        dist.p_std = get_or(t, base + ".time_dist", "p_std", dist.p_std);
        try {
            dist.validate();
        } catch (const config_error& e) {
            fail(base + ".time_dist", e.what());
        }
        cfg.time_dist = dist;
    }
    if (j.contains("loss")) {
        const json& l = j.at("loss");
        cfg.loss_map.kind = loss::loss_map_from_name(get_string(l, base + ".loss", "kind", "mse"));
        cfg.loss_map.hpf_lambda = get_or(l, base + ".loss", "lambda", cfg.loss_map.hpf_lambda);
        cfg.loss_map.ph_c = get_or(l, base + ".loss", "c", cfg.loss_map.ph_c);
        cfg.loss_map.blur.radius =
            get_or<std::size_t>(l, base + ".loss", "blur_radius", cfg.loss_map.blur.radius);
        cfg.loss_map.blur.sigma = get_or(l, base + ".loss", "blur_sigma", cfg.loss_map.blur.sigma);
    }
    return cfg;
}

CouplingConfig parse_coupling(const json& j, const std::string& base) {
    CouplingConfig cfg;
    const std::string kind = get_string(j, base, "kind", "independent");
    if (kind == "independent") {
        cfg.kind = CouplingConfig::Kind::independent;
    } else if (kind == "pairs") {
        cfg.kind = CouplingConfig::Kind::pairs;
    } else if (kind == "minibatch_ot") {
        cfg.kind = CouplingConfig::Kind::minibatch_ot;
    } else {
        fail(base + ".kind", "unknown coupling kind '" + kind + "'");
    }
    cfg.n_backward_pairs = get_or<std::size_t>(j, base, "n_backward_pairs", cfg.n_backward_pairs);
    cfg.n_forward_pairs = get_or<std::size_t>(j, base, "n_forward_pairs", cfg.n_forward_pairs);
    cfg.rho = get_or(j, base, "rho", cfg.rho);
    if (cfg.rho < 0.0 || cfg.rho > 1.0) fail(base + ".rho", "must lie in [0, 1]");
    cfg.project = get_or(j, base, "project", cfg.project);
    if (j.contains("projection")) {
        const json& p = j.at("projection");
        const std::string pb = base + ".projection";
        cfg.projection.lambda_start = get_or(p, pb, "lambda_start", cfg.projection.lambda_start);
        cfg.projection.lambda_decay = get_or(p, pb, "lambda_decay", cfg.projection.lambda_decay);
        cfg.projection.max_phases = get_or<std::size_t>(p, pb, "max_phases", cfg.projection.max_phases);
        cfg.projection.phase_iters = get_or<std::size_t>(p, pb, "phase_iters", cfg.projection.phase_iters);
        cfg.projection.lr = get_or(p, pb, "lr", cfg.projection.lr);
        cfg.projection.skd_eps = get_or(p, pb, "skd_eps", cfg.projection.skd_eps);
    }
    if (j.contains("pair_solver")) {
        cfg.pair_solver = parse_solver(j.at("pair_solver"), base + ".pair_solver");
    } else {
        cfg.pair_solver.method = ode::Method::heun;
        cfg.pair_solver.schedule.kind = ode::ScheduleKind::uniform;
        cfg.pair_solver.schedule.steps = 32;
    }
    cfg.pairs_path = get_string(j, base, "pairs_path", "");
    cfg.b_coupling = get_or<std::size_t>(j, base, "b_coupling", cfg.b_coupling);
    cfg.eps = get_or(j, base, "eps", cfg.eps);
    cfg.warm_start = get_or(j, base, "warm_start", cfg.warm_start);
    if (j.contains("eps_decay_start")) {
        cfg.eps_decay_start = j.at("eps_decay_start").get<double>();
    }
    return cfg;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.id = get_string(j, "config", "id", cfg.id);
    cfg.seed = get_or<std::uint64_t>(j, "config", "seed", cfg.seed);
    cfg.out_dir = get_string(j, "config", "out_dir", "");
    if (j.contains("dataset")) cfg.dataset = parse_dataset(j.at("dataset"), "dataset");
    if (j.contains("model")) {
        try {
            cfg.model = denoiser_config_from_json(j.at("model"));
        } catch (const config_error& e) {
            throw config_error(std::string("model: ") + e.what());
        }
    }
    if (j.contains("train")) cfg.train = parse_train(j.at("train"), "train");
    if (j.contains("coupling")) cfg.coupling = parse_coupling(j.at("coupling"), "coupling");
    cfg.reflow_rounds = get_or<std::size_t>(j, "config", "reflow_rounds", cfg.reflow_rounds);
    if (j.contains("solvers")) {
        cfg.solvers.clear();
        const json& arr = j.at("solvers");
        if (!arr.is_array()) throw config_error("solvers: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            cfg.solvers.push_back(parse_solver(arr[i], "solvers." + std::to_string(i)));
        }
    }
    if (cfg.solvers.empty()) cfg.solvers.push_back(SolverSpec{});
    if (j.contains("metrics")) {
        cfg.metrics = j.at("metrics").get<std::vector<std::string>>();
    }
    if (j.contains("eval")) {
        const json& e = j.at("eval");
        cfg.eval.n_samples = get_or<std::size_t>(e, "eval", "n_samples", cfg.eval.n_samples);
        cfg.eval.n_traj = get_or<std::size_t>(e, "eval", "n_traj", cfg.eval.n_traj);
        cfg.eval.fine_n = get_or<std::size_t>(e, "eval", "fine_n", cfg.eval.fine_n);
    }
    // Cross-field checks that individual sections cannot see.
    for (const auto& name : cfg.metrics) {
        if (name != "energy_distance" && name != "straightness" && name != "transport_cost" &&
            name != "nfe") {
            throw config_error("metrics: unknown metric '" + name + "'");
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("config: cannot open " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

namespace {

json dataset_to_json(const DatasetConfig& cfg) {
    json j;
    switch (cfg.kind) {
        case DatasetConfig::Kind::eight_gaussians:
            j["kind"] = "eight_gaussians";
            j["radius"] = cfg.radius;
            j["sigma"] = cfg.sigma;
            j["components"] = cfg.components;
            break;
        case DatasetConfig::Kind::two_gaussians:
            j["kind"] = "two_gaussians";
            j["separation"] = cfg.separation;
            j["sigma"] = cfg.sigma;
            j["weight0"] = cfg.weight0;
            break;
        case DatasetConfig::Kind::gaussian_mixture:
            j["kind"] = "gaussian_mixture";
            j["means"] = cfg.means;
            j["sigmas"] = cfg.sigmas;
            j["weights"] = cfg.weights;
            break;
        case DatasetConfig::Kind::checkerboard:
            j["kind"] = "checkerboard";
            j["extent"] = cfg.extent;
            j["cells"] = cfg.cells;
            break;
        case DatasetConfig::Kind::file:
            j["kind"] = "file";
            j["path"] = cfg.path;
            break;
    }
    return j;
}

json schedule_to_json(const ScheduleSpec& s) {
    json j;
    j["kind"] = ode::schedule_name(s.kind);
    j["steps"] = s.steps;
    if (s.kind == ode::ScheduleKind::sigmoid) j["kappa"] = s.kappa;
    if (s.kind == ode::ScheduleKind::edm) {
        j["sigma_min"] = s.sigma_min;
        j["sigma_max"] = s.sigma_max;
        j["rho"] = s.rho;
    }
    return j;
}

json solver_to_json(const SolverSpec& s) {
    json j;
    if (!s.name.empty()) j["name"] = s.name;
    j["method"] = ode::method_name(s.method);
    if (s.method == ode::Method::dpm) j["dpm_r"] = s.dpm_r;
    j["schedule"] = schedule_to_json(s.schedule);
    j["final_step_euler"] = s.final_step_euler;
    if (s.guidance.kind != GuidanceSpec::Kind::none) {
        json g;
        g["kind"] = s.guidance.kind == GuidanceSpec::Kind::cfg ? "cfg" : "autoguide";
        g["scale"] = s.guidance.scale;
        g["aux_checkpoint"] = s.guidance.aux_checkpoint;
        j["guidance"] = g;
    }
    return j;
}

json train_to_json(const train::TrainConfig& cfg) {
    json j;
    j["steps"] = cfg.steps;
    j["batch"] = cfg.batch;
    j["lr"] = cfg.opt.lr;
    j["beta1"] = cfg.opt.beta1;
    j["beta2"] = cfg.opt.beta2;
    j["ema"] = cfg.opt.ema_decay;
    j["lr_final_frac"] = cfg.lr_final_frac;
    j["t_min"] = cfg.t_min;
    j["t_max"] = cfg.t_max;
    j["log_every"] = cfg.log_every;
    j["weight"] = {{"kind", loss::weight_kind_name(cfg.weight.kind)},
                   {"tracker_hidden", cfg.weight.tracker_hidden}};
    json td;
    td["kind"] = loss::time_dist_name(cfg.time_dist.kind);
    if (cfg.time_dist.kind == loss::TimeDistKind::exponential) td["a"] = cfg.time_dist.a;
    if (cfg.time_dist.kind == loss::TimeDistKind::lognormal) {
        td["p_mean"] = cfg.time_dist.p_mean;
        td["p_std"] = cfg.time_dist.p_std;
    }
    j["time_dist"] = td;
    json lm;
    lm["kind"] = loss::loss_map_name(cfg.loss_map.kind);
    if (cfg.loss_map.kind == loss::LossMapKind::hpf) {
        lm["lambda"] = cfg.loss_map.hpf_lambda;
        lm["blur_radius"] = cfg.loss_map.blur.radius;
        lm["blur_sigma"] = cfg.loss_map.blur.sigma;
    }
    if (cfg.loss_map.kind == loss::LossMapKind::pseudo_huber) lm["c"] = cfg.loss_map.ph_c;
    j["loss"] = lm;
    return j;
}

json coupling_to_json(const CouplingConfig& cfg) {
    json j;
    switch (cfg.kind) {
        case CouplingConfig::Kind::independent: j["kind"] = "independent"; break;
        case CouplingConfig::Kind::pairs: j["kind"] = "pairs"; break;
        case CouplingConfig::Kind::minibatch_ot: j["kind"] = "minibatch_ot"; break;
    }
    j["n_backward_pairs"] = cfg.n_backward_pairs;
    j["n_forward_pairs"] = cfg.n_forward_pairs;
    j["rho"] = cfg.rho;
    j["project"] = cfg.project;
    j["projection"] = {{"lambda_start", cfg.projection.lambda_start},
                       {"lambda_decay", cfg.projection.lambda_decay},
                       {"max_phases", cfg.projection.max_phases},
                       {"phase_iters", cfg.projection.phase_iters},
                       {"lr", cfg.projection.lr},
                       {"skd_eps", cfg.projection.skd_eps}};
    j["pair_solver"] = solver_to_json(cfg.pair_solver);
    if (!cfg.pairs_path.empty()) j["pairs_path"] = cfg.pairs_path;
    j["b_coupling"] = cfg.b_coupling;
    j["eps"] = cfg.eps;
    j["warm_start"] = cfg.warm_start;
    if (cfg.eps_decay_start) j["eps_decay_start"] = *cfg.eps_decay_start;
    return j;
}

}  // namespace

std::string dump_config(const ExperimentConfig& cfg) {
    json j;
    j["id"] = cfg.id;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["dataset"] = dataset_to_json(cfg.dataset);
    j["model"] = denoiser_config_to_json(cfg.model);
    j["train"] = train_to_json(cfg.train);
    j["coupling"] = coupling_to_json(cfg.coupling);
    j["reflow_rounds"] = cfg.reflow_rounds;
    json solvers = json::array();
    for (const auto& s : cfg.solvers) solvers.push_back(solver_to_json(s));
    j["solvers"] = solvers;
    j["metrics"] = cfg.metrics;
    j["eval"] = {{"n_samples", cfg.eval.n_samples},
                 {"n_traj", cfg.eval.n_traj},
                 {"fine_n", cfg.eval.fine_n}};
    return j.dump(2) + "\n";
}

std::string set_config_field(const std::string& json_text, const std::string& dotted_path,
                             const std::string& value) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    json parsed_value;
    try {
        parsed_value = json::parse(value);
    } catch (const json::exception&) {
        parsed_value = value;  // plain string
    }

    json* node = &j;
    std::string token;
    std::istringstream ss(dotted_path);
    std::vector<std::string> tokens;
    while (std::getline(ss, token, '.')) tokens.push_back(token);
    if (tokens.empty()) throw config_error("ablate: empty field path");
    for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
        const std::string& tk = tokens[i];
        if (node->is_array()) {
            const std::size_t idx = std::stoul(tk);
            if (idx >= node->size()) throw config_error("ablate: index out of range in " + dotted_path);
            node = &(*node)[idx];
        } else {
            node = &(*node)[tk];  // creates intermediate objects as needed
        }
    }
    const std::string& last = tokens.back();
    if (node->is_array()) {
        const std::size_t idx = std::stoul(last);
        if (idx >= node->size()) throw config_error("ablate: index out of range in " + dotted_path);
        (*node)[idx] = parsed_value;
    } else {
        (*node)[last] = parsed_value;
    }
    return j.dump(2) + "\n";
}

}  // namespace flowlab::cfg
