// flowlab: config-driven training, ReFlow, sampling and ablation runner
// for 2-D flow-matching experiments. See README.md for the config schema.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "flowlab/config.hpp"
#include "flowlab/csv.hpp"
#include "flowlab/error.hpp"
#include "flowlab/metrics.hpp"
#include "flowlab/projection.hpp"
#include "flowlab/runtime.hpp"
#include "flowlab/version.hpp"
#include "flowlab/viz.hpp"

namespace fs = std::filesystem;
using namespace flowlab;

namespace {

struct RunPaths {
    fs::path root;
    fs::path checkpoints;
    fs::path plots;
    fs::path pairs;
};

RunPaths prepare_run_dir(const std::string& dir) {
    RunPaths p;
    p.root = rt::resolve_out_dir(dir);
    p.checkpoints = p.root / "checkpoints";
    p.plots = p.root / "plots";
    p.pairs = p.root / "pairs";
    fs::create_directories(p.checkpoints);
    fs::create_directories(p.plots);
    fs::create_directories(p.pairs);
    return p;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw error("cannot write " + path.string());
    os << text;
}

void write_manifest(const RunPaths& paths, const cfg::ExperimentConfig& config,
                    const std::string& command) {
    std::ostringstream os;
    os << "{\n"
       << "  \"tool\": \"flowlab\",\n"
       << "  \"version\": \"" << kVersion << "\",\n"
       << "  \"command\": \"" << command << "\",\n"
       << "  \"experiment\": \"" << config.id << "\",\n"
       << "  \"seed\": " << config.seed << ",\n"
       << "  \"threads\": " << rt::thread_count() << "\n"
       << "}\n";
    write_text(paths.root / "manifest.json", os.str());
    write_text(paths.root / "config.resolved.json", cfg::dump_config(config));
}

std::string pick_out_dir(const cfg::ExperimentConfig& config, const std::string& flag) {
    if (!flag.empty()) return flag;
    if (!config.out_dir.empty()) return config.out_dir;
    return "runs/" + config.id;
}

Tensor generate_samples(const nn::Denoiser& model, const cfg::SolverSpec& spec, std::size_t n,
                        Rng& rng, std::size_t* nfe_out = nullptr) {
    ode::DenoiserVelocity field(model);
    ode::SolverCfg solver = cfg::make_solver_cfg(spec);
    Tensor x1 = data::sample_noise(n, model.data_dim(), rng);
    ode::SolveResult res = ode::solve(x1, field, solver);
    if (nfe_out) *nfe_out = res.nfe;
    return res.terminal;
}

void evaluate_model(const nn::Denoiser& model, const data::DataSampler& dataset,
                    const cfg::ExperimentConfig& config, io::MetricsSink& sink,
                    std::size_t step, const std::string& tag, Rng rng) {
    const auto& eval = config.eval;
    Rng rng_data = rng.split(0xE1);
    Rng rng_gen = rng.split(0xE2);
    Rng rng_straight = rng.split(0xE3);

    for (const auto& spec : config.solvers) {
        const std::string label = tag + "/" + cfg::solver_label(spec);
        std::size_t nfe = 0;
        Tensor samples = generate_samples(model, spec, eval.n_samples, rng_gen, &nfe);
        for (const auto& metric : config.metrics) {
            if (metric == "energy_distance") {
                Tensor ref = dataset.sample(eval.n_samples, rng_data);
                sink.value(label + "/energy_distance", metrics::energy_distance(samples, ref),
                           eval.n_samples, step);
            } else if (metric == "nfe") {
                sink.value(label + "/nfe", static_cast<double>(nfe), eval.n_samples, step);
            }
        }
    }
    for (const auto& metric : config.metrics) {
        if (metric == "straightness") {
            ode::DenoiserVelocity field(model);
            const double s = metrics::straightness(field, eval.n_traj, eval.fine_n, rng_straight);
            sink.value(tag + "/straightness", s, eval.n_traj, step);
        } else if (metric == "transport_cost") {
            // Model coupling cost: noise endpoints against their solved
            // data endpoints under the first configured solver.
            Rng rng_tc = rng.split(0xE4);
            ode::DenoiserVelocity field(model);
            ode::SolverCfg solver = cfg::make_solver_cfg(config.solvers.front());
            Tensor x1 = data::sample_noise(eval.n_samples, model.data_dim(), rng_tc);
            Tensor x0 = ode::solve(x1, field, solver).terminal;
            sink.value(tag + "/transport_cost", metrics::transport_cost(x0, x1), eval.n_samples,
                       step);
        }
    }
}

void plot_samples(const RunPaths& paths, const std::string& name, const Tensor& samples,
                  const Tensor& reference) {
    viz::svg_scatter((paths.plots / (name + ".svg")).string(), name,
                     {{"model", samples}, {"data", reference}});
}

nn::Denoiser train_model(const cfg::ExperimentConfig& config, const data::DataSampler& dataset,
                         io::MetricsSink& sink, const RunPaths& paths) {
    Rng master(config.seed);
    Rng rng_init = master.split(1);
    Rng rng_train = master.split(2);
    Rng rng_pairs = master.split(3);

    nn::Denoiser model(config.model, rng_init);

    std::unique_ptr<train::CouplingSource> source;
    coupling::PairStore store;
    switch (config.coupling.kind) {
        case cfg::CouplingConfig::Kind::independent:
            source = std::make_unique<train::IndependentSource>(dataset);
            break;
        case cfg::CouplingConfig::Kind::pairs: {
            if (config.coupling.pairs_path.empty()) {
                throw config_error(
                    "coupling.pairs_path: required for 'pairs' coupling under the train "
                    "command (the reflow command generates pairs itself)");
            }
            store = coupling::load_pairs(config.coupling.pairs_path);
            store.rho = config.coupling.rho;
            source = std::make_unique<train::PairStoreSource>(store);
            break;
        }
        case cfg::CouplingConfig::Kind::minibatch_ot:
            source = std::make_unique<train::MinibatchOtSource>(
                dataset, config.coupling.b_coupling, config.coupling.eps, 2000,
                config.coupling.warm_start, config.coupling.eps_decay_start);
            break;
    }
    (void)rng_pairs;

    std::vector<train::TrainLogRow> rows;
    train::TrainResult result = train::train(
        model, *source, config.train, rng_train,
        [&](std::size_t step, const train::TrainLogRow& row) {
            rows.push_back(row);
            sink.value("train/objective", row.objective, config.train.batch, step);
            sink.value("train/weighted_loss", row.weighted_loss, config.train.batch, step);
            sink.value("train/raw_loss", row.raw_loss, config.train.batch, step);
        });
    sink.value("train/skipped_steps", static_cast<double>(result.skipped_steps));

    viz::Series s;
    s.label = "weighted loss";
    for (const auto& r : rows) {
        s.x.push_back(static_cast<double>(r.step));
        s.y.push_back(r.weighted_loss);
    }
    if (!s.x.empty()) {
        viz::svg_line_chart((paths.plots / "loss.svg").string(), "training loss", {s}, true);
    }
    return model;
}

int cmd_train(const std::string& config_path, const std::string& out_flag) {
    cfg::ExperimentConfig config = cfg::load_config(config_path);
    RunPaths paths = prepare_run_dir(pick_out_dir(config, out_flag));
    write_manifest(paths, config, "train");
    io::MetricsSink sink((paths.root / "metrics.csv").string(), config.id, config.seed);

    auto dataset = cfg::make_dataset(config.dataset);
    nn::Denoiser model = train_model(config, *dataset, sink, paths);
    nn::save_checkpoint((paths.checkpoints / "model.json").string(), model);

    Rng master(config.seed);
    Rng rng_eval = master.split(4);
    evaluate_model(model, *dataset, config, sink, config.train.steps, "final", rng_eval);

    Rng rng_plot = master.split(5);
    Tensor samples = generate_samples(model, config.solvers.front(), 2048, rng_plot);
    plot_samples(paths, "samples", samples, dataset->sample(2048, rng_plot));
    sink.flush();
    std::cout << "train: wrote " << (paths.root / "metrics.csv").string() << "\n";
    return 0;
}

int cmd_reflow(const std::string& config_path, const std::string& out_flag,
               const std::string& teacher_path, std::size_t rounds_flag) {
    cfg::ExperimentConfig config = cfg::load_config(config_path);
    RunPaths paths = prepare_run_dir(pick_out_dir(config, out_flag));
    write_manifest(paths, config, "reflow");
    io::MetricsSink sink((paths.root / "metrics.csv").string(), config.id, config.seed);

    auto dataset = cfg::make_dataset(config.dataset);
    Rng master(config.seed);

    nn::Denoiser teacher = [&] {
        if (!teacher_path.empty()) {
            return nn::denoiser_from_checkpoint(nn::load_checkpoint(teacher_path));
        }
        cfg::ExperimentConfig teacher_cfg = config;
        teacher_cfg.coupling.kind = cfg::CouplingConfig::Kind::independent;
        return train_model(teacher_cfg, *dataset, sink, paths);
    }();
    nn::save_checkpoint((paths.checkpoints / "teacher.json").string(), teacher);
    Rng rng_eval = master.split(6);
    evaluate_model(teacher, *dataset, config, sink, 0, "round_0", rng_eval.split(0));

    const std::size_t rounds = rounds_flag > 0 ? rounds_flag : config.reflow_rounds;
    train::ReflowRoundConfig round_cfg;
    round_cfg.n_backward_pairs = config.coupling.n_backward_pairs;
    round_cfg.n_forward_pairs = config.coupling.n_forward_pairs;
    round_cfg.rho = config.coupling.rho;
    round_cfg.project = config.coupling.project;
    round_cfg.projection = config.coupling.projection;
    round_cfg.pair_solver = cfg::make_solver_cfg(config.coupling.pair_solver);
    round_cfg.train = config.train;

    for (std::size_t round = 1; round <= rounds; ++round) {
        Rng rng_round = master.split(100 + round);
        train::ReflowRoundResult res = train::reflow_round(teacher, *dataset, round_cfg, rng_round);
        const std::string tag = "round_" + std::to_string(round);
        coupling::save_pairs((paths.pairs / (tag + ".pairs")).string(), res.pairs);
        nn::save_checkpoint((paths.checkpoints / (tag + ".json")).string(), res.student);
        sink.value(tag + "/dropped_pairs", static_cast<double>(res.dropped_pairs));
        sink.value(tag + "/pair_transport_cost",
                   metrics::transport_cost(res.pairs.backward_x0, res.pairs.backward_x1),
                   res.pairs.n_backward());
        evaluate_model(res.student, *dataset, config, sink, round, tag, rng_eval.split(round));
        teacher = std::move(res.student);
    }
    nn::save_checkpoint((paths.checkpoints / "final.json").string(), teacher);

    Rng rng_plot = master.split(7);
    Tensor samples = generate_samples(teacher, config.solvers.front(), 2048, rng_plot);
    plot_samples(paths, "samples_final", samples, dataset->sample(2048, rng_plot));
    sink.flush();
    std::cout << "reflow: " << rounds << " round(s) -> "
              << (paths.checkpoints / "final.json").string() << "\n";
    return 0;
}

int cmd_sample(const std::string& checkpoint, const std::string& config_path,
               const std::string& out_flag, std::size_t n, std::uint64_t seed,
               bool trajectories, bool use_ema) {
    nn::Checkpoint ckpt = nn::load_checkpoint(checkpoint);
    nn::Denoiser model = nn::denoiser_from_checkpoint(ckpt, use_ema);

    cfg::ExperimentConfig config;
    if (!config_path.empty()) config = cfg::load_config(config_path);
    config.seed = seed;
    RunPaths paths = prepare_run_dir(out_flag.empty() ? "runs/sample" : out_flag);
    write_manifest(paths, config, "sample");

    const cfg::SolverSpec& spec = config.solvers.front();
    ode::SolverCfg solver = cfg::make_solver_cfg(spec);
    solver.record_trajectory = trajectories;

    Rng rng(seed);
    Tensor x1 = data::sample_noise(n, model.data_dim(), rng);
    ode::SolveResult res =
        n > 0 ? ode::solve(x1, ode::DenoiserVelocity(model), solver) : ode::SolveResult{};
    if (n == 0) {
        res.terminal = Tensor({0, model.data_dim()});
        res.nfe = 0;
    }

    // samples.csv: one row per sample.
    {
        std::vector<std::string> header;
        for (std::size_t j = 0; j < model.data_dim(); ++j) header.push_back("x" + std::to_string(j));
        io::CsvWriter csv((paths.root / "samples.csv").string(), header);
        for (std::size_t i = 0; i < res.terminal.rows(); ++i) {
            std::vector<std::string> cells;
            for (std::size_t j = 0; j < model.data_dim(); ++j) {
                cells.push_back(io::CsvWriter::num(res.terminal.at(i, j)));
            }
            csv.row(cells);
        }
    }
    if (trajectories && n > 0) {
        std::vector<std::string> header{"sample", "step", "t"};
        for (std::size_t j = 0; j < model.data_dim(); ++j) header.push_back("x" + std::to_string(j));
        io::CsvWriter csv((paths.root / "trajectories.csv").string(), header);
        for (std::size_t k = 0; k < res.trajectory.size(); ++k) {
            for (std::size_t i = 0; i < res.trajectory[k].rows(); ++i) {
                std::vector<std::string> cells{io::CsvWriter::num(i), io::CsvWriter::num(k),
                                               io::CsvWriter::num(res.times[k])};
                for (std::size_t j = 0; j < model.data_dim(); ++j) {
                    cells.push_back(io::CsvWriter::num(res.trajectory[k].at(i, j)));
                }
                csv.row(cells);
            }
        }
    }
    io::MetricsSink sink((paths.root / "metrics.csv").string(), "sample", seed);
    sink.value("nfe", static_cast<double>(res.nfe), n);
    sink.flush();
    if (n > 0) {
        viz::svg_scatter((paths.plots / "samples.svg").string(), "samples",
                         {{"model", res.terminal}});
    }
    std::cout << "sample: n=" << n << " nfe=" << res.nfe << " -> " << paths.root.string() << "\n";
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& out_flag,
               const std::string& axis, const std::vector<std::string>& values) {
    if (values.empty()) throw config_error("ablate: at least one --values entry required");
    std::ifstream is(config_path);
    if (!is) throw config_error("config: cannot open " + config_path);
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string base_text = ss.str();

    cfg::ExperimentConfig base = cfg::parse_config(base_text);
    RunPaths paths = prepare_run_dir(out_flag.empty() ? ("runs/" + base.id + "_ablate") : out_flag);
    write_manifest(paths, base, "ablate");

    io::CsvWriter comparison((paths.root / "comparison.csv").string(),
                             {"axis", "value", "metric", "result", "seed"});
    viz::Series ed_series;
    ed_series.label = "energy_distance";

    for (std::size_t vi = 0; vi < values.size(); ++vi) {
        const std::string& value = values[vi];
        const std::string text = cfg::set_config_field(base_text, axis, value);
        cfg::ExperimentConfig run_cfg = cfg::parse_config(text);
        run_cfg.id = base.id + "_" + std::to_string(vi);
        // Shared seeds across values: paired comparison.
        run_cfg.seed = base.seed;

        const std::string sub = (paths.root / ("value_" + std::to_string(vi))).string();
        RunPaths sub_paths = prepare_run_dir(sub);
        write_text(sub_paths.root / "config.resolved.json", cfg::dump_config(run_cfg));
        io::MetricsSink sink((sub_paths.root / "metrics.csv").string(), run_cfg.id, run_cfg.seed);

        auto dataset = cfg::make_dataset(run_cfg.dataset);
        nn::Denoiser model = train_model(run_cfg, *dataset, sink, sub_paths);
        nn::save_checkpoint((sub_paths.checkpoints / "model.json").string(), model);
        Rng rng_eval = Rng(run_cfg.seed).split(4);
        evaluate_model(model, *dataset, run_cfg, sink, run_cfg.train.steps, "final", rng_eval);
        sink.flush();

        // Summary row: energy distance under the first solver.
        Rng rng_sum = Rng(run_cfg.seed).split(8);
        Tensor samples = generate_samples(model, run_cfg.solvers.front(), run_cfg.eval.n_samples,
                                          rng_sum);
        Tensor ref = dataset->sample(run_cfg.eval.n_samples, rng_sum);
        const double ed = metrics::energy_distance(samples, ref);
        comparison.row({axis, value, "energy_distance", io::CsvWriter::num(ed),
                        std::to_string(run_cfg.seed)});
        ed_series.x.push_back(static_cast<double>(vi));
        ed_series.y.push_back(ed);
    }
    comparison.flush();
    viz::svg_line_chart((paths.plots / "ablation.svg").string(), "ablation: " + axis,
                        {ed_series});
    std::cout << "ablate: " << values.size() << " runs -> "
              << (paths.root / "comparison.csv").string() << "\n";
    return 0;
}

int cmd_metrics(const std::string& checkpoint, const std::string& config_path,
                const std::string& out_flag, bool use_ema) {
    cfg::ExperimentConfig config = cfg::load_config(config_path);
    nn::Denoiser model = nn::denoiser_from_checkpoint(nn::load_checkpoint(checkpoint), use_ema);
    RunPaths paths = prepare_run_dir(out_flag.empty() ? "runs/metrics" : out_flag);
    write_manifest(paths, config, "metrics");

    io::MetricsSink sink((paths.root / "metrics.csv").string(), config.id, config.seed);
    auto dataset = cfg::make_dataset(config.dataset);
    Rng master(config.seed);
    evaluate_model(model, *dataset, config, sink, 0, "metrics", master.split(4));

    // Truncation-error profile of each configured schedule, probed on
    // pairs simulated from the model itself.
    Rng rng_probe = master.split(9);
    ode::DenoiserVelocity field(model);
    ode::SolverCfg gen_cfg;
    gen_cfg.method = ode::Method::heun;
    gen_cfg.schedule = ode::Schedule::uniform(32);
    coupling::PairGenResult probe =
        coupling::generate_backward_pairs(field, 512, gen_cfg, rng_probe);
    for (const auto& spec : config.solvers) {
        ode::Schedule schedule = cfg::make_schedule(spec.schedule);
        std::vector<double> tau = ode::truncation_error(field, schedule, probe.store.backward_x0,
                                                        probe.store.backward_x1);
        const std::string label = "truncation/" + cfg::solver_label(spec);
        for (std::size_t i = 0; i < tau.size(); ++i) {
            sink.value(label + "/interval_" + std::to_string(i), tau[i],
                       probe.store.n_backward(), i);
        }
    }
    sink.flush();
    std::cout << "metrics: wrote " << (paths.root / "metrics.csv").string() << "\n";
    return 0;
}

int cmd_project_pairs(const std::string& pairs_path, const std::string& config_path,
                      const std::string& out_pairs, const std::string& out_flag) {
    cfg::ExperimentConfig config = cfg::load_config(config_path);
    coupling::PairStore store = coupling::load_pairs(pairs_path);
    auto dataset = cfg::make_dataset(config.dataset);
    Rng rng(config.seed);
    Tensor data_ref = dataset->sample(std::max<std::size_t>(store.n_backward(), 512), rng);

    const double before = metrics::energy_distance(store.backward_x0, data_ref);
    coupling::ProjectionResult res =
        coupling::project_coupling(store, data_ref, config.coupling.projection);
    const double after = metrics::energy_distance(res.store.backward_x0, data_ref);
    coupling::save_pairs(out_pairs, res.store);

    RunPaths paths = prepare_run_dir(out_flag.empty() ? "runs/project" : out_flag);
    write_manifest(paths, config, "project-pairs");
    io::MetricsSink sink((paths.root / "metrics.csv").string(), config.id, config.seed);
    sink.value("projection/marginal_before", before, store.n_backward());
    sink.value("projection/marginal_after", after, store.n_backward());
    sink.value("projection/mean_displacement", res.mean_displacement, store.n_backward());
    sink.value("projection/phases", static_cast<double>(res.phases));
    sink.value("projection/aborted", res.aborted ? 1.0 : 0.0);
    sink.flush();
    std::cout << "project-pairs: marginal " << before << " -> " << after << " ("
              << res.phases << " phases" << (res.aborted ? ", aborted" : "") << ")\n";
    return res.aborted ? 3 : 0;
}

int cmd_sinkhorn_demo(std::size_t n, double eps, double eps_decay_start, std::uint64_t seed,
                      const std::string& out_flag) {
    Rng rng(seed);
    Tensor x0 = data::sample_noise(n, 2, rng);
    Tensor x1 = data::sample_noise(n, 2, rng);
    for (std::size_t i = 0; i < x0.rows(); ++i) x0.at(i, 0) += 2.0;  // shifted cloud

    coupling::SinkhornAccel accel;
    if (eps_decay_start > eps) accel.eps_decay_start = eps_decay_start;
    coupling::SinkhornPlan plan = coupling::sinkhorn_coupling(x0, x1, eps, 5000, accel);

    std::cout << "sinkhorn: b=" << n << " eps=" << eps << " iters=" << plan.iterations
              << " converged=" << (plan.converged ? "yes" : "no")
              << " max_violation=" << plan.max_violation
              << " cost=" << plan.plan_cost(x0, x1) << "\n";

    if (!out_flag.empty()) {
        RunPaths paths = prepare_run_dir(out_flag);
        io::CsvWriter csv((paths.root / "plan_stats.csv").string(),
                          {"b", "eps", "iterations", "converged", "max_violation", "cost"});
        csv.row({io::CsvWriter::num(n), io::CsvWriter::num(eps),
                 io::CsvWriter::num(plan.iterations), plan.converged ? "1" : "0",
                 io::CsvWriter::num(plan.max_violation),
                 io::CsvWriter::num(plan.plan_cost(x0, x1))});
    }
    return plan.converged ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowlab: desk-scale flow-matching and ReFlow laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir, checkpoint, teacher, axis, pairs_path, out_pairs;
    std::vector<std::string> values;
    std::size_t n = 4096, rounds = 0, demo_n = 64;
    std::uint64_t seed = 0;
    double eps = 2.0, eps_decay_start = 0.0;
    bool trajectories = false, use_ema = false;

    auto* train_cmd = app.add_subcommand("train", "train a model per config");
    train_cmd->add_option("-c,--config", config_path, "config file")->required();
    train_cmd->add_option("-o,--out", out_dir, "output directory");

    auto* reflow_cmd = app.add_subcommand("reflow", "iterate ReFlow rounds");
    reflow_cmd->add_option("-c,--config", config_path, "config file")->required();
    reflow_cmd->add_option("-o,--out", out_dir, "output directory");
    reflow_cmd->add_option("--teacher", teacher, "teacher checkpoint (skips teacher training)");
    reflow_cmd->add_option("--rounds", rounds, "number of rounds (overrides config)");

    auto* sample_cmd = app.add_subcommand("sample", "sample from a checkpoint");
    sample_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    sample_cmd->add_option("-c,--config", config_path, "config with solver settings");
    sample_cmd->add_option("-o,--out", out_dir, "output directory");
    sample_cmd->add_option("-n", n, "number of samples");
    sample_cmd->add_option("--seed", seed, "sampling seed");
    sample_cmd->add_flag("--trajectories", trajectories, "write trajectory CSV");
    sample_cmd->add_flag("--ema", use_ema, "use EMA parameters");

    auto* ablate_cmd = app.add_subcommand("ablate", "run a config axis over values");
    ablate_cmd->add_option("-c,--config", config_path, "config file")->required();
    ablate_cmd->add_option("-o,--out", out_dir, "output directory");
    ablate_cmd->add_option("--axis", axis, "dotted config field path")->required();
    ablate_cmd->add_option("--values", values, "values for the axis")->required();

    auto* metrics_cmd = app.add_subcommand("metrics", "evaluate a checkpoint");
    metrics_cmd->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
    metrics_cmd->add_option("-c,--config", config_path, "config file")->required();
    metrics_cmd->add_option("-o,--out", out_dir, "output directory");
    metrics_cmd->add_flag("--ema", use_ema, "use EMA parameters");

    auto* project_cmd = app.add_subcommand("project-pairs", "marginal-repair a pair store");
    project_cmd->add_option("--pairs", pairs_path, "input pair store")->required();
    project_cmd->add_option("-c,--config", config_path, "config file")->required();
    project_cmd->add_option("--out-pairs", out_pairs, "output pair store")->required();
    project_cmd->add_option("-o,--out", out_dir, "output directory");

    auto* demo_cmd = app.add_subcommand("sinkhorn-demo", "solve one entropic OT plan");
    demo_cmd->add_option("-n", demo_n, "batch size");
    demo_cmd->add_option("--eps", eps, "regularization");
    demo_cmd->add_option("--eps-decay-start", eps_decay_start, "annealed start value");
    demo_cmd->add_option("--seed", seed, "seed");
    demo_cmd->add_option("-o,--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(train_cmd)) return cmd_train(config_path, out_dir);
        if (app.got_subcommand(reflow_cmd)) return cmd_reflow(config_path, out_dir, teacher, rounds);
        if (app.got_subcommand(sample_cmd)) {
            return cmd_sample(checkpoint, config_path, out_dir, n, seed, trajectories, use_ema);
        }
        if (app.got_subcommand(ablate_cmd)) return cmd_ablate(config_path, out_dir, axis, values);
        if (app.got_subcommand(metrics_cmd)) {
            return cmd_metrics(checkpoint, config_path, out_dir, use_ema);
        }
        if (app.got_subcommand(project_cmd)) {
            return cmd_project_pairs(pairs_path, config_path, out_pairs, out_dir);
        }
        if (app.got_subcommand(demo_cmd)) {
            return cmd_sinkhorn_demo(demo_n, eps, eps_decay_start, seed, out_dir);
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
