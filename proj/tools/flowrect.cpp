// flowrect: inversion-free flow-matching video editing at desk scale.
// Subcommands: gen-data, train, edit, eval, ablate, ot-bench, cache-bench.
// Exit codes: 0 success, 2 usage, 3 I/O, 4 numeric divergence.

#include <CLI11.hpp>
#include <iostream>

#include "flowrect/ablation.hpp"
#include "flowrect/manifest.hpp"
#include "flowrect/sampler.hpp"
#include "flowrect/suite_io.hpp"
#include "flowrect/trainer.hpp"

using namespace flowrect;
namespace fs = std::filesystem;

namespace {

struct DatasetArgs {
    std::string motion = "translate";
    std::string shape = "square";
    int size = 16;
    int frames = 8;
    int channels = 3;
    int classes = 6;
    int count = 16;
    std::uint64_t seed = 0;

    SyntheticDatasetSpec spec() const {
        SyntheticDatasetSpec d;
        d.motion = motion_from_string(motion);
        d.shape = shape_from_string(shape);
        d.size = size;
        d.frames = frames;
        d.channels = channels;
        d.num_classes = classes;
        d.num_clips = count;
        d.seed = seed;
        d.validate();
        return d;
    }

    void to_manifest(RunManifest& m) const {
        m.config("motion", motion);
        m.config("shape", shape);
        m.config("size", size);
        m.config("frames", frames);
        m.config("channels", channels);
        m.config("classes", classes);
        m.config("count", count);
        m.config("data_seed", seed);
    }

    // registers the flags on a subcommand; returns them for excludes() wiring
    std::vector<CLI::Option*> add_options(CLI::App* cmd) {
        std::vector<CLI::Option*> opts;
        opts.push_back(cmd->add_option("--motion", motion, "motion family: translate|bounce|rotate-hue"));
        opts.push_back(cmd->add_option("--shape", shape, "shape family: square|disc"));
        opts.push_back(cmd->add_option("--size", size, "frame side length"));
        opts.push_back(cmd->add_option("--frames", frames, "frames per clip"));
        opts.push_back(cmd->add_option("--channels", channels, "1 or 3"));
        opts.push_back(cmd->add_option("--classes", classes, "number of content classes"));
        opts.push_back(cmd->add_option("--count", count, "number of clips"));
        opts.push_back(cmd->add_option("--data-seed", seed, "dataset seed"));
        return opts;
    }
};

struct EditArgs {
    std::string ckpt, src, edit_frame, out, trace, export_dir, flow_viz_dir;
    int src_token = 0, tar_token = 0;
    double lambda = 1.0, guidance = 5.0, t_max = 0.95, beta = 0.025, alpha = 0.95;
    std::string delta = "0.35";
    int steps = 25;
    std::string solver = "euler";
    std::uint64_t seed = 0;
    bool recursive_warp = false;

    EditConfig config() const {
        EditConfig cfg;
        cfg.lambda = lambda;
        cfg.guidance = guidance;
        cfg.smpi.t_max = t_max;
        cfg.smpi.beta = beta;
        cfg.smpi.alpha = alpha;
        cfg.smpi.recursive_warp = recursive_warp;
        cfg.cache = CacheSetting::parse(delta);
        cfg.num_steps = steps;
        cfg.seed = seed;
        cfg.solver = solver_from_string(solver);
        cfg.validate();
        return cfg;
    }

    void add_knobs(CLI::App* cmd) {
        cmd->add_option("--lambda", lambda, "rectification scale");
        cmd->add_option("--guidance", guidance, "classifier-free guidance scale");
        cmd->add_option("--t-max", t_max, "boundary mixing timestep in (0,1]");
        cmd->add_option("--beta", beta, "condition padding scale");
        cmd->add_option("--alpha", alpha, "noise blending factor in [0,1]");
        cmd->add_option("--delta", delta, "cache threshold: off|inf|<real>");
        cmd->add_option("--steps", steps, "sampling steps");
        cmd->add_option("--solver", solver, "euler|heun");
        cmd->add_option("--seed", seed, "sampling seed");
        cmd->add_flag("--recursive-warp", recursive_warp, "warp the modulated noise recursively");
    }

    void to_manifest(RunManifest& m) const {
        m.config("lambda", lambda);
        m.config("guidance", guidance);
        m.config("t_max", t_max);
        m.config("beta", beta);
        m.config("alpha", alpha);
        m.config("delta", CacheSetting::parse(delta).str());
        m.config("steps", steps);
        m.config("solver", solver);
        m.config("seed", seed);
        m.config("recursive_warp", recursive_warp);
        m.config("src_token", src_token);
        m.config("tar_token", tar_token);
    }
};

ToyModel<float> load_model(const fs::path& ckpt_path) {
    ModelCheckpoint ckpt = load_checkpoint(ckpt_path);
    return ToyModel<float>(std::move(ckpt.net));
}

void cmd_gen_data(const DatasetArgs& data, const std::string& out_dir) {
    PhaseTimer timer;
    const SyntheticDatasetSpec spec = data.spec();
    fs::create_directories(out_dir);

    std::vector<ClipSample> clips;
    for (int i = 0; i < spec.num_clips; ++i) clips.push_back(make_clip(spec, i));
    for (int i = 0; i < spec.num_clips; ++i) save_clip_files(out_dir, i, clips[i]);
    write_suite_csv(fs::path(out_dir) / "dataset.csv", clips);

    RunManifest m("gen-data");
    data.to_manifest(m);
    m.output("dataset_csv", fs::path(out_dir) / "dataset.csv");
    for (int i = 0; i < spec.num_clips; ++i) {
        const std::string stem = clip_stem(i);
        m.output(stem, fs::path(out_dir) / (stem + ".frct"));
        m.output(stem + "_edit", fs::path(out_dir) / (stem + "_edit.frct"));
        if (spec.frames > 1) m.output(stem + "_flow", fs::path(out_dir) / (stem + "_flow.frcm"));
    }
    m.timing("total", timer.seconds());
    m.write(fs::path(out_dir) / "manifest.json");
    std::cout << "wrote " << spec.num_clips << " clips to " << out_dir << "\n";
}

void cmd_train(const DatasetArgs& data, const std::string& data_dir, int hidden,
               int time_features, const TrainConfig& cfg_in, const std::string& out,
               const std::string& loss_csv) {
    PhaseTimer timer;
    DatasetArgs effective = data;
    if (!data_dir.empty()) {
        auto j = RunManifest::read(fs::path(data_dir) / "manifest.json");
        const auto& c = j.at("config");
        effective.motion = c.at("motion").get<std::string>();
        effective.shape = c.at("shape").get<std::string>();
        effective.size = c.at("size").get<int>();
        effective.frames = c.at("frames").get<int>();
        effective.channels = c.at("channels").get<int>();
        effective.classes = c.at("classes").get<int>();
        effective.count = c.at("count").get<int>();
        effective.seed = c.at("data_seed").get<std::uint64_t>();
    }
    const SyntheticDatasetSpec spec = effective.spec();

    ToyNetDescriptor desc;
    desc.channels = spec.channels;
    desc.hidden = hidden;
    desc.classes = spec.num_classes;
    desc.time_features = time_features;

    TrainConfig cfg = cfg_in;
    cfg.checkpoint_path = out;
    TrainResult r = train(desc, spec, cfg);

    const fs::path loss_path = loss_csv.empty() ? fs::path(out).replace_extension(".loss.csv")
                                                : fs::path(loss_csv);
    write_loss_csv(loss_path, r.loss_curve);

    RunManifest m("train");
    effective.to_manifest(m);
    m.config("hidden", hidden);
    m.config("time_features", time_features);
    m.config("lr", cfg.learning_rate);
    m.config("batch", cfg.batch_size);
    m.config("steps", cfg.steps);
    m.config("dropout", cfg.cond_dropout);
    m.config("seed", cfg.seed);
    m.config("ckpt_interval", cfg.checkpoint_interval);
    m.output("checkpoint", out);
    m.output("loss_csv", loss_path);
    m.timing("train", timer.seconds());
    m.write(fs::path(out).string() + ".manifest.json");
    std::cout << "final loss " << r.loss_curve.back() << " after " << cfg.steps << " steps -> "
              << out << "\n";
}

void cmd_edit(EditArgs& a) {
    PhaseTimer timer;
    ToyModel<float> model = load_model(a.ckpt);
    FrameSequence x_src = load_frames(a.src);
    Tensor4f x_edit = from_raw_frame(load_tensor(a.edit_frame), "edit frame");
    const EditConfig cfg = a.config();

    EditResult r = edit(model, x_src, x_edit, a.src_token, a.tar_token, cfg);
    save_frames(a.out, r.video);
    if (!a.trace.empty()) write_trace_csv(a.trace, r.trace);
    if (!a.export_dir.empty()) export_frames(r.video, a.export_dir, "edited");
    if (!a.flow_viz_dir.empty() && r.estimated_flow)
        export_flow_magnitude(*r.estimated_flow, a.flow_viz_dir);

    RunManifest m("edit");
    a.to_manifest(m);
    m.input("checkpoint", a.ckpt);
    m.input("src", a.src);
    m.input("edit_frame", a.edit_frame);
    m.output("out", a.out);
    if (!a.trace.empty()) m.output("trace", a.trace);
    m.note("noise_digest", hex64(r.trace.noise_digest));
    m.timing("edit", timer.seconds());
    m.write(a.out + ".manifest.json");

    const auto rep = make_cache_report(int(r.trace.steps.size()), int(r.trace.total_src_evals));
    std::cout << "edit done: steps=" << r.trace.steps.size()
              << " src_evals=" << r.trace.total_src_evals
              << " tar_evals=" << r.trace.total_tar_evals << " cache_hit_rate=" << rep.hit_rate
              << " wall=" << r.trace.wall_seconds << "s\n";
}

void cmd_eval(const std::string& video, const std::string& src, const std::string& edit_frame,
              const std::string& out) {
    PhaseTimer timer;
    FrameSequence v = load_frames(video);
    FrameSequence s = load_frames(src);
    Tensor4f e = from_raw_frame(load_tensor(edit_frame), "edit frame");
    MetricsReport r = evaluate_edit(v, s, e);

    std::ofstream csv(out);
    if (!csv) throw IoError("cannot open for writing: " + out);
    char buf[256];
    csv << "tc,efc,ovc,aec,mse\n";
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g\n", r.tc, r.efc, r.ovc, r.aec,
                  r.mse_vs_reference);
    csv << buf;
    csv.close();

    RunManifest m("eval");
    m.input("video", video);
    m.input("src", src);
    m.input("edit_frame", edit_frame);
    m.output("report", out);
    m.timing("eval", timer.seconds());
    m.write(out + ".manifest.json");

    std::printf("metric      value\n");
    std::printf("tc       %8.4f\n", r.tc);
    std::printf("efc      %8.4f\n", r.efc);
    std::printf("ovc      %8.4f\n", r.ovc);
    std::printf("aec      %8.4f\n", r.aec);
    std::printf("mse      %8.6f\n", r.mse_vs_reference);
}

void cmd_ablate(EditArgs& a, const std::string& data_dir, const std::string& out_dir,
                int max_clips) {
    PhaseTimer timer;
    ToyModel<float> model = load_model(a.ckpt);
    std::vector<ClipSample> clips = load_suite(data_dir);
    if (max_clips > 0 && int(clips.size()) > max_clips) clips.resize(max_clips);
    if (clips.empty()) throw DomainError("ablate: the suite at " + data_dir + " is empty");

    const EditConfig cfg = a.config();
    std::vector<AblationRow> rows = run_ablation(model, clips, cfg);

    fs::create_directories(out_dir);
    write_ablation_csv(fs::path(out_dir) / "ablation.csv", rows);
    write_ablation_timing_csv(fs::path(out_dir) / "ablation_timing.csv", rows);

    RunManifest m("ablate");
    a.to_manifest(m);
    m.config("clips", int(clips.size()));
    m.input("checkpoint", a.ckpt);
    m.input("dataset_csv", fs::path(data_dir) / "dataset.csv");
    m.output("ablation_csv", fs::path(out_dir) / "ablation.csv");
    m.note("timing_artifacts", (fs::path(out_dir) / "ablation_timing.csv").string());
    m.timing("ablate", timer.seconds());
    m.write(fs::path(out_dir) / "manifest.json");

    std::printf("%-10s %8s %8s %8s %8s %10s %9s %9s %8s\n", "setting", "tc", "efc", "ovc", "aec",
                "mse", "src_ev", "tar_ev", "time_s");
    for (const auto& r : rows)
        std::printf("%-10s %8.4f %8.4f %8.4f %8.4f %10.6f %9lld %9lld %8.2f\n", r.setting.c_str(),
                    r.metrics.tc, r.metrics.efc, r.metrics.ovc, r.metrics.aec,
                    r.metrics.mse_vs_reference, static_cast<long long>(r.src_evals),
                    static_cast<long long>(r.tar_evals), r.seconds);
}

void cmd_ot_bench(const std::string& out, double t_max, double sigma2, double mu_src,
                  double mu_tar, double x_src, std::uint64_t seed,
                  const std::vector<int>& steps_list, const std::vector<double>& lambda_list,
                  const std::vector<std::string>& solver_list) {
    PhaseTimer timer;
    const Shape4 scalar{1, 1, 1, 1};
    auto src = AnalyticGaussianSpec<double>::broadcast(scalar, mu_src, sigma2);
    auto tar = AnalyticGaussianSpec<double>::broadcast(scalar, mu_tar, sigma2);
    auto x0 = Tensor4d::constant(scalar, x_src);
    const double ot_value = x_src + (mu_tar - mu_src);

    const int max_steps = *std::max_element(steps_list.begin(), steps_list.end());

    std::ofstream csv(out);
    if (!csv) throw IoError("cannot open for writing: " + out);
    csv << "solver,lambda,steps,x_tar,err_vs_ot,err_vs_fine\n";
    char buf[256];
    for (double lam : lambda_list) {
        for (const std::string& solver : solver_list) {
            // discretization reference: the same solver at 10x the largest count
            AnalyticEditConfig fine_cfg;
            fine_cfg.lambda = lam;
            fine_cfg.t_max = t_max;
            fine_cfg.num_steps = 10 * max_steps;
            fine_cfg.solver = solver_from_string(solver);
            fine_cfg.seed = seed;
            const double fine = edit_gaussian_analytic(src, tar, x0, fine_cfg).at(0, 0, 0, 0);
            for (int steps : steps_list) {
                AnalyticEditConfig cfg;
                cfg.lambda = lam;
                cfg.t_max = t_max;
                cfg.num_steps = steps;
                cfg.solver = solver_from_string(solver);
                cfg.seed = seed;
                const double x = edit_gaussian_analytic(src, tar, x0, cfg).at(0, 0, 0, 0);
                std::snprintf(buf, sizeof(buf), "%s,%.9g,%d,%.12g,%.6g,%.6g\n", solver.c_str(),
                              lam, steps, x, std::abs(x - ot_value), std::abs(x - fine));
                csv << buf;
            }
        }
    }
    csv.close();

    RunManifest m("ot-bench");
    m.config("t_max", t_max);
    m.config("sigma2", sigma2);
    m.config("mu_src", mu_src);
    m.config("mu_tar", mu_tar);
    m.config("x_src", x_src);
    m.config("seed", seed);
    m.output("table", out);
    m.timing("bench", timer.seconds());
    m.write(out + ".manifest.json");
    std::cout << "ot-bench table -> " << out << "\n";
}

void cmd_cache_bench(EditArgs& a, const std::string& data_dir, const std::string& out_dir,
                     const std::vector<std::string>& deltas, int max_clips) {
    PhaseTimer timer;
    ToyModel<float> model = load_model(a.ckpt);
    std::vector<ClipSample> clips = load_suite(data_dir);
    if (max_clips > 0 && int(clips.size()) > max_clips) clips.resize(max_clips);
    if (clips.empty()) throw DomainError("cache-bench: the suite at " + data_dir + " is empty");

    // uncached reference outputs per clip
    std::vector<FrameSequence> baseline;
    std::int64_t base_src = 0;
    EditConfig base_cfg = a.config();
    base_cfg.cache = CacheSetting::off();
    for (std::size_t i = 0; i < clips.size(); ++i) {
        EditConfig cfg = base_cfg;
        cfg.seed = splitmix64(base_cfg.seed + 0x9e37 * (i + 1));
        auto r = edit(model, clips[i].clip, clips[i].edited_first, clips[i].token,
                      clips[i].edit_token, cfg);
        base_src += r.trace.total_src_evals;
        baseline.push_back(std::move(r.video));
    }

    fs::create_directories(out_dir);
    std::ofstream csv(fs::path(out_dir) / "cache.csv");
    std::ofstream tcsv(fs::path(out_dir) / "cache_timing.csv");
    if (!csv || !tcsv) throw IoError("cannot open cache-bench outputs in " + out_dir);
    csv << "delta,steps,src_evals,tar_evals,hit_rate,reduction_pct,mse_vs_uncached\n";
    tcsv << "delta,time_seconds\n";
    char buf[256];
    for (const std::string& ds : deltas) {
        PhaseTimer row_timer;
        const CacheSetting setting = CacheSetting::parse(ds);
        std::int64_t src = 0, tar = 0, steps = 0;
        double mse_sum = 0.0;
        for (std::size_t i = 0; i < clips.size(); ++i) {
            EditConfig cfg = a.config();
            cfg.cache = setting;
            cfg.seed = splitmix64(cfg.seed + 0x9e37 * (i + 1));
            auto r = edit(model, clips[i].clip, clips[i].edited_first, clips[i].token,
                          clips[i].edit_token, cfg);
            src += r.trace.total_src_evals;
            tar += r.trace.total_tar_evals;
            steps += std::int64_t(r.trace.steps.size());
            mse_sum += mse(r.video.frames, baseline[i].frames);
        }
        const auto rep = make_cache_report(int(steps), int(src));
        std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%lld,%.6g,%.6g,%.9g\n", setting.str().c_str(),
                      static_cast<long long>(steps), static_cast<long long>(src),
                      static_cast<long long>(tar), rep.hit_rate, rep.reduction_pct,
                      mse_sum / double(clips.size()));
        csv << buf;
        std::snprintf(buf, sizeof(buf), "%s,%.6f\n", setting.str().c_str(), row_timer.seconds());
        tcsv << buf;
        std::cout << "delta=" << setting.str() << " src_evals=" << src
                  << " reduction=" << rep.reduction_pct << "% mse=" << mse_sum / double(clips.size())
                  << "\n";
    }
    csv.close();
    tcsv.close();

    RunManifest m("cache-bench");
    a.to_manifest(m);
    m.config("clips", int(clips.size()));
    m.input("checkpoint", a.ckpt);
    m.input("dataset_csv", fs::path(data_dir) / "dataset.csv");
    m.output("cache_csv", fs::path(out_dir) / "cache.csv");
    m.note("timing_artifacts", (fs::path(out_dir) / "cache_timing.csv").string());
    m.timing("bench", timer.seconds());
    m.write(fs::path(out_dir) / "manifest.json");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"flowrect: inversion-free flow-matching video editing"};
    app.require_subcommand(1);
    app.fallthrough(true);  // lets --config appear after the subcommand name
    app.set_config("--config", "", "config file: key = value lines, [subcommand] sections");

    // gen-data
    DatasetArgs gen_data_args;
    std::string gen_out;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic editing suite");
    gen_data_args.add_options(gen);
    gen->add_option("--out", gen_out, "output directory")->required();

    // train
    DatasetArgs train_data_args;
    std::string train_data_dir, train_out, train_loss_csv;
    int train_hidden = 32, train_time_features = 8;
    TrainConfig train_cfg;
    auto* tr = app.add_subcommand("train", "train the toy conditional flow model");
    {
        auto data_opts = train_data_args.add_options(tr);
        auto* dir_opt = tr->add_option("--data-dir", train_data_dir,
                                       "reuse the dataset spec of a gen-data directory");
        for (auto* o : data_opts) dir_opt->excludes(o);
        tr->add_option("--hidden", train_hidden, "hidden channels");
        tr->add_option("--time-features", train_time_features, "sinusoidal feature count");
        tr->add_option("--lr", train_cfg.learning_rate, "learning rate");
        tr->add_option("--batch", train_cfg.batch_size, "batch size");
        tr->add_option("--steps", train_cfg.steps, "optimizer steps");
        tr->add_option("--dropout", train_cfg.cond_dropout, "condition dropout probability");
        tr->add_option("--seed", train_cfg.seed, "training seed");
        tr->add_option("--ckpt-interval", train_cfg.checkpoint_interval,
                       "intermediate checkpoint interval (0 = final only)");
        tr->add_option("--out", train_out, "checkpoint path")->required();
        tr->add_option("--loss-csv", train_loss_csv, "loss curve path (default: beside --out)");
    }

    // edit
    EditArgs edit_args;
    auto* ed = app.add_subcommand("edit", "edit a video from an edited first frame");
    ed->add_option("--ckpt", edit_args.ckpt, "model checkpoint")->required();
    ed->add_option("--src", edit_args.src, "source video tensor")->required();
    ed->add_option("--edit-frame", edit_args.edit_frame, "edited first frame tensor")->required();
    ed->add_option("--out", edit_args.out, "output video tensor")->required();
    ed->add_option("--trace", edit_args.trace, "per-step trace CSV");
    ed->add_option("--export-dir", edit_args.export_dir, "PPM preview directory");
    ed->add_option("--flow-viz", edit_args.flow_viz_dir,
                   "dump estimated-flow magnitude PGMs here");
    ed->add_option("--src-token", edit_args.src_token, "source content token");
    ed->add_option("--tar-token", edit_args.tar_token, "target content token");
    edit_args.add_knobs(ed);

    // eval
    std::string eval_video, eval_src, eval_edit, eval_out;
    auto* ev = app.add_subcommand("eval", "consistency metrics for an edited video");
    ev->add_option("--video", eval_video, "edited video tensor")->required();
    ev->add_option("--src", eval_src, "source video tensor")->required();
    ev->add_option("--edit-frame", eval_edit, "edited first frame tensor")->required();
    ev->add_option("--out", eval_out, "metrics CSV")->required();

    // ablate
    EditArgs ablate_args;
    std::string ablate_data, ablate_out;
    int ablate_max_clips = 0;
    auto* ab = app.add_subcommand("ablate", "six-configuration component sweep");
    ab->add_option("--ckpt", ablate_args.ckpt, "model checkpoint")->required();
    ab->add_option("--data", ablate_data, "gen-data directory")->required();
    ab->add_option("--out", ablate_out, "output directory")->required();
    ab->add_option("--max-clips", ablate_max_clips, "limit the suite size (0 = all)");
    ablate_args.add_knobs(ab);

    // ot-bench
    std::string ot_out;
    double ot_t_max = 0.99, ot_sigma2 = 1.0, ot_mu_src = 0.0, ot_mu_tar = 2.0, ot_x_src = 0.7;
    std::uint64_t ot_seed = 0;
    std::vector<int> ot_steps = {25, 50, 100, 200, 400};
    std::vector<double> ot_lambdas = {0.0, 0.5, 1.0};
    std::vector<std::string> ot_solvers = {"euler", "heun"};
    auto* ot = app.add_subcommand("ot-bench", "analytic Gaussian transport convergence table");
    ot->add_option("--out", ot_out, "output CSV")->required();
    ot->add_option("--t-max", ot_t_max, "boundary timestep");
    ot->add_option("--sigma2", ot_sigma2, "shared variance");
    ot->add_option("--mu-src", ot_mu_src, "source mean");
    ot->add_option("--mu-tar", ot_mu_tar, "target mean");
    ot->add_option("--x-src", ot_x_src, "source sample");
    ot->add_option("--seed", ot_seed, "noise seed");
    ot->add_option("--steps-list", ot_steps, "step counts")->delimiter(',');
    ot->add_option("--lambda-list", ot_lambdas, "rectification scales")->delimiter(',');
    ot->add_option("--solver-list", ot_solvers, "solvers")->delimiter(',');

    // cache-bench
    EditArgs cache_args;
    std::string cache_data, cache_out;
    std::vector<std::string> cache_deltas = {"0", "0.1", "0.35", "1", "inf"};
    int cache_max_clips = 0;
    auto* cb = app.add_subcommand("cache-bench", "source-eval counts and drift per cache threshold");
    cb->add_option("--ckpt", cache_args.ckpt, "model checkpoint")->required();
    cb->add_option("--data", cache_data, "gen-data directory")->required();
    cb->add_option("--out", cache_out, "output directory")->required();
    cb->add_option("--deltas", cache_deltas, "thresholds: off|inf|<real> list")->delimiter(',');
    cb->add_option("--max-clips", cache_max_clips, "limit the suite size (0 = all)");
    cache_args.add_knobs(cb);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) cmd_gen_data(gen_data_args, gen_out);
        if (tr->parsed())
            cmd_train(train_data_args, train_data_dir, train_hidden, train_time_features,
                      train_cfg, train_out, train_loss_csv);
        if (ed->parsed()) cmd_edit(edit_args);
        if (ev->parsed()) cmd_eval(eval_video, eval_src, eval_edit, eval_out);
        if (ab->parsed()) cmd_ablate(ablate_args, ablate_data, ablate_out, ablate_max_clips);
        if (ot->parsed())
            cmd_ot_bench(ot_out, ot_t_max, ot_sigma2, ot_mu_src, ot_mu_tar, ot_x_src, ot_seed,
                         ot_steps, ot_lambdas, ot_solvers);
        if (cb->parsed()) cmd_cache_bench(cache_args, cache_data, cache_out, cache_deltas,
                                          cache_max_clips);
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
