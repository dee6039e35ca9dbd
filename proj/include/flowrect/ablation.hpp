#ifndef FLOWRECT_ABLATION_HPP
#define FLOWRECT_ABLATION_HPP

#include "flowrect/dataset.hpp"
#include "flowrect/manifest.hpp"
#include "flowrect/metrics.hpp"
#include "flowrect/sampler.hpp"

namespace flowrect {

struct AblationRow {
    std::string setting;
    MetricsReport metrics;  // averaged over the suite
    std::int64_t src_evals = 0;
    std::int64_t tar_evals = 0;
    double seconds = 0.0;
};

inline const std::vector<std::string>& ablation_row_names() {
    static const std::vector<std::string> names = {"i2v",      "i2v_init",  "no_vfr_sd",
                                                   "no_smpi",  "no_dcache", "full"};
    return names;
}

// The six-configuration component sweep:
//   i2v        plain conditional generation from pure noise
//   i2v_init   generation started from the source/noise boundary mix
//   no_vfr_sd  lambda = 0 (rectification off), initialization kept
//   no_smpi    rectification kept, pure-noise boundary (beta=0, alpha=1, t_max=1)
//   no_dcache  full method, cache disabled
//   full       full method
template <typename Model>
std::vector<AblationRow> run_ablation(const Model& model, const std::vector<ClipSample>& clips,
                                      const EditConfig& base) {
    base.validate();
    if (clips.empty()) throw DomainError("run_ablation: empty clip suite");

    std::vector<AblationRow> rows;
    for (const std::string& name : ablation_row_names()) {
        AblationRow row;
        row.setting = name;
        PhaseTimer timer;
        for (std::size_t ci = 0; ci < clips.size(); ++ci) {
            const ClipSample& clip = clips[ci];
            // per-clip noise stream, shared by every configuration
            const std::uint64_t seed = splitmix64(base.seed + 0x9e37 * (ci + 1));
            EditResult r;
            if (name == "i2v") {
                Condition cond =
                    build_target_condition(clip.edited_first, clip.clip, 0.0, clip.edit_token);
                r = generate(model, clip.clip.shape(), cond, 1.0, base.num_steps, base.guidance,
                             seed, base.solver);
            } else if (name == "i2v_init") {
                Condition cond =
                    build_target_condition(clip.edited_first, clip.clip, 0.0, clip.edit_token);
                r = generate(model, clip.clip.shape(), cond, base.smpi.t_max, base.num_steps,
                             base.guidance, seed, base.solver, &clip.clip);
            } else {
                EditConfig cfg = base;
                cfg.seed = seed;
                if (name == "no_vfr_sd") {
                    // rectification off; a single cached source evaluation keeps
                    // the parallel branch cost negligible without changing output
                    cfg.lambda = 0.0;
                    cfg.cache = CacheSetting::infinite();
                } else if (name == "no_smpi") {
                    cfg.smpi.beta = 0.0;
                    cfg.smpi.alpha = 1.0;
                    cfg.smpi.t_max = 1.0;
                } else if (name == "no_dcache") {
                    cfg.cache = CacheSetting::off();
                }
                r = edit(model, clip.clip, clip.edited_first, clip.token, clip.edit_token, cfg);
            }
            MetricsReport m = evaluate_edit(r.video, clip.clip, clip.edited_first);
            row.metrics.tc += m.tc;
            row.metrics.efc += m.efc;
            row.metrics.ovc += m.ovc;
            row.metrics.mse_vs_reference += m.mse_vs_reference;
            row.src_evals += r.trace.total_src_evals;
            row.tar_evals += r.trace.total_tar_evals;
        }
        const double n = double(clips.size());
        row.metrics.tc /= n;
        row.metrics.efc /= n;
        row.metrics.ovc /= n;
        row.metrics.mse_vs_reference /= n;
        row.metrics.aec = (row.metrics.efc + row.metrics.ovc) / 2.0;
        row.seconds = timer.seconds();
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_ablation_csv(const std::filesystem::path& path,
                               const std::vector<AblationRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "setting,tc,efc,ovc,aec,mse,src_evals,tar_evals\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.9g,%.9g,%.9g,%.9g,%.9g,%lld,%lld\n",
                      r.setting.c_str(), r.metrics.tc, r.metrics.efc, r.metrics.ovc, r.metrics.aec,
                      r.metrics.mse_vs_reference, static_cast<long long>(r.src_evals),
                      static_cast<long long>(r.tar_evals));
        out << buf;
    }
}

// Wall-clock column kept in its own file so the metrics CSV stays
// byte-reproducible across reruns.
inline void write_ablation_timing_csv(const std::filesystem::path& path,
                                      const std::vector<AblationRow>& rows) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "setting,time_seconds\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.6f\n", r.setting.c_str(), r.seconds);
        out << buf;
    }
}

}  // namespace flowrect

#endif
