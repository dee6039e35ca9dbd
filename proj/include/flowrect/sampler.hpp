#ifndef FLOWRECT_SAMPLER_HPP
#define FLOWRECT_SAMPLER_HPP

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>

#include "flowrect/analytic.hpp"
#include "flowrect/dcache.hpp"
#include "flowrect/model.hpp"
#include "flowrect/schedule.hpp"
#include "flowrect/smpi.hpp"

namespace flowrect {

enum class SolverKind { euler, heun };

inline SolverKind solver_from_string(const std::string& s) {
    if (s == "euler") return SolverKind::euler;
    if (s == "heun") return SolverKind::heun;
    throw DomainError("unknown solver '" + s + "'");
}
inline std::string to_string(SolverKind k) { return k == SolverKind::euler ? "euler" : "heun"; }

// Latents above this magnitude abort the run.
constexpr double kDivergenceGuard = 1e4;

struct EditConfig {
    double lambda = 1.0;
    double guidance = 5.0;
    SmpiConfig smpi;
    CacheSetting cache;
    int num_steps = 25;
    std::uint64_t seed = 0;
    SolverKind solver = SolverKind::euler;

    void validate() const {
        if (!std::isfinite(lambda) || lambda < 0.0)
            throw DomainError("edit: lambda must be finite and >= 0");
        if (!std::isfinite(guidance) || guidance < 0.0)
            throw DomainError("edit: guidance must be finite and >= 0");
        if (num_steps < 1) throw DomainError("edit: num_steps must be >= 1");
        smpi.validate();
    }
};

struct StepRecord {
    int step = 0;
    double t = 0.0, dt = 0.0;
    double v_tar_rms = 0.0;  // rms norm of the (guided) target prediction
    double v_src_rms = 0.0;  // rms norm of the fresh or cached source prediction
    bool cache_hit = false;
    double d_cum = 0.0;
    int src_evals = 0, tar_evals = 0;  // model evaluations spent this step
};

struct EditTrace {
    std::vector<StepRecord> steps;
    std::int64_t total_src_evals = 0;
    std::int64_t total_tar_evals = 0;
    double wall_seconds = 0.0;
    std::uint64_t noise_digest = 0;  // identifies the consumed epsilon stream
};

template <typename S>
double rms(const Tensor4<S>& t) {
    return std::sqrt(t.array().template cast<double>().square().mean());
}

inline std::uint64_t tensor_digest(const float* data, std::int64_t n) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::int64_t i = 0; i < n * std::int64_t(sizeof(float)); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

// v = v_tar + lambda (v_gt - v_src)
template <typename S>
Tensor4<S> rectify(const Tensor4<S>& v_tar, const Tensor4<S>& v_gt, const Tensor4<S>& v_src,
                   double lambda) {
    require_same_shape(v_tar, v_gt, "rectify");
    require_same_shape(v_tar, v_src, "rectify");
    Tensor4<S> v(v_tar.shape());
    v.array() = v_tar.array() + S(lambda) * (v_gt.array() - v_src.array());
    return v;
}

template <typename S>
LatentState<S> euler_step(const LatentState<S>& z, const Tensor4<S>& v, double dt) {
    if (!(dt > 0.0)) throw DomainError("euler_step: dt must be > 0");
    if (z.t - dt < -1e-12) throw DomainError("euler_step: stepping below t = 0");
    LatentState<S> out;
    out.z = Tensor4<S>(z.z.shape());
    out.z.array() = z.z.array() - S(dt) * v.array();
    out.t = z.t - dt;
    return out;
}

// Corrector half of a two-phase Heun step; v1 is the slope at t, v2 the
// re-evaluated slope at the predictor point.
template <typename S>
LatentState<S> heun_combine(const LatentState<S>& z, const Tensor4<S>& v1, const Tensor4<S>& v2,
                            double dt) {
    if (!(dt > 0.0)) throw DomainError("heun_combine: dt must be > 0");
    LatentState<S> out;
    out.z = Tensor4<S>(z.z.shape());
    out.z.array() = z.z.array() - S(dt) * S(0.5) * (v1.array() + v2.array());
    out.t = z.t - dt;
    return out;
}

template <typename S>
void check_divergence(const Tensor4<S>& z, int step, double lambda) {
    if (!z.all_finite())
        throw DivergenceError(step, lambda, "non-finite latent");
    const double m = double(z.array().abs().maxCoeff());
    if (m > kDivergenceGuard)
        throw DivergenceError(step, lambda,
                              "latent magnitude " + std::to_string(m) + " exceeds guard");
}

struct EditResult {
    FrameSequence video;
    EditTrace trace;
    std::optional<FlowField> estimated_flow;  // present when noise warping ran
};

inline CacheReport cache_report(const EditTrace& trace) {
    return make_cache_report(int(trace.steps.size()), int(trace.total_src_evals));
}

// The parallel-ODE editing loop. Both branches start from the same boundary;
// the target steps with the rectified vector, the source with the constant
// ground-truth vector. Under Heun only the target prediction is re-evaluated
// at the predictor point; the source deviation is held, which keeps source
// evaluations at one per step and lets the cache decide once per step.
template <typename Model>
EditResult edit(const Model& model, const FrameSequence& x_src, const Tensor4f& x_edit_first,
                int src_token, int tar_token, const EditConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Shape4 shape = x_src.shape();

    Tensor4f eps = gaussian_tensor<float>(shape, stream_seed(cfg.seed, "sampler/eps"));
    EditTrace trace;
    trace.noise_digest = tensor_digest(eps.data(), eps.size());

    std::optional<FlowField> flow;
    if (cfg.smpi.alpha < 1.0 && shape.l > 1) {
        flow = estimate_flow(x_src);
        eps = correlated_noise(eps, *flow, cfg.smpi.alpha, cfg.smpi.recursive_warp);
    }

    LatentState<float> z_tar = init_boundary(x_src.frames, eps, cfg.smpi.t_max);
    LatentState<float> z_src = z_tar;
    const Tensor4f v_gt = ground_truth_vector(x_src.frames, eps);

    const Condition c_tar = build_target_condition(x_edit_first, x_src, cfg.smpi.beta, tar_token);
    const Condition c_src = build_source_condition(x_src, src_token);

    const TimestepSchedule sched = linear_schedule(cfg.smpi.t_max, cfg.num_steps);
    CacheState<float> cache;

    for (int k = 0; k < sched.num_steps(); ++k) {
        const double t = sched.t(k), dt = sched.dt(k), t_next = sched.t(k + 1);
        StepRecord rec;
        rec.step = k;
        rec.t = t;
        rec.dt = dt;

        CfgResult<float> tar = cfg_evaluate(model, z_tar.z, t, c_tar, cfg.guidance);
        rec.tar_evals += tar.evals;

        if (cache.has_cache) accumulate(cache, tar.v, cache.prev_v_tar);
        const bool reuse = decide_reuse(cache, cfg.cache);
        rec.d_cum = cache.d_cum;
        if (reuse) {
            commit_hit(cache);
            rec.cache_hit = true;
        } else {
            Tensor4f v_src = model.evaluate(z_src.z, t, c_src);
            rec.src_evals += 1;
            commit_refresh(cache, t, std::move(v_src));
        }
        rec.v_tar_rms = rms(tar.v);
        rec.v_src_rms = rms(cache.cached_v_src);

        const Tensor4f v1 = rectify(tar.v, v_gt, cache.cached_v_src, cfg.lambda);
        if (cfg.solver == SolverKind::euler || t_next <= 0.0) {
            z_tar = euler_step(z_tar, v1, dt);
        } else {
            // predictor, then corrector with the held deviation term
            LatentState<float> z_pred = euler_step(z_tar, v1, dt);
            CfgResult<float> tar2 = cfg_evaluate(model, z_pred.z, t_next, c_tar, cfg.guidance);
            rec.tar_evals += tar2.evals;
            const Tensor4f v2 = rectify(tar2.v, v_gt, cache.cached_v_src, cfg.lambda);
            z_tar = heun_combine(z_tar, v1, v2, dt);
        }
        z_src = euler_step(z_src, v_gt, dt);
        check_divergence(z_tar.z, k, cfg.lambda);

        cache.prev_v_tar = std::move(tar.v);
        trace.total_src_evals += rec.src_evals;
        trace.total_tar_evals += rec.tar_evals;
        trace.steps.push_back(std::move(rec));
    }

    EditResult out;
    out.video = FrameSequence(std::move(z_tar.z));  // clamps to [-1,1] once, here
    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.trace = std::move(trace);
    out.estimated_flow = std::move(flow);
    return out;
}

// Plain conditional sampling (no source branch, no rectification). With
// boundary_mix set, the start point mixes the given video into the noise at
// t_max; otherwise sampling starts from pure noise.
template <typename Model>
EditResult generate(const Model& model, Shape4 shape, const Condition& cond, double t_max,
                    int num_steps, double guidance, std::uint64_t seed, SolverKind solver,
                    const FrameSequence* boundary_mix = nullptr) {
    const auto t0 = std::chrono::steady_clock::now();
    Tensor4f eps = gaussian_tensor<float>(shape, stream_seed(seed, "sampler/eps"));
    EditTrace trace;
    trace.noise_digest = tensor_digest(eps.data(), eps.size());

    LatentState<float> z;
    if (boundary_mix) {
        z = init_boundary(boundary_mix->frames, eps, t_max);
    } else {
        z.z = std::move(eps);
        z.t = t_max;
    }

    const TimestepSchedule sched = linear_schedule(t_max, num_steps);
    for (int k = 0; k < sched.num_steps(); ++k) {
        const double t = sched.t(k), dt = sched.dt(k), t_next = sched.t(k + 1);
        StepRecord rec;
        rec.step = k;
        rec.t = t;
        rec.dt = dt;
        CfgResult<float> v = cfg_evaluate(model, z.z, t, cond, guidance);
        rec.tar_evals = v.evals;
        rec.v_tar_rms = rms(v.v);
        if (solver == SolverKind::euler || t_next <= 0.0) {
            z = euler_step(z, v.v, dt);
        } else {
            LatentState<float> z_pred = euler_step(z, v.v, dt);
            CfgResult<float> v2 = cfg_evaluate(model, z_pred.z, t_next, cond, guidance);
            rec.tar_evals += v2.evals;
            z = heun_combine(z, v.v, v2.v, dt);
        }
        check_divergence(z.z, k, 0.0);
        trace.total_tar_evals += rec.tar_evals;
        trace.steps.push_back(std::move(rec));
    }

    EditResult out;
    out.video = FrameSequence(std::move(z.z));
    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.trace = std::move(trace);
    return out;
}

struct AnalyticEditConfig {
    double lambda = 1.0;
    double t_max = 1.0;
    int num_steps = 400;
    SolverKind solver = SolverKind::euler;
    std::uint64_t seed = 0;
};

// Parallel-ODE transport between two analytic Gaussians sharing one variance
// (the equal-variance OT setting). No guidance, no caching; under Heun both
// fields are re-evaluated at the predictor point, which keeps the corrector
// second-order. Returns the unclamped endpoint.
template <typename S>
Tensor4<S> edit_gaussian_analytic(const AnalyticGaussianSpec<S>& src_spec,
                                  const AnalyticGaussianSpec<S>& tar_spec,
                                  const Tensor4<S>& x_src, const AnalyticEditConfig& cfg,
                                  const Tensor4<S>* eps_in = nullptr) {
    if (!(src_spec.sigma2 == tar_spec.sigma2))
        throw DomainError("edit_gaussian_analytic: branch variances must match");
    require_same_shape(src_spec.mean, x_src, "edit_gaussian_analytic");
    require_same_shape(tar_spec.mean, x_src, "edit_gaussian_analytic");
    if (cfg.num_steps < 1) throw DomainError("edit_gaussian_analytic: num_steps must be >= 1");

    Tensor4<S> eps = eps_in ? *eps_in
                            : gaussian_tensor<S>(x_src.shape(), stream_seed(cfg.seed, "sampler/eps"));
    LatentState<S> z_tar = init_boundary(x_src, eps, cfg.t_max);
    LatentState<S> z_src = z_tar;
    const Tensor4<S> v_gt = ground_truth_vector(x_src, eps);

    const TimestepSchedule sched = linear_schedule(cfg.t_max, cfg.num_steps);
    for (int k = 0; k < sched.num_steps(); ++k) {
        const double t = sched.t(k), dt = sched.dt(k), t_next = sched.t(k + 1);
        const Tensor4<S> v_tar = analytic_gaussian_field(tar_spec, z_tar.z, t);
        const Tensor4<S> v_src = analytic_gaussian_field(src_spec, z_src.z, t);
        const Tensor4<S> v1 = rectify(v_tar, v_gt, v_src, cfg.lambda);
        if (cfg.solver == SolverKind::euler || t_next <= 0.0) {
            z_tar = euler_step(z_tar, v1, dt);
        } else {
            LatentState<S> z_pred = euler_step(z_tar, v1, dt);
            LatentState<S> z_src_next = euler_step(z_src, v_gt, dt);
            const Tensor4<S> v2 =
                rectify(analytic_gaussian_field(tar_spec, z_pred.z, t_next), v_gt,
                        analytic_gaussian_field(src_spec, z_src_next.z, t_next), cfg.lambda);
            z_tar = heun_combine(z_tar, v1, v2, dt);
        }
        z_src = euler_step(z_src, v_gt, dt);
        check_divergence(z_tar.z, k, cfg.lambda);
    }
    return z_tar.z;
}

// Trace CSV: fixed schema, one row per step, summary appended as comments.
inline void write_trace_csv(const std::filesystem::path& path, const EditTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "step,t,dt,cache_hit,d_cum,src_evals,tar_evals\n";
    char buf[160];
    for (const auto& r : trace.steps) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%d,%.9g,%d,%d\n", r.step, r.t, r.dt,
                      r.cache_hit ? 1 : 0, r.d_cum, r.src_evals, r.tar_evals);
        out << buf;
    }
    const auto report = make_cache_report(int(trace.steps.size()), int(trace.total_src_evals));
    std::snprintf(buf, sizeof(buf), "# total_src_evals=%lld total_tar_evals=%lld\n",
                  static_cast<long long>(trace.total_src_evals),
                  static_cast<long long>(trace.total_tar_evals));
    out << buf;
    std::snprintf(buf, sizeof(buf), "# cache_hit_rate=%.6g src_eval_reduction_pct=%.6g\n",
                  report.hit_rate, report.reduction_pct);
    out << buf;
}

}  // namespace flowrect

#endif
