#ifndef FLOWRECT_TRAINER_HPP
#define FLOWRECT_TRAINER_HPP

#include <filesystem>
#include <vector>

#include "flowrect/checkpoint.hpp"
#include "flowrect/dataset.hpp"
#include "flowrect/model.hpp"

namespace flowrect {

struct AdamCoeffs {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    double learning_rate = 2e-3;
    int batch_size = 4;
    int steps = 2000;
    double cond_dropout = 0.1;  // probability of training a sample unconditionally
    std::uint64_t seed = 0;
    AdamCoeffs adam;
    int checkpoint_interval = 0;  // 0 = final checkpoint only
    std::filesystem::path checkpoint_path;

    void validate() const {
        if (!(learning_rate >= 0.0)) throw DomainError("train: learning rate must be >= 0");
        if (batch_size < 1) throw DomainError("train: batch size must be >= 1");
        if (steps < 1) throw DomainError("train: steps must be >= 1");
        if (cond_dropout < 0.0 || cond_dropout >= 1.0)
            throw DomainError("train: dropout must be in [0,1)");
    }
};

// Draws a fresh N(0,1) tensor from an ongoing stream.
template <typename S>
Tensor4<S> gaussian_from(Rng& rng, Shape4 shape) {
    Tensor4<S> t(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = static_cast<S>(rng.normal());
    return t;
}

// Builds z_t = (1-t) x0 + t eps and returns the mean squared error between
// the prediction v(z_t, t, c) and the regression target eps - x0. When grads
// is non-null the exact parameter gradients are accumulated into it.
template <typename S>
double flow_matching_loss(const ToyNet<S>& net, const Tensor4<S>& x0, const Tensor4<S>* cond,
                          int token, bool uncond, double t, const Tensor4<S>& eps,
                          ToyNet<S>* grads = nullptr) {
    if (!(t > 0.0) || t > 1.0)
        throw DomainError("flow_matching_loss: t must be in (0,1], got " + std::to_string(t));
    require_same_shape(x0, eps, "flow_matching_loss");

    Tensor4<S> z_t(x0.shape());
    z_t.array() = (S(1) - S(t)) * x0.array() + S(t) * eps.array();

    ToyNetCache<S> cache;
    Tensor4<S> v =
        toy_net_forward<S>(net, z_t, t, cond, token, uncond, grads ? &cache : nullptr);
    Tensor4<S> residual(v.shape());
    residual.array() = v.array() - (eps.array() - x0.array());
    const double loss = residual.array().template cast<double>().square().mean();

    if (grads) {
        Tensor4<S> dv(v.shape());
        dv.array() = S(2) * residual.array() / S(residual.size());
        ToyNet<S> g = toy_net_backward(net, cache, dv);
        auto dst = grads->params();
        auto src = g.params();
        for (std::size_t i = 0; i < dst.size(); ++i)
            for (std::int64_t j = 0; j < dst[i].size; ++j) dst[i].data[j] += src[i].data[j];
    }
    return loss;
}

inline double flow_matching_loss(const ToyNet<float>& net, const FrameSequence& x0,
                                 const Condition& c, double t, const NoiseTensor& eps,
                                 ToyNet<float>* grads = nullptr) {
    if (c.uncond) return flow_matching_loss<float>(net, x0.frames, nullptr, 0, true, t, eps.eps, grads);
    Tensor4f cond = c.as_video();
    return flow_matching_loss<float>(net, x0.frames, &cond, c.content_token, false, t, eps.eps, grads);
}

struct TrainResult {
    ModelCheckpoint checkpoint;
    std::vector<double> loss_curve;  // one entry per optimizer step
};

// Adam loop over synthetic training pairs. Fully determined by
// (seed, config, dataset spec); epsilon is resampled fresh every step.
inline TrainResult train(const ToyNetDescriptor& desc, const SyntheticDatasetSpec& data,
                         const TrainConfig& cfg) {
    cfg.validate();
    data.validate();
    if (desc.channels != data.channels)
        throw ShapeError("train: model channels do not match dataset channels");
    if (desc.classes < data.num_classes)
        throw DomainError("train: model has fewer classes than the dataset");

    ToyNet<float> net(desc);
    net.init(cfg.seed);
    ToyNet<float> grads(desc);

    Rng rng_data(cfg.seed, "train/data");
    Rng rng_t(cfg.seed, "train/t");
    Rng rng_eps(cfg.seed, "train/eps");
    Rng rng_drop(cfg.seed, "train/dropout");

    auto refs = net.params();
    const std::int64_t total = net.num_params();
    std::vector<double> m(total, 0.0), v(total, 0.0);

    std::string note = "adam lr=" + std::to_string(cfg.learning_rate) +
                       " beta1=" + std::to_string(cfg.adam.beta1) +
                       " beta2=" + std::to_string(cfg.adam.beta2) +
                       " eps=" + std::to_string(cfg.adam.eps);

    TrainResult result;
    result.loss_curve.reserve(cfg.steps);

    const Shape4 clip_shape{data.frames, data.channels, data.size, data.size};
    for (int step = 1; step <= cfg.steps; ++step) {
        for (auto& p : grads.params())
            std::fill(p.data, p.data + p.size, 0.0f);

        double loss_sum = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            auto [clip, cond] = sample_training_pair(data, rng_data);
            const double t = 1.0 - rng_t.uniform01();  // uniform on (0,1]
            Tensor4f eps = gaussian_from<float>(rng_eps, clip_shape);
            const bool drop = rng_drop.uniform01() < cfg.cond_dropout;
            if (drop) {
                loss_sum += flow_matching_loss<float>(net, clip.frames, nullptr, 0, true, t, eps,
                                                      &grads);
            } else {
                Tensor4f cv = cond.as_video();
                loss_sum += flow_matching_loss<float>(net, clip.frames, &cv, cond.content_token,
                                                      false, t, eps, &grads);
            }
        }
        const double loss = loss_sum / cfg.batch_size;
        if (!std::isfinite(loss))
            throw NumericError("train: non-finite loss at step " + std::to_string(step));
        result.loss_curve.push_back(loss);

        // Adam with bias correction; gradients averaged over the batch
        const double bc1 = 1.0 - std::pow(cfg.adam.beta1, step);
        const double bc2 = 1.0 - std::pow(cfg.adam.beta2, step);
        auto grefs = grads.params();
        std::int64_t off = 0;
        for (std::size_t i = 0; i < refs.size(); ++i) {
            for (std::int64_t j = 0; j < refs[i].size; ++j, ++off) {
                const double g = double(grefs[i].data[j]) / cfg.batch_size;
                m[off] = cfg.adam.beta1 * m[off] + (1.0 - cfg.adam.beta1) * g;
                v[off] = cfg.adam.beta2 * v[off] + (1.0 - cfg.adam.beta2) * g * g;
                const double update =
                    cfg.learning_rate * (m[off] / bc1) / (std::sqrt(v[off] / bc2) + cfg.adam.eps);
                refs[i].data[j] = float(double(refs[i].data[j]) - update);
            }
        }

        if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_path.empty() &&
            step % cfg.checkpoint_interval == 0 && step != cfg.steps) {
            ModelCheckpoint ck(net);
            ck.train_step = std::uint64_t(step);
            ck.seed = cfg.seed;
            ck.optimizer_note = note;
            save_checkpoint(cfg.checkpoint_path, ck);
        }
    }

    result.checkpoint = ModelCheckpoint(net);
    result.checkpoint.train_step = std::uint64_t(cfg.steps);
    result.checkpoint.seed = cfg.seed;
    result.checkpoint.optimizer_note = note;
    if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, result.checkpoint);
    return result;
}

inline void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "step,loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i + 1, curve[i]);
        out << buf;
    }
}

}  // namespace flowrect

#endif
