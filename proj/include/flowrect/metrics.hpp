#ifndef FLOWRECT_METRICS_HPP
#define FLOWRECT_METRICS_HPP

#include <Eigen/Dense>

#include "flowrect/tensor.hpp"

namespace flowrect {

// Deterministic frame embedding: 4x4 average-pooled pixels and 8-bin
// per-channel histograms, each sub-vector centered by its own mean.
struct FrameEmbedding {
    Eigen::VectorXd pooled;     // 16 * C entries
    Eigen::VectorXd histogram;  // 8 * C entries

    Eigen::VectorXd full() const {
        Eigen::VectorXd v(pooled.size() + histogram.size());
        v << pooled, histogram;
        return v;
    }
};

inline FrameEmbedding frame_embed(const Tensor4f& frames, std::int64_t l) {
    const auto& s = frames.shape();
    FrameEmbedding e;
    e.pooled.resize(16 * s.c);
    e.histogram.resize(8 * s.c);

    for (std::int64_t c = 0; c < s.c; ++c) {
        for (int ry = 0; ry < 4; ++ry) {
            for (int rx = 0; rx < 4; ++rx) {
                const std::int64_t y0 = s.h * ry / 4, y1 = std::max(s.h * (ry + 1) / 4, y0 + 1);
                const std::int64_t x0 = s.w * rx / 4, x1 = std::max(s.w * (rx + 1) / 4, x0 + 1);
                double sum = 0.0;
                for (std::int64_t y = y0; y < std::min(y1, s.h); ++y)
                    for (std::int64_t x = x0; x < std::min(x1, s.w); ++x)
                        sum += frames.at(l, c, y, x);
                const auto count = double(std::max<std::int64_t>(
                    (std::min(y1, s.h) - y0) * (std::min(x1, s.w) - x0), 1));
                e.pooled[c * 16 + ry * 4 + rx] = sum / count;
            }
        }
        Eigen::VectorXd hist = Eigen::VectorXd::Zero(8);
        for (std::int64_t y = 0; y < s.h; ++y)
            for (std::int64_t x = 0; x < s.w; ++x) {
                const double v = frames.at(l, c, y, x);
                const int bin = std::clamp(int((v + 1.0) / 2.0 * 8.0), 0, 7);
                hist[bin] += 1.0;
            }
        e.histogram.segment(c * 8, 8) = hist / double(s.h * s.w);
    }
    e.pooled.array() -= e.pooled.mean();
    e.histogram.array() -= e.histogram.mean();
    return e;
}

// Cosine similarity with a bit-equality fast path, so self-comparisons are
// exactly 1 and zero embeddings compare as orthogonal.
inline double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0)
        return 1.0;
    const double na = a.norm(), nb = b.norm();
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

// Mean cosine similarity of consecutive frame embeddings.
inline double temporal_consistency(const FrameSequence& video) {
    const auto& s = video.shape();
    if (s.l < 2) throw DomainError("temporal_consistency: need at least 2 frames");
    double sum = 0.0;
    FrameEmbedding prev = frame_embed(video.frames, 0);
    for (std::int64_t l = 1; l < s.l; ++l) {
        FrameEmbedding cur = frame_embed(video.frames, l);
        sum += cosine(prev.full(), cur.full());
        prev = std::move(cur);
    }
    return sum / double(s.l - 1);
}

// Mean similarity of every generated frame to the edited first frame.
inline double edited_frame_consistency(const FrameSequence& video, const Tensor4f& x_edit_first) {
    const auto& s = video.shape();
    if (x_edit_first.shape().l != 1 || x_edit_first.shape().c != s.c ||
        x_edit_first.shape().h != s.h || x_edit_first.shape().w != s.w)
        throw ShapeError("edited_frame_consistency: frame shape mismatch");
    const Eigen::VectorXd ref = frame_embed(x_edit_first, 0).full();
    double sum = 0.0;
    for (std::int64_t l = 0; l < s.l; ++l) sum += cosine(frame_embed(video.frames, l).full(), ref);
    return sum / double(s.l);
}

// Mean per-frame similarity to the matching source frame.
inline double original_video_consistency(const FrameSequence& video, const FrameSequence& x_src) {
    if (!(video.shape() == x_src.shape()))
        throw ShapeError("original_video_consistency: video shapes differ");
    double sum = 0.0;
    for (std::int64_t l = 0; l < video.shape().l; ++l)
        sum += cosine(frame_embed(video.frames, l).full(), frame_embed(x_src.frames, l).full());
    return sum / double(video.shape().l);
}

struct MetricsReport {
    double tc = 0.0;
    double efc = 0.0;
    double ovc = 0.0;
    double aec = 0.0;  // always (efc + ovc) / 2
    double mse_vs_reference = 0.0;
};

inline MetricsReport evaluate_edit(const FrameSequence& video, const FrameSequence& x_src,
                                   const Tensor4f& x_edit_first) {
    MetricsReport r;
    r.tc = video.shape().l >= 2 ? temporal_consistency(video) : 1.0;
    r.efc = edited_frame_consistency(video, x_edit_first);
    r.ovc = original_video_consistency(video, x_src);
    r.aec = (r.efc + r.ovc) / 2.0;
    r.mse_vs_reference = mse(video.frames, x_src.frames);
    return r;
}

}  // namespace flowrect

#endif
