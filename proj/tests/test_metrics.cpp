#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowrect/metrics.hpp"
#include "flowrect/random.hpp"

using namespace flowrect;

namespace {
FrameSequence clamped_noise(Shape4 s, std::uint64_t seed) {
    auto t = gaussian_tensor<float>(s, seed);
    t.array() = t.array().min(1.0f).max(-1.0f);
    return FrameSequence(std::move(t));
}
}  // namespace

TEST_CASE("embedding determinism") {
    auto v = clamped_noise(Shape4{2, 3, 16, 16}, 3);
    auto a = frame_embed(v.frames, 0);
    auto b = frame_embed(v.frames, 0);
    CHECK(a.pooled == b.pooled);
    CHECK(a.histogram == b.histogram);
}

TEST_CASE("negated frame flips the pooled sub-vector") {
    auto v = clamped_noise(Shape4{1, 3, 16, 16}, 7);
    Tensor4f neg(v.shape());
    neg.array() = -v.frames.array();
    auto a = frame_embed(v.frames, 0);
    auto b = frame_embed(neg, 0);
    // centering commutes with the sign flip, so the pooled parts are opposite
    CHECK(cosine(a.pooled, b.pooled) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("constant frame pools to zero after centering") {
    Tensor4f flat = Tensor4f::constant(Shape4{1, 3, 16, 16}, 0.37f);
    auto e = frame_embed(flat, 0);
    CHECK(e.pooled.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(e.histogram.cwiseAbs().maxCoeff() > 0.0);  // one bin holds all mass
}

TEST_CASE("still video has temporal consistency exactly 1") {
    auto frame = clamped_noise(Shape4{1, 3, 16, 16}, 11);
    Tensor4f video(Shape4{5, 3, 16, 16});
    for (int l = 0; l < 5; ++l)
        for (int c = 0; c < 3; ++c) video.plane(l, c) = frame.frames.plane(0, c);
    CHECK(temporal_consistency(FrameSequence(std::move(video))) == 1.0);
}

TEST_CASE("iid noise video has near-zero temporal consistency") {
    // The pooled sub-vectors of independent frames are orthogonal on average;
    // the 8-bin histograms of Gaussian frames share a bell shape and add a
    // small positive bias, so the bound here is looser than pure orthogonality.
    for (std::uint64_t seed : {1, 2, 3}) {
        auto v = clamped_noise(Shape4{33, 3, 16, 16}, seed);
        CHECK(std::abs(temporal_consistency(v)) < 0.12);
    }
}

TEST_CASE("efc and ovc trivial references give exactly 1") {
    auto edit = clamped_noise(Shape4{1, 3, 16, 16}, 13);
    Tensor4f rep(Shape4{4, 3, 16, 16});
    for (int l = 0; l < 4; ++l)
        for (int c = 0; c < 3; ++c) rep.plane(l, c) = edit.frames.plane(0, c);
    FrameSequence repeated(std::move(rep));
    CHECK(edited_frame_consistency(repeated, edit.frames) == 1.0);

    auto src = clamped_noise(Shape4{4, 3, 16, 16}, 17);
    CHECK(original_video_consistency(src, src) == 1.0);
}

TEST_CASE("aec is the exact mean of efc and ovc") {
    auto src = clamped_noise(Shape4{4, 3, 16, 16}, 19);
    auto video = clamped_noise(Shape4{4, 3, 16, 16}, 23);
    auto edit = clamped_noise(Shape4{1, 3, 16, 16}, 29);
    auto r = evaluate_edit(video, src, edit.frames);
    CHECK(r.aec == (r.efc + r.ovc) / 2.0);
    CHECK(r.tc >= -1.0);
    CHECK(r.tc <= 1.0);
    CHECK(r.efc >= -1.0);
    CHECK(r.efc <= 1.0);
    CHECK(r.ovc >= -1.0);
    CHECK(r.ovc <= 1.0);
    CHECK(r.mse_vs_reference >= 0.0);
}

TEST_CASE("metric errors") {
    auto one = clamped_noise(Shape4{1, 3, 16, 16}, 31);
    CHECK_THROWS_AS(temporal_consistency(one), DomainError);
    auto four = clamped_noise(Shape4{4, 3, 16, 16}, 37);
    auto other = clamped_noise(Shape4{5, 3, 16, 16}, 41);
    CHECK_THROWS_AS(original_video_consistency(four, other), ShapeError);
    CHECK_THROWS_AS(edited_frame_consistency(four, clamped_noise(Shape4{1, 3, 8, 8}, 43).frames),
                    ShapeError);
}
