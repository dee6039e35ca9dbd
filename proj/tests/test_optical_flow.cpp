#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "flowrect/optical_flow.hpp"
#include "flowrect/random.hpp"

using namespace flowrect;

namespace {

// Broadband texture: white noise with two toroidal 3x3 box blurs. The
// autocorrelation peak is unique, unlike periodic patterns, so block
// matching has an unambiguous optimum at every pyramid level.
Tensor4f textured_frame(int n, std::uint64_t seed) {
    Tensor4f f = gaussian_tensor<float>(Shape4{1, 1, n, n}, seed);
    for (int pass = 0; pass < 2; ++pass) {
        Tensor4f g(f.shape());
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                float s = 0.f;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        s += f.at(0, 0, (y + dy + n) % n, (x + dx + n) % n);
                g.at(0, 0, y, x) = s / 9.0f;
            }
        f = g;
    }
    f.array() = f.array().min(1.0f).max(-1.0f);
    return f;
}

FrameSequence rolled_clip(const Tensor4f& base, int frames, int vx, int vy) {
    const auto n = base.shape().h;
    Tensor4f t(Shape4{frames, 1, n, n});
    for (int f = 0; f < frames; ++f)
        for (std::int64_t y = 0; y < n; ++y)
            for (std::int64_t x = 0; x < n; ++x)
                t.at(f, 0, y, x) =
                    base.at(0, 0, ((y - std::int64_t(f) * vy) % n + n) % n,
                            ((x - std::int64_t(f) * vx) % n + n) % n);
    return FrameSequence(std::move(t));
}

std::pair<float, float> interior_median(const FlowField& field, std::int64_t pair, int margin) {
    std::vector<float> xs, ys;
    const auto& s = field.flow.shape();
    for (std::int64_t y = margin; y < s.h - margin; ++y)
        for (std::int64_t x = margin; x < s.w - margin; ++x) {
            xs.push_back(field.flow.at(pair, 0, y, x));
            ys.push_back(field.flow.at(pair, 1, y, x));
        }
    auto med = [](std::vector<float>& v) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        return v[v.size() / 2];
    };
    return {med(xs), med(ys)};
}

}  // namespace

TEST_CASE("warp_bilinear: zero flow is the bit-exact identity") {
    auto frame = gaussian_tensor<float>(Shape4{1, 3, 9, 7}, 5);
    auto flow = Tensor4f::zeros(Shape4{1, 2, 9, 7});
    CHECK(bit_equal(warp_bilinear(frame, flow), frame));
}

TEST_CASE("warp_bilinear: integer flow shifts a ramp exactly") {
    const int n = 8;
    Tensor4f ramp(Shape4{1, 1, n, n});
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) ramp.at(0, 0, y, x) = float(x);
    Tensor4f flow = Tensor4f::zeros(Shape4{1, 2, n, n});
    flow.plane(0, 0).setConstant(1.0f);  // horizontal displacement 1
    auto out = warp_bilinear(ramp, flow);
    for (int y = 0; y < n; ++y)
        for (int x = 1; x < n; ++x) CHECK(out.at(0, 0, y, x) == float(x - 1));
    // edge clamp on the first column
    for (int y = 0; y < n; ++y) CHECK(out.at(0, 0, y, 0) == 0.0f);
}

TEST_CASE("warp_bilinear: half-pixel flow averages the two neighbors") {
    const int n = 8;
    Tensor4f row = Tensor4f::zeros(Shape4{1, 1, 1, n});
    row.at(0, 0, 0, 1) = 1.0f;
    Tensor4f flow = Tensor4f::zeros(Shape4{1, 2, 1, n});
    flow.plane(0, 0).setConstant(0.5f);
    auto out = warp_bilinear(row, flow);
    CHECK(out.at(0, 0, 0, 1) == doctest::Approx(0.5f));  // sample at 0.5
    CHECK(out.at(0, 0, 0, 2) == doctest::Approx(0.5f));  // sample at 1.5
    CHECK(out.at(0, 0, 0, 3) == doctest::Approx(0.0f));
}

TEST_CASE("warp_noise: zero flow is the identity permutation") {
    auto noise = gaussian_tensor<float>(Shape4{1, 2, 6, 6}, 9);
    auto flow = Tensor4f::zeros(Shape4{1, 2, 6, 6});
    CHECK(bit_equal(warp_noise(noise, flow), noise));
}

TEST_CASE("warp_noise: rounding is half-away-from-zero and copies single pixels") {
    const int n = 6;
    Tensor4f noise(Shape4{1, 1, 1, n});
    for (int x = 0; x < n; ++x) noise.at(0, 0, 0, x) = float(x);
    Tensor4f flow = Tensor4f::zeros(Shape4{1, 2, 1, n});
    flow.plane(0, 0).setConstant(1.5f);  // rounds to 2, away from zero
    auto out = warp_noise(noise, flow);
    CHECK(out.at(0, 0, 0, 4) == 2.0f);
    flow.plane(0, 0).setConstant(-1.5f);  // rounds to -2
    out = warp_noise(noise, flow);
    CHECK(out.at(0, 0, 0, 2) == 4.0f);
}

TEST_CASE("warp_noise keeps the empirical variance at one for random flows") {
    const Shape4 s{1, 1, 1024, 1024};
    auto noise = gaussian_tensor<float>(s, 31);
    Tensor4f flow(Shape4{1, 2, 1024, 1024});
    Rng rng(32, "test/flow");
    for (std::int64_t i = 0; i < flow.size(); ++i)
        flow.data()[i] = float(rng.uniform_int(-5, 5)) + float(rng.uniform(-0.49, 0.49));
    auto out = warp_noise(noise, flow);
    const double mean = out.array().cast<double>().mean();
    const double var = (out.array().cast<double>() - mean).square().mean();
    CHECK(var > 0.99);
    CHECK(var < 1.01);
}

TEST_CASE("estimate_flow recovers integer translation exactly on the interior") {
    auto base = textured_frame(32, 7);
    auto clip = rolled_clip(base, 3, 2, 3);
    auto field = estimate_flow(clip);
    for (std::int64_t p = 0; p < 2; ++p) {
        auto [mx, my] = interior_median(field, p, 8);
        CHECK(mx == 2.0f);
        CHECK(my == 3.0f);
    }
}

TEST_CASE("estimate_flow: static clip gives exactly zero flow") {
    auto base = textured_frame(24, 11);
    auto clip = rolled_clip(base, 3, 0, 0);
    auto field = estimate_flow(clip);
    CHECK(field.flow.array().abs().maxCoeff() == 0.0f);
}

TEST_CASE("estimate_flow: textureless frames resolve to zero by tie-break") {
    Tensor4f flat = Tensor4f::constant(Shape4{2, 1, 16, 16}, 0.25f);
    auto field = estimate_flow(FrameSequence(std::move(flat)));
    CHECK(field.flow.array().abs().maxCoeff() == 0.0f);
}

TEST_CASE("estimate_flow is equivariant to integer shifts of both frames") {
    const int n = 48;
    auto base = textured_frame(n, 13);
    auto clip = rolled_clip(base, 2, 1, -2);
    auto field = estimate_flow(clip);

    // shift both frames by (3,2) toroidally; flow must not change where both
    // the shifted pixel and its original land in fully interior blocks
    Tensor4f shifted(Shape4{2, 1, n, n});
    for (int f = 0; f < 2; ++f)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                shifted.at(f, 0, y, x) = clip.frames.at(f, 0, (y - 2 + n) % n, (x - 3 + n) % n);
    auto field2 = estimate_flow(FrameSequence(std::move(shifted)));

    int mismatches = 0;
    for (int y = 16; y < 32; ++y)
        for (int x = 16; x < 32; ++x) {
            if (field.flow.at(0, 0, y - 2, x - 3) != field2.flow.at(0, 0, y, x)) mismatches++;
            if (field.flow.at(0, 1, y - 2, x - 3) != field2.flow.at(0, 1, y, x)) mismatches++;
        }
    CHECK(mismatches == 0);
}

TEST_CASE("estimate_flow requires at least two frames") {
    Tensor4f one = Tensor4f::zeros(Shape4{1, 1, 16, 16});
    CHECK_THROWS_AS(estimate_flow(FrameSequence(std::move(one))), DomainError);
}

TEST_CASE("flow magnitude export writes one PGM per pair") {
    FlowField f = FlowField::zero(2, 8, 8);
    f.flow.plane(0, 0).setConstant(3.0f);
    auto dir = std::filesystem::temp_directory_path() / "flowrect_flowviz";
    std::filesystem::remove_all(dir);
    export_flow_magnitude(f, dir);
    std::ifstream in(dir / "flowmag_000.pgm", std::ios::binary);
    REQUIRE(in.good());
    std::string content((std::istreambuf_iterator<char>(in)), {});
    CHECK(content.substr(0, 2) == "P5");
    CHECK(static_cast<unsigned char>(content.back()) == 255);  // uniform peak
    std::ifstream in2(dir / "flowmag_001.pgm", std::ios::binary);
    std::string c2((std::istreambuf_iterator<char>(in2)), {});
    CHECK(static_cast<unsigned char>(c2.back()) == 0);  // zero flow
}

TEST_CASE("flow field validation") {
    FlowField f = FlowField::zero(1, 8, 8);
    f.validate(8, 8);
    f.flow.at(0, 0, 0, 0) = 100.0f;
    CHECK_THROWS_AS(f.validate(8, 8), DomainError);
    f.flow.at(0, 0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(f.validate(8, 8), NumericError);
}
