#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "flowrect/sampler.hpp"

using namespace flowrect;

namespace {

const Shape4 kScalar{1, 1, 1, 1};

Tensor4d scalar_d(double v) { return Tensor4d::constant(kScalar, v); }

// toy model with nontrivial random output head
ToyModel<float> random_model(std::uint64_t seed, int channels = 1, int classes = 4) {
    ToyNet<float> net(ToyNetDescriptor{
        .channels = channels, .hidden = 8, .classes = classes, .time_features = 4});
    net.init(seed);
    Rng rng(seed, "test/outhead");
    for (std::int64_t i = 0; i < net.conv_out.wt.size(); ++i)
        net.conv_out.wt.data()[i] = float(rng.normal() * 0.15);
    return ToyModel<float>(std::move(net));
}

FrameSequence random_video(Shape4 s, std::uint64_t seed) {
    auto t = gaussian_tensor<float>(s, seed);
    t.array() = t.array().min(1.0f).max(-1.0f);
    return FrameSequence(std::move(t));
}

double ot_endpoint(double lambda, int steps, SolverKind solver, double t_max, double eps,
                   double mu_src = 0.0, double mu_tar = 2.0, double x_src = 0.7) {
    auto src = AnalyticGaussianSpec<double>::broadcast(kScalar, mu_src, 1.0);
    auto tar = AnalyticGaussianSpec<double>::broadcast(kScalar, mu_tar, 1.0);
    AnalyticEditConfig cfg;
    cfg.lambda = lambda;
    cfg.num_steps = steps;
    cfg.solver = solver;
    cfg.t_max = t_max;
    auto e = scalar_d(eps);
    return edit_gaussian_analytic(src, tar, scalar_d(x_src), cfg, &e).at(0, 0, 0, 0);
}

}  // namespace

TEST_CASE("rectify formula and degenerate cases") {
    Tensor4f v_tar(Shape4{1, 1, 1, 2}), v_gt(Shape4{1, 1, 1, 2}), v_src(Shape4{1, 1, 1, 2});
    v_tar.array() << 1.0f, 2.0f;
    v_gt.array() << 0.5f, 0.0f;
    v_src.array() << 0.0f, 1.0f;

    auto r = rectify(v_tar, v_gt, v_src, 0.5);
    CHECK(r.at(0, 0, 0, 0) == doctest::Approx(1.25f));
    CHECK(r.at(0, 0, 0, 1) == doctest::Approx(1.5f));

    CHECK(bit_equal(rectify(v_tar, v_gt, v_src, 0.0), v_tar));
    for (double lam : {0.3, 1.0, 7.0}) {
        auto same = rectify(v_tar, v_gt, v_gt, lam);
        CHECK(max_abs_diff(same, v_tar) == 0.0f);
    }
    CHECK_THROWS_AS(rectify(v_tar, v_gt, Tensor4f::zeros(Shape4{1, 1, 2, 2}), 1.0), ShapeError);
}

TEST_CASE("euler step: fixed point and telescoped constant field") {
    LatentState<float> z{Tensor4f::constant(Shape4{1, 1, 2, 2}, 0.3f), 0.95};
    auto zero = Tensor4f::zeros(Shape4{1, 1, 2, 2});
    auto z2 = euler_step(z, zero, 0.038);
    CHECK(bit_equal(z2.z, z.z));
    CHECK(z2.t == doctest::Approx(0.912));
    CHECK_THROWS_AS(euler_step(z, zero, 0.0), DomainError);
    CHECK_THROWS_AS(euler_step(z, zero, 2.0), DomainError);

    // Euler on the constant ground-truth field retraces the interpolation path
    const Shape4 s{2, 1, 4, 4};
    auto x = random_video(s, 3).frames;
    auto eps = gaussian_tensor<float>(s, 4);
    auto v_gt = ground_truth_vector(x, eps);
    for (double t_max : {0.95, 1.0}) {
        auto sched = linear_schedule(t_max, 25);
        LatentState<float> st = init_boundary(x, eps, t_max);
        for (int k = 0; k < sched.num_steps(); ++k) {
            st = euler_step(st, v_gt, sched.dt(k));
            Tensor4f expect(s);
            expect.array() = float(1.0 - sched.t(k + 1)) * x.array() +
                             float(sched.t(k + 1)) * eps.array();
            CHECK(max_abs_diff(st.z, expect) < 1e-5f);
        }
        CHECK(max_abs_diff(st.z, x) < 1e-5f);
    }
}

TEST_CASE("delta field: both solvers land on the data point at any step count") {
    auto a = scalar_d(0.42);
    for (int steps : {5, 40}) {
        for (SolverKind kind : {SolverKind::euler, SolverKind::heun}) {
            auto sched = linear_schedule(1.0, steps);
            LatentState<double> z{scalar_d(-1.3), 1.0};
            for (int k = 0; k < sched.num_steps(); ++k) {
                const double t = sched.t(k), dt = sched.dt(k), tn = sched.t(k + 1);
                auto v1 = analytic_delta_field(a, z.z, t);
                if (kind == SolverKind::euler || tn <= 0.0) {
                    z = euler_step(z, v1, dt);
                } else {
                    auto zp = euler_step(z, v1, dt);
                    z = heun_combine(z, v1, analytic_delta_field(a, zp.z, tn), dt);
                }
            }
            CHECK(std::abs(z.z.at(0, 0, 0, 0) - 0.42) < 1e-12);
        }
    }
}

TEST_CASE("heun converges at second order on the curved analytic field") {
    // single-branch sampling from t=1; exact endpoint is mu + eps for sigma=1
    auto spec = AnalyticGaussianSpec<double>::broadcast(kScalar, 0.8, 1.0);
    const double eps = -0.37, exact = 0.8 + eps;
    auto run = [&](SolverKind kind, int steps) {
        auto sched = linear_schedule(1.0, steps);
        LatentState<double> z{scalar_d(eps), 1.0};
        for (int k = 0; k < sched.num_steps(); ++k) {
            const double t = sched.t(k), dt = sched.dt(k), tn = sched.t(k + 1);
            auto v1 = analytic_gaussian_field(spec, z.z, t);
            if (kind == SolverKind::euler || tn <= 0.0) {
                z = euler_step(z, v1, dt);
            } else {
                auto zp = euler_step(z, v1, dt);
                z = heun_combine(z, v1, analytic_gaussian_field(spec, zp.z, tn), dt);
            }
        }
        return std::abs(z.z.at(0, 0, 0, 0) - exact);
    };
    const double h_e1 = run(SolverKind::euler, 50), h_e2 = run(SolverKind::euler, 100);
    const double h_h1 = run(SolverKind::heun, 50), h_h2 = run(SolverKind::heun, 100);
    CHECK(h_e1 / h_e2 > 1.7);  // first order: halving dt roughly halves the error
    CHECK(h_e1 / h_e2 < 2.6);
    CHECK(h_h1 / h_h2 >= 3.5);  // second order
    CHECK(h_h2 < h_e2);
}

TEST_CASE("OT transport: discrete exactness at t_max = 1") {
    // Composition of per-transition OT maps is exact for equal-variance
    // Gaussians started at t=1, at every step count.
    for (int steps : {25, 100, 400}) {
        for (double eps : {0.3, -1.7, 2.2}) {
            CHECK(std::abs(ot_endpoint(1.0, steps, SolverKind::euler, 1.0, eps) - 2.7) < 1e-9);
        }
    }
}

TEST_CASE("OT transport: discretization error decays against a finer oracle") {
    const double eps = 0.3, t_max = 0.99;
    const double fine = ot_endpoint(1.0, 8000, SolverKind::euler, t_max, eps);
    // doubling the step count shrinks the error monotonically
    double prev = std::numeric_limits<double>::infinity();
    for (int steps : {25, 50, 100, 200, 400}) {
        const double err = std::abs(ot_endpoint(1.0, steps, SolverKind::euler, t_max, eps) - fine);
        CHECK(err < prev);
        prev = err;
    }
    const double e100 = std::abs(ot_endpoint(1.0, 100, SolverKind::euler, t_max, eps) - fine);
    const double h100 = std::abs(ot_endpoint(1.0, 100, SolverKind::heun, t_max, eps) - fine);
    CHECK(h100 < e100);
    CHECK(std::abs(ot_endpoint(1.0, 400, SolverKind::euler, t_max, eps) - 2.7) < 0.05);
}

TEST_CASE("edit config defaults") {
    EditConfig cfg;
    CHECK(cfg.lambda == 1.0);
    CHECK(cfg.guidance == 5.0);
    CHECK(cfg.smpi.t_max == 0.95);
    CHECK(cfg.smpi.beta == 0.025);
    CHECK(cfg.smpi.alpha == 0.95);
    CHECK(cfg.num_steps == 25);
    CHECK(cfg.solver == SolverKind::euler);
    CHECK(cfg.cache.enabled);
}

TEST_CASE("vector field eval validation") {
    VectorFieldEval<float> e{Tensor4f::constant(Shape4{1, 1, 2, 2}, 0.5f), 0.5, Branch::target};
    e.validate();
    e.v.at(0, 0, 0, 0) = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(e.validate(), NumericError);
}

TEST_CASE("cache report from a trace") {
    const Shape4 s{2, 1, 8, 8};
    auto model = random_model(65);
    auto x_src = random_video(s, 66);
    EditConfig cfg;
    cfg.num_steps = 10;
    cfg.guidance = 1.0;
    cfg.cache = CacheSetting::infinite();
    auto r = edit(model, x_src, x_src.frames.frame(0), 0, 1, cfg);
    auto rep = cache_report(r.trace);
    CHECK(rep.steps == 10);
    CHECK(rep.src_evals == 1);
    CHECK(rep.reduction_pct == doctest::Approx(90.0));
}

TEST_CASE("OT transport: lambda=0 misses by a mean-shift-scale constant") {
    for (int steps : {25, 100, 400}) {
        const double err = std::abs(ot_endpoint(0.0, steps, SolverKind::euler, 1.0, 0.3) - 2.7);
        CHECK(err > 0.2);
        CHECK(err < 1.0);
    }
}

TEST_CASE("OT transport: equal means is the identity map") {
    for (double eps : {0.3, -1.1}) {
        const double out = ot_endpoint(1.0, 100, SolverKind::euler, 1.0, eps, 0.7, 0.7);
        CHECK(std::abs(out - 0.7) < 1e-9);
    }
}

TEST_CASE("edit_gaussian_analytic rejects mismatched variances") {
    auto src = AnalyticGaussianSpec<double>::broadcast(kScalar, 0.0, 1.0);
    auto tar = AnalyticGaussianSpec<double>::broadcast(kScalar, 2.0, 2.0);
    CHECK_THROWS_AS(edit_gaussian_analytic(src, tar, scalar_d(0.7), AnalyticEditConfig{}),
                    DomainError);
}

TEST_CASE("identity edit reproduces the source video") {
    const Shape4 s{4, 1, 8, 8};
    auto model = random_model(5);
    auto x_src = random_video(s, 6);

    EditConfig cfg;
    cfg.lambda = 1.0;
    cfg.guidance = 1.0;  // bypass: conditional evaluation only
    cfg.cache = CacheSetting::off();
    cfg.smpi.beta = 0.0;  // target condition equals source condition
    cfg.seed = 7;
    auto r = edit(model, x_src, x_src.frames.frame(0), 2, 2, cfg);
    CHECK(max_abs_diff(r.video.frames, x_src.frames) < 1e-5f);
}

TEST_CASE("lambda=0 edit is bit-identical to vanilla conditional sampling") {
    const Shape4 s{3, 1, 8, 8};
    auto model = random_model(15);
    auto x_src = random_video(s, 16);
    auto edited = random_video(Shape4{1, 1, 8, 8}, 17).frames;

    EditConfig cfg;
    cfg.lambda = 0.0;
    cfg.guidance = 3.0;
    cfg.cache = CacheSetting::off();
    cfg.smpi.beta = 0.0;
    cfg.smpi.alpha = 1.0;
    cfg.smpi.t_max = 1.0;
    cfg.num_steps = 10;
    cfg.seed = 77;
    auto r1 = edit(model, x_src, edited, 1, 3, cfg);

    Condition cond = build_target_condition(edited, x_src, 0.0, 3);
    auto r2 = generate(model, s, cond, 1.0, 10, 3.0, 77, SolverKind::euler);
    CHECK(bit_equal(r1.video.frames, r2.video.frames));
    CHECK(r1.trace.noise_digest == r2.trace.noise_digest);
    CHECK(r2.trace.total_src_evals == 0);
}

TEST_CASE("eval accounting per solver and guidance") {
    const Shape4 s{2, 1, 8, 8};
    auto model = random_model(25);
    auto x_src = random_video(s, 26);
    auto edited = x_src.frames.frame(0);

    EditConfig cfg;
    cfg.cache = CacheSetting::off();
    cfg.num_steps = 7;
    cfg.guidance = 5.0;
    auto r = edit(model, x_src, edited, 0, 1, cfg);
    CHECK(r.trace.total_src_evals == 7);       // one per step, no cache
    CHECK(r.trace.total_tar_evals == 7 * 2);   // CFG pair per step

    cfg.guidance = 1.0;
    r = edit(model, x_src, edited, 0, 1, cfg);
    CHECK(r.trace.total_tar_evals == 7);

    cfg.guidance = 5.0;
    cfg.solver = SolverKind::heun;
    r = edit(model, x_src, edited, 0, 1, cfg);
    CHECK(r.trace.total_src_evals == 7);                // deviation held; one source eval per step
    CHECK(r.trace.total_tar_evals == (7 + 6) * 2);      // corrector skipped on the final step
}

TEST_CASE("divergence guard reports step and lambda") {
    const Shape4 s{2, 1, 8, 8};
    auto model = random_model(35);
    auto x_src = random_video(s, 36);
    EditConfig cfg;
    cfg.lambda = 1e9;
    cfg.guidance = 1.0;
    cfg.cache = CacheSetting::off();
    try {
        edit(model, x_src, x_src.frames.frame(0), 0, 1, cfg);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        CHECK(e.rectification_scale == 1e9);
        CHECK(e.step >= 0);
        CHECK(std::string(e.what()).find("lambda") != std::string::npos);
    }
}

TEST_CASE("output continuity in lambda") {
    const Shape4 s{3, 1, 8, 8};
    auto model = random_model(45);
    auto x_src = random_video(s, 46);
    auto edited = random_video(Shape4{1, 1, 8, 8}, 47).frames;

    EditConfig cfg;
    cfg.guidance = 2.0;
    cfg.cache = CacheSetting::off();
    cfg.num_steps = 10;
    auto a = edit(model, x_src, edited, 0, 1, cfg);
    cfg.lambda = 1.0 + 1e-3;
    auto b = edit(model, x_src, edited, 0, 1, cfg);
    CHECK(max_abs_diff(a.video.frames, b.video.frames) < 0.1f);
}

TEST_CASE("trace csv has the fixed schema") {
    const Shape4 s{2, 1, 8, 8};
    auto model = random_model(55);
    auto x_src = random_video(s, 56);
    EditConfig cfg;
    cfg.num_steps = 4;
    cfg.guidance = 1.0;
    auto r = edit(model, x_src, x_src.frames.frame(0), 0, 1, cfg);

    auto path = std::filesystem::temp_directory_path() / "flowrect_trace_test.csv";
    write_trace_csv(path, r.trace);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,t,dt,cache_hit,d_cum,src_evals,tar_evals");
    int rows = 0, comments = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') comments++;
        else rows++;
    }
    CHECK(rows == 4);
    CHECK(comments == 2);
}
