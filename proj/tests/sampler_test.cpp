#include <catch2/catch_amalgamated.hpp>

#include "bridgesr/samplers.hpp"
#include "oracles.hpp"

using namespace bridgesr;

namespace {

// x0_hat = k*x_t: linear toy denoiser with a nontrivial state dependence.
struct KLinearDenoiser : Denoiser {
    double k;
    explicit KLinearDenoiser(double k_) : k(k_) {}
    std::vector<double> predict(const std::vector<double>& x_t, double, const std::vector<double>&) const override {
        std::vector<double> out(x_t.size());
        for (size_t i = 0; i < out.size(); ++i) out[i] = k * x_t[i];
        return out;
    }
};

struct ConstantDenoiser : Denoiser {
    double c;
    explicit ConstantDenoiser(double c_) : c(c_) {}
    std::vector<double> predict(const std::vector<double>& x_t, double, const std::vector<double>&) const override {
        return std::vector<double>(x_t.size(), c);
    }
};

} // namespace

TEST_CASE("grid construction") {
    const auto g = linear_grid(51, 1e-5, 1.0);
    REQUIRE(g.times.size() == 51);
    REQUIRE(g.times.front() == 1.0);
    REQUIRE(g.times.back() == 1e-5);
    REQUIRE(g.times[1] == Catch::Approx(1.0 - (1.0 - 1e-5) / 50.0).epsilon(1e-14));
    REQUIRE_NOTHROW(g.validate());

    REQUIRE_THROWS_AS(linear_grid(3, 0.0, 1.0), ConfigError);
    REQUIRE_THROWS_AS(linear_grid(1, 1e-5, 1.0), ConfigError);
    REQUIRE_THROWS_AS(linear_grid(3, 0.5, 0.2), ConfigError);

    const auto two = linear_grid(2, 1e-5, 1.0);
    REQUIRE(two.times == std::vector<double>{1.0, 1e-5});

    InferenceGrid bad;
    bad.times = {1.0, 1.0};
    REQUIRE_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("preset grids") {
    const auto g4 = preset_grid(4);
    REQUIRE(g4.times == std::vector<double>{1.0, 0.5, 0.08});
    REQUIRE(g4.kind == SamplerKind::Sde2);
    REQUIRE(g4.nfe() == 4);

    const auto g2 = preset_grid(2);
    REQUIRE(g2.times == std::vector<double>{1.0, 0.9, 0.03});
    REQUIRE(g2.kind == SamplerKind::Ode1);
    REQUIRE(g2.nfe() == 2);

    const auto g1 = preset_grid(1);
    REQUIRE(g1.times == std::vector<double>{1.0, 0.04});
    REQUIRE(g1.kind == SamplerKind::Ode1);
    REQUIRE(g1.nfe() == 1);

    REQUIRE_THROWS_AS(preset_grid(3), ConfigError);
}

TEST_CASE("ode step endpoint consistency") {
    // s -> t: deviations are first order in the offset. s -> 0: deviations
    // scale as sigma_s ~ sqrt(s), so the probe checks the scaling law instead
    // of a fixed floor.
    for (const auto& p : {ScheduleParams::gmax(), ScheduleParams::gconst(), ScheduleParams::vp()}) {
        for (double t : {0.3, 0.7, 0.999}) {
            const auto near_t = ode_step_coefficients(p, t, t * (1.0 - 1e-7));
            REQUIRE(std::abs(near_t.k_xt - 1.0) < 5e-4);
            REQUIRE(std::abs(near_t.k_x0) < 5e-4);
            REQUIRE(std::abs(near_t.k_xT) < 5e-4);

            const auto c1 = ode_step_coefficients(p, t, 1e-7);
            const auto c2 = ode_step_coefficients(p, t, 1e-11);
            const double d1 = std::abs(c1.k_xt) + std::abs(c1.k_x0 - 1.0) + std::abs(c1.k_xT);
            const double d2 = std::abs(c2.k_xt) + std::abs(c2.k_x0 - 1.0) + std::abs(c2.k_xT);
            REQUIRE(d1 < 5e-2);
            // sqrt scaling: shrinking s by 1e4 shrinks the deviation ~100x
            if (d2 > 1e-12) REQUIRE(d1 / d2 > 30.0);
        }
    }
}

TEST_CASE("ode step precondition") {
    REQUIRE_THROWS_AS(ode_step_coefficients(ScheduleParams::gmax(), 0.5, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(ode_step_coefficients(ScheduleParams::gmax(), 0.5, 0.7), std::invalid_argument);
}

TEST_CASE("ode sampling with the exact denoiser hits the posterior mean") {
    const auto sched = ScheduleParams::gmax();
    AnalyticGaussianDenoiser den(sched, 1.0);
    Rng rng(0);
    const double xT = 2.0;
    const auto out = sample(den, {xT}, 1.0, linear_grid(51, 1e-5, 1.0), sched, rng);
    // E[x0 | xT] = xT for the zero-mean residual model
    REQUIRE(std::abs(out[0] - xT) < 1e-3 * std::abs(xT));
}

TEST_CASE("ode oracle-denoiser sample recovers x_hr") {
    // denoiser returning s*x_hr regardless of state; grid [1, 1e-5]
    const auto sched = ScheduleParams::gmax();
    const std::vector<double> x_hr = {0.5, -0.25, 0.125};
    const std::vector<double> x_lr = {0.4, -0.2, 0.1};
    struct Oracle : Denoiser {
        std::vector<double> target;
        std::vector<double> predict(const std::vector<double>&, double, const std::vector<double>&) const override {
            return target;
        }
    } oracle;
    const double s = 12.0;
    oracle.target.resize(x_hr.size());
    for (size_t i = 0; i < x_hr.size(); ++i) oracle.target[i] = s * x_hr[i];
    Rng rng(0);
    InferenceGrid g;
    g.times = {1.0, 1e-5};
    g.kind = SamplerKind::Ode1;
    const auto out = sample(oracle, x_lr, s, g, sched, rng);
    for (size_t i = 0; i < x_hr.size(); ++i)
        REQUIRE(std::abs(out[i] - x_hr[i]) < 1e-4 * std::abs(x_hr[i]));
}

TEST_CASE("sde step moments") {
    // u_s/u_t = 0.25 on gconst: fixed x0_hat = 0, x_t = 1.
    const auto sched = ScheduleParams::gconst(0.08);
    const double t = 0.8, s = 0.2;
    const auto k = sde_step_coefficients(sched, t, s);
    const double sig_s = std::sqrt(coefficients(sched, s).sigma2_t);
    REQUIRE(k.k_xt == Catch::Approx(0.25).epsilon(1e-12));
    REQUIRE(k.k_eps == Catch::Approx(sig_s * std::sqrt(0.75)).epsilon(1e-12));

    Rng rng(17);
    const size_t n = 100000;
    std::vector<double> outs(n);
    const std::vector<double> xt = {1.0}, x0 = {0.0};
    for (size_t i = 0; i < n; ++i) outs[i] = sde_step(xt, t, s, x0, rng, sched)[0];
    const double want_std = sig_s * std::sqrt(0.75);
    REQUIRE(std::abs(oracles::mean(outs) - 0.25) < 4.0 * want_std / std::sqrt(double(n)));
    const double var = oracles::variance(outs);
    const double se_var = want_std * want_std * std::sqrt(2.0 / double(n - 1));
    REQUIRE(std::abs(var - want_std * want_std) < 3.0 * se_var);
}

TEST_CASE("sde step limits") {
    const auto sched = ScheduleParams::gmax();
    const auto near_t = sde_step_coefficients(sched, 0.6, 0.6 * (1.0 - 1e-9));
    REQUIRE(near_t.k_xt == Catch::Approx(1.0).margin(1e-7));
    REQUIRE(std::abs(near_t.k_x0) < 1e-7);
    REQUIRE(std::abs(near_t.k_eps) < 1e-3); // sqrt scale of the vanishing radicand

    const auto near_0 = sde_step_coefficients(sched, 0.6, 1e-9);
    REQUIRE(std::abs(near_0.k_xt) < 1e-7);
    REQUIRE(near_0.k_x0 == Catch::Approx(1.0).margin(1e-7));
}

TEST_CASE("sde2 equals sde1 for a constant denoiser") {
    const auto sched = ScheduleParams::gmax();
    ConstantDenoiser den(0.7);
    const std::vector<double> xt = {1.3}, xT = {0.5};
    const std::vector<double> noise = {0.42};
    Rng rng(1);
    const auto two = sde2_step(xt, 0.8, 0.3, den, xT, rng, sched, &noise);
    Rng rng2(1);
    const auto one = sde_step(xt, 0.8, 0.3, den.predict(xt, 0.8, xT), rng2, sched, &noise);
    REQUIRE(two[0] == Catch::Approx(one[0]).margin(1e-15));
}

TEST_CASE("sde2 convergence order on the linear flow") {
    // x0_hat = k*x: the continuous mean obeys E(u_s)/E(u_t) = (u_s/u_t)^(1-k).
    const auto sched = ScheduleParams::gmax();
    KLinearDenoiser den(0.3);
    const double t_hi = 0.9, t_lo = 0.1;
    const double u_hi = coefficients(sched, t_hi).sigma2_t;
    const double u_lo = coefficients(sched, t_lo).sigma2_t;
    const double exact = std::pow(u_lo / u_hi, 1.0 - den.k);

    auto run = [&](int n_intervals) {
        std::vector<double> x = {1.0};
        const std::vector<double> xT = {0.0};
        const std::vector<double> zero_noise = {0.0};
        Rng rng(0);
        for (int i = 0; i < n_intervals; ++i) {
            const double t = t_hi + (t_lo - t_hi) * double(i) / n_intervals;
            const double s = t_hi + (t_lo - t_hi) * double(i + 1) / n_intervals;
            x = sde2_step(x, t, s, den, xT, rng, sched, &zero_noise);
        }
        return x[0];
    };

    double prev_err = -1.0;
    for (int n : {8, 16, 32}) {
        const double err = std::abs(run(n) - exact);
        if (prev_err > 0.0) {
            const double ratio = prev_err / err;
            INFO("n=" << n << " ratio=" << ratio);
            REQUIRE(ratio > 3.0);
            REQUIRE(ratio < 5.0);
        }
        prev_err = err;
    }
}

TEST_CASE("sde1 terminal distribution matches the true posterior") {
    // Dense grid keeps the first-order kernel's variance deficit well under the
    // Monte-Carlo resolution; mean is exact for the exact denoiser.
    const auto sched = ScheduleParams::gmax();
    const double v_h = coefficients(sched, 1.0).sigma2_1;
    AnalyticGaussianDenoiser den(sched, v_h);
    const double xT = 0.7;
    const size_t runs = 10000;
    std::vector<double> outs(runs);
    const auto grid = linear_grid(801, 1e-5, 1.0, SamplerKind::Sde1);
    Rng rng(123);
    for (size_t i = 0; i < runs; ++i) outs[i] = sample(den, {xT}, 1.0, grid, sched, rng)[0];

    const double se_mean = std::sqrt(v_h / double(runs));
    REQUIRE(std::abs(oracles::mean(outs) - xT) < 3.0 * se_mean);
    const double var = oracles::variance(outs);
    const double se_var = v_h * std::sqrt(2.0 / double(runs - 1));
    REQUIRE(std::abs(var - v_h) < 3.0 * se_var);
}

TEST_CASE("sde1 mean recursion is exact for the analytic denoiser") {
    // Zero-noise runs give the mean path; the oracle is the closed-form
    // covariance ratio of the reverse Markov chain.
    const auto sched = ScheduleParams::gconst(0.08);
    oracles::ToyModel toy{sched, 0.5};
    AnalyticGaussianDenoiser den(sched, toy.v_h);
    const double xT = 0.0;
    std::vector<double> x = {1.0}; // start off the mean on purpose
    const std::vector<double> zero = {0.0};
    Rng rng(0);
    double expected = 1.0;
    const auto grid = linear_grid(21, 0.05, 0.9, SamplerKind::Sde1);
    for (size_t i = 0; i + 1 < grid.times.size(); ++i) {
        const double t = grid.times[i], s = grid.times[i + 1];
        const auto x0h = den.predict(x, t, {xT});
        x = sde_step(x, t, s, x0h, rng, sched, &zero);
        expected *= toy.mean_ratio(toy.u(t), toy.u(s));
    }
    REQUIRE(x[0] == Catch::Approx(expected).epsilon(1e-10));
}

TEST_CASE("ode convergence is monotone under grid refinement") {
    const auto sched = ScheduleParams::gmax();
    KLinearDenoiser den(0.3);
    auto run = [&](int n_intervals) {
        std::vector<double> x = {1.0};
        const std::vector<double> xT = {0.5};
        for (int i = 0; i < n_intervals; ++i) {
            const double t = 0.9 + (0.1 - 0.9) * double(i) / n_intervals;
            const double s = 0.9 + (0.1 - 0.9) * double(i + 1) / n_intervals;
            const auto x0h = den.predict(x, t, xT);
            x = ode_step(x, t, s, x0h, xT, sched);
        }
        return x[0];
    };
    const double ref = run(1024);
    double prev = -1.0;
    for (int n : {2, 4, 8, 16, 32, 64}) {
        const double err = std::abs(run(n) - ref);
        if (prev >= 0.0) REQUIRE(err <= prev * 1.0001 + 1e-13);
        prev = err;
    }
}

TEST_CASE("sampling is linear for power-of-two rescaling") {
    const auto sched = ScheduleParams::gmax();
    KLinearDenoiser den(0.4);
    const std::vector<double> x_lr = {0.3, -0.7, 0.9};
    Rng r1(5), r2(5);
    const auto base = sample(den, x_lr, 1.0, linear_grid(9, 1e-5, 1.0), sched, r1);
    std::vector<double> x2(x_lr);
    for (auto& v : x2) v *= 2.0;
    const auto doubled = sample(den, x2, 1.0, linear_grid(9, 1e-5, 1.0), sched, r2);
    for (size_t i = 0; i < x_lr.size(); ++i) REQUIRE(doubled[i] == 2.0 * base[i]);
}

TEST_CASE("sde step affine in state and noise") {
    const auto sched = ScheduleParams::gmax();
    const std::vector<double> xt = {0.8}, x0 = {0.2}, eps = {1.3};
    Rng rng(0);
    const auto one = sde_step(xt, 0.7, 0.2, x0, rng, sched, &eps);
    const std::vector<double> xt2 = {1.6}, x02 = {0.4}, eps2 = {2.6};
    const auto two = sde_step(xt2, 0.7, 0.2, x02, rng, sched, &eps2);
    REQUIRE(two[0] == 2.0 * one[0]);
}

TEST_CASE("ode sampling deterministic") {
    const auto sched = ScheduleParams::gmax();
    AnalyticGaussianDenoiser den(sched, 1.0);
    Rng r1(1), r2(99);
    const std::vector<double> x_lr = {0.1, 0.2};
    const auto a = sample(den, x_lr, 12.0, linear_grid(9, 1e-5, 1.0), sched, r1);
    const auto b = sample(den, x_lr, 12.0, linear_grid(9, 1e-5, 1.0), sched, r2);
    REQUIRE(a == b);
}

TEST_CASE("sde paths reproducible from the seed") {
    const auto sched = ScheduleParams::gmax();
    AnalyticGaussianDenoiser den(sched, 1.0);
    const auto grid = linear_grid(9, 1e-5, 1.0, SamplerKind::Sde1);
    Rng r1(7), r2(7), r3(8);
    const std::vector<double> x_lr = {0.1, 0.2};
    const auto a = sample(den, x_lr, 12.0, grid, sched, r1);
    const auto b = sample(den, x_lr, 12.0, grid, sched, r2);
    const auto c = sample(den, x_lr, 12.0, grid, sched, r3);
    REQUIRE(a == b);
    REQUIRE(a != c);
}

TEST_CASE("nfe accounting through sample") {
    const auto sched = ScheduleParams::gmax();
    AnalyticGaussianDenoiser den(sched, 1.0);
    for (int nfe : {1, 2, 4}) {
        CountingDenoiser counted(den);
        Rng rng(3);
        sample(counted, {0.4}, 1.0, preset_grid(nfe), sched, rng);
        REQUIRE(counted.calls() == size_t(nfe));
    }
}

TEST_CASE("sample validates inputs") {
    const auto sched = ScheduleParams::gmax();
    AnalyticGaussianDenoiser den(sched, 1.0);
    Rng rng(0);
    InferenceGrid g;
    g.times = {1.0, 1.0};
    REQUIRE_THROWS_AS(sample(den, {0.1}, 1.0, g, sched, rng), ConfigError);
    REQUIRE_THROWS_AS(sample(den, {0.1}, 0.0, preset_grid(1), sched, rng), ConfigError);
}

TEST_CASE("non-finite state reported with step index") {
    struct NanDenoiser : Denoiser {
        std::vector<double> predict(const std::vector<double>& x, double, const std::vector<double>&) const override {
            return std::vector<double>(x.size(), std::nan(""));
        }
    } den;
    Rng rng(0);
    try {
        sample(den, {0.1}, 1.0, linear_grid(5, 1e-5, 1.0), ScheduleParams::gmax(), rng);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        REQUIRE(std::string(e.what()).find("step 0") != std::string::npos);
    }
}
