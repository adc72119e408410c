#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bridgesr/denoiser.hpp"
#include "bridgesr/errors.hpp"
#include "bridgesr/rng.hpp"
#include "bridgesr/schedule.hpp"

namespace bridgesr {

enum class SamplerKind { Ode1, Sde1, Sde2 };

inline const char* to_string(SamplerKind k) {
    switch (k) {
        case SamplerKind::Ode1: return "ode1";
        case SamplerKind::Sde1: return "sde1";
        case SamplerKind::Sde2: return "sde2";
    }
    return "?";
}

inline SamplerKind sampler_kind_from_string(const std::string& s) {
    if (s == "ode1") return SamplerKind::Ode1;
    if (s == "sde1") return SamplerKind::Sde1;
    if (s == "sde2") return SamplerKind::Sde2;
    throw ConfigError("unknown sampler kind: " + s);
}

struct InferenceGrid {
    std::vector<double> times; // strictly descending, in (0, 1]
    SamplerKind kind = SamplerKind::Ode1;

    void validate() const {
        if (times.size() < 2) throw ConfigError("grid needs at least 2 times");
        for (size_t i = 0; i < times.size(); ++i) {
            if (!(times[i] > 0.0 && times[i] <= 1.0)) throw ConfigError("grid time outside (0,1]");
            if (i > 0 && !(times[i] < times[i - 1])) throw ConfigError("grid not strictly descending");
        }
    }

    size_t nfe() const { return (times.size() - 1) * (kind == SamplerKind::Sde2 ? 2 : 1); }
};

inline InferenceGrid linear_grid(size_t n_points, double t_min, double t_max,
                                 SamplerKind kind = SamplerKind::Ode1) {
    if (n_points < 2) throw ConfigError("linear_grid: need >= 2 points");
    if (!(t_min > 0.0 && t_min < t_max && t_max <= 1.0))
        throw ConfigError("linear_grid: need 0 < t_min < t_max <= 1");
    InferenceGrid g;
    g.kind = kind;
    g.times.resize(n_points);
    for (size_t i = 0; i < n_points; ++i)
        g.times[i] = t_max - double(i) * (t_max - t_min) / double(n_points - 1);
    g.times.back() = t_min;
    return g;
}

// Few-step grids fixed by the sampling study: 4 evals = Sde2 over {1, .5, .08},
// 2 evals = Ode1 over {1, .9, .03}, 1 eval = Ode1 over {1, .04}.
inline InferenceGrid preset_grid(int nfe) {
    InferenceGrid g;
    switch (nfe) {
        case 4: g.times = {1.0, 0.5, 0.08}; g.kind = SamplerKind::Sde2; break;
        case 2: g.times = {1.0, 0.9, 0.03}; g.kind = SamplerKind::Ode1; break;
        case 1: g.times = {1.0, 0.04}; g.kind = SamplerKind::Ode1; break;
        default: throw ConfigError("preset nfe must be one of {1,2,4}");
    }
    return g;
}

struct OdeStepCoeffs {
    double k_xt = 0.0;
    double k_x0 = 0.0;
    double k_xT = 0.0;
    bool from_terminal = false; // sigma_bar2_t == 0 limit branch
};

inline OdeStepCoeffs ode_step_coefficients(const ScheduleParams& p, double t, double s) {
    if (!(s < t && s > 0.0 && t <= 1.0)) throw std::invalid_argument("ode_step: need 0 < s < t <= 1");
    const BridgeCoefficients ct = coefficients(p, t);
    const BridgeCoefficients cs = coefficients(p, s);
    OdeStepCoeffs k;
    if (ct.sigma_bar2_t <= 0.0) {
        // At t = 1 the state equals xT and the update collapses to the marginal mean.
        k.k_xt = 0.0;
        k.k_x0 = cs.alpha_t * cs.sigma_bar2_t / cs.sigma2_1;
        k.k_xT = cs.alpha_bar_t * cs.sigma2_t / cs.sigma2_1;
        k.from_terminal = true;
        return k;
    }
    const double sig_t = std::sqrt(ct.sigma2_t), sigb_t = std::sqrt(ct.sigma_bar2_t);
    const double sig_s = std::sqrt(cs.sigma2_t), sigb_s = std::sqrt(cs.sigma_bar2_t);
    k.k_xt = (cs.alpha_t * sig_s * sigb_s) / (ct.alpha_t * sig_t * sigb_t);
    k.k_x0 = (cs.alpha_t / ct.sigma2_1) * (cs.sigma_bar2_t - sigb_s * sig_s * sigb_t / sig_t);
    k.k_xT = (cs.alpha_bar_t / ct.sigma2_1) * (cs.sigma2_t - sig_s * sigb_s * sig_t / sigb_t);
    return k;
}

inline std::vector<double> ode_step(const std::vector<double>& x_t, double t, double s_next,
                                    const std::vector<double>& x0_hat,
                                    const std::vector<double>& xT, const ScheduleParams& p) {
    const OdeStepCoeffs k = ode_step_coefficients(p, t, s_next);
    std::vector<double> out(x_t.size());
    for (size_t i = 0; i < x_t.size(); ++i)
        out[i] = k.k_xt * x_t[i] + k.k_x0 * x0_hat[i] + k.k_xT * xT[i];
    return out;
}

struct SdeStepCoeffs {
    double k_xt = 0.0;
    double k_x0 = 0.0;
    double k_eps = 0.0;
};

inline SdeStepCoeffs sde_step_coefficients(const ScheduleParams& p, double t, double s) {
    if (!(s < t && s > 0.0 && t <= 1.0)) throw std::invalid_argument("sde_step: need 0 < s < t <= 1");
    const BridgeCoefficients ct = coefficients(p, t);
    const BridgeCoefficients cs = coefficients(p, s);
    const double ratio = cs.sigma2_t / ct.sigma2_t;
    SdeStepCoeffs k;
    k.k_xt = cs.alpha_t * cs.sigma2_t / (ct.alpha_t * ct.sigma2_t);
    k.k_x0 = cs.alpha_t * (1.0 - ratio);
    k.k_eps = cs.alpha_t * std::sqrt(cs.sigma2_t) * std::sqrt(std::max(0.0, 1.0 - ratio));
    return k;
}

inline std::vector<double> sde_step(const std::vector<double>& x_t, double t, double s_next,
                                    const std::vector<double>& x0_hat, Rng& rng,
                                    const ScheduleParams& p,
                                    const std::vector<double>* noise = nullptr) {
    const SdeStepCoeffs k = sde_step_coefficients(p, t, s_next);
    std::vector<double> out(x_t.size());
    for (size_t i = 0; i < x_t.size(); ++i) {
        const double eps = noise ? (*noise)[i] : rng.normal();
        out[i] = k.k_xt * x_t[i] + k.k_x0 * x0_hat[i] + k.k_eps * eps;
    }
    return out;
}

// Heun-style corrected SDE step: predictor with x0_hat(x_t, t), corrector repeats
// the same transition from (x_t, t) with the averaged prediction and the same
// noise draw. Exactly two denoiser evaluations.
inline std::vector<double> sde2_step(const std::vector<double>& x_t, double t, double s_next,
                                     const Denoiser& denoiser, const std::vector<double>& xT,
                                     Rng& rng, const ScheduleParams& p,
                                     const std::vector<double>* injected_noise = nullptr) {
    std::vector<double> noise(x_t.size());
    if (injected_noise)
        noise = *injected_noise;
    else
        for (auto& e : noise) e = rng.normal();
    const std::vector<double> pred0 = denoiser.predict(x_t, t, xT);
    const std::vector<double> x_pred = sde_step(x_t, t, s_next, pred0, rng, p, &noise);
    const std::vector<double> pred1 = denoiser.predict(x_pred, s_next, xT);
    std::vector<double> avg(x_t.size());
    for (size_t i = 0; i < avg.size(); ++i) avg[i] = 0.5 * (pred0[i] + pred1[i]);
    return sde_step(x_t, t, s_next, avg, rng, p, &noise);
}

// Full reverse pass: start at s*x_lr at t_max, walk the grid, return the state at
// the last grid time divided by s. No denoiser call after the final step.
inline std::vector<double> sample(const Denoiser& denoiser, const std::vector<double>& x_lr,
                                  double s, const InferenceGrid& grid, const ScheduleParams& p,
                                  Rng& rng) {
    grid.validate();
    if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("scale factor must be positive finite");
    std::vector<double> x(x_lr.size());
    std::vector<double> xT(x_lr.size());
    for (size_t i = 0; i < x_lr.size(); ++i) x[i] = xT[i] = s * x_lr[i];

    for (size_t i = 0; i + 1 < grid.times.size(); ++i) {
        const double t = grid.times[i], s_next = grid.times[i + 1];
        switch (grid.kind) {
            case SamplerKind::Ode1: {
                const std::vector<double> x0_hat = denoiser.predict(x, t, xT);
                x = ode_step(x, t, s_next, x0_hat, xT, p);
                break;
            }
            case SamplerKind::Sde1: {
                const std::vector<double> x0_hat = denoiser.predict(x, t, xT);
                x = sde_step(x, t, s_next, x0_hat, rng, p);
                break;
            }
            case SamplerKind::Sde2:
                x = sde2_step(x, t, s_next, denoiser, xT, rng, p);
                break;
        }
        for (double v : x)
            if (!std::isfinite(v))
                throw NumericError("sample: non-finite state after step " + std::to_string(i));
    }
    for (auto& v : x) v /= s;
    return x;
}

} // namespace bridgesr
