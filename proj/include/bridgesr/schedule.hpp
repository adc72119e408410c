#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bridgesr/errors.hpp"

namespace bridgesr {

enum class ScheduleKind { GMax, GConst, VP };

inline const char* to_string(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::GMax: return "gmax";
        case ScheduleKind::GConst: return "gconst";
        case ScheduleKind::VP: return "vp";
    }
    return "?";
}

inline ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "gmax") return ScheduleKind::GMax;
    if (s == "gconst") return ScheduleKind::GConst;
    if (s == "vp") return ScheduleKind::VP;
    throw ConfigError("unknown schedule kind: " + s);
}

// Noise schedule on t in [0,1]. For gmax/gconst the drift is zero and
// g^2(t) = (1-t)*beta0 + t*beta1 (gconst: beta0 == beta1). For vp,
// beta(t) = beta0 + (beta1-beta0)*t with f(t) = -beta(t)/2.
struct ScheduleParams {
    ScheduleKind kind = ScheduleKind::GMax;
    double beta0 = 8e-7;
    double beta1 = 8e-2;

    void validate() const {
        if (!(beta0 > 0.0) || !(beta1 > 0.0))
            throw ConfigError("schedule betas must be positive");
        if (kind == ScheduleKind::GConst && beta0 != beta1)
            throw ConfigError("gconst requires beta0 == beta1");
        if (kind == ScheduleKind::GMax && beta1 < beta0)
            throw ConfigError("gmax requires beta1 >= beta0");
    }

    static ScheduleParams gmax(double b0 = 8e-7, double b1 = 8e-2) {
        return {ScheduleKind::GMax, b0, b1};
    }
    static ScheduleParams gconst(double beta = 8e-2) {
        return {ScheduleKind::GConst, beta, beta};
    }
    static ScheduleParams vp(double b0 = 1e-2, double b1 = 20.0) {
        return {ScheduleKind::VP, b0, b1};
    }
};

// Everything the bridge needs at one time point. sigma2/sigma_bar2 are the
// forward/reverse accumulated variances with sigma2_t + sigma_bar2_t == sigma2_1.
struct BridgeCoefficients {
    double t = 0.0;
    double alpha_t = 1.0;
    double alpha_bar_t = 1.0;
    double sigma2_t = 0.0;
    double sigma_bar2_t = 0.0;
    double sigma2_1 = 0.0;
    double a_t = 0.0; // weight on x_0 in the marginal mean
    double b_t = 0.0; // weight on x_T
    double c_t = 0.0; // marginal std dev
};

namespace detail {

// int_0^t beta(s) ds with beta linear in s.
inline double beta_integral(double beta0, double beta1, double t) {
    return beta0 * t + 0.5 * (beta1 - beta0) * t * t;
}

} // namespace detail

inline double g2(const ScheduleParams& p, double t) {
    switch (p.kind) {
        case ScheduleKind::GMax:
        case ScheduleKind::GConst:
            return (1.0 - t) * p.beta0 + t * p.beta1;
        case ScheduleKind::VP:
            return p.beta0 + (p.beta1 - p.beta0) * t;
    }
    return 0.0;
}

inline double drift_f(const ScheduleParams& p, double t) {
    if (p.kind == ScheduleKind::VP) return -0.5 * (p.beta0 + (p.beta1 - p.beta0) * t);
    return 0.0;
}

inline BridgeCoefficients coefficients(const ScheduleParams& p, double t) {
    p.validate();
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("t outside [0,1]");

    BridgeCoefficients c;
    c.t = t;
    double s2t, s2one;
    if (p.kind == ScheduleKind::VP) {
        // alpha_t = exp(-1/2 int_0^t beta), sigma_t^2 = alpha_t^{-2} - 1.
        const double it = detail::beta_integral(p.beta0, p.beta1, t);
        const double i1 = detail::beta_integral(p.beta0, p.beta1, 1.0);
        c.alpha_t = std::exp(-0.5 * it);
        const double alpha1 = std::exp(-0.5 * i1);
        c.alpha_bar_t = c.alpha_t / alpha1;
        s2t = std::expm1(it); // 1/alpha_t^2 - 1
        s2one = std::expm1(i1);
    } else {
        c.alpha_t = 1.0;
        c.alpha_bar_t = 1.0;
        s2t = detail::beta_integral(p.beta0, p.beta1, t);
        s2one = detail::beta_integral(p.beta0, p.beta1, 1.0);
    }
    c.sigma2_t = s2t;
    c.sigma2_1 = s2one;
    c.sigma_bar2_t = s2one - s2t;
    if (c.sigma_bar2_t < 0.0) c.sigma_bar2_t = 0.0;
    c.a_t = c.alpha_t * c.sigma_bar2_t / c.sigma2_1;
    c.b_t = c.alpha_bar_t * c.sigma2_t / c.sigma2_1;
    c.c_t = c.alpha_t * std::sqrt(c.sigma2_t * c.sigma_bar2_t / c.sigma2_1);
    return c;
}

// Time where the marginal std peaks: 2*sigma_t^2 == sigma2_1, bisected on the
// strictly increasing sigma_t^2.
inline double peak_time(const ScheduleParams& p) {
    p.validate();
    const double s2one = coefficients(p, 1.0).sigma2_1;
    auto h = [&](double t) { return 2.0 * coefficients(p, t).sigma2_t - s2one; };
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        const double hm = h(mid);
        if (hm == 0.0) return mid;
        if (hm < 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Marginal mean a_t*x0 + b_t*xT per grid time.
inline std::vector<std::vector<double>> mean_trajectory(const ScheduleParams& p,
                                                        const std::vector<double>& x0,
                                                        const std::vector<double>& xT,
                                                        const std::vector<double>& grid) {
    if (x0.size() != xT.size()) throw std::invalid_argument("mean_trajectory: size mismatch");
    std::vector<std::vector<double>> out;
    out.reserve(grid.size());
    for (double t : grid) {
        const BridgeCoefficients c = coefficients(p, t);
        std::vector<double> m(x0.size());
        for (size_t i = 0; i < x0.size(); ++i) m[i] = c.a_t * x0[i] + c.b_t * xT[i];
        out.push_back(std::move(m));
    }
    return out;
}

} // namespace bridgesr
