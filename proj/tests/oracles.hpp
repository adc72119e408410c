#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "bridgesr/schedule.hpp"

// Independent reference computations used by the tests. These deliberately
// avoid the closed forms in the library headers.
namespace oracles {

// Composite Simpson quadrature of int_0^t g^2(s)/alpha_s^2 ds.
inline double sigma2_quadrature(const bridgesr::ScheduleParams& p, double t, int panels = 100000) {
    auto integrand = [&](double s) {
        double g2;
        if (p.kind == bridgesr::ScheduleKind::VP)
            g2 = p.beta0 + (p.beta1 - p.beta0) * s;
        else
            g2 = (1.0 - s) * p.beta0 + s * p.beta1;
        if (p.kind == bridgesr::ScheduleKind::VP) {
            const double ib = p.beta0 * s + 0.5 * (p.beta1 - p.beta0) * s * s;
            return g2 * std::exp(ib); // 1/alpha^2 = e^{int beta}
        }
        return g2;
    };
    const double h = t / double(2 * panels);
    double acc = integrand(0.0) + integrand(t);
    for (int i = 1; i < 2 * panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * integrand(h * double(i));
    return acc * h / 3.0;
}

// Scalar toy model x0 = xT + h, h ~ N(0, v_h), under an f=0 schedule with
// u(t) = sigma_t^2, u1 = sigma2_1. Conditioned on xT the bridge state is a
// Gaussian process with covariance C(u,v) = (u1 - v)/u1 * A(u) for u <= v,
// where A(u) = u + v_h*(u1 - u)/u1. Derived by integrating the Gaussian
// marginal coefficients against the prior on h.
struct ToyModel {
    bridgesr::ScheduleParams sched;
    double v_h;

    double u(double t) const { return bridgesr::coefficients(sched, t).sigma2_t; }
    double u1() const { return bridgesr::coefficients(sched, 1.0).sigma2_1; }

    double A(double uu) const { return uu + v_h * (u1() - uu) / u1(); }

    // Exact mean ratio of the reverse Markov transition from u_t to u_s (< u_t):
    // E[y_s | y_t] = ratio * y_t for the centered process y = x - xT.
    double mean_ratio(double ut, double us) const { return A(us) / A(ut); }

    // Exact one-step conditional variance of the reverse transition.
    double step_var(double ut, double us) const {
        const double Cs = (u1() - us) / u1() * A(us);
        const double Cst = (u1() - ut) / u1() * A(us); // C(us, ut), us < ut
        const double Ct = (u1() - ut) / u1() * A(ut);
        return Cs - Cst * Cst / Ct;
    }
};

// One-sided Kolmogorov-Smirnov p-value (asymptotic series).
inline double ks_pvalue(double d, size_t n) {
    const double lambda = (std::sqrt(double(n)) + 0.12 + 0.11 / std::sqrt(double(n))) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k)
        sum += 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::min(1.0, std::max(0.0, sum));
}

// Central finite difference of f at x with step h.
inline double central_diff(const std::function<double(double)>& f, double x, double h = 1e-4) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double mean(const std::vector<double>& v) {
    double a = 0.0;
    for (double x : v) a += x;
    return a / double(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double a = 0.0;
    for (double x : v) a += (x - m) * (x - m);
    return a / double(v.size() - 1);
}

} // namespace oracles
