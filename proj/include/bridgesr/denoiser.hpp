#pragma once

#include <atomic>
#include <cmath>
#include <cstddef>
#include <vector>

#include "bridgesr/errors.hpp"
#include "bridgesr/schedule.hpp"

namespace bridgesr {

// x_theta(x_t, t, x_T) -> predicted x_0, same length as inputs.
struct Denoiser {
    virtual ~Denoiser() = default;
    virtual std::vector<double> predict(const std::vector<double>& x_t, double t,
                                        const std::vector<double>& x_T) const = 0;
};

// Exact posterior mean for the coordinatewise toy model x0 = xT + h, h ~ N(0, v_h).
// Gain a_t*v_h/(a_t^2 v_h + c_t^2) written in a form finite at t = 1.
class AnalyticGaussianDenoiser : public Denoiser {
public:
    AnalyticGaussianDenoiser(ScheduleParams sched, double v_h) : sched_(sched), v_h_(v_h) {
        if (!(v_h > 0.0)) throw ConfigError("v_h must be positive");
    }

    double gain(double t) const {
        const BridgeCoefficients c = coefficients(sched_, t);
        // a_t = 0 (t = 1): the observation carries no information about h.
        if (c.a_t == 0.0) return 0.0;
        return v_h_ / (c.alpha_t * (c.sigma_bar2_t * v_h_ / c.sigma2_1 + c.sigma2_t));
    }

    std::vector<double> predict(const std::vector<double>& x_t, double t,
                                const std::vector<double>& x_T) const override {
        if (x_t.size() != x_T.size()) throw DataError("denoiser input length mismatch");
        const BridgeCoefficients c = coefficients(sched_, t);
        const double g = gain(t);
        const double ab = c.a_t + c.b_t;
        std::vector<double> out(x_t.size());
        for (size_t i = 0; i < x_t.size(); ++i)
            out[i] = x_T[i] + g * (x_t[i] - ab * x_T[i]);
        return out;
    }

private:
    ScheduleParams sched_;
    double v_h_;
};

// Counts predict() calls; wraps any denoiser for NFE accounting.
class CountingDenoiser : public Denoiser {
public:
    explicit CountingDenoiser(const Denoiser& inner) : inner_(inner) {}

    std::vector<double> predict(const std::vector<double>& x_t, double t,
                                const std::vector<double>& x_T) const override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.predict(x_t, t, x_T);
    }

    size_t calls() const { return calls_.load(std::memory_order_relaxed); }
    void reset() { calls_.store(0, std::memory_order_relaxed); }

private:
    const Denoiser& inner_;
    mutable std::atomic<size_t> calls_{0};
};

} // namespace bridgesr
