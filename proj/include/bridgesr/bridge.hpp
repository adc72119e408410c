#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bridgesr/errors.hpp"
#include "bridgesr/rng.hpp"
#include "bridgesr/schedule.hpp"

namespace bridgesr {

struct WaveformPair {
    std::vector<double> x_hr;
    std::vector<double> x_lr;
    int target_rate = 48000;
    int input_rate = 48000;
    double cutoff_hz = 24000.0;

    void validate() const {
        if (x_hr.size() != x_lr.size()) throw DataError("pair length mismatch");
        if (input_rate > target_rate) throw DataError("input_rate above target_rate");
        if (!(cutoff_hz > 0.0) || cutoff_hz > 0.5 * input_rate + 1e-9)
            throw DataError("cutoff outside (0, input_rate/2]");
    }
};

struct ScaleFactor {
    double s = 12.0;
};

struct BridgeSample {
    std::vector<double> x_t;
    double t = 0.0;
    std::vector<double> x0_scaled;
    std::vector<double> xT_scaled;
};

// Streaming pooled variance of x_lr - x_hr (Welford/Chan); chunkable via merge.
class ScaleAccumulator {
public:
    void add(const WaveformPair& pair) {
        pair.validate();
        for (size_t i = 0; i < pair.x_hr.size(); ++i) observe(pair.x_lr[i] - pair.x_hr[i]);
    }

    void observe(double r) {
        n_ += 1.0;
        const double d = r - mean_;
        mean_ += d / n_;
        m2_ += d * (r - mean_);
    }

    void merge(const ScaleAccumulator& o) {
        if (o.n_ == 0.0) return;
        if (n_ == 0.0) { *this = o; return; }
        const double n = n_ + o.n_;
        const double d = o.mean_ - mean_;
        m2_ += o.m2_ + d * d * n_ * o.n_ / n;
        mean_ += d * o.n_ / n;
        n_ = n;
    }

    double count() const { return n_; }
    double variance() const { return n_ > 0.0 ? m2_ / n_ : 0.0; }

    ScaleFactor scale() const {
        if (n_ == 0.0) throw DataError("estimate_scale: empty stream");
        const double v = variance();
        if (!(v > 0.0)) throw DataError("estimate_scale: zero residual variance (x_lr == x_hr)");
        return {1.0 / std::sqrt(v)};
    }

private:
    double n_ = 0.0, mean_ = 0.0, m2_ = 0.0;
};

template <typename PairRange>
ScaleFactor estimate_scale(const PairRange& pairs) {
    ScaleAccumulator acc;
    for (const auto& p : pairs) acc.add(p);
    return acc.scale();
}

inline BridgeSample sample_marginal(const WaveformPair& pair, ScaleFactor s, double t,
                                    const ScheduleParams& sched, Rng& rng) {
    pair.validate();
    if (!(s.s > 0.0) || !std::isfinite(s.s)) throw ConfigError("scale factor must be positive finite");
    const BridgeCoefficients c = coefficients(sched, t);
    BridgeSample out;
    out.t = t;
    const size_t n = pair.x_hr.size();
    out.x0_scaled.resize(n);
    out.xT_scaled.resize(n);
    out.x_t.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.x0_scaled[i] = s.s * pair.x_hr[i];
        out.xT_scaled[i] = s.s * pair.x_lr[i];
        out.x_t[i] = c.a_t * out.x0_scaled[i] + c.b_t * out.xT_scaled[i] + c.c_t * rng.normal();
    }
    return out;
}

inline double bridge_loss(const std::vector<double>& pred_x0, const std::vector<double>& x0_scaled) {
    if (pred_x0.size() != x0_scaled.size()) throw DataError("bridge_loss: length mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < pred_x0.size(); ++i) {
        const double d = pred_x0[i] - x0_scaled[i];
        acc += d * d;
    }
    return acc / double(pred_x0.size());
}

} // namespace bridgesr
