#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bridgesr/autodiff.hpp"
#include "bridgesr/dsp.hpp"
#include "bridgesr/errors.hpp"
#include "bridgesr/fft.hpp"

namespace bridgesr {

struct AuxLossConfig {
    std::vector<STFTConfig> resolutions = {{512, 128}, {1024, 256}, {2048, 512}};
    double lambda_mag = 4e-6;
    double lambda_phase = 5e-6;
    bool a_weighting = true;

    void validate() const {
        if (resolutions.empty()) throw ConfigError("aux: at least one resolution required");
        for (const auto& r : resolutions) r.validate();
        if (lambda_mag < 0.0 || lambda_phase < 0.0) throw ConfigError("aux: lambdas must be nonnegative");
    }
};

// |x - 2*pi*round(x/(2*pi))|, the even 2*pi-periodic distance to the nearest
// multiple of 2*pi; range [0, pi].
inline double anti_wrap(double x) {
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::abs(x - two_pi * std::round(x / two_pi));
}

// IEC 61672 A-weighting magnitude, normalized to unity at 1 kHz.
inline double a_weight_mag(double f) {
    const double f2 = f * f;
    auto ra = [](double ff) {
        const double c1 = 20.6 * 20.6, c2 = 107.7 * 107.7, c3 = 737.9 * 737.9, c4 = 12194.0 * 12194.0;
        return (c4 * ff * ff) / ((ff + c1) * std::sqrt((ff + c2) * (ff + c3)) * (ff + c4));
    };
    return ra(f2) / ra(1000.0 * 1000.0);
}

// Linear-phase FIR fit of the A-weighting curve by frequency sampling,
// Hamming-windowed and renormalized to exact unity at 1 kHz.
inline std::vector<double> a_weighting_fir(double rate, int taps = 257) {
    if (taps < 3 || taps % 2 == 0) throw ConfigError("a_weighting_fir: taps must be odd and >= 3");
    const size_t grid = 1024;
    fft::cvec spec(grid / 2 + 1);
    for (size_t k = 0; k < spec.size(); ++k) spec[k] = a_weight_mag(double(k) * rate / double(grid));
    const auto h = fft::irfft(spec, grid);

    const int c = taps / 2;
    std::vector<double> w(static_cast<size_t>(taps));
    for (int j = 0; j < taps; ++j) {
        const double ham = 0.54 - 0.46 * std::cos(2.0 * M_PI * double(j) / double(taps - 1));
        w[size_t(j)] = h[size_t(((j - c) % int(grid) + int(grid)) % int(grid))] * ham;
    }
    const double omega = 2.0 * M_PI * 1000.0 / rate;
    double re = 0.0, im = 0.0;
    for (int j = 0; j < taps; ++j) {
        re += w[size_t(j)] * std::cos(omega * j);
        im -= w[size_t(j)] * std::sin(omega * j);
    }
    const double norm = std::sqrt(re * re + im * im);
    for (auto& v : w) v /= norm;
    return w;
}

namespace objdetail {

inline int magnitude(ad::Graph& g, int S) {
    const int re = g.slice_ch(S, 0, 1);
    const int im = g.slice_ch(S, 1, 2);
    // tiny floor keeps sqrt differentiable at empty bins
    return g.sqrt_(g.scale(g.add(g.square(re), g.square(im)), 1.0, 1e-24));
}

inline int sum(ad::Graph& g, int x) {
    return g.scale(g.mean(x), double(g.val(x).size()), 0.0);
}

inline int masked_mean(ad::Graph& g, int term, std::vector<double> mask, double count) {
    const int prod = g.mul(term, g.input(std::move(mask)));
    return g.scale(g.mean(prod), double(g.val(prod).size()) / count, 0.0);
}

} // namespace objdetail

// Spectral convergence plus log-magnitude L1 at one resolution. Inputs are
// already perceptually weighted when weighting is on.
inline int mag_loss_node(ad::Graph& g, int xh, int x, const STFTConfig& res) {
    using namespace objdetail;
    const int mh = magnitude(g, g.stft(xh, res.fft_size, res.hop));
    const int mt = magnitude(g, g.stft(x, res.fft_size, res.hop));

    double den = 0.0;
    for (double v : g.val(mt)) den += v * v;
    den = std::sqrt(den);

    const int log_l1 = g.mean(g.abs_(g.sub(g.log_(g.scale(mh, 1.0, 1e-7)), g.log_(g.scale(mt, 1.0, 1e-7)))));
    if (den <= 0.0) return log_l1;
    const int sc = g.scale(g.sqrt_(sum(g, g.square(g.sub(mh, mt)))), 1.0 / den, 0.0);
    return g.add(sc, log_l1);
}

// Anti-wrapped instantaneous-phase, group-delay, and instantaneous-frequency
// terms at one resolution. Bins where either magnitude sits below 1e-8 are
// masked out with stop-gradient masks.
inline int phase_loss_node(ad::Graph& g, int xh, int x, const STFTConfig& res) {
    using namespace objdetail;
    const int Sh = g.stft(xh, res.fft_size, res.hop);
    const int St = g.stft(x, res.fft_size, res.hop);
    const int ph = g.atan2_(g.slice_ch(Sh, 1, 2), g.slice_ch(Sh, 0, 1));
    const int pt = g.atan2_(g.slice_ch(St, 1, 2), g.slice_ch(St, 0, 1));

    const size_t rows = size_t(g.nodes[size_t(ph)].rows), cols = size_t(g.nodes[size_t(ph)].cols);
    const size_t n = rows * cols;
    std::vector<double> mask(n);
    double count = 0.0;
    {
        const auto& vh = g.val(Sh);
        const auto& vt = g.val(St);
        for (size_t i = 0; i < n; ++i) {
            const double ah = std::hypot(vh[i], vh[n + i]);
            const double at = std::hypot(vt[i], vt[n + i]);
            mask[i] = (ah >= 1e-8 && at >= 1e-8) ? 1.0 : 0.0;
            count += mask[i];
        }
    }

    int total = -1;
    auto accumulate = [&](int term) { total = total < 0 ? term : g.add(total, term); };

    if (count > 0.0)
        accumulate(masked_mean(g, g.abs_(g.wrap2pi(g.sub(ph, pt))), mask, count));

    std::vector<double> mask_gd(rows * (cols - 1));
    double count_gd = 0.0;
    for (size_t r = 0; r < rows; ++r)
        for (size_t c = 0; c + 1 < cols; ++c) {
            mask_gd[r * (cols - 1) + c] = mask[r * cols + c] * mask[r * cols + c + 1];
            count_gd += mask_gd[r * (cols - 1) + c];
        }
    if (count_gd > 0.0)
        accumulate(masked_mean(g, g.abs_(g.wrap2pi(g.sub(g.diff_cols(ph), g.diff_cols(pt)))), std::move(mask_gd),
                               count_gd));

    if (rows > 1) {
        std::vector<double> mask_if((rows - 1) * cols);
        double count_if = 0.0;
        for (size_t r = 0; r + 1 < rows; ++r)
            for (size_t c = 0; c < cols; ++c) {
                mask_if[r * cols + c] = mask[r * cols + c] * mask[(r + 1) * cols + c];
                count_if += mask_if[r * cols + c];
            }
        if (count_if > 0.0)
            accumulate(masked_mean(g, g.abs_(g.wrap2pi(g.sub(g.diff_rows(ph), g.diff_rows(pt)))), std::move(mask_if),
                                   count_if));
    }

    return total < 0 ? g.input(std::vector<double>{0.0}) : total;
}

// Builds both aux sums over all resolutions. The magnitude branch sees
// A-weighted signals when enabled; the phase branch never does.
inline void aux_loss_nodes(ad::Graph& g, int xh, const std::vector<double>& x_target,
                           const AuxLossConfig& cfg, double rate, int* mag_total, int* phase_total) {
    cfg.validate();
    if (g.val(xh).size() != x_target.size()) throw DataError("aux loss: length mismatch");
    const int x = g.input(x_target);

    int mh = xh, mt = x;
    if (cfg.a_weighting && mag_total) {
        auto fir = a_weighting_fir(rate);
        const int k = int(fir.size());
        const int taps = g.input(std::move(fir));
        const int zb = g.input(std::vector<double>{0.0});
        mh = g.conv1d(xh, taps, zb, 1, 1, k, 1);
        mt = g.conv1d(x, taps, zb, 1, 1, k, 1);
    }

    int mag = -1, phase = -1;
    for (const auto& res : cfg.resolutions) {
        if (mag_total) {
            const int m = mag_loss_node(g, mh, mt, res);
            mag = mag < 0 ? m : g.add(mag, m);
        }
        if (phase_total) {
            const int p = phase_loss_node(g, xh, x, res);
            phase = phase < 0 ? p : g.add(phase, p);
        }
    }
    if (mag_total) *mag_total = mag;
    if (phase_total) *phase_total = phase;
}

struct FinalLossBreakdown {
    double total = 0.0;
    double bridge = 0.0;
    double mag = 0.0;
    double phase = 0.0;
};

// L_bridge on the scaled pair plus lambda-weighted aux terms on the unscaled
// waveforms. Aux branches with a zero lambda are never built, so the zero-zero
// case reduces bitwise to the bridge loss.
inline int final_loss_node(ad::Graph& g, int pred_scaled, const std::vector<double>& x0_scaled, double s,
                           const AuxLossConfig& cfg, double rate, int* bridge_node = nullptr,
                           int* mag_node = nullptr, int* phase_node = nullptr) {
    if (!(s > 0.0)) throw ConfigError("final loss: scale factor must be positive");
    if (g.val(pred_scaled).size() != x0_scaled.size()) throw DataError("final loss: length mismatch");
    const int bridge = g.mean(g.square(g.sub(pred_scaled, g.input(x0_scaled))));
    if (bridge_node) *bridge_node = bridge;
    if (mag_node) *mag_node = -1;
    if (phase_node) *phase_node = -1;
    if (cfg.lambda_mag == 0.0 && cfg.lambda_phase == 0.0) return bridge;

    // same multiply the scale op performs, so pred == x0 stays exactly zero
    const double inv_s = 1.0 / s;
    const int pred_raw = g.scale(pred_scaled, inv_s, 0.0);
    std::vector<double> x0_raw(x0_scaled.size());
    for (size_t i = 0; i < x0_raw.size(); ++i) x0_raw[i] = x0_scaled[i] * inv_s;

    int mag = -1, phase = -1;
    aux_loss_nodes(g, pred_raw, x0_raw, cfg, rate, cfg.lambda_mag > 0.0 ? &mag : nullptr,
                   cfg.lambda_phase > 0.0 ? &phase : nullptr);
    if (mag_node) *mag_node = mag;
    if (phase_node) *phase_node = phase;

    int total = bridge;
    if (cfg.lambda_mag > 0.0) total = g.add(total, g.scale(mag, cfg.lambda_mag, 0.0));
    if (cfg.lambda_phase > 0.0) total = g.add(total, g.scale(phase, cfg.lambda_phase, 0.0));
    return total;
}

inline double mag_loss(const std::vector<double>& xh, const std::vector<double>& x, const AuxLossConfig& cfg,
                       double rate = 48000.0) {
    cfg.validate();
    if (xh.size() != x.size()) throw DataError("mag loss: length mismatch");
    ad::Graph g;
    int node = -1;
    aux_loss_nodes(g, g.input(xh), x, cfg, rate, &node, nullptr);
    return g.val(node)[0];
}

inline double phase_loss(const std::vector<double>& xh, const std::vector<double>& x, const AuxLossConfig& cfg,
                         double rate = 48000.0) {
    cfg.validate();
    if (xh.size() != x.size()) throw DataError("phase loss: length mismatch");
    ad::Graph g;
    int node = -1;
    aux_loss_nodes(g, g.input(xh), x, cfg, rate, nullptr, &node);
    return g.val(node)[0];
}

inline FinalLossBreakdown final_loss(const std::vector<double>& pred_scaled, const std::vector<double>& x0_scaled,
                                     double s, const AuxLossConfig& cfg, double rate = 48000.0) {
    ad::Graph g;
    int bridge = -1, mag = -1, phase = -1;
    const int total = final_loss_node(g, g.input(pred_scaled), x0_scaled, s, cfg, rate, &bridge, &mag, &phase);
    FinalLossBreakdown out;
    out.total = g.val(total)[0];
    out.bridge = g.val(bridge)[0];
    out.mag = mag >= 0 ? g.val(mag)[0] : 0.0;
    out.phase = phase >= 0 ? g.val(phase)[0] : 0.0;
    return out;
}

} // namespace bridgesr
