#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridgesr/dsp.hpp"
#include "bridgesr/errors.hpp"

namespace bridgesr {

enum class LsdBand { Full, Low, High };

struct MetricsReport {
    double lsd = 0.0;
    double lsd_lf = 0.0;
    double lsd_hf = 0.0;
    double si_snr = 0.0;
    double ssim = 0.0;
    double cutoff_hz = 0.0;
};

namespace metricsdetail {

inline std::vector<double> log_power(const Spectrogram& s) {
    std::vector<double> out(s.data.size());
    for (size_t i = 0; i < s.data.size(); ++i) {
        const double p = std::max(std::norm(s.data[i]), 1e-8);
        out[i] = std::log10(p);
    }
    return out;
}

// Bins strictly below the cutoff bin are LF; the cutoff bin and above are HF.
inline size_t cutoff_bin(double cutoff_hz, double rate, size_t fft_size) {
    return static_cast<size_t>(std::llround(cutoff_hz * double(fft_size) / rate));
}

}  // namespace metricsdetail

inline double lsd(const std::vector<double>& xh, const std::vector<double>& x,
                  LsdBand band = LsdBand::Full, double cutoff_hz = 0.0,
                  double rate = 48000.0, const STFTConfig& cfg = {}) {
    if (xh.size() != x.size()) throw DataError("lsd: length mismatch");
    const Spectrogram sh = stft(xh, cfg);
    const Spectrogram st = stft(x, cfg);
    const std::vector<double> lh = metricsdetail::log_power(sh);
    const std::vector<double> lt = metricsdetail::log_power(st);

    size_t b0 = 0, b1 = sh.bins;
    if (band != LsdBand::Full) {
        const size_t bc = metricsdetail::cutoff_bin(cutoff_hz, rate, cfg.fft_size);
        if (band == LsdBand::Low) {
            b1 = std::min(bc, sh.bins);
        } else {
            b0 = std::min(bc, sh.bins);
        }
        if (b0 >= b1) throw DataError("lsd: cutoff leaves an empty band");
    }

    double acc = 0.0;
    for (size_t f = 0; f < sh.frames; ++f) {
        double m = 0.0;
        for (size_t b = b0; b < b1; ++b) {
            const double d = lh[f * sh.bins + b] - lt[f * st.bins + b];
            m += d * d;
        }
        acc += std::sqrt(m / double(b1 - b0));
    }
    return acc / double(sh.frames);
}

inline double si_snr(const std::vector<double>& xh, const std::vector<double>& x) {
    if (xh.size() != x.size()) throw DataError("si_snr: length mismatch");
    if (x.empty()) throw DataError("si_snr: empty input");
    const size_t n = x.size();
    double mh = 0.0, mt = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mh += xh[i];
        mt += x[i];
    }
    mh /= double(n);
    mt /= double(n);

    double dot = 0.0, pt = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double a = xh[i] - mh;
        const double b = x[i] - mt;
        dot += a * b;
        pt += b * b;
    }
    if (pt == 0.0) throw DataError("si_snr: reference is all zero");

    const double a = dot / pt;
    double ps = 0.0, pr = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double s = a * (x[i] - mt);
        const double r = (xh[i] - mh) - s;
        ps += s * s;
        pr += r * r;
    }
    if (pr == 0.0) return 100.0;
    const double db = 10.0 * std::log10(ps / pr);
    return std::clamp(db, -100.0, 100.0);
}

inline double ssim_spec(const std::vector<double>& xh, const std::vector<double>& x,
                        const STFTConfig& cfg = {}) {
    if (xh.size() != x.size()) throw DataError("ssim_spec: length mismatch");
    const Spectrogram sh = stft(xh, cfg);
    const Spectrogram st = stft(x, cfg);
    std::vector<double> lh = metricsdetail::log_power(sh);
    std::vector<double> lt = metricsdetail::log_power(st);

    // Joint min-max normalization: both images share one affine map so that
    // identical inputs land on identical pixels.
    double lo = lh[0], hi = lh[0];
    for (double v : lh) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : lt) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double range = std::max(hi - lo, 1e-6);
    for (double& v : lh) v = (v - lo) / range;
    for (double& v : lt) v = (v - lo) / range;

    const size_t R = sh.frames, C = sh.bins;
    constexpr size_t W = 7;
    if (R < W || C < W) throw DataError("ssim_spec: spectrogram smaller than the 7x7 window");
    constexpr double c1 = 0.01 * 0.01;  // (k1 * L)^2 with L = 1 after normalization
    constexpr double c2 = 0.03 * 0.03;
    const double nw = double(W * W);

    double acc = 0.0;
    size_t count = 0;
    for (size_t r = 0; r + W <= R; ++r) {
        for (size_t c = 0; c + W <= C; ++c) {
            double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (size_t i = 0; i < W; ++i) {
                for (size_t j = 0; j < W; ++j) {
                    const double a = lh[(r + i) * C + (c + j)];
                    const double b = lt[(r + i) * C + (c + j)];
                    sx += a;
                    sy += b;
                    sxx += a * a;
                    syy += b * b;
                    sxy += a * b;
                }
            }
            const double ux = sx / nw, uy = sy / nw;
            const double vx = sxx / nw - ux * ux;
            const double vy = syy / nw - uy * uy;
            const double cxy = sxy / nw - ux * uy;
            acc += (2.0 * ux * uy + c1) * (2.0 * cxy + c2) /
                   ((ux * ux + uy * uy + c1) * (vx + vy + c2));
            ++count;
        }
    }
    return acc / double(count);
}

inline MetricsReport evaluate_pair(const std::vector<double>& xh, const std::vector<double>& x,
                                   double cutoff_hz, double rate = 48000.0,
                                   const STFTConfig& cfg = {}) {
    MetricsReport r;
    r.lsd = lsd(xh, x, LsdBand::Full, 0.0, rate, cfg);
    r.lsd_lf = lsd(xh, x, LsdBand::Low, cutoff_hz, rate, cfg);
    r.lsd_hf = lsd(xh, x, LsdBand::High, cutoff_hz, rate, cfg);
    r.si_snr = si_snr(xh, x);
    r.ssim = ssim_spec(xh, x, cfg);
    r.cutoff_hz = cutoff_hz;
    return r;
}

inline MetricsReport aggregate(const std::vector<MetricsReport>& rs) {
    if (rs.empty()) throw DataError("aggregate: no reports");
    MetricsReport m;
    for (const auto& r : rs) {
        m.lsd += r.lsd;
        m.lsd_lf += r.lsd_lf;
        m.lsd_hf += r.lsd_hf;
        m.si_snr += r.si_snr;
        m.ssim += r.ssim;
        m.cutoff_hz += r.cutoff_hz;
    }
    const double n = double(rs.size());
    m.lsd /= n;
    m.lsd_lf /= n;
    m.lsd_hf /= n;
    m.si_snr /= n;
    m.ssim /= n;
    m.cutoff_hz /= n;
    return m;
}

inline std::string report_json(const MetricsReport& r, size_t n) {
    nlohmann::json j;
    j["lsd"] = r.lsd;
    j["lsd_lf"] = r.lsd_lf;
    j["lsd_hf"] = r.lsd_hf;
    j["si_snr"] = r.si_snr;
    j["ssim"] = r.ssim;
    j["n"] = n;
    return j.dump(2) + "\n";
}

inline MetricsReport report_from_json(const std::string& text, size_t* n = nullptr) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw DataError(std::string("report_from_json: ") + e.what());
    }
    MetricsReport r;
    try {
        r.lsd = j.at("lsd").get<double>();
        r.lsd_lf = j.at("lsd_lf").get<double>();
        r.lsd_hf = j.at("lsd_hf").get<double>();
        r.si_snr = j.at("si_snr").get<double>();
        r.ssim = j.at("ssim").get<double>();
        if (n) *n = j.at("n").get<size_t>();
    } catch (const std::exception& e) {
        throw DataError(std::string("report_from_json: missing field: ") + e.what());
    }
    return r;
}

}  // namespace bridgesr
