#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bridgesr/bridge.hpp"
#include "bridgesr/errors.hpp"
#include "bridgesr/fft.hpp"
#include "bridgesr/rng.hpp"
#include "bridgesr/wav.hpp"

namespace bridgesr {

enum class FilterFamily { Butterworth, Chebyshev1, BrickwallFft };

inline std::string to_string(FilterFamily f) {
    switch (f) {
        case FilterFamily::Butterworth: return "butterworth";
        case FilterFamily::Chebyshev1: return "chebyshev1";
        case FilterFamily::BrickwallFft: return "brickwall-fft";
    }
    return "?";
}

inline FilterFamily family_from_string(const std::string& s) {
    if (s == "butterworth") return FilterFamily::Butterworth;
    if (s == "chebyshev1") return FilterFamily::Chebyshev1;
    if (s == "brickwall-fft") return FilterFamily::BrickwallFft;
    throw ConfigError("unknown filter family: " + s);
}

struct DegradationSpec {
    FilterFamily family = FilterFamily::BrickwallFft;
    int order = 8; // ignored for brickwall
    double input_rate = 8000.0;

    double cutoff() const { return 0.5 * input_rate; }

    void validate(double target_rate) const {
        if (!(input_rate > 0.0)) throw ConfigError("degradation: input_rate must be positive");
        if (input_rate > target_rate) throw DataError("degradation: input_rate exceeds target rate");
        if (family != FilterFamily::BrickwallFft && (order < 2 || order > 10 || order % 2 != 0))
            throw ConfigError("degradation: order must be even and in [2, 10]");
    }
};

// index mirrored into [0, n) without repeating the edge sample
inline size_t reflect_index(long long i, long long n) {
    if (n <= 1) return 0;
    const long long period = 2 * (n - 1);
    long long m = i % period;
    if (m < 0) m += period;
    return size_t(m < n ? m : period - m);
}

struct Biquad {
    double b0, b1, b2, a1, a2;
};

// Cascade of causal second-order sections from a continuous-time lowpass
// prototype, discretized by the bilinear transform with frequency prewarping.
inline std::vector<Biquad> lowpass_cascade(FilterFamily family, int order, double cutoff_hz, double rate) {
    if (order < 2 || order % 2 != 0) throw ConfigError("lowpass_cascade: order must be even and >= 2");
    if (!(cutoff_hz > 0.0) || cutoff_hz >= 0.5 * rate) throw ConfigError("lowpass_cascade: cutoff out of range");
    const int n2 = order / 2;
    const double W = std::tan(M_PI * cutoff_hz / rate);

    double dc_gain = 1.0;
    std::vector<double> B(n2), C(n2);
    if (family == FilterFamily::Butterworth) {
        for (int m = 0; m < n2; ++m) {
            const double theta = M_PI * double(2 * m + 1) / double(2 * order);
            B[m] = 2.0 * std::sin(theta);
            C[m] = 1.0;
        }
    } else if (family == FilterFamily::Chebyshev1) {
        const double ripple_db = 1.0;
        const double eps = std::sqrt(std::pow(10.0, ripple_db / 10.0) - 1.0);
        const double a = std::asinh(1.0 / eps) / double(order);
        for (int m = 0; m < n2; ++m) {
            const double theta = M_PI * double(2 * m + 1) / double(2 * order);
            const double re = std::sinh(a) * std::sin(theta);
            const double im = std::cosh(a) * std::cos(theta);
            B[m] = 2.0 * re;
            C[m] = re * re + im * im;
        }
        dc_gain = 1.0 / std::sqrt(1.0 + eps * eps); // even order: DC sits at the ripple bottom
    } else {
        throw ConfigError("lowpass_cascade: brickwall has no biquad form");
    }

    std::vector<Biquad> out(static_cast<size_t>(n2));
    for (int m = 0; m < n2; ++m) {
        const double a0 = 1.0 + B[m] * W + C[m] * W * W;
        const double k = C[m] * W * W * (m == 0 ? dc_gain : 1.0);
        out[size_t(m)] = {k / a0, 2.0 * k / a0, k / a0,
                          (-2.0 + 2.0 * C[m] * W * W) / a0,
                          (1.0 - B[m] * W + C[m] * W * W) / a0};
    }
    return out;
}

inline std::vector<double> apply_cascade(const std::vector<double>& x, const std::vector<Biquad>& cascade) {
    std::vector<double> y = x;
    for (const auto& q : cascade) {
        double s1 = 0.0, s2 = 0.0;
        for (double& v : y) {
            const double in = v;
            v = q.b0 * in + s1;
            s1 = q.b1 * in - q.a1 * v + s2;
            s2 = q.b2 * in - q.a2 * v;
        }
    }
    return y;
}

// Zero-phase lowpass: zero every FFT bin above the cutoff. The signal is
// reflect-padded to a power of two so the transform stays fast.
inline std::vector<double> brickwall_lowpass(const std::vector<double>& x, double cutoff_hz, double rate) {
    const size_t n = x.size();
    if (n == 0) return {};
    size_t m = 1;
    while (m < n) m <<= 1;
    std::vector<double> padded(m);
    for (size_t i = 0; i < m; ++i)
        padded[i] = i < n ? x[i] : x[reflect_index((long long)i, (long long)n)];
    auto spec = fft::rfft(padded);
    for (size_t k = 0; k < spec.size(); ++k) {
        const double f = double(k) * rate / double(m);
        if (f > cutoff_hz * (1.0 + 1e-12)) spec[k] = 0.0;
    }
    auto y = fft::irfft(spec, m);
    y.resize(n);
    return y;
}

namespace detail_resample {

inline double bessel_i0(double x) {
    const double h = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 64; ++k) {
        term *= h / double(k * k);
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

inline constexpr double kKaiserBeta = 10.0;

inline const std::vector<double>& kaiser_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(8193);
        const double inv = 1.0 / bessel_i0(kKaiserBeta);
        for (size_t i = 0; i < t.size(); ++i) {
            const double u = double(i) / double(t.size() - 1);
            t[i] = bessel_i0(kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - u * u))) * inv;
        }
        return t;
    }();
    return table;
}

inline double kaiser(double u) { // u in [-1, 1]
    const auto& t = kaiser_table();
    const double p = std::abs(u) * double(t.size() - 1);
    const size_t i = std::min(t.size() - 2, size_t(p));
    const double fr = p - double(i);
    return t[i] + fr * (t[i + 1] - t[i]);
}

} // namespace detail_resample

// Windowed-sinc resampler. Anti-aliasing cutoff at the lower of the two
// Nyquist rates; reflect extension at the edges. Exact passthrough when the
// rates match.
inline std::vector<double> resample_sinc(const std::vector<double>& x, double src_rate, double dst_rate,
                                         size_t out_len, int half_taps = 32) {
    if (!(src_rate > 0.0) || !(dst_rate > 0.0)) throw ConfigError("resample: rates must be positive");
    const long long n = (long long)x.size();
    if (n == 0) return std::vector<double>(out_len, 0.0);

    const double step = src_rate / dst_rate;          // source samples per output sample
    const double c = std::min(1.0, dst_rate / src_rate); // cutoff relative to source Nyquist
    const double W = double(half_taps) / c;

    std::vector<double> y(out_len);
    for (size_t i = 0; i < out_len; ++i) {
        const double tau = double(i) * step;
        const long long k0 = (long long)std::ceil(tau - W);
        const long long k1 = (long long)std::floor(tau + W);
        double acc = 0.0;
        for (long long k = k0; k <= k1; ++k) {
            const double u = tau - double(k);
            const double s = M_PI * c * u;
            const double sinc = std::abs(s) < 1e-12 ? 1.0 : std::sin(s) / s;
            acc += x[reflect_index(k, n)] * c * sinc * detail_resample::kaiser(u / W);
        }
        y[i] = acc;
    }
    return y;
}

inline WaveformPair degrade(const AudioBuffer& x_hr, const DegradationSpec& spec, Rng& rng) {
    (void)rng; // all randomness lives in the spec draw
    x_hr.validate();
    spec.validate(x_hr.rate);
    const double cutoff = spec.cutoff();

    if (spec.input_rate == x_hr.rate) {
        // cutoff sits at Nyquist: nothing to remove, keep the pair exact
        WaveformPair pair;
        pair.x_hr = x_hr.samples;
        pair.x_lr = x_hr.samples;
        pair.target_rate = x_hr.rate;
        pair.input_rate = spec.input_rate;
        pair.cutoff_hz = cutoff;
        return pair;
    }

    std::vector<double> filtered;
    if (spec.family == FilterFamily::BrickwallFft) {
        filtered = brickwall_lowpass(x_hr.samples, cutoff, x_hr.rate);
    } else {
        // bilinear design needs the corner strictly below Nyquist
        const double design_cutoff = std::min(cutoff, 0.499 * x_hr.rate);
        filtered = apply_cascade(x_hr.samples, lowpass_cascade(spec.family, spec.order, design_cutoff, x_hr.rate));
    }

    const size_t n_lo = size_t(std::llround(double(filtered.size()) * spec.input_rate / x_hr.rate));
    const auto low = resample_sinc(filtered, x_hr.rate, spec.input_rate, std::max<size_t>(1, n_lo));
    std::vector<double> lr = resample_sinc(low, spec.input_rate, x_hr.rate, x_hr.samples.size());

    WaveformPair pair;
    pair.x_hr = x_hr.samples;
    pair.x_lr = std::move(lr);
    pair.target_rate = x_hr.rate;
    pair.input_rate = spec.input_rate;
    pair.cutoff_hz = cutoff;
    return pair;
}

// Training-time degradation menu: random family, even order 2..10, integer
// input rate uniform on [6 kHz, 48 kHz].
inline DegradationSpec random_degradation_spec(Rng& rng, double target_rate = 48000.0) {
    DegradationSpec spec;
    const int fam = std::min(2, int(rng.uniform() * 3.0));
    spec.family = fam == 0 ? FilterFamily::Butterworth : fam == 1 ? FilterFamily::Chebyshev1 : FilterFamily::BrickwallFft;
    spec.order = 2 * (1 + std::min(4, int(rng.uniform() * 5.0)));
    const double lo = 6000.0, hi = std::min(48000.0, target_rate);
    spec.input_rate = double((long long)(lo + rng.uniform() * (hi - lo + 1.0)));
    spec.input_rate = std::min(hi, std::max(lo, spec.input_rate));
    return spec;
}

// Fixed degradation for reproducible evaluation: a Butterworth anti-alias
// filter, so the passthrough baseline carries realistic in-band coloration
// rather than the near-zero LF error of an ideal brickwall.
inline DegradationSpec eval_degradation_spec(double input_rate) {
    DegradationSpec spec;
    spec.family = FilterFamily::Butterworth;
    spec.order = 4;
    spec.input_rate = input_rate;
    return spec;
}

struct STFTConfig {
    int fft_size = 2048;
    int hop = 512;

    void validate() const {
        if (fft_size <= 0 || hop <= 0 || fft_size % hop != 0)
            throw ConfigError("stft: hop must divide fft_size");
    }
};

struct Spectrogram {
    size_t frames = 0;
    size_t bins = 0;
    std::vector<std::complex<double>> data; // frame-major

    std::complex<double>& at(size_t f, size_t b) { return data[f * bins + b]; }
    const std::complex<double>& at(size_t f, size_t b) const { return data[f * bins + b]; }
};

// Reflect-centered STFT: frame f covers [f*hop - fft/2, f*hop + fft/2) of the
// input, frames = floor(n/hop) + 1, bins = fft/2 + 1.
inline Spectrogram stft(const std::vector<double>& x, const STFTConfig& cfg = {}) {
    cfg.validate();
    const long long n = (long long)x.size();
    if (n < cfg.fft_size) throw DataError("stft: input shorter than fft size");
    const size_t frames = size_t(n / cfg.hop) + 1;
    const size_t bins = size_t(cfg.fft_size) / 2 + 1;
    const auto win = fft::hann(size_t(cfg.fft_size));
    const long long pad = cfg.fft_size / 2;

    Spectrogram S;
    S.frames = frames;
    S.bins = bins;
    S.data.resize(frames * bins);
    std::vector<double> buf(size_t(cfg.fft_size));
    for (size_t f = 0; f < frames; ++f) {
        const long long start = (long long)f * cfg.hop - pad;
        for (int j = 0; j < cfg.fft_size; ++j)
            buf[size_t(j)] = x[reflect_index(start + j, n)] * win[size_t(j)];
        const auto spec = fft::rfft(buf);
        std::copy(spec.begin(), spec.end(), S.data.begin() + (long long)(f * bins));
    }
    return S;
}

// Overlap-add inverse with window-square normalization. Reconstructs
// [0, (frames-1)*hop) of the original signal; out_len can trim further.
inline std::vector<double> istft(const Spectrogram& S, const STFTConfig& cfg = {}, size_t out_len = 0) {
    cfg.validate();
    const size_t bins = size_t(cfg.fft_size) / 2 + 1;
    if (S.bins != bins || S.frames == 0 || S.data.size() != S.frames * S.bins)
        throw DataError("istft: spectrogram shape does not match the config");
    const auto win = fft::hann(size_t(cfg.fft_size));
    const size_t padded_len = (S.frames - 1) * size_t(cfg.hop) + size_t(cfg.fft_size);
    std::vector<double> acc(padded_len, 0.0), wsq(padded_len, 0.0);

    fft::cvec spec(bins);
    for (size_t f = 0; f < S.frames; ++f) {
        std::copy(S.data.begin() + (long long)(f * bins), S.data.begin() + (long long)((f + 1) * bins), spec.begin());
        const auto frame = fft::irfft(spec, size_t(cfg.fft_size));
        const size_t start = f * size_t(cfg.hop);
        for (int j = 0; j < cfg.fft_size; ++j) {
            acc[start + size_t(j)] += frame[size_t(j)] * win[size_t(j)];
            wsq[start + size_t(j)] += win[size_t(j)] * win[size_t(j)];
        }
    }

    const size_t full = (S.frames - 1) * size_t(cfg.hop);
    const size_t want = out_len == 0 ? full : out_len;
    if (want > full) throw DataError("istft: requested length exceeds the frame coverage");
    const size_t pad = size_t(cfg.fft_size) / 2;
    std::vector<double> y(want);
    for (size_t i = 0; i < want; ++i) {
        const double w = wsq[i + pad];
        y[i] = w > 1e-12 ? acc[i + pad] / w : 0.0;
    }
    return y;
}

struct ManifestEntry {
    std::string path;
    double input_rate = 8000.0;
    FilterFamily family = FilterFamily::BrickwallFft;
    int order = 8;
    uint64_t seed = 0;
};

inline void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("write_manifest: cannot open " + path);
    f << "path,input_rate,family,order,seed\n";
    for (const auto& e : entries)
        f << e.path << ',' << (long long)std::llround(e.input_rate) << ',' << to_string(e.family) << ','
          << e.order << ',' << e.seed << '\n';
    if (!f) throw DataError("write_manifest: write failed for " + path);
}

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("read_manifest: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != "path,input_rate,family,order,seed")
        throw DataError("read_manifest: bad header in " + path);
    std::vector<ManifestEntry> out;
    size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string p, rate_s, fam_s, order_s, seed_s;
        if (!std::getline(ss, p, ',') || !std::getline(ss, rate_s, ',') || !std::getline(ss, fam_s, ',') ||
            !std::getline(ss, order_s, ',') || !std::getline(ss, seed_s))
            throw DataError("read_manifest: malformed line " + std::to_string(lineno) + " in " + path);
        ManifestEntry e;
        e.path = p;
        try {
            e.input_rate = std::stod(rate_s);
            e.order = std::stoi(order_s);
            e.seed = std::stoull(seed_s);
            e.family = family_from_string(fam_s);
        } catch (const DataError&) {
            throw;
        } catch (const std::exception&) {
            throw DataError("read_manifest: malformed line " + std::to_string(lineno) + " in " + path);
        }
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace bridgesr
