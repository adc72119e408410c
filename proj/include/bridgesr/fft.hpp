#pragma once

#include <complex>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace bridgesr::fft {

using cvec = std::vector<std::complex<double>>;

inline Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> f;
    return f;
}

inline cvec forward(const cvec& x) {
    cvec out;
    engine().fwd(out, x);
    return out;
}

inline cvec inverse(const cvec& x) {
    cvec out;
    engine().inv(out, x);
    return out;
}

// Real input, one-sided output (n/2+1 bins).
inline cvec rfft(const std::vector<double>& x) {
    cvec in(x.size());
    for (size_t i = 0; i < x.size(); ++i) in[i] = {x[i], 0.0};
    cvec full = forward(in);
    full.resize(x.size() / 2 + 1);
    return full;
}

// One-sided bins back to a real signal of length n.
inline std::vector<double> irfft(const cvec& bins, size_t n) {
    cvec full(n);
    for (size_t k = 0; k < bins.size() && k < n; ++k) full[k] = bins[k];
    for (size_t k = 1; k + 1 <= n - k && n - k < n; ++k) {
        if (k < bins.size()) full[n - k] = std::conj(bins[k]);
    }
    cvec t = inverse(full);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = t[i].real();
    return out;
}

// Periodic Hann window.
inline std::vector<double> hann(size_t n) {
    std::vector<double> w(n);
    const double pi = 3.14159265358979323846;
    for (size_t i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * pi * double(i) / double(n));
    return w;
}

} // namespace bridgesr::fft
