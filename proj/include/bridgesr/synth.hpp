#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bridgesr/rng.hpp"
#include "bridgesr/wav.hpp"

namespace bridgesr {

// Harmonic-stack test signals. The fundamental stays in [380, 500) Hz so one
// period fits inside the network receptive field (48000/380 < 127 samples),
// and every low harmonic n in 1..7 carries a phase-locked partner at n+12,
// which lands above a 4 kHz cutoff for the whole fundamental range. A white
// noise bed keeps every spectrogram bin populated so log-power comparisons
// never bottom out at the floor.
inline std::vector<double> synth_samples(uint64_t seed, size_t n = 33600,
                                         double rate = 48000.0) {
    Rng rng(seed);
    const double f0 = rng.uniform(380.0, 500.0);
    const int k = 2 + static_cast<int>(rng.uniform() * 3.0);

    int avail[7] = {1, 2, 3, 4, 5, 6, 7};
    std::vector<int> harm(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.uniform() * double(7 - i));
        std::swap(avail[i], avail[j]);
        harm[size_t(i)] = avail[i];
    }
    std::vector<double> amp(static_cast<size_t>(k));
    for (auto& a : amp) a = rng.uniform(0.08, 0.18);
    const double phi0 = rng.uniform(0.0, 2.0 * M_PI);

    std::vector<double> x(n, 0.0);
    for (int i = 0; i < k; ++i) {
        const double nn = double(harm[size_t(i)]);
        const double wl = 2.0 * M_PI * nn * f0 / rate;
        const double wh = 2.0 * M_PI * (nn + 12.0) * f0 / rate;
        for (size_t s = 0; s < n; ++s) {
            x[s] += amp[size_t(i)] * std::sin(wl * double(s) + nn * phi0);
            x[s] += 0.7 * amp[size_t(i)] * std::sin(wh * double(s) + (nn + 12.0) * phi0);
        }
    }
    for (auto& v : x) v += 0.02 * rng.normal();

    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.98) {
        const double g = 0.98 / peak;
        for (auto& v : x) v *= g;
    }
    return x;
}

inline AudioBuffer synth_utterance(uint64_t seed, double seconds = 0.7,
                                   double rate = 48000.0) {
    AudioBuffer buf;
    buf.rate = static_cast<int>(rate);
    buf.samples = synth_samples(seed, static_cast<size_t>(std::llround(seconds * rate)), rate);
    return buf;
}

}  // namespace bridgesr
