#pragma once

#include <string>
#include <vector>

#include "bridgesr/bridge.hpp"
#include "bridgesr/dsp.hpp"
#include "bridgesr/wav.hpp"

namespace bridgesr {

// Degraded corpora live as <stem>.hr.wav / <stem>.lr.wav side by side; the
// manifest path column names the hr file.
inline std::string lr_path_for(const std::string& hr_path) {
    const std::string suffix = ".hr.wav";
    if (hr_path.size() < suffix.size() ||
        hr_path.compare(hr_path.size() - suffix.size(), suffix.size(), suffix) != 0)
        throw DataError("expected a .hr.wav path, got '" + hr_path + "'");
    return hr_path.substr(0, hr_path.size() - suffix.size()) + ".lr.wav";
}

inline std::string pair_stem(const std::string& hr_path) {
    const size_t slash = hr_path.find_last_of('/');
    std::string base = slash == std::string::npos ? hr_path : hr_path.substr(slash + 1);
    const std::string suffix = ".hr.wav";
    if (base.size() >= suffix.size() &&
        base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0)
        base.resize(base.size() - suffix.size());
    return base;
}

inline WaveformPair load_pair(const ManifestEntry& e) {
    const AudioBuffer hr = read_wav(e.path);
    const AudioBuffer lr = read_wav(lr_path_for(e.path));
    WaveformPair pair;
    pair.x_hr = hr.samples;
    pair.x_lr = lr.samples;
    pair.target_rate = hr.rate;
    pair.input_rate = static_cast<int>(e.input_rate);
    pair.cutoff_hz = 0.5 * e.input_rate;
    pair.validate();
    return pair;
}

inline std::vector<WaveformPair> load_corpus(const std::string& manifest_path) {
    const auto entries = read_manifest(manifest_path);
    if (entries.empty()) throw DataError("load_corpus: empty manifest " + manifest_path);
    std::vector<WaveformPair> out;
    out.reserve(entries.size());
    for (const auto& e : entries) out.push_back(load_pair(e));
    return out;
}

}  // namespace bridgesr
