#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "bridgesr/denoiser.hpp"
#include "bridgesr/network.hpp"

namespace bridgesr {

// Runs the network on overlapping chunks. Output samples depend on at most
// receptive_field / 2 neighbors per side, so a halo that wide makes the
// chunked result bitwise equal to a whole-signal pass while bounding the
// graph memory for long utterances.
class ChunkedNetworkDenoiser : public Denoiser {
public:
    explicit ChunkedNetworkDenoiser(const TinyWaveNet& net, size_t chunk_len = 16384)
        : net_(&net), chunk_(chunk_len) {}

    std::vector<double> predict(const std::vector<double>& x_t, double t,
                                const std::vector<double>& x_T) const override {
        const size_t n = x_t.size();
        const size_t halo = static_cast<size_t>(net_->config().receptive_field() / 2);
        if (chunk_ == 0 || n <= chunk_ + 2 * halo) return net_->predict(x_t, t, x_T);
        std::vector<double> out(n);
        for (size_t start = 0; start < n; start += chunk_) {
            const size_t end = std::min(n, start + chunk_);
            const size_t lo = start > halo ? start - halo : 0;
            const size_t hi = std::min(n, end + halo);
            const std::vector<double> xt_c(x_t.begin() + long(lo), x_t.begin() + long(hi));
            const std::vector<double> xT_c(x_T.begin() + long(lo), x_T.begin() + long(hi));
            const std::vector<double> y = net_->predict(xt_c, t, xT_c);
            std::copy(y.begin() + long(start - lo), y.begin() + long(start - lo + end - start),
                      out.begin() + long(start));
        }
        return out;
    }

private:
    const TinyWaveNet* net_;
    size_t chunk_;
};

}  // namespace bridgesr
