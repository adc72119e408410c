#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstddef>
#include <vector>

#include "bridgesr/infer.hpp"
#include "bridgesr/network.hpp"
#include "bridgesr/rng.hpp"

using namespace bridgesr;

namespace {

// init() zeroes the head, which would make every output equal x_T and hide
// stitching bugs; perturb all weights so activations actually reach the output.
TinyWaveNet rough_net(uint64_t seed) {
    TinyWaveNet net;
    Rng rng(seed);
    net.init(rng);
    for (auto& e : net.entries())
        for (auto& v : e.data) v += 0.05 * rng.normal();
    return net;
}

std::vector<double> noise(size_t n, uint64_t seed, double amp) {
    Rng rng(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = amp * rng.normal();
    return x;
}

size_t mismatches(const std::vector<double>& a, const std::vector<double>& b) {
    size_t bad = 0;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i] != b[i]) ++bad;
    return bad;
}

}  // namespace

TEST_CASE("chunked inference reproduces the whole-signal forward bitwise") {
    const TinyWaveNet net = rough_net(41);
    const size_t n = 3000;
    const auto xt = noise(n, 7, 1.0);
    const auto xT = noise(n, 8, 0.5);

    const std::vector<double> whole = net.predict(xt, 0.37, xT);
    REQUIRE(whole.size() == n);

    // Chunk shorter than the signal: boundaries fall mid-signal and the halo
    // must supply every sample inside the receptive field.
    const ChunkedNetworkDenoiser chunked(net, 500);
    const std::vector<double> piecewise = chunked.predict(xt, 0.37, xT);
    REQUIRE(piecewise.size() == n);
    REQUIRE(mismatches(piecewise, whole) == 0);

    // Ragged tail: last chunk shorter than the chunk length.
    const ChunkedNetworkDenoiser ragged(net, 1100);
    REQUIRE(mismatches(ragged.predict(xt, 0.37, xT), whole) == 0);
}

TEST_CASE("chunked inference delegates for short inputs") {
    const TinyWaveNet net = rough_net(42);
    const size_t n = 600;
    const auto xt = noise(n, 9, 1.0);
    const auto xT = noise(n, 10, 0.5);
    const ChunkedNetworkDenoiser chunked(net, 500);
    // 600 <= 500 + 2*63, so the whole signal goes through in one call.
    const std::vector<double> whole = net.predict(xt, 0.8, xT);
    REQUIRE(mismatches(chunked.predict(xt, 0.8, xT), whole) == 0);
}

TEST_CASE("chunked inference at the default chunk length") {
    const TinyWaveNet net = rough_net(43);
    // Just over the single-call threshold: one interior boundary.
    const size_t n = 16384 + 127 + 10;
    const auto xt = noise(n, 11, 1.0);
    const auto xT = noise(n, 12, 0.5);
    const ChunkedNetworkDenoiser chunked(net);
    const std::vector<double> whole = net.predict(xt, 0.2, xT);
    REQUIRE(mismatches(chunked.predict(xt, 0.2, xT), whole) == 0);
}
