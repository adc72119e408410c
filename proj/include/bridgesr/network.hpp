#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "bridgesr/autodiff.hpp"
#include "bridgesr/denoiser.hpp"
#include "bridgesr/errors.hpp"
#include "bridgesr/rng.hpp"

namespace bridgesr {

struct TinyWaveNetConfig {
    int channels = 16;
    std::vector<int> dilations = {1, 2, 4, 8, 16, 32};
    int kernel = 3;
    int temb_dim = 64;

    int layers() const { return int(dilations.size()); }
    int receptive_field() const {
        int acc = 1;
        for (int d : dilations) acc += (kernel - 1) * d;
        return acc;
    }
};

// Dilated gated conv stack over two input channels (x_t, x_T); t enters as a
// sinusoidal embedding -> per-layer channel bias. Output head is zero-initialized
// so the untrained net is the identity on x_T.
class TinyWaveNet {
public:
    struct Entry {
        std::string name;
        std::vector<int> shape;
        ad::Tensor data;
    };

    explicit TinyWaveNet(TinyWaveNetConfig cfg = {}) : cfg_(cfg) {
        const int C = cfg_.channels, K = cfg_.kernel, E = cfg_.temb_dim;
        push("in.w", {C, 2, 1});
        push("in.b", {C});
        for (int l = 0; l < cfg_.layers(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            push(p + "conv.w", {2 * C, C, K});
            push(p + "conv.b", {2 * C});
            push(p + "temb.w", {2 * C, E});
            push(p + "temb.b", {2 * C});
            push(p + "res.w", {C, C, 1});
            push(p + "res.b", {C});
            push(p + "skip.w", {C, C, 1});
            push(p + "skip.b", {C});
        }
        push("out1.w", {C, C, 1});
        push("out1.b", {C});
        push("out2.w", {1, C, 1});
        push("out2.b", {1});
    }

    const TinyWaveNetConfig& config() const { return cfg_; }
    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    size_t param_count() const {
        size_t n = 0;
        for (const auto& e : entries_) n += e.data.size();
        return n;
    }

    // Closed form for the default topology; asserted against param_count().
    size_t expected_param_count() const {
        const size_t C = size_t(cfg_.channels), K = size_t(cfg_.kernel), E = size_t(cfg_.temb_dim);
        const size_t per_layer = 2 * C * C * K + 2 * C + 2 * C * E + 2 * C + (C * C + C) * 2;
        return (2 * C + C) + size_t(cfg_.layers()) * per_layer + (C * C + C) + (C + 1);
    }

    void init(Rng& rng) {
        for (auto& e : entries_) {
            const bool is_weight = e.name.size() >= 2 && e.name.substr(e.name.size() - 2) == ".w";
            if (!is_weight || e.name == "out2.w") {
                std::fill(e.data.begin(), e.data.end(), 0.0);
                continue;
            }
            size_t fan_in = 1;
            for (size_t i = 1; i < e.shape.size(); ++i) fan_in *= size_t(e.shape[i]);
            const double sd = 1.0 / std::sqrt(double(fan_in));
            for (auto& v : e.data) v = sd * rng.normal();
        }
    }

    std::vector<double> time_embedding(double t) const {
        const int half = cfg_.temb_dim / 2;
        std::vector<double> emb(size_t(cfg_.temb_dim));
        for (int i = 0; i < half; ++i) {
            const double freq = std::pow(10.0, 4.0 * double(i) / double(half - 1));
            emb[size_t(2 * i)] = std::sin(freq * t);
            emb[size_t(2 * i + 1)] = std::cos(freq * t);
        }
        return emb;
    }

    // Builds the forward pass on g; returns the x0_hat node. When train is set,
    // parameters are registered as gradient leaves and their node ids are stored
    // in param_nodes (aligned with entries()).
    int forward(ad::Graph& g, int x_t, int x_T, double t, bool train,
                std::vector<int>* param_nodes = nullptr) const {
        const int C = cfg_.channels, K = cfg_.kernel, E = cfg_.temb_dim;
        std::vector<int> ids(entries_.size());
        for (size_t i = 0; i < entries_.size(); ++i)
            ids[i] = train ? g.param(entries_[i].data) : g.input(entries_[i].data);
        if (param_nodes) *param_nodes = ids;

        auto id = [&](const std::string& name) {
            for (size_t i = 0; i < entries_.size(); ++i)
                if (entries_[i].name == name) return ids[i];
            throw NumericError("unknown tensor " + name);
        };

        const int emb = g.input(time_embedding(t));
        const int x = g.concat_ch(x_t, x_T);
        int h = g.conv1d(x, id("in.w"), id("in.b"), 2, C, 1, 1);
        int skips = -1;
        for (int l = 0; l < cfg_.layers(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            int z = g.conv1d(h, id(p + "conv.w"), id(p + "conv.b"), C, 2 * C, K, cfg_.dilations[size_t(l)]);
            const int tb = g.affine(id(p + "temb.w"), emb, id(p + "temb.b"), 2 * C, E);
            z = g.add_ch_bias(z, tb);
            const int gate = g.mul(g.tanh_(g.slice_ch(z, 0, C)), g.sigmoid(g.slice_ch(z, C, 2 * C)));
            h = g.add(h, g.conv1d(gate, id(p + "res.w"), id(p + "res.b"), C, C, 1, 1));
            const int sk = g.conv1d(gate, id(p + "skip.w"), id(p + "skip.b"), C, C, 1, 1);
            skips = skips < 0 ? sk : g.add(skips, sk);
        }
        int y = g.tanh_(skips);
        y = g.conv1d(y, id("out1.w"), id("out1.b"), C, C, 1, 1);
        y = g.tanh_(y);
        y = g.conv1d(y, id("out2.w"), id("out2.b"), C, 1, 1, 1);
        return g.add(x_T, y);
    }

    std::vector<double> predict(const std::vector<double>& x_t, double t,
                                const std::vector<double>& x_T) const {
        if (x_t.size() != x_T.size()) throw DataError("network input length mismatch");
        ad::Graph g;
        const int a = g.input(x_t);
        const int b = g.input(x_T);
        const int out = forward(g, a, b, t, false);
        return g.val(out);
    }

    Entry* find(const std::string& name) {
        for (auto& e : entries_)
            if (e.name == name) return &e;
        return nullptr;
    }

private:
    void push(const std::string& name, std::vector<int> shape) {
        size_t n = 1;
        for (int d : shape) n *= size_t(d);
        entries_.push_back({name, std::move(shape), ad::Tensor(n, 0.0)});
    }

    TinyWaveNetConfig cfg_;
    std::vector<Entry> entries_;
};

class NetworkDenoiser : public Denoiser {
public:
    explicit NetworkDenoiser(const TinyWaveNet& net) : net_(net) {}
    std::vector<double> predict(const std::vector<double>& x_t, double t,
                                const std::vector<double>& x_T) const override {
        return net_.predict(x_t, t, x_T);
    }

private:
    const TinyWaveNet& net_;
};

} // namespace bridgesr
