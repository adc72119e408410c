#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "bridgesr/bridge.hpp"
#include "bridgesr/config.hpp"
#include "bridgesr/network.hpp"
#include "bridgesr/objective.hpp"
#include "bridgesr/optim.hpp"
#include "bridgesr/rng.hpp"

namespace bridgesr {

struct TrainStepLog {
    int step = 0;
    double bridge = 0.0;
    double mag = 0.0;
    double phase = 0.0;
    bool applied = true;
};

namespace traindetail {

struct ItemResult {
    double bridge = 0.0, mag = 0.0, phase = 0.0, total = 0.0;
    double t = 0.0, xt_norm = 0.0;
    std::vector<ad::Tensor> grads;
};

}  // namespace traindetail

// One optimizer step over batch_size random crops. Deterministic given
// (run_seed, step): every draw comes from a stream derived from that pair,
// and gradients are reduced in batch order regardless of thread scheduling.
inline TrainStepLog train_step(TinyWaveNet& net, Adam& opt,
                               const std::vector<WaveformPair>& corpus,
                               ScaleFactor s, const Config& cfg,
                               const AuxLossConfig& aux, int step, uint64_t run_seed) {
    if (corpus.empty()) throw DataError("train_step: empty corpus");
    const size_t batch = static_cast<size_t>(cfg.train.batch_size);
    const uint64_t step_seed = Rng::derive(run_seed, static_cast<uint64_t>(step));
    const double rate = double(corpus[0].target_rate);

    size_t window = static_cast<size_t>(cfg.train.window_len);
    for (const auto& p : corpus) window = std::min(window, p.x_hr.size());

    std::vector<traindetail::ItemResult> items(batch);
    auto run_item = [&](size_t b) {
        Rng rng(Rng::derive(step_seed, b));
        const auto& pair = corpus[static_cast<size_t>(rng.uniform() * double(corpus.size()))];
        const size_t off =
            static_cast<size_t>(rng.uniform() * double(pair.x_hr.size() - window + 1));
        const double t = cfg.train.t_min + (1.0 - cfg.train.t_min) * rng.uniform();
        const BridgeCoefficients c = coefficients(cfg.schedule, t);

        std::vector<double> x0(window), xT(window), xt(window);
        double nrm = 0.0;
        for (size_t i = 0; i < window; ++i) {
            x0[i] = s.s * pair.x_hr[off + i];
            xT[i] = s.s * pair.x_lr[off + i];
            xt[i] = c.a_t * x0[i] + c.b_t * xT[i] + c.c_t * rng.normal();
            nrm += xt[i] * xt[i];
        }

        ad::Graph g;
        std::vector<int> pids;
        const int nx = g.input(xt);
        const int nT = g.input(xT);
        const int pred = net.forward(g, nx, nT, t, true, &pids);
        int bridge = -1, mag = -1, phase = -1;
        const int loss = final_loss_node(g, pred, x0, s.s, aux, rate, &bridge, &mag, &phase);
        g.backward(loss);

        auto& r = items[b];
        r.t = t;
        r.xt_norm = std::sqrt(nrm);
        r.total = g.val(loss)[0];
        r.bridge = g.val(bridge)[0];
        r.mag = mag >= 0 ? g.val(mag)[0] : 0.0;
        r.phase = phase >= 0 ? g.val(phase)[0] : 0.0;
        r.grads.resize(pids.size());
        for (size_t p = 0; p < pids.size(); ++p) r.grads[p] = g.grad(pids[p]);
    };

    if (batch == 1) {
        run_item(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(batch);
        for (size_t b = 0; b < batch; ++b) pool.emplace_back(run_item, b);
        for (auto& th : pool) th.join();
    }

    TrainStepLog log;
    log.step = step;
    for (const auto& r : items) {
        if (!std::isfinite(r.total))
            throw NumericError("train step " + std::to_string(step) + ": non-finite loss at t=" +
                               std::to_string(r.t) + ", |x_t|=" + std::to_string(r.xt_norm));
        log.bridge += r.bridge / double(batch);
        log.mag += r.mag / double(batch);
        log.phase += r.phase / double(batch);
    }

    std::vector<ad::Tensor> grads = std::move(items[0].grads);
    const double inv_b = 1.0 / double(batch);
    for (size_t p = 0; p < grads.size(); ++p) {
        for (size_t b = 1; b < batch; ++b) {
            const ad::Tensor& gb = items[b].grads[p];
            for (size_t j = 0; j < grads[p].size(); ++j) grads[p][j] += gb[j];
        }
        for (double& gv : grads[p]) gv *= inv_b;
    }

    std::vector<ad::Tensor*> params;
    std::vector<const ad::Tensor*> gptrs;
    for (auto& e : net.entries()) params.push_back(&e.data);
    for (auto& gr : grads) gptrs.push_back(&gr);
    log.applied = opt.step(params, gptrs);
    return log;
}

// Runs steps [first_step, first_step + n_steps); emits one CSV row per step
// when log_csv is given. The aux config decides bridge-only vs full loss.
inline std::vector<TrainStepLog> train_loop(TinyWaveNet& net, Adam& opt,
                                            const std::vector<WaveformPair>& corpus,
                                            ScaleFactor s, const Config& cfg,
                                            const AuxLossConfig& aux, int first_step,
                                            int n_steps, std::ostream* log_csv = nullptr) {
    std::vector<TrainStepLog> out;
    out.reserve(static_cast<size_t>(n_steps));
    if (log_csv && first_step == 0) *log_csv << "step,l_bridge,l_mag,l_phase\n";
    for (int k = 0; k < n_steps; ++k) {
        const int step = first_step + k;
        out.push_back(train_step(net, opt, corpus, s, cfg, aux, step, cfg.seed));
        if (log_csv) {
            const auto& l = out.back();
            *log_csv << l.step << ',' << l.bridge << ',' << l.mag << ',' << l.phase << '\n';
        }
    }
    return out;
}

inline AuxLossConfig bridge_only_aux(const Config& cfg) {
    AuxLossConfig a = cfg.aux_loss_config();
    a.lambda_mag = 0.0;
    a.lambda_phase = 0.0;
    return a;
}

}  // namespace bridgesr
