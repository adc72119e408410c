#pragma once

#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "bridgesr/checkpoint.hpp"
#include "bridgesr/config.hpp"
#include "bridgesr/infer.hpp"
#include "bridgesr/metrics.hpp"
#include "bridgesr/samplers.hpp"
#include "bridgesr/train.hpp"

namespace bridgesr {

struct BenchRow {
    std::string variant;
    std::string sampler = "-";
    int nfe = 0;
    MetricsReport metrics;
    double l_mag = 0.0;
};

struct BenchOptions {
    Config cfg;
    int bridge_steps = 3000;
    int tail_steps = 0;      // extra bridge steps at tail_lr after bridge_steps
    double tail_lr = 0.0;
    double finetune_lr = 0.0; // 0 keeps cfg.train.lr
    int finetune_steps = 600;
    std::vector<int> presets = {1, 2, 4};
    int full_steps = 8;
    std::string csv_path;
};

struct BenchResult {
    std::vector<BenchRow> rows;

    const BenchRow* find(const std::string& variant, int nfe) const {
        for (const auto& r : rows)
            if (r.variant == variant && r.nfe == nfe) return &r;
        return nullptr;
    }
};

namespace benchdetail {

inline BenchRow eval_variant(const std::string& variant, const std::string& sampler, int nfe,
                             const TinyWaveNet* net, double s, const InferenceGrid* grid,
                             const std::vector<WaveformPair>& test_set, const Config& cfg) {
    BenchRow row;
    row.variant = variant;
    row.sampler = sampler;
    row.nfe = nfe;
    const AuxLossConfig mag_cfg = cfg.aux_loss_config();
    std::vector<MetricsReport> reports;
    reports.reserve(test_set.size());
    double mag_acc = 0.0;
    for (size_t i = 0; i < test_set.size(); ++i) {
        const WaveformPair& p = test_set[i];
        std::vector<double> est;
        if (net) {
            ChunkedNetworkDenoiser den(*net);
            Rng rng(Rng::derive(cfg.seed, 0xE7A1 + i));
            est = sample(den, p.x_lr, s, *grid, cfg.schedule, rng);
        } else {
            est = p.x_lr;
        }
        const double rate = double(p.target_rate);
        reports.push_back(evaluate_pair(est, p.x_hr, p.cutoff_hz, rate));
        mag_acc += mag_loss(est, p.x_hr, mag_cfg, rate);
    }
    row.metrics = aggregate(reports);
    row.l_mag = mag_acc / double(test_set.size());
    return row;
}

}  // namespace benchdetail

// Trains bridge-only nets with and without the scale factor from one shared
// initialization, fine-tunes the scaled one with the aux losses, then scores
// passthrough and every (variant, step-count) cell on the test set.
inline BenchResult run_benchmark(const BenchOptions& opt,
                                 const std::vector<WaveformPair>& train_set,
                                 const std::vector<WaveformPair>& test_set,
                                 std::ostream* progress = nullptr) {
    if (train_set.empty() || test_set.empty()) throw DataError("benchmark: empty corpus");
    const Config& cfg = opt.cfg;
    cfg.validate();

    const ScaleFactor s_data = estimate_scale(train_set);
    const ScaleFactor s_unit{1.0};

    TinyWaveNet net_sf, net_nosf;
    {
        Rng ra(Rng::derive(cfg.seed, 0x1715));
        net_sf.init(ra);
        Rng rb(Rng::derive(cfg.seed, 0x1715));
        net_nosf.init(rb);
    }

    auto note = [&](const std::string& msg) {
        if (progress) *progress << msg << "\n" << std::flush;
    };

    const bool tail = opt.tail_steps > 0 && opt.tail_lr > 0.0;
    const int total_bridge = opt.bridge_steps + (tail ? opt.tail_steps : 0);

    note("benchmark: bridge training (" + std::to_string(total_bridge) + " steps)");
    Adam opt_sf(cfg.train.lr);
    train_loop(net_sf, opt_sf, train_set, s_data, cfg, bridge_only_aux(cfg), 0, opt.bridge_steps);
    if (tail) {
        opt_sf.set_lr(opt.tail_lr);
        train_loop(net_sf, opt_sf, train_set, s_data, cfg, bridge_only_aux(cfg), opt.bridge_steps,
                   opt.tail_steps);
    }

    note("benchmark: bridge training without scale factor");
    Adam opt_nosf(cfg.train.lr);
    train_loop(net_nosf, opt_nosf, train_set, s_unit, cfg, bridge_only_aux(cfg), 0,
               opt.bridge_steps);
    if (tail) {
        opt_nosf.set_lr(opt.tail_lr);
        train_loop(net_nosf, opt_nosf, train_set, s_unit, cfg, bridge_only_aux(cfg),
                   opt.bridge_steps, opt.tail_steps);
    }

    note("benchmark: fine-tuning (" + std::to_string(opt.finetune_steps) + " steps)");
    TinyWaveNet net_ft = net_sf;
    Adam opt_ft(opt.finetune_lr > 0.0 ? opt.finetune_lr : cfg.train.lr);
    train_loop(net_ft, opt_ft, train_set, s_data, cfg, cfg.aux_loss_config(), total_bridge,
               opt.finetune_steps);

    const InferenceGrid full =
        linear_grid(static_cast<size_t>(opt.full_steps) + 1, cfg.sampler.t_min,
                    cfg.sampler.t_max, SamplerKind::Ode1);

    BenchResult res;
    note("benchmark: scoring passthrough");
    res.rows.push_back(
        benchdetail::eval_variant("passthrough", "-", 0, nullptr, 1.0, nullptr, test_set, cfg));

    auto score_grids = [&](const std::string& variant, const TinyWaveNet& net, double s) {
        note("benchmark: scoring " + variant + " (" + std::to_string(opt.full_steps) + "-step ode1)");
        res.rows.push_back(benchdetail::eval_variant(variant, to_string(full.kind), int(full.nfe()),
                                                     &net, s, &full, test_set, cfg));
        for (int p : opt.presets) {
            const InferenceGrid g = preset_grid(p);
            note("benchmark: scoring " + variant + " (preset " + std::to_string(p) + ")");
            res.rows.push_back(benchdetail::eval_variant(variant, to_string(g.kind), int(g.nfe()),
                                                         &net, s, &g, test_set, cfg));
        }
    };
    score_grids("bridge", net_sf, s_data.s);
    note("benchmark: scoring bridge_nosf");
    res.rows.push_back(benchdetail::eval_variant("bridge_nosf", to_string(full.kind),
                                                 int(full.nfe()), &net_nosf, s_unit.s, &full,
                                                 test_set, cfg));
    score_grids("finetune", net_ft, s_data.s);

    if (!opt.csv_path.empty()) {
        std::ofstream f(opt.csv_path, std::ios::trunc);
        if (!f) throw DataError("benchmark: cannot open " + opt.csv_path);
        f << "schedule,variant,sampler,nfe,lsd,lsd_lf,lsd_hf,si_snr,ssim,l_mag\n";
        const std::string sched = configdetail::kind_name(cfg.schedule.kind);
        for (const auto& r : res.rows)
            f << sched << ',' << r.variant << ',' << r.sampler << ',' << r.nfe << ',' << r.metrics.lsd
              << ',' << r.metrics.lsd_lf << ',' << r.metrics.lsd_hf << ',' << r.metrics.si_snr
              << ',' << r.metrics.ssim << ',' << r.l_mag << '\n';
        if (!f) throw DataError("benchmark: write failed for " + opt.csv_path);
    }
    return res;
}

}  // namespace bridgesr
