#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bridgesr/bench.hpp"
#include "bridgesr/checkpoint.hpp"
#include "bridgesr/config.hpp"
#include "bridgesr/corpus.hpp"
#include "bridgesr/denoiser.hpp"
#include "bridgesr/dsp.hpp"
#include "bridgesr/infer.hpp"
#include "bridgesr/metrics.hpp"
#include "bridgesr/samplers.hpp"
#include "bridgesr/synth.hpp"
#include "bridgesr/train.hpp"
#include "bridgesr/wav.hpp"

namespace fs = std::filesystem;
using namespace bridgesr;

namespace {

struct Cli {
    std::string config_path;
    uint64_t seed = 0;
    bool seed_set = false;

    Config load() const {
        Config cfg = config_path.empty() ? Config{} : load_config(config_path);
        if (seed_set) cfg.seed = seed;
        cfg.validate();
        return cfg;
    }
};

std::vector<std::string> read_file_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file list: " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty()) out.push_back(line);
    }
    if (out.empty()) throw DataError("empty file list: " + path);
    return out;
}

std::string wav_stem(const std::string& path) {
    std::string base = fs::path(path).filename().string();
    const std::string ext = ".wav";
    if (base.size() >= ext.size() && base.compare(base.size() - ext.size(), ext.size(), ext) == 0)
        base.resize(base.size() - ext.size());
    return base;
}

struct CheckpointMeta {
    double scale = 1.0;
    int steps = 0;
};

void save_run_checkpoint(const std::string& path, const Config& cfg, const TinyWaveNet& net,
                         const CheckpointMeta& meta) {
    const std::vector<NamedTensor> extra = {
        {"meta.scale", {1}, {meta.scale}},
        {"meta.steps", {1}, {double(meta.steps)}},
    };
    save_checkpoint(path, serialize_config(cfg), net, extra);
}

CheckpointMeta load_run_checkpoint(const std::string& path, TinyWaveNet& net) {
    const Checkpoint ck = load_checkpoint(path);
    load_into(net, ck);
    CheckpointMeta meta;
    const CheckpointTensor* s = ck.find("meta.scale");
    const CheckpointTensor* st = ck.find("meta.steps");
    if (!s || s->data.size() != 1 || !st || st->data.size() != 1)
        throw DataError("checkpoint: missing run metadata in " + path);
    meta.scale = double(s->data[0]);
    meta.steps = int(st->data[0]);
    return meta;
}

InferenceGrid grid_from_flags(const Config& cfg, int preset, int steps, std::string sampler,
                              double t_min) {
    if (preset > 0) return preset_grid(preset);
    const int n = steps > 0 ? steps : cfg.sampler.steps;
    const double lo = t_min > 0.0 ? t_min : cfg.sampler.t_min;
    if (sampler.empty()) sampler = cfg.sampler.kind;
    return linear_grid(static_cast<size_t>(n) + 1, lo, cfg.sampler.t_max,
                       sampler_kind_from_string(sampler));
}

int cmd_synth(const Cli& cli, const std::string& out_dir, int count, double seconds,
              const std::string& prefix) {
    if (count <= 0) throw ConfigError("synth: --count must be positive");
    if (!(seconds > 0.0)) throw ConfigError("synth: --seconds must be positive");
    const Config cfg = cli.load();
    fs::create_directories(out_dir);
    std::ofstream list(fs::path(out_dir) / "wavs.txt", std::ios::trunc);
    if (!list) throw DataError("synth: cannot write file list in " + out_dir);
    for (int i = 0; i < count; ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_%04d.wav", prefix.c_str(), i);
        const fs::path p = fs::path(out_dir) / name;
        const AudioBuffer buf =
            synth_utterance(Rng::derive(cfg.seed, static_cast<uint64_t>(i)), seconds);
        write_wav(p.string(), buf, WavEncoding::Float32);
        list << p.string() << "\n";
    }
    std::cout << "wrote " << count << " utterances to " << out_dir << "\n";
    return 0;
}

int cmd_degrade(const Cli& cli, const std::string& files, const std::string& out_dir,
                double eval_rate) {
    const Config cfg = cli.load();
    const auto paths = read_file_list(files);
    fs::create_directories(out_dir);
    std::vector<ManifestEntry> manifest;
    for (size_t i = 0; i < paths.size(); ++i) {
        const uint64_t item_seed = Rng::derive(cfg.seed, i);
        Rng rng(item_seed);
        const DegradationSpec spec =
            eval_rate > 0.0 ? eval_degradation_spec(eval_rate) : random_degradation_spec(rng);
        const AudioBuffer hr = read_wav(paths[i]);
        const WaveformPair pair = degrade(hr, spec, rng);
        const std::string stem = wav_stem(paths[i]);
        const fs::path hr_out = fs::path(out_dir) / (stem + ".hr.wav");
        const fs::path lr_out = fs::path(out_dir) / (stem + ".lr.wav");
        AudioBuffer lr;
        lr.rate = pair.target_rate;
        lr.samples = pair.x_lr;
        write_wav(hr_out.string(), hr, WavEncoding::Float32);
        write_wav(lr_out.string(), lr, WavEncoding::Float32);
        manifest.push_back({hr_out.string(), spec.input_rate, spec.family, spec.order, item_seed});
    }
    const fs::path mpath = fs::path(out_dir) / "degraded.csv";
    write_manifest(mpath.string(), manifest);
    std::cout << "wrote " << manifest.size() << " pairs and " << mpath.string() << "\n";
    return 0;
}

int cmd_train(const Cli& cli, const std::string& manifest, const std::string& out,
              const std::string& init, const std::string& log_path, int steps, bool finetune) {
    const Config cfg = cli.load();
    const auto corpus = load_corpus(manifest);

    TinyWaveNet net;
    CheckpointMeta meta;
    if (!init.empty()) {
        meta = load_run_checkpoint(init, net);
    } else {
        if (finetune) throw DataError("finetune: --init checkpoint is required");
        Rng rng(Rng::derive(cfg.seed, 0x5EED));
        net.init(rng);
        meta.scale = cfg.train.scale_factor ? estimate_scale(corpus).s : 1.0;
        meta.steps = 0;
    }

    const int n_steps = steps >= 0 ? steps : cfg.train.steps;
    const AuxLossConfig aux = finetune ? cfg.aux_loss_config() : bridge_only_aux(cfg);
    Adam opt(cfg.train.lr);

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path, std::ios::trunc);
        if (!log) throw DataError("train: cannot open log " + log_path);
        log << "step,l_bridge,l_mag,l_phase\n";
    }
    std::ostream* log_ptr = log.is_open() ? &log : nullptr;

    const auto history = train_loop(net, opt, corpus, {meta.scale}, cfg, aux, meta.steps, n_steps,
                                    nullptr);
    if (log_ptr)
        for (const auto& l : history)
            *log_ptr << l.step << ',' << l.bridge << ',' << l.mag << ',' << l.phase << '\n';

    meta.steps += n_steps;
    save_run_checkpoint(out, cfg, net, meta);
    if (!history.empty())
        std::cout << "step " << history.back().step << " l_bridge " << history.back().bridge
                  << " l_mag " << history.back().mag << " l_phase " << history.back().phase << "\n";
    std::cout << "saved " << out << " (" << meta.steps << " steps, scale " << meta.scale << ")\n";
    return 0;
}

int cmd_sample(const Cli& cli, const std::string& init, const std::string& manifest,
               const std::string& out_dir, int preset, int steps, const std::string& sampler,
               double t_min) {
    const Config cfg = cli.load();
    TinyWaveNet net;
    const CheckpointMeta meta = load_run_checkpoint(init, net);
    const InferenceGrid grid = grid_from_flags(cfg, preset, steps, sampler, t_min);

    const auto entries = read_manifest(manifest);
    if (entries.empty()) throw DataError("sample: empty manifest " + manifest);
    fs::create_directories(out_dir);
    const ChunkedNetworkDenoiser den(net);
    for (size_t i = 0; i < entries.size(); ++i) {
        const AudioBuffer lr = read_wav(lr_path_for(entries[i].path));
        CountingDenoiser counting(den);
        Rng rng(Rng::derive(cfg.seed, i));
        const std::vector<double> est = sample(counting, lr.samples, meta.scale, grid,
                                               cfg.schedule, rng);
        AudioBuffer buf;
        buf.rate = lr.rate;
        buf.samples = est;
        const fs::path p = fs::path(out_dir) / (pair_stem(entries[i].path) + ".sr.wav");
        write_wav(p.string(), buf, WavEncoding::Float32);
        std::cout << p.string() << " nfe=" << counting.calls() << "\n";
    }
    return 0;
}

int cmd_eval(const Cli& cli, const std::string& manifest, const std::string& est_dir,
             bool passthrough, const std::string& out_csv, const std::string& out_json) {
    const Config cfg = cli.load();
    (void)cfg;
    const auto entries = read_manifest(manifest);
    if (entries.empty()) throw DataError("eval: empty manifest " + manifest);
    if (!passthrough && est_dir.empty())
        throw ConfigError("eval: need --est DIR or --passthrough");

    std::ofstream csv;
    if (!out_csv.empty()) {
        csv.open(out_csv, std::ios::trunc);
        if (!csv) throw DataError("eval: cannot open " + out_csv);
        csv << "path,lsd,lsd_lf,lsd_hf,si_snr,ssim,cutoff_hz\n";
    }

    std::vector<MetricsReport> reports;
    for (const auto& e : entries) {
        const AudioBuffer hr = read_wav(e.path);
        AudioBuffer est;
        if (passthrough) {
            est = read_wav(lr_path_for(e.path));
        } else {
            const fs::path p = fs::path(est_dir) / (pair_stem(e.path) + ".sr.wav");
            est = read_wav(p.string());
        }
        const MetricsReport r =
            evaluate_pair(est.samples, hr.samples, 0.5 * e.input_rate, double(hr.rate));
        reports.push_back(r);
        if (csv.is_open())
            csv << e.path << ',' << r.lsd << ',' << r.lsd_lf << ',' << r.lsd_hf << ',' << r.si_snr
                << ',' << r.ssim << ',' << r.cutoff_hz << '\n';
    }
    const MetricsReport agg = aggregate(reports);
    const std::string json = report_json(agg, reports.size());
    if (!out_json.empty()) {
        std::ofstream jf(out_json, std::ios::trunc);
        if (!jf) throw DataError("eval: cannot open " + out_json);
        jf << json;
    }
    std::cout << json;
    return 0;
}

int cmd_inspect_schedule(const Cli& cli, const std::string& out, int points, double cutoff_hz) {
    if (points < 2) throw ConfigError("inspect-schedule: --points must be >= 2");
    const Config cfg = cli.load();
    const double rate = 48000.0;

    const std::vector<double> x0 = synth_samples(0xF19, 8192);
    const std::vector<double> xT = brickwall_lowpass(x0, cutoff_hz, rate);
    const std::vector<double> lf0 = brickwall_lowpass(x0, cutoff_hz, rate);
    double e0 = 0.0;
    for (double v : lf0) e0 += v * v;

    const ScheduleParams vp = ScheduleParams::vp();

    std::ofstream f(out, std::ios::trunc);
    if (!f) throw DataError("inspect-schedule: cannot open " + out);
    f.precision(12);
    f << "t,a_t,b_t,c_t,sigma2_t,sigma_bar2_t,bridge_lf_ratio,vp_lf_ratio\n";
    std::vector<double> m(x0.size());
    for (int i = 0; i < points; ++i) {
        const double t = double(i) / double(points - 1);
        const BridgeCoefficients c = coefficients(cfg.schedule, t);
        for (size_t j = 0; j < m.size(); ++j) m[j] = c.a_t * x0[j] + c.b_t * xT[j];
        double eb = 0.0;
        for (double v : brickwall_lowpass(m, cutoff_hz, rate)) eb += v * v;
        const BridgeCoefficients cv = coefficients(vp, t);
        for (size_t j = 0; j < m.size(); ++j) m[j] = cv.alpha_t * x0[j];
        double ev = 0.0;
        for (double v : brickwall_lowpass(m, cutoff_hz, rate)) ev += v * v;
        f << t << ',' << c.a_t << ',' << c.b_t << ',' << c.c_t << ',' << c.sigma2_t << ','
          << c.sigma_bar2_t << ',' << eb / e0 << ',' << ev / e0 << '\n';
    }
    if (!f) throw DataError("inspect-schedule: write failed for " + out);
    std::cout << "wrote " << points << " rows to " << out << "\n";
    return 0;
}

int cmd_benchmark(const Cli& cli, const std::string& train_manifest,
                  const std::string& test_manifest, const std::string& out, int bridge_steps,
                  int finetune_steps, const std::string& presets_csv, int full_steps) {
    BenchOptions opt;
    opt.cfg = cli.load();
    opt.bridge_steps = bridge_steps;
    opt.finetune_steps = finetune_steps;
    opt.full_steps = full_steps;
    opt.csv_path = out;
    if (!presets_csv.empty()) {
        opt.presets.clear();
        std::stringstream ss(presets_csv);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!item.empty()) opt.presets.push_back(std::stoi(item));
    }
    const auto train_set = load_corpus(train_manifest);
    const auto test_set = load_corpus(test_manifest);
    const BenchResult res = run_benchmark(opt, train_set, test_set, &std::cout);
    for (const auto& r : res.rows)
        std::cout << r.variant << " " << r.sampler << " nfe=" << r.nfe << " lsd=" << r.metrics.lsd
                  << " lsd_lf=" << r.metrics.lsd_lf << " lsd_hf=" << r.metrics.lsd_hf
                  << " l_mag=" << r.l_mag << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"schrodinger bridge waveform super-resolution harness"};
    app.require_subcommand(1);
    app.fallthrough();

    Cli cli;
    app.add_option("--config", cli.config_path, "config file (defaults used when absent)");
    auto* seed_opt = app.add_option("--seed", cli.seed, "override the config seed");

    auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
    std::string synth_out = "synth";
    int synth_count = 10;
    double synth_seconds = 0.7;
    std::string synth_prefix = "utt";
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--count", synth_count, "number of utterances")->required();
    synth->add_option("--seconds", synth_seconds, "utterance length in seconds");
    synth->add_option("--prefix", synth_prefix, "file name prefix");

    auto* degrade = app.add_subcommand("degrade", "build low/high resolution pairs");
    std::string deg_files, deg_out = "pairs";
    double deg_eval_rate = 0.0;
    degrade->add_option("--files", deg_files, "text file listing input wavs")->required();
    degrade->add_option("--out", deg_out, "output directory");
    degrade->add_option("--eval-rate", deg_eval_rate,
                        "fixed input rate (Hz); omit for random degradations");

    auto* train = app.add_subcommand("train", "bridge-loss training");
    std::string train_manifest, train_out = "model.bsrk", train_init, train_log;
    int train_steps = -1;
    train->add_option("--manifest", train_manifest, "degradation manifest csv")->required();
    train->add_option("--out", train_out, "checkpoint to write");
    train->add_option("--init", train_init, "checkpoint to resume from");
    train->add_option("--log", train_log, "loss curve csv");
    train->add_option("--steps", train_steps, "step count (config train.steps when omitted)");

    auto* finetune = app.add_subcommand("finetune", "continue training with aux losses");
    std::string ft_manifest, ft_out = "model_ft.bsrk", ft_init, ft_log;
    int ft_steps = -1;
    finetune->add_option("--manifest", ft_manifest, "degradation manifest csv")->required();
    finetune->add_option("--out", ft_out, "checkpoint to write");
    finetune->add_option("--init", ft_init, "checkpoint to fine-tune")->required();
    finetune->add_option("--log", ft_log, "loss curve csv");
    finetune->add_option("--steps", ft_steps, "step count (config train.steps when omitted)");

    auto* sample_cmd = app.add_subcommand("sample", "upsample low-resolution wavs");
    std::string smp_init, smp_manifest, smp_out = "sampled", smp_sampler;
    int smp_preset = 0, smp_steps = 0;
    double smp_t_min = 0.0;
    sample_cmd->add_option("--init", smp_init, "checkpoint")->required();
    sample_cmd->add_option("--manifest", smp_manifest, "degradation manifest csv")->required();
    sample_cmd->add_option("--out", smp_out, "output directory");
    auto* preset_opt = sample_cmd->add_option("--preset", smp_preset, "NFE preset grid")
                           ->check(CLI::IsMember({1, 2, 4}));
    auto* steps_opt = sample_cmd->add_option("--steps", smp_steps, "uniform grid step count");
    sample_cmd->add_option("--sampler", smp_sampler, "ode1 | sde1 | sde2");
    sample_cmd->add_option("--t-min", smp_t_min, "inference floor");
    preset_opt->excludes(steps_opt);

    auto* eval = app.add_subcommand("eval", "score estimates against references");
    std::string ev_manifest, ev_est, ev_csv, ev_json;
    bool ev_pass = false;
    eval->add_option("--manifest", ev_manifest, "degradation manifest csv")->required();
    eval->add_option("--est", ev_est, "directory of .sr.wav estimates");
    eval->add_flag("--passthrough", ev_pass, "score the low-resolution input itself");
    eval->add_option("--out-csv", ev_csv, "per-utterance metrics csv");
    eval->add_option("--out-json", ev_json, "aggregate metrics json");

    auto* inspect = app.add_subcommand("inspect-schedule", "tabulate bridge coefficients");
    std::string ins_out = "schedule.csv";
    int ins_points = 1001;
    double ins_cutoff = 4000.0;
    inspect->add_option("--out", ins_out, "output csv");
    inspect->add_option("--points", ins_points, "grid size");
    inspect->add_option("--cutoff", ins_cutoff, "low-frequency band edge (Hz)");

    auto* bench = app.add_subcommand("benchmark", "train + ablations + metric grid");
    std::string bn_train, bn_test, bn_out = "benchmark.csv", bn_presets;
    int bn_bridge = 3000, bn_ft = 600, bn_full = 8;
    bench->add_option("--train-manifest", bn_train, "training manifest csv")->required();
    bench->add_option("--test-manifest", bn_test, "test manifest csv")->required();
    bench->add_option("--out", bn_out, "report csv");
    bench->add_option("--bridge-steps", bn_bridge, "bridge training steps");
    bench->add_option("--finetune-steps", bn_ft, "fine-tune steps");
    bench->add_option("--presets", bn_presets, "comma list of NFE presets");
    bench->add_option("--full-steps", bn_full, "step count for the linear ode1 grid");

    try {
        app.parse(argc, argv);
        cli.seed_set = seed_opt->count() > 0;
        if (synth->parsed()) return cmd_synth(cli, synth_out, synth_count, synth_seconds, synth_prefix);
        if (degrade->parsed()) return cmd_degrade(cli, deg_files, deg_out, deg_eval_rate);
        if (train->parsed())
            return cmd_train(cli, train_manifest, train_out, train_init, train_log, train_steps, false);
        if (finetune->parsed())
            return cmd_train(cli, ft_manifest, ft_out, ft_init, ft_log, ft_steps, true);
        if (sample_cmd->parsed())
            return cmd_sample(cli, smp_init, smp_manifest, smp_out, smp_preset, smp_steps,
                              smp_sampler, smp_t_min);
        if (eval->parsed()) return cmd_eval(cli, ev_manifest, ev_est, ev_pass, ev_csv, ev_json);
        if (inspect->parsed()) return cmd_inspect_schedule(cli, ins_out, ins_points, ins_cutoff);
        if (bench->parsed())
            return cmd_benchmark(cli, bn_train, bn_test, bn_out, bn_bridge, bn_ft, bn_presets,
                                 bn_full);
        std::cerr << "no subcommand\n";
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
