#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "bridgesr/checkpoint.hpp"
#include "bridgesr/network.hpp"
#include "bridgesr/optim.hpp"
#include "bridgesr/samplers.hpp"

using namespace bridgesr;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

double mse(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s / double(a.size());
}

} // namespace

TEST_CASE("parameter count closed form") {
    TinyWaveNet net;
    REQUIRE(net.param_count() == net.expected_param_count());
    REQUIRE(net.param_count() == 25489);
    REQUIRE(net.param_count() < 100000);
    REQUIRE(net.config().receptive_field() == 127);
}

TEST_CASE("fresh network is the identity on x_T") {
    TinyWaveNet net;
    Rng rng(5);
    net.init(rng);
    Rng data(6);
    const auto x_t = random_vec(data, 200);
    const auto x_T = random_vec(data, 200);
    const auto out = net.predict(x_t, 0.5, x_T);
    REQUIRE(out.size() == x_T.size());
    for (size_t i = 0; i < out.size(); ++i) REQUIRE(out[i] == x_T[i]);
}

TEST_CASE("initialization is seed-reproducible") {
    TinyWaveNet a, b, c;
    Rng r1(42), r2(42), r3(43);
    a.init(r1);
    b.init(r2);
    c.init(r3);
    bool all_equal = true, any_diff_from_c = false;
    for (size_t i = 0; i < a.entries().size(); ++i) {
        if (a.entries()[i].data != b.entries()[i].data) all_equal = false;
        if (a.entries()[i].data != c.entries()[i].data) any_diff_from_c = true;
    }
    REQUIRE(all_equal);
    REQUIRE(any_diff_from_c);
}

TEST_CASE("time embedding layout") {
    TinyWaveNet net;
    const auto e0 = net.time_embedding(0.0);
    REQUIRE(e0.size() == 64);
    for (size_t i = 0; i < e0.size(); i += 2) {
        REQUIRE(e0[i] == 0.0);     // sin
        REQUIRE(e0[i + 1] == 1.0); // cos
    }
    const auto ea = net.time_embedding(0.3);
    const auto eb = net.time_embedding(0.31);
    double diff = 0.0;
    for (size_t i = 0; i < ea.size(); ++i) {
        REQUIRE(std::abs(ea[i]) <= 1.0);
        diff += std::abs(ea[i] - eb[i]);
    }
    REQUIRE(diff > 1e-3);
}

TEST_CASE("constant input gives constant interior output") {
    TinyWaveNet net;
    Rng rng(9);
    net.init(rng);
    // open the head so the conv stack actually reaches the output
    for (auto& v : net.find("out2.w")->data) v = 0.3 * rng.normal();
    net.find("out2.b")->data[0] = 0.05;
    const size_t n = 400;
    const std::vector<double> x_t(n, 0.25), x_T(n, -0.125);
    const auto out = net.predict(x_t, 0.4, x_T);
    const int rf = net.config().receptive_field();
    const size_t a = size_t(rf / 2), b = n - size_t(rf / 2);
    for (size_t i = a + 1; i < b; ++i) REQUIRE(out[i] == Catch::Approx(out[a]).margin(1e-12));
    // edge samples see zero padding instead
    REQUIRE(std::abs(out[0] - out[a]) > 1e-9);
}

TEST_CASE("network gradients match finite differences") {
    TinyWaveNet net;
    Rng rng(13);
    net.init(rng);
    for (auto& v : net.find("out2.w")->data) v = 0.2 * rng.normal();
    net.find("out2.b")->data[0] = -0.03;

    Rng data(14);
    const size_t n = 64;
    const auto x_t = random_vec(data, n, 0.5);
    const auto x_T = random_vec(data, n, 0.5);
    const auto target = random_vec(data, n, 0.5);
    const double t = 0.37;

    ad::Graph g;
    const int xt = g.input(x_t);
    const int xT = g.input(x_T);
    std::vector<int> pids;
    const int pred = net.forward(g, xt, xT, t, true, &pids);
    const int loss = g.mean(g.square(g.sub(pred, g.input(target))));
    g.backward(loss);

    auto loss_at = [&]() {
        return mse(net.predict(x_t, t, x_T), target);
    };

    // spot-check coordinates spread over the tensor set
    const std::vector<std::pair<std::string, size_t>> picks = {
        {"in.w", 3},          {"in.b", 7},           {"layer0.conv.w", 100},
        {"layer2.temb.w", 500}, {"layer3.conv.b", 10}, {"layer4.res.w", 50},
        {"layer5.skip.w", 200}, {"layer5.skip.b", 15}, {"out1.w", 120},
        {"out1.b", 4},        {"out2.w", 9},         {"out2.b", 0},
    };
    const double h = 1e-5;
    for (const auto& [name, idx] : picks) {
        size_t entry_ix = 0;
        for (; entry_ix < net.entries().size(); ++entry_ix)
            if (net.entries()[entry_ix].name == name) break;
        REQUIRE(entry_ix < net.entries().size());
        auto& data_vec = net.entries()[entry_ix].data;
        REQUIRE(idx < data_vec.size());

        const double ad_grad = g.grad(pids[entry_ix])[idx];
        const double keep = data_vec[idx];
        data_vec[idx] = keep + h;
        const double up = loss_at();
        data_vec[idx] = keep - h;
        const double dn = loss_at();
        data_vec[idx] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double denom = std::max({std::abs(ad_grad), std::abs(fd), 1e-6});
        INFO(name << "[" << idx << "] ad=" << ad_grad << " fd=" << fd);
        REQUIRE(std::abs(ad_grad - fd) / denom < 1e-4);
    }
}

TEST_CASE("adam minimizes a quadratic") {
    ad::Tensor p = {0.0, 0.0, 0.0};
    const ad::Tensor c = {1.5, -0.7, 0.2};
    Adam opt(0.05);
    std::vector<ad::Tensor*> params = {&p};
    for (int i = 0; i < 600; ++i) {
        ad::Tensor grad(3);
        for (size_t j = 0; j < 3; ++j) grad[j] = 2.0 * (p[j] - c[j]);
        const std::vector<const ad::Tensor*> grads = {&grad};
        auto ps = params;
        REQUIRE(opt.step(ps, grads));
    }
    for (size_t j = 0; j < 3; ++j) REQUIRE(p[j] == Catch::Approx(c[j]).margin(5e-3));
    REQUIRE(opt.steps() == 600);
}

TEST_CASE("adam skips non-finite gradients") {
    ad::Tensor p = {1.0, 2.0};
    Adam opt(0.1);
    std::vector<ad::Tensor*> params = {&p};
    ad::Tensor grad = {0.5, std::nan("")};
    const std::vector<const ad::Tensor*> grads = {&grad};
    REQUIRE(!opt.step(params, grads));
    REQUIRE(p == ad::Tensor{1.0, 2.0});
    REQUIRE(opt.steps() == 0);
    grad[1] = std::numeric_limits<double>::infinity();
    REQUIRE(!opt.step(params, grads));
    REQUIRE(opt.steps() == 0);
    grad[1] = -0.25;
    REQUIRE(opt.step(params, grads));
    REQUIRE(opt.steps() == 1);
    REQUIRE(p[0] != 1.0);
}

TEST_CASE("checkpoint round trip") {
    TinyWaveNet net;
    Rng rng(77);
    net.init(rng);
    const std::string cfg_text = "[train]\nscale_factor = 12\n";
    const std::string path = "/tmp/bridgesr_ck_test.bsrk";
    save_checkpoint(path, cfg_text, net);

    const auto ck = load_checkpoint(path);
    REQUIRE(ck.version == 1);
    REQUIRE(ck.config_text == cfg_text);
    REQUIRE(ck.tensors.size() == net.entries().size());

    TinyWaveNet other;
    load_into(other, ck);
    for (size_t i = 0; i < net.entries().size(); ++i) {
        const auto& a = net.entries()[i];
        const auto& b = other.entries()[i];
        REQUIRE(a.name == b.name);
        REQUIRE(a.data.size() == b.data.size());
        for (size_t j = 0; j < a.data.size(); ++j) REQUIRE(b.data[j] == double(float(a.data[j])));
    }

    // second trip is bitwise stable: values already fit in f32
    const std::string path2 = "/tmp/bridgesr_ck_test2.bsrk";
    save_checkpoint(path2, cfg_text, other);
    TinyWaveNet third;
    load_into(third, load_checkpoint(path2));
    for (size_t i = 0; i < other.entries().size(); ++i)
        REQUIRE(third.entries()[i].data == other.entries()[i].data);
}

TEST_CASE("checkpoint carries extra tensors that loading ignores") {
    TinyWaveNet net;
    Rng rng(79);
    net.init(rng);
    const std::string path = "/tmp/bridgesr_ck_extra.bsrk";
    // exactly representable in f32 so the round trip is lossless
    const std::vector<NamedTensor> extra = {
        {"meta.scale", {1}, {9.25}},
        {"meta.steps", {1}, {42.0}},
    };
    save_checkpoint(path, "seed = 9\n", net, extra);

    const auto ck = load_checkpoint(path);
    REQUIRE(ck.tensors.size() == net.entries().size() + 2);
    const CheckpointTensor* s = ck.find("meta.scale");
    const CheckpointTensor* st = ck.find("meta.steps");
    REQUIRE(s != nullptr);
    REQUIRE(st != nullptr);
    REQUIRE(s->data.size() == 1);
    REQUIRE(s->data[0] == 9.25);
    REQUIRE(st->data[0] == 42.0);
    REQUIRE(ck.find("meta.other") == nullptr);

    TinyWaveNet other;
    load_into(other, ck);
    for (size_t i = 0; i < net.entries().size(); ++i)
        for (size_t j = 0; j < net.entries()[i].data.size(); ++j)
            REQUIRE(other.entries()[i].data[j] == double(float(net.entries()[i].data[j])));
}

TEST_CASE("checkpoint rejects damage") {
    TinyWaveNet net;
    Rng rng(78);
    net.init(rng);
    const std::string path = "/tmp/bridgesr_ck_damage.bsrk";
    save_checkpoint(path, "", net);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    auto write = [&](const std::string& b) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(b.data(), std::streamsize(b.size()));
    };

    write(bytes.substr(0, bytes.size() / 2));
    REQUIRE_THROWS_AS(load_checkpoint(path), DataError);

    auto bad = bytes;
    bad[0] = 'X';
    write(bad);
    REQUIRE_THROWS_AS(load_checkpoint(path), DataError);

    REQUIRE_THROWS_AS(load_checkpoint("/tmp/bridgesr_ck_missing.bsrk"), DataError);

    // mismatched topology
    write(bytes);
    const auto ck = load_checkpoint(path);
    TinyWaveNetConfig small;
    small.channels = 8;
    TinyWaveNet tiny(small);
    REQUIRE_THROWS_AS(load_into(tiny, ck), DataError);
}

TEST_CASE("network denoiser drives the sampler") {
    TinyWaveNet net;
    Rng rng(99);
    net.init(rng);
    NetworkDenoiser den(net);
    const std::vector<double> x_lr(256, 0.1);
    Rng srng(1);
    const auto out = sample(den, x_lr, 12.0, preset_grid(2), ScheduleParams::gmax(), srng);
    REQUIRE(out.size() == x_lr.size());
    for (double v : out) REQUIRE(std::isfinite(v));
}
