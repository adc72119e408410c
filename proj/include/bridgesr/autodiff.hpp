#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "bridgesr/errors.hpp"
#include "bridgesr/fft.hpp"

// Minimal eager reverse-mode tape. Values are computed at node creation;
// backward() walks the tape in reverse. Gradients are only materialized on
// subgraphs that reach a parameter leaf.
namespace bridgesr::ad {

using Tensor = std::vector<double>;

enum class Op : uint8_t {
    Leaf,
    Conv1d,     // x (cin,T), w (cout*cin*k), b (cout) -> (cout,T), zero-pad centered
    Add,
    Sub,
    Mul,
    AddChBias,  // x (c,T) + bias (c), broadcast over time
    Scale,      // d0*x + d1 with constants
    Tanh,
    Sigmoid,
    Square,
    Abs,
    Log,
    Sqrt,
    Wrap2Pi,    // x - 2*pi*round(x/(2*pi)); unit derivative a.e.
    Atan2,      // (y, x) elementwise
    Affine,     // W (rows,cols) * v (cols) + b (rows)
    Mean,       // full reduction to scalar
    ConcatCh,
    SliceCh,
    Stft,       // (1,T) -> ch 2 {re, im}, rows=frames, cols=bins
    DiffCols,   // x[r,c+1]-x[r,c]
    DiffRows,   // x[r+1,c]-x[r,c]
};

struct Node {
    Op op = Op::Leaf;
    int a = -1, b = -1, c = -1;
    int ch = 1;          // channel count; per-channel length = val.size()/ch
    int rows = 0, cols = 0; // 2D view for Stft/Diff ops
    int i0 = 0, i1 = 0, i2 = 0, i3 = 0; // op attributes
    double d0 = 0.0, d1 = 0.0;
    bool req = false;
    Tensor val;
    Tensor grad;
};

class Graph {
public:
    std::vector<Node> nodes;

    int input(Tensor v, int ch = 1) { return leaf(std::move(v), ch, false); }
    int param(const Tensor& v, int ch = 1) { return leaf(v, ch, true); }

    const Tensor& val(int id) const { return nodes[id].val; }
    const Tensor& grad(int id) const { return nodes[id].grad; }
    int channels(int id) const { return nodes[id].ch; }
    size_t len(int id) const { return nodes[id].val.size() / size_t(nodes[id].ch); }

    int conv1d(int x, int w, int b, int cin, int cout, int k, int dilation) {
        const Node& nx = nodes[x];
        if (nx.ch != cin) throw NumericError("conv1d: channel mismatch");
        if (nodes[w].val.size() != size_t(cout) * cin * k || nodes[b].val.size() != size_t(cout))
            throw NumericError("conv1d: weight shape mismatch");
        if (k % 2 == 0) throw NumericError("conv1d: kernel must be odd");
        const int T = int(len(x));
        Node n = make(Op::Conv1d, x, w, b);
        n.ch = cout;
        n.i0 = k; n.i1 = dilation; n.i2 = cin; n.i3 = cout;
        n.val.assign(size_t(cout) * T, 0.0);
        const double* xv = nx.val.data();
        const double* wv = nodes[w].val.data();
        const double* bv = nodes[b].val.data();
        const int half = k / 2;
        for (int co = 0; co < cout; ++co) {
            double* out = n.val.data() + size_t(co) * T;
            for (int t = 0; t < T; ++t) out[t] = bv[co];
            for (int ci = 0; ci < cin; ++ci) {
                const double* src = xv + size_t(ci) * T;
                for (int kk = 0; kk < k; ++kk) {
                    const double wk = wv[(size_t(co) * cin + ci) * k + kk];
                    if (wk == 0.0) continue;
                    const int off = (kk - half) * dilation;
                    const int lo = std::max(0, -off), hi = std::min(T, T - off);
                    for (int t = lo; t < hi; ++t) out[t] += wk * src[t + off];
                }
            }
        }
        return push(std::move(n));
    }

    int add(int a, int b) { return binary(Op::Add, a, b); }
    int sub(int a, int b) { return binary(Op::Sub, a, b); }
    int mul(int a, int b) { return binary(Op::Mul, a, b); }

    int add_ch_bias(int x, int bias) {
        const int ch = nodes[x].ch;
        if (nodes[bias].val.size() != size_t(ch)) throw NumericError("add_ch_bias: bias size");
        Node n = make(Op::AddChBias, x, bias);
        n.ch = ch; n.rows = nodes[x].rows; n.cols = nodes[x].cols;
        n.val = nodes[x].val;
        const size_t T = len(x);
        for (int c = 0; c < ch; ++c) {
            const double bv = nodes[bias].val[c];
            double* out = n.val.data() + size_t(c) * T;
            for (size_t t = 0; t < T; ++t) out[t] += bv;
        }
        return push(std::move(n));
    }

    int scale(int x, double mulc, double addc = 0.0) {
        Node n = make(Op::Scale, x);
        n.ch = nodes[x].ch; n.rows = nodes[x].rows; n.cols = nodes[x].cols;
        n.d0 = mulc; n.d1 = addc;
        n.val.resize(nodes[x].val.size());
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = mulc * nodes[x].val[i] + addc;
        return push(std::move(n));
    }

    int tanh_(int x) { return unary(Op::Tanh, x, [](double v) { return std::tanh(v); }); }
    int sigmoid(int x) {
        return unary(Op::Sigmoid, x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }
    int square(int x) { return unary(Op::Square, x, [](double v) { return v * v; }); }
    int abs_(int x) { return unary(Op::Abs, x, [](double v) { return std::fabs(v); }); }
    int log_(int x) { return unary(Op::Log, x, [](double v) { return std::log(v); }); }
    int sqrt_(int x) { return unary(Op::Sqrt, x, [](double v) { return std::sqrt(v); }); }
    int wrap2pi(int x) {
        constexpr double two_pi = 6.283185307179586476925286766559;
        return unary(Op::Wrap2Pi, x,
                     [&](double v) { return v - two_pi * std::round(v / two_pi); });
    }

    int atan2_(int y, int x) {
        if (nodes[y].val.size() != nodes[x].val.size()) throw NumericError("atan2: size mismatch");
        Node n = make(Op::Atan2, y, x);
        n.ch = nodes[y].ch; n.rows = nodes[y].rows; n.cols = nodes[y].cols;
        n.val.resize(nodes[y].val.size());
        for (size_t i = 0; i < n.val.size(); ++i)
            n.val[i] = std::atan2(nodes[y].val[i], nodes[x].val[i]);
        return push(std::move(n));
    }

    int affine(int w, int v, int b, int rows, int cols) {
        if (nodes[w].val.size() != size_t(rows) * cols || nodes[v].val.size() != size_t(cols) ||
            nodes[b].val.size() != size_t(rows))
            throw NumericError("affine: shape mismatch");
        Node n = make(Op::Affine, w, v, b);
        n.i0 = rows; n.i1 = cols;
        n.val.resize(rows);
        for (int r = 0; r < rows; ++r) {
            double acc = nodes[b].val[r];
            const double* wr = nodes[w].val.data() + size_t(r) * cols;
            for (int c = 0; c < cols; ++c) acc += wr[c] * nodes[v].val[c];
            n.val[r] = acc;
        }
        return push(std::move(n));
    }

    int mean(int x) {
        Node n = make(Op::Mean, x);
        double acc = 0.0;
        for (double v : nodes[x].val) acc += v;
        n.val = {acc / double(nodes[x].val.size())};
        return push(std::move(n));
    }

    int concat_ch(int a, int b) {
        if (len(a) != len(b)) throw NumericError("concat_ch: length mismatch");
        Node n = make(Op::ConcatCh, a, b);
        n.ch = nodes[a].ch + nodes[b].ch;
        n.val = nodes[a].val;
        n.val.insert(n.val.end(), nodes[b].val.begin(), nodes[b].val.end());
        return push(std::move(n));
    }

    int slice_ch(int x, int from, int to) {
        const int ch = nodes[x].ch;
        if (!(0 <= from && from < to && to <= ch)) throw NumericError("slice_ch: bad range");
        const size_t T = len(x);
        Node n = make(Op::SliceCh, x);
        n.ch = to - from;
        n.i0 = from; n.i1 = to;
        n.rows = nodes[x].rows; n.cols = nodes[x].cols;
        n.val.assign(nodes[x].val.begin() + size_t(from) * T, nodes[x].val.begin() + size_t(to) * T);
        return push(std::move(n));
    }

    // Centered STFT with reflect padding and a periodic Hann window.
    // Output channel 0 = real parts, channel 1 = imaginary parts, each
    // frames*bins with rows=frames, cols=bins.
    int stft(int x, int fft_size, int hop) {
        if (nodes[x].ch != 1) throw NumericError("stft: mono input expected");
        const int T = int(len(x));
        if (T < fft_size) throw DataError("stft: input shorter than fft size");
        const int bins = fft_size / 2 + 1;
        const int frames = 1 + T / hop;
        const std::vector<double> w = fft::hann(size_t(fft_size));
        Node n = make(Op::Stft, x);
        n.ch = 2;
        n.rows = frames; n.cols = bins;
        n.i0 = fft_size; n.i1 = hop;
        n.val.assign(size_t(2) * frames * bins, 0.0);
        std::vector<double> buf(fft_size);
        const int pad = fft_size / 2;
        for (int f = 0; f < frames; ++f) {
            for (int j = 0; j < fft_size; ++j)
                buf[j] = w[j] * nodes[x].val[size_t(reflect_index(f * hop + j - pad, T))];
            const fft::cvec spec = fft::rfft(buf);
            for (int b = 0; b < bins; ++b) {
                n.val[size_t(f) * bins + b] = spec[b].real();
                n.val[size_t(frames) * bins + size_t(f) * bins + b] = spec[b].imag();
            }
        }
        return push(std::move(n));
    }

    int diff_cols(int x) {
        const int rows = nodes[x].rows, cols = nodes[x].cols;
        if (rows <= 0 || cols <= 1) throw NumericError("diff_cols: needs 2D node");
        Node n = make(Op::DiffCols, x);
        n.ch = nodes[x].ch;
        n.rows = rows; n.cols = cols - 1;
        n.val.resize(size_t(nodes[x].ch) * rows * (cols - 1));
        for (int c = 0; c < nodes[x].ch; ++c)
            for (int r = 0; r < rows; ++r)
                for (int j = 0; j + 1 < cols; ++j)
                    n.val[(size_t(c) * rows + r) * (cols - 1) + j] =
                        nodes[x].val[(size_t(c) * rows + r) * cols + j + 1] -
                        nodes[x].val[(size_t(c) * rows + r) * cols + j];
        return push(std::move(n));
    }

    int diff_rows(int x) {
        const int rows = nodes[x].rows, cols = nodes[x].cols;
        if (rows <= 1 || cols <= 0) throw NumericError("diff_rows: needs 2D node");
        Node n = make(Op::DiffRows, x);
        n.ch = nodes[x].ch;
        n.rows = rows - 1; n.cols = cols;
        n.val.resize(size_t(nodes[x].ch) * (rows - 1) * cols);
        for (int c = 0; c < nodes[x].ch; ++c)
            for (int r = 0; r + 1 < rows; ++r)
                for (int j = 0; j < cols; ++j)
                    n.val[(size_t(c) * (rows - 1) + r) * cols + j] =
                        nodes[x].val[(size_t(c) * rows + r + 1) * cols + j] -
                        nodes[x].val[(size_t(c) * rows + r) * cols + j];
        return push(std::move(n));
    }

    void backward(int loss) {
        if (nodes[loss].val.size() != 1) throw NumericError("backward: loss must be scalar");
        for (auto& n : nodes) {
            if (n.req) n.grad.assign(n.val.size(), 0.0);
        }
        if (!nodes[loss].req) return; // no parameters reachable
        nodes[loss].grad[0] = 1.0;
        for (int id = loss; id >= 0; --id) {
            Node& n = nodes[id];
            if (!n.req || n.op == Op::Leaf) continue;
            backward_node(n);
        }
    }

private:
    template <typename F>
    int unary(Op op, int x, F f) {
        Node n = make(op, x);
        n.ch = nodes[x].ch; n.rows = nodes[x].rows; n.cols = nodes[x].cols;
        n.val.resize(nodes[x].val.size());
        for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = f(nodes[x].val[i]);
        return push(std::move(n));
    }

    int binary(Op op, int a, int b) {
        if (nodes[a].val.size() != nodes[b].val.size()) throw NumericError("binary op: size mismatch");
        Node n = make(op, a, b);
        n.ch = nodes[a].ch; n.rows = nodes[a].rows; n.cols = nodes[a].cols;
        n.val.resize(nodes[a].val.size());
        const Tensor& va = nodes[a].val;
        const Tensor& vb = nodes[b].val;
        switch (op) {
            case Op::Add: for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = va[i] + vb[i]; break;
            case Op::Sub: for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = va[i] - vb[i]; break;
            case Op::Mul: for (size_t i = 0; i < n.val.size(); ++i) n.val[i] = va[i] * vb[i]; break;
            default: throw NumericError("binary: bad op");
        }
        return push(std::move(n));
    }

    int leaf(Tensor v, int ch, bool req) {
        Node n;
        n.op = Op::Leaf;
        n.ch = ch;
        n.req = req;
        n.val = std::move(v);
        nodes.push_back(std::move(n));
        return int(nodes.size()) - 1;
    }

    Node make(Op op, int a, int b = -1, int c = -1) {
        Node n;
        n.op = op; n.a = a; n.b = b; n.c = c;
        n.req = nodes[a].req || (b >= 0 && nodes[b].req) || (c >= 0 && nodes[c].req);
        return n;
    }

    int push(Node n) {
        nodes.push_back(std::move(n));
        return int(nodes.size()) - 1;
    }

    static int reflect_index(int i, int n) {
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * n - 2 - i;
        }
        return i;
    }

    void accumulate(int id, size_t idx, double g) {
        Node& n = nodes[id];
        if (n.req) n.grad[idx] += g;
    }

    void backward_node(Node& n) {
        const Tensor& g = n.grad;
        switch (n.op) {
            case Op::Conv1d: {
                const int k = n.i0, dil = n.i1, cin = n.i2, cout = n.i3;
                const int T = int(n.val.size()) / cout;
                Node& nx = nodes[n.a];
                Node& nw = nodes[n.b];
                Node& nb = nodes[n.c];
                const int half = k / 2;
                for (int co = 0; co < cout; ++co) {
                    const double* go = g.data() + size_t(co) * T;
                    if (nb.req) {
                        double acc = 0.0;
                        for (int t = 0; t < T; ++t) acc += go[t];
                        nb.grad[co] += acc;
                    }
                    for (int ci = 0; ci < cin; ++ci) {
                        const double* xv = nx.val.data() + size_t(ci) * T;
                        double* gx = nx.req ? nx.grad.data() + size_t(ci) * T : nullptr;
                        for (int kk = 0; kk < k; ++kk) {
                            const size_t widx = (size_t(co) * cin + ci) * k + kk;
                            const double wk = nw.val[widx];
                            const int off = (kk - half) * dil;
                            const int lo = std::max(0, -off), hi = std::min(T, T - off);
                            if (nw.req) {
                                double acc = 0.0;
                                for (int t = lo; t < hi; ++t) acc += xv[t + off] * go[t];
                                nw.grad[widx] += acc;
                            }
                            if (gx && wk != 0.0)
                                for (int t = lo; t < hi; ++t) gx[t + off] += wk * go[t];
                        }
                    }
                }
                break;
            }
            case Op::Add:
                for (size_t i = 0; i < g.size(); ++i) {
                    accumulate(n.a, i, g[i]);
                    accumulate(n.b, i, g[i]);
                }
                break;
            case Op::Sub:
                for (size_t i = 0; i < g.size(); ++i) {
                    accumulate(n.a, i, g[i]);
                    accumulate(n.b, i, -g[i]);
                }
                break;
            case Op::Mul:
                for (size_t i = 0; i < g.size(); ++i) {
                    accumulate(n.a, i, g[i] * nodes[n.b].val[i]);
                    accumulate(n.b, i, g[i] * nodes[n.a].val[i]);
                }
                break;
            case Op::AddChBias: {
                const size_t T = n.val.size() / size_t(n.ch);
                for (size_t i = 0; i < g.size(); ++i) accumulate(n.a, i, g[i]);
                if (nodes[n.b].req)
                    for (int c = 0; c < n.ch; ++c) {
                        double acc = 0.0;
                        for (size_t t = 0; t < T; ++t) acc += g[size_t(c) * T + t];
                        nodes[n.b].grad[c] += acc;
                    }
                break;
            }
            case Op::Scale:
                for (size_t i = 0; i < g.size(); ++i) accumulate(n.a, i, g[i] * n.d0);
                break;
            case Op::Tanh:
                for (size_t i = 0; i < g.size(); ++i)
                    accumulate(n.a, i, g[i] * (1.0 - n.val[i] * n.val[i]));
                break;
            case Op::Sigmoid:
                for (size_t i = 0; i < g.size(); ++i)
                    accumulate(n.a, i, g[i] * n.val[i] * (1.0 - n.val[i]));
                break;
            case Op::Square:
                for (size_t i = 0; i < g.size(); ++i)
                    accumulate(n.a, i, g[i] * 2.0 * nodes[n.a].val[i]);
                break;
            case Op::Abs:
                for (size_t i = 0; i < g.size(); ++i) {
                    const double x = nodes[n.a].val[i];
                    accumulate(n.a, i, g[i] * (x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0)));
                }
                break;
            case Op::Log:
                for (size_t i = 0; i < g.size(); ++i)
                    accumulate(n.a, i, g[i] / nodes[n.a].val[i]);
                break;
            case Op::Sqrt:
                for (size_t i = 0; i < g.size(); ++i)
                    accumulate(n.a, i, g[i] * 0.5 / n.val[i]);
                break;
            case Op::Wrap2Pi:
                for (size_t i = 0; i < g.size(); ++i) accumulate(n.a, i, g[i]);
                break;
            case Op::Atan2:
                for (size_t i = 0; i < g.size(); ++i) {
                    const double y = nodes[n.a].val[i], x = nodes[n.b].val[i];
                    const double r2 = x * x + y * y;
                    if (r2 == 0.0) continue;
                    accumulate(n.a, i, g[i] * x / r2);
                    accumulate(n.b, i, g[i] * -y / r2);
                }
                break;
            case Op::Affine: {
                const int rows = n.i0, cols = n.i1;
                Node& nw = nodes[n.a];
                Node& nv = nodes[n.b];
                Node& nb = nodes[n.c];
                for (int r = 0; r < rows; ++r) {
                    const double gr = g[r];
                    if (nb.req) nb.grad[r] += gr;
                    for (int c = 0; c < cols; ++c) {
                        if (nw.req) nw.grad[size_t(r) * cols + c] += gr * nv.val[c];
                        if (nv.req) nv.grad[c] += gr * nw.val[size_t(r) * cols + c];
                    }
                }
                break;
            }
            case Op::Mean: {
                const double gs = g[0] / double(nodes[n.a].val.size());
                if (nodes[n.a].req)
                    for (size_t i = 0; i < nodes[n.a].val.size(); ++i) nodes[n.a].grad[i] += gs;
                break;
            }
            case Op::ConcatCh: {
                const size_t na = nodes[n.a].val.size();
                for (size_t i = 0; i < na; ++i) accumulate(n.a, i, g[i]);
                for (size_t i = na; i < g.size(); ++i) accumulate(n.b, i - na, g[i]);
                break;
            }
            case Op::SliceCh: {
                if (!nodes[n.a].req) break;
                const size_t T = nodes[n.a].val.size() / size_t(nodes[n.a].ch);
                const size_t base = size_t(n.i0) * T;
                for (size_t i = 0; i < g.size(); ++i) nodes[n.a].grad[base + i] += g[i];
                break;
            }
            case Op::Stft: {
                if (!nodes[n.a].req) break;
                const int fft_size = n.i0, hop = n.i1;
                const int bins = n.cols, frames = n.rows;
                const int T = int(nodes[n.a].val.size());
                const int pad = fft_size / 2;
                const std::vector<double> w = fft::hann(size_t(fft_size));
                fft::cvec G(static_cast<size_t>(fft_size));
                for (int f = 0; f < frames; ++f) {
                    std::fill(G.begin(), G.end(), std::complex<double>(0.0, 0.0));
                    for (int b = 0; b < bins; ++b)
                        G[b] = {g[size_t(f) * bins + b],
                                g[size_t(frames) * bins + size_t(f) * bins + b]};
                    const fft::cvec y = fft::inverse(G);
                    for (int j = 0; j < fft_size; ++j) {
                        const double du = double(fft_size) * y[j].real() * w[j];
                        nodes[n.a].grad[size_t(reflect_index(f * hop + j - pad, T))] += du;
                    }
                }
                break;
            }
            case Op::DiffCols: {
                if (!nodes[n.a].req) break;
                const int rows = nodes[n.a].rows, cols = nodes[n.a].cols;
                for (int c = 0; c < n.ch; ++c)
                    for (int r = 0; r < rows; ++r)
                        for (int j = 0; j + 1 < cols; ++j) {
                            const double gv = g[(size_t(c) * rows + r) * (cols - 1) + j];
                            nodes[n.a].grad[(size_t(c) * rows + r) * cols + j + 1] += gv;
                            nodes[n.a].grad[(size_t(c) * rows + r) * cols + j] -= gv;
                        }
                break;
            }
            case Op::DiffRows: {
                if (!nodes[n.a].req) break;
                const int rows = nodes[n.a].rows, cols = nodes[n.a].cols;
                for (int c = 0; c < n.ch; ++c)
                    for (int r = 0; r + 1 < rows; ++r)
                        for (int j = 0; j < cols; ++j) {
                            const double gv = g[(size_t(c) * (rows - 1) + r) * cols + j];
                            nodes[n.a].grad[(size_t(c) * rows + r + 1) * cols + j] += gv;
                            nodes[n.a].grad[(size_t(c) * rows + r) * cols + j] -= gv;
                        }
                break;
            }
            case Op::Leaf:
                break;
        }
    }
};

} // namespace bridgesr::ad
