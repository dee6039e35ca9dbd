#ifndef FLOWRECT_TOY_NET_HPP
#define FLOWRECT_TOY_NET_HPP

#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "flowrect/random.hpp"
#include "flowrect/tensor.hpp"

namespace flowrect {

// Small conditional flow network:
//   concat(z, condition) along channels
//   -> 3x3 conv (+ sinusoidal time embedding and token embedding, channelwise)
//   -> SiLU -> temporal 1d conv (k=3 across frames) -> SiLU
//   -> 3x3 conv -> SiLU -> temporal 1d conv -> SiLU
//   -> 3x3 conv (zero-initialized) -> v
// Activations are stored per frame as column-major [H*W, channels] matrices,
// which matches the [C,H,W] plane layout of Tensor4.
struct ToyNetDescriptor {
    int channels = 3;
    int hidden = 32;
    int classes = 8;
    int time_features = 8;

    bool operator==(const ToyNetDescriptor&) const = default;

    std::string to_text() const {
        std::ostringstream os;
        os << "arch=toy-v1\n"
           << "channels=" << channels << "\n"
           << "hidden=" << hidden << "\n"
           << "classes=" << classes << "\n"
           << "time_features=" << time_features << "\n";
        return os.str();
    }

    static std::map<std::string, std::string> parse_kv(const std::string& text) {
        std::map<std::string, std::string> kv;
        std::istringstream is(text);
        std::string line;
        while (std::getline(is, line)) {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            kv[line.substr(0, eq)] = line.substr(eq + 1);
        }
        return kv;
    }

    static ToyNetDescriptor from_text(const std::string& text) {
        auto kv = parse_kv(text);
        if (kv.count("arch") && kv["arch"] != "toy-v1")
            throw FormatError("unknown architecture '" + kv["arch"] + "'", 0);
        ToyNetDescriptor d;
        if (kv.count("channels")) d.channels = std::stoi(kv["channels"]);
        if (kv.count("hidden")) d.hidden = std::stoi(kv["hidden"]);
        if (kv.count("classes")) d.classes = std::stoi(kv["classes"]);
        if (kv.count("time_features")) d.time_features = std::stoi(kv["time_features"]);
        if (d.channels < 1 || d.hidden < 1 || d.classes < 1 || d.time_features < 2 ||
            d.time_features % 2 != 0)
            throw DomainError("ToyNetDescriptor: invalid field values");
        return d;
    }
};

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

template <typename S>
struct Conv2d3x3 {
    Mat<S> wt;  // [in*9, out]
    Vec<S> b;   // [out]

    void setup(int in_ch, int out_ch) {
        wt.setZero(in_ch * 9, out_ch);
        b.setZero(out_ch);
    }
};

template <typename S>
struct TemporalConv3 {
    Mat<S> wt[3];  // each [in, out]; taps at frame offsets -1, 0, +1
    Vec<S> b;

    void setup(int in_ch, int out_ch) {
        for (auto& w : wt) w.setZero(in_ch, out_ch);
        b.setZero(out_ch);
    }
};

// Mutable view of one parameter block, used by the optimizer, the
// checkpoint writer and the finite-difference tests.
template <typename S>
struct ParamRef {
    std::string name;
    S* data;
    std::vector<std::uint32_t> dims;
    std::int64_t size;
};

template <typename S>
struct ToyNet {
    ToyNetDescriptor desc;
    Conv2d3x3<S> conv_in, conv_mid, conv_out;
    TemporalConv3<S> temp1, temp2;
    Mat<S> time_proj;  // [time_features, hidden]
    Mat<S> tok_embed;  // [classes, hidden]

    explicit ToyNet(ToyNetDescriptor d = {}) : desc(d) {
        conv_in.setup(2 * d.channels, d.hidden);
        temp1.setup(d.hidden, d.hidden);
        conv_mid.setup(d.hidden, d.hidden);
        temp2.setup(d.hidden, d.hidden);
        conv_out.setup(d.hidden, d.channels);
        time_proj.setZero(d.time_features, d.hidden);
        tok_embed.setZero(d.classes, d.hidden);
    }

    // He-style init; the output conv stays zero so v == 0 at initialization.
    void init(std::uint64_t seed) {
        Rng rng(seed, "model/init");
        auto fill = [&](Mat<S>& m, double std) {
            for (std::int64_t i = 0; i < m.size(); ++i)
                m.data()[i] = static_cast<S>(rng.normal() * std);
        };
        fill(conv_in.wt, std::sqrt(2.0 / conv_in.wt.rows()));
        for (auto& w : temp1.wt) fill(w, std::sqrt(2.0 / (3.0 * w.rows())));
        fill(conv_mid.wt, std::sqrt(2.0 / conv_mid.wt.rows()));
        for (auto& w : temp2.wt) fill(w, std::sqrt(2.0 / (3.0 * w.rows())));
        fill(time_proj, std::sqrt(1.0 / time_proj.rows()));
        fill(tok_embed, 0.1);
        conv_out.wt.setZero();
        conv_out.b.setZero();
    }

    std::vector<ParamRef<S>> params() {
        std::vector<ParamRef<S>> out;
        auto add_mat = [&](const std::string& name, Mat<S>& m) {
            out.push_back({name, m.data(),
                           {std::uint32_t(m.rows()), std::uint32_t(m.cols())}, m.size()});
        };
        auto add_vec = [&](const std::string& name, Vec<S>& v) {
            out.push_back({name, v.data(), {std::uint32_t(v.size())}, v.size()});
        };
        add_mat("conv_in.weight", conv_in.wt);
        add_vec("conv_in.bias", conv_in.b);
        for (int j = 0; j < 3; ++j) add_mat("temp1.weight" + std::to_string(j), temp1.wt[j]);
        add_vec("temp1.bias", temp1.b);
        add_mat("conv_mid.weight", conv_mid.wt);
        add_vec("conv_mid.bias", conv_mid.b);
        for (int j = 0; j < 3; ++j) add_mat("temp2.weight" + std::to_string(j), temp2.wt[j]);
        add_vec("temp2.bias", temp2.b);
        add_mat("conv_out.weight", conv_out.wt);
        add_vec("conv_out.bias", conv_out.b);
        add_mat("time_proj", time_proj);
        add_mat("tok_embed", tok_embed);
        return out;
    }

    std::int64_t num_params() {
        std::int64_t n = 0;
        for (auto& p : params()) n += p.size;
        return n;
    }

    ToyNet zeros_like() const { return ToyNet(desc); }

    template <typename T>
    ToyNet<T> cast() const {
        ToyNet<T> out(desc);
        auto dst = out.params();
        auto src = const_cast<ToyNet*>(this)->params();
        for (std::size_t i = 0; i < src.size(); ++i)
            for (std::int64_t j = 0; j < src[i].size; ++j)
                dst[i].data[j] = static_cast<T>(src[i].data[j]);
        return out;
    }
};

namespace detail {

template <typename S>
S sigmoid(S x) {
    return x >= S(0) ? S(1) / (S(1) + std::exp(-x)) : std::exp(x) / (S(1) + std::exp(x));
}

template <typename S>
void silu_inplace(Mat<S>& pre, Mat<S>& post) {
    post.resize(pre.rows(), pre.cols());
    for (std::int64_t i = 0; i < pre.size(); ++i) {
        const S s = sigmoid(pre.data()[i]);
        post.data()[i] = pre.data()[i] * s;
    }
}

template <typename S>
void silu_backward(const Mat<S>& pre, Mat<S>& grad) {
    for (std::int64_t i = 0; i < pre.size(); ++i) {
        const S x = pre.data()[i];
        const S s = sigmoid(x);
        grad.data()[i] *= s * (S(1) + x * (S(1) - s));
    }
}

// cols(p, ci*9 + ky*3 + kx) = plane_ci(y + ky - 1, x + kx - 1), zero padded.
template <typename S>
void im2col_3x3(const Mat<S>& x, int h, int w, Mat<S>& cols) {
    const int hw = h * w;
    const int in_ch = static_cast<int>(x.cols());
    cols.resize(hw, in_ch * 9);
    for (int ci = 0; ci < in_ch; ++ci) {
        const S* plane = x.col(ci).data();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                S* dst = cols.col(ci * 9 + ky * 3 + kx).data();
                const int dy = ky - 1, dx = kx - 1;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    S* row = dst + y * w;
                    if (sy < 0 || sy >= h) {
                        std::fill(row, row + w, S(0));
                        continue;
                    }
                    const S* src = plane + sy * w;
                    const int x0 = std::max(0, -dx), x1 = std::min(w, w - dx);
                    if (x0 > 0) std::fill(row, row + x0, S(0));
                    for (int xx = x0; xx < x1; ++xx) row[xx] = src[xx + dx];
                    if (x1 < w) std::fill(row + x1, row + w, S(0));
                }
            }
        }
    }
}

// Scatter-add transpose of im2col_3x3.
template <typename S>
void col2im_3x3(const Mat<S>& dcols, int h, int w, Mat<S>& dx) {
    const int in_ch = static_cast<int>(dx.cols());
    for (int ci = 0; ci < in_ch; ++ci) {
        S* plane = dx.col(ci).data();
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const S* src = dcols.col(ci * 9 + ky * 3 + kx).data();
                const int dy = ky - 1, dx_ = kx - 1;
                for (int y = 0; y < h; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= h) continue;
                    const int x0 = std::max(0, -dx_), x1 = std::min(w, w - dx_);
                    for (int xx = x0; xx < x1; ++xx) plane[sy * w + xx + dx_] += src[y * w + xx];
                }
            }
        }
    }
}

}  // namespace detail

// Per-evaluation activation cache; reused by the backward pass.
template <typename S>
struct ToyNetCache {
    int l = 0, h = 0, w = 0;
    bool uncond = false;
    int token = 0;
    Vec<S> time_feat;
    std::vector<Mat<S>> cols_in, cols_mid, cols_out;     // im2col buffers per frame
    std::vector<Mat<S>> h1, a1, h2, a2, h3, a3, h4, a4;  // pre/post activations
};

template <typename S>
Vec<S> sinusoidal_features(double t, int count) {
    Vec<S> f(count);
    for (int j = 0; j < count / 2; ++j) {
        const double freq = 2.0 * std::numbers::pi * std::pow(2.0, j);
        f[2 * j] = static_cast<S>(std::sin(freq * t));
        f[2 * j + 1] = static_cast<S>(std::cos(freq * t));
    }
    return f;
}

// cond is the dense [L,C,H,W] condition stack; ignored entirely when uncond.
template <typename S>
Tensor4<S> toy_net_forward(const ToyNet<S>& net, const Tensor4<S>& z, double t,
                           const Tensor4<S>* cond, int token, bool uncond,
                           ToyNetCache<S>* cache) {
    const auto& d = net.desc;
    const Shape4 shape = z.shape();
    if (shape.c != d.channels)
        throw ShapeError("toy_net_forward: expected " + std::to_string(d.channels) +
                         " channels, got " + std::to_string(shape.c));
    if (!uncond) {
        if (cond == nullptr) throw ShapeError("toy_net_forward: missing condition");
        require_same_shape(*cond, z, "toy_net_forward condition");
        if (token < 0 || token >= d.classes)
            throw DomainError("toy_net_forward: token " + std::to_string(token) +
                              " outside [0," + std::to_string(d.classes) + ")");
    }
    const int l = int(shape.l), hh = int(shape.h), ww = int(shape.w), hw = hh * ww;
    const int c = d.channels, hid = d.hidden;

    ToyNetCache<S> local;
    ToyNetCache<S>& cc = cache ? *cache : local;
    cc.l = l;
    cc.h = hh;
    cc.w = ww;
    cc.uncond = uncond;
    cc.token = token;
    cc.time_feat = sinusoidal_features<S>(t, d.time_features);
    auto resize_all = [&](std::vector<Mat<S>>& v) { v.resize(l); };
    resize_all(cc.cols_in);
    resize_all(cc.cols_mid);
    resize_all(cc.cols_out);
    resize_all(cc.h1);
    resize_all(cc.a1);
    resize_all(cc.h2);
    resize_all(cc.a2);
    resize_all(cc.h3);
    resize_all(cc.a3);
    resize_all(cc.h4);
    resize_all(cc.a4);

    Vec<S> tvec = net.time_proj.transpose() * cc.time_feat;
    if (!uncond) tvec += net.tok_embed.row(token).transpose();

    // conv_in over concat(z, cond), plus channelwise embeddings
    Mat<S> input(hw, 2 * c);
    for (int f = 0; f < l; ++f) {
        for (int ci = 0; ci < c; ++ci) {
            std::memcpy(input.col(ci).data(), z.data() + z.index(f, ci, 0, 0), sizeof(S) * hw);
            if (uncond)
                input.col(c + ci).setZero();
            else
                std::memcpy(input.col(c + ci).data(), cond->data() + cond->index(f, ci, 0, 0),
                            sizeof(S) * hw);
        }
        detail::im2col_3x3(input, hh, ww, cc.cols_in[f]);
        cc.h1[f].noalias() = cc.cols_in[f] * net.conv_in.wt;
        cc.h1[f].rowwise() += (net.conv_in.b + tvec).transpose();
        detail::silu_inplace(cc.h1[f], cc.a1[f]);
    }

    // temporal mix 1
    for (int f = 0; f < l; ++f) {
        cc.h2[f].noalias() = cc.a1[f] * net.temp1.wt[1];
        if (f > 0) cc.h2[f].noalias() += cc.a1[f - 1] * net.temp1.wt[0];
        if (f + 1 < l) cc.h2[f].noalias() += cc.a1[f + 1] * net.temp1.wt[2];
        cc.h2[f].rowwise() += net.temp1.b.transpose();
        detail::silu_inplace(cc.h2[f], cc.a2[f]);
    }

    // conv_mid
    for (int f = 0; f < l; ++f) {
        detail::im2col_3x3(cc.a2[f], hh, ww, cc.cols_mid[f]);
        cc.h3[f].noalias() = cc.cols_mid[f] * net.conv_mid.wt;
        cc.h3[f].rowwise() += net.conv_mid.b.transpose();
        detail::silu_inplace(cc.h3[f], cc.a3[f]);
    }

    // temporal mix 2
    for (int f = 0; f < l; ++f) {
        cc.h4[f].noalias() = cc.a3[f] * net.temp2.wt[1];
        if (f > 0) cc.h4[f].noalias() += cc.a3[f - 1] * net.temp2.wt[0];
        if (f + 1 < l) cc.h4[f].noalias() += cc.a3[f + 1] * net.temp2.wt[2];
        cc.h4[f].rowwise() += net.temp2.b.transpose();
        detail::silu_inplace(cc.h4[f], cc.a4[f]);
    }

    // conv_out
    Tensor4<S> v(shape);
    Mat<S> out_f;
    for (int f = 0; f < l; ++f) {
        detail::im2col_3x3(cc.a4[f], hh, ww, cc.cols_out[f]);
        out_f.noalias() = cc.cols_out[f] * net.conv_out.wt;
        out_f.rowwise() += net.conv_out.b.transpose();
        for (int ci = 0; ci < c; ++ci)
            std::memcpy(v.data() + v.index(f, ci, 0, 0), out_f.col(ci).data(), sizeof(S) * hw);
    }
    (void)hid;
    return v;
}

// Exact gradients of a scalar loss w.r.t. every parameter, given dL/dv.
template <typename S>
ToyNet<S> toy_net_backward(const ToyNet<S>& net, const ToyNetCache<S>& cc,
                           const Tensor4<S>& dv) {
    const auto& d = net.desc;
    const int l = cc.l, hh = cc.h, ww = cc.w, hw = hh * ww;
    const int c = d.channels, hid = d.hidden;
    ToyNet<S> g(net.desc);

    std::vector<Mat<S>> da4(l), da3(l), da2(l), da1(l);
    Vec<S> demb = Vec<S>::Zero(hid);

    // conv_out backward
    Mat<S> dout(hw, c), dcols;
    for (int f = 0; f < l; ++f) {
        for (int ci = 0; ci < c; ++ci)
            std::memcpy(dout.col(ci).data(), dv.data() + dv.index(f, ci, 0, 0), sizeof(S) * hw);
        g.conv_out.wt.noalias() += cc.cols_out[f].transpose() * dout;
        g.conv_out.b += dout.colwise().sum().transpose();
        dcols.noalias() = dout * net.conv_out.wt.transpose();
        da4[f].setZero(hw, hid);
        detail::col2im_3x3(dcols, hh, ww, da4[f]);
        detail::silu_backward(cc.h4[f], da4[f]);  // now dh4
    }

    // temporal 2 backward (da4 currently holds dh4)
    for (int f = 0; f < l; ++f) da3[f].setZero(hw, hid);
    for (int f = 0; f < l; ++f) {
        g.temp2.wt[1].noalias() += cc.a3[f].transpose() * da4[f];
        da3[f].noalias() += da4[f] * net.temp2.wt[1].transpose();
        if (f > 0) {
            g.temp2.wt[0].noalias() += cc.a3[f - 1].transpose() * da4[f];
            da3[f - 1].noalias() += da4[f] * net.temp2.wt[0].transpose();
        }
        if (f + 1 < l) {
            g.temp2.wt[2].noalias() += cc.a3[f + 1].transpose() * da4[f];
            da3[f + 1].noalias() += da4[f] * net.temp2.wt[2].transpose();
        }
        g.temp2.b += da4[f].colwise().sum().transpose();
    }
    for (int f = 0; f < l; ++f) detail::silu_backward(cc.h3[f], da3[f]);  // dh3

    // conv_mid backward
    for (int f = 0; f < l; ++f) {
        g.conv_mid.wt.noalias() += cc.cols_mid[f].transpose() * da3[f];
        g.conv_mid.b += da3[f].colwise().sum().transpose();
        dcols.noalias() = da3[f] * net.conv_mid.wt.transpose();
        da2[f].setZero(hw, hid);
        detail::col2im_3x3(dcols, hh, ww, da2[f]);
        detail::silu_backward(cc.h2[f], da2[f]);  // dh2
    }

    // temporal 1 backward
    for (int f = 0; f < l; ++f) da1[f].setZero(hw, hid);
    for (int f = 0; f < l; ++f) {
        g.temp1.wt[1].noalias() += cc.a1[f].transpose() * da2[f];
        da1[f].noalias() += da2[f] * net.temp1.wt[1].transpose();
        if (f > 0) {
            g.temp1.wt[0].noalias() += cc.a1[f - 1].transpose() * da2[f];
            da1[f - 1].noalias() += da2[f] * net.temp1.wt[0].transpose();
        }
        if (f + 1 < l) {
            g.temp1.wt[2].noalias() += cc.a1[f + 1].transpose() * da2[f];
            da1[f + 1].noalias() += da2[f] * net.temp1.wt[2].transpose();
        }
        g.temp1.b += da2[f].colwise().sum().transpose();
    }

    // conv_in backward; input gradients are not needed
    for (int f = 0; f < l; ++f) {
        detail::silu_backward(cc.h1[f], da1[f]);  // dh1
        g.conv_in.wt.noalias() += cc.cols_in[f].transpose() * da1[f];
        const Vec<S> csum = da1[f].colwise().sum().transpose();
        g.conv_in.b += csum;
        demb += csum;
    }

    // channelwise embeddings
    g.time_proj.noalias() = cc.time_feat * demb.transpose();
    if (!cc.uncond) g.tok_embed.row(cc.token) = demb.transpose();
    return g;
}

}  // namespace flowrect

#endif
