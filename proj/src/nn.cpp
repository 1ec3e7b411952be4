#include "pianovis/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pianovis::nn {

size_t Tensor::count(const std::vector<int> &shape) {
    size_t n = 1;
    for (int d : shape) {
        if (d <= 0) throw std::invalid_argument("Tensor: non-positive dimension");
        n *= static_cast<size_t>(d);
    }
    return n;
}

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)), data(count(shape), 0.0) {}

// ---------------------------------------------------------------- layers

class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor &x, bool training, std::mt19937_64 *rng) = 0;
    virtual Tensor backward(const Tensor &dy) = 0;
    virtual std::vector<Tensor *> params() { return {}; }
    virtual std::vector<Tensor *> grads() { return {}; }
    virtual void zero_grads() {}
};

namespace {

std::string shape_str(const std::vector<int> &s) {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? ", " : "") << s[i];
    os << ")";
    return os.str();
}

[[noreturn]] void shape_error(const char *layer, const std::vector<int> &got, const char *want) {
    throw std::runtime_error(std::string("layer ") + layer + ": bad input shape " +
                             shape_str(got) + ", expected " + want);
}

double init_scale(int fan_in) { return std::sqrt(1.0 / std::max(fan_in, 1)); }

void init_uniform(Tensor &t, double scale, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> d(-scale, scale);
    for (auto &v : t.data) v = d(rng);
}

class ReshapeLayer final : public Layer {
public:
    explicit ReshapeLayer(std::vector<int> dims) : dims_(std::move(dims)) {}
    Tensor forward(const Tensor &x, bool, std::mt19937_64 *) override {
        in_shape_ = x.shape;
        size_t per = Tensor::count(dims_);
        if (x.shape.empty() || x.size() != per * static_cast<size_t>(x.shape[0]))
            shape_error("reshape", x.shape, "batch x product(dims)");
        Tensor y = x;
        y.shape.assign(1, x.shape[0]);
        y.shape.insert(y.shape.end(), dims_.begin(), dims_.end());
        return y;
    }
    Tensor backward(const Tensor &dy) override {
        Tensor dx = dy;
        dx.shape = in_shape_;
        return dx;
    }

private:
    std::vector<int> dims_;
    std::vector<int> in_shape_;
};

class FlattenLayer final : public Layer {
public:
    Tensor forward(const Tensor &x, bool, std::mt19937_64 *) override {
        in_shape_ = x.shape;
        Tensor y = x;
        int per = static_cast<int>(x.size() / x.shape[0]);
        y.shape = {x.shape[0], per};
        return y;
    }
    Tensor backward(const Tensor &dy) override {
        Tensor dx = dy;
        dx.shape = in_shape_;
        return dx;
    }

private:
    std::vector<int> in_shape_;
};

class ReluLayer final : public Layer {
public:
    Tensor forward(const Tensor &x, bool, std::mt19937_64 *) override {
        mask_.assign(x.size(), 0);
        Tensor y = x;
        for (size_t i = 0; i < y.size(); ++i) {
            if (y.data[i] > 0)
                mask_[i] = 1;
            else
                y.data[i] = 0;
        }
        return y;
    }
    Tensor backward(const Tensor &dy) override {
        Tensor dx = dy;
        for (size_t i = 0; i < dx.size(); ++i)
            if (!mask_[i]) dx.data[i] = 0;
        return dx;
    }

private:
    std::vector<uint8_t> mask_;
};

class Conv2DLayer final : public Layer {
public:
    Conv2DLayer(int cin, int cout, std::mt19937_64 &rng)
        : cin_(cin), cout_(cout), w_({3, 3, cin, cout}), b_({cout}), dw_({3, 3, cin, cout}),
          db_({cout}) {
        init_uniform(w_, init_scale(9 * cin), rng);
    }
    Tensor forward(const Tensor &x, bool, std::mt19937_64 *) override {
        if (x.shape.size() != 4 || x.shape[3] != cin_)
            shape_error("conv2d", x.shape, "(n, h, w, c_in)");
        x_ = x;
        int n = x.shape[0], h = x.shape[1], w = x.shape[2];
        Tensor y({n, h, w, cout_});
        for (int in = 0; in < n; ++in)
            for (int oy = 0; oy < h; ++oy)
                for (int ox = 0; ox < w; ++ox) {
                    double *out = &y.data[(((static_cast<size_t>(in) * h + oy) * w + ox) * cout_)];
                    for (int co = 0; co < cout_; ++co) out[co] = b_.data[co];
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = oy + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = ox + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            const double *xin =
                                &x.data[(((static_cast<size_t>(in) * h + iy) * w + ix) * cin_)];
                            const double *wk =
                                &w_.data[((static_cast<size_t>(ky) * 3 + kx) * cin_) * cout_];
                            for (int ci = 0; ci < cin_; ++ci) {
                                double xv = xin[ci];
                                const double *wr = wk + static_cast<size_t>(ci) * cout_;
                                for (int co = 0; co < cout_; ++co) out[co] += xv * wr[co];
                            }
                        }
                    }
                }
        return y;
    }
    Tensor backward(const Tensor &dy) override {
        int n = x_.shape[0], h = x_.shape[1], w = x_.shape[2];
        Tensor dx(x_.shape);
        for (int in = 0; in < n; ++in)
            for (int oy = 0; oy < h; ++oy)
                for (int ox = 0; ox < w; ++ox) {
                    const double *g = &dy.data[(((static_cast<size_t>(in) * h + oy) * w + ox) * cout_)];
                    for (int co = 0; co < cout_; ++co) db_.data[co] += g[co];
                    for (int ky = 0; ky < 3; ++ky) {
                        int iy = oy + ky - 1;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            int ix = ox + kx - 1;
                            if (ix < 0 || ix >= w) continue;
                            const double *xin =
                                &x_.data[(((static_cast<size_t>(in) * h + iy) * w + ix) * cin_)];
                            double *dxin =
                                &dx.data[(((static_cast<size_t>(in) * h + iy) * w + ix) * cin_)];
                            size_t wbase = ((static_cast<size_t>(ky) * 3 + kx) * cin_) * cout_;
                            for (int ci = 0; ci < cin_; ++ci) {
                                const double *wr = &w_.data[wbase + static_cast<size_t>(ci) * cout_];
                                double *dwr = &dw_.data[wbase + static_cast<size_t>(ci) * cout_];
                                double xv = xin[ci];
                                double acc = 0;
                                for (int co = 0; co < cout_; ++co) {
                                    acc += wr[co] * g[co];
                                    dwr[co] += xv * g[co];
                                }
                                dxin[ci] += acc;
                            }
                        }
                    }
                }
        return dx;
    }
    std::vector<Tensor *> params() override { return {&w_, &b_}; }
    std::vector<Tensor *> grads() override { return {&dw_, &db_}; }
    void zero_grads() override {
        std::fill(dw_.data.begin(), dw_.data.end(), 0.0);
        std::fill(db_.data.begin(), db_.data.end(), 0.0);
    }

private:
    int cin_, cout_;
    Tensor w_, b_, dw_, db_;
    Tensor x_;
};

// Early-fusion temporal convolution: kernel (T,1,1,1,cout) applied VALID over
// the time axis, collapsing (n,T,h,w,1) to (n,h,w,cout).
class Conv3DLayer final : public Layer {
public:
    Conv3DLayer(int t, int cout, std::mt19937_64 &rng)
        : t_(t), cout_(cout), w_({t, 1, 1, 1, cout}), b_({cout}), dw_({t, 1, 1, 1, cout}),
          db_({cout}) {
        init_uniform(w_, init_scale(t), rng);
    }
    Tensor forward(const Tensor &x, bool, std::mt19937_64 *) override {
        if (x.shape.size() != 5 || x.shape[4] != 1)
            shape_error("conv3d", x.shape, "(n, t, h, w, 1)");
        if (x.shape[1] != t_)
            throw std::runtime_error("layer conv3d: time dimension " + std::to_string(x.shape[1]) +
                                     " != kernel time extent " + std::to_string(t_));
        x_ = x;
        int n = x.shape[0], h = x.shape[2], w = x.shape[3];
        size_t hw = static_cast<size_t>(h) * w;
        Tensor y({n, h, w, cout_});
        for (int in = 0; in < n; ++in)
            for (size_t p = 0; p < hw; ++p) {
                double *out = &y.data[(static_cast<size_t>(in) * hw + p) * cout_];
                for (int co = 0; co < cout_; ++co) out[co] = b_.data[co];
                for (int t = 0; t < t_; ++t) {
                    double xv = x.data[(static_cast<size_t>(in) * t_ + t) * hw + p];
                    const double *wr = &w_.data[static_cast<size_t>(t) * cout_];
                    for (int co = 0; co < cout_; ++co) out[co] += xv * wr[co];
                }
            }
        return y;
    }
    Tensor backward(const Tensor &dy) override {
        int n = x_.shape[0], h = x_.shape[2], w = x_.shape[3];
        size_t hw = static_cast<size_t>(h) * w;
        Tensor dx(x_.shape);
        for (int in = 0; in < n; ++in)
            for (size_t p = 0; p < hw; ++p) {
                const double *g = &dy.data[(static_cast<size_t>(in) * hw + p) * cout_];
                for (int co = 0; co < cout_; ++co) db_.data[co] += g[co];
                for (int t = 0; t < t_; ++t) {
                    size_t xi = (static_cast<size_t>(in) * t_ + t) * hw + p;
                    double xv = x_.data[xi];
                    const double *wr = &w_.data[static_cast<size_t>(t) * cout_];
                    double *dwr = &dw_.data[static_cast<size_t>(t) * cout_];
                    double acc = 0;
                    for (int co = 0; co < cout_; ++co) {
                        acc += wr[co] * g[co];
                        dwr[co] += xv * g[co];
                    }
                    dx.data[xi] = acc;
                }
            }
        return dx;
    }
    std::vector<Tensor *> params() override { return {&w_, &b_}; }
    std::vector<Tensor *> grads() override { return {&dw_, &db_}; }
    void zero_grads() override {
        std::fill(dw_.data.begin(), dw_.data.end(), 0.0);
        std::fill(db_.data.begin(), db_.data.end(), 0.0);
    }

private:
    int t_, cout_;
    Tensor w_, b_, dw_, db_;
    Tensor x_;
};

// 2x2 stride-2 max pooling with ceil output sizes (edge cells pool partial
// windows), followed by inverted dropout in training mode.
class MaxPoolDropoutLayer final : public Layer {
public:
    explicit MaxPoolDropoutLayer(double rate) : rate_(rate) {}
    Tensor forward(const Tensor &x, bool training, std::mt19937_64 *rng) override {
        if (x.shape.size() != 4) shape_error("maxpool", x.shape, "(n, h, w, c)");
        in_shape_ = x.shape;
        int n = x.shape[0], h = x.shape[1], w = x.shape[2], c = x.shape[3];
        int oh = (h + 1) / 2, ow = (w + 1) / 2;
        Tensor y({n, oh, ow, c});
        argmax_.assign(y.size(), 0);
        for (int in = 0; in < n; ++in)
            for (int oy = 0; oy < oh; ++oy)
                for (int ox = 0; ox < ow; ++ox)
                    for (int ch = 0; ch < c; ++ch) {
                        double best = -1e300;
                        size_t best_i = 0;
                        for (int dy = 0; dy < 2; ++dy) {
                            int iy = 2 * oy + dy;
                            if (iy >= h) break;
                            for (int dx = 0; dx < 2; ++dx) {
                                int ix = 2 * ox + dx;
                                if (ix >= w) break;
                                size_t xi =
                                    ((static_cast<size_t>(in) * h + iy) * w + ix) * c + ch;
                                if (x.data[xi] > best) {
                                    best = x.data[xi];
                                    best_i = xi;
                                }
                            }
                        }
                        size_t yi = ((static_cast<size_t>(in) * oh + oy) * ow + ox) * c + ch;
                        y.data[yi] = best;
                        argmax_[yi] = best_i;
                    }
        drop_scale_.assign(y.size(), 1.0);
        if (training && rate_ > 0.0) {
            if (!rng) throw std::runtime_error("layer maxpool: dropout needs an RNG in training");
            std::uniform_real_distribution<double> u(0.0, 1.0);
            double keep_scale = 1.0 / (1.0 - rate_);
            for (size_t i = 0; i < y.size(); ++i) {
                if (u(*rng) < rate_) {
                    drop_scale_[i] = 0.0;
                    y.data[i] = 0.0;
                } else {
                    drop_scale_[i] = keep_scale;
                    y.data[i] *= keep_scale;
                }
            }
        }
        return y;
    }
    Tensor backward(const Tensor &dy) override {
        Tensor dx(in_shape_);
        for (size_t i = 0; i < dy.size(); ++i)
            dx.data[argmax_[i]] += dy.data[i] * drop_scale_[i];
        return dx;
    }

private:
    double rate_;
    std::vector<int> in_shape_;
    std::vector<size_t> argmax_;
    std::vector<double> drop_scale_;
};

class DenseLayer final : public Layer {
public:
    DenseLayer(int in, int out, std::mt19937_64 &rng)
        : in_(in), out_(out), w_({in, out}), b_({out}), dw_({in, out}), db_({out}) {
        init_uniform(w_, init_scale(in), rng);
    }
    Tensor forward(const Tensor &x, bool, std::mt19937_64 *) override {
        if (x.shape.size() != 2 || x.shape[1] != in_) shape_error("dense", x.shape, "(n, in)");
        x_ = x;
        int n = x.shape[0];
        Tensor y({n, out_});
        for (int in = 0; in < n; ++in) {
            double *out = &y.data[static_cast<size_t>(in) * out_];
            for (int o = 0; o < out_; ++o) out[o] = b_.data[o];
            const double *xin = &x.data[static_cast<size_t>(in) * in_];
            for (int i = 0; i < in_; ++i) {
                double xv = xin[i];
                const double *wr = &w_.data[static_cast<size_t>(i) * out_];
                for (int o = 0; o < out_; ++o) out[o] += xv * wr[o];
            }
        }
        return y;
    }
    Tensor backward(const Tensor &dy) override {
        int n = x_.shape[0];
        Tensor dx({n, in_});
        for (int in = 0; in < n; ++in) {
            const double *g = &dy.data[static_cast<size_t>(in) * out_];
            for (int o = 0; o < out_; ++o) db_.data[o] += g[o];
            const double *xin = &x_.data[static_cast<size_t>(in) * in_];
            double *dxin = &dx.data[static_cast<size_t>(in) * in_];
            for (int i = 0; i < in_; ++i) {
                const double *wr = &w_.data[static_cast<size_t>(i) * out_];
                double *dwr = &dw_.data[static_cast<size_t>(i) * out_];
                double xv = xin[i];
                double acc = 0;
                for (int o = 0; o < out_; ++o) {
                    acc += wr[o] * g[o];
                    dwr[o] += xv * g[o];
                }
                dxin[i] = acc;
            }
        }
        return dx;
    }
    std::vector<Tensor *> params() override { return {&w_, &b_}; }
    std::vector<Tensor *> grads() override { return {&dw_, &db_}; }
    void zero_grads() override {
        std::fill(dw_.data.begin(), dw_.data.end(), 0.0);
        std::fill(db_.data.begin(), db_.data.end(), 0.0);
    }

private:
    int in_, out_;
    Tensor w_, b_, dw_, db_;
    Tensor x_;
};

std::unique_ptr<Layer> make_layer(const LayerSpec &s, std::mt19937_64 &rng) {
    switch (s.kind) {
    case LayerKind::Reshape: return std::make_unique<ReshapeLayer>(s.dims);
    case LayerKind::Conv2D: return std::make_unique<Conv2DLayer>(s.in_channels, s.out_channels, rng);
    case LayerKind::Conv3D:
        return std::make_unique<Conv3DLayer>(s.time_extent, s.out_channels, rng);
    case LayerKind::ReLU: return std::make_unique<ReluLayer>();
    case LayerKind::MaxPoolDropout: return std::make_unique<MaxPoolDropoutLayer>(s.dropout_rate);
    case LayerKind::Flatten: return std::make_unique<FlattenLayer>();
    case LayerKind::Dense: return std::make_unique<DenseLayer>(s.in_channels, s.out_channels, rng);
    }
    throw std::invalid_argument("make_layer: unknown layer kind");
}

} // namespace

// ---------------------------------------------------------------- network

Network::Network(const std::vector<LayerSpec> &specs, uint64_t init_seed) : specs_(specs) {
    std::mt19937_64 rng(init_seed);
    for (const auto &s : specs_) layers_.push_back(make_layer(s, rng));
}

Network::Network(const NetworkWeights &weights) : Network(weights.specs, 0) {
    auto dst = params();
    if (dst.size() != weights.params.size())
        throw std::runtime_error("Network: weights parameter count mismatch");
    for (size_t i = 0; i < dst.size(); ++i) {
        if (dst[i]->shape != weights.params[i].shape)
            throw std::runtime_error("Network: weights shape mismatch at tensor " +
                                     std::to_string(i));
        dst[i]->data = weights.params[i].data;
    }
}

Network::~Network() = default;
Network::Network(Network &&) noexcept = default;
Network &Network::operator=(Network &&) noexcept = default;

Tensor Network::forward(const Tensor &x, bool training, std::mt19937_64 *dropout_rng) {
    Tensor y = x;
    for (auto &l : layers_) y = l->forward(y, training, dropout_rng);
    return y;
}

Tensor Network::backward(const Tensor &dy) {
    Tensor g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<Tensor *> Network::params() {
    std::vector<Tensor *> out;
    for (auto &l : layers_)
        for (auto *p : l->params()) out.push_back(p);
    return out;
}

std::vector<Tensor *> Network::grads() {
    std::vector<Tensor *> out;
    for (auto &l : layers_)
        for (auto *g : l->grads()) out.push_back(g);
    return out;
}

void Network::zero_grads() {
    for (auto &l : layers_) l->zero_grads();
}

std::string Network::param_location(size_t param_index) const {
    size_t seen = 0;
    for (size_t li = 0; li < specs_.size(); ++li) {
        const auto &s = specs_[li];
        size_t np = (s.kind == LayerKind::Conv2D || s.kind == LayerKind::Conv3D ||
                     s.kind == LayerKind::Dense)
                        ? 2
                        : 0;
        if (param_index < seen + np) return "layer " + std::to_string(li);
        seen += np;
    }
    return "layer ?";
}

NetworkWeights Network::snapshot() const {
    NetworkWeights w;
    w.specs = specs_;
    for (auto &l : const_cast<Network *>(this)->layers_)
        for (auto *p : l->params()) w.params.push_back(*p);
    return w;
}

std::vector<std::vector<int>> Network::layer_output_shapes(const std::vector<int> &input_shape) {
    Tensor x(input_shape);
    std::vector<std::vector<int>> shapes;
    for (auto &l : layers_) {
        x = l->forward(x, false, nullptr);
        shapes.push_back(x.shape);
    }
    return shapes;
}

// ---------------------------------------------------------------- losses

Tensor softmax(const Tensor &logits) {
    if (logits.shape.size() != 2) throw std::invalid_argument("softmax: expected (n, classes)");
    int n = logits.shape[0], c = logits.shape[1];
    Tensor p = logits;
    for (int i = 0; i < n; ++i) {
        double *row = &p.data[static_cast<size_t>(i) * c];
        double mx = *std::max_element(row, row + c);
        double sum = 0;
        for (int j = 0; j < c; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < c; ++j) row[j] /= sum;
    }
    return p;
}

namespace {
constexpr double kProbEps = 1e-12;

void check_labels(const std::vector<int> &labels, int n, int c, const char *op) {
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument(std::string(op) + ": label count != batch size");
    for (int y : labels)
        if (y < 0 || y >= c) throw std::invalid_argument(std::string(op) + ": label out of range");
}
} // namespace

LossResult focal_loss(const Tensor &logits, const std::vector<int> &labels, double gamma,
                      const std::vector<double> &alpha) {
    if (gamma < 0) throw std::invalid_argument("focal_loss: gamma must be >= 0");
    int n = logits.shape[0], c = logits.shape[1];
    check_labels(labels, n, c, "focal_loss");
    if (!alpha.empty() && static_cast<int>(alpha.size()) != c)
        throw std::invalid_argument("focal_loss: alpha size != class count");

    LossResult r;
    r.probs = softmax(logits);
    r.dlogits = Tensor(logits.shape);
    double total = 0;
    for (int i = 0; i < n; ++i) {
        int y = labels[i];
        double a = alpha.empty() ? 1.0 : alpha[y];
        const double *p = &r.probs.data[static_cast<size_t>(i) * c];
        double py = std::max(p[y], kProbEps);
        double q = std::max(1.0 - py, 0.0);
        double modulator = std::pow(q, gamma);
        total += -a * modulator * std::log(py);
        // dL/dp_y, then chain through softmax: dz_j = p_j*(g_j - sum_k g_k p_k)
        double dLdpy =
            a * (gamma * (gamma > 0 ? std::pow(std::max(q, kProbEps), gamma - 1.0) : 0.0) *
                     std::log(py) -
                 modulator / py);
        double gy_py = dLdpy * py; // only the true-class entry of g is nonzero
        double *dz = &r.dlogits.data[static_cast<size_t>(i) * c];
        for (int j = 0; j < c; ++j) dz[j] = (-p[j] * gy_py) / n;
        dz[y] += gy_py / n;
    }
    r.loss = total / n;
    return r;
}

std::vector<double> gaussian_label_distribution(int label, int n_classes, double sigma) {
    if (sigma <= 0) throw std::invalid_argument("gaussian_label_distribution: sigma must be > 0");
    std::vector<double> t(n_classes);
    double sum = 0;
    for (int k = 0; k < n_classes; ++k) {
        double d = k - label;
        t[k] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += t[k];
    }
    for (auto &v : t) v /= sum;
    return t;
}

LossResult label_distribution_loss(const Tensor &logits, const std::vector<int> &labels,
                                   double sigma) {
    int n = logits.shape[0], c = logits.shape[1];
    check_labels(labels, n, c, "label_distribution_loss");

    LossResult r;
    r.probs = softmax(logits);
    r.dlogits = Tensor(logits.shape);
    double total = 0;
    for (int i = 0; i < n; ++i) {
        int y = labels[i];
        auto t = gaussian_label_distribution(y, c, sigma);
        const double *p = &r.probs.data[static_cast<size_t>(i) * c];
        double *dz = &r.dlogits.data[static_cast<size_t>(i) * c];
        double ce = -std::log(std::max(p[y], kProbEps));
        double kl = 0;
        for (int k = 0; k < c; ++k) {
            if (t[k] > 0) kl += t[k] * std::log(t[k] / std::max(p[k], kProbEps));
            // d(CE + KL)/dz_k = 2 p_k - onehot_k - t_k
            dz[k] = (2.0 * p[k] - (k == y ? 1.0 : 0.0) - t[k]) / n;
        }
        total += ce + kl;
    }
    r.loss = total / n;
    return r;
}

// ---------------------------------------------------------------- optimizer

void adam_step(Tensor &param, const Tensor &grad, AdamState &state, double lr,
               const std::string &where) {
    if (param.data.size() != grad.data.size())
        throw std::invalid_argument("adam_step: shape mismatch" +
                                    (where.empty() ? "" : " at " + where));
    if (state.m.empty()) {
        state.m.assign(param.size(), 0.0);
        state.v.assign(param.size(), 0.0);
    }
    for (double g : grad.data)
        if (!std::isfinite(g))
            throw std::runtime_error("divergence: non-finite gradient" +
                                     (where.empty() ? "" : " at " + where));
    ++state.step;
    double b1t = 1.0 - std::pow(state.beta1, state.step);
    double b2t = 1.0 - std::pow(state.beta2, state.step);
    for (size_t i = 0; i < param.size(); ++i) {
        double g = grad.data[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        double mhat = state.m[i] / b1t;
        double vhat = state.v[i] / b2t;
        param.data[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

// ---------------------------------------------------------------- training

namespace {

double lr_at(const std::vector<std::pair<int, double>> &schedule, int epoch) {
    if (schedule.empty()) throw std::invalid_argument("train: empty lr schedule");
    for (const auto &[e, r] : schedule)
        if (r <= 0) throw std::invalid_argument("train: learning rates must be positive");
    if (epoch <= schedule.front().first) return schedule.front().second;
    for (size_t i = 1; i < schedule.size(); ++i) {
        if (epoch <= schedule[i].first) {
            auto [e0, r0] = schedule[i - 1];
            auto [e1, r1] = schedule[i];
            if (e1 == e0) return r1;
            double f = static_cast<double>(epoch - e0) / (e1 - e0);
            return r0 + f * (r1 - r0);
        }
    }
    return schedule.back().second;
}

Tensor make_batch(const std::vector<std::vector<float>> &inputs, const std::vector<size_t> &idx,
                  size_t begin, size_t end) {
    int b = static_cast<int>(end - begin);
    int len = static_cast<int>(inputs[idx[begin]].size());
    Tensor x({b, len});
    for (size_t i = begin; i < end; ++i) {
        const auto &src = inputs[idx[i]];
        std::copy(src.begin(), src.end(), x.data.begin() + (i - begin) * len);
    }
    return x;
}

} // namespace

TrainResult train(const std::vector<LayerSpec> &specs, const std::vector<std::vector<float>> &inputs,
                  const std::vector<int> &labels, const TrainConfig &cfg) {
    if (inputs.empty()) throw std::invalid_argument("train: empty dataset");
    if (inputs.size() != labels.size())
        throw std::invalid_argument("train: inputs/labels size mismatch");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.ld_sigma <= 0) throw std::invalid_argument("train: sigma must be > 0");
    for (const auto &v : inputs)
        if (v.size() != inputs[0].size())
            throw std::invalid_argument("train: inhomogeneous payload lengths");

    int n_classes = 0;
    for (int y : labels) n_classes = std::max(n_classes, y + 1);

    // Stratified 90/10 split, deterministic per seed.
    std::mt19937_64 split_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::vector<size_t>> by_label(n_classes);
    for (size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
    std::vector<size_t> train_idx, val_idx;
    for (auto &grp : by_label) {
        std::shuffle(grp.begin(), grp.end(), split_rng);
        size_t n_val = static_cast<size_t>(cfg.validation_fraction * grp.size());
        if (n_val == 0 && grp.size() >= 2 && cfg.validation_fraction > 0) n_val = 1;
        for (size_t i = 0; i < grp.size(); ++i)
            (i < n_val ? val_idx : train_idx).push_back(grp[i]);
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    std::vector<double> alpha = cfg.focal_alpha;
    if (cfg.loss == TrainConfig::Loss::Focal && alpha.empty()) {
        // Inverse class frequency over the training split.
        std::vector<size_t> counts(n_classes, 0);
        for (size_t i : train_idx) ++counts[labels[i]];
        alpha.assign(n_classes, 1.0);
        for (int k = 0; k < n_classes; ++k)
            if (counts[k] > 0)
                alpha[k] = static_cast<double>(train_idx.size()) / (n_classes * counts[k]);
    }

    Network net(specs, cfg.seed);
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0xa5a5a5a5a5a5a5a5ull);
    std::mt19937_64 dropout_rng(cfg.seed ^ 0x5deece66dull);

    auto net_params = net.params();
    std::vector<AdamState> opt_state(net_params.size());

    int batch = std::max(1, cfg.batch_size);
    TrainResult result;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double lr = lr_at(cfg.lr_schedule, epoch);
        std::shuffle(train_idx.begin(), train_idx.end(), shuffle_rng);
        double loss_sum = 0;
        size_t seen = 0;
        for (size_t begin = 0; begin < train_idx.size(); begin += batch) {
            size_t end = std::min(begin + static_cast<size_t>(batch), train_idx.size());
            Tensor x = make_batch(inputs, train_idx, begin, end);
            std::vector<int> y;
            for (size_t i = begin; i < end; ++i) y.push_back(labels[train_idx[i]]);

            Tensor logits = net.forward(x, true, &dropout_rng);
            LossResult lr_res = cfg.loss == TrainConfig::Loss::Focal
                                    ? focal_loss(logits, y, cfg.focal_gamma, alpha)
                                    : label_distribution_loss(logits, y, cfg.ld_sigma);
            net.zero_grads();
            net.backward(lr_res.dlogits);
            auto gs = net.grads();
            for (size_t pi = 0; pi < net_params.size(); ++pi)
                adam_step(*net_params[pi], *gs[pi], opt_state[pi], lr, net.param_location(pi));

            loss_sum += lr_res.loss * static_cast<double>(end - begin);
            seen += end - begin;
        }

        // Held-out accuracy.
        size_t correct = 0;
        for (size_t begin = 0; begin < val_idx.size(); begin += batch) {
            size_t end = std::min(begin + static_cast<size_t>(batch), val_idx.size());
            Tensor x = make_batch(inputs, val_idx, begin, end);
            Tensor logits = net.forward(x, false, nullptr);
            int c = logits.shape[1];
            for (size_t i = begin; i < end; ++i) {
                const double *row = &logits.data[(i - begin) * c];
                int arg = static_cast<int>(std::max_element(row, row + c) - row);
                if (arg == labels[val_idx[i]]) ++correct;
            }
        }
        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = seen ? loss_sum / seen : 0.0;
        m.val_accuracy = val_idx.empty() ? 0.0 : static_cast<double>(correct) / val_idx.size();
        result.metrics.push_back(m);
    }
    result.weights = net.snapshot();
    return result;
}

std::vector<double> predict(Network &net, const std::vector<float> &input) {
    Tensor x({1, static_cast<int>(input.size())});
    std::copy(input.begin(), input.end(), x.data.begin());
    Tensor logits = net.forward(x, false, nullptr);
    Tensor p = softmax(logits);
    return p.data;
}

std::vector<double> predict(const NetworkWeights &weights, const std::vector<float> &input) {
    Network net(weights);
    return predict(net, input);
}

// ---------------------------------------------------------------- weight i/o

namespace {

const char *kind_name(LayerKind k) {
    switch (k) {
    case LayerKind::Reshape: return "reshape";
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::Conv3D: return "conv3d";
    case LayerKind::ReLU: return "relu";
    case LayerKind::MaxPoolDropout: return "pool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    }
    return "?";
}

void write_f32_le(std::ostream &os, const std::vector<double> &data) {
    for (double d : data) {
        float f = static_cast<float>(d);
        uint32_t bits;
        std::memcpy(&bits, &f, 4);
        char b[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                     static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
        os.write(b, 4);
    }
}

void read_f32_le(std::istream &is, std::vector<double> &data) {
    for (auto &d : data) {
        unsigned char b[4];
        is.read(reinterpret_cast<char *>(b), 4);
        if (!is) throw std::runtime_error("load_weights: truncated float payload");
        uint32_t bits = static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
                        (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
        float f;
        std::memcpy(&f, &bits, 4);
        d = f;
    }
}

} // namespace

void save_weights(const NetworkWeights &w, const std::string &path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_weights: cannot open " + path);
    os << "PVNN " << w.format_version << "\n";
    os << "layers " << w.specs.size() << "\n";
    for (const auto &s : w.specs) {
        os << kind_name(s.kind);
        switch (s.kind) {
        case LayerKind::Reshape:
            os << " " << s.dims.size();
            for (int d : s.dims) os << " " << d;
            break;
        case LayerKind::Conv2D: os << " " << s.in_channels << " " << s.out_channels; break;
        case LayerKind::Conv3D:
            os << " " << s.time_extent << " " << s.in_channels << " " << s.out_channels;
            break;
        case LayerKind::MaxPoolDropout: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.17g", s.dropout_rate);
            os << " " << buf;
            break;
        }
        case LayerKind::Dense: os << " " << s.in_channels << " " << s.out_channels; break;
        default: break;
        }
        os << "\n";
    }
    os << "params " << w.params.size() << "\n";
    for (const auto &t : w.params) {
        os << "tensor " << t.shape.size();
        for (int d : t.shape) os << " " << d;
        os << "\n";
    }
    os << "DATA\n";
    for (const auto &t : w.params) write_f32_le(os, t.data);
    if (!os) throw std::runtime_error("save_weights: write failed on " + path);
}

NetworkWeights load_weights(const std::string &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_weights: cannot open " + path);
    std::string tag;
    NetworkWeights w;
    if (!(is >> tag) || tag != "PVNN") throw std::runtime_error("load_weights: bad magic");
    if (!(is >> w.format_version) || w.format_version != 1)
        throw std::runtime_error("load_weights: unsupported format version");
    size_t n_layers = 0;
    if (!(is >> tag >> n_layers) || tag != "layers")
        throw std::runtime_error("load_weights: malformed layers header");
    for (size_t i = 0; i < n_layers; ++i) {
        std::string kind;
        if (!(is >> kind)) throw std::runtime_error("load_weights: truncated layer list");
        LayerSpec s;
        if (kind == "reshape") {
            s.kind = LayerKind::Reshape;
            size_t nd;
            is >> nd;
            s.dims.resize(nd);
            for (auto &d : s.dims) is >> d;
        } else if (kind == "conv2d") {
            s.kind = LayerKind::Conv2D;
            is >> s.in_channels >> s.out_channels;
        } else if (kind == "conv3d") {
            s.kind = LayerKind::Conv3D;
            is >> s.time_extent >> s.in_channels >> s.out_channels;
        } else if (kind == "relu") {
            s.kind = LayerKind::ReLU;
        } else if (kind == "pool") {
            s.kind = LayerKind::MaxPoolDropout;
            is >> s.dropout_rate;
        } else if (kind == "flatten") {
            s.kind = LayerKind::Flatten;
        } else if (kind == "dense") {
            s.kind = LayerKind::Dense;
            is >> s.in_channels >> s.out_channels;
        } else {
            throw std::runtime_error("load_weights: unknown layer kind " + kind);
        }
        if (!is) throw std::runtime_error("load_weights: malformed layer spec");
        w.specs.push_back(s);
    }
    size_t n_params = 0;
    if (!(is >> tag >> n_params) || tag != "params")
        throw std::runtime_error("load_weights: malformed params header");
    for (size_t i = 0; i < n_params; ++i) {
        size_t nd = 0;
        if (!(is >> tag >> nd) || tag != "tensor")
            throw std::runtime_error("load_weights: malformed tensor header");
        std::vector<int> shape(nd);
        for (auto &d : shape) is >> d;
        if (!is) throw std::runtime_error("load_weights: malformed tensor shape");
        w.params.emplace_back(shape);
    }
    if (!(is >> tag) || tag != "DATA") throw std::runtime_error("load_weights: missing DATA");
    is.get(); // newline
    for (auto &t : w.params) read_f32_le(is, t.data);
    return w;
}

} // namespace pianovis::nn
