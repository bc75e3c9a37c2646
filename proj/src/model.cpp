#include "fslsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fslsim {

namespace {

class DenseLayer final : public Layer {
public:
    DenseLayer(std::string name, size_t in, size_t out)
        : name_(std::move(name)), in_(in), out_(out) {}

    std::string name() const override { return name_; }
    size_t out_features() const override { return out_; }

    std::vector<LayerShape> param_shapes() const override {
        return {{name_ + ".weight", {in_, out_}}, {name_ + ".bias", {out_}}};
    }

    Matrix forward(const Matrix& x, std::span<const double> p) const override {
        check_shape(x, in_, name_.c_str());
        const double* w = p.data();
        const double* b = p.data() + in_ * out_;
        Matrix y(x.rows, out_);
        for (size_t r = 0; r < x.rows; ++r) {
            for (size_t j = 0; j < out_; ++j) y.at(r, j) = b[j];
            for (size_t i = 0; i < in_; ++i) {
                double xi = x.at(r, i);
                if (xi == 0.0) continue;
                const double* wrow = w + i * out_;
                for (size_t j = 0; j < out_; ++j) y.at(r, j) += xi * wrow[j];
            }
        }
        return y;
    }

    Matrix backward(const Matrix& x, const Matrix& g, std::span<const double> p,
                    std::span<double> gp) const override {
        const double* w = p.data();
        double* gw = gp.data();
        double* gb = gp.data() + in_ * out_;
        Matrix gx(x.rows, in_);
        for (size_t r = 0; r < x.rows; ++r) {
            for (size_t j = 0; j < out_; ++j) gb[j] += g.at(r, j);
            for (size_t i = 0; i < in_; ++i) {
                double xi = x.at(r, i);
                const double* wrow = w + i * out_;
                double* gwrow = gw + i * out_;
                double acc = 0.0;
                for (size_t j = 0; j < out_; ++j) {
                    double gj = g.at(r, j);
                    gwrow[j] += xi * gj;
                    acc += gj * wrow[j];
                }
                gx.at(r, i) = acc;
            }
        }
        return gx;
    }

private:
    std::string name_;
    size_t in_, out_;
};

class ReluLayer final : public Layer {
public:
    ReluLayer(std::string name, size_t features)
        : name_(std::move(name)), features_(features) {}

    std::string name() const override { return name_; }
    size_t out_features() const override { return features_; }

    Matrix forward(const Matrix& x, std::span<const double>) const override {
        check_shape(x, features_, name_.c_str());
        Matrix y = x;
        for (double& v : y.data) v = v > 0.0 ? v : 0.0;
        return y;
    }

    Matrix backward(const Matrix& x, const Matrix& g, std::span<const double>,
                    std::span<double>) const override {
        Matrix gx = g;
        for (size_t i = 0; i < gx.data.size(); ++i)
            if (x.data[i] <= 0.0) gx.data[i] = 0.0;
        return gx;
    }

private:
    std::string name_;
    size_t features_;
};

class Conv2dLayer final : public Layer {
public:
    Conv2dLayer(std::string name, size_t in_ch, size_t out_ch, size_t k,
                size_t pad, size_t h, size_t w)
        : name_(std::move(name)), ic_(in_ch), oc_(out_ch), k_(k), pad_(pad),
          h_(h), w_(w), oh_(h + 2 * pad - k + 1), ow_(w + 2 * pad - k + 1) {}

    std::string name() const override { return name_; }
    size_t out_features() const override { return oc_ * oh_ * ow_; }

    std::vector<LayerShape> param_shapes() const override {
        return {{name_ + ".weight", {oc_, ic_, k_, k_}}, {name_ + ".bias", {oc_}}};
    }

    Matrix forward(const Matrix& x, std::span<const double> p) const override {
        check_shape(x, ic_ * h_ * w_, name_.c_str());
        const double* w = p.data();
        const double* b = p.data() + oc_ * ic_ * k_ * k_;
        Matrix y(x.rows, out_features());
        for (size_t r = 0; r < x.rows; ++r) {
            const double* xr = x.data.data() + r * x.cols;
            double* yr = y.data.data() + r * y.cols;
            for (size_t o = 0; o < oc_; ++o) {
                for (size_t oy = 0; oy < oh_; ++oy) {
                    for (size_t ox = 0; ox < ow_; ++ox) {
                        double acc = b[o];
                        for (size_t c = 0; c < ic_; ++c) {
                            for (size_t ky = 0; ky < k_; ++ky) {
                                long iy = long(oy + ky) - long(pad_);
                                if (iy < 0 || iy >= long(h_)) continue;
                                for (size_t kx = 0; kx < k_; ++kx) {
                                    long ix = long(ox + kx) - long(pad_);
                                    if (ix < 0 || ix >= long(w_)) continue;
                                    acc += xr[(c * h_ + iy) * w_ + ix] *
                                           w[((o * ic_ + c) * k_ + ky) * k_ + kx];
                                }
                            }
                        }
                        yr[(o * oh_ + oy) * ow_ + ox] = acc;
                    }
                }
            }
        }
        return y;
    }

    Matrix backward(const Matrix& x, const Matrix& g, std::span<const double> p,
                    std::span<double> gp) const override {
        const double* w = p.data();
        double* gw = gp.data();
        double* gb = gp.data() + oc_ * ic_ * k_ * k_;
        Matrix gx(x.rows, x.cols);
        for (size_t r = 0; r < x.rows; ++r) {
            const double* xr = x.data.data() + r * x.cols;
            const double* gr = g.data.data() + r * g.cols;
            double* gxr = gx.data.data() + r * gx.cols;
            for (size_t o = 0; o < oc_; ++o) {
                for (size_t oy = 0; oy < oh_; ++oy) {
                    for (size_t ox = 0; ox < ow_; ++ox) {
                        double go = gr[(o * oh_ + oy) * ow_ + ox];
                        if (go == 0.0) continue;
                        gb[o] += go;
                        for (size_t c = 0; c < ic_; ++c) {
                            for (size_t ky = 0; ky < k_; ++ky) {
                                long iy = long(oy + ky) - long(pad_);
                                if (iy < 0 || iy >= long(h_)) continue;
                                for (size_t kx = 0; kx < k_; ++kx) {
                                    long ix = long(ox + kx) - long(pad_);
                                    if (ix < 0 || ix >= long(w_)) continue;
                                    size_t xi = (c * h_ + iy) * w_ + ix;
                                    size_t wi = ((o * ic_ + c) * k_ + ky) * k_ + kx;
                                    gw[wi] += go * xr[xi];
                                    gxr[xi] += go * w[wi];
                                }
                            }
                        }
                    }
                }
            }
        }
        return gx;
    }

private:
    std::string name_;
    size_t ic_, oc_, k_, pad_, h_, w_, oh_, ow_;
};

class MaxPool2Layer final : public Layer {
public:
    MaxPool2Layer(std::string name, size_t ch, size_t h, size_t w)
        : name_(std::move(name)), ch_(ch), h_(h), w_(w), oh_(h / 2), ow_(w / 2) {}

    std::string name() const override { return name_; }
    size_t out_features() const override { return ch_ * oh_ * ow_; }

    Matrix forward(const Matrix& x, std::span<const double>) const override {
        check_shape(x, ch_ * h_ * w_, name_.c_str());
        Matrix y(x.rows, out_features());
        for (size_t r = 0; r < x.rows; ++r) {
            const double* xr = x.data.data() + r * x.cols;
            double* yr = y.data.data() + r * y.cols;
            for (size_t c = 0; c < ch_; ++c)
                for (size_t oy = 0; oy < oh_; ++oy)
                    for (size_t ox = 0; ox < ow_; ++ox)
                        yr[(c * oh_ + oy) * ow_ + ox] = window_max(xr, c, oy, ox);
        }
        return y;
    }

    Matrix backward(const Matrix& x, const Matrix& g, std::span<const double>,
                    std::span<double>) const override {
        Matrix gx(x.rows, x.cols);
        for (size_t r = 0; r < x.rows; ++r) {
            const double* xr = x.data.data() + r * x.cols;
            const double* gr = g.data.data() + r * g.cols;
            double* gxr = gx.data.data() + r * gx.cols;
            for (size_t c = 0; c < ch_; ++c) {
                for (size_t oy = 0; oy < oh_; ++oy) {
                    for (size_t ox = 0; ox < ow_; ++ox) {
                        // route to the first maximal element in the window
                        size_t best = index_of(c, 2 * oy, 2 * ox);
                        for (size_t dy = 0; dy < 2; ++dy)
                            for (size_t dx = 0; dx < 2; ++dx) {
                                size_t idx = index_of(c, 2 * oy + dy, 2 * ox + dx);
                                if (xr[idx] > xr[best]) best = idx;
                            }
                        gxr[best] += gr[(c * oh_ + oy) * ow_ + ox];
                    }
                }
            }
        }
        return gx;
    }

private:
    size_t index_of(size_t c, size_t y, size_t x) const {
        return (c * h_ + y) * w_ + x;
    }
    double window_max(const double* xr, size_t c, size_t oy, size_t ox) const {
        double m = xr[index_of(c, 2 * oy, 2 * ox)];
        for (size_t dy = 0; dy < 2; ++dy)
            for (size_t dx = 0; dx < 2; ++dx)
                m = std::max(m, xr[index_of(c, 2 * oy + dy, 2 * ox + dx)]);
        return m;
    }

    std::string name_;
    size_t ch_, h_, w_, oh_, ow_;
};

}  // namespace

LayerPtr make_dense(const std::string& name, size_t in, size_t out) {
    return std::make_shared<DenseLayer>(name, in, out);
}
LayerPtr make_relu(const std::string& name, size_t features) {
    return std::make_shared<ReluLayer>(name, features);
}
LayerPtr make_conv2d(const std::string& name, size_t in_ch, size_t out_ch,
                     size_t kernel, size_t pad, size_t h, size_t w) {
    return std::make_shared<Conv2dLayer>(name, in_ch, out_ch, kernel, pad, h, w);
}
LayerPtr make_maxpool2(const std::string& name, size_t ch, size_t h, size_t w) {
    return std::make_shared<MaxPool2Layer>(name, ch, h, w);
}

size_t SplitModel::cut_features() const {
    if (split_index == 0) return input_dim;
    return layers[split_index - 1]->out_features();
}

ParamVector layout_for(std::span<const LayerPtr> layers) {
    ParamVector p;
    for (const auto& layer : layers)
        for (const auto& s : layer->param_shapes()) p.layout.push_back(s);
    size_t total = 0;
    for (const auto& s : p.layout) total += s.count();
    p.values.assign(total, 0.0);
    return p;
}

namespace {

// Glorot-uniform weights, zero biases; one RNG stream drawn in layer order.
void init_params(std::span<const LayerPtr> layers, ParamVector& p,
                 std::mt19937_64& rng) {
    size_t off = 0;
    for (const auto& layer : layers) {
        auto shapes = layer->param_shapes();
        for (const auto& s : shapes) {
            bool is_bias = s.name.ends_with(".bias");
            if (is_bias) {
                off += s.count();
                continue;
            }
            size_t fan_in, fan_out;
            if (s.dims.size() == 2) {  // dense: in x out
                fan_in = s.dims[0];
                fan_out = s.dims[1];
            } else {  // conv: oc x ic x k x k
                fan_in = s.dims[1] * s.dims[2] * s.dims[3];
                fan_out = s.dims[0] * s.dims[2] * s.dims[3];
            }
            double limit = std::sqrt(6.0 / double(fan_in + fan_out));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (size_t i = 0; i < s.count(); ++i) p.values[off + i] = dist(rng);
            off += s.count();
        }
    }
}

}  // namespace

BuiltModel build_mlp(const std::vector<size_t>& dims, size_t split_index,
                     uint64_t seed) {
    if (dims.size() < 2) throw std::invalid_argument("mlp needs >= 2 dims");
    SplitModel m;
    m.spec_name = "mlp";
    m.input_dim = dims.front();
    m.num_classes = dims.back();
    for (size_t i = 0; i + 1 < dims.size(); ++i) {
        std::string idx = std::to_string(i + 1);
        m.layers.push_back(make_dense("fc" + idx, dims[i], dims[i + 1]));
        if (i + 2 < dims.size())
            m.layers.push_back(make_relu("relu" + idx, dims[i + 1]));
    }
    m.split_index = split_index;
    if (split_index > m.layers.size())
        throw std::invalid_argument("split index out of range");

    BuiltModel built;
    built.model = m;
    built.fc_params = layout_for(built.model.fc_layers());
    built.fs_params = layout_for(built.model.fs_layers());
    std::mt19937_64 rng(seed);
    init_params(built.model.fc_layers(), built.fc_params, rng);
    init_params(built.model.fs_layers(), built.fs_params, rng);
    return built;
}

BuiltModel build_model(const std::string& spec, uint64_t seed) {
    if (spec == "tiny-mlp") {
        auto built = build_mlp({2, 16, 16, 3}, /*split after first relu*/ 2, seed);
        built.model.spec_name = spec;
        return built;
    }
    if (spec == "mnist-cnn-5") {
        SplitModel m;
        m.spec_name = spec;
        m.input_dim = 28 * 28;
        m.num_classes = 10;
        m.layers.push_back(make_conv2d("conv1", 1, 6, 3, 1, 28, 28));
        m.layers.push_back(make_relu("relu1", 6 * 28 * 28));
        m.layers.push_back(make_maxpool2("pool1", 6, 28, 28));
        m.layers.push_back(make_conv2d("conv2", 6, 12, 3, 1, 14, 14));
        m.layers.push_back(make_relu("relu2", 12 * 14 * 14));
        m.layers.push_back(make_maxpool2("pool2", 12, 14, 14));
        m.layers.push_back(make_dense("fc1", 12 * 7 * 7, 128));
        m.layers.push_back(make_relu("relu3", 128));
        m.layers.push_back(make_dense("fc2", 128, 10));
        m.split_index = 3;  // f_c ends with the first pooling layer

        BuiltModel built;
        built.model = m;
        built.fc_params = layout_for(built.model.fc_layers());
        built.fs_params = layout_for(built.model.fs_layers());
        std::mt19937_64 rng(seed);
        init_params(built.model.fc_layers(), built.fc_params, rng);
        init_params(built.model.fs_layers(), built.fs_params, rng);
        return built;
    }
    throw std::invalid_argument("unknown model spec: " + spec);
}

// ---------------------------------------------------------------------------
// Forward / backward

Matrix forward_layers(std::span<const LayerPtr> layers, const ParamVector& params,
                      const Matrix& x) {
    Matrix cur = x;
    size_t off = 0;
    for (const auto& layer : layers) {
        size_t n = layer->param_count();
        cur = layer->forward(cur, {params.values.data() + off, n});
        off += n;
    }
    return cur;
}

namespace {

// Runs the stack keeping per-layer inputs, then backpropagates.
Matrix backward_layers(std::span<const LayerPtr> layers, const ParamVector& params,
                       const Matrix& x, const Matrix& grad_out,
                       ParamVector& grad_params) {
    std::vector<Matrix> inputs;
    inputs.reserve(layers.size());
    Matrix cur = x;
    size_t off = 0;
    for (const auto& layer : layers) {
        inputs.push_back(cur);
        size_t n = layer->param_count();
        cur = layer->forward(cur, {params.values.data() + off, n});
        off += n;
    }
    Matrix g = grad_out;
    for (size_t i = layers.size(); i-- > 0;) {
        size_t n = layers[i]->param_count();
        off -= n;
        g = layers[i]->backward(inputs[i], g,
                                {params.values.data() + off, n},
                                {grad_params.values.data() + off, n});
    }
    return g;
}

void check_finite(const Matrix& m, const char* what) {
    for (double v : m.data)
        if (!std::isfinite(v))
            throw std::runtime_error(std::string("non-finite value in ") + what);
}

}  // namespace

std::pair<double, Matrix> softmax_cross_entropy(const Matrix& logits,
                                                const std::vector<int>& labels) {
    if (labels.size() != logits.rows)
        throw std::invalid_argument("label count != batch size");
    Matrix probs(logits.rows, logits.cols);
    double loss = 0.0;
    for (size_t r = 0; r < logits.rows; ++r) {
        if (labels[r] < 0 || size_t(labels[r]) >= logits.cols)
            throw std::invalid_argument("label out of range");
        double mx = logits.at(r, 0);
        for (size_t c = 1; c < logits.cols; ++c) mx = std::max(mx, logits.at(r, c));
        double sum = 0.0;
        for (size_t c = 0; c < logits.cols; ++c) {
            double e = std::exp(logits.at(r, c) - mx);
            probs.at(r, c) = e;
            sum += e;
        }
        for (size_t c = 0; c < logits.cols; ++c) probs.at(r, c) /= sum;
        loss -= std::log(std::max(probs.at(r, size_t(labels[r])), 1e-300));
    }
    loss /= double(logits.rows);
    return {loss, probs};
}

Matrix forward_client(const SplitModel& model, const ParamVector& fc_params,
                      const Matrix& inputs) {
    check_shape(inputs, model.input_dim, "forward_client");
    Matrix out = forward_layers(model.fc_layers(), fc_params, inputs);
    check_finite(out, "forward_client");
    return out;
}

std::pair<double, Matrix> forward_server(const SplitModel& model,
                                         const ParamVector& fs_params,
                                         const Matrix& activations,
                                         const std::vector<int>& labels) {
    check_shape(activations, model.cut_features(), "forward_server");
    Matrix logits = forward_layers(model.fs_layers(), fs_params, activations);
    return softmax_cross_entropy(logits, labels);
}

std::pair<ParamVector, Matrix> backward_server(const SplitModel& model,
                                               const ParamVector& fs_params,
                                               const Matrix& activations,
                                               const std::vector<int>& labels) {
    check_shape(activations, model.cut_features(), "backward_server");
    // forward to the logits, then dL/dlogits = (softmax - onehot) / B
    Matrix logits = forward_layers(model.fs_layers(), fs_params, activations);
    auto [loss, probs] = softmax_cross_entropy(logits, labels);
    (void)loss;
    Matrix dlogits = probs;
    for (size_t r = 0; r < dlogits.rows; ++r)
        dlogits.at(r, size_t(labels[r])) -= 1.0;
    for (double& v : dlogits.data) v /= double(dlogits.rows);

    ParamVector grad = fs_params;
    std::fill(grad.values.begin(), grad.values.end(), 0.0);
    Matrix grad_act = backward_layers(model.fs_layers(), fs_params, activations,
                                      dlogits, grad);
    return {std::move(grad), std::move(grad_act)};
}

ParamVector backward_client(const SplitModel& model, const ParamVector& fc_params,
                            const Matrix& inputs, const Matrix& grad_activations) {
    check_shape(inputs, model.input_dim, "backward_client");
    check_shape(grad_activations, model.cut_features(), "backward_client");
    if (grad_activations.rows != inputs.rows)
        throw std::invalid_argument("shape mismatch in backward_client");
    ParamVector grad = fc_params;
    std::fill(grad.values.begin(), grad.values.end(), 0.0);
    backward_layers(model.fc_layers(), fc_params, inputs, grad_activations, grad);
    return grad;
}

void sgd_step(ParamVector& params, const ParamVector& grad, double eta) {
    if (params.size() != grad.size())
        throw std::invalid_argument("shape mismatch in sgd_step");
    if (eta <= 0.0) throw std::invalid_argument("eta must be positive");
    for (size_t i = 0; i < params.values.size(); ++i)
        params.values[i] -= eta * grad.values[i];
}

ParamVector fedavg(const std::vector<std::pair<ParamVector, double>>& updates) {
    if (updates.empty()) throw std::invalid_argument("fedavg of empty list");
    double total = 0.0;
    for (const auto& [p, w] : updates) {
        if (w <= 0.0) throw std::invalid_argument("nonpositive weight");
        if (!p.same_layout(updates.front().first))
            throw std::invalid_argument("layout mismatch in fedavg");
        total += w;
    }
    ParamVector out = updates.front().first;
    std::fill(out.values.begin(), out.values.end(), 0.0);
    for (const auto& [p, w] : updates) {
        double coeff = w / total;
        for (size_t i = 0; i < out.values.size(); ++i)
            out.values[i] += coeff * p.values[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: magic, version, layer count, per-layer (name, rank, dims),
// then raw little-endian 64-bit reals.

static constexpr char kParamMagic[4] = {'F', 'S', 'L', 'P'};
static constexpr uint64_t kParamVersion = 1;

Bytes serialize_params(const ParamVector& params) {
    for (double v : params.values)
        if (!std::isfinite(v))
            throw std::invalid_argument("non-finite parameter value");
    ByteWriter w;
    w.raw(reinterpret_cast<const uint8_t*>(kParamMagic), 4);
    w.u64(kParamVersion);
    w.u64(params.layout.size());
    for (const auto& s : params.layout) {
        w.str(s.name);
        w.u64(s.dims.size());
        for (size_t d : s.dims) w.u64(d);
    }
    for (double v : params.values) w.f64(v);
    return w.take();
}

ParamVector deserialize_params(const Bytes& data) {
    ByteReader r(data);
    char magic[4];
    for (char& c : magic) c = char(r.u8());
    if (std::memcmp(magic, kParamMagic, 4) != 0)
        throw std::runtime_error("bad parameter magic");
    if (r.u64() != kParamVersion) throw std::runtime_error("bad parameter version");
    ParamVector p;
    uint64_t layers = r.u64();
    size_t total = 0;
    for (uint64_t i = 0; i < layers; ++i) {
        LayerShape s;
        s.name = r.str();
        uint64_t rank = r.u64();
        for (uint64_t d = 0; d < rank; ++d) s.dims.push_back(r.u64());
        total += s.count();
        p.layout.push_back(std::move(s));
    }
    if (r.remaining() != total * 8)
        throw std::runtime_error("parameter payload does not match layout");
    p.values.reserve(total);
    for (size_t i = 0; i < total; ++i) p.values.push_back(r.f64());
    return p;
}

Bytes serialize_matrix(const Matrix& m) {
    ByteWriter w;
    w.u64(m.rows);
    w.u64(m.cols);
    for (double v : m.data) w.f64(v);
    return w.take();
}

Matrix deserialize_matrix(const Bytes& data) {
    ByteReader r(data);
    uint64_t rows = r.u64();
    uint64_t cols = r.u64();
    Matrix m(rows, cols);
    if (r.remaining() != m.data.size() * 8)
        throw std::runtime_error("matrix payload does not match header");
    for (double& v : m.data) v = r.f64();
    return m;
}

}  // namespace fslsim
