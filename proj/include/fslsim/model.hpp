#pragma once

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fslsim/bytes.hpp"
#include "fslsim/matrix.hpp"

namespace fslsim {

struct LayerShape {
    std::string name;
    std::vector<size_t> dims;

    size_t count() const {
        size_t n = 1;
        for (size_t d : dims) n *= d;
        return n;
    }

    bool operator==(const LayerShape&) const = default;
};

// Flat parameter storage plus its layer layout.
struct ParamVector {
    std::vector<double> values;
    std::vector<LayerShape> layout;

    size_t size() const { return values.size(); }
    bool same_layout(const ParamVector& other) const {
        return layout == other.layout;
    }
};

// Stateless layer: forward and backward are pure functions of (input, params).
class Layer {
public:
    virtual ~Layer() = default;
    virtual std::string name() const = 0;
    virtual std::vector<LayerShape> param_shapes() const { return {}; }
    virtual size_t out_features() const = 0;

    virtual Matrix forward(const Matrix& x, std::span<const double> p) const = 0;
    // grad_out is dL/d(output); fills grad_p and returns dL/d(input).
    virtual Matrix backward(const Matrix& x, const Matrix& grad_out,
                            std::span<const double> p,
                            std::span<double> grad_p) const = 0;

    size_t param_count() const {
        size_t n = 0;
        for (const auto& s : param_shapes()) n += s.count();
        return n;
    }
};

using LayerPtr = std::shared_ptr<const Layer>;

LayerPtr make_dense(const std::string& name, size_t in, size_t out);
LayerPtr make_relu(const std::string& name, size_t features);
LayerPtr make_conv2d(const std::string& name, size_t in_ch, size_t out_ch,
                     size_t kernel, size_t pad, size_t h, size_t w);
LayerPtr make_maxpool2(const std::string& name, size_t ch, size_t h, size_t w);

// The f_c / f_s partition: layers [0, split_index) run on clients, the rest
// plus the softmax cross-entropy head on the server entity.
struct SplitModel {
    std::string spec_name;
    std::vector<LayerPtr> layers;
    size_t split_index = 0;
    size_t input_dim = 0;
    size_t num_classes = 0;

    std::span<const LayerPtr> fc_layers() const {
        return {layers.data(), split_index};
    }
    std::span<const LayerPtr> fs_layers() const {
        return {layers.data() + split_index, layers.size() - split_index};
    }
    size_t cut_features() const;
};

struct BuiltModel {
    SplitModel model;
    ParamVector fc_params;
    ParamVector fs_params;
};

// spec is "tiny-mlp" (dense-relu-dense-relu-dense, split after first relu)
// or "mnist-cnn-5" (two conv-pool blocks then two dense layers, split at the
// first pooling layer). Initialization is Glorot-uniform from the seed.
BuiltModel build_model(const std::string& spec, uint64_t seed);
BuiltModel build_mlp(const std::vector<size_t>& dims, size_t split_index,
                     uint64_t seed);

ParamVector layout_for(std::span<const LayerPtr> layers);

Matrix forward_layers(std::span<const LayerPtr> layers, const ParamVector& params,
                      const Matrix& x);

Matrix forward_client(const SplitModel& model, const ParamVector& fc_params,
                      const Matrix& inputs);

// Mean softmax cross-entropy over the batch; predictions are class
// probabilities.
std::pair<double, Matrix> forward_server(const SplitModel& model,
                                         const ParamVector& fs_params,
                                         const Matrix& activations,
                                         const std::vector<int>& labels);

std::pair<ParamVector, Matrix> backward_server(const SplitModel& model,
                                               const ParamVector& fs_params,
                                               const Matrix& activations,
                                               const std::vector<int>& labels);

ParamVector backward_client(const SplitModel& model, const ParamVector& fc_params,
                            const Matrix& inputs, const Matrix& grad_activations);

void sgd_step(ParamVector& params, const ParamVector& grad, double eta);

// Dataset-size-weighted parameter mean. Summation order follows the input
// list, so callers that need consensus-grade determinism must present
// updates in canonical (client_id-sorted) order.
ParamVector fedavg(const std::vector<std::pair<ParamVector, double>>& updates);

Bytes serialize_params(const ParamVector& params);
ParamVector deserialize_params(const Bytes& data);

Bytes serialize_matrix(const Matrix& m);
Matrix deserialize_matrix(const Bytes& data);

std::pair<double, Matrix> softmax_cross_entropy(const Matrix& logits,
                                                const std::vector<int>& labels);

}  // namespace fslsim
