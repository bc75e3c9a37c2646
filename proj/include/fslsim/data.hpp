#pragma once

#include <map>
#include <string>
#include <vector>

#include "fslsim/matrix.hpp"
#include "fslsim/model.hpp"

namespace fslsim {

struct Dataset {
    Matrix features;          // one sample per row
    std::vector<int> labels;  // class index per row

    size_t size() const { return labels.size(); }

    Dataset subset(const std::vector<size_t>& indices) const;
    Matrix batch_features(size_t begin, size_t count) const;
    std::vector<int> batch_labels(size_t begin, size_t count) const;
};

// client_id -> sample indices into the source dataset.
using DatasetPartition = std::map<std::string, std::vector<size_t>>;

// Well-separated Gaussian class clusters on a circle; the desk-scale
// training workload.
Dataset make_synthetic(size_t classes, size_t dim, size_t n, uint64_t seed);

// IDX-format images/labels (MNIST); pixel values scaled to [0,1].
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

std::vector<std::string> client_ids(size_t n);

DatasetPartition partition_iid(const Dataset& data, size_t n_clients,
                               uint64_t seed);

// Per-class Dirichlet(alpha) proportions with largest-remainder rounding.
// Redraws (bounded) until every client holds at least one sample.
DatasetPartition partition_dirichlet(const Dataset& data, size_t n_clients,
                                     double alpha, uint64_t seed,
                                     size_t max_retries = 100);

// Accuracy and mean loss of the split model over the test set.
std::pair<double, double> evaluate(const SplitModel& model,
                                   const ParamVector& fc_params,
                                   const ParamVector& fs_params,
                                   const Dataset& testset,
                                   size_t batch_size = 256);

}  // namespace fslsim
