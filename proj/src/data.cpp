#include "fslsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fslsim {

Dataset Dataset::subset(const std::vector<size_t>& indices) const {
    Dataset out;
    out.features = Matrix(indices.size(), features.cols);
    out.labels.reserve(indices.size());
    for (size_t r = 0; r < indices.size(); ++r) {
        for (size_t c = 0; c < features.cols; ++c)
            out.features.at(r, c) = features.at(indices[r], c);
        out.labels.push_back(labels[indices[r]]);
    }
    return out;
}

Matrix Dataset::batch_features(size_t begin, size_t count) const {
    Matrix out(count, features.cols);
    for (size_t r = 0; r < count; ++r)
        for (size_t c = 0; c < features.cols; ++c)
            out.at(r, c) = features.at(begin + r, c);
    return out;
}

std::vector<int> Dataset::batch_labels(size_t begin, size_t count) const {
    return {labels.begin() + begin, labels.begin() + begin + count};
}

Dataset make_synthetic(size_t classes, size_t dim, size_t n, uint64_t seed) {
    if (classes < 2 || dim < 1 || n < classes)
        throw std::invalid_argument("bad synthetic dataset parameters");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.7);

    // class means on a circle of radius 3 in the first two coordinates
    Dataset ds;
    ds.features = Matrix(n, dim);
    ds.labels.resize(n);
    for (size_t i = 0; i < n; ++i) {
        int cls = int(i % classes);
        double angle = 2.0 * M_PI * double(cls) / double(classes);
        ds.labels[i] = cls;
        for (size_t d = 0; d < dim; ++d) {
            double mean = 0.0;
            if (d == 0) mean = 3.0 * std::cos(angle);
            if (d == 1) mean = 3.0 * std::sin(angle);
            ds.features.at(i, d) = mean + noise(rng);
        }
    }
    return ds;
}

namespace {

uint32_t read_be32(std::istream& in) {
    uint8_t b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return (uint32_t(b[0]) << 24) | (uint32_t(b[1]) << 16) |
           (uint32_t(b[2]) << 8) | uint32_t(b[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("cannot open " + images_path);
    if (read_be32(img) != 0x00000803)
        throw std::runtime_error("bad IDX image magic in " + images_path);
    uint32_t n = read_be32(img);
    uint32_t h = read_be32(img);
    uint32_t w = read_be32(img);

    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("cannot open " + labels_path);
    if (read_be32(lab) != 0x00000801)
        throw std::runtime_error("bad IDX label magic in " + labels_path);
    if (read_be32(lab) != n)
        throw std::runtime_error("image/label count mismatch");

    Dataset ds;
    ds.features = Matrix(n, size_t(h) * w);
    ds.labels.resize(n);
    std::vector<uint8_t> row(size_t(h) * w);
    for (uint32_t i = 0; i < n; ++i) {
        img.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        for (size_t j = 0; j < row.size(); ++j)
            ds.features.at(i, j) = double(row[j]) / 255.0;
        char l;
        lab.read(&l, 1);
        ds.labels[i] = int(uint8_t(l));
    }
    if (!img || !lab) throw std::runtime_error("truncated IDX file");
    return ds;
}

std::vector<std::string> client_ids(size_t n) {
    std::vector<std::string> out;
    for (size_t i = 1; i <= n; ++i) out.push_back("client" + std::to_string(i));
    return out;
}

DatasetPartition partition_iid(const Dataset& data, size_t n_clients,
                               uint64_t seed) {
    if (n_clients == 0) throw std::invalid_argument("n_clients must be positive");
    if (data.size() < n_clients)
        throw std::invalid_argument("fewer samples than clients");
    std::vector<size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    auto ids = client_ids(n_clients);
    DatasetPartition part;
    for (size_t i = 0; i < idx.size(); ++i)
        part[ids[i % n_clients]].push_back(idx[i]);
    return part;
}

DatasetPartition partition_dirichlet(const Dataset& data, size_t n_clients,
                                     double alpha, uint64_t seed,
                                     size_t max_retries) {
    if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
    if (n_clients == 0) throw std::invalid_argument("n_clients must be positive");

    int num_classes = 0;
    for (int l : data.labels) num_classes = std::max(num_classes, l + 1);
    std::vector<std::vector<size_t>> by_class(num_classes);
    for (size_t i = 0; i < data.size(); ++i) by_class[data.labels[i]].push_back(i);
    for (const auto& cls : by_class)
        if (cls.empty()) throw std::invalid_argument("class with no samples");

    std::mt19937_64 rng(seed);
    std::gamma_distribution<double> gamma(alpha, 1.0);
    auto ids = client_ids(n_clients);

    for (size_t attempt = 0; attempt < max_retries; ++attempt) {
        DatasetPartition part;
        for (const auto& id : ids) part[id] = {};
        for (auto cls : by_class) {
            std::shuffle(cls.begin(), cls.end(), rng);
            // p ~ Dirichlet(alpha * 1_N)
            std::vector<double> p(n_clients);
            double sum = 0.0;
            for (double& v : p) {
                v = gamma(rng);
                sum += v;
            }
            if (sum <= 0.0) sum = 1.0;
            for (double& v : p) v /= sum;

            // largest-remainder rounding of quotas to |class| samples
            size_t n = cls.size();
            std::vector<size_t> counts(n_clients);
            std::vector<std::pair<double, size_t>> rem(n_clients);
            size_t assigned = 0;
            for (size_t i = 0; i < n_clients; ++i) {
                double quota = p[i] * double(n);
                counts[i] = size_t(std::floor(quota));
                assigned += counts[i];
                rem[i] = {quota - std::floor(quota), i};
            }
            std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            for (size_t k = 0; assigned < n; ++k, ++assigned)
                counts[rem[k % n_clients].second]++;

            size_t pos = 0;
            for (size_t i = 0; i < n_clients; ++i) {
                for (size_t k = 0; k < counts[i]; ++k)
                    part[ids[i]].push_back(cls[pos++]);
            }
        }
        bool ok = std::all_of(part.begin(), part.end(), [](const auto& kv) {
            return !kv.second.empty();
        });
        if (ok) {
            for (auto& [_, v] : part) std::sort(v.begin(), v.end());
            return part;
        }
    }
    throw std::runtime_error("degenerate partition");
}

std::pair<double, double> evaluate(const SplitModel& model,
                                   const ParamVector& fc_params,
                                   const ParamVector& fs_params,
                                   const Dataset& testset, size_t batch_size) {
    if (testset.size() == 0) throw std::invalid_argument("empty testset");
    size_t correct = 0;
    double loss_sum = 0.0;
    for (size_t begin = 0; begin < testset.size(); begin += batch_size) {
        size_t count = std::min(batch_size, testset.size() - begin);
        Matrix x = testset.batch_features(begin, count);
        std::vector<int> y = testset.batch_labels(begin, count);
        Matrix act = forward_client(model, fc_params, x);
        auto [loss, probs] = forward_server(model, fs_params, act, y);
        loss_sum += loss * double(count);
        for (size_t r = 0; r < count; ++r) {
            size_t best = 0;
            for (size_t c = 1; c < probs.cols; ++c)
                if (probs.at(r, c) > probs.at(r, best)) best = c;
            if (int(best) == y[r]) ++correct;
        }
    }
    return {double(correct) / double(testset.size()),
            loss_sum / double(testset.size())};
}

}  // namespace fslsim
