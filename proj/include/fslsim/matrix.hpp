#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fslsim {

// Row-major dense matrix; a batch is rows = samples, cols = features.
struct Matrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(size_t r, size_t c) { return data[r * cols + c]; }
    double at(size_t r, size_t c) const { return data[r * cols + c]; }

    Matrix row(size_t r) const {
        Matrix out(1, cols);
        for (size_t c = 0; c < cols; ++c) out.at(0, c) = at(r, c);
        return out;
    }
};

inline void check_shape(const Matrix& m, size_t cols, const char* what) {
    if (m.cols != cols)
        throw std::invalid_argument(std::string("shape mismatch in ") + what);
}

}  // namespace fslsim
