#include "hydra/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace hydra {

std::string shape_str(const std::vector<int>& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out += "x";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(std::vector<int> shape_in) : shape(std::move(shape_in)) {
    if (shape.empty() || shape.size() > 3) {
        throw std::invalid_argument("Tensor: rank must be 1..3, got shape " + shape_str(shape));
    }
    std::size_t total = 1;
    for (int d : shape) {
        if (d <= 0) {
            throw std::invalid_argument("Tensor: dimensions must be positive, got shape " +
                                        shape_str(shape));
        }
        total *= static_cast<std::size_t>(d);
    }
    data.assign(total, 0.0);
}

Tensor Tensor::zeros(std::vector<int> shape) { return Tensor(std::move(shape)); }

Tensor Tensor::full(std::vector<int> shape, double value) {
    Tensor t(std::move(shape));
    t.fill(value);
    return t;
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows[0].empty()) {
        throw std::invalid_argument("Tensor::from_rows: empty input");
    }
    Tensor t({static_cast<int>(rows.size()), static_cast<int>(rows[0].size())});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            throw std::invalid_argument("Tensor::from_rows: ragged rows");
        }
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            t.at(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
        }
    }
    return t;
}

Tensor Tensor::vector_of(const std::vector<double>& values) {
    Tensor t({static_cast<int>(values.size())});
    t.data = values;
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double value) {
    for (double& v : data) v = value;
}

}  // namespace hydra
