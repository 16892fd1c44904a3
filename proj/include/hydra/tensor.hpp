#pragma once

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace hydra {

std::string shape_str(const std::vector<int>& shape);

// Dense row-major tensor of rank 1..3, 64-bit reals. 64-bit is deliberate:
// finite-difference gradient checks need the headroom.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> shape_in);

    static Tensor zeros(std::vector<int> shape);
    static Tensor full(std::vector<int> shape, double value);
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);
    static Tensor vector_of(const std::vector<double>& values);

    int rank() const { return static_cast<int>(shape.size()); }
    std::size_t numel() const { return data.size(); }
    int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

    double& at(int i) { return data[static_cast<std::size_t>(i)]; }
    double at(int i) const { return data[static_cast<std::size_t>(i)]; }
    double& at(int i, int j) { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(i) * shape[1] + j]; }
    double& at(int b, int i, int j) {
        return data[(static_cast<std::size_t>(b) * shape[1] + i) * shape[2] + j];
    }
    double at(int b, int i, int j) const {
        return data[(static_cast<std::size_t>(b) * shape[1] + i) * shape[2] + j];
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    bool all_finite() const;
    void fill(double value);

    bool operator==(const Tensor& other) const = default;
};

}  // namespace hydra
