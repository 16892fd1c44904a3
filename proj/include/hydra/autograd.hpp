#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hydra/tensor.hpp"

namespace hydra {

// A value plus its accumulated gradient. Frozen parameters (trainable == false)
// are never touched by the optimizer.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string name_in, Tensor value_in, bool trainable_in = true)
        : name(std::move(name_in)),
          value(std::move(value_in)),
          grad(Tensor::zeros(value.shape)),
          trainable(trainable_in) {}

    void zero_grad() { grad.fill(0.0); }
};

struct Value {
    int id = -1;
};

// Reverse-mode autodiff over a per-forward-pass recording. Each op appends one
// slot; backward() walks the slots in reverse and pushes gradients into the
// bound Parameters. The tape is meant to be built, run backward once, and
// discarded. With record=false the ops only compute forward values.
class Tape {
  public:
    explicit Tape(bool record = true) : record_(record) {}

    Value leaf(Tensor t);
    Value param(Parameter& p);
    // Re-enters a value as a constant leaf; gradients stop here.
    Value detach(Value a);

    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value add(Value a, Value b);
    Value add_row_bias(Value a, Value bias);
    Value add_const(Value a, const Tensor& c);
    Value scale(Value a, double c);
    Value softmax_rows(Value a);
    Value layer_norm(Value a, Value gain, Value bias);
    Value gelu(Value a);
    Value embedding_rows(Value table, const std::vector<int>& ids);
    Value slice_cols(Value a, int offset, int width);
    Value slice_rows(Value a, int offset, int height);
    Value concat_cols(const std::vector<Value>& parts);
    // Masked mean squared error over equal-shape matrices; the gradient flows
    // only through pred at mask==1 cells.
    Value mse_masked(Value pred, const Tensor& target, const Tensor& mask);
    Value cross_entropy(Value logits, const std::vector<int>& labels);
    Value mean(const std::vector<Value>& scalars);

    const Tensor& tensor(Value v) const { return slots_[static_cast<std::size_t>(v.id)].data; }
    double scalar(Value v) const;

    // Seeds d(loss)=1 and accumulates into every bound Parameter's grad.
    void backward(Value loss);

    bool recording() const { return record_; }
    std::size_t size() const { return slots_.size(); }

  private:
    struct Slot {
        Tensor data;
        Tensor grad;
        bool has_grad = false;
        Parameter* bound = nullptr;
        std::function<void(Tape&)> back;
    };

    Value push(Tensor data);
    void add_grad(int id, const Tensor& g);
    void add_grad_at(int id, std::size_t flat_index, double g);
    Tensor& grad_of(int id);
    const Tensor& data_of(int id) const { return slots_[static_cast<std::size_t>(id)].data; }

    std::vector<Slot> slots_;
    bool record_ = true;
};

double gelu_scalar(double x);

}  // namespace hydra
