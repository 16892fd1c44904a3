#include "hydra/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace hydra {

double grad_rel_error(double analytic, double numeric) {
    const double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    return std::fabs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const std::function<Value(Tape&)>& fn,
                           const std::vector<Parameter*>& inputs, double tolerance, double h) {
    for (Parameter* p : inputs) p->zero_grad();

    {
        Tape tape;
        Value loss = fn(tape);
        if (tape.tensor(loss).numel() != 1) {
            throw std::invalid_argument("grad_check: computation must produce a scalar, got " +
                                        shape_str(tape.tensor(loss).shape));
        }
        tape.backward(loss);
    }
    std::vector<Tensor> analytic;
    analytic.reserve(inputs.size());
    for (Parameter* p : inputs) analytic.push_back(p->grad);

    auto eval = [&fn]() {
        Tape tape(false);
        return tape.scalar(fn(tape));
    };

    GradCheckReport report;
    for (std::size_t pi = 0; pi < inputs.size(); ++pi) {
        Parameter& p = *inputs[pi];
        for (std::size_t i = 0; i < p.value.data.size(); ++i) {
            const double saved = p.value.data[i];
            p.value.data[i] = saved + h;
            const double f_plus = eval();
            p.value.data[i] = saved - h;
            const double f_minus = eval();
            p.value.data[i] = saved;
            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double err = grad_rel_error(analytic[pi].data[i], numeric);
            report.max_rel_error = std::max(report.max_rel_error, err);
            ++report.elements_checked;
        }
        p.zero_grad();
    }
    report.pass = report.max_rel_error <= tolerance;
    return report;
}

}  // namespace hydra
