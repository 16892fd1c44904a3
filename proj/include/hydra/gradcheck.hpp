#pragma once

#include <functional>
#include <vector>

#include "hydra/autograd.hpp"

namespace hydra {

struct GradCheckReport {
    double max_rel_error = 0.0;
    int elements_checked = 0;
    bool pass = false;
};

// Relative error between an analytic and a central-difference gradient entry,
// measured against max(1, |analytic|, |numeric|) so near-zero gradients are
// compared absolutely.
double grad_rel_error(double analytic, double numeric);

// Checks the analytic gradient of a scalar-valued computation against central
// finite differences (default h = 1e-5) for every element of every listed
// parameter. `fn` must rebuild the computation on the given tape from the
// parameters' current values.
GradCheckReport grad_check(const std::function<Value(Tape&)>& fn,
                           const std::vector<Parameter*>& inputs, double tolerance,
                           double h = 1e-5);

}  // namespace hydra
