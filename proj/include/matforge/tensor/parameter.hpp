#pragma once

#include "matforge/tensor/tensor.hpp"

#include <string>
#include <vector>

namespace matforge::tensor {

// Trainable tensor with a unique dotted name, e.g. "enc.0.conv.weight".
struct Parameter {
    std::string name;
    Tensor value;
};

// Shape-checked named array without autograd state; the unit stored in
// checkpoints (parameters and batch-norm running statistics alike).
struct NamedArray {
    std::string name;
    Shape shape;
    std::vector<float> data;
};

} // namespace matforge::tensor
