#pragma once

#include <numeric>
#include <string>
#include <vector>

namespace drift {

// Named dense tensor with an optional gradient buffer. The gradient is
// allocated only for trainable tensors; frozen tensors never receive one.
struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool trainable = true;

    Tensor() = default;
    Tensor(std::string n, std::vector<int> s) : name(std::move(n)), shape(std::move(s)) {
        data.assign(numel(), 0.0);
    }

    std::size_t numel() const {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        return n;
    }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
    }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
    void drop_grad() { grad.clear(); }
};

}  // namespace drift
