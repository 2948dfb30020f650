#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fedae/autodiff.hpp"
#include "fedae/param_set.hpp"

namespace fedae {

enum class OptimizerKind { Sgd, Adam };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Sgd;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::map<std::string, std::vector<float>> first_moment;
    std::map<std::string, std::vector<float>> second_moment;
    std::int64_t step_count = 0;

    static OptimizerState sgd(double lr);
    static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
};

/// Applies one update to every parameter with requires_grad set. Parameters
/// without requires_grad are frozen and skipped. Throws if a trainable
/// parameter has no gradient.
void optimizer_step(ParamSet& params, OptimizerState& state);

/// Records each ParamSet entry as a tape leaf, keyed by name.
class ParamBinding {
public:
    ParamBinding(Tape<float>& tape, const ParamSet& params);

    Var<float> operator[](std::string_view name) const;
    Tape<float>& tape() const noexcept { return *tape_; }

    /// Copies accumulated leaf gradients into the matching entries of `params`.
    void write_grads(ParamSet& params) const;

private:
    Tape<float>* tape_;
    std::vector<std::pair<std::string, Var<float>>> vars_;
};

}  // namespace fedae
