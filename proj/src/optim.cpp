#include "fedae/optim.hpp"

#include <cmath>

namespace fedae {

OptimizerState OptimizerState::sgd(double lr) {
    OptimizerState s;
    s.kind = OptimizerKind::Sgd;
    s.learning_rate = lr;
    return s;
}

OptimizerState OptimizerState::adam(double lr, double beta1, double beta2, double epsilon) {
    OptimizerState s;
    s.kind = OptimizerKind::Adam;
    s.learning_rate = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
}

void optimizer_step(ParamSet& params, OptimizerState& state) {
    if (!(state.learning_rate >= 0.0)) throw ConfigError("optimizer: learning rate must be non-negative");
    for (const auto& e : params.entries()) {
        if (e.tensor.requires_grad() && !e.tensor.has_grad()) {
            throw ShapeError("optimizer_step: parameter '" + e.name + "' has no gradient");
        }
    }
    ++state.step_count;
    if (state.kind == OptimizerKind::Sgd) {
        const auto lr = static_cast<float>(state.learning_rate);
        for (auto& e : params.entries()) {
            if (!e.tensor.requires_grad()) continue;
            auto v = e.tensor.values();
            const auto g = e.tensor.grad();
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr * g[i];
        }
        return;
    }

    const double t = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(state.beta1, t);
    const double correction2 = 1.0 - std::pow(state.beta2, t);
    const auto b1 = static_cast<float>(state.beta1);
    const auto b2 = static_cast<float>(state.beta2);
    const auto step = static_cast<float>(state.learning_rate / correction1);
    const auto root_c2 = static_cast<float>(std::sqrt(correction2));
    const auto eps = static_cast<float>(state.epsilon);
    for (auto& e : params.entries()) {
        if (!e.tensor.requires_grad()) continue;
        auto v = e.tensor.values();
        const auto g = e.tensor.grad();
        auto& m = state.first_moment[e.name];
        auto& s = state.second_moment[e.name];
        if (m.size() != v.size()) m.assign(v.size(), 0.0f);
        if (s.size() != v.size()) s.assign(v.size(), 0.0f);
        for (std::size_t i = 0; i < v.size(); ++i) {
            m[i] = b1 * m[i] + (1.0f - b1) * g[i];
            s[i] = b2 * s[i] + (1.0f - b2) * g[i] * g[i];
            v[i] -= step * m[i] / (std::sqrt(s[i]) / root_c2 + eps);
        }
    }
}

ParamBinding::ParamBinding(Tape<float>& tape, const ParamSet& params) : tape_(&tape) {
    vars_.reserve(params.size());
    for (const auto& e : params.entries()) vars_.emplace_back(e.name, tape.leaf(e.tensor));
}

Var<float> ParamBinding::operator[](std::string_view name) const {
    for (const auto& [n, v] : vars_) {
        if (n == name) return v;
    }
    throw ShapeError("ParamBinding: no parameter named '" + std::string(name) + "'");
}

void ParamBinding::write_grads(ParamSet& params) const {
    for (const auto& [name, var] : vars_) {
        Tensor* t = params.find(name);
        if (!t || !t->requires_grad()) continue;
        const auto g = tape_->grad(var);
        if (g.empty()) {
            t->set_grad(std::vector<float>(t->size(), 0.0f));
        } else {
            t->set_grad(std::vector<float>(g.begin(), g.end()));
        }
    }
}

}  // namespace fedae
