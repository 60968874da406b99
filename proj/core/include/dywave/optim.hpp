#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dywave/nn.hpp"
#include "dywave/tensor.hpp"

namespace dywave {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a ParamStore. Moment buffers are laid out in the
// store's parameter order.
class Adam {
public:
    explicit Adam(const ParamStore& ps, AdamConfig cfg = {}) : cfg_(cfg) {
        for (const auto& [name, t] : ps.items()) {
            m_.emplace_back(Tensor::zeros(t.shape()));
            v_.emplace_back(Tensor::zeros(t.shape()));
        }
    }

    void set_lr(double lr) { cfg_.lr = lr; }
    double lr() const { return cfg_.lr; }
    std::size_t steps() const { return t_; }

    // grads[i] pairs with params.items()[i]; a non-finite gradient aborts the
    // step before any parameter is touched
    void step(ParamStore& params, const std::vector<Tensor>& grads) {
        auto& items = params.items();
        if (grads.size() != items.size())
            throw std::invalid_argument("adam: gradient count mismatch");
        for (std::size_t i = 0; i < grads.size(); ++i) {
            if (!grads[i].same_shape(items[i].second))
                throw std::invalid_argument("adam: gradient shape mismatch on " +
                                            items[i].first);
            for (std::size_t j = 0; j < grads[i].numel(); ++j)
                if (!std::isfinite(grads[i][j]))
                    throw std::runtime_error("adam: non-finite gradient in " + items[i].first);
        }
        ++t_;
        double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < grads.size(); ++i) {
            Tensor& p = items[i].second;
            const Tensor& g = grads[i];
            for (std::size_t j = 0; j < p.numel(); ++j) {
                m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
                v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
                double mh = m_[i][j] / bc1;
                double vh = v_[i][j] / bc2;
                p[j] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
            }
        }
    }

private:
    AdamConfig cfg_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

// epoch in [0, epochs); anneals lr_max -> lr_min, hitting lr_min exactly on
// the final epoch
inline double cosine_lr(std::size_t epoch, std::size_t epochs, double lr_max, double lr_min) {
    if (epochs <= 1) return lr_max;
    double x = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(3.14159265358979323846 * x));
}

} // namespace dywave
