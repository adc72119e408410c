#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "bridgesr/autodiff.hpp"
#include "bridgesr/errors.hpp"

namespace bridgesr {

// Adam with bias correction. step() skips the update (and reports false) when
// any gradient entry is non-finite; moments and the step counter then stay put.
class Adam {
public:
    explicit Adam(double lr = 5e-5, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {}

    double lr() const { return lr_; }
    void set_lr(double lr) { lr_ = lr; }
    uint64_t steps() const { return t_; }

    bool step(std::vector<ad::Tensor*>& params, const std::vector<const ad::Tensor*>& grads) {
        if (params.size() != grads.size()) throw NumericError("adam: tensor count mismatch");
        if (m_.empty()) {
            m_.resize(params.size());
            v_.resize(params.size());
            for (size_t i = 0; i < params.size(); ++i) {
                m_[i].assign(params[i]->size(), 0.0);
                v_[i].assign(params[i]->size(), 0.0);
            }
        }
        for (size_t i = 0; i < grads.size(); ++i)
            for (double gv : *grads[i])
                if (!std::isfinite(gv)) return false;

        t_ += 1;
        const double bc1 = 1.0 - std::pow(b1_, double(t_));
        const double bc2 = 1.0 - std::pow(b2_, double(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            ad::Tensor& p = *params[i];
            const ad::Tensor& gr = *grads[i];
            for (size_t j = 0; j < p.size(); ++j) {
                m_[i][j] = b1_ * m_[i][j] + (1.0 - b1_) * gr[j];
                v_[i][j] = b2_ * v_[i][j] + (1.0 - b2_) * gr[j] * gr[j];
                const double mh = m_[i][j] / bc1;
                const double vh = v_[i][j] / bc2;
                p[j] -= lr_ * mh / (std::sqrt(vh) + eps_);
            }
        }
        return true;
    }

private:
    double lr_, b1_, b2_, eps_;
    uint64_t t_ = 0;
    std::vector<ad::Tensor> m_, v_;
};

} // namespace bridgesr
