#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "proact/core/linalg.hpp"

namespace proact::training {

struct AdamConfig {
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// First/second moment estimates kept per parameter block in visitation order.
class Adam {
public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

    template <typename Params>
    void step(Params& params, const Params& grads) {
        std::vector<const Matrix*> g;
        grads.for_each_parameter([&](const std::string&, const Matrix& m) { g.push_back(&m); });
        if (m_.empty()) {
            for (const Matrix* gi : g) {
                m_.push_back(Matrix::Zero(gi->rows(), gi->cols()));
                v_.push_back(Matrix::Zero(gi->rows(), gi->cols()));
            }
        }
        ++t_;
        const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        std::size_t k = 0;
        params.for_each_parameter([&](const std::string&, Matrix& p) {
            const Matrix& gk = *g[k];
            m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * gk;
            v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * gk.cwiseProduct(gk);
            p.array() -= cfg_.learning_rate * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + cfg_.epsilon);
            ++k;
        });
    }

    const AdamConfig& config() const { return cfg_; }
    std::int64_t steps_taken() const { return t_; }

    void save(std::ostream& out) const;
    void load(std::istream& in);

private:
    AdamConfig cfg_;
    std::vector<Matrix> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace proact::training
