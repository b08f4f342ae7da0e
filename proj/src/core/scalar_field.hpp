#pragma once

#include <cstdint>
#include <utility>

#include "core/linalg.hpp"
#include "core/network.hpp"

namespace nnas {

// A differentiable scalar function of a vector input. The subspace and
// propagation machinery works against this interface, so a network QoI and
// an analytic test function are interchangeable.
class ScalarField {
public:
    virtual ~ScalarField() = default;
    virtual std::size_t dim() const = 0;
    virtual double value(const Vec& x) const = 0;
    virtual Vec gradient(const Vec& x) const = 0;
    virtual std::pair<double, Vec> value_and_gradient(const Vec& x) const {
        return {value(x), gradient(x)};
    }
};

// Network QoI as a scalar field. Overrides value_and_gradient with a single
// forward + backward sweep.
class QoiField final : public ScalarField {
public:
    QoiField(const DenseNetwork& net, QoISpec spec) : net_(&net), spec_(spec) {}

    std::size_t dim() const override { return net_->input_dim(); }
    double value(const Vec& x) const override { return net_->qoi(x, spec_); }
    Vec gradient(const Vec& x) const override { return net_->grad_qoi(x, spec_); }
    std::pair<double, Vec> value_and_gradient(const Vec& x) const override {
        return net_->qoi_with_gradient(x, spec_);
    }
    const QoISpec& spec() const noexcept { return spec_; }

private:
    const DenseNetwork* net_;
    QoISpec spec_;
};

// Decorator tallying model evaluations. A value_and_gradient call counts as
// one forward plus one gradient (the backward sweep rides on its forward).
class CountingField final : public ScalarField {
public:
    explicit CountingField(const ScalarField& inner) : inner_(&inner) {}

    std::size_t dim() const override { return inner_->dim(); }
    double value(const Vec& x) const override {
        ++forward_calls_;
        return inner_->value(x);
    }
    Vec gradient(const Vec& x) const override {
        ++gradient_calls_;
        return inner_->gradient(x);
    }
    std::pair<double, Vec> value_and_gradient(const Vec& x) const override {
        ++forward_calls_;
        ++gradient_calls_;
        return inner_->value_and_gradient(x);
    }

    std::uint64_t forward_calls() const noexcept { return forward_calls_; }
    std::uint64_t gradient_calls() const noexcept { return gradient_calls_; }

private:
    const ScalarField* inner_;
    mutable std::uint64_t forward_calls_ = 0;
    mutable std::uint64_t gradient_calls_ = 0;
};

} // namespace nnas
