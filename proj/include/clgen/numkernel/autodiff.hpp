#pragma once

#include "clgen/numkernel/tensor.hpp"

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <string>
#include <vector>

namespace clgen::nk {

/// A named trainable tensor with its accumulated gradient.
class Parameter {
public:
    Parameter() = default;
    Parameter(std::string name, Tensor value)
        : name_(std::move(name)), value_(std::move(value)), grad_(Tensor::zeros_like(value_)) {}

    const std::string& name() const noexcept { return name_; }
    Tensor& value() noexcept { return value_; }
    const Tensor& value() const noexcept { return value_; }
    Tensor& grad() noexcept { return grad_; }
    const Tensor& grad() const noexcept { return grad_; }
    void zero_grad() { grad_.fill(0.0); }

private:
    std::string name_;
    Tensor value_;
    Tensor grad_;
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    /// Gradient accumulated by the last backward pass; zeros if none reached it.
    Tensor grad() const;
    const Shape& shape() const { return value().shape(); }
    bool requires_grad() const;
    bool valid() const noexcept { return tape_ != nullptr; }

    Tape& tape() const noexcept { return *tape_; }
    std::size_t id() const noexcept { return id_; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode tape. Nodes are appended in evaluation order, which is a
/// topological order, so backward() is a single reverse sweep.
///
/// backward() may be called more than once; gradients of leaves and
/// parameters accumulate across calls until cleared by the caller.
class Tape {
public:
    using BackwardFn = std::function<void(const Tensor& out_grad)>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool grad_enabled() const noexcept { return grad_enabled_; }

    Var constant(Tensor value);
    Var leaf(Tensor value);
    Var parameter(Parameter& p);

    /// Appends an op result. fn receives d(loss)/d(result) and must route it
    /// to the parents through accumulate(). Throws NumericalError if the value
    /// is not finite.
    Var record(const char* op, Tensor value, std::initializer_list<Var> parents, BackwardFn fn);
    Var record(const char* op, Tensor value, const std::vector<Var>& parents, BackwardFn fn);

    void backward(const Var& loss);

    /// Adds g into the gradient of v, if v requires one.
    void accumulate(const Var& v, const Tensor& g);
    /// Mutable gradient buffer of v, allocated as zeros on first use.
    Tensor& grad_buffer(const Var& v);

    const Tensor& value_of(std::size_t id) const { return nodes_[id].value; }
    const Tensor* grad_of(std::size_t id) const;
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        BackwardFn backward;
        Parameter* param = nullptr;
        bool requires_grad = false;
        bool is_leaf = false;
    };

    template <typename Range>
    Var record_impl(const char* op, Tensor value, const Range& parents, BackwardFn fn);

    std::vector<Node> nodes_;
    bool grad_enabled_;
};

} // namespace clgen::nk
