#include "clgen/numkernel/autodiff.hpp"

#include "clgen/common/error.hpp"

#include <string>

namespace clgen::nk {

const Tensor& Var::value() const { return tape_->value_of(id_); }

Tensor Var::grad() const {
    if (const Tensor* g = tape_->grad_of(id_))
        return *g;
    return Tensor::zeros_like(value());
}

bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) {
    if (!value.all_finite())
        throw NumericalError("constant: non-finite value");
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Tensor value) {
    if (!value.all_finite())
        throw NumericalError("leaf: non-finite value");
    nodes_.push_back(Node{std::move(value), {}, {}, nullptr, grad_enabled_, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p) {
    nodes_.push_back(Node{p.value(), {}, {}, &p, grad_enabled_, true});
    return Var(this, nodes_.size() - 1);
}

template <typename Range>
Var Tape::record_impl(const char* op, Tensor value, const Range& parents, BackwardFn fn) {
    if (!value.all_finite())
        throw NumericalError(std::string(op) + ": produced a non-finite value");
    bool needs = false;
    if (grad_enabled_)
        for (const Var& p : parents)
            needs = needs || nodes_[p.id()].requires_grad;
    Node node{std::move(value), {}, {}, nullptr, needs, false};
    if (needs)
        node.backward = std::move(fn);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> parents, BackwardFn fn) {
    return record_impl(op, std::move(value), parents, std::move(fn));
}

Var Tape::record(const char* op, Tensor value, const std::vector<Var>& parents, BackwardFn fn) {
    return record_impl(op, std::move(value), parents, std::move(fn));
}

const Tensor* Tape::grad_of(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.grad.empty() ? nullptr : &n.grad;
}

Tensor& Tape::grad_buffer(const Var& v) {
    Node& n = nodes_[v.id()];
    if (n.grad.empty())
        n.grad = Tensor::zeros_like(n.value);
    return n.grad;
}

void Tape::accumulate(const Var& v, const Tensor& g) {
    if (!nodes_[v.id()].requires_grad)
        return;
    grad_buffer(v).flat() += g.flat();
}

void Tape::backward(const Var& loss) {
    if (loss.tape_ != this)
        throw Error("backward: variable belongs to another tape");
    if (nodes_[loss.id()].value.size() != 1)
        throw Error("backward: loss must be a scalar");
    for (Node& n : nodes_)
        if (!n.is_leaf)
            n.grad = Tensor{};
    if (!nodes_[loss.id()].requires_grad)
        return;
    grad_buffer(loss).flat().array() += 1.0;

    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.requires_grad || n.grad.empty())
            continue;
        if (n.backward)
            n.backward(n.grad);
        if (n.param) {
            n.param->grad().flat() += n.grad.flat();
            n.grad = Tensor{};
        }
    }
}

} // namespace clgen::nk
