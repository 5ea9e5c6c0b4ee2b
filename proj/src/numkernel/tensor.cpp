#include "clgen/numkernel/tensor.hpp"

#include "clgen/common/error.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace clgen::nk {

Index shape_size(const Shape& shape) {
    Index n = 1;
    for (Index d : shape) {
        if (d <= 0)
            throw InputError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(static_cast<std::size_t>(shape_size(shape_)), fill) {}

Tensor::Tensor(Shape shape, Storage data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != static_cast<Index>(data_.size()))
        throw InputError("tensor data length does not match shape");
}

Tensor::Tensor(Shape shape, const std::vector<double>& data)
    : Tensor(std::move(shape), Storage(data.begin(), data.end())) {}

Tensor::Tensor(std::initializer_list<Index> shape, std::initializer_list<double> values)
    : Tensor(Shape(shape), Storage(values)) {}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, Storage{value}); }

Tensor Tensor::from_matrix(const Eigen::Ref<const RowMatrix>& m) {
    Tensor t({m.rows(), m.cols()});
    t.matrix() = m;
    return t;
}

Index Tensor::rows() const noexcept {
    if (shape_.empty())
        return 1;
    return size() / shape_.back();
}

Index Tensor::cols() const noexcept { return shape_.empty() ? 1 : shape_.back(); }

double Tensor::item() const {
    if (data_.size() != 1)
        throw InputError("item() requires a single-element tensor");
    return data_.front();
}

Tensor Tensor::reshaped(Shape shape) const {
    if (shape_size(shape) != size())
        throw InputError("reshape changes element count");
    return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void write_text(std::ostream& os, const Tensor& t) {
    for (std::size_t i = 0; i < t.shape().size(); ++i)
        os << (i ? " " : "") << t.shape()[i];
    os << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (Index i = 0; i < t.size(); ++i)
        os << (i ? " " : "") << t[i];
    os << '\n';
}

Tensor read_text(std::istream& is) {
    std::string line;
    if (!std::getline(is, line))
        throw InputError("tensor text: missing shape line");
    std::istringstream shape_line(line);
    Shape shape;
    for (Index d; shape_line >> d;)
        shape.push_back(d);
    Storage data(static_cast<std::size_t>(shape_size(shape)));
    for (double& v : data)
        if (!(is >> v))
            throw InputError("tensor text: too few values");
    return Tensor(std::move(shape), std::move(data));
}

} // namespace clgen::nk
