#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <new>
#include <vector>

namespace clgen::nk {

using Index = Eigen::Index;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

using Shape = std::vector<Index>;

/// Cache-line aligned allocator. Eigen's vectorized kernels peel unaligned
/// heads, so the summation order of a reduction depends on the address of
/// its data; fixing the alignment makes every result a function of the
/// shapes alone.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlign{64};

    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlign); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Storage = std::vector<double, AlignedAllocator<double>>;

Index shape_size(const Shape& shape);

/// Dense row-major array of doubles.
///
/// Any tensor can be viewed as a matrix whose column count is the last
/// dimension and whose row count is the product of the leading dimensions,
/// so a [B, T, H] activation is a (B*T) x H matrix. A rank-0 tensor holds a
/// single scalar and views as 1 x 1.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, Storage data);
    Tensor(Shape shape, const std::vector<double>& data);
    Tensor(std::initializer_list<Index> shape, std::initializer_list<double> values);

    static Tensor scalar(double value);
    static Tensor from_matrix(const Eigen::Ref<const RowMatrix>& m);
    static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

    const Shape& shape() const noexcept { return shape_; }
    Index rank() const noexcept { return static_cast<Index>(shape_.size()); }
    Index dim(Index i) const { return shape_.at(static_cast<std::size_t>(i)); }
    Index size() const noexcept { return static_cast<Index>(data_.size()); }
    bool empty() const noexcept { return data_.empty(); }

    Index rows() const noexcept;
    Index cols() const noexcept;

    MatrixMap matrix() noexcept { return {data_.data(), rows(), cols()}; }
    ConstMatrixMap matrix() const noexcept { return {data_.data(), rows(), cols()}; }
    VectorMap flat() noexcept { return {data_.data(), size()}; }
    ConstVectorMap flat() const noexcept { return {data_.data(), size()}; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    Storage& values() noexcept { return data_; }
    const Storage& values() const noexcept { return data_; }

    double& operator[](Index i) noexcept { return data_[static_cast<std::size_t>(i)]; }
    double operator[](Index i) const noexcept { return data_[static_cast<std::size_t>(i)]; }
    double& operator()(Index r, Index c) noexcept { return data_[static_cast<std::size_t>(r * cols() + c)]; }
    double operator()(Index r, Index c) const noexcept { return data_[static_cast<std::size_t>(r * cols() + c)]; }

    /// Value of a rank-0 or single-element tensor.
    double item() const;

    Tensor reshaped(Shape shape) const;
    bool all_finite() const noexcept;
    void fill(double value);

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    Storage data_;
};

/// Text dump: one line with the shape, then whitespace-separated values.
void write_text(std::ostream& os, const Tensor& t);
Tensor read_text(std::istream& is);

} // namespace clgen::nk
