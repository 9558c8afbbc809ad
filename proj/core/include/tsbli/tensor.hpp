#pragma once

// Dense D-order tensors and the multilinear operations used throughout the
// channel model and the message-passing engine.
//
// Layout: entries are stored in a flat array with the FIRST index varying
// fastest (column-major generalised to D modes). The flat offset of
// (i_0, ..., i_{D-1}) is  i_0 + N_0 * (i_1 + N_1 * (i_2 + ...)).
//
// Modes are 0-based in this API. For the SFT / SDD / BDD channel tensors mode
// 0 is spatial (beam), mode 1 frequency (delay), mode 2 temporal (Doppler).
//
// Mode-d matricization follows the Kolda-Bader convention: the column index of
// entry (i_0, ..., i_{D-1}) is the flat index of the remaining modes taken in
// ascending order, first remaining mode fastest.

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace tsbli {

using cplx = std::complex<double>;
using Shape = std::vector<std::size_t>;

using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr std::size_t kSpatialMode = 0;
inline constexpr std::size_t kFrequencyMode = 1;
inline constexpr std::size_t kTemporalMode = 2;

/// Thrown when operand shapes are not conformable.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape shape, T fill = T{}) : shape_(std::move(shape)) {
    validate_shape(shape_);
    data_.assign(shape_numel(shape_), fill);
  }

  BasicTensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    validate_shape(shape_);
    if (data_.size() != shape_numel(shape_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_to_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t order() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t dim(std::size_t mode) const {
    if (mode >= shape_.size()) throw std::out_of_range("mode index out of range");
    return shape_[mode];
  }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  T& operator[](std::size_t flat) { return data_[flat]; }
  const T& operator[](std::size_t flat) const { return data_[flat]; }

  template <typename... I>
  T& operator()(I... idx) {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }
  template <typename... I>
  const T& operator()(I... idx) const {
    return data_[offset({static_cast<std::size_t>(idx)...})];
  }

  std::size_t offset(std::initializer_list<std::size_t> idx) const {
    return offset(std::span<const std::size_t>(idx.begin(), idx.size()));
  }
  std::size_t offset(std::span<const std::size_t> idx) const {
    if (idx.size() != shape_.size()) throw std::out_of_range("index arity does not match tensor order");
    std::size_t flat = 0;
    std::size_t stride = 1;
    for (std::size_t d = 0; d < shape_.size(); ++d) {
      if (idx[d] >= shape_[d]) throw std::out_of_range("tensor index out of range");
      flat += idx[d] * stride;
      stride *= shape_[d];
    }
    return flat;
  }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  static void validate_shape(const Shape& shape) {
    if (shape.empty()) throw ShapeError("tensor shape must have at least one mode");
    for (auto n : shape) {
      if (n == 0) throw ShapeError("tensor dimensions must be >= 1, got " + shape_to_string(shape));
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<cplx>;
using RealTensor = BasicTensor<double>;

// ---------------------------------------------------------------------------
// Scalar reductions

/// <X, Y> = sum X .* conj(Y).
cplx inner(const Tensor& x, const Tensor& y);
double inner(const RealTensor& x, const RealTensor& y);
double fro_norm(const Tensor& x);
double fro_norm_sq(const Tensor& x);
double l1_norm(const Tensor& x);
double l1_norm(const RealTensor& x);

// ---------------------------------------------------------------------------
// Matricization and mode products

/// Mode-d unfolding: N_d x prod_{k != d} N_k, columns are mode-d fibers.
CMatrix mode_matricize(const Tensor& x, std::size_t mode);
RMatrix mode_matricize(const RealTensor& x, std::size_t mode);

/// Inverse of mode_matricize for a tensor of the given shape.
Tensor mode_fold(const CMatrix& m, std::size_t mode, const Shape& shape);
RealTensor mode_fold(const RMatrix& m, std::size_t mode, const Shape& shape);

/// X x_d U: replaces N_d with rows(U). cols(U) must equal N_d.
Tensor mode_product(const Tensor& x, const CMatrix& u, std::size_t mode);
Tensor mode_product(const Tensor& x, const RMatrix& u, std::size_t mode);
RealTensor mode_product(const RealTensor& x, const RMatrix& u, std::size_t mode);

/// X x_{-d} Y = X_d * Y_d^T (no conjugation). X and Y must agree on every
/// mode except d.
CMatrix contract_except(const Tensor& x, const Tensor& y, std::size_t mode);
RMatrix contract_except(const RealTensor& x, const RealTensor& y, std::size_t mode);

template <typename M>
struct ModeFactor {
  M matrix;
  std::size_t mode = 0;
};

using CModeFactor = ModeFactor<CMatrix>;
using RModeFactor = ModeFactor<RMatrix>;

/// Order in which the factors are applied when sizes are to be kept small:
/// factors sorted by rows/cols ratio, shrinking ones first. Ties keep the
/// caller's order.
std::vector<std::size_t> ascending_size_order(const Shape& shape,
                                              std::span<const std::pair<std::size_t, std::size_t>> factor_dims,
                                              std::span<const std::size_t> modes);

/// Element count of the largest intermediate (including the result) produced
/// when applying factors of the given (rows, cols) to `shape` in `order`.
std::size_t largest_intermediate(const Shape& shape,
                                 std::span<const std::pair<std::size_t, std::size_t>> factor_dims,
                                 std::span<const std::size_t> modes,
                                 std::span<const std::size_t> order);

/// Applies every factor. With `ascending_size_order` set the factors run in
/// the order returned by ascending_size_order(); otherwise in list order.
/// Each factor's mode must be distinct.
Tensor multi_mode_product(const Tensor& x, std::span<const CModeFactor> factors, bool ascending_size_order);
RealTensor multi_mode_product(const RealTensor& x, std::span<const RModeFactor> factors,
                              bool ascending_size_order);

/// Same as multi_mode_product but with an explicit application order
/// (indices into `factors`).
Tensor multi_mode_product_ordered(const Tensor& x, std::span<const CModeFactor> factors,
                                  std::span<const std::size_t> order);

// ---------------------------------------------------------------------------
// Element-wise operations

inline constexpr double kDefaultDivisionFloor = 1e-12;

Tensor hadamard(const Tensor& x, const Tensor& y);
Tensor hadamard(const Tensor& x, const RealTensor& y);
RealTensor hadamard(const RealTensor& x, const RealTensor& y);

/// x ./ y; divisors with magnitude below `floor` are replaced by `floor`.
Tensor divide(const Tensor& x, const Tensor& y, double floor = kDefaultDivisionFloor);
Tensor divide(const Tensor& x, const RealTensor& y, double floor = kDefaultDivisionFloor);
RealTensor divide(const RealTensor& x, const RealTensor& y, double floor = kDefaultDivisionFloor);

/// |x|^2 element-wise.
RealTensor abs2(const Tensor& x);
/// x.^p element-wise (real carriers only, used for inverse variances).
RealTensor power(const RealTensor& x, double p, double floor = kDefaultDivisionFloor);
Tensor power(const Tensor& x, double p);

Tensor add(const Tensor& x, const Tensor& y);
RealTensor add(const RealTensor& x, const RealTensor& y);
Tensor subtract(const Tensor& x, const Tensor& y);
RealTensor subtract(const RealTensor& x, const RealTensor& y);
Tensor scale(const Tensor& x, cplx s);
RealTensor scale(const RealTensor& x, double s);
Tensor conj(const Tensor& x);
Tensor to_complex(const RealTensor& x);

/// Generic element-wise maps for one-off expressions.
template <typename T, typename F>
auto map(const BasicTensor<T>& x, F&& f) {
  using R = std::invoke_result_t<F, const T&>;
  std::vector<R> out(x.size());
  const auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return BasicTensor<R>(x.shape(), std::move(out));
}

template <typename T, typename U, typename F>
auto zip(const BasicTensor<T>& x, const BasicTensor<U>& y, F&& f) {
  if (x.shape() != y.shape()) {
    throw ShapeError("element-wise shape mismatch: " + shape_to_string(x.shape()) + " vs " +
                     shape_to_string(y.shape()));
  }
  using R = std::invoke_result_t<F, const T&, const U&>;
  std::vector<R> out(x.size());
  const auto a = x.data();
  const auto b = y.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(a[i], b[i]);
  return BasicTensor<R>(x.shape(), std::move(out));
}

/// Largest |x_i - y_i| / max(|y|_inf, tiny).
double max_relative_difference(const Tensor& x, const Tensor& y);
double max_relative_difference(const RealTensor& x, const RealTensor& y);

/// Wraps a matrix as a 2-order tensor (and back) for trace dumps and tests.
Tensor matrix_as_tensor(const CMatrix& m);
RealTensor matrix_as_tensor(const RMatrix& m);

}  // namespace tsbli
