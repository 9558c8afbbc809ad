#include "tsbli/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tsbli {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

namespace {

template <typename T>
using DynMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

struct ModeSplit {
  std::size_t left;   // product of dims before the mode
  std::size_t n;      // dim of the mode
  std::size_t right;  // product of dims after the mode
};

ModeSplit split_at(const Shape& shape, std::size_t mode) {
  if (mode >= shape.size()) {
    throw std::out_of_range("mode " + std::to_string(mode) + " out of range for tensor of order " +
                            std::to_string(shape.size()));
  }
  ModeSplit s{1, shape[mode], 1};
  for (std::size_t d = 0; d < mode; ++d) s.left *= shape[d];
  for (std::size_t d = mode + 1; d < shape.size(); ++d) s.right *= shape[d];
  return s;
}

template <typename T>
DynMat<T> matricize_impl(const BasicTensor<T>& x, std::size_t mode) {
  const auto s = split_at(x.shape(), mode);
  DynMat<T> m(s.n, s.left * s.right);
  const auto in = x.data();
  for (std::size_t r = 0; r < s.right; ++r) {
    for (std::size_t i = 0; i < s.n; ++i) {
      const T* src = in.data() + s.left * (i + s.n * r);
      for (std::size_t l = 0; l < s.left; ++l) m(i, l + s.left * r) = src[l];
    }
  }
  return m;
}

template <typename T>
BasicTensor<T> fold_impl(const DynMat<T>& m, std::size_t mode, const Shape& shape) {
  const auto s = split_at(shape, mode);
  if (static_cast<std::size_t>(m.rows()) != s.n || static_cast<std::size_t>(m.cols()) != s.left * s.right) {
    throw ShapeError("matrix of size " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                     " cannot be folded into " + shape_to_string(shape) + " along mode " + std::to_string(mode));
  }
  BasicTensor<T> x(shape);
  auto out = x.data();
  for (std::size_t r = 0; r < s.right; ++r) {
    for (std::size_t i = 0; i < s.n; ++i) {
      T* dst = out.data() + s.left * (i + s.n * r);
      for (std::size_t l = 0; l < s.left; ++l) dst[l] = m(i, l + s.left * r);
    }
  }
  return x;
}

template <typename R, typename T, typename U>
BasicTensor<R> mode_product_impl(const BasicTensor<T>& x, const DynMat<U>& u, std::size_t mode) {
  const auto s = split_at(x.shape(), mode);
  if (static_cast<std::size_t>(u.cols()) != s.n) {
    throw ShapeError("mode-" + std::to_string(mode) + " product: matrix has " + std::to_string(u.cols()) +
                     " columns but tensor " + shape_to_string(x.shape()) + " has " + std::to_string(s.n));
  }
  const auto k = static_cast<std::size_t>(u.rows());
  Shape out_shape = x.shape();
  out_shape[mode] = k;
  BasicTensor<R> out(out_shape);
  const DynMat<R> ur = u.template cast<R>();
  const T* in = x.data().data();
  R* dst = out.data().data();

  using InMap = Eigen::Map<const DynMat<T>>;
  using OutMap = Eigen::Map<DynMat<R>>;
  if (s.left == 1) {
    InMap xm(in, s.n, s.right);
    OutMap om(dst, k, s.right);
    om.noalias() = ur * xm.template cast<R>();
  } else {
    const DynMat<R> ut = ur.transpose();
    for (std::size_t r = 0; r < s.right; ++r) {
      InMap slab(in + r * s.left * s.n, s.left, s.n);
      OutMap os(dst + r * s.left * k, s.left, k);
      os.noalias() = slab.template cast<R>() * ut;
    }
  }
  return out;
}

template <typename T>
DynMat<T> contract_except_impl(const BasicTensor<T>& x, const BasicTensor<T>& y, std::size_t mode) {
  if (x.order() != y.order()) throw ShapeError("contract_except: tensor orders differ");
  for (std::size_t d = 0; d < x.order(); ++d) {
    if (d != mode && x.shape()[d] != y.shape()[d]) {
      throw ShapeError("contract_except: shapes " + shape_to_string(x.shape()) + " and " +
                       shape_to_string(y.shape()) + " differ outside mode " + std::to_string(mode));
    }
  }
  const auto sx = split_at(x.shape(), mode);
  const auto sy = split_at(y.shape(), mode);
  using InMap = Eigen::Map<const DynMat<T>>;
  DynMat<T> z = DynMat<T>::Zero(sx.n, sy.n);
  if (sx.left == 1) {
    InMap xm(x.data().data(), sx.n, sx.right);
    InMap ym(y.data().data(), sy.n, sy.right);
    z.noalias() = xm * ym.transpose();
  } else {
    for (std::size_t r = 0; r < sx.right; ++r) {
      InMap xs(x.data().data() + r * sx.left * sx.n, sx.left, sx.n);
      InMap ys(y.data().data() + r * sy.left * sy.n, sy.left, sy.n);
      z.noalias() += xs.transpose() * ys;
    }
  }
  return z;
}

template <typename T, typename U, typename F>
BasicTensor<T> zip_same(const BasicTensor<T>& x, const BasicTensor<U>& y, F f) {
  if (x.shape() != y.shape()) {
    throw ShapeError("element-wise shape mismatch: " + shape_to_string(x.shape()) + " vs " +
                     shape_to_string(y.shape()));
  }
  BasicTensor<T> out(x.shape());
  auto o = out.data();
  auto a = x.data();
  auto b = y.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = f(a[i], b[i]);
  return out;
}

void check_distinct_modes(std::span<const std::size_t> modes) {
  std::vector<std::size_t> sorted(modes.begin(), modes.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ShapeError("multi_mode_product: each factor must act on a distinct mode");
  }
}

template <typename T, typename M>
BasicTensor<T> multi_mode_impl(const BasicTensor<T>& x, std::span<const ModeFactor<M>> factors,
                               std::span<const std::size_t> order) {
  if (order.size() != factors.size()) throw ShapeError("multi_mode_product: order length mismatch");
  std::vector<std::size_t> modes;
  for (const auto& f : factors) modes.push_back(f.mode);
  check_distinct_modes(modes);
  for (const auto& f : factors) {
    if (f.mode >= x.order() || static_cast<std::size_t>(f.matrix.cols()) != x.shape()[f.mode]) {
      throw ShapeError("multi_mode_product: factor for mode " + std::to_string(f.mode) +
                       " is not conformable with " + shape_to_string(x.shape()));
    }
  }
  BasicTensor<T> cur = x;
  for (auto idx : order) {
    cur = mode_product(cur, factors[idx].matrix, factors[idx].mode);
  }
  return cur;
}

template <typename M>
std::vector<std::size_t> plan_order(const Shape& shape, std::span<const ModeFactor<M>> factors, bool ascending) {
  std::vector<std::pair<std::size_t, std::size_t>> dims;
  std::vector<std::size_t> modes;
  for (const auto& f : factors) {
    dims.emplace_back(static_cast<std::size_t>(f.matrix.rows()), static_cast<std::size_t>(f.matrix.cols()));
    modes.push_back(f.mode);
  }
  if (ascending) return ascending_size_order(shape, dims, modes);
  std::vector<std::size_t> order(factors.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  return order;
}

template <typename T>
double max_rel_impl(const BasicTensor<T>& x, const BasicTensor<T>& y) {
  if (x.shape() != y.shape()) throw ShapeError("max_relative_difference: shape mismatch");
  double scale = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    scale = std::max(scale, static_cast<double>(std::abs(y[i])));
    diff = std::max(diff, static_cast<double>(std::abs(x[i] - y[i])));
  }
  return diff / std::max(scale, 1e-300);
}

}  // namespace

// ---------------------------------------------------------------------------

cplx inner(const Tensor& x, const Tensor& y) {
  if (x.shape() != y.shape()) throw ShapeError("inner: shape mismatch");
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * std::conj(y[i]);
  return acc;
}

double inner(const RealTensor& x, const RealTensor& y) {
  if (x.shape() != y.shape()) throw ShapeError("inner: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double fro_norm_sq(const Tensor& x) {
  double acc = 0.0;
  for (const auto& v : x.data()) acc += std::norm(v);
  return acc;
}

double fro_norm(const Tensor& x) { return std::sqrt(fro_norm_sq(x)); }

double l1_norm(const Tensor& x) {
  double acc = 0.0;
  for (const auto& v : x.data()) acc += std::abs(v);
  return acc;
}

double l1_norm(const RealTensor& x) {
  double acc = 0.0;
  for (const auto& v : x.data()) acc += std::abs(v);
  return acc;
}

CMatrix mode_matricize(const Tensor& x, std::size_t mode) { return matricize_impl(x, mode); }
RMatrix mode_matricize(const RealTensor& x, std::size_t mode) { return matricize_impl(x, mode); }
Tensor mode_fold(const CMatrix& m, std::size_t mode, const Shape& shape) { return fold_impl(m, mode, shape); }
RealTensor mode_fold(const RMatrix& m, std::size_t mode, const Shape& shape) {
  return fold_impl(m, mode, shape);
}

Tensor mode_product(const Tensor& x, const CMatrix& u, std::size_t mode) {
  return mode_product_impl<cplx>(x, u, mode);
}
Tensor mode_product(const Tensor& x, const RMatrix& u, std::size_t mode) {
  return mode_product_impl<cplx>(x, u, mode);
}
RealTensor mode_product(const RealTensor& x, const RMatrix& u, std::size_t mode) {
  return mode_product_impl<double>(x, u, mode);
}

CMatrix contract_except(const Tensor& x, const Tensor& y, std::size_t mode) {
  return contract_except_impl(x, y, mode);
}
RMatrix contract_except(const RealTensor& x, const RealTensor& y, std::size_t mode) {
  return contract_except_impl(x, y, mode);
}

std::vector<std::size_t> ascending_size_order(const Shape& shape,
                                              std::span<const std::pair<std::size_t, std::size_t>> factor_dims,
                                              std::span<const std::size_t> modes) {
  (void)shape;
  if (factor_dims.size() != modes.size()) throw ShapeError("ascending_size_order: length mismatch");
  std::vector<std::size_t> order(factor_dims.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // rows_a / cols_a < rows_b / cols_b without dividing
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return factor_dims[a].first * factor_dims[b].second < factor_dims[b].first * factor_dims[a].second;
  });
  return order;
}

std::size_t largest_intermediate(const Shape& shape,
                                 std::span<const std::pair<std::size_t, std::size_t>> factor_dims,
                                 std::span<const std::size_t> modes, std::span<const std::size_t> order) {
  if (factor_dims.size() != modes.size() || order.size() != modes.size()) {
    throw ShapeError("largest_intermediate: length mismatch");
  }
  Shape cur = shape;
  std::size_t largest = 0;
  for (auto idx : order) {
    const auto mode = modes[idx];
    if (mode >= cur.size() || cur[mode] != factor_dims[idx].second) {
      throw ShapeError("largest_intermediate: factor " + std::to_string(idx) + " not conformable");
    }
    cur[mode] = factor_dims[idx].first;
    largest = std::max(largest, shape_numel(cur));
  }
  return largest;
}

Tensor multi_mode_product(const Tensor& x, std::span<const CModeFactor> factors, bool ascending) {
  const auto order = plan_order(x.shape(), factors, ascending);
  return multi_mode_impl(x, factors, order);
}

RealTensor multi_mode_product(const RealTensor& x, std::span<const RModeFactor> factors, bool ascending) {
  const auto order = plan_order(x.shape(), factors, ascending);
  return multi_mode_impl(x, factors, order);
}

Tensor multi_mode_product_ordered(const Tensor& x, std::span<const CModeFactor> factors,
                                  std::span<const std::size_t> order) {
  std::vector<std::size_t> check(order.begin(), order.end());
  std::sort(check.begin(), check.end());
  for (std::size_t i = 0; i < check.size(); ++i) {
    if (check[i] != i) throw ShapeError("multi_mode_product_ordered: order is not a permutation");
  }
  return multi_mode_impl(x, factors, order);
}

// ---------------------------------------------------------------------------

Tensor hadamard(const Tensor& x, const Tensor& y) {
  return zip_same(x, y, [](cplx a, cplx b) { return a * b; });
}
Tensor hadamard(const Tensor& x, const RealTensor& y) {
  return zip_same(x, y, [](cplx a, double b) { return a * b; });
}
RealTensor hadamard(const RealTensor& x, const RealTensor& y) {
  return zip_same(x, y, [](double a, double b) { return a * b; });
}

Tensor divide(const Tensor& x, const Tensor& y, double floor) {
  return zip_same(x, y, [floor](cplx a, cplx b) { return std::abs(b) < floor ? a / floor : a / b; });
}
Tensor divide(const Tensor& x, const RealTensor& y, double floor) {
  return zip_same(x, y, [floor](cplx a, double b) { return std::abs(b) < floor ? a / floor : a / b; });
}
RealTensor divide(const RealTensor& x, const RealTensor& y, double floor) {
  return zip_same(x, y, [floor](double a, double b) { return std::abs(b) < floor ? a / floor : a / b; });
}

RealTensor abs2(const Tensor& x) {
  return map(x, [](const cplx& v) { return std::norm(v); });
}

RealTensor power(const RealTensor& x, double p, double floor) {
  return map(x, [p, floor](double v) {
    if (p < 0.0 && std::abs(v) < floor) v = floor;
    return std::pow(v, p);
  });
}

Tensor power(const Tensor& x, double p) {
  return map(x, [p](const cplx& v) { return std::pow(v, p); });
}

Tensor add(const Tensor& x, const Tensor& y) {
  return zip_same(x, y, [](cplx a, cplx b) { return a + b; });
}
RealTensor add(const RealTensor& x, const RealTensor& y) {
  return zip_same(x, y, [](double a, double b) { return a + b; });
}
Tensor subtract(const Tensor& x, const Tensor& y) {
  return zip_same(x, y, [](cplx a, cplx b) { return a - b; });
}
RealTensor subtract(const RealTensor& x, const RealTensor& y) {
  return zip_same(x, y, [](double a, double b) { return a - b; });
}
Tensor scale(const Tensor& x, cplx s) {
  return map(x, [s](const cplx& v) { return v * s; });
}
RealTensor scale(const RealTensor& x, double s) {
  return map(x, [s](double v) { return v * s; });
}
Tensor conj(const Tensor& x) {
  return map(x, [](const cplx& v) { return std::conj(v); });
}
Tensor to_complex(const RealTensor& x) {
  return map(x, [](double v) { return cplx{v, 0.0}; });
}

double max_relative_difference(const Tensor& x, const Tensor& y) { return max_rel_impl(x, y); }
double max_relative_difference(const RealTensor& x, const RealTensor& y) { return max_rel_impl(x, y); }

Tensor matrix_as_tensor(const CMatrix& m) {
  Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) t(i, j) = m(i, j);
  return t;
}

RealTensor matrix_as_tensor(const RMatrix& m) {
  RealTensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) t(i, j) = m(i, j);
  return t;
}

}  // namespace tsbli
