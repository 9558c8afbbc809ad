#include "tsbli/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace tsbli {

namespace {

constexpr std::array<char, 8> kMagic{'T', 'S', 'B', 'L', 'I', 'T', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kComplexKind = 0;
constexpr std::uint32_t kRealKind = 1;

template <typename U>
void put_le(std::ostream& os, U value) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((value >> (8 * i)) & 0xFFu);
  }
  os.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& is) {
  std::array<unsigned char, sizeof(U)> buf{};
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!is) throw TensorFormatError("truncated tensor stream");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
  return value;
}

void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

void write_header(std::ostream& os, std::uint32_t kind, const Shape& shape) {
  os.write(kMagic.data(), kMagic.size());
  put_le(os, kVersion);
  put_le(os, kind);
  put_le(os, static_cast<std::uint32_t>(shape.size()));
  for (auto n : shape) put_le(os, static_cast<std::uint64_t>(n));
}

std::pair<std::uint32_t, Shape> read_header(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw TensorFormatError("not a tensor file (bad magic)");
  const auto version = get_le<std::uint32_t>(is);
  if (version != kVersion) throw TensorFormatError("unsupported tensor format version " + std::to_string(version));
  const auto kind = get_le<std::uint32_t>(is);
  if (kind != kComplexKind && kind != kRealKind) throw TensorFormatError("unknown element kind");
  const auto order = get_le<std::uint32_t>(is);
  if (order == 0 || order > 64) throw TensorFormatError("implausible tensor order " + std::to_string(order));
  Shape shape(order);
  for (auto& n : shape) {
    n = static_cast<std::size_t>(get_le<std::uint64_t>(is));
    if (n == 0) throw TensorFormatError("zero-length dimension in tensor file");
  }
  return {kind, shape};
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& x) {
  write_header(os, kComplexKind, x.shape());
  for (const auto& v : x.data()) {
    put_f64(os, v.real());
    put_f64(os, v.imag());
  }
  if (!os) throw TensorFormatError("failed writing tensor stream");
}

void write_tensor(std::ostream& os, const RealTensor& x) {
  write_header(os, kRealKind, x.shape());
  for (const auto& v : x.data()) put_f64(os, v);
  if (!os) throw TensorFormatError("failed writing tensor stream");
}

std::variant<Tensor, RealTensor> read_any_tensor(std::istream& is) {
  auto [kind, shape] = read_header(is);
  const auto n = shape_numel(shape);
  if (kind == kComplexKind) {
    std::vector<cplx> data(n);
    for (auto& v : data) {
      const double re = get_f64(is);
      const double im = get_f64(is);
      v = {re, im};
    }
    return Tensor(std::move(shape), std::move(data));
  }
  std::vector<double> data(n);
  for (auto& v : data) v = get_f64(is);
  return RealTensor(std::move(shape), std::move(data));
}

Tensor read_tensor(std::istream& is) {
  auto any = read_any_tensor(is);
  if (auto* t = std::get_if<Tensor>(&any)) return std::move(*t);
  return to_complex(std::get<RealTensor>(any));
}

RealTensor read_real_tensor(std::istream& is) {
  auto any = read_any_tensor(is);
  if (auto* t = std::get_if<RealTensor>(&any)) return std::move(*t);
  throw TensorFormatError("expected a real tensor, found complex");
}

void save_tensor(const std::filesystem::path& path, const Tensor& x) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw TensorFormatError("cannot open " + path.string() + " for writing");
  write_tensor(os, x);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TensorFormatError("cannot open " + path.string());
  return read_tensor(is);
}

}  // namespace tsbli
