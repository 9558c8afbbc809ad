#pragma once

// Binary tensor files used for test fixtures and trace dumps.
//
// Layout (all integers and floats little-endian):
//
//   offset  size  field
//   0       8     magic "TSBLITNS"
//   8       4     u32 format version (1)
//   12      4     u32 element kind: 0 = complex<double>, 1 = double
//   16      4     u32 order D
//   20      8*D   u64 dimensions N_0 .. N_{D-1}
//   ...           data in canonical order (first index fastest);
//                 complex entries as (re, im) IEEE-754 binary64 pairs,
//                 real entries as one binary64 each.

#include "tsbli/tensor.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <variant>

namespace tsbli {

class TensorFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_tensor(std::ostream& os, const Tensor& x);
void write_tensor(std::ostream& os, const RealTensor& x);

/// Reads either kind; real files come back as RealTensor.
std::variant<Tensor, RealTensor> read_any_tensor(std::istream& is);
Tensor read_tensor(std::istream& is);
RealTensor read_real_tensor(std::istream& is);

void save_tensor(const std::filesystem::path& path, const Tensor& x);
Tensor load_tensor(const std::filesystem::path& path);

}  // namespace tsbli
