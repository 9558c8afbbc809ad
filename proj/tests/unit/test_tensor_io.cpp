#include "oracles.hpp"
#include "tsbli/tensor_io.hpp"

#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

using namespace tsbli;

TEST_SUITE("tensor_io") {
  TEST_CASE("complex tensors round-trip bit-exactly") {
    auto g = oracle::rng(11);
    const Tensor x = oracle::random_tensor({3, 1, 4, 2}, g);
    std::stringstream ss;
    write_tensor(ss, x);
    CHECK(read_tensor(ss) == x);
  }

  TEST_CASE("real tensors keep their kind") {
    RealTensor x({2, 3});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i) - 0.2;
    std::stringstream ss;
    write_tensor(ss, x);
    const auto any = read_any_tensor(ss);
    REQUIRE(std::holds_alternative<RealTensor>(any));
    CHECK(std::get<RealTensor>(any) == x);
  }

  TEST_CASE("header layout is the documented one") {
    Tensor x({2, 1}, std::vector<cplx>{{1.0, -2.0}, {0.5, 0.25}});
    std::stringstream ss;
    write_tensor(ss, x);
    const std::string bytes = ss.str();
    REQUIRE(bytes.size() == 20 + 2 * 8 + 2 * 16);
    CHECK(bytes.substr(0, 8) == "TSBLITNS");
    std::uint32_t version = 0, kind = 7, order = 0;
    std::memcpy(&version, bytes.data() + 8, 4);
    std::memcpy(&kind, bytes.data() + 12, 4);
    std::memcpy(&order, bytes.data() + 16, 4);
    CHECK(version == 1);
    CHECK(kind == 0);
    CHECK(order == 2);
    double im0 = 0.0;
    std::memcpy(&im0, bytes.data() + 36 + 8, 8);
    CHECK(im0 == -2.0);
  }

  TEST_CASE("corrupt input is rejected") {
    std::stringstream bad("NOTATENSOR-------------------");
    CHECK_THROWS_AS(read_tensor(bad), TensorFormatError);

    auto g = oracle::rng(12);
    std::stringstream ss;
    write_tensor(ss, oracle::random_tensor({4, 4}, g));
    std::string truncated = ss.str();
    truncated.resize(truncated.size() - 5);
    std::stringstream ts(truncated);
    CHECK_THROWS_AS(read_tensor(ts), TensorFormatError);

    std::stringstream cs;
    write_tensor(cs, Tensor({2}, cplx{1.0, 1.0}));
    CHECK_THROWS_AS(read_real_tensor(cs), TensorFormatError);

    // Real files promote to complex on a complex read.
    std::stringstream rs;
    write_tensor(rs, RealTensor({2}, 1.5));
    CHECK(read_tensor(rs) == Tensor({2}, cplx{1.5, 0.0}));
  }

  TEST_CASE("files round-trip") {
    auto g = oracle::rng(13);
    const Tensor x = oracle::random_tensor({2, 2, 2}, g);
    const auto path = std::filesystem::temp_directory_path() / "tsbli_io_roundtrip.tsr";
    save_tensor(path, x);
    CHECK(load_tensor(path) == x);
    std::filesystem::remove(path);
  }
}
