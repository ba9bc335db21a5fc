#include <doctest.h>

#include <cmath>

#include "upgd/cost.hpp"
#include "upgd/errors.hpp"

using namespace upgd;

TEST_SUITE("cost") {

TEST_CASE("network count for four users written out term by term") {
  // K = 4, N_t = 32, L = 2, first-order filters, widths {5,32,2} and {9,32,5}.
  const double k2 = 16.0;
  const double receivers = 4.0 * 32768.0 + 2.0 * k2 * 32.0;
  const double eta = (k2 + k2 * 5.0) + (k2 + k2 * 32.0) + (k2 + k2 * 2.0);
  const double perturb = (k2 + k2 * 9.0) + (k2 + k2 * 32.0) + (k2 + k2 * 5.0);
  const double proj = 20.0 * 21.0 + 20.0;
  const double want = 2.0 * (receivers + eta + perturb + proj);
  CHECK(want == 267984.0);
  CHECK(usrmnet_flops(CostConfig::standard(4, 32, 2)) == want);
}

TEST_CASE("network counts across user numbers") {
  CHECK(usrmnet_flops(CostConfig::standard(6, 32, 2)) == 406440.0);
  CHECK(usrmnet_flops(CostConfig::standard(8, 32, 2)) == 548000.0);
  CHECK(usrmnet_flops(CostConfig::standard(10, 32, 2)) == 692760.0);
}

TEST_CASE("higher filter order adds the adjacency power terms") {
  CostConfig a = CostConfig::standard(4, 32, 1);
  CostConfig b = a;
  b.eta_order = 2;
  // Three widths, each gaining K^3 + K^2.
  CHECK(usrmnet_flops(b) - usrmnet_flops(a) == 3.0 * (64.0 + 16.0));
}

TEST_CASE("baseline count") {
  const CostConfig c = CostConfig::standard(4, 32, 2);
  const double want = 3.0 * (std::pow(28.0, 3.5) + std::pow(32.0, 2.7) + 4.0 * 32768.0);
  CHECK(hebf_flops(c) == doctest::Approx(want).epsilon(1e-14));
  CHECK(hebf_flops(c) == doctest::Approx(7.77e5).epsilon(5e-3));
  CHECK(hebf_flops(CostConfig::standard(6, 32, 2)) == doctest::Approx(4.10e6).epsilon(5e-3));
  CHECK(hebf_flops(CostConfig::standard(8, 32, 2)) == doctest::Approx(2.00e7).epsilon(5e-3));
  CostConfig one = c;
  one.baseline_updates = 1.0;
  CHECK(hebf_flops(c) == doctest::Approx(3.0 * hebf_flops(one)));
}

TEST_CASE("ratio examples") {
  CHECK(std::abs(ratio_w3(CostConfig::standard(4, 32, 2)) - 34.52) <= 0.1);
  CHECK(std::abs(ratio_w3(CostConfig::standard(10, 32, 2)) - 0.91) <= 0.1);
  const CostConfig c = CostConfig::standard(5, 16, 3);
  CHECK(ratio_w3(c) == doctest::Approx(100.0 * usrmnet_flops(c) / hebf_flops(c)));
}

TEST_CASE("structural properties") {
  for (std::size_t k = 1; k <= 12; ++k) {
    const double one = usrmnet_flops(CostConfig::standard(k, 32, 1));
    for (std::size_t l = 2; l <= 5; ++l) {
      CHECK(usrmnet_flops(CostConfig::standard(k, 32, l)) == doctest::Approx(static_cast<double>(l) * one));
    }
  }
  double prev = INFINITY;
  for (std::size_t k : {4, 6, 8, 10}) {
    const double r = ratio_w3(CostConfig::standard(k, 32, 2));
    CHECK(r < prev);
    prev = r;
  }
  // The receiver term dominates for many antennas: doubling N_t gives about 8x.
  const double big = usrmnet_flops(CostConfig::standard(2, 1024, 1));
  const double bigger = usrmnet_flops(CostConfig::standard(2, 2048, 1));
  CHECK(bigger / big == doctest::Approx(8.0).epsilon(1e-3));
}

TEST_CASE("validation") {
  CostConfig c = CostConfig::standard(0, 32, 2);
  CHECK_THROWS_AS(usrmnet_flops(c), ContractError);
  c = CostConfig::standard(4, 32, 2);
  c.eta_order = 0;
  CHECK_THROWS_AS(usrmnet_flops(c), ContractError);
  c = CostConfig::standard(4, 32, 2);
  c.baseline_updates = 0.0;
  CHECK_THROWS_AS(hebf_flops(c), ContractError);
  c = CostConfig::standard(4, 32, 2);
  c.eta_widths = {5};
  CHECK_THROWS_AS(usrmnet_flops(c), ContractError);
}

}  // TEST_SUITE
