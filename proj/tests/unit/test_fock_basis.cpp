#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "cntsim/fock_basis.hpp"

using namespace cntsim;

namespace {

// Fermion modes in order (site 0 up, site 0 down, site 1 up, ...), as a plain
// occupation list. c^dag_to c_from applied by counting the operators each one
// has to pass, one mode at a time.
struct OracleElement {
  bool nonzero = false;
  std::vector<int> occ;
  int sign = 1;
};

OracleElement oracle_hop(std::vector<int> occ, int from_mode, int to_mode) {
  OracleElement r;
  if (!occ[from_mode]) return r;
  int sign = 1;
  for (int m = 0; m < from_mode; ++m) sign *= occ[m] ? -1 : 1;
  occ[from_mode] = 0;
  if (occ[to_mode]) return r;
  for (int m = 0; m < to_mode; ++m) sign *= occ[m] ? -1 : 1;
  occ[to_mode] = 1;
  r.nonzero = true;
  r.occ = occ;
  r.sign = sign;
  return r;
}

std::vector<int> modes_of(const ElectronConfig& c) {
  std::vector<int> occ;
  for (int s = 0; s < c.sites(); ++s) {
    occ.push_back(c.occupied(s, Spin::Up) ? 1 : 0);
    occ.push_back(c.occupied(s, Spin::Down) ? 1 : 0);
  }
  return occ;
}

}  // namespace

TEST_CASE("spinful half filling has C(4,2)^2 configurations") {
  const ElectronBasis b(4, Sector::spinful(2, 2));
  CHECK(b.size() == 36);
  for (const auto& c : b) {
    CHECK(c.total() == 4);
  }
}

TEST_CASE("fully occupied spinful sector is a single configuration") {
  const ElectronBasis b(4, Sector::spinful(4, 4));
  REQUIRE(b.size() == 1);
  CHECK(b[0].doubly_occupied() == 4);
}

TEST_CASE("charge-only half filling matches the x^4 coefficient of (1+x+x^2)^4") {
  std::vector<int> poly{1};
  for (int k = 0; k < 4; ++k) {
    std::vector<int> next(poly.size() + 2, 0);
    for (std::size_t i = 0; i < poly.size(); ++i)
      for (int j = 0; j < 3; ++j) next[i + j] += poly[i];
    poly = next;
  }
  int brute = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) brute += (a + b + c + d == 4);

  const ElectronBasis basis(4, Sector::charge_only(4));
  CHECK(poly[4] == 19);
  CHECK(brute == 19);
  CHECK(basis.size() == 19);
}

TEST_CASE("inconsistent sectors are rejected") {
  CHECK_THROWS_AS(ElectronBasis(4, Sector::spinful(5, 0)), std::invalid_argument);
  CHECK_THROWS_AS(ElectronBasis(4, Sector::charge_only(9)), std::invalid_argument);
  CHECK_THROWS_AS(ElectronBasis(0, Sector::charge_only(0)), std::invalid_argument);
}

TEST_CASE("basis order is ascending in the code and index inverts it") {
  for (const Sector& s : {Sector::spinful(2, 2), Sector::charge_only(4), Sector::spinful(1, 3)}) {
    const ElectronBasis b(4, s);
    for (std::size_t i = 0; i < b.size(); ++i) {
      CHECK(b.index(b[i]) == i);
      if (i > 0) CHECK(b[i - 1].code() < b[i].code());
    }
    std::set<std::uint32_t> codes;
    for (const auto& c : b) codes.insert(c.code());
    CHECK(codes.size() == b.size());
  }
  const ElectronBasis a(4, Sector::spinful(2, 2));
  const ElectronBasis b(4, Sector::spinful(2, 2));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("configuration outside the sector is not found") {
  const ElectronBasis b(4, Sector::charge_only(4));
  const std::array<int, 4> five{2, 2, 1, 0};
  const auto c = ElectronConfig::from_charges(five);
  CHECK_FALSE(b.find(c).has_value());
  CHECK_THROWS_AS(b.index(c), std::out_of_range);
}

TEST_CASE("hop into an occupied same-spin orbital is Pauli blocked") {
  const std::array<int, 4> up{1, 1, 0, 0};
  const std::array<int, 4> down{0, 0, 1, 1};
  const auto c = ElectronConfig::from_spins(up, down);
  CHECK_FALSE(hop_apply(c, 0, 1, Spin::Up).has_value());
  // empty source
  CHECK_FALSE(hop_apply(c, 1, 2, Spin::Down).has_value());
}

TEST_CASE("hop of up electron from site 1 to 2 past a down electron") {
  const std::array<int, 4> up{1, 0, 0, 0};
  const std::array<int, 4> down{0, 1, 0, 0};
  const auto c = ElectronConfig::from_spins(up, down);
  const auto r = hop_apply(c, 0, 1, Spin::Up);
  REQUIRE(r.has_value());
  CHECK(r->config.occupied(1, Spin::Up));
  CHECK(r->config.occupied(1, Spin::Down));
  CHECK_FALSE(r->config.occupied(0, Spin::Up));
  const auto o = oracle_hop(modes_of(c), 0, 2);
  CHECK(o.nonzero);
  CHECK(r->amplitude == doctest::Approx(o.sign));
  // the down electron on site 1 is ordered after the target mode
  CHECK(r->amplitude == 1.0);
}

TEST_CASE("hop of up electron from site 1 to 2 across a down electron on site 1") {
  const std::array<int, 4> up{1, 0, 0, 0};
  const std::array<int, 4> down{1, 0, 0, 0};
  const auto c = ElectronConfig::from_spins(up, down);
  const auto r = hop_apply(c, 0, 1, Spin::Up);
  REQUIRE(r.has_value());
  CHECK(r->amplitude == -1.0);
  CHECK(oracle_hop(modes_of(c), 0, 2).sign == -1);
}

TEST_CASE("every hopping matrix element matches the Jordan-Wigner oracle") {
  const ElectronBasis b(4, Sector::spinful(2, 2));
  int nonzero = 0;
  for (std::size_t col = 0; col < b.size(); ++col) {
    for (int from = 0; from < 4; ++from) {
      for (int to : {from - 1, from + 1}) {
        if (to < 0 || to >= 4) continue;
        for (Spin s : {Spin::Up, Spin::Down}) {
          const int fm = 2 * from + static_cast<int>(s);
          const int tm = 2 * to + static_cast<int>(s);
          const auto got = hop_apply(b[col], from, to, s);
          const auto want = oracle_hop(modes_of(b[col]), fm, tm);
          REQUIRE(got.has_value() == want.nonzero);
          if (!want.nonzero) continue;
          ++nonzero;
          CHECK(modes_of(got->config) == want.occ);
          CHECK(got->amplitude == static_cast<double>(want.sign));
          // the full 36 x 36 matrix element, row located through the index
          CHECK(b.find(got->config).has_value());
        }
      }
    }
  }
  CHECK(nonzero > 0);
}

TEST_CASE("hopping forth and back is the identity with sign +1") {
  const ElectronBasis b(4, Sector::spinful(2, 2));
  for (const auto& c : b) {
    for (int from = 0; from < 3; ++from) {
      for (Spin s : {Spin::Up, Spin::Down}) {
        const auto fwd = hop_apply(c, from, from + 1, s);
        if (!fwd) continue;
        const auto back = hop_apply(fwd->config, from + 1, from, s);
        REQUIRE(back.has_value());
        CHECK(back->config == c);
        CHECK(fwd->amplitude * back->amplitude == 1.0);
      }
    }
  }
}

TEST_CASE("charge-only hop uses truncated boson amplitudes") {
  const std::array<int, 4> n{2, 1, 1, 0};
  const auto c = ElectronConfig::from_charges(n);
  const auto r = hop_apply(c, 0, 1);
  REQUIRE(r.has_value());
  CHECK(r->config.charge(0) == 1);
  CHECK(r->config.charge(1) == 2);
  CHECK(r->amplitude == doctest::Approx(std::sqrt(2.0 * 2.0)));
  // target already doubly occupied
  CHECK_FALSE(hop_apply(r->config, 0, 1).has_value());
  CHECK_FALSE(hop_apply(c, 3, 2).has_value());
  const auto s = hop_apply(c, 2, 3);
  REQUIRE(s.has_value());
  CHECK(s->amplitude == doctest::Approx(1.0));
}

TEST_CASE("non-adjacent hops are rejected") {
  const std::array<int, 4> n{1, 1, 1, 1};
  const auto c = ElectronConfig::from_charges(n);
  CHECK_THROWS_AS(hop_apply(c, 0, 2), std::invalid_argument);
  CHECK_THROWS_AS(hop_apply(c, 1, 1), std::invalid_argument);
}

TEST_CASE("double occupancy and charges") {
  const std::array<int, 4> up{1, 1, 0, 0};
  const std::array<int, 4> down{0, 1, 1, 0};
  const auto c = ElectronConfig::from_spins(up, down);
  CHECK(c.doubly_occupied() == 1);
  CHECK(c.charges() == std::vector<int>{1, 2, 1, 0});
  const ElectronBasis b(4, Sector::spinful(2, 2));
  const std::array<int, 4> paired{0, 2, 2, 0};
  CHECK(b.indices_with_charges(paired).size() == 1);
  const std::array<int, 4> mott{1, 1, 1, 1};
  CHECK(b.indices_with_charges(mott).size() == 6);
}

TEST_CASE("phonon basis dimension is cutoff + 1") {
  CHECK(PhononBasis(20).size() == 21);
  CHECK(PhononBasis::with_states(50).size() == 50);
  CHECK_THROWS_AS(PhononBasis(0), std::invalid_argument);
}

TEST_CASE("composite index is a row-major bijection") {
  const HilbertSpace h({3, 2, 4, 5});
  CHECK(h.size() == 120);
  CHECK(composite_index(0, 0, 0, 0, h) == 0);
  CHECK(composite_index(2, 1, 3, 4, h) == h.size() - 1);
  std::vector<int> seen(h.size(), 0);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 2; ++b)
      for (std::size_t p = 0; p < 4; ++p)
        for (std::size_t q = 0; q < 5; ++q) {
          const std::size_t g = composite_index(a, b, p, q, h);
          REQUIRE(g < h.size());
          ++seen[g];
          CHECK(h.factors(g) == HilbertSpace::Factors{a, b, p, q});
        }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int k) { return k == 1; }));
  CHECK_THROWS_AS(composite_index(3, 0, 0, 0, h), std::out_of_range);
  CHECK_THROWS_AS(h.factors(h.size()), std::out_of_range);
}

TEST_CASE("two-tube dimension at 50 phonon states") {
  const auto h = HilbertSpace::two_tube(19, 50);
  CHECK(h.size() == 902500);
}
