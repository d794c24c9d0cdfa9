#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tw/orders.hpp"

using namespace tw;

namespace {

Position om(std::int64_t i) {
  Position p;
  p.path.push_back(PathSeg::omega(i));
  return p;
}
Position omr(std::int64_t i) {
  Position p;
  p.path.push_back(PathSeg::omega_rev(i));
  return p;
}
Position rat(std::int64_t n, std::int64_t d = 1) {
  Position p;
  p.path.push_back(PathSeg::rat(Rational(n, d)));
  return p;
}
Position catp(std::int64_t part, Position inner) { return inner.prefixed(PathSeg::cat(part)); }

// Oracle: hull via pointwise membership over an enumerated window of
// candidate positions (only valid when `candidates` covers the whole
// intersection support inside I).
Interval hull_oracle(const OrderExpr& order, const CloseSubsetSpec& subset,
                     const Interval& I, const std::vector<Position>& candidates) {
  std::optional<Position> lo, hi;
  for (const auto& p : candidates) {
    if (!I.contains(p) || !subset.contains(order, p)) continue;
    if (!lo || pos_less(p, *lo)) lo = p;
    if (!hi || pos_less(*hi, p)) hi = p;
  }
  if (!lo) return Interval::empty_at(Position{});
  return Interval::closed(*lo, *hi);
}

}  // namespace

TEST_CASE("pos_cmp basics") {
  CHECK(pos_cmp(om(3), om(7)) == Cmp::Less);
  CHECK(pos_cmp(om(7), om(7)) == Cmp::Equal);
  // reversed order: index 3 from the top is above index 7
  CHECK(pos_cmp(omr(3), omr(7)) == Cmp::Greater);
  // concatenation: any part-0 position below any part-1 position
  CHECK(pos_cmp(catp(0, om(99)), catp(1, Position{}.prefixed(PathSeg::fin(0)))) ==
        Cmp::Less);
  CHECK(pos_cmp(rat(1, 2), rat(2, 3)) == Cmp::Less);
  // a RevEnter flips everything after it
  Position a = om(3).prefixed(PathSeg::rev());
  Position b = om(7).prefixed(PathSeg::rev());
  CHECK(pos_cmp(a, b) == Cmp::Greater);
  CHECK_THROWS_AS(pos_cmp(om(1), rat(1, 2)), std::invalid_argument);
}

TEST_CASE("pos_cmp is a total order on random triples") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> part(0, 2), idx(0, 20), den(1, 9);
  auto random_pos = [&]() {
    int pt = part(rng);
    if (pt == 0) return catp(0, om(idx(rng)));
    if (pt == 1) return catp(1, omr(idx(rng)));
    int d = den(rng);
    return catp(2, rat(idx(rng) % d + 1, d));
  };
  for (int it = 0; it < 2000; ++it) {
    Position a = random_pos(), b = random_pos(), c = random_pos();
    // antisymmetry
    Cmp ab = pos_cmp(a, b), ba = pos_cmp(b, a);
    CHECK((ab == Cmp::Equal) == (ba == Cmp::Equal));
    if (ab == Cmp::Less) CHECK(ba == Cmp::Greater);
    // transitivity
    if (pos_cmp(a, b) != Cmp::Greater && pos_cmp(b, c) != Cmp::Greater)
      CHECK(pos_cmp(a, c) != Cmp::Greater);
  }
}

TEST_CASE("order normalization") {
  OrderExpr o = OrderExpr::rev(OrderExpr::rev(OrderExpr::omega()));
  CHECK(o == OrderExpr::omega());
  CHECK(OrderExpr::rev(OrderExpr::fin(4)) == OrderExpr::fin(4));
  CHECK(OrderExpr::rev(OrderExpr::omega()) == OrderExpr::omega_rev());
  OrderExpr flat = OrderExpr::cat(
      {OrderExpr::cat({OrderExpr::omega(), OrderExpr::fin(2)}), OrderExpr::qdense()});
  CHECK(flat.parts().size() == 3);
  CHECK(OrderExpr::cat({OrderExpr::fin(0), OrderExpr::omega()}) == OrderExpr::omega());
  // reversing a concatenation reverses the parts
  OrderExpr r = OrderExpr::rev(OrderExpr::cat({OrderExpr::omega(), OrderExpr::fin(2)}));
  REQUIRE(r.parts().size() == 2);
  CHECK(r.parts()[0] == OrderExpr::fin(2));
  CHECK(r.parts()[1] == OrderExpr::omega_rev());
}

TEST_CASE("interval finiteness") {
  OrderExpr w = OrderExpr::omega();
  CHECK(interval_is_finite(w, Interval::closed(om(3), om(9))).finite);
  CHECK(interval_is_finite(w, Interval::closed(om(3), om(9))).count == 7);
  CHECK_FALSE(interval_is_finite(w, Interval{Cut::closed(om(3)), Cut::inf()}).finite);

  OrderExpr q = OrderExpr::qdense();
  Interval degenerate{Cut::open(rat(1, 2)), Cut::open(rat(1, 2))};
  auto f = interval_is_finite(q, degenerate);
  CHECK(f.finite);
  CHECK(f.count == 0);
  CHECK_FALSE(interval_is_finite(q, Interval::closed(rat(0), rat(1, 2))).finite);
  CHECK(interval_is_finite(q, Interval::point(rat(1, 2))).count == 1);

  OrderExpr c = OrderExpr::cat({OrderExpr::fin(3), OrderExpr::omega()});
  CHECK_FALSE(interval_is_finite(c, Interval::full()).finite);
  Interval upto{Cut::inf(), Cut::closed(catp(1, om(4)))};
  auto g = interval_is_finite(c, upto);
  CHECK(g.finite);
  CHECK(g.count == 8);

  OrderExpr orv = OrderExpr::omega_rev();
  CHECK_FALSE(interval_is_finite(orv, Interval{Cut::inf(), Cut::closed(omr(2))}).finite);
  auto h = interval_is_finite(orv, Interval{Cut::closed(omr(9)), Cut::closed(omr(2))});
  CHECK(h.finite);
  CHECK(h.count == 8);
}

TEST_CASE("is_close on structured subsets") {
  OrderExpr w = OrderExpr::omega();
  CHECK(is_close(w, CloseSubsetSpec::residue(2, 0)));
  CHECK(is_close(w, CloseSubsetSpec::cofinite_except({om(0), om(1), om(2)})));

  OrderExpr ww = OrderExpr::cat({OrderExpr::omega(), OrderExpr::omega()});
  CHECK(is_close(ww, CloseSubsetSpec::per_part(
                         {CloseSubsetSpec::all(), CloseSubsetSpec::cofinite_except({})})));

  OrderExpr q = OrderExpr::qdense();
  CHECK(is_close(q, CloseSubsetSpec::dense(CloseSubsetSpec::DenseKind::AllQ)));
  CHECK(is_close(q, CloseSubsetSpec::dense(CloseSubsetSpec::DenseKind::DyadicDenAtLeast, 3)));
  CHECK_FALSE(is_close(q, CloseSubsetSpec::dense(CloseSubsetSpec::DenseKind::DenAtMost, 10)));
  CHECK_THROWS_AS(is_close(q, CloseSubsetSpec::residue(2, 0)), std::invalid_argument);
}

TEST_CASE("varpropto hulls on omega") {
  OrderExpr w = OrderExpr::omega();
  CloseSubsetSpec evens = CloseSubsetSpec::residue(2, 0);

  Interval I = Interval::closed(om(3), om(7));
  Interval h = varpropto_subset(w, evens, I);
  CHECK(h == Interval::closed(om(4), om(6)));

  CHECK(varpropto_subset(w, CloseSubsetSpec::all(), I) == I);

  Interval none = varpropto_subset(w, CloseSubsetSpec::residue(3, 0),
                                   Interval::closed(om(1), om(2)));
  CHECK(none.definitely_empty());

  // unbounded windows keep unbounded hulls
  Interval tail{Cut::closed(om(3)), Cut::inf()};
  Interval ht = varpropto_subset(w, evens, tail);
  CHECK(ht.low == Cut::closed(om(4)));
  CHECK(ht.high == Cut::inf());
}

TEST_CASE("prettyclose: idempotence and finite complements") {
  std::mt19937 rng(123);
  OrderExpr w = OrderExpr::omega();
  std::uniform_int_distribution<int> lo(0, 30), len(0, 40), mod(1, 5);
  for (int it = 0; it < 200; ++it) {
    int a = lo(rng);
    Interval I = Interval::closed(om(a), om(a + len(rng)));
    int m = mod(rng);
    CloseSubsetSpec s = CloseSubsetSpec::residue(m, rng() % m);
    Interval h = varpropto_subset(w, s, I);
    // (i) idempotence
    if (!h.definitely_empty()) CHECK(varpropto_subset(w, s, h) == h);
    // hull included in I
    if (!h.definitely_empty()) {
      CHECK(I.contains(h.low.pos));
      CHECK(I.contains(h.high.pos));
    }
    // (ii) complement splits into finite initial + terminal pieces
    Interval init{I.low, h.definitely_empty() ? I.high : Cut::open(h.low.pos)};
    Interval term{h.definitely_empty() ? I.low : Cut::open(h.high.pos), I.high};
    if (!h.definitely_empty()) {
      CHECK(interval_is_finite(w, init).finite);
      CHECK(interval_is_finite(w, term).finite);
    }
  }
}

TEST_CASE("varpropto against pointwise oracle on omega and cat carriers") {
  std::mt19937 rng(2024);
  OrderExpr cc = OrderExpr::cat({OrderExpr::omega(), OrderExpr::omega()});
  std::vector<Position> candidates;
  for (int part = 0; part < 2; ++part)
    for (int i = 0; i <= 60; ++i) candidates.push_back(catp(part, om(i)));

  std::uniform_int_distribution<int> part(0, 1), idx(0, 25), mod(1, 4);
  for (int it = 0; it < 300; ++it) {
    Position a = catp(part(rng), om(idx(rng)));
    Position b = catp(part(rng), om(idx(rng)));
    if (pos_less(b, a)) std::swap(a, b);
    Interval I = Interval::closed(a, b);
    int m0 = mod(rng), m1 = mod(rng);
    CloseSubsetSpec s = CloseSubsetSpec::per_part(
        {CloseSubsetSpec::residue(m0, rng() % m0), CloseSubsetSpec::residue(m1, rng() % m1)});
    Interval got = varpropto_subset(cc, s, I);
    Interval want = hull_oracle(cc, s, I, candidates);
    if (want.definitely_empty()) {
      CHECK(got.definitely_empty());
      continue;
    }
    // Candidates are bounded, so the oracle can undershoot the hull's high
    // end when members are cofinal in a part. Check semantically instead:
    // the hull contains every member, stays inside I, starts exactly at the
    // first member, and overshoots the oracle only within the cofinal part.
    for (const auto& x : candidates) {
      if (I.contains(x) && s.contains(cc, x)) CHECK(got.contains(x));
      if (got.contains(x)) CHECK(I.contains(x));
    }
    CHECK(got.low == Cut::closed(want.low.pos));
    for (const auto& x : candidates) {
      if (!got.contains(x) || !pos_less(want.high.pos, x)) continue;
      CHECK(x.path.at(0).idx == want.high.pos.path.at(0).idx);  // same part only
    }
  }
}

TEST_CASE("hull high stops at the part boundary when members are cofinal in a part") {
  OrderExpr cc = OrderExpr::cat({OrderExpr::omega(), OrderExpr::omega()});
  // members: evens of part 0 only
  // per-part rules address part-local positions
  CloseSubsetSpec s = CloseSubsetSpec::per_part(
      {CloseSubsetSpec::residue(2, 0), CloseSubsetSpec::cofinite_except({om(0), om(1)})});
  // window reaching into part 1, but only index 0/1 of part 1 which are excluded
  Interval I = Interval::closed(catp(0, om(3)), catp(1, om(1)));
  Interval h = varpropto_subset(cc, s, I);
  CHECK(h.low == Cut::closed(catp(0, om(4))));
  // high cut: the whole of part 0, expressed as a region anchor
  Position region;
  region.path.push_back(PathSeg::cat(0));
  CHECK(h.high == Cut::closed(region));
  CHECK(h.contains(catp(0, om(1000))));
  CHECK_FALSE(h.contains(catp(1, om(0))));
  CHECK_FALSE(h.contains(catp(0, om(3))));
}

TEST_CASE("basiccloseproperties (i): infinite intervals contain unboundedly many members") {
  OrderExpr w = OrderExpr::omega();
  CloseSubsetSpec s = CloseSubsetSpec::residue(3, 1);
  // sample prefix windows of growing length: member count grows without bound
  std::int64_t prev = -1;
  for (int k = 1; k <= 8; ++k) {
    auto members =
        enumerate_members(w, s, Interval::closed(om(0), om(30 * k)), 1000);
    CHECK(static_cast<std::int64_t>(members.size()) > prev);
    prev = static_cast<std::int64_t>(members.size());
  }
}

TEST_CASE("basiccloseproperties (ii): nested close subsets compose") {
  // evens inside omega, multiples of 4 inside the evens: expressible as the
  // composed residue class 4|n, still close.
  OrderExpr w = OrderExpr::omega();
  CHECK(is_close(w, CloseSubsetSpec::residue(2, 0)));
  CHECK(is_close(w, CloseSubsetSpec::residue(4, 0)));
  // the composition is a subset of the middle layer
  for (int i = 0; i <= 40; i += 4) {
    CHECK(CloseSubsetSpec::residue(2, 0).contains(w, om(i)));
    CHECK(CloseSubsetSpec::residue(4, 0).contains(w, om(i)));
  }
}

TEST_CASE("basiccloseproperties (iv): hull within a subinterval equals hull computed there") {
  std::mt19937 rng(5);
  OrderExpr w = OrderExpr::omega();
  std::uniform_int_distribution<int> v(0, 40), mod(1, 5);
  for (int it = 0; it < 200; ++it) {
    int a = v(rng), b = v(rng);
    if (a > b) std::swap(a, b);
    Interval I0 = Interval::closed(om(a), om(b));
    int m = mod(rng);
    CloseSubsetSpec s = CloseSubsetSpec::residue(m, rng() % m);
    // restricting the carrier to I0 and hulling = hulling I0 directly
    Interval h = varpropto_subset(w, s, I0);
    Interval h2 = varpropto_subset(w, s, h.definitely_empty() ? I0 : h);
    if (!h.definitely_empty()) CHECK(h == h2);
  }
}

TEST_CASE("qdense hulls carry the window cuts") {
  OrderExpr q = OrderExpr::qdense();
  CloseSubsetSpec dy = CloseSubsetSpec::dense(CloseSubsetSpec::DenseKind::DyadicDenAtLeast, 1);
  Interval I{Cut::open(rat(0)), Cut::open(rat(1))};
  Interval h = varpropto_subset(q, dy, I);
  CHECK(h.low == Cut::open(rat(0)));
  CHECK(h.high == Cut::open(rat(1)));
  // degenerate window: membership decides
  Interval pt = Interval::point(rat(1, 2));
  CHECK(varpropto_subset(q, dy, pt) == Interval::closed(rat(1, 2), rat(1, 2)));
  Interval pt3 = Interval::point(rat(1, 3));
  CHECK(varpropto_subset(q, dy, pt3).definitely_empty());
}

TEST_CASE("nth_rational enumerates without repetition") {
  std::vector<Rational> seen;
  for (int i = 0; i < 200; ++i) {
    Rational r = nth_rational(i);
    for (const auto& s : seen) CHECK(r != s);
    seen.push_back(r);
  }
}
