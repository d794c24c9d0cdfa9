#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tw/words.hpp"

using namespace tw;

namespace {

Registry zreg() { return integers_registry(); }
Registry z2reg() { return Registry(GroupSpec::cyclic(2)); }

Letter zl(std::int64_t n, std::int64_t e) { return Letter{n, GroupElement::integer(e)}; }

FiniteWord fw(const Registry& reg, std::vector<std::pair<std::int64_t, std::int64_t>> ls) {
  std::vector<PosLetter> out;
  std::int64_t i = 0;
  for (auto [n, e] : ls) {
    Position p;
    p.path.push_back(PathSeg::omega(i++));
    (void)reg;
    out.push_back({p, zl(n, e)});
  }
  return FiniteWord(std::move(out));
}

std::vector<std::int64_t> degrees(const FiniteWord& w) {
  std::vector<std::int64_t> out;
  for (const auto& pl : w.letters()) out.push_back(pl.letter.index);
  return out;
}

// Brute-force free-product normal form: apply single rewrites (merge one
// adjacent same-group pair or delete one identity) until none applies.
FiniteWord brute_normal_form(const Registry& reg, FiniteWord w) {
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<PosLetter> ls = w.letters();
    for (std::size_t i = 0; i < ls.size(); ++i) {
      if (g_is_identity(reg.at(ls[i].letter.index), ls[i].letter.value)) {
        ls.erase(ls.begin() + i);
        changed = true;
        break;
      }
      if (i + 1 < ls.size() && ls[i].letter.index == ls[i + 1].letter.index) {
        ls[i].letter.value = g_mul(reg.at(ls[i].letter.index), ls[i].letter.value,
                                   ls[i + 1].letter.value);
        ls.erase(ls.begin() + i + 1);
        changed = true;
        break;
      }
    }
    w = FiniteWord(std::move(ls));
  }
  return w;
}

// All reduction orders agree (confluence): reduce by picking every possible
// first rewrite and recursing; collect the distinct normal forms.
void all_normal_forms(const Registry& reg, const FiniteWord& w,
                      std::vector<FiniteWord>& out, int depth = 0) {
  const auto& ls = w.letters();
  bool any = false;
  for (std::size_t i = 0; i + 1 < ls.size(); ++i) {
    if (ls[i].letter.index != ls[i + 1].letter.index) continue;
    any = true;
    std::vector<PosLetter> nxt = ls;
    nxt[i].letter.value =
        g_mul(reg.at(ls[i].letter.index), ls[i].letter.value, ls[i + 1].letter.value);
    nxt.erase(nxt.begin() + i + 1);
    if (g_is_identity(reg.at(nxt[i].letter.index), nxt[i].letter.value))
      nxt.erase(nxt.begin() + i);
    all_normal_forms(reg, FiniteWord(std::move(nxt)), out, depth + 1);
  }
  if (!any) {
    for (const auto& seen : out)
      if (seen.same_letters(w)) return;
    out.push_back(w);
  }
}

WordPtr random_expr(const Registry& reg, std::mt19937& rng, int depth = 0) {
  std::uniform_int_distribution<int> kind(0, depth > 2 ? 1 : 4);
  std::uniform_int_distribution<std::int64_t> gi(0, 5), ge(1, 3);
  switch (kind(rng)) {
    case 0:
      return w_lit(reg, zl(gi(rng), ge(rng) * (rng() % 2 ? 1 : -1)));
    case 1:
      return w_lit(reg, zl(gi(rng), ge(rng)));
    case 2: {
      std::vector<WordPtr> parts;
      std::uniform_int_distribution<int> n(1, 3);
      int k = n(rng);
      for (int i = 0; i < k; ++i) parts.push_back(random_expr(reg, rng, depth + 1));
      return w_cat(std::move(parts));
    }
    case 3:
      return w_inv(reg, random_expr(reg, rng, depth + 1));
    default: {
      OmegaRule r;
      std::uniform_int_distribution<int> n(0, 2);
      int k = n(rng);
      for (int i = 0; i < k; ++i) r.prefix.push_back(random_expr(reg, rng, depth + 1));
      TailSlot s;
      s.index = {1, gi(rng)};
      s.exp.dflt = {0, ge(rng)};
      r.slots.push_back(s);
      return w_omega(reg, r);
    }
  }
}

}  // namespace

TEST_CASE("project basics") {
  Registry reg = zreg();
  CHECK(project(reg, w_empty(), 5).empty());
  WordPtr w = w_cat({w_lit(reg, zl(0, 1)), w_lit(reg, zl(3, 1)), w_lit(reg, zl(1, 1))});
  auto p1 = project(reg, w, 1);
  CHECK(degrees(p1) == std::vector<std::int64_t>{0, 1});
  auto p3 = project(reg, w, 3);
  CHECK(degrees(p3) == std::vector<std::int64_t>{0, 3, 1});
  // positions ascend
  for (std::size_t i = 1; i < p3.size(); ++i)
    CHECK(pos_less(p3.at(i - 1).pos, p3.at(i).pos));
}

TEST_CASE("ruler word reproduces the displayed projections") {
  Registry reg = z2reg();
  WordPtr W = ruler_word(reg, 0);
  auto expect = [&](std::int64_t N, std::vector<std::int64_t> degs) {
    CHECK(degrees(project(reg, W, N)) == degs);
  };
  expect(0, {0});
  expect(1, {1, 0, 1});
  expect(2, {2, 1, 2, 0, 2, 1, 2});
  expect(3, {3, 2, 3, 1, 3, 2, 3, 0, 3, 2, 3, 1, 3, 2, 3});
  for (std::int64_t N = 0; N <= 8; ++N)
    CHECK(project(reg, W, N).size() == (std::size_t(1) << (N + 1)) - 1);
  CHECK(d_word(reg, W).value() == 0);

  WordPtr W1 = ruler_word(reg, 1);
  CHECK(project(reg, W1, 0).empty());
  CHECK(degrees(project(reg, W1, 2)) == std::vector<std::int64_t>{2, 1, 2});
  CHECK(degrees(project(reg, W1, 3)) == std::vector<std::int64_t>{3, 2, 3, 1, 3, 2, 3});
}

TEST_CASE("free_reduce basics and oracle") {
  Registry reg = zreg();
  // inverse pair dies
  CHECK(free_reduce(reg, fw(reg, {{0, 1}, {0, -1}})).empty());
  // cascade: a b b^-1 c -> a*c merged when same group
  auto r = free_reduce(reg, fw(reg, {{0, 1}, {1, 2}, {1, -2}, {0, 3}}));
  REQUIRE(r.size() == 1);
  CHECK(r.at(0).letter.value == GroupElement::integer(4));

  std::mt19937 rng(42);
  Registry regs[] = {zreg(), Registry({GroupSpec::integers(), GroupSpec::cyclic(3)},
                                      GroupSpec::integers())};
  for (const auto& rg : regs) {
    for (int it = 0; it < 400; ++it) {
      std::uniform_int_distribution<int> len(0, 8), grp(0, 1), val(-2, 2);
      std::vector<std::pair<std::int64_t, std::int64_t>> ls;
      int L = len(rng);
      for (int i = 0; i < L; ++i) {
        std::int64_t n = grp(rng);
        std::int64_t v = val(rng);
        if (rg.at(n).kind() == GroupSpec::Kind::FiniteCyclic)
          v = ((v % 3) + 3) % 3;
        if (v == 0) v = 1;
        ls.push_back({n, v});
      }
      FiniteWord w = fw(rg, ls);
      CHECK(free_reduce(rg, w).same_letters(brute_normal_form(rg, w)));
      // confluence: every rewrite order gives the same normal form
      if (L <= 6) {
        std::vector<FiniteWord> forms;
        all_normal_forms(rg, w, forms);
        REQUIRE(forms.size() == 1);
        CHECK(forms[0].same_letters(free_reduce(rg, w)));
      }
    }
  }
}

TEST_CASE("reduced_mul matches free_reduce of the concatenation") {
  Registry reg = zreg();
  // (a b) * (b^-1 a) = a^2
  FiniteWord a = fw(reg, {{0, 1}, {1, 1}});
  FiniteWord b = fw(reg, {{1, -1}, {0, 1}});
  auto r = reduced_mul(reg, a, b);
  REQUIRE(r.size() == 1);
  CHECK(r.at(0).letter == zl(0, 2));
  // distinct groups: no cancellation
  auto r2 = reduced_mul(reg, fw(reg, {{0, 1}}), fw(reg, {{1, 1}}));
  CHECK(degrees(r2) == std::vector<std::int64_t>{0, 1});

  std::mt19937 rng(7);
  std::uniform_int_distribution<int> len(0, 6), grp(0, 2), val(-3, 3);
  auto rand_reduced = [&]() {
    std::vector<std::pair<std::int64_t, std::int64_t>> ls;
    int L = len(rng);
    std::int64_t prev = -1;
    for (int i = 0; i < L; ++i) {
      std::int64_t n = grp(rng);
      if (n == prev) continue;
      std::int64_t v = val(rng);
      if (v == 0) v = 1;
      ls.push_back({n, v});
      prev = n;
    }
    return fw(reg, ls);
  };
  for (int it = 0; it < 2000; ++it) {
    FiniteWord x = rand_reduced(), y = rand_reduced();
    std::vector<PosLetter> cat;
    std::int64_t i = 0;
    for (const auto& pl : x.letters()) {
      Position p;
      p.path.push_back(PathSeg::omega(i++));
      cat.push_back({p, pl.letter});
    }
    for (const auto& pl : y.letters()) {
      Position p;
      p.path.push_back(PathSeg::omega(i++));
      cat.push_back({p, pl.letter});
    }
    CHECK(reduced_mul(reg, x, y).same_letters(free_reduce(reg, FiniteWord(cat))));
    // W * W^-1 is always empty
    std::vector<PosLetter> invls;
    std::int64_t j = 0;
    for (auto it2 = x.letters().rbegin(); it2 != x.letters().rend(); ++it2) {
      Position p;
      p.path.push_back(PathSeg::omega(j++));
      invls.push_back({p, Letter{it2->letter.index,
                                 g_inv(reg.at(it2->letter.index), it2->letter.value)}});
    }
    CHECK(reduced_mul(reg, x, FiniteWord(invls)).empty());
  }
}

TEST_CASE("equiv_depth") {
  Registry reg = zreg();
  WordPtr a = w_lit(reg, zl(0, 1));
  WordPtr w = w_cat({a, w_inv(reg, a)});
  CHECK(equiv_depth(reg, w, w_empty(), 0));
  CHECK(equiv_depth(reg, w, w_empty(), 5));
  WordPtr v = w_lit(reg, zl(0, 2));
  CHECK_FALSE(equiv_depth(reg, v, w_empty(), 0));
  CHECK(equiv_depth(reg, v, v, 8));
}

TEST_CASE("inverse laws at projection level") {
  Registry reg = zreg();
  std::mt19937 rng(11);
  for (int it = 0; it < 200; ++it) {
    WordPtr w = random_expr(reg, rng);
    WordPtr ww = w_inv(reg, w_inv(reg, w));
    for (std::int64_t N = 0; N <= 6; N += 3) CHECK(equiv_depth(reg, w, ww, N));
    // p_N(inverse) is the reversed letterwise inverse
    auto p = project(reg, w, 5);
    auto q = project(reg, w_inv(reg, w), 5);
    REQUIRE(p.size() == q.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      const Letter& l = p.at(p.size() - 1 - i).letter;
      CHECK(q.at(i).letter == Letter{l.index, g_inv(reg.at(l.index), l.value)});
    }
  }
}

TEST_CASE("concat projections concatenate") {
  Registry reg = zreg();
  std::mt19937 rng(13);
  for (int it = 0; it < 200; ++it) {
    WordPtr a = random_expr(reg, rng);
    WordPtr b = random_expr(reg, rng);
    auto pc = project(reg, w_cat({a, b}), 3);
    auto pa = project(reg, a, 3);
    auto pb = project(reg, b, 3);
    REQUIRE(pc.size() == pa.size() + pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i)
      CHECK(pc.at(i).letter == pa.at(i).letter);
    for (std::size_t i = 0; i < pb.size(); ++i)
      CHECK(pc.at(pa.size() + i).letter == pb.at(i).letter);
  }
}

TEST_CASE("retraction: p_n after p_N equals p_n") {
  Registry reg = zreg();
  std::mt19937 rng(17);
  for (int it = 0; it < 100; ++it) {
    WordPtr w = random_expr(reg, rng);
    auto p8 = project(reg, w, 8);
    for (std::int64_t n = 0; n <= 8; n += 2) {
      auto pn = project(reg, w, n);
      // filter p8 down to degrees <= n
      std::vector<PosLetter> filt;
      for (const auto& pl : p8.letters())
        if (pl.letter.index <= n) filt.push_back(pl);
      CHECK(FiniteWord(filt).same_letters(pn));
    }
  }
}

TEST_CASE("omega-cat word: diagonal-style powers") {
  Registry reg = zreg();
  OmegaRule r;
  TailSlot s;
  s.index = {1, 0};
  s.exp.overrides[2] = 5;
  s.exp.dflt = {0, 1};
  r.slots.push_back(s);
  WordPtr w = w_omega(reg, r);
  auto p4 = project(reg, w, 4);
  REQUIRE(p4.size() == 5);
  CHECK(p4.at(2).letter == zl(2, 5));
  CHECK(p4.at(3).letter == zl(3, 1));
  CHECK(d_word(reg, w).value() == 0);
  CHECK_FALSE(word_is_finite(*w));
  CHECK(first_letter(reg, *w).value() == zl(0, 1));
  CHECK_FALSE(last_letter(reg, *w).has_value());
}

TEST_CASE("subword: full, part, and filtered projections") {
  Registry reg = zreg();
  WordPtr A = w_cat({w_lit(reg, zl(0, 1)), w_lit(reg, zl(1, 1))});
  WordPtr B = w_lit(reg, zl(2, 1));
  WordPtr w = w_cat({A, B});
  // full interval returns the word itself
  CHECK(subword(reg, w, Interval::full()) == w);
  // interval covering exactly A (parts 0,1 of the flattened cat)
  Position b_start;
  b_start.path.push_back(PathSeg::cat(2));
  Interval coverA{Cut::inf(), Cut::open(b_start)};
  WordPtr swA = subword(reg, w, coverA);
  CHECK(equiv_depth(reg, swA, A, 5));
  // generic filter property on random expressions
  std::mt19937 rng(23);
  for (int it = 0; it < 150; ++it) {
    WordPtr x = random_expr(reg, rng);
    auto p = project(reg, x, 6);
    if (p.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
    std::size_t i = pick(rng), j = pick(rng);
    if (i > j) std::swap(i, j);
    Interval I = Interval::closed(p.at(i).pos, p.at(j).pos);
    auto sr = subword_with_map(reg, x, I);
    auto ps = project(reg, sr.word, 6);
    // the subword's projection = the I-filtered projection of the host
    std::vector<PosLetter> filt;
    for (const auto& pl : p.letters())
      if (I.contains(pl.pos)) filt.push_back(pl);
    REQUIRE(ps.size() == filt.size());
    for (std::size_t k = 0; k < filt.size(); ++k) {
      CHECK(ps.at(k).letter == filt[k].letter);
      // the rebaser sends host positions to the subword's positions
      CHECK(sr.map(filt[k].pos) == ps.at(k).pos);
    }
  }
}

TEST_CASE("subword of ruler word between the two central degree-1 letters") {
  Registry reg = z2reg();
  WordPtr W = ruler_word(reg, 0);
  auto p2 = project(reg, W, 2);
  // p2 = g2 g1 g2 g0 g2 g1 g2: strictly between the two g1's, excluding ends
  REQUIRE(degrees(p2) == std::vector<std::int64_t>{2, 1, 2, 0, 2, 1, 2});
  Interval I{Cut::open(p2.at(1).pos), Cut::open(p2.at(5).pos)};
  WordPtr mid = subword(reg, W, I);
  auto pm = project(reg, mid, 2);
  CHECK(degrees(pm) == std::vector<std::int64_t>{2, 0, 2});
  // trimming further to exclude the g2 block ends leaves p2 = g2 only
  Interval J{Cut::open(p2.at(3).pos), Cut::open(p2.at(5).pos)};
  auto pj = project(reg, subword(reg, W, J), 2);
  CHECK(degrees(pj) == std::vector<std::int64_t>{2});
}

TEST_CASE("subword of omega tail keeps the tail") {
  Registry reg = zreg();
  OmegaRule r;
  TailSlot s;
  s.index = {1, 0};
  r.slots.push_back(s);
  WordPtr w = w_omega(reg, r);  // h_0 h_1 h_2 ...
  auto p6 = project(reg, w, 6);
  REQUIRE(p6.size() == 7);
  Interval tail{Cut::closed(p6.at(3).pos), Cut::inf()};
  WordPtr tw = subword(reg, w, tail);
  auto pt = project(reg, tw, 9);
  CHECK(degrees(pt) == std::vector<std::int64_t>{3, 4, 5, 6, 7, 8, 9});
  CHECK_FALSE(word_is_finite(*tw));
}

TEST_CASE("word condition: escape bounds keep projections correct for qshuffle tails") {
  Registry reg = zreg();
  QRule q;
  q.tail_start = 0;
  q.site_tail.kind = SiteTail::Kind::Power;
  q.fiber_tail.kind = FiberTail::Kind::EnumSingleton;
  WordPtr w = w_qshuffle(reg, q);
  auto p3 = project(reg, w, 3);
  REQUIRE(p3.size() == 4);
  // sites are nth_rational(m), letters h_m
  std::vector<std::int64_t> degs = degrees(p3);
  std::sort(degs.begin(), degs.end());
  CHECK(degs == std::vector<std::int64_t>{0, 1, 2, 3});
  CHECK(d_word(reg, w).value() == 0);
}
