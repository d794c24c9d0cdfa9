#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tw/match.hpp"

using namespace tw;

namespace {

Registry reg = integers_registry();

Letter zl(std::int64_t n, std::int64_t e) { return Letter{n, GroupElement::integer(e)}; }

FiniteWord fw(std::vector<std::int64_t> degs) {
  std::vector<PosLetter> out;
  std::int64_t i = 0;
  for (auto n : degs) {
    Position p;
    p.path.push_back(PathSeg::omega(i++));
    out.push_back({p, zl(n, 1)});
  }
  return FiniteWord(std::move(out));
}

// Brute force: all contiguous windows whose degrees match.
std::size_t brute_count(const DegreeProfile& prof, const FiniteWord& t) {
  std::size_t n = 0;
  if (prof.degrees.empty() || prof.degrees.size() > t.size()) return 0;
  for (std::size_t s = 0; s + prof.degrees.size() <= t.size(); ++s) {
    if (prof.extends_down && s != 0) continue;
    if (prof.extends_up && s + prof.degrees.size() != t.size()) continue;
    bool ok = true;
    for (std::size_t i = 0; i < prof.degrees.size(); ++i)
      if (t.at(s + i).letter.index != prof.degrees[i]) ok = false;
    if (ok) ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("degree embeddings: frozen examples") {
  // profile (0,1) into degrees (0,1,0,1): two embeddings
  CHECK(enumerate_degree_embeddings({{0, 1}, false, false}, fw({0, 1, 0, 1})).size() == 2);
  // single degree-7 point, no degree-7 letter
  CHECK(enumerate_degree_embeddings({{7}, false, false}, fw({0, 1, 0})).empty());
  // profile (0,1,0) into (0,1,0): exactly one
  CHECK(enumerate_degree_embeddings({{0, 1, 0}, false, false}, fw({0, 1, 0})).size() == 1);
}

TEST_CASE("degree embeddings match brute force on random targets") {
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> len(1, 12), deg(0, 3), plen(1, 4), flag(0, 3);
  for (int it = 0; it < 3000; ++it) {
    std::vector<std::int64_t> t;
    int L = len(rng);
    for (int i = 0; i < L; ++i) t.push_back(deg(rng));
    DegreeProfile prof;
    int P = plen(rng);
    for (int i = 0; i < P; ++i) prof.degrees.push_back(deg(rng));
    int f = flag(rng);
    prof.extends_down = f == 1;
    prof.extends_up = f == 2;
    FiniteWord target = fw(t);
    CHECK(enumerate_degree_embeddings(prof, target).size() == brute_count(prof, target));
  }
}

TEST_CASE("occurs_as_subword") {
  WordPtr a = w_lit(reg, zl(0, 1));
  WordPtr b = w_lit(reg, zl(1, 1));
  WordPtr x = w_lit(reg, zl(2, 1));
  WordPtr y = w_lit(reg, zl(3, 1));
  WordPtr host = w_cat({x, a, b, y});
  WordPtr pat = w_cat({a, b});
  // pattern equals host
  auto self = occurs_as_subword(reg, host, host, 6);
  CHECK(self.found);
  CHECK(self.occ.exact);
  // pattern in the middle
  auto mid = occurs_as_subword(reg, pat, host, 6);
  REQUIRE(mid.found);
  // the found interval restricts the host to something equivalent to pat
  WordPtr piece = subword(reg, host, mid.occ.host_interval);
  CHECK(equiv_depth(reg, piece, pat, 6));
  // absent pattern
  CHECK_FALSE(occurs_as_subword(reg, w_lit(reg, zl(5, 1)), host, 6).found);
  // multiple occurrences
  WordPtr host2 = w_cat({a, b, x, a, b});
  CHECK(occurs_all(reg, pat, host2, 6).size() == 2);
}

TEST_CASE("occurrences restrict to equivalent subwords at every depth <= bound") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> len(1, 6), deg(0, 2), val(1, 2);
  for (int it = 0; it < 200; ++it) {
    std::vector<WordPtr> hs, ps;
    int L = len(rng);
    for (int i = 0; i < L; ++i) hs.push_back(w_lit(reg, zl(deg(rng), val(rng))));
    int s = rng() % L, e = s + rng() % (L - s);
    for (int i = s; i <= e; ++i) ps.push_back(hs[i]);
    WordPtr host = w_cat(hs);
    WordPtr pat = w_cat(ps);
    auto occs = occurs_all(reg, pat, host, 6);
    REQUIRE(!occs.empty());
    for (const auto& occ : occs) {
      WordPtr piece = subword(reg, host, occ.host_interval);
      for (int N = 0; N <= 6; N += 2) CHECK(equiv_depth(reg, piece, pat, N));
    }
  }
}

TEST_CASE("generated_in_group") {
  GroupSpec z = GroupSpec::integers();
  CHECK(generated_in_group(z, {GroupElement::integer(4), GroupElement::integer(6)},
                           GroupElement::integer(10), 6));
  CHECK_FALSE(generated_in_group(z, {GroupElement::integer(4), GroupElement::integer(6)},
                                 GroupElement::integer(3), 6));
  GroupSpec z6 = GroupSpec::cyclic(6);
  CHECK(generated_in_group(z6, {GroupElement::integer(4)}, GroupElement::integer(2), 6));
  CHECK_FALSE(generated_in_group(z6, {GroupElement::integer(3)}, GroupElement::integer(2), 6));
  GroupSpec fp = GroupSpec::free_product(GroupSpec::integers(), GroupSpec::integers());
  GroupElement l = GroupElement::product({{Side::Left, GroupElement::integer(1)}});
  GroupElement r = GroupElement::product({{Side::Right, GroupElement::integer(1)}});
  GroupElement lr = g_mul(fp, l, r);
  CHECK(generated_in_group(fp, {l, r}, lr, 4));
  CHECK_FALSE(generated_in_group(fp, {l}, r, 4));
}

TEST_CASE("fine membership: member and concatenation witnesses") {
  WordPtr a = w_lit(reg, zl(0, 1));
  WordPtr b = w_lit(reg, zl(1, 1));
  WordPtr fam = w_cat({a, b, w_lit(reg, zl(2, 1))});
  // the family word itself: single factor
  auto v = fine_membership_bounded(reg, fam, {fam}, 6);
  REQUIRE(v.member);
  CHECK(v.witness.factors.size() == 1);
  CHECK(v.witness.factors[0].kind == FineFactor::Kind::Subword);
  // concatenation of two subwords
  WordPtr w2 = w_cat({b, w_lit(reg, zl(2, 1)), a});
  auto v2 = fine_membership_bounded(reg, w2, {fam}, 6);
  REQUIRE(v2.member);
  CHECK(v2.witness.factors.size() == 2);
  // inverse subwords count
  WordPtr w3 = w_inv(reg, fam);
  auto v3 = fine_membership_bounded(reg, w3, {fam}, 6);
  REQUIRE(v3.member);
  CHECK(v3.witness.factors.size() == 1);
  CHECK(v3.witness.factors[0].inverted);
  // a letter generated by family letters in its group
  WordPtr w4 = w_lit(reg, zl(1, 5));
  CHECK(fine_membership_bounded(reg, w4, {fam}, 6).member);
  // a letter in a group the family never touches
  WordPtr w5 = w_lit(reg, zl(7, 1));
  CHECK_FALSE(fine_membership_bounded(reg, w5, {fam}, 7).member);
}

TEST_CASE("fine membership: endless hosts need flush tail factors") {
  // host: omega word h_0 h_1 h_2 ...
  OmegaRule r;
  TailSlot s;
  s.index = {1, 0};
  r.slots.push_back(s);
  WordPtr host = w_omega(reg, r);
  // family containing the very same omega word: member via one factor
  auto v = fine_membership_bounded(reg, host, {host}, 6);
  REQUIRE(v.member);
  CHECK(v.witness.factors.size() == 1);
  CHECK(v.witness.factors[0].family_interval.high.kind == Cut::Kind::Inf);
  // family of finite words can never absorb the endless tail
  WordPtr fam = w_cat({w_lit(reg, zl(0, 1)), w_lit(reg, zl(1, 1))});
  CHECK_FALSE(fine_membership_bounded(reg, host, {fam}, 6).member);
  // ... even when every single letter is generated: the tail still dangles
  std::vector<WordPtr> lits;
  for (std::int64_t n = 0; n <= 8; ++n) lits.push_back(w_lit(reg, zl(n, 1)));
  CHECK_FALSE(fine_membership_bounded(reg, host, {w_cat(lits)}, 6).member);
}

TEST_CASE("fine membership: shifted tails match mid-word") {
  // family: h_0 h_1 h_2 ...; host: h_3 h_4 ... (a terminal subword)
  OmegaRule r;
  TailSlot s;
  s.index = {1, 0};
  r.slots.push_back(s);
  WordPtr fam = w_omega(reg, r);
  OmegaRule r2 = r;
  r2.slots[0].index = {1, 3};
  WordPtr host = w_omega(reg, r2);
  auto v = fine_membership_bounded(reg, host, {fam}, 8);
  REQUIRE(v.member);
  CHECK(v.witness.factors.size() == 1);
  // host with a foreign head letter: two factors
  WordPtr host2 = w_cat({w_lit(reg, zl(0, 1)), host});
  auto v2 = fine_membership_bounded(reg, host2, {fam}, 8);
  REQUIRE(v2.member);
  CHECK(v2.witness.factors.size() == 2);
  // host whose tail exponents differ from the family: not a member
  OmegaRule r3 = r2;
  r3.slots[0].exp.dflt = {0, 2};
  WordPtr host3 = w_omega(reg, r3);
  CHECK_FALSE(fine_membership_bounded(reg, host3, {fam}, 8).member);
}
