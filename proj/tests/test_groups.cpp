#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "tw/groups.hpp"

using namespace tw;

namespace {

// Exhaustive elements of a small spec, for order checks and oracle sweeps.
std::vector<GroupElement> small_elements(const GroupSpec& spec, int zmax = 2) {
  std::vector<GroupElement> out;
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      for (int v = -zmax; v <= zmax; ++v) out.push_back(GroupElement::integer(v));
      break;
    case GroupSpec::Kind::FiniteCyclic:
      for (std::int64_t v = 0; v < spec.modulus(); ++v)
        out.push_back(GroupElement::integer(v));
      break;
    case GroupSpec::Kind::FreeProduct: {
      out.push_back(GroupElement());
      for (const auto& l : small_elements(spec.left(), 1))
        if (!g_is_identity(spec.left(), l))
          out.push_back(GroupElement::product({{Side::Left, l}}));
      for (const auto& r : small_elements(spec.right(), 1))
        if (!g_is_identity(spec.right(), r))
          out.push_back(GroupElement::product({{Side::Right, r}}));
      // a few length-2 words
      for (const auto& l : small_elements(spec.left(), 1)) {
        if (g_is_identity(spec.left(), l)) continue;
        for (const auto& r : small_elements(spec.right(), 1)) {
          if (g_is_identity(spec.right(), r)) continue;
          out.push_back(GroupElement::product({{Side::Left, l}, {Side::Right, r}}));
          out.push_back(GroupElement::product({{Side::Right, r}, {Side::Left, l}}));
        }
      }
      break;
    }
  }
  return out;
}

int element_order(const GroupSpec& spec, const GroupElement& a, int cap = 24) {
  GroupElement acc;
  for (int k = 1; k <= cap; ++k) {
    acc = g_mul(spec, acc, a);
    if (g_is_identity(spec, acc)) return k;
  }
  return 0;  // order > cap
}

}  // namespace

TEST_CASE("infinite cyclic arithmetic") {
  GroupSpec z = GroupSpec::integers();
  CHECK(g_is_identity(z, g_mul(z, GroupElement::integer(3), GroupElement::integer(-3))));
  CHECK(g_inv(z, GroupElement::integer(5)) == GroupElement::integer(-5));
  CHECK(g_infinite_order_element(z).value() == GroupElement::integer(1));
  CHECK_FALSE(g_has_involution(z));
}

TEST_CASE("finite cyclic arithmetic") {
  GroupSpec z4 = GroupSpec::cyclic(4);
  CHECK(g_mul(z4, GroupElement::integer(2), GroupElement::integer(2)) ==
        GroupElement::integer(0));
  CHECK(g_is_identity(GroupSpec::cyclic(3), GroupElement::integer(0)));
  CHECK(g_has_involution(GroupSpec::cyclic(2)));
  CHECK_FALSE(g_has_involution(GroupSpec::cyclic(5)));
  CHECK_FALSE(g_infinite_order_element(GroupSpec::cyclic(5)).has_value());
  CHECK(g_involution(z4).value() == GroupElement::integer(2));
  CHECK_THROWS_AS(GroupSpec::cyclic(1), std::invalid_argument);
}

TEST_CASE("free product normal form multiplication") {
  GroupSpec fp = GroupSpec::free_product(GroupSpec::cyclic(2), GroupSpec::cyclic(2));
  GroupElement a = GroupElement::product({{Side::Left, GroupElement::integer(1)}});
  GroupElement b = GroupElement::product({{Side::Right, GroupElement::integer(1)}});
  GroupElement ab = g_mul(fp, a, b);
  GroupElement abab = g_mul(fp, ab, ab);
  CHECK(abab.factors().size() == 4);
  CHECK_FALSE(g_is_identity(fp, abab));

  // (L,2)(R,1) inverted in Z*Z
  GroupSpec zz = GroupSpec::free_product(GroupSpec::integers(), GroupSpec::integers());
  GroupElement w = GroupElement::product(
      {{Side::Left, GroupElement::integer(2)}, {Side::Right, GroupElement::integer(1)}});
  GroupElement wi = g_inv(zz, w);
  CHECK(wi == GroupElement::product({{Side::Right, GroupElement::integer(-1)},
                                     {Side::Left, GroupElement::integer(-2)}}));
  CHECK(g_is_identity(zz, g_mul(zz, w, wi)));
}

TEST_CASE("involution detection matches exhaustive order-2 search") {
  std::vector<GroupSpec> specs = {
      GroupSpec::free_product(GroupSpec::cyclic(3), GroupSpec::integers()),
      GroupSpec::free_product(GroupSpec::cyclic(2), GroupSpec::cyclic(3)),
      GroupSpec::free_product(GroupSpec::cyclic(3), GroupSpec::cyclic(5)),
      GroupSpec::free_product(GroupSpec::cyclic(4), GroupSpec::cyclic(3)),
  };
  for (const auto& spec : specs) {
    bool found = false;
    for (const auto& e : small_elements(spec)) {
      if (element_order(spec, e) == 2) found = true;
    }
    // Exhaustive-small search can only confirm presence; absence agrees on
    // these specs because factor involutions appear among short elements.
    CHECK(g_has_involution(spec) == found);
    if (auto inv = g_involution(spec)) CHECK(element_order(spec, *inv) == 2);
  }
  CHECK_FALSE(g_has_involution(
      GroupSpec::free_product(GroupSpec::cyclic(3), GroupSpec::integers())));
}

TEST_CASE("infinite order element in free product of finite groups") {
  GroupSpec fp = GroupSpec::free_product(GroupSpec::cyclic(2), GroupSpec::cyclic(2));
  GroupElement h = g_infinite_order_element(fp).value();
  GroupElement acc;
  for (int k = 1; k <= 20; ++k) {
    acc = g_mul(fp, acc, h);
    CHECK_FALSE(g_is_identity(fp, acc));
    CHECK(acc.factors().size() == static_cast<std::size_t>(2 * k));
  }
}

TEST_CASE("group laws on randomized triples") {
  std::mt19937 rng(20240811);
  std::vector<GroupSpec> specs = {
      GroupSpec::integers(), GroupSpec::cyclic(6),
      GroupSpec::free_product(GroupSpec::integers(), GroupSpec::cyclic(3)),
      GroupSpec::free_product(GroupSpec::cyclic(2), GroupSpec::cyclic(2))};
  for (const auto& spec : specs) {
    auto elems = small_elements(spec);
    std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
    for (int it = 0; it < 300; ++it) {
      const GroupElement& a = elems[pick(rng)];
      const GroupElement& b = elems[pick(rng)];
      const GroupElement& c = elems[pick(rng)];
      CHECK(g_mul(spec, g_mul(spec, a, b), c) == g_mul(spec, a, g_mul(spec, b, c)));
      CHECK(g_mul(spec, a, GroupElement()) == a);
      CHECK(g_mul(spec, GroupElement(), a) == a);
      CHECK(g_is_identity(spec, g_mul(spec, a, g_inv(spec, a))));
    }
  }
}

TEST_CASE("free product normal form is closed and unique") {
  GroupSpec fp = GroupSpec::free_product(GroupSpec::cyclic(2), GroupSpec::cyclic(3));
  auto elems = small_elements(fp);
  std::mt19937 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, elems.size() - 1);
  for (int it = 0; it < 500; ++it) {
    GroupElement x = elems[pick(rng)], y = elems[pick(rng)], z = elems[pick(rng)];
    GroupElement p1 = g_mul(fp, g_mul(fp, x, y), z);
    GroupElement p2 = g_mul(fp, x, g_mul(fp, y, z));
    CHECK(p1 == p2);           // identical representations, not just equal
    g_validate(fp, p1);        // closed under normal form invariants
  }
}

TEST_CASE("registry table plus tail") {
  Registry reg({GroupSpec::cyclic(2), GroupSpec::cyclic(4)}, GroupSpec::integers());
  CHECK(reg.at(0).kind() == GroupSpec::Kind::FiniteCyclic);
  CHECK(reg.at(1).modulus() == 4);
  CHECK(reg.at(2).kind() == GroupSpec::Kind::InfiniteCyclic);
  CHECK(reg.at(99).kind() == GroupSpec::Kind::InfiniteCyclic);
  CHECK(reg.involution_letter(0).has_value());
  CHECK_FALSE(reg.infinite_order_letter(0).has_value());
  CHECK(reg.infinite_order_letter(5).value().value == GroupElement::integer(1));
}
