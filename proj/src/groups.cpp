#include "tw/groups.hpp"

#include <stdexcept>

namespace tw {

GroupSpec GroupSpec::integers() {
  GroupSpec s;
  s.kind_ = Kind::InfiniteCyclic;
  return s;
}

GroupSpec GroupSpec::cyclic(std::int64_t modulus) {
  if (modulus < 2) throw std::invalid_argument("FiniteCyclic modulus must be >= 2");
  GroupSpec s;
  s.kind_ = Kind::FiniteCyclic;
  s.modulus_ = modulus;
  return s;
}

GroupSpec GroupSpec::free_product(GroupSpec left, GroupSpec right) {
  GroupSpec s;
  s.kind_ = Kind::FreeProduct;
  s.factors_ = std::make_shared<const std::pair<GroupSpec, GroupSpec>>(
      std::move(left), std::move(right));
  return s;
}

const GroupSpec& GroupSpec::left() const {
  if (kind_ != Kind::FreeProduct) throw std::logic_error("not a free product");
  return factors_->first;
}

const GroupSpec& GroupSpec::right() const {
  if (kind_ != Kind::FreeProduct) throw std::logic_error("not a free product");
  return factors_->second;
}

bool GroupSpec::operator==(const GroupSpec& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case Kind::InfiniteCyclic:
      return true;
    case Kind::FiniteCyclic:
      return modulus_ == o.modulus_;
    case Kind::FreeProduct:
      return left() == o.left() && right() == o.right();
  }
  return false;
}

std::string GroupSpec::str() const {
  switch (kind_) {
    case Kind::InfiniteCyclic:
      return "Z";
    case Kind::FiniteCyclic:
      return "Z/" + std::to_string(modulus_);
    case Kind::FreeProduct:
      return "(" + left().str() + " * " + right().str() + ")";
  }
  return "?";
}

GroupElement GroupElement::integer(std::int64_t v) {
  GroupElement e;
  e.scalar_ = v;
  return e;
}

GroupElement GroupElement::product(std::vector<std::pair<Side, GroupElement>> parts) {
  GroupElement e;
  e.factors_ = std::make_shared<const std::vector<std::pair<Side, GroupElement>>>(
      std::move(parts));
  return e;
}

const std::vector<std::pair<Side, GroupElement>>& GroupElement::factors() const {
  static const std::vector<std::pair<Side, GroupElement>> empty;
  return factors_ ? *factors_ : empty;
}

bool GroupElement::operator==(const GroupElement& o) const {
  if (scalar_ != o.scalar_) return false;
  const auto& a = factors();
  const auto& b = o.factors();
  return a == b;
}

std::string GroupElement::str() const {
  if (!factors_ || factors_->empty()) return std::to_string(scalar_);
  std::string s = "[";
  bool first = true;
  for (const auto& [side, el] : *factors_) {
    if (!first) s += " ";
    first = false;
    s += (side == Side::Left ? "L:" : "R:");
    s += el.str();
  }
  s += "]";
  return s;
}

namespace {

std::int64_t mod_norm(std::int64_t v, std::int64_t k) {
  std::int64_t r = v % k;
  return r < 0 ? r + k : r;
}

const GroupSpec& side_spec(const GroupSpec& spec, Side s) {
  return s == Side::Left ? spec.left() : spec.right();
}

}  // namespace

void g_validate(const GroupSpec& spec, const GroupElement& a) {
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      if (a.has_factors()) throw std::invalid_argument("Z element must be an exponent");
      return;
    case GroupSpec::Kind::FiniteCyclic:
      if (a.has_factors()) throw std::invalid_argument("Z/k element must be a residue");
      if (a.scalar() < 0 || a.scalar() >= spec.modulus())
        throw std::invalid_argument("residue out of range");
      return;
    case GroupSpec::Kind::FreeProduct: {
      if (a.scalar() != 0)
        throw std::invalid_argument("free product element must be a factor list");
      Side prev = Side::Left;
      bool have_prev = false;
      for (const auto& [side, el] : a.factors()) {
        const GroupSpec& fs = side_spec(spec, side);
        g_validate(fs, el);
        if (g_is_identity(fs, el))
          throw std::invalid_argument("identity factor in free product normal form");
        if (have_prev && side == prev)
          throw std::invalid_argument("adjacent factors on the same side");
        prev = side;
        have_prev = true;
      }
      return;
    }
  }
}

bool g_is_identity(const GroupSpec& spec, const GroupElement& a) {
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
    case GroupSpec::Kind::FiniteCyclic:
      return a.scalar() == 0 && !a.has_factors();
    case GroupSpec::Kind::FreeProduct:
      return a.factors().empty() && a.scalar() == 0;
  }
  return false;
}

GroupElement g_mul(const GroupSpec& spec, const GroupElement& a, const GroupElement& b) {
  g_validate(spec, a);
  g_validate(spec, b);
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      return GroupElement::integer(a.scalar() + b.scalar());
    case GroupSpec::Kind::FiniteCyclic:
      return GroupElement::integer(mod_norm(a.scalar() + b.scalar(), spec.modulus()));
    case GroupSpec::Kind::FreeProduct: {
      // Concatenate, then cancel at the seam until the forms alternate again.
      std::vector<std::pair<Side, GroupElement>> acc = a.factors();
      for (const auto& f : b.factors()) {
        if (!acc.empty() && acc.back().first == f.first) {
          const GroupSpec& fs = side_spec(spec, f.first);
          GroupElement merged = g_mul(fs, acc.back().second, f.second);
          acc.pop_back();
          if (!g_is_identity(fs, merged)) acc.emplace_back(f.first, merged);
        } else {
          acc.push_back(f);
        }
      }
      if (acc.empty()) return GroupElement();
      return GroupElement::product(std::move(acc));
    }
  }
  return GroupElement();
}

GroupElement g_inv(const GroupSpec& spec, const GroupElement& a) {
  g_validate(spec, a);
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      return GroupElement::integer(-a.scalar());
    case GroupSpec::Kind::FiniteCyclic:
      return GroupElement::integer(mod_norm(-a.scalar(), spec.modulus()));
    case GroupSpec::Kind::FreeProduct: {
      std::vector<std::pair<Side, GroupElement>> rev;
      const auto& fs = a.factors();
      for (auto it = fs.rbegin(); it != fs.rend(); ++it)
        rev.emplace_back(it->first, g_inv(side_spec(spec, it->first), it->second));
      if (rev.empty()) return GroupElement();
      return GroupElement::product(std::move(rev));
    }
  }
  return GroupElement();
}

GroupElement g_pow(const GroupSpec& spec, const GroupElement& a, std::int64_t k) {
  if (k < 0) return g_pow(spec, g_inv(spec, a), -k);
  GroupElement acc;
  for (std::int64_t i = 0; i < k; ++i) acc = g_mul(spec, acc, a);
  return acc;
}

bool g_has_involution(const GroupSpec& spec) {
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      return false;
    case GroupSpec::Kind::FiniteCyclic:
      return spec.modulus() % 2 == 0;
    case GroupSpec::Kind::FreeProduct:
      // Torsion in a free product is conjugate into a factor.
      return g_has_involution(spec.left()) || g_has_involution(spec.right());
  }
  return false;
}

std::optional<GroupElement> g_infinite_order_element(const GroupSpec& spec) {
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      return GroupElement::integer(1);
    case GroupSpec::Kind::FiniteCyclic:
      return std::nullopt;
    case GroupSpec::Kind::FreeProduct: {
      // h h' with h, h' nontrivial factor elements has infinite order.
      GroupElement h = g_nontrivial(spec.left());
      GroupElement hp = g_nontrivial(spec.right());
      return GroupElement::product({{Side::Left, h}, {Side::Right, hp}});
    }
  }
  return std::nullopt;
}

std::optional<GroupElement> g_involution(const GroupSpec& spec) {
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      return std::nullopt;
    case GroupSpec::Kind::FiniteCyclic:
      if (spec.modulus() % 2 != 0) return std::nullopt;
      return GroupElement::integer(spec.modulus() / 2);
    case GroupSpec::Kind::FreeProduct: {
      if (auto l = g_involution(spec.left()))
        return GroupElement::product({{Side::Left, *l}});
      if (auto r = g_involution(spec.right()))
        return GroupElement::product({{Side::Right, *r}});
      return std::nullopt;
    }
  }
  return std::nullopt;
}

GroupElement g_nontrivial(const GroupSpec& spec) {
  switch (spec.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
    case GroupSpec::Kind::FiniteCyclic:
      return GroupElement::integer(1);
    case GroupSpec::Kind::FreeProduct:
      return GroupElement::product({{Side::Left, g_nontrivial(spec.left())}});
  }
  return GroupElement();
}

std::string g_str(const GroupSpec& spec, const GroupElement& a) {
  (void)spec;
  return a.str();
}

std::optional<Letter> Registry::infinite_order_letter(std::int64_t n) const {
  auto e = g_infinite_order_element(at(n));
  if (!e) return std::nullopt;
  return Letter{n, *e};
}

std::optional<Letter> Registry::involution_letter(std::int64_t n) const {
  auto e = g_involution(at(n));
  if (!e) return std::nullopt;
  return Letter{n, *e};
}

Letter Registry::nontrivial_letter(std::int64_t n) const {
  return Letter{n, g_nontrivial(at(n))};
}

}  // namespace tw
