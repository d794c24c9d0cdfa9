#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tw {

/// One group in a registered sequence {G_n}. Three variants: the integers,
/// a finite cyclic group, or a free product of two group specs.
class GroupSpec {
 public:
  enum class Kind { InfiniteCyclic, FiniteCyclic, FreeProduct };

  static GroupSpec integers();
  static GroupSpec cyclic(std::int64_t modulus);
  static GroupSpec free_product(GroupSpec left, GroupSpec right);

  Kind kind() const { return kind_; }
  std::int64_t modulus() const { return modulus_; }
  const GroupSpec& left() const;
  const GroupSpec& right() const;

  bool operator==(const GroupSpec& o) const;
  bool operator!=(const GroupSpec& o) const { return !(*this == o); }

  std::string str() const;

 private:
  GroupSpec() = default;
  Kind kind_ = Kind::InfiniteCyclic;
  std::int64_t modulus_ = 0;
  std::shared_ptr<const std::pair<GroupSpec, GroupSpec>> factors_;
};

enum class Side : std::uint8_t { Left = 0, Right = 1 };

/// An element of some GroupSpec. Exact throughout: an exponent for Z, a
/// residue for Z/k, and a freely reduced alternating factor list for a free
/// product. Interpretation is relative to the spec the element is used with.
class GroupElement {
 public:
  GroupElement() = default;  // identity of every variant

  static GroupElement integer(std::int64_t v);
  static GroupElement product(std::vector<std::pair<Side, GroupElement>> parts);

  std::int64_t scalar() const { return scalar_; }
  const std::vector<std::pair<Side, GroupElement>>& factors() const;
  bool has_factors() const { return factors_ != nullptr; }

  bool operator==(const GroupElement& o) const;
  bool operator!=(const GroupElement& o) const { return !(*this == o); }

  std::string str() const;

 private:
  std::int64_t scalar_ = 0;
  std::shared_ptr<const std::vector<std::pair<Side, GroupElement>>> factors_;
};

/// A letter: a non-identity element of G_{index}. d(letter) = index.
struct Letter {
  std::int64_t index = 0;
  GroupElement value;

  bool operator==(const Letter& o) const {
    return index == o.index && value == o.value;
  }
  bool operator!=(const Letter& o) const { return !(*this == o); }
};

// Group arithmetic. All ops validate the representation against the spec.
void g_validate(const GroupSpec& spec, const GroupElement& a);
GroupElement g_mul(const GroupSpec& spec, const GroupElement& a, const GroupElement& b);
GroupElement g_inv(const GroupSpec& spec, const GroupElement& a);
bool g_is_identity(const GroupSpec& spec, const GroupElement& a);
bool g_has_involution(const GroupSpec& spec);
std::optional<GroupElement> g_infinite_order_element(const GroupSpec& spec);
/// An element of order exactly 2, when one exists.
std::optional<GroupElement> g_involution(const GroupSpec& spec);
/// Some non-identity element (every registered group is nontrivial).
GroupElement g_nontrivial(const GroupSpec& spec);
GroupElement g_pow(const GroupSpec& spec, const GroupElement& a, std::int64_t k);

std::string g_str(const GroupSpec& spec, const GroupElement& a);

/// Assigns a GroupSpec to every index n: a finite table plus a default tail
/// spec, so a whole sequence {G_n} is finitely described.
class Registry {
 public:
  Registry() : tail_(GroupSpec::integers()) {}
  explicit Registry(GroupSpec tail) : tail_(std::move(tail)) {}
  Registry(std::vector<GroupSpec> table, GroupSpec tail)
      : table_(std::move(table)), tail_(std::move(tail)) {}

  const GroupSpec& at(std::int64_t n) const {
    if (n < 0) throw std::out_of_range("negative group index");
    if (static_cast<std::size_t>(n) < table_.size()) return table_[n];
    return tail_;
  }
  const std::vector<GroupSpec>& table() const { return table_; }
  const GroupSpec& tail() const { return tail_; }

  /// Canonical infinite-order letter of G_n, if the group has one.
  std::optional<Letter> infinite_order_letter(std::int64_t n) const;
  /// Canonical involution letter of G_n, if the group has one.
  std::optional<Letter> involution_letter(std::int64_t n) const;
  /// Canonical non-identity letter of G_n.
  Letter nontrivial_letter(std::int64_t n) const;

  bool operator==(const Registry& o) const {
    return table_ == o.table_ && tail_ == o.tail_;
  }

 private:
  std::vector<GroupSpec> table_;
  GroupSpec tail_;
};

/// All-integers registry, the sequence behind the Hawaiian earring group.
inline Registry integers_registry() { return Registry(GroupSpec::integers()); }

}  // namespace tw
