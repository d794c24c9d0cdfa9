#pragma once

#include <string>
#include <vector>

#include "tw/words.hpp"

namespace tw {

/// One factor of a symbolic quotient element: a signed restriction of a named
/// word. Two factors refer to the same word when their names agree.
struct ArchFactor {
  std::string word_name;
  WordPtr word;
  Interval interval;
  int sign = 1;
};

/// Elements of the quotient of the reduced words by the normal closure of the
/// finite words, in normalized factor form: no finite factors (they vanish in
/// the quotient), no adjacent syntactic inverse pair, adjacent co-oriented
/// restrictions of the same word merged across finite gaps.
class ArchElement {
 public:
  ArchElement() = default;  // identity

  const std::vector<ArchFactor>& factors() const { return factors_; }
  bool is_identity() const { return factors_.empty(); }
  std::string str() const;

  static ArchElement from_factors(const Registry& reg, std::vector<ArchFactor> fs);

 private:
  std::vector<ArchFactor> factors_;
};

/// Quotient class of a whole word.
ArchElement beth(const Registry& reg, const std::string& name, const WordPtr& w);
/// Quotient class of a signed restriction.
ArchElement arch_ref(const Registry& reg, const std::string& name, const WordPtr& w,
                     const Interval& I, int sign);

ArchElement arch_mul(const Registry& reg, const ArchElement& a, const ArchElement& b);
ArchElement arch_inv(const Registry& reg, const ArchElement& a);

enum class ArchEq { Equal, Unknown };

/// Equal only with a syntactic certificate; never a definite "not equal".
ArchEq arch_eq(const Registry& reg, const ArchElement& a, const ArchElement& b);

}  // namespace tw
