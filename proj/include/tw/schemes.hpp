#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tw/words.hpp"

namespace tw {

/// Positions (indices into a FiniteWord) of same-group letters, at least two.
struct ReductionComponent {
  std::vector<std::size_t> positions;  // strictly increasing
  std::int64_t group_index = 0;
};

struct ReductionScheme {
  std::vector<ReductionComponent> components;
};

/// Product of the component's letters in G_{group_index}; absent = empty word.
/// Throws when the component mixes groups or is malformed.
std::optional<Letter> pi(const Registry& reg, const FiniteWord& w,
                         const ReductionComponent& c);

/// Checks disjointness and the gap-cover condition exhaustively.
bool validate_scheme(const Registry& reg, const FiniteWord& w, const ReductionScheme& s);

/// A scheme covering all positions with every component product trivial,
/// when one exists (exactly when the word reduces to the identity).
/// Extracted from the free-reduction trace. Throws on identity letters.
std::optional<ReductionScheme> find_trivializing_scheme(const Registry& reg,
                                                        const FiniteWord& w);

enum class Reduced { NotReduced, Certified, Unknown };

struct ReducedVerdict {
  Reduced status = Reduced::Unknown;
  std::string reason;
  Interval witness;  // offending window, for NotReduced
};

/// Reducedness with bounded certainty: exact for finite words, certified for
/// rule words whose shape carries one of the engine's soundness templates,
/// UnknownToDepth otherwise.
ReducedVerdict check_reduced_depth(const Registry& reg, const WordPtr& w, std::int64_t N);

/// Whether powers of the letter never return to the identity.
bool letter_has_infinite_order(const Registry& reg, const Letter& l);

}  // namespace tw
