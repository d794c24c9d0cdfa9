#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tw/words.hpp"

namespace tw {

/// A finite run of required letter degrees. `extends_up` / `extends_down`
/// mark profiles that continue past the visible depth (an omega tail or its
/// reverse), forcing matches to sit flush against the corresponding end of
/// the searched letter list.
struct DegreeProfile {
  std::vector<std::int64_t> degrees;
  bool extends_down = false;
  bool extends_up = false;
};

struct Embedding {
  std::size_t start = 0;   // index into the target letter list
  std::size_t length = 0;  // visible letters matched
};

/// All order embeddings of the profile onto intervals of the target with
/// matching degrees. Anchor-based: the image of the first profile point
/// determines the embedding.
std::vector<Embedding> enumerate_degree_embeddings(const DegreeProfile& profile,
                                                   const FiniteWord& target);

// --- occurrence search ------------------------------------------------------

struct Occurrence {
  Interval host_interval;
  bool exact = false;  // both words finite and compared in full
};

/// All intervals I of the host with host|I == pattern at the given depth
/// (letterwise on the depth-N projections; exact when both are finite).
std::vector<Occurrence> occurs_all(const Registry& reg, const WordPtr& pattern,
                                   const WordPtr& host, std::int64_t depth);

struct OccursVerdict {
  bool found = false;
  Occurrence occ;  // valid when found
};
OccursVerdict occurs_as_subword(const Registry& reg, const WordPtr& pattern,
                                const WordPtr& host, std::int64_t depth);

/// Largest degree of any letter of a structurally finite word.
std::optional<std::int64_t> finite_max_degree(const Registry& reg, const WordPtr& w);

// --- bounded Fine membership -------------------------------------------------

struct FineFactor {
  enum class Kind { Subword, SingleLetter };
  Kind kind = Kind::Subword;
  // Subword factors
  std::size_t family_index = 0;
  bool inverted = false;
  Interval family_interval;  // interval of the family word (Inf ends when the
                             // factor extends past the visible depth)
  // SingleLetter factors
  Letter letter;
  // both kinds
  Interval host_interval;
};

struct FineWitness {
  std::vector<FineFactor> factors;
  std::int64_t depth = 0;
};

struct FineVerdict {
  bool member = false;
  FineWitness witness;  // valid when member
};

struct FineOptions {
  std::size_t factor_cap = 16;
  std::int64_t generation_budget = 6;  // product length bound for free factors
};

/// Searches for a decomposition of W into family subwords (either sign) and
/// single letters generated by family letters, checked against the depth-N
/// projections. A "no" is relative to the depth and the factor cap; witnesses
/// are grounded (every subword factor shows at least one letter at depth N).
FineVerdict fine_membership_bounded(const Registry& reg, const WordPtr& W,
                                    const std::vector<WordPtr>& family, std::int64_t N,
                                    const FineOptions& opt = {});

/// Subgroup membership for single letters: is `target` a product of the
/// given generators inside `spec`? Exact for cyclic groups; bounded search
/// (product length <= budget) for free products.
bool generated_in_group(const GroupSpec& spec, const std::vector<GroupElement>& gens,
                        const GroupElement& target, std::int64_t budget);

}  // namespace tw
