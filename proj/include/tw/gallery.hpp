#pragma once

#include <map>
#include <string>
#include <vector>

#include "tw/extend.hpp"

namespace tw {

/// The ruler word, its tail family, and the asymmetric subword built from it.
struct NastyFamily {
  WordPtr W;                     // ruler word (offset 0)
  std::vector<WordPtr> members;  // W_1, W_2, ... up to the requested depth
  WordPtr alternating;           // g0 W3 g2 W5 g4 W7 ...
};

/// Requires an involution in every group up to the depth.
NastyFamily nastyword(const Registry& reg, std::int64_t depth);

/// Finitely described index relabeling: finite table, shift outside it.
struct IndexMap {
  std::map<std::int64_t, std::int64_t> table;
  std::int64_t shift = 0;
  std::int64_t operator()(std::int64_t n) const {
    auto it = table.find(n);
    return it != table.end() ? it->second : n + shift;
  }
};

/// Word with group indices relabeled. Pure shifts compose into the rule
/// tails; finite-support tables apply to materialized letters and reject
/// rule words whose tails keep meeting the support.
WordPtr reindex_word(const Registry& reg, const WordPtr& w, const IndexMap& f);
WordPtr shift_word(const Registry& reg, const WordPtr& w, std::int64_t k);

/// Registry whose slot n is the free product of slots 2n and 2n+1.
Registry paired_registry(const Registry& reg);
/// Letters of G_2n / G_2n+1 retagged as free-product letters in slot n.
FiniteWord pair_word(const Registry& reg, const FiniteWord& w);
FiniteWord unpair_word(const Registry& paired_reg, const FiniteWord& w);

// --- bounded extension driver --------------------------------------------------

struct Scenario {
  Registry registry;
  std::vector<CoiTriple> seeds;
  std::int64_t steps = 0;  // alternating left/right diagonal extensions
  std::int64_t depth = 6;
  std::size_t budget = 4096;
};

struct DriveResult {
  CoiCollection collection;
  std::vector<std::string> transcript;  // line-oriented JSON
  std::vector<AuditReport> audits;      // one per step
};

/// Alternates left- and right-side steps: a diagonal word leaves the current
/// Fine span, then the omega extension pairs it; the collection is audited
/// after every step. Deterministic given the scenario.
DriveResult drive_extension(const Scenario& scenario);

}  // namespace tw
