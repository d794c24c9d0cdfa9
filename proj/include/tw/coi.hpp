#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tw/arch.hpp"
#include "tw/match.hpp"
#include "tw/words.hpp"

namespace tw {

/// One segment of a close order isomorphism between two word domains.
/// Positions on each side are prefix + inner path; the prefix addresses the
/// region of the word the segment lives in (so segments compose through
/// subword transport).
struct CoiSeg {
  enum class Kind { PointPairs, TermPaired, SitePaired };
  Kind kind = Kind::PointPairs;
  int sign = 1;  // orientation of the pairing
  std::vector<PathSeg> prefix_l, prefix_r;

  // PointPairs: explicit matched points (paths relative to the prefixes),
  // ascending on the left; descending on the right when sign = -1.
  std::vector<std::pair<Position, Position>> pairs;

  // TermPaired: the hosts under the prefixes are OmegaCat words; cycle j of
  // the left (anchored at the Power slot slot_l) pairs with cycle j + shift
  // of the right. Sign must be +1.
  std::int64_t from_cycle = 0;
  std::optional<std::int64_t> to_cycle;  // inclusive; absent = unbounded
  std::int64_t shift = 0;
  std::size_t slot_l = 0, slot_r = 0;

  // SitePaired: the hosts are QShuffle words; the site-s block anchor on the
  // left pairs with the site tf_a*s+tf_b anchor on the right, for sites whose
  // degree is >= from_m and which lie in the window. Sign = sign(tf_a).
  std::int64_t from_m = 0;
  RatWindowCut site_lo, site_hi;
  Rational tf_a = Rational(1), tf_b = Rational(0);
};

struct CoiMap {
  std::vector<CoiSeg> segs;  // ordered along the left word
};

struct CoiTriple {
  std::string name;
  std::string left_name;
  WordPtr left;
  CoiMap map;
  std::string right_name;
  WordPtr right;
};

class CoiCollection {
 public:
  const std::vector<CoiTriple>& triples() const { return triples_; }
  const CoiTriple& at(const std::string& name) const;
  const CoiTriple& at(std::size_t i) const { return triples_.at(i); }
  std::size_t size() const { return triples_.size(); }
  void add(CoiTriple t);

 private:
  std::vector<CoiTriple> triples_;
};

enum class CoiDir { Forward, Backward };

/// Hull of the mapped pick points of I: the smallest interval of the target
/// word including iota(I cap dom).
Interval varpropto_coi(const Registry& reg, const CoiTriple& t, const Interval& I,
                       CoiDir dir);

/// Swapped triple: left and right exchanged, every segment inverted.
CoiTriple coi_invert(const CoiTriple& t);

/// Structural sanity: segments well-formed, every infinite region of both
/// words covered closely. Returns human-readable problems (empty = valid).
std::vector<std::string> coi_validate(const Registry& reg, const CoiTriple& t);

/// Restriction of a segment to a sub-interval of its left or right word.
/// Returns absent when nothing survives.
std::optional<CoiSeg> clip_seg(const Registry& reg, const CoiTriple& t, const CoiSeg& seg,
                               bool right_side, const Interval& I);

// --- coherence audit ---------------------------------------------------------

struct Obligation {
  bool right_side = false;          // matches between right words
  std::string x0, x1;               // triple names
  Interval I0, I1;                  // matched intervals
  int delta = 1;                    // orientation of the match
  std::int64_t depth = 0;
};

std::vector<Obligation> enumerate_obligations(const Registry& reg, const CoiCollection& coll,
                                              std::int64_t depth, std::size_t budget = 4096);

ArchEq discharge(const Registry& reg, const CoiCollection& coll, const Obligation& ob);

struct AuditReport {
  std::vector<Obligation> obligations;
  std::vector<ArchEq> verdicts;
  std::size_t equal = 0;
  std::size_t unknown = 0;
};

AuditReport audit(const Registry& reg, const CoiCollection& coll, std::int64_t depth,
                  std::size_t budget = 4096);

/// Image of a word under the partial quotient map induced by the collection:
/// each infinite witness factor contributes the signed restriction of the
/// matched triple's right word over the image hull; finite factors vanish.
ArchElement phi0_eval(const Registry& reg, const CoiCollection& coll, const WordPtr& W,
                      const FineWitness& witness);

/// The word expression at a region prefix (for inspection and anchors).
WordPtr coi_resolve_region(const Registry& reg, const WordPtr& w,
                           const std::vector<PathSeg>& prefix);

/// Absolute anchor position of a term-paired cycle inside `word`.
Position term_anchor_abs(const Registry& reg, const WordPtr& word,
                         const std::vector<PathSeg>& prefix, std::size_t slot,
                         std::int64_t cycle);

}  // namespace tw
