#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tw/coi.hpp"
#include "tw/schemes.hpp"

namespace tw {

struct Transcript {
  std::vector<std::string> lines;
  void note(std::string s) { lines.push_back(std::move(s)); }
};

/// New coi triple whose right word replaces each infinite witness factor by
/// the image hull restriction of the matched triple, with fresh separator
/// letters between pieces whose boundary degrees clash. Finite words pair
/// with a single fresh letter of degree 0.
CoiTriple extend_representative(const Registry& reg, const CoiCollection& coll,
                                const std::string& new_name, const WordPtr& W,
                                const FineWitness& witness, Transcript* tr = nullptr);

/// Right word pushed above degree N: maximal degree <= N+2 runs collapse to a
/// fresh letter of degree N+1; the map keeps the picks inside the surviving
/// blocks.
CoiTriple raise_degree(const Registry& reg, const CoiTriple& t, std::int64_t N,
                       const std::string& new_name, Transcript* tr = nullptr);

// --- exponent avoidance -------------------------------------------------------

struct AvoidProfile {
  std::vector<std::int64_t> degrees;  // visible degree window, in order
  bool extends_down = false;
  bool extends_up = false;
  struct Slot {
    std::size_t at = 0;       // index into degrees
    std::int64_t key = 0;     // exponent-function key
    Letter base;              // infinite-order base letter
    int sign = 1;
  };
  std::vector<Slot> slots;
};

struct AvoidDefeat {
  std::size_t family_index = 0;
  bool inverted = false;
  std::size_t start = 0;          // embedding start in the family projection
  std::int64_t key = 0;           // slot the embedding dies at
  bool impossible = false;        // the host letter is not a base power at all
  std::int64_t required = 0;      // exponent the embedding would need
  std::int64_t chosen = 0;        // exponent picked instead
};

struct AvoidOutcome {
  ExponentFn q;
  std::vector<AvoidDefeat> defeats;
  std::size_t undefeated = 0;  // embeddings with no visible slot (risk count)
  std::int64_t depth = 0;
};

/// Picks positive exponents at the profile's slots so that every visible
/// degree-profile embedding into a family word (either sign) disagrees with
/// the resulting letters at some slot.
AvoidOutcome avoid_exponents(const Registry& reg, const std::vector<WordPtr>& family,
                             const AvoidProfile& profile, std::int64_t depth,
                             std::size_t budget = 4096);

/// Accumulator for defeating several profiles with one exponent choice:
/// collect requirements profile by profile, then choose exponents avoiding
/// every recorded requirement at once.
struct AvoidAccum {
  std::map<std::int64_t, std::set<std::int64_t>> forbidden;
  std::vector<AvoidDefeat> pending;  // chosen exponents filled by avoid_choose
  std::size_t undefeated = 0;
};
void avoid_collect(const Registry& reg, const std::vector<WordPtr>& family,
                   const AvoidProfile& profile, std::int64_t depth, std::size_t budget,
                   AvoidAccum* acc);
ExponentFn avoid_choose(AvoidAccum* acc);

/// The diagonal word h_0^{q(0)} h_1^{q(1)} ... with exponents chosen to leave
/// Fine(family), visible to the given depth.
struct DiagonalResult {
  WordPtr word;
  AvoidOutcome outcome;  // merged over the partition classes
};
DiagonalResult diagonal_word(const Registry& reg, const std::vector<WordPtr>& family,
                             std::int64_t depth, Transcript* tr = nullptr);

/// z(n): which partition class n belongs to (Z_m = {n : v2(n+1) = m}).
std::int64_t z_class(std::int64_t n);
std::int64_t z_min(std::int64_t m);  // = 2^m - 1

// --- omega- and Q-type extensions ---------------------------------------------

struct OmegaExtension {
  CoiTriple triple;
  std::vector<CoiTriple> block_triples;  // the raised per-term triples
  Transcript transcript;
};

/// Prop-style extension of an omega concatenation: every materialized term
/// gets a representative raised above its index, interleaved with separator
/// powers whose exponents come from the avoidance.
OmegaExtension extend_omega(const Registry& reg, const CoiCollection& coll,
                            const std::string& new_name, const WordPtr& W,
                            const std::vector<FineWitness>& term_witnesses,
                            std::int64_t depth, std::size_t budget = 4096);

struct QExtension {
  CoiTriple triple;
  std::vector<CoiTriple> block_triples;
  ExponentFn R;
  Transcript transcript;
};

/// Q-type extension: each degree-m block of the shuffle maps to the template
/// h_m^{R(m)} U'_m h_m^{R(m)} at the same sites with the same signs.
QExtension extend_qshuffle(const Registry& reg, const CoiCollection& coll,
                           const std::string& new_name, const WordPtr& W,
                           const std::vector<FineWitness>& block_witnesses,
                           std::int64_t depth, std::size_t budget = 4096);

/// Lemma-"notsofast" style check: no visible interval spanning two or more
/// sites of U decomposes over the family at the given depth.
bool check_no_spanning_fine(const Registry& reg, const WordPtr& U,
                            const std::vector<WordPtr>& family, std::int64_t depth);

/// Concatenation mirroring w_cat's flattening, reporting where each piece
/// landed so segment prefixes can be transported.
struct PiecePrefix {
  std::int64_t base = 0;
  std::int64_t span = 0;  // 0 dropped, 1 plain, >1 inlined cat
  bool single = false;    // the whole result collapsed to this piece
};
WordPtr cat_with_prefixes(std::vector<WordPtr> pieces, std::vector<PiecePrefix>* out);
std::vector<PathSeg> apply_piece_prefix(const PiecePrefix& pp,
                                        const std::vector<PathSeg>& inner);

}  // namespace tw
