#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tw/groups.hpp"
#include "tw/orders.hpp"

namespace tw {

struct PosLetter {
  Position pos;
  Letter letter;
};

/// A finite word: letters at strictly increasing positions, no identities.
class FiniteWord {
 public:
  FiniteWord() = default;
  explicit FiniteWord(std::vector<PosLetter> letters) : letters_(std::move(letters)) {}

  const std::vector<PosLetter>& letters() const { return letters_; }
  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  const PosLetter& at(std::size_t i) const { return letters_.at(i); }

  /// Equality as elements of the ambient free product: letter sequences only,
  /// positions ignored.
  bool same_letters(const FiniteWord& o) const;
  std::string str() const;

 private:
  std::vector<PosLetter> letters_;
};

struct AffineMap {
  std::int64_t a = 0;
  std::int64_t b = 0;
  std::int64_t operator()(std::int64_t m) const { return a * m + b; }
};

/// Positive integer exponent schedule: finite overrides over an affine default.
struct ExponentFn {
  std::map<std::int64_t, std::int64_t> overrides;
  AffineMap dflt{0, 1};

  std::int64_t at(std::int64_t m) const {
    auto it = overrides.find(m);
    std::int64_t v = it != overrides.end() ? it->second : dflt(m);
    if (v < 1) throw std::logic_error("exponent must be >= 1");
    return v;
  }
  bool operator==(const ExponentFn& o) const {
    return overrides == o.overrides && dflt.a == o.dflt.a && dflt.b == o.dflt.b;
  }
};

/// One emission per tail cycle. Power slots emit a single letter
/// base(index(j))^(sign*exp(j)); Ruler slots emit the dyadic ruler word with
/// group offset index(j). Index maps must be strictly increasing (a >= 1) so
/// escape bounds are decidable.
struct TailSlot {
  enum class Kind { Power, Ruler };
  enum class Base { InfOrder, Involution };
  Kind kind = Kind::Power;
  Base base = Base::InfOrder;
  AffineMap index{1, 0};
  ExponentFn exp;
  int sign = 1;
};

class WordExpr;
using WordPtr = std::shared_ptr<const WordExpr>;

/// Omega-indexed concatenation: a finite prefix of arbitrary words followed
/// by cycles of tail slots (cycle counter starts at `start`).
struct OmegaRule {
  std::vector<WordPtr> prefix;
  std::vector<TailSlot> slots;
  std::int64_t start = 0;
};

struct QFiber {
  Rational site;
  int sign = 1;
};

/// Rational window edge for clipping the site set of a QShuffle.
struct RatWindowCut {
  bool bounded = false;
  Rational q;
  bool include_site = false;  // whether the boundary site itself is kept
};

/// Site-word tail rules: how to emit the per-degree template for m past the
/// explicit table. Power: single letter h_m^{e(m)}. InvolutionLetter: the
/// involution g_m. SepBlock: h_m^{R(m)} h_{m+1} h_m^{R(m)}.
struct SiteTail {
  enum class Kind { None, Power, InvolutionLetter, SepBlock };
  Kind kind = Kind::None;
  ExponentFn exp;
};

/// Fiber tail rules: which sites carry degree-m blocks for m past the table.
/// EnumSingleton: one site nth_rational(m - offset). DyadicRuler: all
/// a/2^(m-offset+1) with a odd in (0,1).
struct FiberTail {
  enum class Kind { None, EnumSingleton, DyadicRuler };
  Kind kind = Kind::None;
  std::int64_t offset = 0;  // group offset of the site schedule
};

/// Q-indexed shuffle: for each degree m, a finite set of rational sites each
/// carrying the degree-m site word (or its inverse). site_words(m) must have
/// d >= m so that p_N only sees degrees <= N.
struct QRule {
  std::map<std::int64_t, WordPtr> site_words;
  std::map<std::int64_t, std::vector<QFiber>> fibers;
  std::int64_t tail_start = 0;
  SiteTail site_tail;
  FiberTail fiber_tail;
  RatWindowCut win_lo, win_hi;
};

/// Infinite words as expression trees with computable projections.
class WordExpr {
 public:
  enum class Kind { Empty, Lit, Cat, Inv, OmegaCat, QShuffle };

  Kind kind() const { return kind_; }
  const Letter& lit() const { return lit_; }
  const std::vector<WordPtr>& parts() const { return parts_; }
  const WordPtr& inner() const { return inner_; }
  const OmegaRule& omega() const { return omega_; }
  const QRule& qrule() const { return q_; }

  std::string str() const;

 private:
  friend WordPtr w_empty();
  friend WordPtr w_lit(const Registry&, Letter);
  friend WordPtr w_cat(std::vector<WordPtr>);
  friend WordPtr w_inv(const Registry&, WordPtr);
  friend WordPtr w_omega(const Registry&, OmegaRule);
  friend WordPtr w_qshuffle(const Registry&, QRule);

  WordExpr() = default;
  Kind kind_ = Kind::Empty;
  Letter lit_;
  std::vector<WordPtr> parts_;
  WordPtr inner_;
  OmegaRule omega_;
  QRule q_;
};

WordPtr w_empty();
WordPtr w_lit(const Registry& reg, Letter l);
/// Flattens nested Cats and drops empty parts.
WordPtr w_cat(std::vector<WordPtr> parts);
/// Letterwise inverse over the reversed order. Resolved directly for
/// Empty/Lit and double wrappers; everything else keeps an Inv wrapper so
/// position layouts stay mechanical.
WordPtr w_inv(const Registry& reg, WordPtr w);
WordPtr w_omega(const Registry& reg, OmegaRule rule);
WordPtr w_qshuffle(const Registry& reg, QRule rule);
inline WordPtr w_concat(std::vector<WordPtr> parts) { return w_cat(std::move(parts)); }

/// Single letter h^k as a Lit (one group element).
WordPtr w_power(const Registry& reg, const Letter& h, std::int64_t k);

/// The dyadic ruler word with group offset k: the involution g_{k+b-1} sits
/// at every a/2^b with a odd. Requires involutions in the registry.
WordPtr ruler_word(const Registry& reg, std::int64_t offset);

/// Window-filtered fibers of degree m (table or tail), sorted by site.
std::vector<QFiber> q_live_fibers(const QRule& q, std::int64_t m);
/// The degree-m site word (table entry or generated tail template).
WordPtr q_site_word(const Registry& reg, const QRule& q, std::int64_t m);
/// Degree and sign of the block at a site, when the site carries one.
std::optional<std::pair<std::int64_t, int>> q_site_lookup(const QRule& q, const Rational& s);

// --- core operations -------------------------------------------------------

/// All letters of degree <= N, in order, tagged with their positions.
FiniteWord project(const Registry& reg, const WordExpr& w, std::int64_t N);
inline FiniteWord project(const Registry& reg, const WordPtr& w, std::int64_t N) {
  return project(reg, *w, N);
}

/// Free-product normal form: merge adjacent same-group letters, drop
/// identities, cascade. Keeps representative positions.
FiniteWord free_reduce(const Registry& reg, const FiniteWord& w);

/// Normal-form product of two freely reduced finite words: maximal
/// terminal/initial cancellation plus at most one boundary merge. Result
/// positions are synthetic (ascending omega indices).
FiniteWord reduced_mul(const Registry& reg, const FiniteWord& a, const FiniteWord& b);

/// p_N(W) and p_N(V) equal in the free product *_{n<=N} G_n.
bool equiv_depth(const Registry& reg, const WordExpr& W, const WordExpr& V, std::int64_t N);
inline bool equiv_depth(const Registry& reg, const WordPtr& W, const WordPtr& V,
                        std::int64_t N) {
  return equiv_depth(reg, *W, *V, N);
}

/// Least degree of any letter; absent for the empty word.
std::optional<std::int64_t> d_word(const Registry& reg, const WordExpr& w);
inline std::optional<std::int64_t> d_word(const Registry& reg, const WordPtr& w) {
  return d_word(reg, *w);
}

/// Structurally finite (no live rule tails).
bool word_is_finite(const WordExpr& w);
/// Degree of the first/last letter when the word has a first/last letter.
std::optional<Letter> first_letter(const Registry& reg, const WordExpr& w);
std::optional<Letter> last_letter(const Registry& reg, const WordExpr& w);
/// Position of the first/last letter, when the word has one.
std::optional<Position> first_position(const Registry& reg, const WordPtr& w);
std::optional<Position> last_position(const Registry& reg, const WordPtr& w);

/// The restriction W|I as a WordExpr. Cuts must land at representable spots
/// (inside materialized parts, at term/site boundaries, inside site blocks);
/// anything else throws std::invalid_argument.
WordPtr subword(const Registry& reg, const WordPtr& w, const Interval& I);

/// Maps a host position inside I to its position in subword(reg, w, I).
/// Also accepts region-prefix paths (term/site anchors) that lie wholly
/// inside I.
Position rebase_into_subword(const Registry& reg, const WordPtr& w, const Interval& I,
                             const Position& p);

/// subword + its position rebaser computed in one pass.
struct SubwordResult {
  WordPtr word;
  std::function<Position(const Position&)> map;
};
SubwordResult subword_with_map(const Registry& reg, const WordPtr& w, const Interval& I);

}  // namespace tw
