#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tw/rational.hpp"

namespace tw {

/// One step of a position path. Comparison semantics are baked into the
/// kind, so two positions compare without consulting the order expression:
/// OmegaRevIdx counts from the top (larger index = smaller position) and
/// RevEnter flips the sense of everything after it.
struct PathSeg {
  enum class Kind : std::uint8_t { CatPart, OmegaIdx, OmegaRevIdx, FinOff, Rat, RevEnter };
  Kind kind = Kind::CatPart;
  std::int64_t idx = 0;
  Rational q;

  static PathSeg cat(std::int64_t i) { return {Kind::CatPart, i, {}}; }
  static PathSeg omega(std::int64_t i) { return {Kind::OmegaIdx, i, {}}; }
  static PathSeg omega_rev(std::int64_t i) { return {Kind::OmegaRevIdx, i, {}}; }
  static PathSeg fin(std::int64_t i) { return {Kind::FinOff, i, {}}; }
  static PathSeg rat(Rational r) { return {Kind::Rat, 0, r}; }
  static PathSeg rev() { return {Kind::RevEnter, 0, {}}; }

  bool operator==(const PathSeg& o) const {
    return kind == o.kind && idx == o.idx && q == o.q;
  }
};

enum class Cmp { Less, Equal, Greater };

struct Position {
  std::vector<PathSeg> path;

  bool operator==(const Position& o) const { return path == o.path; }
  std::string str() const;

  Position prefixed(const PathSeg& seg) const {
    Position p;
    p.path.reserve(path.size() + 1);
    p.path.push_back(seg);
    p.path.insert(p.path.end(), path.begin(), path.end());
    return p;
  }
  Position prefixed(const std::vector<PathSeg>& pre) const {
    Position p;
    p.path.reserve(path.size() + pre.size());
    p.path.insert(p.path.end(), pre.begin(), pre.end());
    p.path.insert(p.path.end(), path.begin(), path.end());
    return p;
  }
};

/// Total comparison of two positions in the same order.
Cmp pos_cmp(const Position& a, const Position& b);
bool pos_less(const Position& a, const Position& b);

/// Finitely-described countable total order. Rev is normalized away at
/// construction (pushed to leaves), Cat is flattened, so equal expressions
/// are syntactically equal.
class OrderExpr {
 public:
  enum class Kind { Fin, Omega, OmegaRev, QDense, Cat };

  static OrderExpr fin(std::int64_t k);
  static OrderExpr omega();
  static OrderExpr omega_rev();
  static OrderExpr qdense();
  static OrderExpr cat(std::vector<OrderExpr> parts);
  static OrderExpr rev(const OrderExpr& inner);

  Kind kind() const { return kind_; }
  std::int64_t fin_size() const { return fin_size_; }
  const std::vector<OrderExpr>& parts() const;
  bool is_empty() const { return kind_ == Kind::Fin && fin_size_ == 0; }

  bool operator==(const OrderExpr& o) const;
  bool operator!=(const OrderExpr& o) const { return !(*this == o); }
  std::string str() const;

  /// Throws std::invalid_argument when p does not address a point of this order.
  void validate(const Position& p) const;

 private:
  OrderExpr() = default;
  Kind kind_ = Kind::Fin;
  std::int64_t fin_size_ = 0;
  std::shared_ptr<const std::vector<OrderExpr>> parts_;
};

/// Interval cuts. Low side: MinusInf | AtOrAbove(p) | Above(p).
/// High side: PlusInf | AtOrBelow(p) | Below(p).
///
/// The anchor may be a *prefix* path addressing a whole region (a Cat part,
/// an omega term, a rational site) rather than a single point. A Closed low
/// cut at a region means "from the start of the region on"; an Open low cut
/// means "strictly above the whole region"; high cuts mirror this. Full leaf
/// paths recover the ordinary point semantics.
struct Cut {
  enum class Kind : std::uint8_t { Inf, Closed, Open };
  Kind kind = Kind::Inf;
  Position pos;

  static Cut inf() { return {}; }
  static Cut closed(Position p) { return {Kind::Closed, std::move(p)}; }
  static Cut open(Position p) { return {Kind::Open, std::move(p)}; }

  bool operator==(const Cut& o) const { return kind == o.kind && pos == o.pos; }
};

/// Where a point lies relative to a (possibly prefix) cut anchor.
enum class CutSide { Below, Inside, Above };
CutSide cut_side(const Position& p, const Position& anchor);

/// Region-aware comparison of two (possibly prefix) anchors.
enum class RegionCmp { Less, Equal, Greater, AInsideB, BInsideA, Mismatch };
RegionCmp region_cmp(const Position& a, const Position& b);

struct Interval {
  Cut low;   // Inf = -inf
  Cut high;  // Inf = +inf

  static Interval full() { return {}; }
  static Interval empty_at(Position p) {
    // (p, p): convex and provably empty
    return {Cut::open(p), Cut::open(p)};
  }
  static Interval closed(Position lo, Position hi) {
    return {Cut::closed(std::move(lo)), Cut::closed(std::move(hi))};
  }
  static Interval point(Position p) { return closed(p, p); }

  bool contains(const Position& p) const;
  /// Syntactic emptiness: detects low/high cuts that exclude each other.
  /// (Sound: true means empty. Structural emptiness against a carrier order
  /// is interval_is_finite(...).count == 0.)
  bool definitely_empty() const;

  bool operator==(const Interval& o) const { return low == o.low && high == o.high; }
  std::string str() const;
};

struct Finiteness {
  bool finite = false;
  std::int64_t count = 0;  // valid when finite
};

/// Decides finiteness of I inside the given order, with cardinality when finite.
Finiteness interval_is_finite(const OrderExpr& order, const Interval& I);

/// Structured decidable subsets of a carrier order.
class CloseSubsetSpec {
 public:
  enum class Kind { All, CofiniteExcept, ResidueClass, PerPart, DenseRule };
  enum class DenseKind { AllQ, DyadicDenAtLeast, DenAtMost };

  static CloseSubsetSpec all();
  static CloseSubsetSpec cofinite_except(std::vector<Position> excluded);
  static CloseSubsetSpec residue(std::int64_t modulus, std::int64_t residue);
  static CloseSubsetSpec per_part(std::vector<CloseSubsetSpec> parts);
  static CloseSubsetSpec dense(DenseKind dk, std::int64_t param = 0);

  Kind kind() const { return kind_; }
  DenseKind dense_kind() const { return dense_kind_; }
  std::int64_t modulus() const { return modulus_; }
  std::int64_t residue_v() const { return residue_; }
  std::int64_t dense_param() const { return dense_param_; }
  const std::vector<Position>& excluded() const { return excluded_; }
  const std::vector<CloseSubsetSpec>& parts() const;

  /// Pointwise membership of position p (which must be valid in `order`).
  bool contains(const OrderExpr& order, const Position& p) const;

 private:
  CloseSubsetSpec() = default;
  Kind kind_ = Kind::All;
  DenseKind dense_kind_ = DenseKind::AllQ;
  std::int64_t modulus_ = 0, residue_ = 0, dense_param_ = 0;
  std::vector<Position> excluded_;
  std::shared_ptr<const std::vector<CloseSubsetSpec>> parts_;
};

/// True iff every infinite interval of `order` meets the subset.
bool is_close(const OrderExpr& order, const CloseSubsetSpec& subset);

/// Smallest interval of `order` including I intersected with the subset.
/// Requires is_close(order, subset). Returns a provably-empty interval when
/// the intersection is empty.
Interval varpropto_subset(const OrderExpr& order, const CloseSubsetSpec& subset,
                          const Interval& I);

/// First (smallest) and last (largest) subset member inside I, when such an
/// extreme member exists. Dense subsets inside open windows have neither.
std::optional<Position> first_member(const OrderExpr& order, const CloseSubsetSpec& subset,
                                     const Interval& I);
std::optional<Position> last_member(const OrderExpr& order, const CloseSubsetSpec& subset,
                                    const Interval& I);

/// Enumerates the first `limit` subset members inside I in ascending order
/// (fewer if the intersection is smaller). Throws for dense rules on QDense,
/// which have no first member to start from.
std::vector<Position> enumerate_members(const OrderExpr& order, const CloseSubsetSpec& subset,
                                        const Interval& I, std::size_t limit);

}  // namespace tw
