#include "tw/orders.hpp"

#include <algorithm>
#include <stdexcept>

namespace tw {

std::string Position::str() const {
  if (path.empty()) return ".";
  std::string s;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) s += "/";
    switch (path[i].kind) {
      case PathSeg::Kind::Rat:
        s += path[i].q.str();
        break;
      case PathSeg::Kind::RevEnter:
        s += "~";
        break;
      default:
        s += std::to_string(path[i].idx);
        break;
    }
  }
  return s;
}

Cmp pos_cmp(const Position& a, const Position& b) {
  bool flip = false;
  std::size_t i = 0;
  auto flipped = [&](Cmp c) {
    if (!flip || c == Cmp::Equal) return c;
    return c == Cmp::Less ? Cmp::Greater : Cmp::Less;
  };
  for (;; ++i) {
    if (i == a.path.size() && i == b.path.size()) return Cmp::Equal;
    if (i == a.path.size() || i == b.path.size())
      throw std::invalid_argument("pos_cmp: positions of different shape");
    const PathSeg& x = a.path[i];
    const PathSeg& y = b.path[i];
    if (x.kind != y.kind)
      throw std::invalid_argument("pos_cmp: positions of different shape");
    switch (x.kind) {
      case PathSeg::Kind::RevEnter:
        flip = !flip;
        continue;
      case PathSeg::Kind::Rat:
        if (x.q != y.q) return flipped(x.q < y.q ? Cmp::Less : Cmp::Greater);
        continue;
      case PathSeg::Kind::OmegaRevIdx:
        if (x.idx != y.idx) return flipped(x.idx > y.idx ? Cmp::Less : Cmp::Greater);
        continue;
      default:
        if (x.idx != y.idx) return flipped(x.idx < y.idx ? Cmp::Less : Cmp::Greater);
        continue;
    }
  }
}

bool pos_less(const Position& a, const Position& b) {
  return pos_cmp(a, b) == Cmp::Less;
}

CutSide cut_side(const Position& p, const Position& anchor) {
  bool flip = false;
  std::size_t i = 0;
  auto flipped = [&](CutSide s) {
    if (!flip || s == CutSide::Inside) return s;
    return s == CutSide::Below ? CutSide::Above : CutSide::Below;
  };
  for (;; ++i) {
    if (i == anchor.path.size()) return CutSide::Inside;
    if (i == p.path.size())
      throw std::invalid_argument("cut_side: anchor deeper than point");
    const PathSeg& x = p.path[i];
    const PathSeg& y = anchor.path[i];
    if (x.kind != y.kind)
      throw std::invalid_argument("cut_side: shape mismatch");
    switch (x.kind) {
      case PathSeg::Kind::RevEnter:
        flip = !flip;
        continue;
      case PathSeg::Kind::Rat:
        if (x.q != y.q) return flipped(x.q < y.q ? CutSide::Below : CutSide::Above);
        continue;
      case PathSeg::Kind::OmegaRevIdx:
        if (x.idx != y.idx)
          return flipped(x.idx > y.idx ? CutSide::Below : CutSide::Above);
        continue;
      default:
        if (x.idx != y.idx)
          return flipped(x.idx < y.idx ? CutSide::Below : CutSide::Above);
        continue;
    }
  }
}


RegionCmp region_cmp(const Position& a, const Position& b) {
  std::size_t n = std::min(a.path.size(), b.path.size());
  bool flip = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (a.path[i].kind != b.path[i].kind) return RegionCmp::Mismatch;
    if (a.path[i].kind == PathSeg::Kind::RevEnter) {
      flip = !flip;
      continue;
    }
    bool eq = a.path[i].kind == PathSeg::Kind::Rat ? a.path[i].q == b.path[i].q
                                                   : a.path[i].idx == b.path[i].idx;
    if (eq) continue;
    bool less;
    if (a.path[i].kind == PathSeg::Kind::Rat)
      less = a.path[i].q < b.path[i].q;
    else if (a.path[i].kind == PathSeg::Kind::OmegaRevIdx)
      less = a.path[i].idx > b.path[i].idx;
    else
      less = a.path[i].idx < b.path[i].idx;
    if (flip) less = !less;
    return less ? RegionCmp::Less : RegionCmp::Greater;
  }
  if (a.path.size() == b.path.size()) return RegionCmp::Equal;
  return a.path.size() > b.path.size() ? RegionCmp::AInsideB : RegionCmp::BInsideA;
}

OrderExpr OrderExpr::fin(std::int64_t k) {
  if (k < 0) throw std::invalid_argument("Fin size must be >= 0");
  OrderExpr e;
  e.kind_ = Kind::Fin;
  e.fin_size_ = k;
  return e;
}

OrderExpr OrderExpr::omega() {
  OrderExpr e;
  e.kind_ = Kind::Omega;
  return e;
}

OrderExpr OrderExpr::omega_rev() {
  OrderExpr e;
  e.kind_ = Kind::OmegaRev;
  return e;
}

OrderExpr OrderExpr::qdense() {
  OrderExpr e;
  e.kind_ = Kind::QDense;
  return e;
}

OrderExpr OrderExpr::cat(std::vector<OrderExpr> parts) {
  std::vector<OrderExpr> flat;
  for (auto& p : parts) {
    if (p.is_empty()) continue;
    if (p.kind() == Kind::Cat) {
      for (const auto& q : p.parts()) flat.push_back(q);
    } else {
      flat.push_back(p);
    }
  }
  if (flat.empty()) return fin(0);
  if (flat.size() == 1) return flat[0];
  OrderExpr e;
  e.kind_ = Kind::Cat;
  e.parts_ = std::make_shared<const std::vector<OrderExpr>>(std::move(flat));
  return e;
}

OrderExpr OrderExpr::rev(const OrderExpr& inner) {
  switch (inner.kind()) {
    case Kind::Fin:
      return inner;
    case Kind::Omega:
      return omega_rev();
    case Kind::OmegaRev:
      return omega();
    case Kind::QDense:
      return inner;  // order-isomorphic to its reverse
    case Kind::Cat: {
      std::vector<OrderExpr> rparts;
      const auto& ps = inner.parts();
      for (auto it = ps.rbegin(); it != ps.rend(); ++it) rparts.push_back(rev(*it));
      return cat(std::move(rparts));
    }
  }
  return inner;
}

const std::vector<OrderExpr>& OrderExpr::parts() const {
  static const std::vector<OrderExpr> empty;
  return parts_ ? *parts_ : empty;
}

bool OrderExpr::operator==(const OrderExpr& o) const {
  if (kind_ != o.kind_) return false;
  if (kind_ == Kind::Fin) return fin_size_ == o.fin_size_;
  if (kind_ == Kind::Cat) return parts() == o.parts();
  return true;
}

std::string OrderExpr::str() const {
  switch (kind_) {
    case Kind::Fin:
      return "fin(" + std::to_string(fin_size_) + ")";
    case Kind::Omega:
      return "omega";
    case Kind::OmegaRev:
      return "omega-rev";
    case Kind::QDense:
      return "qdense";
    case Kind::Cat: {
      std::string s = "(";
      for (std::size_t i = 0; i < parts().size(); ++i) {
        if (i) s += " ";
        s += parts()[i].str();
      }
      return s + ")";
    }
  }
  return "?";
}

namespace {

void validate_path(const OrderExpr& order, const Position& p, std::size_t at) {
  auto bad = [&]() { throw std::invalid_argument("position invalid for order: " + p.str()); };
  switch (order.kind()) {
    case OrderExpr::Kind::Fin:
      if (at + 1 != p.path.size()) bad();
      if (p.path[at].kind != PathSeg::Kind::FinOff) bad();
      if (p.path[at].idx < 0 || p.path[at].idx >= order.fin_size()) bad();
      return;
    case OrderExpr::Kind::Omega:
      if (at + 1 != p.path.size()) bad();
      if (p.path[at].kind != PathSeg::Kind::OmegaIdx || p.path[at].idx < 0) bad();
      return;
    case OrderExpr::Kind::OmegaRev:
      if (at + 1 != p.path.size()) bad();
      if (p.path[at].kind != PathSeg::Kind::OmegaRevIdx || p.path[at].idx < 0) bad();
      return;
    case OrderExpr::Kind::QDense:
      if (at + 1 != p.path.size()) bad();
      if (p.path[at].kind != PathSeg::Kind::Rat) bad();
      return;
    case OrderExpr::Kind::Cat: {
      if (at >= p.path.size()) bad();
      if (p.path[at].kind != PathSeg::Kind::CatPart) bad();
      std::int64_t i = p.path[at].idx;
      if (i < 0 || static_cast<std::size_t>(i) >= order.parts().size()) bad();
      validate_path(order.parts()[i], p, at + 1);
      return;
    }
  }
}

}  // namespace

void OrderExpr::validate(const Position& p) const { validate_path(*this, p, 0); }

bool Interval::contains(const Position& p) const {
  if (definitely_empty()) return false;
  if (low.kind != Cut::Kind::Inf) {
    CutSide s = cut_side(p, low.pos);
    if (s == CutSide::Below) return false;
    if (s == CutSide::Inside && low.kind == Cut::Kind::Open) return false;
  }
  if (high.kind != Cut::Kind::Inf) {
    CutSide s = cut_side(p, high.pos);
    if (s == CutSide::Above) return false;
    if (s == CutSide::Inside && high.kind == Cut::Kind::Open) return false;
  }
  return true;
}

bool Interval::definitely_empty() const {
  if (low.kind == Cut::Kind::Inf || high.kind == Cut::Kind::Inf) return false;
  // Prefix-aware comparison of the two anchors.
  const auto& a = low.pos.path;
  const auto& b = high.pos.path;
  std::size_t n = std::min(a.size(), b.size());
  bool flip = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i].kind != b[i].kind)
      throw std::invalid_argument("interval cuts of different shape");
    if (a[i].kind == PathSeg::Kind::RevEnter) {
      flip = !flip;
      continue;
    }
    bool eq = a[i].kind == PathSeg::Kind::Rat ? a[i].q == b[i].q : a[i].idx == b[i].idx;
    if (!eq) {
      bool less;
      if (a[i].kind == PathSeg::Kind::Rat)
        less = a[i].q < b[i].q;
      else if (a[i].kind == PathSeg::Kind::OmegaRevIdx)
        less = a[i].idx > b[i].idx;
      else
        less = a[i].idx < b[i].idx;
      if (flip) less = !less;
      return !less;  // low anchor strictly above high anchor: empty
    }
  }
  if (a.size() == b.size())
    return low.kind == Cut::Kind::Open || high.kind == Cut::Kind::Open;
  if (a.size() < b.size())
    return low.kind == Cut::Kind::Open;  // high anchor inside the excluded low region
  return high.kind == Cut::Kind::Open;   // low anchor inside the excluded high region
}

std::string Interval::str() const {
  std::string s;
  s += low.kind == Cut::Kind::Inf ? "(-inf"
       : (low.kind == Cut::Kind::Closed ? "[" + low.pos.str() : "(" + low.pos.str());
  s += " .. ";
  s += high.kind == Cut::Kind::Inf ? "+inf)"
       : (high.kind == Cut::Kind::Closed ? high.pos.str() + "]" : high.pos.str() + ")");
  return s;
}

// ---------------------------------------------------------------------------
// interval_is_finite
// ---------------------------------------------------------------------------

namespace {

constexpr std::int64_t kInfinite = -1;

Cut strip_cat(const Cut& c) {
  if (c.kind == Cut::Kind::Inf) return c;
  Position p;
  p.path.assign(c.pos.path.begin() + 1, c.pos.path.end());
  Cut out;
  out.kind = c.kind;
  out.pos = std::move(p);
  return out;
}

// Normalizes a (possibly region-anchored) local cut. A Closed cut whose
// anchor is this whole region behaves like Inf; an Open one excludes the
// whole region, reported via the return value.
bool local_cut(Cut& c) {
  if (c.kind == Cut::Kind::Inf) return true;
  if (!c.pos.path.empty()) return true;
  if (c.kind == Cut::Kind::Closed) {
    c = Cut::inf();
    return true;
  }
  return false;
}

// Count of points in the sub-interval of `order` delimited by local cuts.
// Returns kInfinite for infinitely many.
std::int64_t count_range(const OrderExpr& order, const Cut& low, const Cut& high) {
  switch (order.kind()) {
    case OrderExpr::Kind::Fin: {
      std::int64_t lo = 0, hi = order.fin_size() - 1;
      if (low.kind != Cut::Kind::Inf) {
        std::int64_t i = low.pos.path.at(0).idx;
        lo = low.kind == Cut::Kind::Closed ? i : i + 1;
      }
      if (high.kind != Cut::Kind::Inf) {
        std::int64_t i = high.pos.path.at(0).idx;
        hi = high.kind == Cut::Kind::Closed ? i : i - 1;
      }
      lo = std::max<std::int64_t>(lo, 0);
      hi = std::min<std::int64_t>(hi, order.fin_size() - 1);
      return std::max<std::int64_t>(0, hi - lo + 1);
    }
    case OrderExpr::Kind::Omega: {
      std::int64_t lo = 0;
      if (low.kind != Cut::Kind::Inf) {
        std::int64_t i = low.pos.path.at(0).idx;
        lo = low.kind == Cut::Kind::Closed ? i : i + 1;
      }
      if (high.kind == Cut::Kind::Inf) return kInfinite;
      std::int64_t i = high.pos.path.at(0).idx;
      std::int64_t hi = high.kind == Cut::Kind::Closed ? i : i - 1;
      return std::max<std::int64_t>(0, hi - std::max<std::int64_t>(lo, 0) + 1);
    }
    case OrderExpr::Kind::OmegaRev: {
      // Point with index i (from the top) is order-smaller when i is larger.
      std::int64_t max_idx;  // index bound induced by the order-low cut
      if (low.kind == Cut::Kind::Inf) return kInfinite;
      {
        std::int64_t i = low.pos.path.at(0).idx;
        max_idx = low.kind == Cut::Kind::Closed ? i : i - 1;
      }
      std::int64_t min_idx = 0;
      if (high.kind != Cut::Kind::Inf) {
        std::int64_t i = high.pos.path.at(0).idx;
        min_idx = high.kind == Cut::Kind::Closed ? i : i + 1;
      }
      return std::max<std::int64_t>(0, max_idx - std::max<std::int64_t>(min_idx, 0) + 1);
    }
    case OrderExpr::Kind::QDense: {
      if (low.kind == Cut::Kind::Inf || high.kind == Cut::Kind::Inf) return kInfinite;
      const Rational& a = low.pos.path.at(0).q;
      const Rational& b = high.pos.path.at(0).q;
      if (a > b) return 0;
      if (a == b)
        return (low.kind == Cut::Kind::Closed && high.kind == Cut::Kind::Closed) ? 1 : 0;
      return kInfinite;
    }
    case OrderExpr::Kind::Cat: {
      const auto& parts = order.parts();
      std::int64_t lo_part = 0, hi_part = static_cast<std::int64_t>(parts.size()) - 1;
      if (low.kind != Cut::Kind::Inf) lo_part = low.pos.path.at(0).idx;
      if (high.kind != Cut::Kind::Inf) hi_part = high.pos.path.at(0).idx;
      if (lo_part > hi_part) return 0;
      std::int64_t total = 0;
      for (std::int64_t p = lo_part; p <= hi_part; ++p) {
        Cut lo_local = Cut::inf(), hi_local = Cut::inf();
        if (p == lo_part && low.kind != Cut::Kind::Inf) lo_local = strip_cat(low);
        if (p == hi_part && high.kind != Cut::Kind::Inf) hi_local = strip_cat(high);
        if (!local_cut(lo_local) || !local_cut(hi_local)) continue;
        std::int64_t c = count_range(parts[p], lo_local, hi_local);
        if (c == kInfinite) return kInfinite;
        total += c;
      }
      return total;
    }
  }
  return 0;
}

}  // namespace

Finiteness interval_is_finite(const OrderExpr& order, const Interval& I) {
  if (I.definitely_empty()) return {true, 0};
  std::int64_t c = count_range(order, I.low, I.high);
  if (c == kInfinite) return {false, 0};
  return {true, c};
}

// ---------------------------------------------------------------------------
// CloseSubsetSpec
// ---------------------------------------------------------------------------

CloseSubsetSpec CloseSubsetSpec::all() { return CloseSubsetSpec(); }

CloseSubsetSpec CloseSubsetSpec::cofinite_except(std::vector<Position> excluded) {
  CloseSubsetSpec s;
  s.kind_ = Kind::CofiniteExcept;
  s.excluded_ = std::move(excluded);
  return s;
}

CloseSubsetSpec CloseSubsetSpec::residue(std::int64_t modulus, std::int64_t residue) {
  if (modulus < 1 || residue < 0 || residue >= modulus)
    throw std::invalid_argument("bad residue class");
  CloseSubsetSpec s;
  s.kind_ = Kind::ResidueClass;
  s.modulus_ = modulus;
  s.residue_ = residue;
  return s;
}

CloseSubsetSpec CloseSubsetSpec::per_part(std::vector<CloseSubsetSpec> parts) {
  CloseSubsetSpec s;
  s.kind_ = Kind::PerPart;
  s.parts_ = std::make_shared<const std::vector<CloseSubsetSpec>>(std::move(parts));
  return s;
}

CloseSubsetSpec CloseSubsetSpec::dense(DenseKind dk, std::int64_t param) {
  CloseSubsetSpec s;
  s.kind_ = Kind::DenseRule;
  s.dense_kind_ = dk;
  s.dense_param_ = param;
  return s;
}

const std::vector<CloseSubsetSpec>& CloseSubsetSpec::parts() const {
  static const std::vector<CloseSubsetSpec> empty;
  return parts_ ? *parts_ : empty;
}

namespace {

bool is_pow2_at_least(std::int64_t den, std::int64_t b) {
  // den a power of two with exponent >= b
  std::int64_t e = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++e;
  }
  return den == 1 && e >= b;
}

}  // namespace

bool CloseSubsetSpec::contains(const OrderExpr& order, const Position& p) const {
  switch (kind_) {
    case Kind::All:
      return true;
    case Kind::CofiniteExcept:
      return std::find(excluded_.begin(), excluded_.end(), p) == excluded_.end();
    case Kind::ResidueClass: {
      if (order.kind() != OrderExpr::Kind::Omega &&
          order.kind() != OrderExpr::Kind::OmegaRev)
        throw std::invalid_argument("residue class needs omega/omega-rev carrier");
      return p.path.at(0).idx % modulus_ == residue_;
    }
    case Kind::PerPart: {
      if (order.kind() != OrderExpr::Kind::Cat)
        throw std::invalid_argument("per-part rule needs cat carrier");
      std::int64_t i = p.path.at(0).idx;
      Position rest;
      rest.path.assign(p.path.begin() + 1, p.path.end());
      return parts().at(i).contains(order.parts().at(i), rest);
    }
    case Kind::DenseRule: {
      if (order.kind() != OrderExpr::Kind::QDense)
        throw std::invalid_argument("dense rule needs qdense carrier");
      const Rational& q = p.path.at(0).q;
      switch (dense_kind_) {
        case DenseKind::AllQ:
          return true;
        case DenseKind::DyadicDenAtLeast:
          return is_pow2_at_least(q.den(), dense_param_);
        case DenseKind::DenAtMost:
          return q.den() <= dense_param_;
      }
      return false;
    }
  }
  return false;
}

namespace {

bool order_is_infinite(const OrderExpr& order) {
  switch (order.kind()) {
    case OrderExpr::Kind::Fin:
      return false;
    case OrderExpr::Kind::Omega:
    case OrderExpr::Kind::OmegaRev:
    case OrderExpr::Kind::QDense:
      return true;
    case OrderExpr::Kind::Cat:
      for (const auto& p : order.parts())
        if (order_is_infinite(p)) return true;
      return false;
  }
  return false;
}

}  // namespace

bool is_close(const OrderExpr& order, const CloseSubsetSpec& subset) {
  switch (subset.kind()) {
    case CloseSubsetSpec::Kind::All:
    case CloseSubsetSpec::Kind::CofiniteExcept:
      return true;
    case CloseSubsetSpec::Kind::ResidueClass:
      if (order.kind() != OrderExpr::Kind::Omega &&
          order.kind() != OrderExpr::Kind::OmegaRev)
        throw std::invalid_argument("residue class needs omega/omega-rev carrier");
      return true;
    case CloseSubsetSpec::Kind::PerPart: {
      if (order.kind() != OrderExpr::Kind::Cat)
        throw std::invalid_argument("per-part rule needs cat carrier");
      if (subset.parts().size() != order.parts().size())
        throw std::invalid_argument("per-part arity mismatch");
      // Every infinite interval of a concatenation contains an infinite
      // interval of one of its infinite parts.
      for (std::size_t i = 0; i < order.parts().size(); ++i) {
        if (order_is_infinite(order.parts()[i]) &&
            !is_close(order.parts()[i], subset.parts()[i]))
          return false;
      }
      return true;
    }
    case CloseSubsetSpec::Kind::DenseRule: {
      if (order.kind() != OrderExpr::Kind::QDense)
        throw std::invalid_argument("dense rule needs qdense carrier");
      switch (subset.dense_kind()) {
        case CloseSubsetSpec::DenseKind::AllQ:
        case CloseSubsetSpec::DenseKind::DyadicDenAtLeast:
          return true;  // dense in Q, hence meets every nonempty open window
        case CloseSubsetSpec::DenseKind::DenAtMost:
          return false;  // spaced at least 1/B^2 apart: small windows miss it
      }
      return false;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Extreme members and hulls
// ---------------------------------------------------------------------------

namespace {

Position leaf_omega(std::int64_t i) {
  Position p;
  p.path.push_back(PathSeg::omega(i));
  return p;
}
Position leaf_omega_rev(std::int64_t i) {
  Position p;
  p.path.push_back(PathSeg::omega_rev(i));
  return p;
}
Position leaf_fin(std::int64_t i) {
  Position p;
  p.path.push_back(PathSeg::fin(i));
  return p;
}

std::optional<Position> first_in(const OrderExpr& order, const CloseSubsetSpec& subset,
                                 const Cut& low, const Cut& high);
std::optional<Position> last_in(const OrderExpr& order, const CloseSubsetSpec& subset,
                                const Cut& low, const Cut& high);

// Scans ascending indices for a member; used by Fin/Omega/OmegaRev leaves.
// make_pos maps an index to a leaf position; the scan covers [lo, hi]
// (hi < 0 encodes "unbounded", only allowed when the rule guarantees a hit
// within a computable horizon: residue classes and cofinite sets do).
template <typename MakePos>
std::optional<Position> scan_leaf(const OrderExpr& order, const CloseSubsetSpec& subset,
                                  std::int64_t lo, std::int64_t hi, bool unbounded,
                                  MakePos make_pos) {
  if (!unbounded && hi < lo) return std::nullopt;
  switch (subset.kind()) {
    case CloseSubsetSpec::Kind::All: {
      return make_pos(lo);
    }
    case CloseSubsetSpec::Kind::CofiniteExcept: {
      // Pigeonhole: among |excluded|+1 consecutive indices one is a member.
      std::int64_t span = lo + static_cast<std::int64_t>(subset.excluded().size());
      std::int64_t horizon = unbounded ? span : std::min(hi, span);
      for (std::int64_t i = lo; i <= horizon; ++i) {
        if (subset.contains(order, make_pos(i))) return make_pos(i);
      }
      return std::nullopt;
    }
    case CloseSubsetSpec::Kind::ResidueClass: {
      std::int64_t m = subset.modulus(), r = subset.residue_v();
      std::int64_t i = lo + ((r - lo) % m + m) % m;
      if (!unbounded && i > hi) return std::nullopt;
      return make_pos(i);
    }
    default:
      throw std::invalid_argument("unsupported rule for this carrier");
  }
}

std::optional<Position> first_in(const OrderExpr& order, const CloseSubsetSpec& subset,
                                 const Cut& low, const Cut& high) {
  switch (order.kind()) {
    case OrderExpr::Kind::Fin: {
      std::int64_t lo = 0, hi = order.fin_size() - 1;
      if (low.kind != Cut::Kind::Inf)
        lo = low.kind == Cut::Kind::Closed ? low.pos.path.at(0).idx
                                           : low.pos.path.at(0).idx + 1;
      if (high.kind != Cut::Kind::Inf)
        hi = std::min<std::int64_t>(hi, high.kind == Cut::Kind::Closed
                                            ? high.pos.path.at(0).idx
                                            : high.pos.path.at(0).idx - 1);
      lo = std::max<std::int64_t>(lo, 0);
      for (std::int64_t i = lo; i <= hi; ++i)
        if (subset.contains(order, leaf_fin(i))) return leaf_fin(i);
      return std::nullopt;
    }
    case OrderExpr::Kind::Omega: {
      std::int64_t lo = 0;
      if (low.kind != Cut::Kind::Inf)
        lo = low.kind == Cut::Kind::Closed ? low.pos.path.at(0).idx
                                           : low.pos.path.at(0).idx + 1;
      lo = std::max<std::int64_t>(lo, 0);
      bool unbounded = high.kind == Cut::Kind::Inf;
      std::int64_t hi = 0;
      if (!unbounded)
        hi = high.kind == Cut::Kind::Closed ? high.pos.path.at(0).idx
                                            : high.pos.path.at(0).idx - 1;
      return scan_leaf(order, subset, lo, hi, unbounded, leaf_omega);
    }
    case OrderExpr::Kind::OmegaRev: {
      // Order-ascending = index-descending; the order-smallest member has the
      // largest index. Unbounded below (low = Inf) means no smallest member.
      if (low.kind == Cut::Kind::Inf) return std::nullopt;
      std::int64_t max_idx = low.kind == Cut::Kind::Closed ? low.pos.path.at(0).idx
                                                           : low.pos.path.at(0).idx - 1;
      std::int64_t min_idx = 0;
      if (high.kind != Cut::Kind::Inf)
        min_idx = high.kind == Cut::Kind::Closed ? high.pos.path.at(0).idx
                                                 : high.pos.path.at(0).idx + 1;
      min_idx = std::max<std::int64_t>(min_idx, 0);
      // Scan descending from max_idx.
      switch (subset.kind()) {
        case CloseSubsetSpec::Kind::All:
          if (max_idx < min_idx) return std::nullopt;
          return leaf_omega_rev(max_idx);
        case CloseSubsetSpec::Kind::CofiniteExcept: {
          std::int64_t floor_idx = std::max(
              min_idx, max_idx - static_cast<std::int64_t>(subset.excluded().size()));
          for (std::int64_t i = max_idx; i >= floor_idx; --i)
            if (subset.contains(order, leaf_omega_rev(i))) return leaf_omega_rev(i);
          return std::nullopt;
        }
        case CloseSubsetSpec::Kind::ResidueClass: {
          std::int64_t m = subset.modulus(), r = subset.residue_v();
          std::int64_t i = max_idx - ((max_idx - r) % m + m) % m;
          if (i < min_idx) return std::nullopt;
          return leaf_omega_rev(i);
        }
        default:
          throw std::invalid_argument("unsupported rule for omega-rev carrier");
      }
    }
    case OrderExpr::Kind::QDense: {
      // A first member exists only when the window pins a point.
      if (low.kind == Cut::Kind::Closed) {
        Position p = low.pos;
        Interval iv{low, high};
        if (iv.contains(p) && subset.contains(order, p)) return p;
      }
      if (low.kind != Cut::Kind::Inf && high.kind != Cut::Kind::Inf &&
          low.pos.path.at(0).q == high.pos.path.at(0).q)
        return std::nullopt;  // degenerate window handled above
      return std::nullopt;    // dense: no order-smallest member
    }
    case OrderExpr::Kind::Cat: {
      const auto& parts = order.parts();
      std::int64_t lo_part = 0, hi_part = static_cast<std::int64_t>(parts.size()) - 1;
      if (low.kind != Cut::Kind::Inf) lo_part = low.pos.path.at(0).idx;
      if (high.kind != Cut::Kind::Inf) hi_part = high.pos.path.at(0).idx;
      for (std::int64_t p = lo_part; p <= hi_part; ++p) {
        Cut lo_local = (p == lo_part && low.kind != Cut::Kind::Inf) ? strip_cat(low)
                                                                    : Cut::inf();
        Cut hi_local = (p == hi_part && high.kind != Cut::Kind::Inf) ? strip_cat(high)
                                                                     : Cut::inf();
        if (!local_cut(lo_local) || !local_cut(hi_local)) continue;
        const CloseSubsetSpec& rule = subset.kind() == CloseSubsetSpec::Kind::PerPart
                                          ? subset.parts().at(p)
                                          : subset;
        if (auto r = first_in(parts[p], rule, lo_local, hi_local))
          return r->prefixed(PathSeg::cat(p));
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::optional<Position> last_in(const OrderExpr& order, const CloseSubsetSpec& subset,
                                const Cut& low, const Cut& high) {
  switch (order.kind()) {
    case OrderExpr::Kind::Fin: {
      std::int64_t lo = 0, hi = order.fin_size() - 1;
      if (low.kind != Cut::Kind::Inf)
        lo = std::max<std::int64_t>(0, low.kind == Cut::Kind::Closed
                                           ? low.pos.path.at(0).idx
                                           : low.pos.path.at(0).idx + 1);
      if (high.kind != Cut::Kind::Inf)
        hi = std::min<std::int64_t>(hi, high.kind == Cut::Kind::Closed
                                            ? high.pos.path.at(0).idx
                                            : high.pos.path.at(0).idx - 1);
      for (std::int64_t i = hi; i >= lo; --i)
        if (subset.contains(order, leaf_fin(i))) return leaf_fin(i);
      return std::nullopt;
    }
    case OrderExpr::Kind::Omega: {
      // Order-largest member has the largest index; unbounded above -> none.
      if (high.kind == Cut::Kind::Inf) return std::nullopt;
      std::int64_t hi = high.kind == Cut::Kind::Closed ? high.pos.path.at(0).idx
                                                       : high.pos.path.at(0).idx - 1;
      std::int64_t lo = 0;
      if (low.kind != Cut::Kind::Inf)
        lo = low.kind == Cut::Kind::Closed ? low.pos.path.at(0).idx
                                           : low.pos.path.at(0).idx + 1;
      lo = std::max<std::int64_t>(lo, 0);
      switch (subset.kind()) {
        case CloseSubsetSpec::Kind::All:
          if (hi < lo) return std::nullopt;
          return leaf_omega(hi);
        case CloseSubsetSpec::Kind::CofiniteExcept: {
          std::int64_t floor_idx =
              std::max(lo, hi - static_cast<std::int64_t>(subset.excluded().size()));
          for (std::int64_t i = hi; i >= floor_idx; --i)
            if (subset.contains(order, leaf_omega(i))) return leaf_omega(i);
          return std::nullopt;
        }
        case CloseSubsetSpec::Kind::ResidueClass: {
          std::int64_t m = subset.modulus(), r = subset.residue_v();
          std::int64_t i = hi - ((hi - r) % m + m) % m;
          if (i < lo) return std::nullopt;
          return leaf_omega(i);
        }
        default:
          throw std::invalid_argument("unsupported rule for omega carrier");
      }
    }
    case OrderExpr::Kind::OmegaRev: {
      // Order-largest member has the smallest index.
      std::int64_t min_idx = 0;
      if (high.kind != Cut::Kind::Inf)
        min_idx = high.kind == Cut::Kind::Closed ? high.pos.path.at(0).idx
                                                 : high.pos.path.at(0).idx + 1;
      min_idx = std::max<std::int64_t>(min_idx, 0);
      bool unbounded = low.kind == Cut::Kind::Inf;
      std::int64_t max_idx = 0;
      if (!unbounded)
        max_idx = low.kind == Cut::Kind::Closed ? low.pos.path.at(0).idx
                                                : low.pos.path.at(0).idx - 1;
      return scan_leaf(order, subset, min_idx, max_idx, unbounded, leaf_omega_rev);
    }
    case OrderExpr::Kind::QDense: {
      if (high.kind == Cut::Kind::Closed) {
        Position p = high.pos;
        Interval iv{low, high};
        if (iv.contains(p) && subset.contains(order, p)) return p;
      }
      return std::nullopt;
    }
    case OrderExpr::Kind::Cat: {
      const auto& parts = order.parts();
      std::int64_t lo_part = 0, hi_part = static_cast<std::int64_t>(parts.size()) - 1;
      if (low.kind != Cut::Kind::Inf) lo_part = low.pos.path.at(0).idx;
      if (high.kind != Cut::Kind::Inf) hi_part = high.pos.path.at(0).idx;
      for (std::int64_t p = hi_part; p >= lo_part; --p) {
        Cut lo_local = (p == lo_part && low.kind != Cut::Kind::Inf) ? strip_cat(low)
                                                                    : Cut::inf();
        Cut hi_local = (p == hi_part && high.kind != Cut::Kind::Inf) ? strip_cat(high)
                                                                     : Cut::inf();
        if (!local_cut(lo_local) || !local_cut(hi_local)) continue;
        const CloseSubsetSpec& rule = subset.kind() == CloseSubsetSpec::Kind::PerPart
                                          ? subset.parts().at(p)
                                          : subset;
        if (auto r = last_in(parts[p], rule, lo_local, hi_local))
          return r->prefixed(PathSeg::cat(p));
      }
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// Does the intersection I ∩ subset contain any point at all?
bool intersection_nonempty(const OrderExpr& order, const CloseSubsetSpec& subset,
                           const Cut& low, const Cut& high) {
  switch (order.kind()) {
    case OrderExpr::Kind::QDense: {
      // Dense rules: nonempty iff the window is nonempty (degenerate windows
      // reduce to a membership check).
      Rational a, b;
      bool has_a = low.kind != Cut::Kind::Inf, has_b = high.kind != Cut::Kind::Inf;
      if (has_a) a = low.pos.path.at(0).q;
      if (has_b) b = high.pos.path.at(0).q;
      if (has_a && has_b) {
        if (a > b) return false;
        if (a == b) {
          if (low.kind == Cut::Kind::Open || high.kind == Cut::Kind::Open) return false;
          Position p;
          p.path.push_back(PathSeg::rat(a));
          return subset.contains(order, p);
        }
      }
      switch (subset.kind()) {
        case CloseSubsetSpec::Kind::All:
          return true;
        case CloseSubsetSpec::Kind::CofiniteExcept:
          return true;  // a nondegenerate window is infinite
        case CloseSubsetSpec::Kind::DenseRule:
          switch (subset.dense_kind()) {
            case CloseSubsetSpec::DenseKind::AllQ:
            case CloseSubsetSpec::DenseKind::DyadicDenAtLeast:
              return true;  // dense
            case CloseSubsetSpec::DenseKind::DenAtMost:
              throw std::invalid_argument("subset not close");
          }
          return false;
        default:
          throw std::invalid_argument("unsupported rule for qdense carrier");
      }
    }
    case OrderExpr::Kind::Cat: {
      const auto& parts = order.parts();
      std::int64_t lo_part = 0, hi_part = static_cast<std::int64_t>(parts.size()) - 1;
      if (low.kind != Cut::Kind::Inf) lo_part = low.pos.path.at(0).idx;
      if (high.kind != Cut::Kind::Inf) hi_part = high.pos.path.at(0).idx;
      for (std::int64_t p = lo_part; p <= hi_part; ++p) {
        Cut lo_local = (p == lo_part && low.kind != Cut::Kind::Inf) ? strip_cat(low)
                                                                    : Cut::inf();
        Cut hi_local = (p == hi_part && high.kind != Cut::Kind::Inf) ? strip_cat(high)
                                                                     : Cut::inf();
        if (!local_cut(lo_local) || !local_cut(hi_local)) continue;
        const CloseSubsetSpec& rule = subset.kind() == CloseSubsetSpec::Kind::PerPart
                                          ? subset.parts().at(p)
                                          : subset;
        if (intersection_nonempty(parts[p], rule, lo_local, hi_local)) return true;
      }
      return false;
    }
    default:
      // Discrete leaves always have extreme members when nonempty.
      return first_in(order, subset, low, high).has_value() ||
             last_in(order, subset, low, high).has_value();
  }
}

// Low hull cut: the closed cut at the first member if one exists; otherwise
// the intersection accumulates toward the window's low cut (dense case).
Cut hull_low(const OrderExpr& order, const CloseSubsetSpec& subset, const Cut& low,
             const Cut& high) {
  if (auto p = first_in(order, subset, low, high)) return Cut::closed(*p);
  switch (order.kind()) {
    case OrderExpr::Kind::QDense: {
      if (low.kind == Cut::Kind::Inf) return Cut::inf();
      // Dense members approach the cut without attaining it.
      return Cut::open(low.pos);
    }
    case OrderExpr::Kind::OmegaRev:
      return Cut::inf();  // members descend without bound
    case OrderExpr::Kind::Cat: {
      const auto& parts = order.parts();
      std::int64_t lo_part = 0, hi_part = static_cast<std::int64_t>(parts.size()) - 1;
      if (low.kind != Cut::Kind::Inf) lo_part = low.pos.path.at(0).idx;
      if (high.kind != Cut::Kind::Inf) hi_part = high.pos.path.at(0).idx;
      for (std::int64_t p = lo_part; p <= hi_part; ++p) {
        Cut lo_local = (p == lo_part && low.kind != Cut::Kind::Inf) ? strip_cat(low)
                                                                    : Cut::inf();
        Cut hi_local = (p == hi_part && high.kind != Cut::Kind::Inf) ? strip_cat(high)
                                                                     : Cut::inf();
        if (!local_cut(lo_local) || !local_cut(hi_local)) continue;
        const CloseSubsetSpec& rule = subset.kind() == CloseSubsetSpec::Kind::PerPart
                                          ? subset.parts().at(p)
                                          : subset;
        if (intersection_nonempty(parts[p], rule, lo_local, hi_local)) {
          Cut c = hull_low(parts[p], rule, lo_local, hi_local);
          Cut out;
          if (c.kind == Cut::Kind::Inf) {
            // Members reach arbitrarily far down in part p: the hull starts
            // exactly at the region boundary.
            out.kind = Cut::Kind::Closed;
            out.pos.path.push_back(PathSeg::cat(p));
          } else {
            out.kind = c.kind;
            out.pos = c.pos.prefixed(PathSeg::cat(p));
          }
          return out;
        }
      }
      return Cut::inf();
    }
    default:
      return Cut::inf();
  }
}

Cut hull_high(const OrderExpr& order, const CloseSubsetSpec& subset, const Cut& low,
              const Cut& high) {
  if (auto p = last_in(order, subset, low, high)) return Cut::closed(*p);
  switch (order.kind()) {
    case OrderExpr::Kind::QDense: {
      if (high.kind == Cut::Kind::Inf) return Cut::inf();
      return Cut::open(high.pos);
    }
    case OrderExpr::Kind::Omega:
      return Cut::inf();
    case OrderExpr::Kind::Cat: {
      const auto& parts = order.parts();
      std::int64_t lo_part = 0, hi_part = static_cast<std::int64_t>(parts.size()) - 1;
      if (low.kind != Cut::Kind::Inf) lo_part = low.pos.path.at(0).idx;
      if (high.kind != Cut::Kind::Inf) hi_part = high.pos.path.at(0).idx;
      for (std::int64_t p = hi_part; p >= lo_part; --p) {
        Cut lo_local = (p == lo_part && low.kind != Cut::Kind::Inf) ? strip_cat(low)
                                                                    : Cut::inf();
        Cut hi_local = (p == hi_part && high.kind != Cut::Kind::Inf) ? strip_cat(high)
                                                                     : Cut::inf();
        if (!local_cut(lo_local) || !local_cut(hi_local)) continue;
        const CloseSubsetSpec& rule = subset.kind() == CloseSubsetSpec::Kind::PerPart
                                          ? subset.parts().at(p)
                                          : subset;
        if (intersection_nonempty(parts[p], rule, lo_local, hi_local)) {
          Cut c = hull_high(parts[p], rule, lo_local, hi_local);
          Cut out;
          if (c.kind == Cut::Kind::Inf) {
            // Members cofinal in part p: the hull runs through its end.
            out.kind = Cut::Kind::Closed;
            out.pos.path.push_back(PathSeg::cat(p));
          } else {
            out.kind = c.kind;
            out.pos = c.pos.prefixed(PathSeg::cat(p));
          }
          return out;
        }
      }
      return Cut::inf();
    }
    default:
      return Cut::inf();
  }
}

}  // namespace

Interval varpropto_subset(const OrderExpr& order, const CloseSubsetSpec& subset,
                          const Interval& I) {
  if (!is_close(order, subset)) throw std::invalid_argument("subset not close");
  if (I.definitely_empty()) return Interval::empty_at(Position{});
  if (!intersection_nonempty(order, subset, I.low, I.high))
    return Interval::empty_at(Position{});
  Interval out;
  out.low = hull_low(order, subset, I.low, I.high);
  out.high = hull_high(order, subset, I.low, I.high);
  return out;
}

std::optional<Position> first_member(const OrderExpr& order, const CloseSubsetSpec& subset,
                                     const Interval& I) {
  if (I.definitely_empty()) return std::nullopt;
  return first_in(order, subset, I.low, I.high);
}

std::optional<Position> last_member(const OrderExpr& order, const CloseSubsetSpec& subset,
                                    const Interval& I) {
  if (I.definitely_empty()) return std::nullopt;
  return last_in(order, subset, I.low, I.high);
}

std::vector<Position> enumerate_members(const OrderExpr& order, const CloseSubsetSpec& subset,
                                        const Interval& I, std::size_t limit) {
  std::vector<Position> out;
  Interval window = I;
  while (out.size() < limit) {
    auto p = first_member(order, subset, window);
    if (!p) {
      if (intersection_nonempty(order, subset, window.low, window.high))
        throw std::invalid_argument("enumerate_members: no first member (dense rule)");
      break;
    }
    out.push_back(*p);
    window.low = Cut::open(*p);
  }
  return out;
}

}  // namespace tw
