#include "tw/coi.hpp"

#include <algorithm>
#include <set>

#include "tw/parallel.hpp"

namespace tw {

// ---------------------------------------------------------------------------
// collection
// ---------------------------------------------------------------------------

const CoiTriple& CoiCollection::at(const std::string& name) const {
  for (const auto& t : triples_)
    if (t.name == name) return t;
  throw std::out_of_range("no triple named " + name);
}

void CoiCollection::add(CoiTriple t) {
  for (const auto& u : triples_)
    if (u.name == t.name) throw std::invalid_argument("duplicate triple name " + t.name);
  triples_.push_back(std::move(t));
}

// ---------------------------------------------------------------------------
// region resolution and anchors
// ---------------------------------------------------------------------------

namespace {

// The word expression sitting at a region prefix.
WordPtr resolve_region(const Registry& reg, const WordPtr& w,
                       const std::vector<PathSeg>& prefix, std::size_t at = 0) {
  if (at == prefix.size()) return w;
  const PathSeg& s = prefix[at];
  switch (w->kind()) {
    case WordExpr::Kind::Cat:
      if (s.kind != PathSeg::Kind::CatPart)
        throw std::invalid_argument("region prefix mismatches cat");
      return resolve_region(reg, w->parts().at(s.idx), prefix, at + 1);
    case WordExpr::Kind::Inv:
      if (s.kind != PathSeg::Kind::RevEnter)
        throw std::invalid_argument("region prefix mismatches inverse");
      return resolve_region(reg, w->inner(), prefix, at + 1);
    case WordExpr::Kind::OmegaCat: {
      if (s.kind != PathSeg::Kind::OmegaIdx)
        throw std::invalid_argument("region prefix mismatches omega word");
      const OmegaRule& r = w->omega();
      std::int64_t P = static_cast<std::int64_t>(r.prefix.size());
      if (s.idx < P) return resolve_region(reg, r.prefix[s.idx], prefix, at + 1);
      std::int64_t S = static_cast<std::int64_t>(r.slots.size());
      std::int64_t j = r.start + (s.idx - P) / S;
      std::int64_t sl = (s.idx - P) % S;
      OmegaRule one;
      one.slots = {r.slots[sl]};
      one.start = j;
      WordPtr em = w_omega(reg, one);
      FiniteWord f = project(reg, em, r.slots[sl].index(j));
      if (f.empty()) throw std::logic_error("empty slot emission");
      return resolve_region(reg, w_lit(reg, f.at(0).letter), prefix, at + 1);
    }
    case WordExpr::Kind::QShuffle: {
      if (s.kind != PathSeg::Kind::Rat)
        throw std::invalid_argument("region prefix mismatches qshuffle");
      const QRule& q = w->qrule();
      auto hit = q_site_lookup(q, s.q);
      if (!hit) throw std::invalid_argument("region site carries no block");
      WordPtr sw = q_site_word(reg, q, hit->first);
      if (hit->second >= 0) return resolve_region(reg, sw, prefix, at + 1);
      if (at + 1 < prefix.size() && prefix[at + 1].kind == PathSeg::Kind::RevEnter)
        return resolve_region(reg, sw, prefix, at + 2);
      return w_inv(reg, sw);
    }
    default:
      throw std::invalid_argument("region prefix descends below a letter");
  }
}

}  // namespace

WordPtr coi_resolve_region(const Registry& reg, const WordPtr& w,
                           const std::vector<PathSeg>& prefix) {
  return resolve_region(reg, w, prefix);
}

namespace {

struct OmegaView {
  const OmegaRule* rule;
  std::int64_t prefix_count;
  std::int64_t slot_count;
  std::int64_t term_of(std::int64_t j, std::int64_t slot) const {
    return prefix_count + (j - rule->start) * slot_count + slot;
  }
};

OmegaView omega_view(const Registry& reg, const WordPtr& w,
                     const std::vector<PathSeg>& prefix) {
  WordPtr node = resolve_region(reg, w, prefix);
  if (node->kind() != WordExpr::Kind::OmegaCat)
    throw std::invalid_argument("term-paired segment must target an omega word");
  const OmegaRule& r = node->omega();
  return OmegaView{&r, static_cast<std::int64_t>(r.prefix.size()),
                   static_cast<std::int64_t>(r.slots.size())};
}

Position term_anchor(const std::vector<PathSeg>& prefix, const OmegaView& v,
                     std::int64_t j, std::int64_t slot) {
  Position p;
  p.path = prefix;
  p.path.push_back(PathSeg::omega(v.term_of(j, slot)));
  return p;
}

Position site_anchor(const Registry& reg, const WordPtr& word,
                     const std::vector<PathSeg>& prefix, const Rational& s) {
  WordPtr node = resolve_region(reg, word, prefix);
  if (node->kind() != WordExpr::Kind::QShuffle)
    throw std::invalid_argument("site-paired segment must target a qshuffle");
  const QRule& q = node->qrule();
  auto hit = q_site_lookup(q, s);
  if (!hit) throw std::invalid_argument("no block at site " + s.str());
  WordPtr sw = q_site_word(reg, q, hit->first);
  std::optional<Position> inner =
      hit->second >= 0 ? first_position(reg, sw) : last_position(reg, sw);
  if (!inner) throw std::invalid_argument("site block has no end letter");
  Position p;
  p.path = prefix;
  p.path.push_back(PathSeg::rat(s));
  if (hit->second < 0) p.path.push_back(PathSeg::rev());
  p.path.insert(p.path.end(), inner->path.begin(), inner->path.end());
  return p;
}

// ---------------------------------------------------------------------------
// cut lattice
// ---------------------------------------------------------------------------

// is `a` at least as low as `b`, as low cuts (includes at least as much)?
bool low_leq(const Cut& a, const Cut& b) {
  if (a.kind == Cut::Kind::Inf) return true;
  if (b.kind == Cut::Kind::Inf) return false;
  switch (region_cmp(a.pos, b.pos)) {
    case RegionCmp::Less:
      return true;
    case RegionCmp::Greater:
      return false;
    case RegionCmp::Equal:
      return a.kind == Cut::Kind::Closed || b.kind == Cut::Kind::Open;
    case RegionCmp::AInsideB:
      // b is a region cut containing a's anchor
      return b.kind == Cut::Kind::Open;  // b starts above its region: a lower
    case RegionCmp::BInsideA:
      return a.kind == Cut::Kind::Closed;  // a includes its whole region
    case RegionCmp::Mismatch:
      throw std::invalid_argument("incomparable hull cuts");
  }
  return false;
}

bool high_geq(const Cut& a, const Cut& b) {
  if (a.kind == Cut::Kind::Inf) return true;
  if (b.kind == Cut::Kind::Inf) return false;
  switch (region_cmp(a.pos, b.pos)) {
    case RegionCmp::Greater:
      return true;
    case RegionCmp::Less:
      return false;
    case RegionCmp::Equal:
      return a.kind == Cut::Kind::Closed || b.kind == Cut::Kind::Open;
    case RegionCmp::AInsideB:
      return b.kind == Cut::Kind::Open;
    case RegionCmp::BInsideA:
      return a.kind == Cut::Kind::Closed;
    case RegionCmp::Mismatch:
      throw std::invalid_argument("incomparable hull cuts");
  }
  return false;
}

struct HullAcc {
  bool any = false;
  Cut lo, hi;
  void add(const Cut& l, const Cut& h) {
    if (!any) {
      lo = l;
      hi = h;
      any = true;
      return;
    }
    if (low_leq(l, lo)) lo = l;
    if (high_geq(h, hi)) hi = h;
  }
  void add_point(const Position& p) { add(Cut::closed(p), Cut::closed(p)); }
};

// Region cut "through the whole region at prefix": Inf when the region is the
// entire word.
Cut region_end_cut(const std::vector<PathSeg>& prefix) {
  if (prefix.empty()) return Cut::inf();
  Cut c;
  c.kind = Cut::Kind::Closed;
  c.pos.path = prefix;
  return c;
}

// ---------------------------------------------------------------------------
// cycle / site range derivation from an interval
// ---------------------------------------------------------------------------

// Relation of an interval cut to a region prefix.
enum class CutRel { NoConstraint, ExcludesAll, Enters };

CutRel relate_cut(const Cut& c, const std::vector<PathSeg>& prefix, bool is_low) {
  if (c.kind == Cut::Kind::Inf) return CutRel::NoConstraint;
  Position region;
  region.path = prefix;
  switch (region_cmp(c.pos, region)) {
    case RegionCmp::Less:
      return is_low ? CutRel::NoConstraint : CutRel::ExcludesAll;
    case RegionCmp::Greater:
      return is_low ? CutRel::ExcludesAll : CutRel::NoConstraint;
    case RegionCmp::Equal:
    case RegionCmp::BInsideA:
      // the cut's anchor region contains this whole region
      return c.kind == Cut::Kind::Closed ? CutRel::NoConstraint : CutRel::ExcludesAll;
    case RegionCmp::AInsideB:
      return CutRel::Enters;
    case RegionCmp::Mismatch:
      throw std::invalid_argument("cut shape mismatches segment region");
  }
  return CutRel::NoConstraint;
}

// first path segment of the cut below the region prefix
const PathSeg& cut_seg_below(const Cut& c, const std::vector<PathSeg>& prefix) {
  return c.pos.path.at(prefix.size());
}

struct CycleRange {
  bool any = false;
  std::int64_t lo = 0;
  std::optional<std::int64_t> hi;
};

// Left-side cycle range of a TermPaired seg surviving inside I.
CycleRange cycles_in(const Registry& reg, const WordPtr& word, const CoiSeg& seg,
                     bool right, const Interval& I) {
  const std::vector<PathSeg>& prefix = right ? seg.prefix_r : seg.prefix_l;
  std::int64_t slot = right ? seg.slot_r : seg.slot_l;
  OmegaView v = omega_view(reg, word, prefix);
  // parametrize by LEFT cycle j; on the right the host cycle is j + shift
  auto host_cycle = [&](std::int64_t j) { return right ? j + seg.shift : j; };
  std::int64_t j_lo = seg.from_cycle;
  std::optional<std::int64_t> j_hi = seg.to_cycle;

  CutRel rl = relate_cut(I.low, prefix, true);
  if (rl == CutRel::ExcludesAll) return {};
  if (rl == CutRel::Enters) {
    const PathSeg& s = cut_seg_below(I.low, prefix);
    if (s.kind != PathSeg::Kind::OmegaIdx)
      throw std::invalid_argument("cut inside omega region lacks a term index");
    std::int64_t t_c = s.idx;
    bool strict = I.low.kind == Cut::Kind::Open &&
                  I.low.pos.path.size() == prefix.size() + 1;
    // smallest left j with host term >= t_c (or > when the cut is open and
    // anchored exactly at a term)
    for (std::int64_t j = j_lo;; ++j) {
      std::int64_t t = v.term_of(host_cycle(j), slot);
      if (t > t_c || (t == t_c && !strict)) {
        j_lo = j;
        break;
      }
      if (j > j_lo + (t_c - v.prefix_count) / std::max<std::int64_t>(1, v.slot_count) + 4)
        return {};  // cut beyond every anchor
    }
  }
  CutRel rh = relate_cut(I.high, prefix, false);
  if (rh == CutRel::ExcludesAll) return {};
  if (rh == CutRel::Enters) {
    const PathSeg& s = cut_seg_below(I.high, prefix);
    if (s.kind != PathSeg::Kind::OmegaIdx)
      throw std::invalid_argument("cut inside omega region lacks a term index");
    std::int64_t t_c = s.idx;
    bool strict = I.high.kind == Cut::Kind::Open &&
                  I.high.pos.path.size() == prefix.size() + 1;
    std::optional<std::int64_t> best;
    for (std::int64_t j = j_lo;; ++j) {
      std::int64_t t = v.term_of(host_cycle(j), slot);
      if (t < t_c || (t == t_c && !strict))
        best = j;
      else
        break;
      if (j_hi && j >= *j_hi) break;
      if (j > j_lo + (t_c - v.prefix_count) / std::max<std::int64_t>(1, v.slot_count) + 4)
        break;
    }
    if (!best) return {};
    j_hi = j_hi ? std::min(*j_hi, *best) : *best;
  }
  if (j_hi && *j_hi < j_lo) return {};
  CycleRange out;
  out.any = true;
  out.lo = j_lo;
  out.hi = j_hi;
  return out;
}

struct SiteWindow {
  bool any = false;
  RatWindowCut lo, hi;
};

// Window (on the side's own site line) surviving inside I.
SiteWindow sites_in(const Registry& reg, const WordPtr& word, const CoiSeg& seg,
                    bool right, const Interval& I) {
  const std::vector<PathSeg>& prefix = right ? seg.prefix_r : seg.prefix_l;
  SiteWindow out;
  out.any = true;
  out.lo = right ? RatWindowCut{} : seg.site_lo;
  out.hi = right ? RatWindowCut{} : seg.site_hi;
  if (right) {
    // transform the left window through the site map
    auto tf = [&](const Rational& s) { return seg.tf_a * s + seg.tf_b; };
    RatWindowCut a = seg.site_lo, b = seg.site_hi;
    RatWindowCut ta, tb;
    if (a.bounded) ta = {true, tf(a.q), a.include_site};
    if (b.bounded) tb = {true, tf(b.q), b.include_site};
    if (seg.tf_a >= Rational(0)) {
      out.lo = ta;
      out.hi = tb;
    } else {
      out.lo = tb;
      out.hi = ta;
    }
  }
  auto tighten_lo = [&](const Rational& q, bool include) {
    if (!out.lo.bounded || q > out.lo.q)
      out.lo = {true, q, include};
    else if (q == out.lo.q)
      out.lo.include_site = out.lo.include_site && include;
  };
  auto tighten_hi = [&](const Rational& q, bool include) {
    if (!out.hi.bounded || q < out.hi.q)
      out.hi = {true, q, include};
    else if (q == out.hi.q)
      out.hi.include_site = out.hi.include_site && include;
  };
  CutRel rl = relate_cut(I.low, prefix, true);
  if (rl == CutRel::ExcludesAll) return {};
  if (rl == CutRel::Enters) {
    const PathSeg& s = cut_seg_below(I.low, prefix);
    if (s.kind != PathSeg::Kind::Rat)
      throw std::invalid_argument("cut inside qshuffle region lacks a site");
    bool deep = I.low.pos.path.size() > prefix.size() + 1;
    if (!deep) {
      tighten_lo(s.q, I.low.kind == Cut::Kind::Closed);
    } else {
      // anchored inside the site's block: the site survives iff its anchor
      // point clears the cut
      Position anchor = site_anchor(reg, word, prefix, s.q);
      Interval probe{I.low, Cut::inf()};
      tighten_lo(s.q, probe.contains(anchor));
    }
  }
  CutRel rh = relate_cut(I.high, prefix, false);
  if (rh == CutRel::ExcludesAll) return {};
  if (rh == CutRel::Enters) {
    const PathSeg& s = cut_seg_below(I.high, prefix);
    if (s.kind != PathSeg::Kind::Rat)
      throw std::invalid_argument("cut inside qshuffle region lacks a site");
    bool deep = I.high.pos.path.size() > prefix.size() + 1;
    if (!deep) {
      tighten_hi(s.q, I.high.kind == Cut::Kind::Closed);
    } else {
      Position anchor = site_anchor(reg, word, prefix, s.q);
      Interval probe{Cut::inf(), I.high};
      tighten_hi(s.q, probe.contains(anchor));
    }
  }
  if (out.lo.bounded && out.hi.bounded) {
    if (out.lo.q > out.hi.q) return {};
    if (out.lo.q == out.hi.q && !(out.lo.include_site && out.hi.include_site)) return {};
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// varpropto
// ---------------------------------------------------------------------------

namespace {

void seg_image_hull(const Registry& reg, const CoiTriple& t, const CoiSeg& seg,
                    const Interval& I, HullAcc* acc) {
  switch (seg.kind) {
    case CoiSeg::Kind::PointPairs: {
      std::vector<Position> images;
      for (const auto& [l, r] : seg.pairs) {
        Position pl = l.prefixed(seg.prefix_l);
        if (!I.contains(pl)) continue;
        images.push_back(r.prefixed(seg.prefix_r));
      }
      for (const auto& p : images) acc->add_point(p);
      return;
    }
    case CoiSeg::Kind::TermPaired: {
      CycleRange cr = cycles_in(reg, t.left, seg, false, I);
      if (!cr.any) return;
      OmegaView vr = omega_view(reg, t.right, seg.prefix_r);
      Cut lo = Cut::closed(term_anchor(seg.prefix_r, vr, cr.lo + seg.shift, seg.slot_r));
      Cut hi = cr.hi ? Cut::closed(term_anchor(seg.prefix_r, vr, *cr.hi + seg.shift,
                                               seg.slot_r))
                     : region_end_cut(seg.prefix_r);
      acc->add(lo, hi);
      return;
    }
    case CoiSeg::Kind::SitePaired: {
      SiteWindow sw = sites_in(reg, t.left, seg, false, I);
      if (!sw.any) return;
      auto tf = [&](const Rational& s) { return seg.tf_a * s + seg.tf_b; };
      // image window on the right site line
      RatWindowCut ilo, ihi;
      if (seg.tf_a >= Rational(0)) {
        if (sw.lo.bounded) ilo = {true, tf(sw.lo.q), sw.lo.include_site};
        if (sw.hi.bounded) ihi = {true, tf(sw.hi.q), sw.hi.include_site};
      } else {
        if (sw.hi.bounded) ilo = {true, tf(sw.hi.q), sw.hi.include_site};
        if (sw.lo.bounded) ihi = {true, tf(sw.lo.q), sw.lo.include_site};
      }
      // degenerate window: a single site anchor
      if (ilo.bounded && ihi.bounded && ilo.q == ihi.q) {
        Position a = site_anchor(reg, t.right, seg.prefix_r, ilo.q);
        acc->add_point(a);
        return;
      }
      Cut lo, hi;
      if (!ilo.bounded) {
        lo = seg.prefix_r.empty() ? Cut::inf() : Cut{Cut::Kind::Closed, [&] {
               Position p;
               p.path = seg.prefix_r;
               return p;
             }()};
      } else if (ilo.include_site) {
        lo = Cut::closed(site_anchor(reg, t.right, seg.prefix_r, ilo.q));
      } else {
        Position p;
        p.path = seg.prefix_r;
        p.path.push_back(PathSeg::rat(ilo.q));
        lo = Cut::open(p);  // strictly above the whole boundary site
      }
      if (!ihi.bounded) {
        hi = region_end_cut(seg.prefix_r);
      } else if (ihi.include_site) {
        hi = Cut::closed(site_anchor(reg, t.right, seg.prefix_r, ihi.q));
      } else {
        Position p;
        p.path = seg.prefix_r;
        p.path.push_back(PathSeg::rat(ihi.q));
        hi = Cut::open(p);
      }
      acc->add(lo, hi);
      return;
    }
  }
}

}  // namespace

Position term_anchor_abs(const Registry& reg, const WordPtr& word,
                         const std::vector<PathSeg>& prefix, std::size_t slot,
                         std::int64_t cycle) {
  OmegaView v = omega_view(reg, word, prefix);
  return term_anchor(prefix, v, cycle, static_cast<std::int64_t>(slot));
}

Interval varpropto_coi(const Registry& reg, const CoiTriple& t, const Interval& I,
                       CoiDir dir) {
  if (dir == CoiDir::Backward) return varpropto_coi(reg, coi_invert(t), I, CoiDir::Forward);
  if (I.definitely_empty()) return Interval::empty_at(Position{});
  HullAcc acc;
  for (const auto& seg : t.map.segs) seg_image_hull(reg, t, seg, I, &acc);
  if (!acc.any) return Interval::empty_at(Position{});
  // cuts flush with the word's ends denote the same set as infinite cuts
  if (acc.lo.kind == Cut::Kind::Closed) {
    auto fp = first_position(reg, t.right);
    if (fp && *fp == acc.lo.pos) acc.lo = Cut::inf();
  }
  if (acc.hi.kind == Cut::Kind::Closed) {
    auto lp = last_position(reg, t.right);
    if (lp && *lp == acc.hi.pos) acc.hi = Cut::inf();
  }
  return Interval{acc.lo, acc.hi};
}

CoiTriple coi_invert(const CoiTriple& t) {
  CoiTriple out;
  out.name = t.name + "^-1";
  out.left_name = t.right_name;
  out.left = t.right;
  out.right_name = t.left_name;
  out.right = t.left;
  for (CoiSeg seg : t.map.segs) {
    CoiSeg inv = seg;
    std::swap(inv.prefix_l, inv.prefix_r);
    switch (seg.kind) {
      case CoiSeg::Kind::PointPairs: {
        inv.pairs.clear();
        for (const auto& [l, r] : seg.pairs) inv.pairs.emplace_back(r, l);
        if (seg.sign < 0) std::reverse(inv.pairs.begin(), inv.pairs.end());
        break;
      }
      case CoiSeg::Kind::TermPaired: {
        std::swap(inv.slot_l, inv.slot_r);
        inv.from_cycle = seg.from_cycle + seg.shift;
        if (seg.to_cycle) inv.to_cycle = *seg.to_cycle + seg.shift;
        inv.shift = -seg.shift;
        break;
      }
      case CoiSeg::Kind::SitePaired: {
        // s' = a s + b  =>  s = (s' - b) / a
        auto tf = [&](const Rational& s) { return seg.tf_a * s + seg.tf_b; };
        RatWindowCut lo = seg.site_lo, hi = seg.site_hi;
        RatWindowCut tlo, thi;
        if (lo.bounded) tlo = {true, tf(lo.q), lo.include_site};
        if (hi.bounded) thi = {true, tf(hi.q), hi.include_site};
        if (seg.tf_a >= Rational(0)) {
          inv.site_lo = tlo;
          inv.site_hi = thi;
        } else {
          inv.site_lo = thi;
          inv.site_hi = tlo;
        }
        inv.tf_a = Rational(1) / seg.tf_a;
        inv.tf_b = -seg.tf_b / seg.tf_a;
        break;
      }
    }
    out.map.segs.push_back(std::move(inv));
  }
  return out;
}

// ---------------------------------------------------------------------------
// clipping
// ---------------------------------------------------------------------------

std::optional<CoiSeg> clip_seg(const Registry& reg, const CoiTriple& t, const CoiSeg& seg,
                               bool right_side, const Interval& I) {
  CoiSeg out = seg;
  switch (seg.kind) {
    case CoiSeg::Kind::PointPairs: {
      out.pairs.clear();
      const std::vector<PathSeg>& prefix = right_side ? seg.prefix_r : seg.prefix_l;
      for (const auto& pr : seg.pairs) {
        Position p = (right_side ? pr.second : pr.first).prefixed(prefix);
        if (I.contains(p)) out.pairs.push_back(pr);
      }
      if (out.pairs.empty()) return std::nullopt;
      return out;
    }
    case CoiSeg::Kind::TermPaired: {
      CycleRange cr = cycles_in(reg, right_side ? t.right : t.left, seg, right_side, I);
      if (!cr.any) return std::nullopt;
      out.from_cycle = std::max(seg.from_cycle, cr.lo);
      out.to_cycle = cr.hi;
      if (seg.to_cycle)
        out.to_cycle = out.to_cycle ? std::min(*out.to_cycle, *seg.to_cycle) : seg.to_cycle;
      if (out.to_cycle && *out.to_cycle < out.from_cycle) return std::nullopt;
      return out;
    }
    case CoiSeg::Kind::SitePaired: {
      SiteWindow sw = sites_in(reg, right_side ? t.right : t.left, seg, right_side, I);
      if (!sw.any) return std::nullopt;
      if (right_side) {
        // translate the clipped right window back onto the left site line
        auto inv_tf = [&](const Rational& s) { return (s - seg.tf_b) / seg.tf_a; };
        RatWindowCut lo = sw.lo, hi = sw.hi;
        RatWindowCut tlo, thi;
        if (lo.bounded) tlo = {true, inv_tf(lo.q), lo.include_site};
        if (hi.bounded) thi = {true, inv_tf(hi.q), hi.include_site};
        if (seg.tf_a >= Rational(0)) {
          out.site_lo = tlo;
          out.site_hi = thi;
        } else {
          out.site_lo = thi;
          out.site_hi = tlo;
        }
      } else {
        out.site_lo = sw.lo;
        out.site_hi = sw.hi;
      }
      return out;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

namespace {

struct InfiniteRegion {
  std::vector<PathSeg> prefix;
  WordExpr::Kind kind;
};

void collect_infinite_regions(const Registry& reg, const WordPtr& w,
                              std::vector<PathSeg> prefix,
                              std::vector<InfiniteRegion>& out) {
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
    case WordExpr::Kind::Lit:
      return;
    case WordExpr::Kind::Cat: {
      for (std::size_t i = 0; i < w->parts().size(); ++i) {
        auto p = prefix;
        p.push_back(PathSeg::cat(static_cast<std::int64_t>(i)));
        collect_infinite_regions(reg, w->parts()[i], p, out);
      }
      return;
    }
    case WordExpr::Kind::Inv: {
      auto p = prefix;
      p.push_back(PathSeg::rev());
      collect_infinite_regions(reg, w->inner(), p, out);
      return;
    }
    case WordExpr::Kind::OmegaCat: {
      out.push_back({prefix, WordExpr::Kind::OmegaCat});
      const OmegaRule& r = w->omega();
      for (std::size_t i = 0; i < r.prefix.size(); ++i) {
        auto p = prefix;
        p.push_back(PathSeg::omega(static_cast<std::int64_t>(i)));
        collect_infinite_regions(reg, r.prefix[i], p, out);
      }
      return;
    }
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w->qrule();
      if (q.fiber_tail.kind != FiberTail::Kind::None)
        out.push_back({prefix, WordExpr::Kind::QShuffle});
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        auto it = q.site_words.find(m);
        if (it == q.site_words.end() || word_is_finite(*it->second)) continue;
        for (const auto& f : q_live_fibers(q, m)) {
          auto p = prefix;
          p.push_back(PathSeg::rat(f.site));
          if (f.sign < 0) p.push_back(PathSeg::rev());
          collect_infinite_regions(reg, it->second, p, out);
        }
      }
      if (q.fiber_tail.kind == FiberTail::Kind::None && !word_is_finite(*w) &&
          q.fibers.empty())
        out.push_back({prefix, WordExpr::Kind::QShuffle});
      return;
    }
  }
}

}  // namespace

std::vector<std::string> coi_validate(const Registry& reg, const CoiTriple& t) {
  std::vector<std::string> problems;
  auto complain = [&](const std::string& s) { problems.push_back(t.name + ": " + s); };
  for (const auto& seg : t.map.segs) {
    try {
      switch (seg.kind) {
        case CoiSeg::Kind::PointPairs: {
          for (std::size_t i = 1; i < seg.pairs.size(); ++i) {
            if (!pos_less(seg.pairs[i - 1].first, seg.pairs[i].first))
              complain("point pairs not ascending on the left");
            Cmp c = pos_cmp(seg.pairs[i - 1].second, seg.pairs[i].second);
            bool ok = seg.sign >= 0 ? c == Cmp::Less : c == Cmp::Greater;
            if (!ok) complain("point pair images not monotone with the segment sign");
          }
          break;
        }
        case CoiSeg::Kind::TermPaired: {
          if (seg.sign < 0) complain("term-paired segments cannot reverse orientation");
          OmegaView vl = omega_view(reg, t.left, seg.prefix_l);
          OmegaView vr = omega_view(reg, t.right, seg.prefix_r);
          if (seg.slot_l >= static_cast<std::size_t>(vl.slot_count) ||
              seg.slot_r >= static_cast<std::size_t>(vr.slot_count))
            complain("term-paired slot out of range");
          else {
            if (vl.rule->slots[seg.slot_l].kind != TailSlot::Kind::Power ||
                vr.rule->slots[seg.slot_r].kind != TailSlot::Kind::Power)
              complain("term-paired anchors need power slots");
            if (seg.from_cycle < vl.rule->start ||
                seg.from_cycle + seg.shift < vr.rule->start)
              complain("term-paired range starts before the tail");
          }
          break;
        }
        case CoiSeg::Kind::SitePaired: {
          WordPtr ln = resolve_region(reg, t.left, seg.prefix_l);
          WordPtr rn = resolve_region(reg, t.right, seg.prefix_r);
          if (ln->kind() != WordExpr::Kind::QShuffle ||
              rn->kind() != WordExpr::Kind::QShuffle)
            complain("site-paired segment must target qshuffle words");
          else {
            if (ln->qrule().fiber_tail.kind == FiberTail::Kind::None ||
                rn->qrule().fiber_tail.kind == FiberTail::Kind::None)
              complain("site-paired segments need dense site families");
            if ((seg.tf_a >= Rational(0) ? 1 : -1) != seg.sign)
              complain("site transform sign mismatches segment sign");
          }
          break;
        }
      }
    } catch (const std::exception& e) {
      complain(std::string("segment resolution failed: ") + e.what());
    }
  }
  // closeness: every infinite region of each word must carry a schedule
  for (int side = 0; side < 2; ++side) {
    const WordPtr& w = side == 0 ? t.left : t.right;
    std::vector<InfiniteRegion> regions;
    collect_infinite_regions(reg, w, {}, regions);
    for (const auto& r : regions) {
      bool covered = false;
      for (const auto& seg : t.map.segs) {
        const auto& prefix = side == 0 ? seg.prefix_l : seg.prefix_r;
        if (prefix != r.prefix) continue;
        if (r.kind == WordExpr::Kind::OmegaCat && seg.kind == CoiSeg::Kind::TermPaired &&
            !seg.to_cycle) {
          // term anchors only close the tail when every emission is a letter;
          // ruler emissions hide infinite intervals between anchors
          WordPtr node = resolve_region(reg, w, r.prefix);
          bool letters_only = true;
          for (const auto& sl : node->omega().slots)
            if (sl.kind != TailSlot::Kind::Power) letters_only = false;
          if (letters_only) covered = true;
        }
        if (r.kind == WordExpr::Kind::QShuffle && seg.kind == CoiSeg::Kind::SitePaired)
          covered = true;
      }
      if (!covered)
        complain(std::string(side == 0 ? "left" : "right") +
                 " infinite region lacks a close schedule at prefix " +
                 [&] {
                   Position p;
                   p.path = r.prefix;
                   return p.str();
                 }());
    }
  }
  return problems;
}

// ---------------------------------------------------------------------------
// coherence audit
// ---------------------------------------------------------------------------

namespace {

struct Window {
  std::size_t i, j, len;
};

// Maximal common windows between two letter sequences.
std::vector<Window> maximal_common_windows(const FiniteWord& A, const FiniteWord& B,
                                           std::size_t budget) {
  std::vector<Window> out;
  const std::size_t n = A.size(), m = B.size();
  if (n == 0 || m == 0) return out;
  std::vector<std::vector<std::size_t>> ext(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = m; j-- > 0;)
      ext[i][j] = A.at(i).letter == B.at(j).letter ? ext[i + 1][j + 1] + 1 : 0;
  for (std::size_t i = 0; i < n && out.size() < budget; ++i)
    for (std::size_t j = 0; j < m && out.size() < budget; ++j) {
      if (ext[i][j] == 0) continue;
      if (i > 0 && j > 0 && A.at(i - 1).letter == B.at(j - 1).letter) continue;
      out.push_back({i, j, ext[i][j]});
    }
  return out;
}

FiniteWord inverted_view(const Registry& reg, const FiniteWord& w) {
  std::vector<PosLetter> out;
  for (auto it = w.letters().rbegin(); it != w.letters().rend(); ++it)
    out.push_back({it->pos, Letter{it->letter.index,
                                   g_inv(reg.at(it->letter.index), it->letter.value)}});
  return FiniteWord(std::move(out));
}

}  // namespace

std::vector<Obligation> enumerate_obligations(const Registry& reg, const CoiCollection& coll,
                                              std::int64_t depth, std::size_t budget) {
  std::vector<Obligation> out;
  for (int side = 0; side < 2; ++side) {
    // cached projections
    std::vector<FiniteWord> proj;
    for (const auto& t : coll.triples())
      proj.push_back(project(reg, side == 0 ? *t.left : *t.right, depth));
    for (std::size_t a = 0; a < coll.size(); ++a) {
      for (std::size_t b = 0; b < coll.size(); ++b) {
        for (int delta : {1, -1}) {
          FiniteWord B = delta > 0 ? proj[b] : inverted_view(reg, proj[b]);
          auto windows = maximal_common_windows(proj[a], B, budget);
          for (const auto& w : windows) {
            if (a == b && delta > 0 && w.i == w.j) continue;  // reflexive identity
            if (out.size() >= budget) break;
            Obligation ob;
            ob.right_side = side == 1;
            ob.x0 = coll.at(a).name;
            ob.x1 = coll.at(b).name;
            ob.delta = delta;
            ob.depth = depth;
            ob.I0 = Interval::closed(proj[a].at(w.i).pos, proj[a].at(w.i + w.len - 1).pos);
            // positions in the second word's own coordinates
            Position p0 = B.at(w.j).pos, p1 = B.at(w.j + w.len - 1).pos;
            if (delta < 0) std::swap(p0, p1);
            ob.I1 = Interval::closed(p0, p1);
            out.push_back(std::move(ob));
          }
        }
      }
    }
  }
  return out;
}

ArchEq discharge(const Registry& reg, const CoiCollection& coll, const Obligation& ob) {
  const CoiTriple& t0_orig = coll.at(ob.x0);
  const CoiTriple& t1_orig = coll.at(ob.x1);
  CoiTriple t0 = ob.right_side ? coi_invert(t0_orig) : t0_orig;
  CoiTriple t1 = ob.right_side ? coi_invert(t1_orig) : t1_orig;
  Interval h0 = varpropto_coi(reg, t0, ob.I0, CoiDir::Forward);
  Interval h1 = varpropto_coi(reg, t1, ob.I1, CoiDir::Forward);
  ArchElement lhs = arch_ref(reg, t0.right_name, t0.right, h0, 1);
  ArchElement rhs = arch_ref(reg, t1.right_name, t1.right, h1, ob.delta);
  return arch_eq(reg, lhs, rhs);
}

ArchElement phi0_eval(const Registry& reg, const CoiCollection& coll, const WordPtr& W,
                      const FineWitness& witness) {
  (void)W;
  std::vector<ArchFactor> fs;
  for (const auto& factor : witness.factors) {
    if (factor.kind == FineFactor::Kind::SingleLetter) continue;
    const CoiTriple& tx = coll.at(factor.family_index);
    Interval hull = varpropto_coi(reg, tx, factor.family_interval, CoiDir::Forward);
    ArchFactor f;
    f.word_name = tx.right_name;
    f.word = tx.right;
    f.interval = hull;
    f.sign = factor.inverted ? -1 : 1;
    fs.push_back(std::move(f));
  }
  return ArchElement::from_factors(reg, std::move(fs));
}

AuditReport audit(const Registry& reg, const CoiCollection& coll, std::int64_t depth,
                  std::size_t budget) {
  AuditReport rep;
  rep.obligations = enumerate_obligations(reg, coll, depth, budget);
  rep.verdicts.assign(rep.obligations.size(), ArchEq::Unknown);
  parallel_for(static_cast<std::int64_t>(rep.obligations.size()), [&](std::int64_t i) {
    rep.verdicts[i] = discharge(reg, coll, rep.obligations[i]);
  });
  for (auto v : rep.verdicts)
    (v == ArchEq::Equal ? rep.equal : rep.unknown) += 1;
  return rep;
}

}  // namespace tw
