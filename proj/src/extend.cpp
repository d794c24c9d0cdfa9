#include "tw/extend.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace tw {

WordPtr cat_with_prefixes(std::vector<WordPtr> pieces, std::vector<PiecePrefix>* out) {
  std::vector<WordPtr> flat;
  std::vector<PiecePrefix> pps;
  for (const auto& pc : pieces) {
    PiecePrefix pp;
    pp.base = static_cast<std::int64_t>(flat.size());
    if (!pc || pc->kind() == WordExpr::Kind::Empty) {
      pp.span = 0;
    } else if (pc->kind() == WordExpr::Kind::Cat) {
      pp.span = static_cast<std::int64_t>(pc->parts().size());
      for (const auto& q : pc->parts()) flat.push_back(q);
    } else {
      pp.span = 1;
      flat.push_back(pc);
    }
    pps.push_back(pp);
  }
  bool single = flat.size() <= 1;
  for (auto& pp : pps) pp.single = single;
  if (out) *out = std::move(pps);
  return w_cat(flat);
}

std::vector<PathSeg> apply_piece_prefix(const PiecePrefix& pp,
                                        const std::vector<PathSeg>& inner) {
  if (pp.span == 0) throw std::logic_error("position inside a dropped piece");
  if (pp.single) return inner;
  std::vector<PathSeg> out;
  if (pp.span > 1) {
    if (inner.empty() || inner[0].kind != PathSeg::Kind::CatPart)
      throw std::logic_error("inlined piece position missing cat segment");
    out = inner;
    out[0].idx += pp.base;
    return out;
  }
  out.push_back(PathSeg::cat(pp.base));
  out.insert(out.end(), inner.begin(), inner.end());
  return out;
}

namespace {

using PosMap = std::function<Position(const Position&)>;

// Rewrites an absolute path of the source word into the new word.
using RootFn = std::function<std::vector<PathSeg>(const std::vector<PathSeg>&)>;

RootFn make_root(PiecePrefix pp, bool rev, PosMap map) {
  return [pp, rev, map](const std::vector<PathSeg>& abs) {
    Position p;
    p.path = abs;
    std::vector<PathSeg> local;
    if (rev) local.push_back(PathSeg::rev());
    std::vector<PathSeg> mapped = map(p).path;
    local.insert(local.end(), mapped.begin(), mapped.end());
    return apply_piece_prefix(pp, local);
  };
}

RootFn identity_root() {
  return [](const std::vector<PathSeg>& abs) { return abs; };
}

// Transports a (clipped) segment into a new triple via per-side path
// rewrites. Term schedules whose host region was dissected by a subword are
// split: cycles that landed in materialized pieces become explicit point
// pairs, and the surviving tail re-roots at the mapped region.
void transport_seg(const Registry& reg, const CoiTriple& source, const CoiSeg& seg,
                   const RootFn& lroot, const RootFn& rroot, std::vector<CoiSeg>* out) {
  if (seg.kind == CoiSeg::Kind::PointPairs) {
    CoiSeg ns = seg;
    ns.prefix_l.clear();
    ns.prefix_r.clear();
    ns.pairs.clear();
    for (const auto& [l, r] : seg.pairs) {
      Position nl;
      nl.path = lroot(l.prefixed(seg.prefix_l).path);
      Position nr;
      nr.path = rroot(r.prefixed(seg.prefix_r).path);
      ns.pairs.emplace_back(nl, nr);
    }
    if (!ns.pairs.empty()) out->push_back(std::move(ns));
    return;
  }
  if (seg.kind == CoiSeg::Kind::SitePaired) {
    CoiSeg ns = seg;
    ns.prefix_l = lroot(seg.prefix_l);
    ns.prefix_r = rroot(seg.prefix_r);
    out->push_back(std::move(ns));
    return;
  }
  // TermPaired
  auto anchor_l = [&](std::int64_t j) {
    return term_anchor_abs(reg, source.left, seg.prefix_l, seg.slot_l, j);
  };
  auto anchor_r = [&](std::int64_t j) {
    return term_anchor_abs(reg, source.right, seg.prefix_r, seg.slot_r, j + seg.shift);
  };
  auto emit_pairs = [&](std::int64_t lo, std::int64_t hi_incl, CoiSeg* pairs_seg) {
    for (std::int64_t j = lo; j <= hi_incl; ++j) {
      Position nl;
      nl.path = lroot(anchor_l(j).path);
      Position nr;
      nr.path = rroot(anchor_r(j).path);
      pairs_seg->pairs.emplace_back(nl, nr);
    }
  };
  // parent region of a mapped anchor, when it still addresses an omega term
  auto tail_parent = [](const std::vector<PathSeg>& path)
      -> std::optional<std::vector<PathSeg>> {
    if (path.empty() || path.back().kind != PathSeg::Kind::OmegaIdx) return std::nullopt;
    std::vector<PathSeg> p = path;
    p.pop_back();
    return p;
  };
  CoiSeg pts;
  pts.kind = CoiSeg::Kind::PointPairs;
  pts.sign = seg.sign;
  if (seg.to_cycle) {
    emit_pairs(seg.from_cycle, *seg.to_cycle, &pts);
    if (!pts.pairs.empty()) out->push_back(std::move(pts));
    return;
  }
  // find the first cycle whose mapped anchors live in a stable tail region
  std::int64_t j = seg.from_cycle;
  std::optional<std::vector<PathSeg>> pl, pr;
  for (std::int64_t probe = 0; probe < 64; ++probe, ++j) {
    auto a = tail_parent(lroot(anchor_l(j).path));
    auto b = tail_parent(lroot(anchor_l(j + 1).path));
    auto c = tail_parent(rroot(anchor_r(j).path));
    auto d = tail_parent(rroot(anchor_r(j + 1).path));
    if (a && b && c && d && *a == *b && *c == *d) {
      pl = a;
      pr = c;
      break;
    }
  }
  if (!pl) throw std::logic_error("term schedule does not stabilize under transport");
  emit_pairs(seg.from_cycle, j - 1, &pts);
  if (!pts.pairs.empty()) out->push_back(std::move(pts));
  CoiSeg tail = seg;
  tail.prefix_l = *pl;
  tail.prefix_r = *pr;
  tail.from_cycle = j;
  out->push_back(std::move(tail));
}

Letter fresh_letter(const Registry& reg, std::int64_t index) {
  if (auto h = reg.infinite_order_letter(index)) return *h;
  return reg.nontrivial_letter(index);
}

std::optional<Position> first_left_pick(const Registry& reg, const CoiTriple& t) {
  for (const auto& seg : t.map.segs) {
    switch (seg.kind) {
      case CoiSeg::Kind::PointPairs:
        if (!seg.pairs.empty()) return seg.pairs.front().first.prefixed(seg.prefix_l);
        break;
      case CoiSeg::Kind::TermPaired: {
        WordPtr node = coi_resolve_region(reg, t.left, seg.prefix_l);
        const OmegaRule& r = node->omega();
        std::int64_t P = static_cast<std::int64_t>(r.prefix.size());
        std::int64_t S = static_cast<std::int64_t>(r.slots.size());
        Position p;
        p.path = seg.prefix_l;
        p.path.push_back(PathSeg::omega(
            P + (seg.from_cycle - r.start) * S + static_cast<std::int64_t>(seg.slot_l)));
        return p;
      }
      case CoiSeg::Kind::SitePaired:
        break;  // dense picks: no canonical first point; try other segments
    }
  }
  return std::nullopt;
}

}  // namespace

// ---------------------------------------------------------------------------
// extend_representative
// ---------------------------------------------------------------------------

CoiTriple extend_representative(const Registry& reg, const CoiCollection& coll,
                                const std::string& new_name, const WordPtr& W,
                                const FineWitness& witness, Transcript* tr) {
  struct FactorPlan {
    bool is_letter = false;
    Letter letter;
    std::size_t family = 0;
    bool inverted = false;
    Interval family_interval;
    WordPtr left_piece;
    bool infinite = false;
    SubwordResult lsub;  // map into the family word
  };
  std::vector<FactorPlan> plans;
  for (const auto& f : witness.factors) {
    FactorPlan p;
    if (f.kind == FineFactor::Kind::SingleLetter) {
      p.is_letter = true;
      p.letter = f.letter;
      p.left_piece = w_lit(reg, f.letter);
    } else {
      p.family = f.family_index;
      p.inverted = f.inverted;
      p.family_interval = f.family_interval;
      const CoiTriple& tx = coll.at(f.family_index);
      p.lsub = subword_with_map(reg, tx.left, f.family_interval);
      p.left_piece = f.inverted ? w_inv(reg, p.lsub.word) : p.lsub.word;
      p.infinite = !word_is_finite(*p.lsub.word);
    }
    plans.push_back(std::move(p));
  }

  // rebuilt left word; must agree with W at the witness depth
  std::vector<WordPtr> left_pieces;
  for (const auto& p : plans) left_pieces.push_back(p.left_piece);
  std::vector<PiecePrefix> lpp;
  WordPtr left = cat_with_prefixes(left_pieces, &lpp);
  if (!equiv_depth(reg, left, W, witness.depth))
    throw std::invalid_argument("witness does not reassemble the word at its depth");

  // finite case: one fresh degree-0 letter
  std::vector<std::size_t> inf_idx;
  for (std::size_t i = 0; i < plans.size(); ++i)
    if (plans[i].infinite) inf_idx.push_back(i);
  if (inf_idx.empty()) {
    CoiTriple t;
    t.name = new_name;
    t.left_name = new_name + ".W";
    t.left = left;
    t.right_name = new_name + ".U";
    Letter h = fresh_letter(reg, 0);
    if (tr) tr->note("representative: finite witness, fresh letter g0=" + h.value.str());
    if (left->kind() == WordExpr::Kind::Empty) {
      t.right = w_empty();
      return t;
    }
    t.right = w_lit(reg, h);
    auto lp = first_position(reg, left);
    if (!lp) throw std::invalid_argument("finite word without a first letter");
    CoiSeg seg;
    seg.kind = CoiSeg::Kind::PointPairs;
    seg.pairs.emplace_back(*lp, Position{});
    t.map.segs.push_back(seg);
    return t;
  }

  // image pieces and separators
  struct RightPiece {
    WordPtr word;
    std::optional<std::size_t> plan;  // absent for separators
    SubwordResult rsub;
    bool inverted = false;
  };
  std::vector<RightPiece> rights;
  for (std::size_t k = 0; k < inf_idx.size(); ++k) {
    const FactorPlan& p = plans[inf_idx[k]];
    const CoiTriple& tx = coll.at(p.family);
    Interval hull = varpropto_coi(reg, tx, p.family_interval, CoiDir::Forward);
    RightPiece rp;
    rp.plan = inf_idx[k];
    rp.rsub = subword_with_map(reg, tx.right, hull);
    rp.inverted = p.inverted;
    rp.word = p.inverted ? w_inv(reg, rp.rsub.word) : rp.rsub.word;
    if (!rights.empty()) {
      // separator when the boundary degrees clash
      auto prev_last = last_letter(reg, *rights.back().word);
      auto next_first = first_letter(reg, *rp.word);
      if (prev_last && next_first && prev_last->index == next_first->index) {
        Letter h = fresh_letter(reg, prev_last->index + 1);
        RightPiece sep;
        sep.word = w_lit(reg, h);
        rights.push_back(sep);
        if (tr)
          tr->note("representative: separator at degree " + std::to_string(h.index));
      }
    }
    rights.push_back(std::move(rp));
  }
  std::vector<WordPtr> right_words;
  for (const auto& rp : rights) right_words.push_back(rp.word);
  std::vector<PiecePrefix> rpp;
  WordPtr right = cat_with_prefixes(right_words, &rpp);

  CoiTriple t;
  t.name = new_name;
  t.left_name = new_name + ".W";
  t.left = left;
  t.right_name = new_name + ".U";
  t.right = right;

  // transported segments
  for (std::size_t r = 0; r < rights.size(); ++r) {
    if (!rights[r].plan) continue;
    std::size_t pi = *rights[r].plan;
    const FactorPlan& p = plans[pi];
    const CoiTriple& tx = coll.at(p.family);
    RootFn lroot = make_root(lpp[pi], p.inverted, p.lsub.map);
    RootFn rroot = make_root(rpp[r], rights[r].inverted, rights[r].rsub.map);
    for (const auto& seg : tx.map.segs) {
      auto clipped = clip_seg(reg, tx, seg, false, p.family_interval);
      if (!clipped) continue;
      transport_seg(reg, tx, *clipped, lroot, rroot, &t.map.segs);
    }
  }
  if (tr)
    tr->note("representative " + new_name + ": " + std::to_string(inf_idx.size()) +
             " infinite factors, " + std::to_string(t.map.segs.size()) + " segments");
  return t;
}

// ---------------------------------------------------------------------------
// raise_degree
// ---------------------------------------------------------------------------

CoiTriple raise_degree(const Registry& reg, const CoiTriple& t, std::int64_t N,
                       const std::string& new_name, Transcript* tr) {
  FiniteWord lows = project(reg, t.right, N + 2);
  if (lows.empty()) {
    CoiTriple out = t;
    out.name = new_name;
    if (tr) tr->note("raise " + new_name + ": already above degree " + std::to_string(N + 2));
    return out;
  }
  Letter h = fresh_letter(reg, N + 1);
  if (word_is_finite(*t.right)) {
    CoiTriple out;
    out.name = new_name;
    out.left_name = t.left_name;
    out.left = t.left;
    out.right_name = new_name + ".U";
    out.right = w_lit(reg, h);
    auto lp = first_left_pick(reg, t);
    if (!lp) lp = first_position(reg, t.left);
    if (lp) {
      CoiSeg seg;
      seg.kind = CoiSeg::Kind::PointPairs;
      Position inner;
      inner.path = lp->path;
      seg.pairs.emplace_back(inner, Position{});
      out.map.segs.push_back(seg);
    }
    if (tr) tr->note("raise " + new_name + ": finite right word collapsed to one letter");
    return out;
  }

  // adjacency runs of the low letters
  std::vector<std::pair<std::size_t, std::size_t>> runs;  // [from, to] inclusive
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= lows.size(); ++i) {
    bool split = i == lows.size();
    if (!split) {
      Interval between{Cut::open(lows.at(i - 1).pos), Cut::open(lows.at(i).pos)};
      WordPtr gap = subword(reg, t.right, between);
      split = gap->kind() != WordExpr::Kind::Empty;
    }
    if (split) {
      runs.push_back({begin, i - 1});
      begin = i;
    }
  }

  // alternating block intervals and separator letters
  struct Region {
    bool is_sep = false;
    Interval block;
  };
  std::vector<Region> regions;
  {
    Interval lead{Cut::inf(), Cut::open(lows.at(runs.front().first).pos)};
    regions.push_back({false, lead});
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    regions.push_back({true, {}});
    Cut lo = Cut::open(lows.at(runs[k].second).pos);
    Cut hi = k + 1 < runs.size() ? Cut::open(lows.at(runs[k + 1].first).pos) : Cut::inf();
    regions.push_back({false, Interval{lo, hi}});
  }

  std::vector<WordPtr> pieces;
  std::vector<std::optional<SubwordResult>> maps;
  for (const auto& r : regions) {
    if (r.is_sep) {
      pieces.push_back(w_lit(reg, h));
      maps.push_back(std::nullopt);
    } else {
      SubwordResult sr = subword_with_map(reg, t.right, r.block);
      pieces.push_back(sr.word);
      maps.push_back(std::move(sr));
    }
  }
  std::vector<PiecePrefix> rpp;
  WordPtr right = cat_with_prefixes(pieces, &rpp);

  CoiTriple out;
  out.name = new_name;
  out.left_name = t.left_name;
  out.left = t.left;
  out.right_name = new_name + ".U";
  out.right = right;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    if (regions[k].is_sep || pieces[k]->kind() == WordExpr::Kind::Empty) continue;
    RootFn rroot = make_root(rpp[k], false, maps[k]->map);
    for (const auto& seg : t.map.segs) {
      auto clipped = clip_seg(reg, t, seg, true, regions[k].block);
      if (!clipped) continue;
      transport_seg(reg, t, *clipped, identity_root(), rroot, &out.map.segs);
    }
  }
  if (tr)
    tr->note("raise " + new_name + ": " + std::to_string(runs.size()) +
             " low runs replaced at degree " + std::to_string(N + 1));
  return out;
}

// ---------------------------------------------------------------------------
// avoid_exponents / diagonal_word
// ---------------------------------------------------------------------------

namespace {

// smallest r >= 1 with base^(sign*r) == target, if any
std::optional<std::int64_t> solve_power(const GroupSpec& spec, const GroupElement& base,
                                        int sign, const GroupElement& target) {
  if (spec.kind() == GroupSpec::Kind::InfiniteCyclic) {
    std::int64_t b = base.scalar() * sign;
    if (b == 0) return std::nullopt;
    if (target.scalar() % b != 0) return std::nullopt;
    std::int64_t r = target.scalar() / b;
    return r >= 1 ? std::optional<std::int64_t>(r) : std::nullopt;
  }
  GroupElement acc;
  GroupElement step = sign >= 0 ? base : g_inv(spec, base);
  for (std::int64_t r = 1; r <= 64; ++r) {
    acc = g_mul(spec, acc, step);
    if (acc == target) return r;
  }
  return std::nullopt;
}

}  // namespace

void avoid_collect(const Registry& reg, const std::vector<WordPtr>& family,
                   const AvoidProfile& profile, std::int64_t depth, std::size_t budget,
                   AvoidAccum* acc) {
  DegreeProfile dp{profile.degrees, profile.extends_down, profile.extends_up};
  for (std::size_t x = 0; x < family.size(); ++x) {
    FiniteWord p = project(reg, *family[x], depth);
    std::vector<PosLetter> invls;
    for (auto it = p.letters().rbegin(); it != p.letters().rend(); ++it)
      invls.push_back({it->pos, Letter{it->letter.index,
                                       g_inv(reg.at(it->letter.index), it->letter.value)}});
    FiniteWord pi(std::move(invls));
    for (int side = 0; side < 2; ++side) {
      const FiniteWord& view = side == 0 ? p : pi;
      for (const auto& e : enumerate_degree_embeddings(dp, view)) {
        if (acc->pending.size() >= budget) return;
        bool recorded = false;
        for (const auto& slot : profile.slots) {
          if (slot.at >= e.length) continue;
          const Letter& host = view.at(e.start + slot.at).letter;
          auto r =
              solve_power(reg.at(slot.base.index), slot.base.value, slot.sign, host.value);
          if (r) acc->forbidden[slot.key].insert(*r);
          if (!recorded) {
            AvoidDefeat d;
            d.family_index = x;
            d.inverted = side == 1;
            d.start = e.start;
            d.key = slot.key;
            if (r)
              d.required = *r;
            else
              d.impossible = true;
            acc->pending.push_back(d);
            recorded = true;
          }
        }
        if (!recorded) acc->undefeated += 1;
      }
    }
  }
}

ExponentFn avoid_choose(AvoidAccum* acc) {
  ExponentFn q;
  q.dflt = {0, 1};
  for (const auto& [key, bad] : acc->forbidden) {
    std::int64_t pick = 1;
    while (bad.count(pick)) ++pick;
    if (pick != 1) q.overrides[key] = pick;
  }
  for (auto& d : acc->pending) d.chosen = q.at(d.key);
  return q;
}

AvoidOutcome avoid_exponents(const Registry& reg, const std::vector<WordPtr>& family,
                             const AvoidProfile& profile, std::int64_t depth,
                             std::size_t budget) {
  AvoidAccum acc;
  avoid_collect(reg, family, profile, depth, budget, &acc);
  AvoidOutcome out;
  out.depth = depth;
  out.q = avoid_choose(&acc);
  out.defeats = std::move(acc.pending);
  out.undefeated = acc.undefeated;
  return out;
}

std::int64_t z_class(std::int64_t n) {
  std::int64_t v = 0, x = n + 1;
  while (x % 2 == 0) {
    x /= 2;
    ++v;
  }
  return v;
}

std::int64_t z_min(std::int64_t m) { return (std::int64_t(1) << m) - 1; }

DiagonalResult diagonal_word(const Registry& reg, const std::vector<WordPtr>& family,
                             std::int64_t depth, Transcript* tr) {
  DiagonalResult res;
  res.outcome.depth = depth;
  // Defeat every visible suffix cut: profiles [c..depth] with exponent slots
  // at every index, so whichever terminal window a decomposition would need,
  // some slot inside it disagrees.
  AvoidAccum acc;
  for (std::int64_t c = 0; c <= depth; ++c) {
    AvoidProfile prof;
    prof.extends_up = true;
    for (std::int64_t n = c; n <= depth; ++n) {
      auto h = reg.infinite_order_letter(n);
      if (!h)
        throw std::invalid_argument("registry lacks an infinite-order element at " +
                                    std::to_string(n));
      prof.slots.push_back({static_cast<std::size_t>(n - c), n, *h, 1});
      prof.degrees.push_back(n);
    }
    avoid_collect(reg, family, prof, depth, 4096, &acc);
  }
  res.outcome.q = avoid_choose(&acc);
  res.outcome.defeats = acc.pending;
  res.outcome.undefeated = acc.undefeated;
  if (tr)
    tr->note("diagonal: defeated " + std::to_string(acc.pending.size()) +
             " suffix embeddings across " + std::to_string(depth + 1) + " cut profiles");
  OmegaRule r;
  TailSlot s;
  s.index = {1, 0};
  s.exp = res.outcome.q;
  r.slots.push_back(s);
  res.word = w_omega(reg, r);
  return res;
}

// ---------------------------------------------------------------------------
// extend_omega
// ---------------------------------------------------------------------------

OmegaExtension extend_omega(const Registry& reg, const CoiCollection& coll,
                            const std::string& new_name, const WordPtr& W,
                            const std::vector<FineWitness>& term_witnesses,
                            std::int64_t depth, std::size_t budget) {
  if (W->kind() != WordExpr::Kind::OmegaCat)
    throw std::invalid_argument("extend_omega needs an omega concatenation");
  const OmegaRule& rule = W->omega();
  const std::int64_t P = static_cast<std::int64_t>(rule.prefix.size());
  const std::int64_t S = static_cast<std::int64_t>(rule.slots.size());
  // materialize whole cycles so the leftover tail re-anchors cleanly
  std::int64_t T = P;
  std::int64_t j_T = rule.start;
  while (T < static_cast<std::int64_t>(term_witnesses.size())) {
    T += S;
    j_T += 1;
  }
  if (T != static_cast<std::int64_t>(term_witnesses.size()))
    throw std::invalid_argument("witness count must cover the prefix plus whole cycles");

  OmegaExtension ext;
  ext.transcript.note("omega extension " + new_name + ": materializing " +
                      std::to_string(T) + " terms");

  // per-term representative triples raised above m+1
  CoiCollection working = coll;
  std::vector<WordPtr> left_terms;
  for (std::int64_t m = 0; m < T; ++m) {
    // reconstruct the m-th term of W
    WordPtr term;
    if (m < P) {
      term = rule.prefix[m];
    } else {
      const TailSlot& slot = rule.slots[(m - P) % S];
      std::int64_t cycle = rule.start + (m - P) / S;
      if (slot.kind == TailSlot::Kind::Ruler) {
        term = ruler_word(reg, slot.index(cycle));
      } else {
        OmegaRule one;
        one.slots = {slot};
        one.start = cycle;
        FiniteWord f = project(reg, w_omega(reg, one), slot.index(cycle));
        term = w_lit(reg, f.at(0).letter);
      }
    }
    CoiTriple rep = extend_representative(reg, working, new_name + ".rep" + std::to_string(m),
                                          term, term_witnesses[m], &ext.transcript);
    CoiTriple raised =
        raise_degree(reg, rep, m + 1, new_name + ".blk" + std::to_string(m), &ext.transcript);
    auto d = d_word(reg, raised.right);
    if (!d || *d <= m + 1)
      throw std::logic_error("raised block failed d > m+1 at m=" + std::to_string(m));
    left_terms.push_back(raised.left);
    ext.block_triples.push_back(raised);
    working.add(raised);
  }

  // separator exponents from the avoidance, per partition class
  std::vector<WordPtr> defeat_family;
  for (const auto& t : coll.triples()) defeat_family.push_back(t.right);
  for (const auto& t : ext.block_triples) defeat_family.push_back(t.right);
  ExponentFn rsched;
  {
    // degree word of the tail from each separator start, with exponent slots
    // on every separator: defeats all terminal windows visible at the depth
    std::vector<std::vector<std::int64_t>> block_degs(T);
    for (std::int64_t m = 0; m < T; ++m) {
      FiniteWord f = project(reg, ext.block_triples[m].right, depth);
      for (const auto& pl : f.letters()) block_degs[m].push_back(pl.letter.index);
    }
    AvoidAccum acc;
    for (std::int64_t n0 = 0; n0 < T; ++n0) {
      AvoidProfile prof;
      prof.extends_up = true;
      for (std::int64_t n = n0; n < T; ++n) {
        auto h = reg.infinite_order_letter(n);
        if (!h)
          throw std::invalid_argument("registry lacks infinite-order letter at " +
                                      std::to_string(n));
        prof.slots.push_back({prof.degrees.size(), n, *h, 1});
        prof.degrees.push_back(n);
        if (n + 1 < T)
          for (std::int64_t d : block_degs[n + 1])
            if (d <= depth) prof.degrees.push_back(d);
      }
      avoid_collect(reg, defeat_family, prof, depth, budget, &acc);
    }
    rsched = avoid_choose(&acc);
    ext.transcript.note("omega separators: defeated " + std::to_string(acc.pending.size()) +
                        " embeddings across " + std::to_string(T) + " cut profiles");
  }

  // assemble U
  std::vector<WordPtr> right_pieces;
  std::vector<Letter> seps;
  for (std::int64_t m = 0; m < T; ++m) {
    right_pieces.push_back(ext.block_triples[m].right);
    auto k = reg.infinite_order_letter(m);
    if (!k)
      throw std::invalid_argument("registry lacks infinite-order letter at " +
                                  std::to_string(m));
    seps.push_back(*k);
    right_pieces.push_back(w_power(reg, *k, rsched.at(m)));
  }
  OmegaRule urule;
  urule.prefix = right_pieces;
  {
    TailSlot block;  // surrogate blocks: d = j + 2 > j + 1
    block.index = {1, 2};
    TailSlot sep;
    sep.index = {1, 0};
    sep.exp = rsched;
    urule.slots = {block, sep};
    urule.start = T;
  }
  WordPtr right = w_omega(reg, urule);

  // rebuilt left: materialized terms, then the original tail re-anchored
  OmegaRule lrule;
  lrule.prefix = left_terms;
  lrule.slots = rule.slots;
  lrule.start = j_T;
  WordPtr left = w_omega(reg, lrule);

  CoiTriple t;
  t.name = new_name;
  t.left_name = new_name + ".W";
  t.left = left;
  t.right_name = new_name + ".U";
  t.right = right;
  // transported per-term segments
  for (std::int64_t m = 0; m < T; ++m) {
    const CoiTriple& bt = ext.block_triples[m];
    auto lift = [](PathSeg head) -> RootFn {
      return [head](const std::vector<PathSeg>& abs) {
        std::vector<PathSeg> out{head};
        out.insert(out.end(), abs.begin(), abs.end());
        return out;
      };
    };
    for (const CoiSeg& seg : bt.map.segs)
      transport_seg(reg, bt, seg, lift(PathSeg::omega(m)), lift(PathSeg::omega(2 * m)),
                    &t.map.segs);
  }
  // tail schedule: left cycles pair with the surrogate blocks
  if (!rule.slots.empty() && rule.slots[0].kind == TailSlot::Kind::Power) {
    CoiSeg tail;
    tail.kind = CoiSeg::Kind::TermPaired;
    tail.from_cycle = j_T;
    tail.shift = T - j_T;
    tail.slot_l = 0;
    tail.slot_r = 0;
    t.map.segs.push_back(tail);
  }
  ext.transcript.note("omega extension " + new_name + ": " +
                      std::to_string(t.map.segs.size()) + " segments, tail from cycle " +
                      std::to_string(j_T));
  ext.triple = std::move(t);
  return ext;
}

// ---------------------------------------------------------------------------
// extend_qshuffle
// ---------------------------------------------------------------------------

namespace {

// Deterministic enumeration of nonempty open rational windows.
std::pair<Rational, Rational> window_j(std::int64_t j) {
  // Cantor-diagonal over ordered pairs of distinct rationals
  std::int64_t k = 0;
  for (std::int64_t d = 1;; ++d) {
    for (std::int64_t u = 0; u <= d; ++u) {
      std::int64_t v = d - u;
      if (u == v) continue;
      Rational a = nth_rational(u), b = nth_rational(v);
      if (a == b) continue;
      if (k == j) return {std::min(a, b), std::max(a, b)};
      ++k;
    }
  }
}

std::pair<std::int64_t, std::int64_t> cantor_unpair(std::int64_t k) {
  std::int64_t s = 0;
  while ((s + 1) * (s + 2) / 2 <= k) ++s;
  std::int64_t a = k - s * (s + 1) / 2;
  return {a, s - a};
}

}  // namespace

QExtension extend_qshuffle(const Registry& reg, const CoiCollection& coll,
                           const std::string& new_name, const WordPtr& W,
                           const std::vector<FineWitness>& block_witnesses,
                           std::int64_t depth, std::size_t budget) {
  if (W->kind() != WordExpr::Kind::QShuffle)
    throw std::invalid_argument("extend_qshuffle needs a Q-shuffle word");
  const QRule& q = W->qrule();
  QExtension ext;

  // live degrees to materialize
  std::vector<std::int64_t> live;
  for (const auto& [m, fs] : q.fibers) {
    (void)fs;
    if (!q_live_fibers(q, m).empty() && m <= depth) live.push_back(m);
  }
  for (std::int64_t m = q.tail_start; m <= depth; ++m)
    if (!q.fibers.count(m) && !q_live_fibers(q, m).empty()) live.push_back(m);
  std::sort(live.begin(), live.end());
  if (live.size() != block_witnesses.size())
    throw std::invalid_argument("need one witness per live block degree (got " +
                                std::to_string(block_witnesses.size()) + ", want " +
                                std::to_string(live.size()) + ")");

  // deduplication: distinct blocks must not be equivalent up to sign
  for (std::size_t i = 0; i < live.size(); ++i) {
    WordPtr bi = q_site_word(reg, q, live[i]);
    for (std::size_t k = i + 1; k < live.size(); ++k) {
      WordPtr bk = q_site_word(reg, q, live[k]);
      if (equiv_depth(reg, bi, bk, depth) ||
          equiv_depth(reg, bi, w_inv(reg, bk), depth))
        throw std::invalid_argument("duplicate blocks at degrees " +
                                    std::to_string(live[i]) + " and " +
                                    std::to_string(live[k]));
    }
  }

  // per-block representatives raised above m
  CoiCollection working = coll;
  std::map<std::int64_t, CoiTriple> blocks;
  for (std::size_t i = 0; i < live.size(); ++i) {
    std::int64_t m = live[i];
    WordPtr bm = q_site_word(reg, q, m);
    CoiTriple rep = extend_representative(reg, working, new_name + ".rep" + std::to_string(m),
                                          bm, block_witnesses[i], &ext.transcript);
    CoiTriple raised =
        raise_degree(reg, rep, m, new_name + ".blk" + std::to_string(m), &ext.transcript);
    auto d = d_word(reg, raised.right);
    if (!d || *d <= m) throw std::logic_error("raised block failed d > m");
    blocks.emplace(m, raised);
    ext.block_triples.push_back(raised);
    working.add(raised);
  }

  // the paper's schedule: windows J_j, pairing L, greedy delta(k), classes Z_j
  std::vector<WordPtr> defeat_family;
  for (const auto& t : coll.triples()) defeat_family.push_back(t.right);
  for (const auto& t : ext.block_triples) defeat_family.push_back(t.right);

  auto window_degrees = [&](const Rational& a, const Rational& b) {
    // degrees m whose fibers meet the open window (a, b), up to depth
    std::vector<std::int64_t> out;
    for (std::int64_t m = 0; m <= depth; ++m) {
      for (const auto& f : q_live_fibers(q, m))
        if (f.site > a && f.site < b) {
          out.push_back(m);
          break;
        }
    }
    return out;
  };

  ext.R.dflt = {0, 1};
  std::set<std::int64_t> used;
  std::map<std::int64_t, std::vector<std::int64_t>> zclass;  // j -> delta values
  std::int64_t scanned = 0;
  for (std::int64_t k = 0; used.size() < live.size() && scanned < 4 * (std::int64_t)budget;
       ++k, ++scanned) {
    auto [j0, j1] = cantor_unpair(k);
    (void)j1;
    auto [a, b] = window_j(j0);
    std::int64_t delta = -1;
    for (std::int64_t m : window_degrees(a, b)) {
      if (!used.count(m)) {
        delta = m;
        break;
      }
    }
    if (delta < 0) continue;
    used.insert(delta);
    zclass[j0].push_back(delta);
  }
  // one avoidance run per window class that received degrees
  for (const auto& [j, ms] : zclass) {
    auto [a, b] = window_j(j);
    // visible degree word of prod_{s in J_j} U_s: for each site in (a,b) with
    // degree m, the template contributes [m, (block degs <= depth), m]
    struct SiteRef {
      Rational site;
      std::int64_t m;
      int sign;
    };
    std::vector<SiteRef> sites;
    for (std::int64_t m = 0; m <= depth; ++m)
      for (const auto& f : q_live_fibers(q, m))
        if (f.site > a && f.site < b) sites.push_back({f.site, m, f.sign});
    std::sort(sites.begin(), sites.end(),
              [](const SiteRef& x, const SiteRef& y) { return x.site < y.site; });
    AvoidProfile prof;
    prof.extends_down = true;
    prof.extends_up = true;
    std::set<std::int64_t> slot_keys(ms.begin(), ms.end());
    std::set<std::int64_t> slotted;
    for (const auto& sr : sites) {
      std::vector<std::int64_t> bdegs;
      FiniteWord f = project(reg, blocks.at(sr.m).right, depth);
      for (const auto& pl : f.letters()) bdegs.push_back(pl.letter.index);
      if (sr.sign < 0) std::reverse(bdegs.begin(), bdegs.end());
      // h block h, with the slot on the leading separator
      if (slot_keys.count(sr.m) && !slotted.count(sr.m)) {
        auto h = reg.infinite_order_letter(sr.m);
        if (!h)
          throw std::invalid_argument("registry lacks infinite-order letter at " +
                                      std::to_string(sr.m));
        prof.slots.push_back({prof.degrees.size(), sr.m, *h, sr.sign});
        slotted.insert(sr.m);
      }
      prof.degrees.push_back(sr.m);
      for (auto d : bdegs) prof.degrees.push_back(d);
      prof.degrees.push_back(sr.m);
    }
    AvoidOutcome o = avoid_exponents(reg, defeat_family, prof, depth, budget);
    for (const auto& [key, v] : o.q.overrides) ext.R.overrides[key] = v;
    ext.transcript.note("qshuffle window " + a.str() + ".." + b.str() + ": defeated " +
                        std::to_string(o.defeats.size()) + " embeddings");
  }

  // assemble U: same sites and signs; blocks become h^R U' h^R templates
  QRule uq;
  uq.fibers = q.fibers;
  uq.fiber_tail = q.fiber_tail;
  uq.tail_start = q.tail_start;
  uq.win_lo = q.win_lo;
  uq.win_hi = q.win_hi;
  uq.site_tail.kind = SiteTail::Kind::SepBlock;
  uq.site_tail.exp = ext.R;
  std::map<std::int64_t, std::vector<PiecePrefix>> tpl_prefix;
  for (std::int64_t m : live) {
    auto h = reg.infinite_order_letter(m);
    if (!h)
      throw std::invalid_argument("registry lacks infinite-order letter at " +
                                  std::to_string(m));
    WordPtr sep = w_power(reg, *h, ext.R.at(m));
    std::vector<PiecePrefix> pp;
    uq.site_words[m] = cat_with_prefixes({sep, blocks.at(m).right, sep}, &pp);
    tpl_prefix[m] = pp;
  }
  WordPtr right = w_qshuffle(reg, uq);

  // rebuilt left word: same shuffle with rebuilt blocks
  QRule lq = q;
  for (std::int64_t m : live) lq.site_words[m] = blocks.at(m).left;
  WordPtr left = w_qshuffle(reg, lq);

  CoiTriple t;
  t.name = new_name;
  t.left_name = new_name + ".W";
  t.left = left;
  t.right_name = new_name + ".U";
  t.right = right;
  // per-site transported segments for the materialized fibers
  for (std::int64_t m : live) {
    const CoiTriple& bt = blocks.at(m);
    for (const auto& f : q_live_fibers(q, m)) {
      PiecePrefix block_pp = tpl_prefix[m][1];
      bool rev = f.sign < 0;
      Rational site = f.site;
      RootFn lroot = [site, rev](const std::vector<PathSeg>& abs) {
        std::vector<PathSeg> out{PathSeg::rat(site)};
        if (rev) out.push_back(PathSeg::rev());
        out.insert(out.end(), abs.begin(), abs.end());
        return out;
      };
      RootFn rroot = [site, rev, block_pp](const std::vector<PathSeg>& abs) {
        std::vector<PathSeg> out{PathSeg::rat(site)};
        if (rev) out.push_back(PathSeg::rev());
        std::vector<PathSeg> inner = apply_piece_prefix(block_pp, abs);
        out.insert(out.end(), inner.begin(), inner.end());
        return out;
      };
      for (const CoiSeg& seg : bt.map.segs)
        transport_seg(reg, bt, seg, lroot, rroot, &t.map.segs);
    }
  }
  // site schedule for the unbounded tail
  if (q.fiber_tail.kind != FiberTail::Kind::None) {
    CoiSeg tail;
    tail.kind = CoiSeg::Kind::SitePaired;
    tail.from_m = depth + 1;
    tail.site_lo = q.win_lo;
    tail.site_hi = q.win_hi;
    t.map.segs.push_back(tail);
  }
  ext.transcript.note("qshuffle extension " + new_name + ": " +
                      std::to_string(t.map.segs.size()) + " segments");
  ext.triple = std::move(t);
  return ext;
}

bool check_no_spanning_fine(const Registry& reg, const WordPtr& U,
                            const std::vector<WordPtr>& family, std::int64_t depth) {
  if (U->kind() != WordExpr::Kind::QShuffle)
    throw std::invalid_argument("spanning check needs a Q-shuffle word");
  const QRule& q = U->qrule();
  std::vector<Rational> sites;
  for (std::int64_t m = 0; m <= depth; ++m)
    for (const auto& f : q_live_fibers(q, m)) sites.push_back(f.site);
  std::sort(sites.begin(), sites.end());
  for (std::size_t i = 0; i < sites.size(); ++i) {
    for (std::size_t k = i + 1; k < sites.size(); ++k) {
      Position lo;
      lo.path.push_back(PathSeg::rat(sites[i]));
      Position hi;
      hi.path.push_back(PathSeg::rat(sites[k]));
      Interval I{Cut::closed(lo), Cut::closed(hi)};
      WordPtr piece = subword(reg, U, I);
      if (fine_membership_bounded(reg, piece, family, depth).member) return false;
    }
  }
  return true;
}

}  // namespace tw
