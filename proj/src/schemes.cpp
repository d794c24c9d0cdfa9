#include "tw/schemes.hpp"

#include "tw/match.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace tw {

std::optional<Letter> pi(const Registry& reg, const FiniteWord& w,
                         const ReductionComponent& c) {
  if (c.positions.size() < 2)
    throw std::invalid_argument("reduction component needs at least two positions");
  for (std::size_t i = 1; i < c.positions.size(); ++i)
    if (c.positions[i] <= c.positions[i - 1])
      throw std::invalid_argument("component positions must increase");
  GroupElement acc;
  const GroupSpec& spec = reg.at(c.group_index);
  for (std::size_t p : c.positions) {
    const Letter& l = w.at(p).letter;
    if (l.index != c.group_index)
      throw std::invalid_argument("component mixes groups");
    acc = g_mul(spec, acc, l.value);
  }
  if (g_is_identity(spec, acc)) return std::nullopt;
  return Letter{c.group_index, acc};
}

bool validate_scheme(const Registry& reg, const FiniteWord& w, const ReductionScheme& s) {
  std::set<std::size_t> used;
  for (const auto& c : s.components) {
    if (c.positions.size() < 2) return false;
    for (std::size_t p : c.positions) {
      if (p >= w.size()) return false;
      if (w.at(p).letter.index != c.group_index) return false;
      if (!used.insert(p).second) return false;  // disjointness
    }
    for (std::size_t i = 1; i < c.positions.size(); ++i)
      if (c.positions[i] <= c.positions[i - 1]) return false;
  }
  // gap condition: strictly inside every gap, every position is covered by a
  // trivial-product component contained in the gap
  for (const auto& c : s.components) {
    for (std::size_t j = 0; j + 1 < c.positions.size(); ++j) {
      std::size_t lo = c.positions[j], hi = c.positions[j + 1];
      for (std::size_t p = lo + 1; p < hi; ++p) {
        bool covered = false;
        for (const auto& c0 : s.components) {
          if (std::find(c0.positions.begin(), c0.positions.end(), p) ==
              c0.positions.end())
            continue;
          if (c0.positions.front() <= lo || c0.positions.back() >= hi) continue;
          if (pi(reg, w, c0).has_value()) continue;
          covered = true;
          break;
        }
        if (!covered) return false;
      }
    }
  }
  return true;
}

std::optional<ReductionScheme> find_trivializing_scheme(const Registry& reg,
                                                        const FiniteWord& w) {
  for (const auto& pl : w.letters())
    if (g_is_identity(reg.at(pl.letter.index), pl.letter.value))
      throw std::invalid_argument("identity letter present");
  // Replay free reduction; runs that cancel to the identity become components.
  struct Run {
    std::int64_t group;
    GroupElement value;
    std::vector<std::size_t> indices;
  };
  std::vector<Run> stack;
  ReductionScheme scheme;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Letter& l = w.at(i).letter;
    const GroupSpec& spec = reg.at(l.index);
    if (!stack.empty() && stack.back().group == l.index) {
      Run& top = stack.back();
      top.value = g_mul(spec, top.value, l.value);
      top.indices.push_back(i);
      if (g_is_identity(spec, top.value)) {
        scheme.components.push_back({top.indices, top.group});
        stack.pop_back();
      }
    } else {
      stack.push_back({l.index, l.value, {i}});
    }
  }
  if (!stack.empty()) return std::nullopt;
  return scheme;
}

bool letter_has_infinite_order(const Registry& reg, const Letter& l) {
  const GroupSpec& spec = reg.at(l.index);
  // order within a free product: length >= 2 normal forms have infinite order
  std::function<bool(const GroupSpec&, const GroupElement&)> inf =
      [&](const GroupSpec& s, const GroupElement& v) -> bool {
    switch (s.kind()) {
      case GroupSpec::Kind::InfiniteCyclic:
        return v.scalar() != 0;
      case GroupSpec::Kind::FiniteCyclic:
        return false;
      case GroupSpec::Kind::FreeProduct: {
        if (v.factors().empty()) return false;
        if (v.factors().size() >= 2) return true;
        const auto& [side, el] = v.factors().front();
        return inf(side == Side::Left ? s.left() : s.right(), el);
      }
    }
    return false;
  };
  return inf(spec, l.value);
}

// ---------------------------------------------------------------------------
// check_reduced_depth
// ---------------------------------------------------------------------------

namespace {

ReducedVerdict rv(Reduced st, std::string reason) {
  ReducedVerdict v;
  v.status = st;
  v.reason = std::move(reason);
  return v;
}

ReducedVerdict check_impl(const Registry& reg, const WordPtr& w, std::int64_t N);

// Exact decision for structurally finite words.
ReducedVerdict check_finite(const Registry& reg, const WordPtr& w) {
  auto md = finite_max_degree(reg, w);
  FiniteWord f = project(reg, w, md.value_or(0));
  FiniteWord r = free_reduce(reg, f);
  if (r.same_letters(f)) return rv(Reduced::Certified, "finite word freely reduced");
  // locate the first offending adjacent pair
  for (std::size_t i = 0; i + 1 < f.size(); ++i) {
    if (f.at(i).letter.index == f.at(i + 1).letter.index) {
      ReducedVerdict v = rv(Reduced::NotReduced, "adjacent same-group letters");
      v.witness = Interval::closed(f.at(i).pos, f.at(i + 1).pos);
      return v;
    }
  }
  return rv(Reduced::NotReduced, "finite word not in normal form");
}

// Join compatibility for a concatenation A . B, per the normal-form lemma:
// a trivial interval across the join forces mirrored boundary letters, so it
// cannot exist when the boundary groups differ or only one boundary letter
// exists.
enum class Join { Ok, Adjacent, Unknown };

Join join_check(const Registry& reg, const WordPtr& a, const WordPtr& b) {
  auto la = last_letter(reg, *a);
  auto fb = first_letter(reg, *b);
  if (la && fb) return la->index == fb->index ? Join::Adjacent : Join::Ok;
  if (la || fb) return Join::Ok;
  return Join::Unknown;
}

ReducedVerdict check_cat_like(const Registry& reg, const std::vector<WordPtr>& parts,
                              std::int64_t N, const char* what) {
  bool unknown = false;
  for (const auto& p : parts) {
    ReducedVerdict v = check_impl(reg, p, N);
    if (v.status == Reduced::NotReduced) return v;
    if (v.status == Reduced::Unknown) unknown = true;
  }
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    switch (join_check(reg, parts[i], parts[i + 1])) {
      case Join::Adjacent: {
        ReducedVerdict v = rv(Reduced::NotReduced, "same-group letters meet at a join");
        return v;
      }
      case Join::Unknown:
        unknown = true;
        break;
      case Join::Ok:
        break;
    }
  }
  if (unknown) return rv(Reduced::Unknown, std::string(what) + ": join not decidable");
  return rv(Reduced::Certified, std::string(what) + ": parts reduced, joins compatible");
}

// h^r (inner) h^r shape with h of infinite order and d(inner) > m.
bool parse_sep_template(const Registry& reg, const WordPtr& w, std::int64_t m) {
  if (w->kind() != WordExpr::Kind::Cat || w->parts().size() < 3) return false;
  const WordPtr& head = w->parts().front();
  const WordPtr& tail = w->parts().back();
  if (head->kind() != WordExpr::Kind::Lit || tail->kind() != WordExpr::Kind::Lit)
    return false;
  if (head->lit().index != m || tail->lit().index != m) return false;
  if (!letter_has_infinite_order(reg, head->lit())) return false;
  std::vector<WordPtr> inner(w->parts().begin() + 1, w->parts().end() - 1);
  WordPtr in = w_cat(inner);
  auto d = d_word(reg, in);
  return d && *d > m;
}

ReducedVerdict check_impl(const Registry& reg, const WordPtr& w, std::int64_t N) {
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
    case WordExpr::Kind::Lit:
      return rv(Reduced::Certified, "letter");
    case WordExpr::Kind::Inv:
      return check_impl(reg, w->inner(), N);
    case WordExpr::Kind::Cat: {
      if (word_is_finite(*w)) return check_finite(reg, w);
      return check_cat_like(reg, w->parts(), N, "cat");
    }
    case WordExpr::Kind::OmegaCat: {
      // reduced iff every finite prefix concatenation is reduced; each prefix
      // is certified via part + join checks, and tail joins are verified
      // exactly through the affine index maps
      const OmegaRule& rule = w->omega();
      std::vector<WordPtr> terms = rule.prefix;
      std::int64_t cycles = 0;
      std::int64_t j = rule.start;
      // materialize to the escape bound plus margin
      while (cycles < 3 ||
             [&] {
               for (const auto& s : rule.slots)
                 if (s.index(j) <= N) return true;
               return false;
             }()) {
        for (std::size_t s = 0; s < rule.slots.size(); ++s) {
          if (rule.slots[s].kind == TailSlot::Kind::Ruler)
            terms.push_back(ruler_word(reg, rule.slots[s].index(j)));
          else {
            // re-emit via the words module to pick up exponent overrides
            OmegaRule one;
            one.slots = {rule.slots[s]};
            one.start = j;
            WordPtr lw = w_omega(reg, one);
            FiniteWord f = project(reg, lw, rule.slots[s].index(j));
            if (f.empty()) throw std::logic_error("power slot emitted nothing");
            terms.push_back(w_lit(reg, f.at(0).letter));
          }
        }
        ++j;
        ++cycles;
        if (cycles > 2048) break;
      }
      ReducedVerdict v = check_cat_like(reg, terms, N, "omega");
      if (v.status != Reduced::Certified) return v;
      // joins beyond the materialized range: consecutive slot pairs may only
      // collide where their affine index maps agree; check the finitely many
      // integral crossing points
      auto crossing_ok = [&](const AffineMap& f, const AffineMap& g, std::int64_t shift) {
        // compare f(j) vs g(j + shift) for all j >= start
        std::int64_t da = f.a - g.a;
        std::int64_t db = f.b - (g.a * shift + g.b);
        if (da == 0) return db != 0;
        if (db % da != 0) return true;
        std::int64_t root = -db / da;
        return root < rule.start || root < j;  // already covered by materialization
      };
      for (std::size_t s = 0; s + 1 < rule.slots.size(); ++s)
        if (!crossing_ok(rule.slots[s].index, rule.slots[s + 1].index, 0))
          return rv(Reduced::NotReduced, "tail slots collide in degree");
      if (!rule.slots.empty() &&
          !crossing_ok(rule.slots.back().index, rule.slots.front().index, 1))
        return rv(Reduced::NotReduced, "tail slots collide in degree at the cycle wrap");
      return rv(Reduced::Certified, "omega: prefixes reduced, tail joins compatible");
    }
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w->qrule();
      // verdicts for the live site words (tables entirely, tails to depth N)
      std::vector<std::pair<std::int64_t, WordPtr>> live;
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        if (!q_live_fibers(q, m).empty()) live.push_back({m, q_site_word(reg, q, m)});
      }
      std::int64_t tail_hi = std::max<std::int64_t>(N, q.tail_start);
      for (std::int64_t m = q.tail_start; m <= tail_hi; ++m) {
        if (q.fibers.count(m)) continue;
        if (!q_live_fibers(q, m).empty()) live.push_back({m, q_site_word(reg, q, m)});
      }
      bool unknown = false;
      for (const auto& [m, sw] : live) {
        (void)m;
        ReducedVerdict v = check_impl(reg, sw, N);
        if (v.status == Reduced::NotReduced) return v;
        if (v.status == Reduced::Unknown) unknown = true;
      }
      if (q.fiber_tail.kind == FiberTail::Kind::None) {
        // finitely many sites: behave like the ordered concatenation
        std::vector<std::pair<Rational, WordPtr>> ordered;
        for (const auto& [m, fs] : q.fibers) {
          (void)fs;
          for (const auto& f : q_live_fibers(q, m)) {
            WordPtr sw = q_site_word(reg, q, m);
            ordered.push_back({f.site, f.sign >= 0 ? sw : w_inv(reg, sw)});
          }
        }
        std::sort(ordered.begin(), ordered.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<WordPtr> parts;
        for (auto& [s, sw] : ordered) {
          (void)s;
          parts.push_back(sw);
        }
        return check_cat_like(reg, parts, N, "qshuffle(table)");
      }
      // dense site families: no two sites are ever adjacent, so a trivial
      // interval needs a whole minimal block to vanish at its own degree
      auto block_min_projection_nonzero = [&](std::int64_t m, const WordPtr& sw) {
        FiniteWord f = free_reduce(reg, project(reg, *sw, m));
        return !f.empty();
      };
      bool per_degree_unique = q.fiber_tail.kind == FiberTail::Kind::EnumSingleton;
      if (per_degree_unique) {
        for (const auto& [m, fs] : q.fibers)
          if (q_live_fibers(q, m).size() > 1) per_degree_unique = false;
        (void)per_degree_unique;
      }
      if (q.fiber_tail.kind == FiberTail::Kind::EnumSingleton && per_degree_unique) {
        for (const auto& [m, sw] : live) {
          bool shaped = sw->kind() == WordExpr::Kind::Lit || parse_sep_template(reg, sw, m);
          if (!shaped || !block_min_projection_nonzero(m, sw))
            return rv(Reduced::Unknown, "qshuffle: block shape outside the certified family");
        }
        if (q.site_tail.kind == SiteTail::Kind::SepBlock ||
            q.site_tail.kind == SiteTail::Kind::Power ||
            q.site_tail.kind == SiteTail::Kind::InvolutionLetter) {
          if (unknown) return rv(Reduced::Unknown, "qshuffle: site word not decidable");
          return rv(Reduced::Certified,
                    "qshuffle: per-degree-unique blocks with nonvanishing minimal projection");
        }
        return rv(Reduced::Unknown, "qshuffle: no tail template");
      }
      // separator template: every block is h_m^R (inner) h_m^R with h of
      // infinite order and d(inner) > m; sites may repeat per degree
      {
        bool all_sep = q.site_tail.kind == SiteTail::Kind::SepBlock;
        for (const auto& [m, sw] : live)
          if (!parse_sep_template(reg, sw, m)) all_sep = false;
        if (all_sep) {
          if (unknown) return rv(Reduced::Unknown, "qshuffle: site word not decidable");
          return rv(Reduced::Certified, "qshuffle: separator template blocks");
        }
      }
      if (q.fiber_tail.kind == FiberTail::Kind::DyadicRuler && q.fibers.empty()) {
        // ruler family: the least-denominator site of any window is unique
        // and minimal in degree; single-letter blocks keep its projection alive
        for (const auto& [m, sw] : live) {
          (void)m;
          if (sw->kind() != WordExpr::Kind::Lit)
            return rv(Reduced::Unknown, "qshuffle: ruler sites must be single letters");
        }
        if (unknown) return rv(Reduced::Unknown, "qshuffle: site word not decidable");
        return rv(Reduced::Certified, "qshuffle: ruler layout, unique minimal site per window");
      }
      return rv(Reduced::Unknown, "qshuffle: layout outside the certified families");
    }
  }
  return rv(Reduced::Unknown, "unhandled shape");
}

}  // namespace

ReducedVerdict check_reduced_depth(const Registry& reg, const WordPtr& w, std::int64_t N) {
  if (word_is_finite(*w)) return check_finite(reg, w);
  return check_impl(reg, w, N);
}

}  // namespace tw
