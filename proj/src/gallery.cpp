#include "tw/gallery.hpp"

#include <json.hpp>

namespace tw {

NastyFamily nastyword(const Registry& reg, std::int64_t depth) {
  for (std::int64_t n = 0; n <= depth; ++n)
    if (!reg.involution_letter(n))
      throw std::invalid_argument("nastyword needs an involution at every index <= " +
                                  std::to_string(depth));
  NastyFamily out;
  out.W = ruler_word(reg, 0);
  for (std::int64_t k = 1; k <= depth; ++k) out.members.push_back(ruler_word(reg, k));
  // g0 W3 g2 W5 g4 W7 ...
  OmegaRule alt;
  TailSlot g;
  g.kind = TailSlot::Kind::Power;
  g.base = TailSlot::Base::Involution;
  g.index = {2, 0};
  TailSlot wslot;
  wslot.kind = TailSlot::Kind::Ruler;
  wslot.index = {2, 3};
  alt.slots = {g, wslot};
  out.alternating = w_omega(reg, alt);
  return out;
}

// ---------------------------------------------------------------------------
// reindexing
// ---------------------------------------------------------------------------

namespace {

bool is_pure_shift(const IndexMap& f) { return f.table.empty(); }

std::int64_t max_support(const IndexMap& f) {
  std::int64_t hi = -1;
  for (const auto& [k, v] : f.table) hi = std::max({hi, k, v});
  return hi;
}

WordPtr reindex_impl(const Registry& reg, const WordPtr& w, const IndexMap& f) {
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
      return w;
    case WordExpr::Kind::Lit: {
      Letter l = w->lit();
      l.index = f(l.index);
      if (l.index < 0) throw std::invalid_argument("reindex below zero");
      return w_lit(reg, l);
    }
    case WordExpr::Kind::Cat: {
      std::vector<WordPtr> parts;
      for (const auto& p : w->parts()) parts.push_back(reindex_impl(reg, p, f));
      return w_cat(std::move(parts));
    }
    case WordExpr::Kind::Inv:
      return w_inv(reg, reindex_impl(reg, w->inner(), f));
    case WordExpr::Kind::OmegaCat: {
      OmegaRule rule = w->omega();
      std::vector<WordPtr> prefix;
      for (const auto& p : rule.prefix) prefix.push_back(reindex_impl(reg, p, f));
      rule.prefix = std::move(prefix);
      if (is_pure_shift(f)) {
        for (auto& s : rule.slots) s.index.b += f.shift;
        return w_omega(reg, rule);
      }
      // finite table: materialize the cycles that touch the support, then the
      // shifted tail must stay clear of it
      std::int64_t hi = max_support(f);
      std::int64_t j = rule.start;
      std::int64_t guard = 0;
      while (true) {
        bool touches = false;
        for (const auto& s : rule.slots)
          if (s.index(j) <= hi && (f.table.count(s.index(j)) || f.shift != 0)) touches = true;
        bool low = false;
        for (const auto& s : rule.slots)
          if (s.index(j) <= hi) low = true;
        if (!low && !touches) break;
        for (const auto& s : rule.slots) {
          OmegaRule one;
          one.slots = {s};
          one.start = j;
          WordPtr term = s.kind == TailSlot::Kind::Ruler
                             ? ruler_word(reg, s.index(j))
                             : [&] {
                                 FiniteWord fw = project(reg, w_omega(reg, one), s.index(j));
                                 return w_lit(reg, fw.at(0).letter);
                               }();
          rule.prefix.push_back(reindex_impl(reg, term, f));
        }
        ++j;
        if (++guard > 4096) throw std::invalid_argument("reindex support never escapes the tail");
      }
      rule.start = j;
      for (auto& s : rule.slots) s.index.b += f.shift;
      return w_omega(reg, rule);
    }
    case WordExpr::Kind::QShuffle: {
      QRule q = w->qrule();
      if (!is_pure_shift(f))
        throw std::invalid_argument("finite-table reindexing of shuffles is not supported");
      std::map<std::int64_t, WordPtr> sw;
      for (const auto& [m, word] : q.site_words) sw[f(m)] = reindex_impl(reg, word, f);
      std::map<std::int64_t, std::vector<QFiber>> fb;
      for (const auto& [m, fs] : q.fibers) fb[f(m)] = fs;
      q.site_words = std::move(sw);
      q.fibers = std::move(fb);
      q.tail_start = f(q.tail_start);
      q.fiber_tail.offset += f.shift;
      return w_qshuffle(reg, q);
    }
  }
  return w;
}

}  // namespace

WordPtr reindex_word(const Registry& reg, const WordPtr& w, const IndexMap& f) {
  // collision check on the finite table
  std::map<std::int64_t, std::int64_t> seen;
  for (const auto& [k, v] : f.table) {
    for (const auto& [k2, v2] : f.table)
      if (k != k2 && v == v2) throw std::invalid_argument("relabeling collides");
    (void)k;
    (void)v;
  }
  return reindex_impl(reg, w, f);
}

WordPtr shift_word(const Registry& reg, const WordPtr& w, std::int64_t k) {
  IndexMap f;
  f.shift = k;
  return reindex_word(reg, w, f);
}

Registry paired_registry(const Registry& reg) {
  std::vector<GroupSpec> table;
  std::size_t n = reg.table().size();
  std::size_t slots = (n + 1) / 2;
  for (std::size_t i = 0; i < slots; ++i)
    table.push_back(GroupSpec::free_product(reg.at(2 * i), reg.at(2 * i + 1)));
  return Registry(std::move(table),
                  GroupSpec::free_product(reg.tail(), reg.tail()));
}

FiniteWord pair_word(const Registry& reg, const FiniteWord& w) {
  (void)reg;
  std::vector<PosLetter> out;
  for (const auto& pl : w.letters()) {
    Side side = pl.letter.index % 2 == 0 ? Side::Left : Side::Right;
    Letter l;
    l.index = pl.letter.index / 2;
    l.value = GroupElement::product({{side, pl.letter.value}});
    out.push_back({pl.pos, l});
  }
  return FiniteWord(std::move(out));
}

FiniteWord unpair_word(const Registry& paired_reg, const FiniteWord& w) {
  std::vector<PosLetter> out;
  for (const auto& pl : w.letters()) {
    const auto& fs = pl.letter.value.factors();
    if (fs.size() != 1)
      throw std::invalid_argument("letter is not a single-sided paired element");
    g_validate(paired_reg.at(pl.letter.index), pl.letter.value);
    Letter l;
    l.index = 2 * pl.letter.index + (fs[0].first == Side::Left ? 0 : 1);
    l.value = fs[0].second;
    out.push_back({pl.pos, l});
  }
  return FiniteWord(std::move(out));
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

namespace {

nlohmann::json seg_count(const CoiTriple& t) { return t.map.segs.size(); }

}  // namespace

DriveResult drive_extension(const Scenario& scenario) {
  const Registry& reg = scenario.registry;
  DriveResult res;
  for (const auto& s : scenario.seeds) res.collection.add(s);
  {
    nlohmann::json j;
    j["event"] = "seed";
    j["triples"] = res.collection.size();
    j["depth"] = scenario.depth;
    j["schedules"] = {{"z", "v2(n+1)"}, {"rationals", "calkin-wilf"}};
    res.transcript.push_back(j.dump());
  }
  for (std::int64_t step = 0; step < scenario.steps; ++step) {
    bool right_side = step % 2 == 1;
    // work against the inverted collection for right-side steps
    CoiCollection side_coll;
    for (const auto& t : res.collection.triples())
      side_coll.add(right_side ? coi_invert(t) : t);
    std::vector<WordPtr> family;
    for (const auto& t : side_coll.triples()) family.push_back(t.left);

    Transcript tr;
    DiagonalResult diag = diagonal_word(reg, family, scenario.depth, &tr);
    if (fine_membership_bounded(reg, diag.word, family, scenario.depth).member)
      throw std::logic_error("diagonal word failed to leave the family span");

    // singleton triples ground the per-term witnesses (working copy only)
    CoiCollection working = side_coll;
    const OmegaRule& rule = diag.word->omega();
    std::int64_t T = static_cast<std::int64_t>(rule.prefix.size());
    while (T < scenario.depth + 1) T += static_cast<std::int64_t>(rule.slots.size());
    std::vector<WordPtr> working_family = family;
    for (std::int64_t m = 0; m < T; ++m) {
      FiniteWord f = project(reg, diag.word, m);
      // term m of the diagonal is the single letter h_m^{q(m)}
      Letter lm = f.at(f.size() - 1).letter;
      CoiTriple single;
      single.name = "step" + std::to_string(step) + ".lit" + std::to_string(m);
      single.left_name = single.name + ".W";
      single.left = w_lit(reg, lm);
      single.right_name = single.name + ".U";
      single.right = w_empty();
      working.add(single);
      working_family.push_back(single.left);
    }
    std::vector<FineWitness> wits;
    for (std::int64_t m = 0; m < T; ++m) {
      FiniteWord f = project(reg, diag.word, m);
      WordPtr term = w_lit(reg, f.at(f.size() - 1).letter);
      auto v = fine_membership_bounded(reg, term, working_family, scenario.depth);
      if (!v.member) throw std::logic_error("term witness missing");
      wits.push_back(v.witness);
    }
    OmegaExtension ext = extend_omega(reg, working, "step" + std::to_string(step),
                                      diag.word, wits, scenario.depth, scenario.budget);
    CoiTriple final_triple = right_side ? coi_invert(ext.triple) : ext.triple;
    final_triple.name = "step" + std::to_string(step);
    res.collection.add(final_triple);

    AuditReport rep = audit(reg, res.collection, scenario.depth, scenario.budget);
    res.audits.push_back(rep);
    nlohmann::json j;
    j["event"] = "step";
    j["index"] = step;
    j["side"] = right_side ? "right" : "left";
    j["exponent_overrides"] = nlohmann::json::object();
    for (const auto& [k, v] : diag.outcome.q.overrides)
      j["exponent_overrides"][std::to_string(k)] = v;
    j["defeated"] = diag.outcome.defeats.size();
    j["segments"] = seg_count(final_triple);
    j["blocks"] = ext.block_triples.size();
    nlohmann::json degs = nlohmann::json::array();
    for (const auto& bt : ext.block_triples) {
      auto d = d_word(reg, bt.right);
      degs.push_back(d ? *d : -1);
    }
    j["block_degrees"] = degs;
    j["audit"] = {{"obligations", rep.obligations.size()},
                  {"equal", rep.equal},
                  {"unknown", rep.unknown}};
    for (const auto& line : ext.transcript.lines) {
      (void)line;
    }
    res.transcript.push_back(j.dump());
  }
  return res;
}

}  // namespace tw
