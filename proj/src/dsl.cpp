#include "tw/dsl.hpp"

#include <sstream>

namespace tw {

// ---------------------------------------------------------------------------
// s-expression reader
// ---------------------------------------------------------------------------

namespace {

struct Lexer {
  const std::string& text;
  std::size_t at = 0;
  int line = 1, col = 1;

  void advance() {
    if (at < text.size() && text[at] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++at;
  }
  void skip_ws() {
    while (at < text.size()) {
      char c = text[at];
      if (c == ';') {
        while (at < text.size() && text[at] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }
  bool done() {
    skip_ws();
    return at >= text.size();
  }
};

Sexp read_sexp(Lexer& lx) {
  lx.skip_ws();
  if (lx.at >= lx.text.size()) throw ParseError("unexpected end of input", lx.line, lx.col);
  Sexp s;
  s.line = lx.line;
  s.col = lx.col;
  char c = lx.text[lx.at];
  if (c == '(') {
    lx.advance();
    while (true) {
      lx.skip_ws();
      if (lx.at >= lx.text.size())
        throw ParseError("unbalanced parenthesis", s.line, s.col);
      if (lx.text[lx.at] == ')') {
        lx.advance();
        return s;
      }
      s.items.push_back(read_sexp(lx));
    }
  }
  if (c == ')') throw ParseError("unexpected ')'", lx.line, lx.col);
  s.is_atom = true;
  while (lx.at < lx.text.size()) {
    char d = lx.text[lx.at];
    if (d == '(' || d == ')' || d == ';' || d == ' ' || d == '\t' || d == '\r' ||
        d == '\n')
      break;
    s.atom += d;
    lx.advance();
  }
  return s;
}

[[noreturn]] void fail(const Sexp& s, const std::string& msg) {
  throw ParseError(msg, s.line, s.col);
}

const std::string& head(const Sexp& s) {
  if (s.is_atom || s.items.empty() || !s.items[0].is_atom)
    fail(s, "expected a form (head ...)");
  return s.items[0].atom;
}

std::int64_t parse_int(const Sexp& s) {
  if (!s.is_atom) fail(s, "expected an integer");
  try {
    std::size_t used = 0;
    std::int64_t v = std::stoll(s.atom, &used);
    if (used != s.atom.size()) fail(s, "expected an integer");
    return v;
  } catch (const std::exception&) {
    fail(s, "expected an integer");
  }
}

Rational parse_rat(const Sexp& s) {
  if (!s.is_atom) fail(s, "expected a rational");
  auto slash = s.atom.find('/');
  try {
    if (slash == std::string::npos) return Rational(std::stoll(s.atom));
    return Rational(std::stoll(s.atom.substr(0, slash)),
                    std::stoll(s.atom.substr(slash + 1)));
  } catch (const std::exception&) {
    fail(s, "expected a rational p/q");
  }
}

}  // namespace

std::vector<Sexp> parse_sexps(const std::string& text) {
  Lexer lx{text};
  std::vector<Sexp> out;
  while (!lx.done()) out.push_back(read_sexp(lx));
  return out;
}

// ---------------------------------------------------------------------------
// grammar
// ---------------------------------------------------------------------------

namespace {

GroupSpec parse_gspec(const Script& sc, const Sexp& s) {
  if (s.is_atom) {
    if (s.atom == "Z") return GroupSpec::integers();
    auto it = sc.groups.find(s.atom);
    if (it != sc.groups.end()) return it->second;
    fail(s, "unknown group " + s.atom);
  }
  const std::string& h = head(s);
  if (h == "group") {
    if (s.items.size() != 2) fail(s, "(group <spec>)");
    return parse_gspec(sc, s.items[1]);
  }
  if (h == "zmod") {
    if (s.items.size() != 2) fail(s, "(zmod K)");
    return GroupSpec::cyclic(parse_int(s.items[1]));
  }
  if (h == "free") {
    if (s.items.size() != 3) fail(s, "(free <spec> <spec>)");
    return GroupSpec::free_product(parse_gspec(sc, s.items[1]), parse_gspec(sc, s.items[2]));
  }
  fail(s, "unknown group form " + h);
}

GroupElement parse_elem(const Sexp& s) {
  if (s.is_atom) return GroupElement::integer(parse_int(s));
  if (head(s) != "fp") fail(s, "element must be an integer or (fp (L ...) (R ...) ...)");
  std::vector<std::pair<Side, GroupElement>> parts;
  for (std::size_t i = 1; i < s.items.size(); ++i) {
    const Sexp& f = s.items[i];
    const std::string& h = head(f);
    if ((h != "L" && h != "R") || f.items.size() != 2) fail(f, "(L <elem>) or (R <elem>)");
    parts.emplace_back(h == "L" ? Side::Left : Side::Right, parse_elem(f.items[1]));
  }
  if (parts.empty()) return GroupElement();
  return GroupElement::product(std::move(parts));
}

Position parse_pos(const Sexp& s) {
  if (!s.is_atom && head(s) == "pos") {
    Position p;
    for (std::size_t i = 1; i < s.items.size(); ++i) {
      const Sexp& seg = s.items[i];
      if (seg.is_atom) {
        if (seg.atom == "rev") {
          p.path.push_back(PathSeg::rev());
          continue;
        }
        fail(seg, "unknown path segment " + seg.atom);
      }
      const std::string& h = head(seg);
      if (seg.items.size() != 2) fail(seg, "path segment needs one argument");
      if (h == "cat")
        p.path.push_back(PathSeg::cat(parse_int(seg.items[1])));
      else if (h == "om")
        p.path.push_back(PathSeg::omega(parse_int(seg.items[1])));
      else if (h == "omr")
        p.path.push_back(PathSeg::omega_rev(parse_int(seg.items[1])));
      else if (h == "fin")
        p.path.push_back(PathSeg::fin(parse_int(seg.items[1])));
      else if (h == "rat")
        p.path.push_back(PathSeg::rat(parse_rat(seg.items[1])));
      else
        fail(seg, "unknown path segment " + h);
    }
    return p;
  }
  fail(s, "expected (pos <segment>...)");
}

Cut parse_cut(const Sexp& s) {
  if (s.is_atom) {
    if (s.atom == "inf") return Cut::inf();
    fail(s, "expected inf, (closed <pos>) or (open <pos>)");
  }
  const std::string& h = head(s);
  if (s.items.size() != 2) fail(s, "cut needs one position");
  if (h == "closed") return Cut::closed(parse_pos(s.items[1]));
  if (h == "open") return Cut::open(parse_pos(s.items[1]));
  fail(s, "unknown cut form " + h);
}

Interval parse_interval(const Sexp& s) {
  if (s.is_atom || head(s) != "iv" || s.items.size() != 3) fail(s, "(iv <cut> <cut>)");
  return Interval{parse_cut(s.items[1]), parse_cut(s.items[2])};
}

ExponentFn parse_expfn(const Sexp& s, std::size_t from) {
  ExponentFn e;
  for (std::size_t i = from; i < s.items.size(); ++i) {
    const Sexp& f = s.items[i];
    const std::string& h = head(f);
    if (h == "default") {
      if (f.items.size() != 3) fail(f, "(default A B)");
      e.dflt = {parse_int(f.items[1]), parse_int(f.items[2])};
    } else if (h == "at") {
      if (f.items.size() != 3) fail(f, "(at M V)");
      e.overrides[parse_int(f.items[1])] = parse_int(f.items[2]);
    } else {
      fail(f, "unknown exponent clause " + h);
    }
  }
  return e;
}

TailSlot parse_slot(const Sexp& s) {
  TailSlot slot;
  const std::string& h = head(s);
  if (h == "ruler") {
    slot.kind = TailSlot::Kind::Ruler;
  } else if (h != "power") {
    fail(s, "slot must be (power ...) or (ruler ...)");
  }
  for (std::size_t i = 1; i < s.items.size(); ++i) {
    const Sexp& f = s.items[i];
    const std::string& fh = head(f);
    if (fh == "index") {
      // (index A B) or the long form (index affine A B)
      std::size_t base = f.items.size() == 4 ? 2 : 1;
      if (f.items.size() != base + 2) fail(f, "(index A B)");
      slot.index = {parse_int(f.items[base]), parse_int(f.items[base + 1])};
    } else if (fh == "sign") {
      slot.sign = static_cast<int>(parse_int(f.items.at(1)));
    } else if (fh == "base") {
      if (f.items.size() != 2 || !f.items[1].is_atom) fail(f, "(base inf|invol)");
      slot.base = f.items[1].atom == "invol" ? TailSlot::Base::Involution
                                             : TailSlot::Base::InfOrder;
    } else if (fh == "exp") {
      slot.exp = parse_expfn(f, 1);
    } else {
      fail(f, "unknown slot clause " + fh);
    }
  }
  return slot;
}

RatWindowCut parse_ratcut(const Sexp& s) {
  RatWindowCut c;
  if (s.is_atom) {
    if (s.atom == "*") return c;
    c.bounded = true;
    c.q = parse_rat(s);
    c.include_site = true;
    return c;
  }
  if (head(s) == "excl" && s.items.size() == 2) {
    c.bounded = true;
    c.q = parse_rat(s.items[1]);
    c.include_site = false;
    return c;
  }
  fail(s, "window bound must be *, P/Q, or (excl P/Q)");
}

WordPtr parse_word(const Script& sc, const Registry& reg, const Sexp& s);

WordPtr parse_omega(const Script& sc, const Registry& reg, const Sexp& s) {
  OmegaRule r;
  for (std::size_t i = 1; i < s.items.size(); ++i) {
    const Sexp& f = s.items[i];
    const std::string& h = head(f);
    if (h == "prefix") {
      for (std::size_t k = 1; k < f.items.size(); ++k)
        r.prefix.push_back(parse_word(sc, reg, f.items[k]));
    } else if (h == "start") {
      r.start = parse_int(f.items.at(1));
    } else if (h == "tail") {
      for (std::size_t k = 1; k < f.items.size(); ++k)
        r.slots.push_back(parse_slot(f.items[k]));
    } else if (h == "power" || h == "ruler") {
      r.slots.push_back(parse_slot(f));
    } else {
      fail(f, "unknown omega clause " + h);
    }
  }
  return w_omega(reg, r);
}

WordPtr parse_qshuffle(const Script& sc, const Registry& reg, const Sexp& s) {
  QRule q;
  for (std::size_t i = 1; i < s.items.size(); ++i) {
    const Sexp& f = s.items[i];
    const std::string& h = head(f);
    if (h == "block") {
      if (f.items.size() != 3) fail(f, "(block M <word>)");
      q.site_words[parse_int(f.items[1])] = parse_word(sc, reg, f.items[2]);
    } else if (h == "fiber") {
      if (f.items.size() < 2) fail(f, "(fiber M (site P/Q S)...)");
      std::int64_t m = parse_int(f.items[1]);
      for (std::size_t k = 2; k < f.items.size(); ++k) {
        const Sexp& g = f.items[k];
        if (head(g) != "site" || g.items.size() != 3) fail(g, "(site P/Q S)");
        q.fibers[m].push_back(
            {parse_rat(g.items[1]), static_cast<int>(parse_int(g.items[2]))});
      }
    } else if (h == "tailstart") {
      q.tail_start = parse_int(f.items.at(1));
    } else if (h == "blocktail") {
      if (f.items.size() < 2 || !f.items[1].is_atom) fail(f, "(blocktail kind ...)");
      const std::string& kind = f.items[1].atom;
      if (kind == "power")
        q.site_tail.kind = SiteTail::Kind::Power;
      else if (kind == "invol")
        q.site_tail.kind = SiteTail::Kind::InvolutionLetter;
      else if (kind == "sepblock")
        q.site_tail.kind = SiteTail::Kind::SepBlock;
      else
        fail(f, "unknown block tail " + kind);
      for (std::size_t k = 2; k < f.items.size(); ++k)
        if (head(f.items[k]) == "exp") q.site_tail.exp = parse_expfn(f.items[k], 1);
    } else if (h == "fibertail") {
      if (f.items.size() < 2 || !f.items[1].is_atom) fail(f, "(fibertail kind OFF)");
      const std::string& kind = f.items[1].atom;
      if (kind == "enum")
        q.fiber_tail.kind = FiberTail::Kind::EnumSingleton;
      else if (kind == "dyadic")
        q.fiber_tail.kind = FiberTail::Kind::DyadicRuler;
      else
        fail(f, "unknown fiber tail " + kind);
      if (f.items.size() >= 3) q.fiber_tail.offset = parse_int(f.items[2]);
    } else if (h == "window") {
      if (f.items.size() != 3) fail(f, "(window LO HI)");
      q.win_lo = parse_ratcut(f.items[1]);
      q.win_hi = parse_ratcut(f.items[2]);
    } else {
      fail(f, "unknown qshuffle clause " + h);
    }
  }
  return w_qshuffle(reg, q);
}

WordPtr parse_word(const Script& sc, const Registry& reg, const Sexp& s) {
  if (s.is_atom) {
    if (s.atom == "E") return w_empty();
    if (sc.has_word(s.atom)) return sc.word(s.atom);
    fail(s, "undefined word " + s.atom);
  }
  const std::string& h = head(s);
  try {
    if (h == "lit") {
      if (s.items.size() != 3) fail(s, "(lit N <elem>)");
      return w_lit(reg, Letter{parse_int(s.items[1]), parse_elem(s.items[2])});
    }
    if (h == "word") {
      if (s.items.size() != 2) fail(s, "(word <w>)");
      return parse_word(sc, reg, s.items[1]);
    }
    if (h == "cat") {
      std::vector<WordPtr> parts;
      for (std::size_t i = 1; i < s.items.size(); ++i)
        parts.push_back(parse_word(sc, reg, s.items[i]));
      return w_cat(std::move(parts));
    }
    if (h == "inv") {
      if (s.items.size() != 2) fail(s, "(inv <w>)");
      return w_inv(reg, parse_word(sc, reg, s.items[1]));
    }
    if (h == "omega") return parse_omega(sc, reg, s);
    if (h == "qshuffle") return parse_qshuffle(sc, reg, s);
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    fail(s, e.what());
  }
  fail(s, "unknown word form " + h);
}

std::vector<PathSeg> parse_prefix(const Sexp& s) {
  Sexp wrapper;
  wrapper.items.push_back(Sexp{true, "pos", {}, s.line, s.col});
  for (std::size_t i = 1; i < s.items.size(); ++i) wrapper.items.push_back(s.items[i]);
  return parse_pos(wrapper).path;
}

// spec-surface segment form: (seg (src <iv>) (dst <iv>) (orient S)
// (pick <pick> <pick>)) with picks (points <pos>...), (terms FROM [SLOT]) or
// (sites M0). Clipped against src/dst once the triple's words are known.
struct StagedSeg {
  CoiSeg seg;
  bool clip = false;
  Interval src, dst;
};

StagedSeg parse_spec_seg(const Sexp& s) {
  StagedSeg out;
  out.clip = true;
  out.src = Interval::full();
  out.dst = Interval::full();
  int orient = 1;
  const Sexp* pick_l = nullptr;
  const Sexp* pick_r = nullptr;
  for (std::size_t i = 1; i < s.items.size(); ++i) {
    const Sexp& f = s.items[i];
    const std::string& fh = head(f);
    if (fh == "src")
      out.src = parse_interval(f.items.at(1));
    else if (fh == "dst")
      out.dst = parse_interval(f.items.at(1));
    else if (fh == "orient")
      orient = static_cast<int>(parse_int(f.items.at(1)));
    else if (fh == "pick") {
      if (f.items.size() != 3) fail(f, "(pick <pick> <pick>)");
      pick_l = &f.items[1];
      pick_r = &f.items[2];
    } else
      fail(f, "unknown seg clause " + fh);
  }
  if (!pick_l || !pick_r) fail(s, "seg needs a (pick ...) clause");
  const std::string& kl = head(*pick_l);
  const std::string& kr = head(*pick_r);
  if (kl != kr) fail(s, "pick kinds must agree on both sides");
  CoiSeg& seg = out.seg;
  seg.sign = orient;
  if (kl == "points") {
    seg.kind = CoiSeg::Kind::PointPairs;
    if (pick_l->items.size() != pick_r->items.size())
      fail(s, "point picks must pair off");
    std::size_t n = pick_l->items.size() - 1;
    for (std::size_t i = 1; i <= n; ++i) {
      const Sexp& rhs = orient >= 0 ? pick_r->items[i] : pick_r->items[n + 1 - i];
      seg.pairs.emplace_back(parse_pos(pick_l->items[i]), parse_pos(rhs));
    }
  } else if (kl == "terms") {
    seg.kind = CoiSeg::Kind::TermPaired;
    seg.from_cycle = parse_int(pick_l->items.at(1));
    std::int64_t from_r = parse_int(pick_r->items.at(1));
    seg.shift = from_r - seg.from_cycle;
    if (pick_l->items.size() > 2) seg.slot_l = parse_int(pick_l->items[2]);
    if (pick_r->items.size() > 2) seg.slot_r = parse_int(pick_r->items[2]);
  } else if (kl == "sites") {
    seg.kind = CoiSeg::Kind::SitePaired;
    seg.from_m = parse_int(pick_l->items.at(1));
  } else {
    fail(s, "unknown pick kind " + kl);
  }
  return out;
}

CoiSeg parse_seg(const Sexp& s) {
  CoiSeg seg;
  const std::string& h = head(s);
  if (h == "pairs")
    seg.kind = CoiSeg::Kind::PointPairs;
  else if (h == "terms")
    seg.kind = CoiSeg::Kind::TermPaired;
  else if (h == "sites")
    seg.kind = CoiSeg::Kind::SitePaired;
  else
    fail(s, "segment must be (pairs ...), (terms ...) or (sites ...)");
  for (std::size_t i = 1; i < s.items.size(); ++i) {
    const Sexp& f = s.items[i];
    const std::string& fh = head(f);
    if (fh == "sign")
      seg.sign = static_cast<int>(parse_int(f.items.at(1)));
    else if (fh == "prefixl")
      seg.prefix_l = parse_prefix(f);
    else if (fh == "prefixr")
      seg.prefix_r = parse_prefix(f);
    else if (fh == "pair") {
      if (f.items.size() != 3) fail(f, "(pair <pos> <pos>)");
      seg.pairs.emplace_back(parse_pos(f.items[1]), parse_pos(f.items[2]));
    } else if (fh == "from")
      seg.from_cycle = parse_int(f.items.at(1));
    else if (fh == "to")
      seg.to_cycle = parse_int(f.items.at(1));
    else if (fh == "shift")
      seg.shift = parse_int(f.items.at(1));
    else if (fh == "slotl")
      seg.slot_l = static_cast<std::size_t>(parse_int(f.items.at(1)));
    else if (fh == "slotr")
      seg.slot_r = static_cast<std::size_t>(parse_int(f.items.at(1)));
    else if (fh == "fromm")
      seg.from_m = parse_int(f.items.at(1));
    else if (fh == "window") {
      if (f.items.size() != 3) fail(f, "(window LO HI)");
      seg.site_lo = parse_ratcut(f.items[1]);
      seg.site_hi = parse_ratcut(f.items[2]);
    } else if (fh == "tf") {
      if (f.items.size() != 3) fail(f, "(tf A B)");
      seg.tf_a = parse_rat(f.items[1]);
      seg.tf_b = parse_rat(f.items[2]);
      seg.sign = seg.tf_a >= Rational(0) ? 1 : -1;
    } else
      fail(f, "unknown segment clause " + fh);
  }
  return seg;
}

}  // namespace

const WordPtr& Script::word(const std::string& name) const {
  for (const auto& [n, w] : words)
    if (n == name) return w;
  throw std::out_of_range("undefined word " + name);
}

bool Script::has_word(const std::string& name) const {
  for (const auto& [n, w] : words) {
    (void)w;
    if (n == name) return true;
  }
  return false;
}

Script parse_script(const std::string& text) {
  Script sc;
  for (const Sexp& s : parse_sexps(text)) {
    const std::string& h = head(s);
    if (h == "registry") {
      if (sc.has_registry) fail(s, "script already has a registry");
      std::vector<GroupSpec> table;
      GroupSpec tail = GroupSpec::integers();
      for (std::size_t i = 1; i < s.items.size(); ++i) {
        const Sexp& f = s.items[i];
        if (f.is_atom || f.items.size() != 2) fail(f, "(IDX <spec>) or (tail <spec>)");
        if (f.items[0].is_atom && f.items[0].atom == "tail") {
          tail = parse_gspec(sc, f.items[1]);
        } else {
          std::int64_t idx = parse_int(f.items[0]);
          if (idx != static_cast<std::int64_t>(table.size()))
            fail(f, "registry indices must be consecutive from 0");
          table.push_back(parse_gspec(sc, f.items[1]));
        }
      }
      sc.registry = Registry(std::move(table), std::move(tail));
      sc.has_registry = true;
    } else if (h == "defgroup") {
      if (s.items.size() != 3 || !s.items[1].is_atom) fail(s, "(defgroup NAME <spec>)");
      sc.groups.insert_or_assign(s.items[1].atom, parse_gspec(sc, s.items[2]));
    } else if (h == "defword") {
      if (s.items.size() != 3 || !s.items[1].is_atom) fail(s, "(defword NAME <word>)");
      if (sc.has_word(s.items[1].atom)) fail(s, "word already defined: " + s.items[1].atom);
      sc.words.emplace_back(s.items[1].atom, parse_word(sc, sc.registry, s.items[2]));
    } else if (h == "deftriple") {
      if (s.items.size() < 4 || !s.items[1].is_atom)
        fail(s, "(deftriple NAME (left <w>) (right <w>) (coi <seg>...))");
      CoiTriple t;
      t.name = s.items[1].atom;
      std::vector<StagedSeg> staged;
      for (std::size_t i = 2; i < s.items.size(); ++i) {
        const Sexp& f = s.items[i];
        const std::string& fh = head(f);
        if (fh == "left") {
          t.left = parse_word(sc, sc.registry, f.items.at(1));
          t.left_name = f.items[1].is_atom ? f.items[1].atom : t.name + ".W";
        } else if (fh == "right") {
          t.right = parse_word(sc, sc.registry, f.items.at(1));
          t.right_name = f.items[1].is_atom ? f.items[1].atom : t.name + ".U";
        } else if (fh == "coi") {
          for (std::size_t k = 1; k < f.items.size(); ++k) {
            if (head(f.items[k]) == "seg")
              staged.push_back(parse_spec_seg(f.items[k]));
            else
              t.map.segs.push_back(parse_seg(f.items[k]));
          }
        } else {
          fail(f, "unknown triple clause " + fh);
        }
      }
      if (!t.left || !t.right) fail(s, "triple needs (left ...) and (right ...)");
      for (const auto& st : staged) {
        auto c1 = clip_seg(sc.registry, t, st.seg, false, st.src);
        if (!c1) continue;
        auto c2 = clip_seg(sc.registry, t, *c1, true, st.dst);
        if (c2) t.map.segs.push_back(*c2);
      }
      try {
        sc.collection.add(std::move(t));
      } catch (const std::exception& e) {
        fail(s, e.what());
      }
    } else if (h == "defcoll") {
      if (s.items.size() < 2 || !s.items[1].is_atom) fail(s, "(defcoll NAME T...)");
      std::vector<std::string> names;
      for (std::size_t i = 2; i < s.items.size(); ++i) {
        if (!s.items[i].is_atom) fail(s.items[i], "triple name expected");
        sc.collection.at(s.items[i].atom);  // must exist
        names.push_back(s.items[i].atom);
      }
      sc.collections[s.items[1].atom] = std::move(names);
    } else if (h == "assert-eq") {
      if (s.items.size() != 4) fail(s, "(assert-eq A B N)");
      ScriptAssert a;
      a.lhs = s.items[1].atom;
      a.rhs = s.items[2].atom;
      a.depth = parse_int(s.items[3]);
      sc.asserts.push_back(a);
    } else {
      fail(s, "unknown statement " + h);
    }
  }
  return sc;
}

// ---------------------------------------------------------------------------
// printers
// ---------------------------------------------------------------------------

std::string print_group(const GroupSpec& g) {
  switch (g.kind()) {
    case GroupSpec::Kind::InfiniteCyclic:
      return "Z";
    case GroupSpec::Kind::FiniteCyclic:
      return "(zmod " + std::to_string(g.modulus()) + ")";
    case GroupSpec::Kind::FreeProduct:
      return "(free " + print_group(g.left()) + " " + print_group(g.right()) + ")";
  }
  return "Z";
}

std::string print_element(const GroupElement& e) {
  if (!e.has_factors()) return std::to_string(e.scalar());
  std::string s = "(fp";
  for (const auto& [side, el] : e.factors()) {
    s += side == Side::Left ? " (L " : " (R ";
    s += print_element(el) + ")";
  }
  return s + ")";
}

std::string print_position(const Position& p) {
  std::string s = "(pos";
  for (const auto& seg : p.path) {
    switch (seg.kind) {
      case PathSeg::Kind::CatPart:
        s += " (cat " + std::to_string(seg.idx) + ")";
        break;
      case PathSeg::Kind::OmegaIdx:
        s += " (om " + std::to_string(seg.idx) + ")";
        break;
      case PathSeg::Kind::OmegaRevIdx:
        s += " (omr " + std::to_string(seg.idx) + ")";
        break;
      case PathSeg::Kind::FinOff:
        s += " (fin " + std::to_string(seg.idx) + ")";
        break;
      case PathSeg::Kind::Rat:
        s += " (rat " + seg.q.str() + ")";
        break;
      case PathSeg::Kind::RevEnter:
        s += " rev";
        break;
    }
  }
  return s + ")";
}

std::string print_interval_form(const Interval& I) {
  auto cut = [](const Cut& c) -> std::string {
    if (c.kind == Cut::Kind::Inf) return "inf";
    return std::string(c.kind == Cut::Kind::Closed ? "(closed " : "(open ") +
           print_position(c.pos) + ")";
  };
  return "(iv " + cut(I.low) + " " + cut(I.high) + ")";
}

namespace {

std::string print_expfn(const ExponentFn& e) {
  std::string s = "(exp (default " + std::to_string(e.dflt.a) + " " +
                  std::to_string(e.dflt.b) + ")";
  for (const auto& [k, v] : e.overrides)
    s += " (at " + std::to_string(k) + " " + std::to_string(v) + ")";
  return s + ")";
}

std::string print_slot(const TailSlot& s) {
  if (s.kind == TailSlot::Kind::Ruler)
    return "(ruler (index " + std::to_string(s.index.a) + " " + std::to_string(s.index.b) +
           "))";
  std::string out = "(power (index " + std::to_string(s.index.a) + " " +
                    std::to_string(s.index.b) + ")";
  if (s.sign != 1) out += " (sign " + std::to_string(s.sign) + ")";
  if (s.base == TailSlot::Base::Involution) out += " (base invol)";
  out += " " + print_expfn(s.exp);
  return out + ")";
}

std::string print_ratcut(const RatWindowCut& c) {
  if (!c.bounded) return "*";
  if (c.include_site) return c.q.str();
  return "(excl " + c.q.str() + ")";
}

}  // namespace

std::string print_word(const WordPtr& w) {
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
      return "E";
    case WordExpr::Kind::Lit:
      return "(lit " + std::to_string(w->lit().index) + " " +
             print_element(w->lit().value) + ")";
    case WordExpr::Kind::Cat: {
      std::string s = "(cat";
      for (const auto& p : w->parts()) s += " " + print_word(p);
      return s + ")";
    }
    case WordExpr::Kind::Inv:
      return "(inv " + print_word(w->inner()) + ")";
    case WordExpr::Kind::OmegaCat: {
      const OmegaRule& r = w->omega();
      std::string s = "(omega";
      if (r.start != 0) s += " (start " + std::to_string(r.start) + ")";
      if (!r.prefix.empty()) {
        s += " (prefix";
        for (const auto& p : r.prefix) s += " " + print_word(p);
        s += ")";
      }
      s += " (tail";
      for (const auto& slot : r.slots) s += " " + print_slot(slot);
      return s + "))";
    }
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w->qrule();
      std::string s = "(qshuffle";
      for (const auto& [m, word] : q.site_words)
        s += " (block " + std::to_string(m) + " " + print_word(word) + ")";
      for (const auto& [m, fs] : q.fibers) {
        s += " (fiber " + std::to_string(m);
        for (const auto& f : fs)
          s += " (site " + f.site.str() + " " + std::to_string(f.sign) + ")";
        s += ")";
      }
      if (q.tail_start != 0) s += " (tailstart " + std::to_string(q.tail_start) + ")";
      switch (q.site_tail.kind) {
        case SiteTail::Kind::None:
          break;
        case SiteTail::Kind::Power:
          s += " (blocktail power " + print_expfn(q.site_tail.exp) + ")";
          break;
        case SiteTail::Kind::InvolutionLetter:
          s += " (blocktail invol)";
          break;
        case SiteTail::Kind::SepBlock:
          s += " (blocktail sepblock " + print_expfn(q.site_tail.exp) + ")";
          break;
      }
      switch (q.fiber_tail.kind) {
        case FiberTail::Kind::None:
          break;
        case FiberTail::Kind::EnumSingleton:
          s += " (fibertail enum " + std::to_string(q.fiber_tail.offset) + ")";
          break;
        case FiberTail::Kind::DyadicRuler:
          s += " (fibertail dyadic " + std::to_string(q.fiber_tail.offset) + ")";
          break;
      }
      if (q.win_lo.bounded || q.win_hi.bounded)
        s += " (window " + print_ratcut(q.win_lo) + " " + print_ratcut(q.win_hi) + ")";
      return s + ")";
    }
  }
  return "E";
}

namespace {

std::string print_prefix(const char* tag, const std::vector<PathSeg>& prefix) {
  Position p;
  p.path = prefix;
  std::string pos = print_position(p);
  // (pos <segs...>) -> (tag <segs...>)
  return "(" + std::string(tag) + pos.substr(4);
}

std::string print_seg(const CoiSeg& seg) {
  std::string s;
  switch (seg.kind) {
    case CoiSeg::Kind::PointPairs: {
      s = "(pairs";
      if (seg.sign != 1) s += " (sign " + std::to_string(seg.sign) + ")";
      if (!seg.prefix_l.empty()) s += " " + print_prefix("prefixl", seg.prefix_l);
      if (!seg.prefix_r.empty()) s += " " + print_prefix("prefixr", seg.prefix_r);
      for (const auto& [l, r] : seg.pairs)
        s += " (pair " + print_position(l) + " " + print_position(r) + ")";
      return s + ")";
    }
    case CoiSeg::Kind::TermPaired: {
      s = "(terms (from " + std::to_string(seg.from_cycle) + ")";
      if (seg.to_cycle) s += " (to " + std::to_string(*seg.to_cycle) + ")";
      if (seg.shift != 0) s += " (shift " + std::to_string(seg.shift) + ")";
      if (seg.slot_l != 0) s += " (slotl " + std::to_string(seg.slot_l) + ")";
      if (seg.slot_r != 0) s += " (slotr " + std::to_string(seg.slot_r) + ")";
      if (!seg.prefix_l.empty()) s += " " + print_prefix("prefixl", seg.prefix_l);
      if (!seg.prefix_r.empty()) s += " " + print_prefix("prefixr", seg.prefix_r);
      return s + ")";
    }
    case CoiSeg::Kind::SitePaired: {
      s = "(sites (fromm " + std::to_string(seg.from_m) + ")";
      if (seg.site_lo.bounded || seg.site_hi.bounded)
        s += " (window " + print_ratcut(seg.site_lo) + " " + print_ratcut(seg.site_hi) + ")";
      if (!(seg.tf_a == Rational(1)) || !(seg.tf_b == Rational(0)))
        s += " (tf " + seg.tf_a.str() + " " + seg.tf_b.str() + ")";
      if (!seg.prefix_l.empty()) s += " " + print_prefix("prefixl", seg.prefix_l);
      if (!seg.prefix_r.empty()) s += " " + print_prefix("prefixr", seg.prefix_r);
      return s + ")";
    }
  }
  return s;
}

}  // namespace

std::string print_script(const Script& sc) {
  std::ostringstream out;
  for (const auto& [name, g] : sc.groups)
    out << "(defgroup " << name << " " << print_group(g) << ")\n";
  if (sc.has_registry) {
    out << "(registry";
    for (std::size_t i = 0; i < sc.registry.table().size(); ++i)
      out << " (" << i << " " << print_group(sc.registry.table()[i]) << ")";
    out << " (tail " << print_group(sc.registry.tail()) << "))\n";
  }
  for (const auto& [name, w] : sc.words)
    out << "(defword " << name << " " << print_word(w) << ")\n";
  for (const auto& t : sc.collection.triples()) {
    out << "(deftriple " << t.name << " (left " << print_word(t.left) << ") (right "
        << print_word(t.right) << ") (coi";
    for (const auto& seg : t.map.segs) out << " " << print_seg(seg);
    out << "))\n";
  }
  for (const auto& [name, ts] : sc.collections) {
    out << "(defcoll " << name;
    for (const auto& t : ts) out << " " << t;
    out << ")\n";
  }
  for (const auto& a : sc.asserts)
    out << "(assert-eq " << a.lhs << " " << a.rhs << " " << a.depth << ")\n";
  return out.str();
}

}  // namespace tw
