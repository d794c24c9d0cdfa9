#include "tw/words.hpp"

#include <algorithm>
#include <stdexcept>

namespace tw {

namespace {

constexpr std::int64_t kMaxMaterialize = 100000;
constexpr std::int64_t kEnumScanCap = 4096;

const GroupSpec& spec_of(const Registry& reg, const Letter& l) { return reg.at(l.index); }

Letter inv_letter(const Registry& reg, const Letter& l) {
  return Letter{l.index, g_inv(spec_of(reg, l), l.value)};
}

}  // namespace

bool FiniteWord::same_letters(const FiniteWord& o) const {
  if (letters_.size() != o.letters_.size()) return false;
  for (std::size_t i = 0; i < letters_.size(); ++i)
    if (letters_[i].letter != o.letters_[i].letter) return false;
  return true;
}

std::string FiniteWord::str() const {
  std::string s;
  for (std::size_t i = 0; i < letters_.size(); ++i) {
    if (i) s += " ";
    s += "g" + std::to_string(letters_[i].letter.index) + "^" + letters_[i].letter.value.str();
  }
  return s.empty() ? "E" : s;
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

WordPtr w_empty() {
  static const WordPtr e = std::shared_ptr<const WordExpr>(new WordExpr());
  return e;
}

WordPtr w_lit(const Registry& reg, Letter l) {
  if (l.index < 0) throw std::invalid_argument("negative group index");
  g_validate(reg.at(l.index), l.value);
  if (g_is_identity(reg.at(l.index), l.value))
    throw std::invalid_argument("identity letter");
  auto w = new WordExpr();
  w->kind_ = WordExpr::Kind::Lit;
  w->lit_ = std::move(l);
  return WordPtr(w);
}

WordPtr w_cat(std::vector<WordPtr> parts) {
  std::vector<WordPtr> flat;
  for (auto& p : parts) {
    if (!p || p->kind() == WordExpr::Kind::Empty) continue;
    if (p->kind() == WordExpr::Kind::Cat) {
      for (const auto& q : p->parts()) flat.push_back(q);
    } else {
      flat.push_back(p);
    }
  }
  if (flat.empty()) return w_empty();
  if (flat.size() == 1) return flat[0];
  auto w = new WordExpr();
  w->kind_ = WordExpr::Kind::Cat;
  w->parts_ = std::move(flat);
  return WordPtr(w);
}

WordPtr w_inv(const Registry& reg, WordPtr w) {
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
      return w;
    case WordExpr::Kind::Lit:
      return w_lit(reg, inv_letter(reg, w->lit()));
    case WordExpr::Kind::Inv:
      return w->inner();
    default: {
      auto out = new WordExpr();
      out->kind_ = WordExpr::Kind::Inv;
      out->inner_ = std::move(w);
      return WordPtr(out);
    }
  }
}

WordPtr w_omega(const Registry& reg, OmegaRule rule) {
  std::vector<WordPtr> prefix;
  for (auto& p : rule.prefix)
    if (p && p->kind() != WordExpr::Kind::Empty) prefix.push_back(p);
  rule.prefix = std::move(prefix);
  if (rule.slots.empty()) return w_cat(rule.prefix);
  for (const auto& s : rule.slots) {
    if (s.index.a < 1) throw std::invalid_argument("tail index map must be strictly increasing");
    if (s.kind == TailSlot::Kind::Power) {
      // base letter must exist at the first requested index
      std::int64_t i0 = s.index(rule.start);
      bool ok = s.base == TailSlot::Base::InfOrder ? reg.infinite_order_letter(i0).has_value()
                                                   : reg.involution_letter(i0).has_value();
      if (!ok) throw std::invalid_argument("registry lacks tail base letter at index " +
                                           std::to_string(i0));
    }
  }
  auto w = new WordExpr();
  w->kind_ = WordExpr::Kind::OmegaCat;
  w->omega_ = std::move(rule);
  return WordPtr(w);
}

namespace {

bool window_allows(const QRule& q, const Rational& s) {
  if (q.win_lo.bounded) {
    if (s < q.win_lo.q) return false;
    if (s == q.win_lo.q && !q.win_lo.include_site) return false;
  }
  if (q.win_hi.bounded) {
    if (s > q.win_hi.q) return false;
    if (s == q.win_hi.q && !q.win_hi.include_site) return false;
  }
  return true;
}

bool window_definitely_empty(const QRule& q) {
  if (!q.win_lo.bounded || !q.win_hi.bounded) return false;
  if (q.win_lo.q > q.win_hi.q) return true;
  if (q.win_lo.q == q.win_hi.q && !(q.win_lo.include_site && q.win_hi.include_site))
    return true;
  return false;
}

std::int64_t pow2_int(std::int64_t e) {
  if (e < 0 || e > 60) throw std::overflow_error("dyadic window too deep");
  return std::int64_t(1) << e;
}

// Dyadic ruler fibers for degree m with group offset off: odd a / 2^(m-off+1).
std::vector<QFiber> dyadic_fibers(const QRule& q, std::int64_t m, std::int64_t off) {
  std::vector<QFiber> out;
  std::int64_t den = pow2_int(m - off + 1);
  for (std::int64_t a = 1; a < den; a += 2) {
    Rational s(a, den);
    if (window_allows(q, s)) out.push_back({s, 1});
  }
  return out;
}

std::vector<QFiber> fibers_at(const QRule& q, std::int64_t m) {
  auto it = q.fibers.find(m);
  if (it != q.fibers.end()) {
    std::vector<QFiber> out;
    for (const auto& f : it->second)
      if (window_allows(q, f.site)) out.push_back(f);
    std::sort(out.begin(), out.end(),
              [](const QFiber& a, const QFiber& b) { return a.site < b.site; });
    return out;
  }
  if (m < q.tail_start) return {};
  switch (q.fiber_tail.kind) {
    case FiberTail::Kind::None:
      return {};
    case FiberTail::Kind::EnumSingleton: {
      if (m - q.fiber_tail.offset < 0) return {};
      Rational s = nth_rational(m - q.fiber_tail.offset);
      if (window_allows(q, s)) return {{s, 1}};
      return {};
    }
    case FiberTail::Kind::DyadicRuler: {
      if (m - q.fiber_tail.offset + 1 < 1) return {};
      return dyadic_fibers(q, m, q.fiber_tail.offset);
    }
  }
  return {};
}

WordPtr site_word_at(const Registry& reg, const QRule& q, std::int64_t m) {
  auto it = q.site_words.find(m);
  if (it != q.site_words.end()) return it->second;
  switch (q.site_tail.kind) {
    case SiteTail::Kind::None:
      throw std::invalid_argument("no site word for degree " + std::to_string(m));
    case SiteTail::Kind::Power: {
      auto h = reg.infinite_order_letter(m);
      if (!h) throw std::invalid_argument("no infinite-order letter at " + std::to_string(m));
      return w_lit(reg, Letter{m, g_pow(reg.at(m), h->value, q.site_tail.exp.at(m))});
    }
    case SiteTail::Kind::InvolutionLetter: {
      auto g = reg.involution_letter(m);
      if (!g) throw std::invalid_argument("no involution at " + std::to_string(m));
      return w_lit(reg, *g);
    }
    case SiteTail::Kind::SepBlock: {
      auto h = reg.infinite_order_letter(m);
      auto hp = reg.infinite_order_letter(m + 1);
      if (!h || !hp)
        throw std::invalid_argument("no infinite-order letters for sep block at " +
                                    std::to_string(m));
      std::int64_t r = q.site_tail.exp.at(m);
      WordPtr sep = w_lit(reg, Letter{m, g_pow(reg.at(m), h->value, r)});
      return w_cat({sep, w_lit(reg, *hp), sep});
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

WordPtr w_qshuffle(const Registry& reg, QRule rule) {
  if (window_definitely_empty(rule)) return w_empty();
  // site words of table fibers must exist and satisfy the degree bound
  for (const auto& [m, fs] : rule.fibers) {
    if (fs.empty()) continue;
    WordPtr sw = site_word_at(reg, rule, m);
    auto d = d_word(reg, sw);
    if (!d || *d < m)
      throw std::invalid_argument("site word for degree " + std::to_string(m) +
                                  " violates d >= m");
  }
  // table sites pairwise distinct
  std::vector<Rational> sites;
  for (const auto& [m, fs] : rule.fibers)
    for (const auto& f : fs) sites.push_back(f.site);
  std::sort(sites.begin(), sites.end());
  for (std::size_t i = 1; i < sites.size(); ++i)
    if (sites[i] == sites[i - 1]) throw std::invalid_argument("duplicate fiber site");
  auto w = new WordExpr();
  w->kind_ = WordExpr::Kind::QShuffle;
  w->q_ = std::move(rule);
  return WordPtr(w);
}

WordPtr w_power(const Registry& reg, const Letter& h, std::int64_t k) {
  if (k == 0) throw std::invalid_argument("zero power is the identity");
  return w_lit(reg, Letter{h.index, g_pow(reg.at(h.index), h.value, k)});
}

std::vector<QFiber> q_live_fibers(const QRule& q, std::int64_t m) { return fibers_at(q, m); }

std::optional<std::pair<std::int64_t, int>> q_site_lookup(const QRule& q, const Rational& s) {
  if (!window_allows(q, s)) return std::nullopt;
  for (const auto& [m, fs] : q.fibers) {
    (void)fs;
    for (const auto& f : fibers_at(q, m))
      if (f.site == s) return std::make_pair(m, f.sign);
  }
  if (q.fiber_tail.kind == FiberTail::Kind::EnumSingleton) {
    for (std::int64_t m = std::max(q.tail_start, q.fiber_tail.offset);
         m < q.tail_start + kEnumScanCap; ++m)
      if (!q.fibers.count(m) && nth_rational(m - q.fiber_tail.offset) == s)
        return std::make_pair(m, 1);
  } else if (q.fiber_tail.kind == FiberTail::Kind::DyadicRuler) {
    std::int64_t den = s.den(), e = 0;
    while (den % 2 == 0) {
      den /= 2;
      ++e;
    }
    if (den == 1 && e >= 1 && s > Rational(0) && s < Rational(1)) {
      std::int64_t m = q.fiber_tail.offset + e - 1;
      if (m >= q.tail_start && !q.fibers.count(m)) return std::make_pair(m, 1);
    }
  }
  return std::nullopt;
}

WordPtr q_site_word(const Registry& reg, const QRule& q, std::int64_t m) {
  return site_word_at(reg, q, m);
}

WordPtr ruler_word(const Registry& reg, std::int64_t offset) {
  QRule q;
  q.tail_start = offset;
  q.site_tail.kind = SiteTail::Kind::InvolutionLetter;
  q.fiber_tail.kind = FiberTail::Kind::DyadicRuler;
  q.fiber_tail.offset = offset;
  return w_qshuffle(reg, q);
}

std::string WordExpr::str() const {
  switch (kind_) {
    case Kind::Empty:
      return "E";
    case Kind::Lit:
      return "g" + std::to_string(lit_.index) + "^" + lit_.value.str();
    case Kind::Cat: {
      std::string s = "(cat";
      for (const auto& p : parts_) s += " " + p->str();
      return s + ")";
    }
    case Kind::Inv:
      return "(inv " + inner_->str() + ")";
    case Kind::OmegaCat: {
      std::string s = "(omega prefix=" + std::to_string(omega_.prefix.size()) +
                      " slots=" + std::to_string(omega_.slots.size()) +
                      " start=" + std::to_string(omega_.start) + ")";
      return s;
    }
    case Kind::QShuffle:
      return "(qshuffle tables=" + std::to_string(q_.fibers.size()) + ")";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// OmegaCat term layout
// ---------------------------------------------------------------------------

namespace {

struct TermLayout {
  const OmegaRule* rule;
  std::int64_t prefix_count() const { return static_cast<std::int64_t>(rule->prefix.size()); }
  std::int64_t slot_count() const { return static_cast<std::int64_t>(rule->slots.size()); }
  // term index of (cycle j, slot s)
  std::int64_t term_of(std::int64_t j, std::int64_t s) const {
    return prefix_count() + (j - rule->start) * slot_count() + s;
  }
  std::int64_t cycle_of_term(std::int64_t t) const {
    return rule->start + (t - prefix_count()) / slot_count();
  }
  std::int64_t slot_of_term(std::int64_t t) const {
    return (t - prefix_count()) % slot_count();
  }
};

WordPtr emit_slot(const Registry& reg, const TailSlot& sl, std::int64_t j) {
  if (sl.kind == TailSlot::Kind::Ruler) return ruler_word(reg, sl.index(j));
  std::int64_t idx = sl.index(j);
  std::optional<Letter> base = sl.base == TailSlot::Base::InfOrder
                                   ? reg.infinite_order_letter(idx)
                                   : reg.involution_letter(idx);
  if (!base) throw std::invalid_argument("no tail base letter at index " + std::to_string(idx));
  std::int64_t e = sl.exp.at(j) * sl.sign;
  GroupElement v = g_pow(reg.at(idx), base->value, e);
  if (g_is_identity(reg.at(idx), v))
    throw std::invalid_argument("tail power collapses to identity");
  return w_lit(reg, Letter{idx, v});
}

WordPtr term_word(const Registry& reg, const OmegaRule& rule, std::int64_t t) {
  TermLayout lay{&rule};
  if (t < lay.prefix_count()) return rule.prefix[t];
  std::int64_t j = lay.cycle_of_term(t);
  std::int64_t s = lay.slot_of_term(t);
  return emit_slot(reg, rule.slots[s], j);
}

// Smallest degree the tail can still emit at or after cycle j.
std::int64_t tail_min_degree(const OmegaRule& rule, std::int64_t j) {
  std::int64_t best = INT64_MAX;
  for (const auto& s : rule.slots) best = std::min(best, s.index(j));
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// project
// ---------------------------------------------------------------------------

namespace {

void project_into(const Registry& reg, const WordExpr& w, std::int64_t N,
                  const std::vector<PathSeg>& prefix, std::vector<PosLetter>& out) {
  switch (w.kind()) {
    case WordExpr::Kind::Empty:
      return;
    case WordExpr::Kind::Lit: {
      if (w.lit().index <= N) {
        Position p;
        p.path = prefix;
        out.push_back({std::move(p), w.lit()});
      }
      return;
    }
    case WordExpr::Kind::Cat: {
      for (std::size_t i = 0; i < w.parts().size(); ++i) {
        auto pre = prefix;
        pre.push_back(PathSeg::cat(static_cast<std::int64_t>(i)));
        project_into(reg, *w.parts()[i], N, pre, out);
      }
      return;
    }
    case WordExpr::Kind::Inv: {
      std::vector<PosLetter> innerv;
      project_into(reg, *w.inner(), N, {}, innerv);
      for (auto it = innerv.rbegin(); it != innerv.rend(); ++it) {
        Position p;
        p.path = prefix;
        p.path.push_back(PathSeg::rev());
        p.path.insert(p.path.end(), it->pos.path.begin(), it->pos.path.end());
        out.push_back({std::move(p), inv_letter(reg, it->letter)});
      }
      return;
    }
    case WordExpr::Kind::OmegaCat: {
      const OmegaRule& rule = w.omega();
      TermLayout lay{&rule};
      for (std::int64_t t = 0; t < lay.prefix_count(); ++t) {
        auto pre = prefix;
        pre.push_back(PathSeg::omega(t));
        project_into(reg, *rule.prefix[t], N, pre, out);
      }
      std::int64_t guard = 0;
      for (std::int64_t j = rule.start; tail_min_degree(rule, j) <= N; ++j) {
        if (++guard > kMaxMaterialize) throw std::logic_error("escape bound runaway");
        for (std::int64_t s = 0; s < lay.slot_count(); ++s) {
          if (rule.slots[s].index(j) > N) continue;
          auto pre = prefix;
          pre.push_back(PathSeg::omega(lay.term_of(j, s)));
          project_into(reg, *emit_slot(reg, rule.slots[s], j), N, pre, out);
        }
      }
      return;
    }
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w.qrule();
      struct SiteHit {
        Rational site;
        int sign;
        std::int64_t m;
      };
      std::vector<SiteHit> hits;
      for (const auto& [m, fs] : q.fibers) {
        if (m > N) continue;
        for (const auto& f : fibers_at(q, m)) hits.push_back({f.site, f.sign, m});
      }
      for (std::int64_t m = q.tail_start; m <= N; ++m) {
        if (q.fibers.count(m)) continue;
        for (const auto& f : fibers_at(q, m)) hits.push_back({f.site, f.sign, m});
      }
      std::sort(hits.begin(), hits.end(),
                [](const SiteHit& a, const SiteHit& b) { return a.site < b.site; });
      for (std::size_t i = 1; i < hits.size(); ++i)
        if (hits[i].site == hits[i - 1].site)
          throw std::invalid_argument("overlapping fiber sites");
      for (const auto& h : hits) {
        WordPtr sw = site_word_at(reg, q, h.m);
        {
          auto d = d_word(reg, sw);
          if (!d || *d < h.m) throw std::invalid_argument("escape bound violated: site word");
        }
        if (h.sign >= 0) {
          auto pre = prefix;
          pre.push_back(PathSeg::rat(h.site));
          project_into(reg, *sw, N, pre, out);
        } else {
          std::vector<PosLetter> innerv;
          project_into(reg, *sw, N, {}, innerv);
          for (auto it = innerv.rbegin(); it != innerv.rend(); ++it) {
            Position p;
            p.path = prefix;
            p.path.push_back(PathSeg::rat(h.site));
            p.path.push_back(PathSeg::rev());
            p.path.insert(p.path.end(), it->pos.path.begin(), it->pos.path.end());
            out.push_back({std::move(p), inv_letter(reg, it->letter)});
          }
        }
      }
      return;
    }
  }
}

}  // namespace

FiniteWord project(const Registry& reg, const WordExpr& w, std::int64_t N) {
  if (N < 0) throw std::invalid_argument("negative depth");
  std::vector<PosLetter> out;
  project_into(reg, w, N, {}, out);
  return FiniteWord(std::move(out));
}

// ---------------------------------------------------------------------------
// free_reduce / reduced_mul / equiv_depth
// ---------------------------------------------------------------------------

FiniteWord free_reduce(const Registry& reg, const FiniteWord& w) {
  std::vector<PosLetter> stack;
  for (const auto& pl : w.letters()) {
    const GroupSpec& spec = spec_of(reg, pl.letter);
    if (g_is_identity(spec, pl.letter.value)) continue;
    if (!stack.empty() && stack.back().letter.index == pl.letter.index) {
      GroupElement merged = g_mul(spec, stack.back().letter.value, pl.letter.value);
      if (g_is_identity(spec, merged)) {
        stack.pop_back();
      } else {
        stack.back().letter.value = merged;
      }
    } else {
      stack.push_back(pl);
    }
  }
  return FiniteWord(std::move(stack));
}

namespace {

void check_freely_reduced(const Registry& reg, const FiniteWord& w, const char* who) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (g_is_identity(spec_of(reg, w.at(i).letter), w.at(i).letter.value))
      throw std::logic_error(std::string(who) + ": identity letter in reduced input");
    if (i && w.at(i).letter.index == w.at(i - 1).letter.index)
      throw std::logic_error(std::string(who) + ": adjacent same-group letters");
  }
}

}  // namespace

FiniteWord reduced_mul(const Registry& reg, const FiniteWord& a, const FiniteWord& b) {
  check_freely_reduced(reg, a, "reduced_mul");
  check_freely_reduced(reg, b, "reduced_mul");
  std::size_t k = 0;
  while (k < a.size() && k < b.size()) {
    const Letter& la = a.at(a.size() - 1 - k).letter;
    const Letter& lb = b.at(k).letter;
    if (la.index != lb.index) break;
    if (!g_is_identity(reg.at(la.index), g_mul(reg.at(la.index), la.value, lb.value))) break;
    ++k;
  }
  std::vector<Letter> letters;
  for (std::size_t i = 0; i + k < a.size(); ++i) letters.push_back(a.at(i).letter);
  std::size_t b_from = k;
  if (!letters.empty() && b_from < b.size() &&
      letters.back().index == b.at(b_from).letter.index) {
    const GroupSpec& spec = reg.at(letters.back().index);
    GroupElement merged = g_mul(spec, letters.back().value, b.at(b_from).letter.value);
    // maximal cancellation above makes a vanishing merge impossible
    if (g_is_identity(spec, merged)) throw std::logic_error("reduced_mul: merge vanished");
    letters.back().value = merged;
    ++b_from;
  }
  for (std::size_t i = b_from; i < b.size(); ++i) letters.push_back(b.at(i).letter);
  std::vector<PosLetter> out;
  out.reserve(letters.size());
  for (std::size_t i = 0; i < letters.size(); ++i) {
    Position p;
    p.path.push_back(PathSeg::omega(static_cast<std::int64_t>(i)));
    out.push_back({std::move(p), letters[i]});
  }
  return FiniteWord(std::move(out));
}

bool equiv_depth(const Registry& reg, const WordExpr& W, const WordExpr& V, std::int64_t N) {
  return free_reduce(reg, project(reg, W, N)).same_letters(free_reduce(reg, project(reg, V, N)));
}

// ---------------------------------------------------------------------------
// d_word / finiteness / end letters
// ---------------------------------------------------------------------------

namespace {

std::optional<std::int64_t> min_opt(std::optional<std::int64_t> a,
                                    std::optional<std::int64_t> b) {
  if (!a) return b;
  if (!b) return a;
  return std::min(*a, *b);
}

// First degree m >= from whose tail fiber set is nonempty, if any.
std::optional<std::int64_t> first_live_tail(const QRule& q, std::int64_t from) {
  if (q.fiber_tail.kind == FiberTail::Kind::None) return std::nullopt;
  for (std::int64_t m = from; m < from + kEnumScanCap; ++m) {
    if (q.fibers.count(m)) continue;  // table overrides tail
    if (!fibers_at(q, m).empty()) return m;
  }
  throw std::invalid_argument("window not representable: tail fibers never enter it");
}

}  // namespace

std::optional<std::int64_t> d_word(const Registry& reg, const WordExpr& w) {
  switch (w.kind()) {
    case WordExpr::Kind::Empty:
      return std::nullopt;
    case WordExpr::Kind::Lit:
      return w.lit().index;
    case WordExpr::Kind::Cat: {
      std::optional<std::int64_t> best;
      for (const auto& p : w.parts()) best = min_opt(best, d_word(reg, *p));
      return best;
    }
    case WordExpr::Kind::Inv:
      return d_word(reg, *w.inner());
    case WordExpr::Kind::OmegaCat: {
      std::optional<std::int64_t> best;
      for (const auto& p : w.omega().prefix) best = min_opt(best, d_word(reg, *p));
      best = min_opt(best, tail_min_degree(w.omega(), w.omega().start));
      return best;
    }
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w.qrule();
      std::optional<std::int64_t> best;
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        if (!fibers_at(q, m).empty()) best = min_opt(best, d_word(reg, site_word_at(reg, q, m)));
      }
      if (auto m = first_live_tail(q, q.tail_start)) {
        if (!best || *m < *best) best = min_opt(best, d_word(reg, site_word_at(reg, q, *m)));
      }
      return best;
    }
  }
  return std::nullopt;
}

bool word_is_finite(const WordExpr& w) {
  switch (w.kind()) {
    case WordExpr::Kind::Empty:
    case WordExpr::Kind::Lit:
      return true;
    case WordExpr::Kind::Cat: {
      for (const auto& p : w.parts())
        if (!word_is_finite(*p)) return false;
      return true;
    }
    case WordExpr::Kind::Inv:
      return word_is_finite(*w.inner());
    case WordExpr::Kind::OmegaCat:
      return false;  // live slots, by construction
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w.qrule();
      if (q.fiber_tail.kind != FiberTail::Kind::None) {
        try {
          if (first_live_tail(q, q.tail_start).has_value()) return false;
        } catch (const std::invalid_argument&) {
          // tail never enters the window within scan horizon: treat as dead
        }
      }
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        if (fibers_at(q, m).empty()) continue;
        auto it = q.site_words.find(m);
        // generated tail site words are single letters or short cats
        if (it != q.site_words.end() && !word_is_finite(*it->second)) return false;
      }
      return true;
    }
  }
  return true;
}

std::optional<Letter> first_letter(const Registry& reg, const WordExpr& w) {
  switch (w.kind()) {
    case WordExpr::Kind::Empty:
      return std::nullopt;
    case WordExpr::Kind::Lit:
      return w.lit();
    case WordExpr::Kind::Cat: {
      // the first part is nonempty by construction
      return first_letter(reg, *w.parts().front());
    }
    case WordExpr::Kind::Inv: {
      auto l = last_letter(reg, *w.inner());
      if (!l) return std::nullopt;
      return inv_letter(reg, *l);
    }
    case WordExpr::Kind::OmegaCat: {
      const OmegaRule& r = w.omega();
      if (!r.prefix.empty()) return first_letter(reg, *r.prefix.front());
      return first_letter(reg, *emit_slot(reg, r.slots.front(), r.start));
    }
    case WordExpr::Kind::QShuffle: {
      // only table-only shuffles have a minimal site
      const QRule& q = w.qrule();
      if (q.fiber_tail.kind != FiberTail::Kind::None) return std::nullopt;
      std::optional<Rational> best;
      std::int64_t best_m = 0;
      int best_sign = 1;
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        for (const auto& f : fibers_at(q, m)) {
          if (!best || f.site < *best) {
            best = f.site;
            best_m = m;
            best_sign = f.sign;
          }
        }
      }
      if (!best) return std::nullopt;
      WordPtr sw = site_word_at(reg, q, best_m);
      auto l = best_sign >= 0 ? first_letter(reg, *sw) : last_letter(reg, *sw);
      if (!l) return std::nullopt;
      return best_sign >= 0 ? *l : inv_letter(reg, *l);
    }
  }
  return std::nullopt;
}

std::optional<Letter> last_letter(const Registry& reg, const WordExpr& w) {
  switch (w.kind()) {
    case WordExpr::Kind::Empty:
      return std::nullopt;
    case WordExpr::Kind::Lit:
      return w.lit();
    case WordExpr::Kind::Cat:
      return last_letter(reg, *w.parts().back());
    case WordExpr::Kind::Inv: {
      auto l = first_letter(reg, *w.inner());
      if (!l) return std::nullopt;
      return inv_letter(reg, *l);
    }
    case WordExpr::Kind::OmegaCat:
      return std::nullopt;  // no last term
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w.qrule();
      if (q.fiber_tail.kind != FiberTail::Kind::None) return std::nullopt;
      std::optional<Rational> best;
      std::int64_t best_m = 0;
      int best_sign = 1;
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        for (const auto& f : fibers_at(q, m)) {
          if (!best || f.site > *best) {
            best = f.site;
            best_m = m;
            best_sign = f.sign;
          }
        }
      }
      if (!best) return std::nullopt;
      WordPtr sw = site_word_at(reg, q, best_m);
      auto l = best_sign >= 0 ? last_letter(reg, *sw) : first_letter(reg, *sw);
      if (!l) return std::nullopt;
      return best_sign >= 0 ? *l : inv_letter(reg, *l);
    }
  }
  return std::nullopt;
}

std::optional<Position> first_position(const Registry& reg, const WordPtr& w) {
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
      return std::nullopt;
    case WordExpr::Kind::Lit:
      return Position{};
    case WordExpr::Kind::Cat: {
      auto p = first_position(reg, w->parts().front());
      if (!p) return std::nullopt;
      return p->prefixed(PathSeg::cat(0));
    }
    case WordExpr::Kind::Inv: {
      auto p = last_position(reg, w->inner());
      if (!p) return std::nullopt;
      return p->prefixed(PathSeg::rev());
    }
    case WordExpr::Kind::OmegaCat: {
      const OmegaRule& r = w->omega();
      if (!r.prefix.empty()) {
        auto p = first_position(reg, r.prefix.front());
        if (!p) return std::nullopt;
        return p->prefixed(PathSeg::omega(0));
      }
      // first emission of the first cycle
      OmegaRule one;
      one.slots = {r.slots.front()};
      one.start = r.start;
      WordPtr em = w_omega(reg, one);
      FiniteWord f = project(reg, em, r.slots.front().index(r.start));
      if (f.empty()) return std::nullopt;
      Position inner;  // power emissions are single letters at the term itself
      return inner.prefixed(
          PathSeg::omega(static_cast<std::int64_t>(r.prefix.size())));
    }
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w->qrule();
      if (q.fiber_tail.kind != FiberTail::Kind::None) return std::nullopt;
      std::optional<Rational> best;
      std::int64_t bm = 0;
      int bs = 1;
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        for (const auto& f : q_live_fibers(q, m))
          if (!best || f.site < *best) {
            best = f.site;
            bm = m;
            bs = f.sign;
          }
      }
      if (!best) return std::nullopt;
      WordPtr sw = q_site_word(reg, q, bm);
      if (bs >= 0) {
        auto p = first_position(reg, sw);
        if (!p) return std::nullopt;
        return p->prefixed(PathSeg::rat(*best));
      }
      auto p = last_position(reg, sw);
      if (!p) return std::nullopt;
      Position out = p->prefixed(PathSeg::rev());
      return out.prefixed(PathSeg::rat(*best));
    }
  }
  return std::nullopt;
}

std::optional<Position> last_position(const Registry& reg, const WordPtr& w) {
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
      return std::nullopt;
    case WordExpr::Kind::Lit:
      return Position{};
    case WordExpr::Kind::Cat: {
      auto p = last_position(reg, w->parts().back());
      if (!p) return std::nullopt;
      return p->prefixed(
          PathSeg::cat(static_cast<std::int64_t>(w->parts().size()) - 1));
    }
    case WordExpr::Kind::Inv: {
      auto p = first_position(reg, w->inner());
      if (!p) return std::nullopt;
      return p->prefixed(PathSeg::rev());
    }
    case WordExpr::Kind::OmegaCat:
      return std::nullopt;
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w->qrule();
      if (q.fiber_tail.kind != FiberTail::Kind::None) return std::nullopt;
      std::optional<Rational> best;
      std::int64_t bm = 0;
      int bs = 1;
      for (const auto& [m, fs] : q.fibers) {
        (void)fs;
        for (const auto& f : q_live_fibers(q, m))
          if (!best || f.site > *best) {
            best = f.site;
            bm = m;
            bs = f.sign;
          }
      }
      if (!best) return std::nullopt;
      WordPtr sw = q_site_word(reg, q, bm);
      if (bs >= 0) {
        auto p = last_position(reg, sw);
        if (!p) return std::nullopt;
        return p->prefixed(PathSeg::rat(*best));
      }
      auto p = first_position(reg, sw);
      if (!p) return std::nullopt;
      Position out = p->prefixed(PathSeg::rev());
      return out.prefixed(PathSeg::rat(*best));
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// subword
// ---------------------------------------------------------------------------

namespace {

using PosMap = std::function<Position(const Position&)>;

Position identity_map(const Position& p) { return p; }

struct Piece {
  WordPtr word;
  Interval host_iv;  // region of the host this piece came from
  PosMap map;        // host position (inside host_iv) -> piece-local position
};

// Builds the concatenation of pieces, mirroring w_cat's flattening so the
// composed position map matches the actual expression layout.
WordPtr assemble_cat(std::vector<Piece> pieces, PosMap* out_map) {
  struct Placed {
    Interval host_iv;
    PosMap map;
    std::int64_t base = 0;
    std::int64_t span = 0;  // 0: dropped, 1: plain part, >1: inlined cat
  };
  auto placed = std::make_shared<std::vector<Placed>>();
  std::vector<WordPtr> flat;
  for (auto& pc : pieces) {
    Placed pl;
    pl.host_iv = pc.host_iv;
    pl.map = pc.map;
    pl.base = static_cast<std::int64_t>(flat.size());
    if (pc.word->kind() == WordExpr::Kind::Empty) {
      pl.span = 0;
    } else if (pc.word->kind() == WordExpr::Kind::Cat) {
      pl.span = static_cast<std::int64_t>(pc.word->parts().size());
      for (const auto& q : pc.word->parts()) flat.push_back(q);
    } else {
      pl.span = 1;
      flat.push_back(pc.word);
    }
    placed->push_back(std::move(pl));
  }
  WordPtr result = w_cat(flat);
  bool single = flat.size() == 1;
  if (out_map) {
    *out_map = [placed, single](const Position& p) -> Position {
      for (const auto& pl : *placed) {
        if (pl.span == 0) continue;
        bool inside;
        try {
          inside = pl.host_iv.contains(p);
        } catch (const std::invalid_argument&) {
          throw std::invalid_argument("position straddles a subword boundary: " + p.str());
        }
        if (!inside) continue;
        Position local = pl.map(p);
        if (single) {
          if (pl.span > 1) return local;  // single flattened cat piece
          return local;
        }
        if (pl.span > 1) {
          // local starts with a CatPart segment of the piece
          if (local.path.empty() || local.path[0].kind != PathSeg::Kind::CatPart)
            throw std::logic_error("inlined piece position missing cat segment");
          local.path[0].idx += pl.base;
          return local;
        }
        return local.prefixed(PathSeg::cat(pl.base));
      }
      throw std::invalid_argument("position outside subword interval: " + p.str());
    };
  }
  return result;
}

// Strips the leading path segment (which must match `seg` in kind and value)
// from a cut anchor. Returns the local cut; `excluded` reports an Open cut
// anchored exactly at this region.
struct LocalCut {
  Cut cut;            // local cut (Inf when the region is wholly included)
  bool excluded = false;  // region wholly excluded
};

LocalCut descend_cut(const Cut& c, const PathSeg& seg, bool is_low) {
  (void)is_low;
  LocalCut out;
  if (c.kind == Cut::Kind::Inf) {
    out.cut = Cut::inf();
    return out;
  }
  if (c.pos.path.empty() || !(c.pos.path[0] == seg))
    throw std::logic_error("descend_cut: anchor does not enter this region");
  if (c.pos.path.size() == 1) {
    if (c.kind == Cut::Kind::Closed) {
      out.cut = Cut::inf();
    } else {
      out.excluded = true;
    }
    return out;
  }
  out.cut.kind = c.kind;
  out.cut.pos.path.assign(c.pos.path.begin() + 1, c.pos.path.end());
  return out;
}

SubwordResult subword_impl(const Registry& reg, const WordPtr& w, const Interval& I);

// Per-piece recursion helper: restrict part `pw` (whose region in the host is
// addressed by `seg`) by whichever of I's cuts enter it.
Piece part_piece(const Registry& reg, const WordPtr& pw, const PathSeg& seg,
                 const Interval& I, bool low_enters, bool high_enters) {
  Interval local = Interval::full();
  bool dead = false;
  if (low_enters) {
    LocalCut lc = descend_cut(I.low, seg, true);
    if (lc.excluded) dead = true;
    local.low = lc.cut;
  }
  if (high_enters) {
    LocalCut hc = descend_cut(I.high, seg, false);
    if (hc.excluded) dead = true;
    local.high = hc.cut;
  }
  Piece out;
  // host region of this piece: the part region clipped by I
  out.host_iv.low = low_enters && I.low.kind != Cut::Kind::Inf
                        ? I.low
                        : Cut::closed(Position{}.prefixed(seg));
  out.host_iv.high = high_enters && I.high.kind != Cut::Kind::Inf
                         ? I.high
                         : Cut::closed(Position{}.prefixed(seg));
  if (dead) {
    out.word = w_empty();
    out.map = identity_map;
    return out;
  }
  SubwordResult sr = subword_impl(reg, pw, local);
  out.word = sr.word;
  PosMap inner = sr.map;
  out.map = [inner](const Position& p) -> Position {
    if (p.path.empty()) throw std::invalid_argument("position does not enter region");
    Position stripped;
    stripped.path.assign(p.path.begin() + 1, p.path.end());
    return inner(stripped);
  };
  return out;
}

// Which leading region index (CatPart/OmegaIdx/Rat) a cut enters, if bounded.
template <typename Extract>
std::optional<std::invoke_result_t<Extract, const PathSeg&>> cut_region(
    const Cut& c, PathSeg::Kind kind, Extract extract) {
  if (c.kind == Cut::Kind::Inf) return std::nullopt;
  if (c.pos.path.empty() || c.pos.path[0].kind != kind)
    throw std::invalid_argument("cut anchor has unexpected shape: " + c.pos.str());
  return extract(c.pos.path[0]);
}

SubwordResult subword_impl(const Registry& reg, const WordPtr& w, const Interval& I) {
  if (I.low.kind == Cut::Kind::Inf && I.high.kind == Cut::Kind::Inf) {
    return {w, identity_map};
  }
  if (I.definitely_empty()) return {w_empty(), identity_map};
  switch (w->kind()) {
    case WordExpr::Kind::Empty:
      return {w_empty(), identity_map};
    case WordExpr::Kind::Lit: {
      // The single point has the empty path; cuts must be region cuts here.
      bool keep = true;
      if (I.low.kind == Cut::Kind::Open && I.low.pos.path.empty()) keep = false;
      if (I.high.kind == Cut::Kind::Open && I.high.pos.path.empty()) keep = false;
      if (!I.low.pos.path.empty() || !I.high.pos.path.empty())
        throw std::invalid_argument("cut anchored below a letter");
      if (!keep) return {w_empty(), identity_map};
      return {w, identity_map};
    }
    case WordExpr::Kind::Cat: {
      const auto& parts = w->parts();
      std::int64_t lo_part = 0, hi_part = static_cast<std::int64_t>(parts.size()) - 1;
      if (auto r = cut_region(I.low, PathSeg::Kind::CatPart,
                              [](const PathSeg& s) { return s.idx; }))
        lo_part = *r;
      if (auto r = cut_region(I.high, PathSeg::Kind::CatPart,
                              [](const PathSeg& s) { return s.idx; }))
        hi_part = *r;
      if (lo_part > hi_part) return {w_empty(), identity_map};
      std::vector<Piece> pieces;
      for (std::int64_t p = lo_part; p <= hi_part; ++p) {
        pieces.push_back(part_piece(reg, parts[p], PathSeg::cat(p), I, p == lo_part,
                                    p == hi_part));
      }
      SubwordResult out;
      out.word = assemble_cat(std::move(pieces), &out.map);
      return out;
    }
    case WordExpr::Kind::Inv: {
      // strip the RevEnter anchors, swap cut roles, recurse, re-wrap
      auto strip_rev = [](const Cut& c) -> Cut {
        if (c.kind == Cut::Kind::Inf) return c;
        if (c.pos.path.empty() || c.pos.path[0].kind != PathSeg::Kind::RevEnter)
          throw std::invalid_argument("cut into inverse word lacks reversal marker");
        Cut out;
        out.kind = c.kind;
        out.pos.path.assign(c.pos.path.begin() + 1, c.pos.path.end());
        return out;
      };
      Interval innerI;
      innerI.low = strip_rev(I.high);
      innerI.high = strip_rev(I.low);
      SubwordResult sr = subword_impl(reg, w->inner(), innerI);
      SubwordResult out;
      out.word = w_inv(reg, sr.word);
      PosMap inner = sr.map;
      bool collapsed = out.word->kind() != WordExpr::Kind::Inv;
      out.map = [inner, collapsed](const Position& p) -> Position {
        if (p.path.empty() || p.path[0].kind != PathSeg::Kind::RevEnter)
          throw std::invalid_argument("position into inverse word lacks reversal marker");
        Position stripped;
        stripped.path.assign(p.path.begin() + 1, p.path.end());
        Position local = inner(stripped);
        if (collapsed) return local;  // Lit/Empty: the path is trivial anyway
        return local.prefixed(PathSeg::rev());
      };
      return out;
    }
    case WordExpr::Kind::OmegaCat: {
      const OmegaRule& rule = w->omega();
      TermLayout lay{&rule};
      std::int64_t t_lo = 0;
      if (auto r = cut_region(I.low, PathSeg::Kind::OmegaIdx,
                              [](const PathSeg& s) { return s.idx; }))
        t_lo = *r;
      bool bounded = I.high.kind != Cut::Kind::Inf;
      std::int64_t t_hi = -1;
      if (bounded)
        t_hi = *cut_region(I.high, PathSeg::Kind::OmegaIdx,
                           [](const PathSeg& s) { return s.idx; });
      if (bounded && t_lo > t_hi) return {w_empty(), identity_map};
      if (t_hi > kMaxMaterialize || t_lo > kMaxMaterialize)
        throw std::invalid_argument("subword cut too deep in the tail");

      std::vector<Piece> pieces;
      auto push_term = [&](std::int64_t t, bool low_enters, bool high_enters) {
        pieces.push_back(part_piece(reg, term_word(reg, rule, t), PathSeg::omega(t), I,
                                    low_enters, high_enters));
      };
      if (bounded) {
        for (std::int64_t t = t_lo; t <= t_hi; ++t)
          push_term(t, t == t_lo, t == t_hi);
        SubwordResult out;
        out.word = assemble_cat(std::move(pieces), &out.map);
        return out;
      }
      // unbounded above: materialize through the end of t_lo's cycle (or the
      // prefix), then keep the remaining tail as a re-anchored OmegaCat
      std::int64_t mat_end;  // last materialized term
      std::int64_t next_cycle;
      if (t_lo < lay.prefix_count()) {
        mat_end = lay.prefix_count() - 1;
        next_cycle = rule.start;
      } else {
        std::int64_t j0 = lay.cycle_of_term(t_lo);
        mat_end = lay.term_of(j0, lay.slot_count() - 1);
        next_cycle = j0 + 1;
      }
      for (std::int64_t t = t_lo; t <= mat_end; ++t) push_term(t, t == t_lo, false);
      OmegaRule tail_rule;
      tail_rule.slots = rule.slots;
      tail_rule.start = next_cycle;
      WordPtr tail = w_omega(reg, tail_rule);
      // host terms t > mat_end map to tail terms t - shift
      std::int64_t shift = mat_end + 1;
      Piece tail_piece;
      tail_piece.word = tail;
      tail_piece.host_iv.low = Cut::closed(Position{}.prefixed(PathSeg::omega(shift)));
      tail_piece.host_iv.high = Cut::inf();
      tail_piece.map = [shift](const Position& p) -> Position {
        if (p.path.empty() || p.path[0].kind != PathSeg::Kind::OmegaIdx)
          throw std::invalid_argument("position does not address an omega term");
        Position out = p;
        out.path[0].idx -= shift;
        if (out.path[0].idx < 0) throw std::invalid_argument("position before tail");
        return out;
      };
      pieces.push_back(std::move(tail_piece));
      SubwordResult out;
      out.word = assemble_cat(std::move(pieces), &out.map);
      return out;
    }
    case WordExpr::Kind::QShuffle: {
      const QRule& q = w->qrule();
      // classify each cut: unbounded, site-region, or inside a site block
      struct SideInfo {
        bool bounded = false;
        Rational site;
        bool inside = false;  // cut path goes below the site segment
      };
      auto classify = [](const Cut& c) -> SideInfo {
        SideInfo si;
        if (c.kind == Cut::Kind::Inf) return si;
        si.bounded = true;
        if (c.pos.path.empty() || c.pos.path[0].kind != PathSeg::Kind::Rat)
          throw std::invalid_argument("cut into qshuffle must be site-anchored");
        si.site = c.pos.path[0].q;
        si.inside = c.pos.path.size() > 1;
        return si;
      };
      SideInfo lo = classify(I.low), hi = classify(I.high);

      // locate the degree and sign of the block at a site
      auto site_lookup = [&](const Rational& s) -> std::pair<std::int64_t, int> {
        for (const auto& [m, fs] : q.fibers) {
          (void)fs;
          for (const auto& f : fibers_at(q, m))
            if (f.site == s) return {m, f.sign};
        }
        if (q.fiber_tail.kind == FiberTail::Kind::EnumSingleton) {
          for (std::int64_t m = std::max(q.tail_start, q.fiber_tail.offset);
               m < q.tail_start + kEnumScanCap; ++m)
            if (!q.fibers.count(m) && nth_rational(m - q.fiber_tail.offset) == s &&
                window_allows(q, s))
              return {m, 1};
        } else if (q.fiber_tail.kind == FiberTail::Kind::DyadicRuler) {
          std::int64_t den = s.den(), e = 0;
          while (den % 2 == 0) {
            den /= 2;
            ++e;
          }
          if (den == 1 && e >= 1 && s > Rational(0) && s < Rational(1)) {
            std::int64_t m = q.fiber_tail.offset + e - 1;
            if (m >= q.tail_start && !q.fibers.count(m) && window_allows(q, s)) return {m, 1};
          }
        }
        throw std::invalid_argument("cut site " + s.str() + " carries no block");
      };

      // restriction of the emission at `site` by cuts local to the emission
      // (paths relative to [Rat site]...)
      auto site_partial = [&](const Rational& site, Cut local_lo, Cut local_hi,
                              const Interval& host_iv) -> Piece {
        auto [m, sign] = site_lookup(site);
        WordPtr sw = site_word_at(reg, q, m);
        Piece pc;
        pc.host_iv = host_iv;
        if (sign >= 0) {
          SubwordResult sr = subword_impl(reg, sw, Interval{local_lo, local_hi});
          pc.word = sr.word;
          PosMap inner = sr.map;
          pc.map = [inner](const Position& p) {
            Position s;
            s.path.assign(p.path.begin() + 1, p.path.end());
            return inner(s);
          };
        } else {
          // emission positions are [site, rev, inner]: local cuts carry a
          // RevEnter and swap roles against the raw site word
          auto strip_rev = [](const Cut& c) -> Cut {
            if (c.kind == Cut::Kind::Inf) return c;
            if (c.pos.path.empty() || c.pos.path[0].kind != PathSeg::Kind::RevEnter)
              throw std::invalid_argument("cut into inverted site lacks reversal marker");
            Cut out;
            out.kind = c.kind;
            out.pos.path.assign(c.pos.path.begin() + 1, c.pos.path.end());
            return out;
          };
          Interval rawI{strip_rev(local_hi), strip_rev(local_lo)};
          SubwordResult sr = subword_impl(reg, sw, rawI);
          pc.word = w_inv(reg, sr.word);
          PosMap inner = sr.map;
          bool collapsed = pc.word->kind() != WordExpr::Kind::Inv;
          pc.map = [inner, collapsed](const Position& p) {
            Position s;  // strip [site, rev]
            s.path.assign(p.path.begin() + 2, p.path.end());
            Position local = inner(s);
            if (collapsed) return local;
            return local.prefixed(PathSeg::rev());
          };
        }
        return pc;
      };
      auto strip_site = [](const Cut& c) -> Cut {
        Cut out;
        out.kind = c.kind;
        out.pos.path.assign(c.pos.path.begin() + 1, c.pos.path.end());
        return out;
      };

      // both cuts land in the same site: a single restricted emission
      if (lo.bounded && hi.bounded && lo.site == hi.site) {
        if (!lo.inside && !hi.inside) {
          // region-to-region; non-degenerate combos were caught as empty
          Piece pc = site_partial(lo.site, Cut::inf(), Cut::inf(), I);
          SubwordResult out;
          out.word = assemble_cat({std::move(pc)}, &out.map);
          return out;
        }
        Cut llo = lo.inside ? strip_site(I.low) : Cut::inf();
        Cut lhi = hi.inside ? strip_site(I.high) : Cut::inf();
        Piece pc = site_partial(lo.site, llo, lhi, I);
        SubwordResult out;
        out.word = assemble_cat({std::move(pc)}, &out.map);
        return out;
      }

      std::vector<Piece> pieces;
      QRule mid = q;

      if (lo.bounded) {
        if (lo.inside) {
          Interval hostiv{I.low, Cut::closed(Position{}.prefixed(PathSeg::rat(lo.site)))};
          pieces.push_back(site_partial(lo.site, strip_site(I.low), Cut::inf(), hostiv));
          mid.win_lo = {true, lo.site, false};
        } else {
          mid.win_lo = {true, lo.site, I.low.kind == Cut::Kind::Closed};
        }
        if (q.win_lo.bounded &&
            (q.win_lo.q > mid.win_lo.q ||
             (q.win_lo.q == mid.win_lo.q && !q.win_lo.include_site)))
          mid.win_lo = q.win_lo;  // keep the tighter pre-existing window
      }
      Piece high_piece;
      bool have_high_piece = false;
      if (hi.bounded) {
        if (hi.inside) {
          Interval hostiv{Cut::closed(Position{}.prefixed(PathSeg::rat(hi.site))), I.high};
          high_piece = site_partial(hi.site, Cut::inf(), strip_site(I.high), hostiv);
          have_high_piece = true;
          mid.win_hi = {true, hi.site, false};
        } else {
          mid.win_hi = {true, hi.site, I.high.kind == Cut::Kind::Closed};
        }
        if (q.win_hi.bounded &&
            (q.win_hi.q < mid.win_hi.q ||
             (q.win_hi.q == mid.win_hi.q && !q.win_hi.include_site)))
          mid.win_hi = q.win_hi;
      }
      WordPtr middle = w_qshuffle(reg, mid);
      Piece mid_piece;
      mid_piece.word = middle;
      mid_piece.host_iv.low =
          mid.win_lo.bounded
              ? (mid.win_lo.include_site
                     ? Cut::closed(Position{}.prefixed(PathSeg::rat(mid.win_lo.q)))
                     : Cut::open(Position{}.prefixed(PathSeg::rat(mid.win_lo.q))))
              : Cut::inf();
      mid_piece.host_iv.high =
          mid.win_hi.bounded
              ? (mid.win_hi.include_site
                     ? Cut::closed(Position{}.prefixed(PathSeg::rat(mid.win_hi.q)))
                     : Cut::open(Position{}.prefixed(PathSeg::rat(mid.win_hi.q))))
              : Cut::inf();
      mid_piece.map = identity_map;  // site coordinates are unchanged
      pieces.push_back(std::move(mid_piece));
      if (have_high_piece) pieces.push_back(std::move(high_piece));
      SubwordResult out;
      out.word = assemble_cat(std::move(pieces), &out.map);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace

SubwordResult subword_with_map(const Registry& reg, const WordPtr& w, const Interval& I) {
  return subword_impl(reg, w, I);
}

WordPtr subword(const Registry& reg, const WordPtr& w, const Interval& I) {
  return subword_impl(reg, w, I).word;
}

Position rebase_into_subword(const Registry& reg, const WordPtr& w, const Interval& I,
                             const Position& p) {
  return subword_impl(reg, w, I).map(p);
}

}  // namespace tw

