#include "tw/arch.hpp"

namespace tw {

namespace {

bool factor_finite(const Registry& reg, const ArchFactor& f) {
  try {
    WordPtr piece = subword(reg, f.word, f.interval);
    return word_is_finite(*piece);
  } catch (const std::invalid_argument&) {
    return false;  // unrepresentable cut: keep the factor
  }
}

// complement cut: the boundary of the strictly-between gap
Cut gap_cut_after(const Cut& high) {
  Cut c;
  c.kind = high.kind == Cut::Kind::Closed ? Cut::Kind::Open : Cut::Kind::Closed;
  c.pos = high.pos;
  return c;
}
Cut gap_cut_before(const Cut& low) {
  Cut c;
  c.kind = low.kind == Cut::Kind::Closed ? Cut::Kind::Open : Cut::Kind::Closed;
  c.pos = low.pos;
  return c;
}

// a strictly before b (disjoint), with the strictly-between gap when so
bool strictly_before(const Interval& a, const Interval& b, Interval* gap) {
  if (a.high.kind == Cut::Kind::Inf || b.low.kind == Cut::Kind::Inf) return false;
  bool ok = false;
  switch (region_cmp(a.high.pos, b.low.pos)) {
    case RegionCmp::Less:
      ok = true;
      break;
    case RegionCmp::Greater:
    case RegionCmp::Mismatch:
      return false;
    case RegionCmp::Equal:
      ok = !(a.high.kind == Cut::Kind::Closed && b.low.kind == Cut::Kind::Closed);
      break;
    case RegionCmp::AInsideB:
      // a ends at a point inside b's anchor region: disjoint only when b
      // starts strictly above that whole region
      ok = b.low.kind == Cut::Kind::Open;
      break;
    case RegionCmp::BInsideA:
      ok = a.high.kind == Cut::Kind::Open;
      break;
  }
  if (!ok) return false;
  if (gap) {
    gap->low = gap_cut_after(a.high);
    gap->high = gap_cut_before(b.low);
  }
  return true;
}

bool same_handle(const ArchFactor& a, const ArchFactor& b) {
  if (a.word == b.word) return true;
  return !a.word_name.empty() && a.word_name == b.word_name;
}

bool try_merge(const Registry& reg, const ArchFactor& a, const ArchFactor& b,
               ArchFactor* out) {
  if (!same_handle(a, b) || a.sign != b.sign) return false;
  const Interval& first = a.sign >= 0 ? a.interval : b.interval;
  const Interval& second = a.sign >= 0 ? b.interval : a.interval;
  Interval gap;
  if (!strictly_before(first, second, &gap)) return false;
  if (!gap.definitely_empty()) {
    try {
      if (!word_is_finite(*subword(reg, a.word, gap))) return false;
    } catch (const std::invalid_argument&) {
      return false;
    }
  }
  *out = a;
  out->interval = Interval{first.low, second.high};
  return true;
}

bool syntactic_inverse(const ArchFactor& a, const ArchFactor& b) {
  return same_handle(a, b) && a.sign == -b.sign && a.interval == b.interval;
}

}  // namespace

namespace {

// Widens an interval across letter-finite edges: restricting to I or to the
// widened interval gives the same quotient class (finite deletions).
void canonicalize_interval(const Registry& reg, const WordPtr& w, Interval* I) {
  if (I->low.kind != Cut::Kind::Inf) {
    Interval below{Cut::inf(), gap_cut_before(I->low)};
    try {
      if (word_is_finite(*subword(reg, w, below))) I->low = Cut::inf();
    } catch (const std::invalid_argument&) {
    }
  }
  if (I->high.kind != Cut::Kind::Inf) {
    Interval above{gap_cut_after(I->high), Cut::inf()};
    try {
      if (word_is_finite(*subword(reg, w, above))) I->high = Cut::inf();
    } catch (const std::invalid_argument&) {
    }
  }
}

}  // namespace

ArchElement ArchElement::from_factors(const Registry& reg, std::vector<ArchFactor> fs) {
  for (auto& f : fs) canonicalize_interval(reg, f.word, &f.interval);
  bool changed = true;
  while (changed) {
    changed = false;
    // drop finite factors
    for (std::size_t i = 0; i < fs.size(); ++i) {
      if (factor_finite(reg, fs[i])) {
        fs.erase(fs.begin() + i);
        changed = true;
        break;
      }
    }
    if (changed) continue;
    // cancel adjacent syntactic inverses
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
      if (syntactic_inverse(fs[i], fs[i + 1])) {
        fs.erase(fs.begin() + i, fs.begin() + i + 2);
        changed = true;
        break;
      }
    }
    if (changed) continue;
    // merge adjacent co-oriented restrictions across finite gaps
    for (std::size_t i = 0; i + 1 < fs.size(); ++i) {
      ArchFactor merged;
      if (try_merge(reg, fs[i], fs[i + 1], &merged)) {
        canonicalize_interval(reg, merged.word, &merged.interval);
        fs[i] = merged;
        fs.erase(fs.begin() + i + 1);
        changed = true;
        break;
      }
    }
  }
  ArchElement e;
  e.factors_ = std::move(fs);
  return e;
}

std::string ArchElement::str() const {
  if (factors_.empty()) return "1";
  std::string s;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    if (i) s += " ";
    s += "[[" + factors_[i].word_name + "|" + factors_[i].interval.str() + "]]";
    if (factors_[i].sign < 0) s += "^-1";
  }
  return s;
}

ArchElement beth(const Registry& reg, const std::string& name, const WordPtr& w) {
  return arch_ref(reg, name, w, Interval::full(), 1);
}

ArchElement arch_ref(const Registry& reg, const std::string& name, const WordPtr& w,
                     const Interval& I, int sign) {
  ArchFactor f;
  f.word_name = name;
  f.word = w;
  f.interval = I;
  f.sign = sign;
  return ArchElement::from_factors(reg, {f});
}

ArchElement arch_mul(const Registry& reg, const ArchElement& a, const ArchElement& b) {
  std::vector<ArchFactor> fs = a.factors();
  fs.insert(fs.end(), b.factors().begin(), b.factors().end());
  return ArchElement::from_factors(reg, std::move(fs));
}

ArchElement arch_inv(const Registry& reg, const ArchElement& a) {
  std::vector<ArchFactor> fs;
  for (auto it = a.factors().rbegin(); it != a.factors().rend(); ++it) {
    ArchFactor f = *it;
    f.sign = -f.sign;
    fs.push_back(f);
  }
  return ArchElement::from_factors(reg, std::move(fs));
}

ArchEq arch_eq(const Registry& reg, const ArchElement& a, const ArchElement& b) {
  (void)reg;
  const auto& fa = a.factors();
  const auto& fb = b.factors();
  if (fa.size() != fb.size()) return ArchEq::Unknown;
  for (std::size_t i = 0; i < fa.size(); ++i) {
    if (!same_handle(fa[i], fb[i])) return ArchEq::Unknown;
    if (fa[i].sign != fb[i].sign) return ArchEq::Unknown;
    if (!(fa[i].interval == fb[i].interval)) return ArchEq::Unknown;
  }
  return ArchEq::Equal;
}

}  // namespace tw
