// Benchmark comparing the serial and OpenMP paths on the two data-parallel
// workloads: the scheme/reduction sweep and coherence-audit discharge.
// TW_SERIAL=1 forces the serial path; this binary measures both in-process
// by toggling thread counts.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <random>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "tw/coi.hpp"
#include "tw/parallel.hpp"
#include "tw/schemes.hpp"

using namespace tw;

namespace {

double now_ms() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}

FiniteWord random_word(std::mt19937& rng, const Registry& reg, int max_len) {
  std::uniform_int_distribution<int> len(0, max_len), grp(0, 1), val(-3, 3);
  std::vector<PosLetter> ls;
  int L = len(rng);
  for (int i = 0; i < L; ++i) {
    std::int64_t n = grp(rng);
    std::int64_t v = val(rng);
    if (reg.at(n).kind() == GroupSpec::Kind::FiniteCyclic) v = ((v % 3) + 3) % 3;
    if (v == 0) v = 1;
    Position p;
    p.path.push_back(PathSeg::omega(i));
    ls.push_back({p, Letter{n, GroupElement::integer(v)}});
  }
  return FiniteWord(ls);
}

double bench_schemes(std::int64_t cases) {
  Registry reg({GroupSpec::integers(), GroupSpec::cyclic(3)}, GroupSpec::integers());
  std::mt19937 seeder(7);
  std::vector<std::uint32_t> seeds(cases);
  for (auto& s : seeds) s = seeder();
  std::atomic<std::int64_t> bad{0};
  double t0 = now_ms();
  parallel_for(cases, [&](std::int64_t i) {
    std::mt19937 rng(seeds[i]);
    FiniteWord w = random_word(rng, reg, 14);
    auto scheme = find_trivializing_scheme(reg, w);
    if (scheme.has_value() != free_reduce(reg, w).empty()) bad.fetch_add(1);
  });
  double dt = now_ms() - t0;
  if (bad.load() != 0) std::fprintf(stderr, "scheme/reduce disagreement!\n");
  return dt;
}

double bench_audit(std::size_t triples, std::int64_t depth) {
  Registry reg = integers_registry();
  CoiCollection coll;
  for (std::size_t i = 0; i < triples; ++i) {
    OmegaRule r;
    TailSlot s;
    s.index = {1, static_cast<std::int64_t>(i % 3)};
    r.slots.push_back(s);
    OmegaRule r2 = r;
    r2.slots[0].exp.dflt = {0, 2};
    CoiTriple t;
    t.name = "t" + std::to_string(i);
    t.left_name = "W" + std::to_string(i % 3);
    t.left = w_omega(reg, r);
    t.right_name = "U" + std::to_string(i % 3);
    t.right = w_omega(reg, r2);
    CoiSeg seg;
    seg.kind = CoiSeg::Kind::TermPaired;
    t.map.segs.push_back(seg);
    coll.add(t);
  }
  double t0 = now_ms();
  AuditReport rep = audit(reg, coll, depth);
  double dt = now_ms() - t0;
  std::fprintf(stderr, "  audit: %zu obligations (%zu equal, %zu unknown)\n",
               rep.obligations.size(), rep.equal, rep.unknown);
  return dt;
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t cases = argc > 1 ? std::atoll(argv[1]) : 200000;
  std::size_t triples = argc > 2 ? std::atoll(argv[2]) : 10;

#if defined(_OPENMP)
  int max_threads = omp_get_max_threads();
#else
  int max_threads = 1;
#endif

  std::printf("workload                 serial(ms)  parallel(ms)  speedup (threads=%d)\n",
              max_threads);
  {
    setenv("TW_SERIAL", "1", 1);
    double serial = bench_schemes(cases);
    setenv("TW_SERIAL", "0", 1);
    double par = bench_schemes(cases);
    std::printf("scheme sweep (%8lld)  %10.1f  %12.1f  %6.2fx\n",
                static_cast<long long>(cases), serial, par, serial / par);
  }
  {
    setenv("TW_SERIAL", "1", 1);
    double serial = bench_audit(triples, 8);
    setenv("TW_SERIAL", "0", 1);
    double par = bench_audit(triples, 8);
    std::printf("audit discharge (%4zu)   %10.1f  %12.1f  %6.2fx\n", triples, serial, par,
                serial / par);
  }
  return 0;
}
