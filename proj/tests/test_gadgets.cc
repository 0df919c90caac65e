#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <set>

#include "gadgets.hh"
#include "kp_model.hh"
#include "util.hh"
#include "wreath.hh"

using namespace gkp;
using gkp::testutil::Rng;

namespace {

GroupRef z1() { return zn_group(1); }
Element tz() { return zn_make(z1(), {1}); }
Element a2() { return cyc_make(cyclic_group(2), 1); }

Element top(const GroupRef& wg, const Element& h) {
  return make_wreath(wg, {}, h);
}

Element conj_shift(const Element& f, long h) {
  return conjugate(f, top(f.grp, pow(tz(), h)));
}

}  // namespace

TEST_CASE("lonely-1 word family primes and shapes") {
  LonelyOnesFamily f1 = lonely_ones_words(1);
  CHECK(f1.p == std::vector<long>{3});
  CHECK(f1.q == std::vector<long>{5});
  CHECK(f1.len == std::vector<long>{30});
  CHECK((long)f1.ones[0].size() == 3 + 5);
  // w1 = (100)^5 (10000)^3
  std::vector<int> w = dense_word(f1, 0);
  std::vector<int> expect;
  for (int r = 0; r < 5; r++) {
    expect.push_back(1);
    expect.push_back(0);
    expect.push_back(0);
  }
  for (int r = 0; r < 3; r++) {
    expect.push_back(1);
    for (int z = 0; z < 4; z++) expect.push_back(0);
  }
  CHECK(w == expect);

  LonelyOnesFamily f2 = lonely_ones_words(2);
  CHECK(f2.p == std::vector<long>{5, 71});
  CHECK(f2.q == std::vector<long>{7, 73});
  CHECK(f2.p[0] > 2 * 2);
  CHECK(f2.p[1] > 2 * f2.p[0] * f2.q[0]);
  CHECK(f2.len[0] != f2.len[1]);  // words pairwise distinct

  CHECK_THROWS_AS(lonely_ones_words(4), resource_error);
  CHECK_THROWS_AS(dense_word(f1, 1), gkp_error);
}

TEST_CASE("lonely 1 appears exactly on non-matching shifts, n=1") {
  LonelyOnesFamily fam = lonely_ones_words(1);
  std::vector<int> w = dense_word(fam, 0);
  long s = 3 * fam.len[0];
  long bad = 0;
  for (long s1 = 0; s1 <= s; s1++)
    for (long s2 = 0; s2 <= s; s2++) {
      bool dense = has_lonely_one({w, w}, {s1, s2});
      if (dense != (s1 != s2)) bad++;
      if (has_lonely_one(fam, {0, 0}, {s1, s2}) != dense) bad++;
    }
  CHECK(bad == 0);
  CHECK(has_lonely_one({w}, {17}));  // single word containing a 1
}

TEST_CASE("lonely 1 appears exactly on non-matching shifts, n=2 sampled") {
  LonelyOnesFamily fam = lonely_ones_words(2);
  long s = 3 * std::max(fam.len[0], fam.len[1]);
  std::vector<int> idx{0, 0, 1, 1};
  Rng rng(2024);
  auto draw = [&] { return (long)(rng() % (unsigned long)(s + 1)); };
  for (int it = 0; it < 500; it++) {
    long x = draw(), y = draw();
    CHECK(!has_lonely_one(fam, idx, {x, x, y, y}));
  }
  for (int it = 0; it < 2000; it++) {
    std::vector<long> sh{draw(), draw(), draw(), draw()};
    if (sh[0] == sh[1] && sh[2] == sh[3]) continue;
    CHECK(has_lonely_one(fam, idx, sh));
  }
  // boundary slices
  for (long v0 : {0L, 1L, s - 1, s})
    for (long v1 : {0L, 1L, s - 1, s})
      for (long v2 : {0L, 1L, s - 1, s})
        for (long v3 : {0L, 1L, s - 1, s}) {
          bool matching = v0 == v1 && v2 == v3;
          CHECK(has_lonely_one(fam, idx, {v0, v1, v2, v3}) == !matching);
        }
}

TEST_CASE("cancelling conjugates cancel exactly on matching shifts") {
  Element a = a2(), t = tz();
  SUBCASE("n=1 exhaustive") {
    std::vector<Element> f = cancelling_conjugates(1, a, t);
    CHECK((long)wreath_data(f[0]).supp.size() == 3 + 5);
    CHECK(is_identity(sigma(f[0])));
    for (long h = -4; h <= 4; h++)
      for (long hp = -4; hp <= 4; hp++) {
        Element prod = mul(conj_shift(f[0], h), conj_shift(inv(f[0]), hp));
        CHECK(is_identity(prod) == (h == hp));
      }
  }
  SUBCASE("n=2 exhaustive") {
    std::vector<Element> f = cancelling_conjugates(2, a, t);
    std::vector<std::vector<Element>> pos(2), neg(2);
    for (int i = 0; i < 2; i++)
      for (long h = -4; h <= 4; h++) {
        pos[i].push_back(conj_shift(f[i], h));
        neg[i].push_back(conj_shift(inv(f[i]), h));
      }
    for (long h1 = -4; h1 <= 4; h1++)
      for (long h2 = -4; h2 <= 4; h2++)
        for (long p1 = -4; p1 <= 4; p1++)
          for (long p2 = -4; p2 <= 4; p2++) {
            Element prod = mul(mul(pos[0][h1 + 4], pos[1][h2 + 4]),
                               mul(neg[0][p1 + 4], neg[1][p2 + 4]));
            CHECK(is_identity(prod) == (h1 == p1 && h2 == p2));
          }
  }
  CHECK_THROWS_AS(cancelling_conjugates(1, identity(cyclic_group(2)), t),
                  gkp_error);
  CHECK_THROWS_AS(cancelling_conjugates(1, a, cyc_make(cyclic_group(2), 1)),
                  gkp_error);
}

TEST_CASE("cancelling pairs enforce exactly the window products") {
  Element a = a2(), t = tz();
  std::vector<std::vector<std::pair<int, int>>> cases = {
      {}, {{0, 1}}, {{1, 2}}, {{0, 2}}, {{0, 1}, {1, 2}}};
  for (const auto& pairs : cases) {
    CAPTURE(pairs.size());
    std::vector<Element> f = cancelling_pairs(pairs, 2, a, t);
    if (pairs.empty())
      for (const Element& fi : f) CHECK(is_identity(fi));
    GroupRef wg = f[0].grp;
    for (long h0 = -4; h0 <= 4; h0++)
      for (long h1 = -4; h1 <= 4; h1++)
        for (long h2 = -4; h2 <= 4; h2++) {
          Element prod = identity(wg);
          long hs[3] = {h0, h1, h2};
          for (int i = 0; i <= 2; i++)
            prod = mul(mul(prod, top(wg, pow(t, hs[i]))), f[(size_t)i]);
          bool want = h0 + h1 + h2 == 0;
          for (auto [i, j] : pairs) {
            long sum = 0;
            for (int u = i + 1; u <= j; u++) sum += hs[u];
            want = want && sum == 0;
          }
          CHECK(is_identity(prod) == want);
        }
  }
}

TEST_CASE("interval reduction carries witnesses both ways") {
  Element a = a2(), t = tz();
  Rng rng(771);
  int sat_seen = 0;
  for (int it = 0; it < 25; it++) {
    int n = 1 + (int)(rng() % 3);
    MultiInstance ikp;
    ikp.grp = z1();
    std::vector<std::string> vars = {"x", "y"};
    std::vector<int> home(vars.size());
    for (size_t v = 0; v < vars.size(); v++) home[v] = (int)(rng() % n);
    long atoms_total = 0;
    for (int i = 0; i < n; i++) {
      Expression e;
      e.grp = z1();
      for (size_t v = 0; v < vars.size(); v++)
        if (home[v] == i)
          e.atoms.push_back(
              power_atom(pow(t, (long)(rng() % 5) - 2), vars[v]));
      if (rng() % 2)
        e.atoms.push_back(const_atom(pow(t, (long)(rng() % 5) - 2)));
      if (e.atoms.empty()) e.atoms.push_back(const_atom(identity(z1())));
      atoms_total += (long)e.atoms.size();
      ikp.exprs.push_back(std::move(e));
    }
    for (int i = 0; i <= n; i++)
      for (int j = i; j <= n; j++)
        if (rng() % 4 == 0 && (long)ikp.pairs.size() < 2)
          ikp.pairs.push_back({i, j});

    IkpReduction red = ikp_to_wreath(ikp, a, t);
    CHECK((long)red.inst.expr.atoms.size() == 2 * atoms_total + n + 1);

    auto direct = brute_solve(ikp, 5);
    if (direct) {
      sat_seen++;
      Valuation lifted = ikp_witness_forward(red, *direct);
      CHECK(is_identity(evaluate(red.inst.expr, lifted, true)));
    }
    // every reduced solution in the box restricts to a window witness
    std::vector<std::string> rv = variables(red.inst);
    std::vector<Int> point(rv.size(), 0);
    long hits = 0;
    while (true) {
      Valuation nu;
      for (size_t i = 0; i < rv.size(); i++) nu[rv[i]] = point[i];
      if (is_identity(evaluate(red.inst.expr, nu, true))) {
        hits++;
        CHECK(ikp_check(ikp, ikp_witness_back(red, nu)));
      }
      size_t pos = 0;
      while (pos < point.size() && point[pos] == 5) point[pos++] = 0;
      if (pos == point.size()) break;
      point[pos] += 1;
    }
    if (direct) CHECK(hits > 0);
  }
  CHECK(sat_seen >= 5);
}

TEST_CASE("interval reduction rejects unsupported forms") {
  Element a = a2(), t = tz();
  MultiInstance ikp;
  ikp.grp = z1();
  Expression e;
  e.grp = z1();
  e.atoms.push_back(power_atom(t, "x"));
  ikp.exprs.push_back(e);
  MultiInstance bad = ikp;
  bad.integer_mode = true;
  CHECK_THROWS_AS(ikp_to_wreath(bad, a, t), gkp_error);
  bad = ikp;
  bad.expeq = true;
  CHECK_THROWS_AS(ikp_to_wreath(bad, a, t), gkp_error);
  bad = ikp;
  bad.exprs[0].atoms[0].var = "x@1";
  CHECK_THROWS_AS(ikp_to_wreath(bad, a, t), gkp_error);
}

TEST_CASE("pc words have the prescribed block shape") {
  Element a = a2();
  CHECK(pf_supp(pc_word(0, a)).empty());
  PeriodicFunction u1 = pc_word(1, a);
  std::vector<long> sp = pf_supp(u1);
  std::vector<long> expect;
  for (long b = 0; b < 2; b++)
    for (long j = 0; j < 4; j++) expect.push_back(8 * b + j);
  CHECK(sp == expect);
  PeriodicFunction u2 = pc_word(2);
  CHECK((long)pf_supp(u2).size() == 4 * 16);
  CHECK(pf_supp(u2).back() == 3 * 32 + 15);  // nominal length 128
  CHECK(alternating_certificate(u1) >= 1);
  CHECK(alternating_certificate(u2) >= 2);
  CHECK_THROWS_AS(pc_word(4), resource_error);
}

TEST_CASE("periodic complexity: exact values on small words") {
  Element a = a2();
  GroupRef c2 = cyclic_group(2);

  PcResult r0 = periodic_complexity(pf_make(c2, {}), 4, 64);
  CHECK(r0.exact);
  CHECK(r0.lower == 0);

  PcResult r1 = periodic_complexity(pf_make(c2, {{0, a}, {7, a}, {14, a}}),
                                    4, 64);
  CHECK(r1.exact);
  CHECK(r1.lower == 1);

  PcResult r2 = periodic_complexity(pc_word(1, a), 4, 64);
  CHECK(r2.exact);
  CHECK(r2.lower == 2);

  // minimal word of complexity 3; no progression pair covers it
  PcResult r3 = periodic_complexity(
      pf_make(c2, {{0, a}, {1, a}, {5, a}, {6, a}, {8, a}}), 4, 64);
  CHECK(r3.exact);
  CHECK(r3.lower == 3);

  // non-abelian values
  GroupRef s3 = sym_group(3);
  Element pa = perm_make(s3, {1, 0, 2});
  Element pb = perm_make(s3, {0, 2, 1});
  PcResult rs = periodic_complexity(pf_make(s3, {{0, pa}, {1, pb}}), 4, 64);
  CHECK(rs.exact);
  CHECK(rs.lower == 2);
  PcResult rbasic = periodic_complexity(pf_make(s3, {{2, pa}, {4, pa}}), 4, 64);
  CHECK(rbasic.exact);
  CHECK(rbasic.lower == 1);

  // wide word: bracket only, certificate keeps the lower bound
  PcResult rw = periodic_complexity(pc_word(2, a), 4, 16);
  CHECK(!rw.exact);
  CHECK(rw.lower >= 2);
  CHECK(rw.upper.has_value());
  CHECK(*rw.upper >= rw.lower);
}

TEST_CASE("interval words follow the doubling recipe and separate") {
  Element a = a2();
  std::vector<PeriodicFunction> iw = interval_words(1, 2, a);
  CHECK((pf_supp(iw[0]) == std::vector<long>{0, 4, 12, 16, 17, 19}));

  std::vector<PeriodicFunction> iw2 = interval_words(2, 2, a);
  CHECK(pf_supp(iw2[0]).size() == pf_supp(iw2[1]).size());
  long span1 = pf_supp(iw2[0]).back() - pf_supp(iw2[0]).front();
  long gap2 = pf_supp(iw2[1])[1] - pf_supp(iw2[1])[0];
  CHECK(gap2 > span1);
  for (long s1 = -3; s1 <= 3; s1++)
    for (long s2 = -3; s2 <= 3; s2++) {
      std::set<long> inter;
      std::vector<long> sa = pf_supp(shift(iw2[0], s1));
      std::vector<long> sb = pf_supp(shift(iw2[1], s2));
      for (long x : sa)
        if (std::binary_search(sb.begin(), sb.end(), x)) inter.insert(x);
      CHECK((long)inter.size() <= 1);
    }
  CHECK_THROWS_AS(interval_words(0, 2, a), gkp_error);
  CHECK_THROWS_AS(interval_words(4, 2, a), resource_error);
}

TEST_CASE("shifted interval word products keep their complexity") {
  Element a = a2();
  SUBCASE("single word, full box") {
    for (int k : {1, 2}) {
      std::vector<PeriodicFunction> iw = interval_words(1, k, a);
      std::vector<std::pair<long, long>> bad;
      for (long p = -3; p <= 3; p++)
        for (long q = -3; q <= 3; q++) {
          if (p == q) continue;
          PeriodicFunction w =
              pf_mul(shift(iw[0], p), shift(pf_inv(iw[0]), q));
          PcResult r = periodic_complexity(w, k, 128);
          if (r.lower < k) bad.push_back({p, q});
        }
      CAPTURE(k);
      CHECK(bad.empty());
    }
  }
  SUBCASE("single word, depth three on adversarial shifts") {
    // the full box takes seconds per combo at depth three; these shifts
    // cover adjacent offsets (hardest cancellations) plus spread corners
    std::vector<PeriodicFunction> iw = interval_words(1, 3, a);
    std::vector<std::pair<long, long>> combos = {
        {-3, -2}, {-2, -3}, {0, 1},  {1, 0},  {3, 2},  {2, 3},
        {-3, 3},  {3, -3},  {0, -3}, {-1, 2}, {1, -1}, {2, -2},
    };
    std::vector<std::pair<long, long>> bad;
    for (auto [p, q] : combos) {
      PeriodicFunction w = pf_mul(shift(iw[0], p), shift(pf_inv(iw[0]), q));
      PcResult r = periodic_complexity(w, 3, 128);
      if (r.lower < 3) bad.push_back({p, q});
    }
    CHECK(bad.empty());
  }
  SUBCASE("two words, full box") {
    std::vector<PeriodicFunction> iw = interval_words(2, 2, a);
    std::vector<std::array<long, 4>> bad;
#ifdef GKP_OPENMP
#pragma omp parallel for schedule(dynamic) collapse(2)
#endif
    for (long p1 = -2; p1 <= 2; p1++)
      for (long p2 = -2; p2 <= 2; p2++)
        for (long q1 = -2; q1 <= 2; q1++)
          for (long q2 = -2; q2 <= 2; q2++) {
            if (p1 == q1 && p2 == q2) continue;
            PeriodicFunction w = pf_mul(
                pf_mul(shift(iw[0], p1), shift(iw[1], p2)),
                pf_mul(shift(pf_inv(iw[0]), q1), shift(pf_inv(iw[1]), q2)));
            PcResult r = periodic_complexity(w, 2, 128);
            if (r.lower < 2) {
#ifdef GKP_OPENMP
#pragma omp critical
#endif
              bad.push_back({p1, p2, q1, q2});
            }
          }
    CHECK(bad.empty());
  }
  SUBCASE("two words, depth three on adversarial shifts") {
    // hard slice: the first word cancels outright (p1 == q1) and the second
    // survives at a small offset, leaving two nearby stretched copies
    std::vector<PeriodicFunction> iw = interval_words(2, 3, a);
    std::vector<std::array<long, 4>> combos = {
        {-3, -3, -3, -2}, {-3, -2, -3, -3}, {0, 0, 0, 1},   {0, 1, 0, 0},
        {3, 2, 3, 3},     {3, 3, 3, 2},     {-3, -3, -3, 3}, {0, -3, 0, 3},
        {2, 0, 2, 1},     {-1, 1, -1, -1},  {-3, -3, -2, -2}, {0, 0, 1, 1},
        {3, -3, -3, 3},   {1, 2, -1, -2},   {-3, 2, 3, -2},  {0, 3, 1, -3},
    };
    std::vector<std::array<long, 4>> bad;
    for (auto [p1, p2, q1, q2] : combos) {
      PeriodicFunction w = pf_mul(
          pf_mul(shift(iw[0], p1), shift(iw[1], p2)),
          pf_mul(shift(pf_inv(iw[0]), q1), shift(pf_inv(iw[1]), q2)));
      PcResult r = periodic_complexity(w, 3, 128);
      if (r.lower < 3) bad.push_back({p1, p2, q1, q2});
    }
    CHECK(bad.empty());
  }
}

TEST_CASE("loop words realize loop constraints in the interleaved product") {
  Element a = a2(), t = tz();

  SUBCASE("example m=1") {
    LoopWordFamily lw = loop_words(1, {{0, 1}}, a, t, 2);
    CHECK(lw.width == 20);
    CHECK(lw.heuristic);  // below the prescribed 2m+1 = 3
    GroupRef wg = wreath_group(cyclic_group(2), z1());
    Element f0 = pf_embed(lw.f[0], wg, t);
    Element f1 = pf_embed(lw.f[1], wg, t);
    for (long h = -3; h <= 3; h++) {
      Element prod = mul(mul(f0, top(wg, pow(t, h))), f1);
      CHECK(is_identity(prod) == (h == 0));
      // tau part alone also vanishes only on the closed walk
      Element closed = mul(prod, top(wg, pow(t, -h)));
      CHECK(is_identity(closed) == (h == 0));
    }
  }

  SUBCASE("empty L leaves all words empty") {
    LoopWordFamily lw = loop_words(3, {}, a, t, 2);
    CHECK(lw.width == 0);
    for (const PeriodicFunction& f : lw.f) CHECK(pf_supp(f).empty());
  }

  SUBCASE("exhaustive m <= 3, |L| <= 2, shifts in [-3,3]") {
    GroupRef wg = wreath_group(cyclic_group(2), z1());
    for (int m = 1; m <= 3; m++) {
      std::vector<std::pair<int, int>> all;
      for (int i = 0; i <= m; i++)
        for (int j = i; j <= m; j++) all.push_back({i, j});
      std::vector<std::vector<std::pair<int, int>>> sets = {{}};
      for (size_t x = 0; x < all.size(); x++) {
        sets.push_back({all[x]});
        for (size_t y = x + 1; y < all.size(); y++)
          sets.push_back({all[x], all[y]});
      }
      for (const auto& L : sets) {
        LoopWordFamily lw = loop_words(m, L, a, t, 2);
        std::vector<Element> f;
        for (const PeriodicFunction& fi : lw.f)
          f.push_back(pf_embed(fi, wg, t));
        std::vector<long> h((size_t)m, -3);
        while (true) {
          Element prod = f[0];
          long sum = 0;
          for (int i = 1; i <= m; i++) {
            prod = mul(mul(prod, top(wg, pow(t, h[(size_t)i - 1]))),
                       f[(size_t)i]);
            sum += h[(size_t)i - 1];
          }
          bool want = sum == 0;
          for (auto [i, j] : L) {
            long w = 0;
            for (int u = i + 1; u <= j; u++) w += h[(size_t)u - 1];
            want = want && w == 0;
          }
          CHECK(is_identity(prod) == want);
          size_t pos = 0;
          while (pos < h.size() && h[pos] == 3) h[pos++] = -3;
          if (pos == h.size()) break;
          h[pos] += 1;
        }
      }
    }
  }

  SUBCASE("prescribed target beyond the cap fails loudly") {
    CHECK_THROWS_AS(loop_words(2, {{0, 1}}, a, t, 0), resource_error);
    LoopWordFamily small = loop_words(1, {{0, 1}}, a, t, 0);
    CHECK(small.pc_target == 3);
    CHECK(!small.heuristic);
  }

  SUBCASE("many loop pairs fall back to prime-step stretching") {
    std::vector<std::pair<int, int>> L;
    for (int i = 0; i < 5; i++) L.push_back({i, i + 1});
    CHECK_THROWS_AS(interval_words(5, 2, a), resource_error);
    LoopWordFamily lw = loop_words(5, L, a, t, 2);
    CHECK(lw.width > 0);
    CHECK(lw.width < gadget_cap);
  }
}

TEST_CASE("positive reduction agrees with the original on the box") {
  Element a = a2(), t = tz();
  struct Case {
    std::vector<std::pair<bool, long>> atoms;  // (is_power, exponent)
    std::vector<std::pair<int, int>> loops;
    bool sat;
  };
  // atoms over Z: power -> t^x; const -> t^e
  std::vector<Case> cases = {
      {{{true, 0}, {false, -2}}, {{0, 2}}, true},
      {{{true, 0}, {false, -2}}, {{0, 1}}, false},
      {{{true, 0}, {false, -1}, {true, 0}, {false, -1}}, {{0, 2}}, true},
      {{{true, 0}, {false, 3}}, {}, false},
  };
  int vid = 0;
  for (const Case& c : cases) {
    Expression e;
    e.grp = z1();
    std::vector<std::string> vars;
    for (auto [isp, exp] : c.atoms) {
      if (isp) {
        vars.push_back("v" + std::to_string(vid++));
        e.atoms.push_back(power_atom(t, vars.back()));
      } else {
        e.atoms.push_back(const_atom(pow(t, exp)));
      }
    }
    KpInstance inst{e, {c.loops, {}, Variant::KPpm}, false};
    WreathReduction red = kpplus_to_wreath(inst, a, t, 2);
    CHECK((long)red.inst.expr.atoms.size() == 2 * (long)c.atoms.size() + 1);
    auto direct = brute_solve(inst, 4);
    auto lifted = brute_solve(red.inst, 4);
    CHECK((bool)direct == c.sat);
    CHECK((bool)lifted == c.sat);
    if (direct && lifted)
      for (const std::string& v : vars) CHECK((*direct)[v] == (*lifted)[v]);
  }
}

TEST_CASE("full reduction layout, tameness and member semantics") {
  GroupRef h = zn_group(2);
  Element u = zn_make(h, {1, 0});
  Element v = zn_make(h, {0, 1});
  GroupRef s3 = sym_group(3);
  Element a = perm_make(s3, {1, 0, 2});
  Element b = perm_make(s3, {0, 2, 1});

  SUBCASE("atom count formula and block shifts") {
    Expression e;
    e.grp = h;
    e.atoms = {power_atom(u, "x"), power_atom(v, "y")};
    KpInstance inst{e, {{}, {{1, 2}}, Variant::KPpm}, false};
    KppmWreathReduction red = kppm_to_wreath(inst, a, b, u, 2);
    CHECK(red.m == 2 + 4 * 1 * (2 + 1) * (2 + 2));
    CHECK((long)red.ehat.size() == red.m);
    CHECK(red.all_tame);
    CHECK(red.shift_bound == Int(red.words.width) * red.m * red.m);
    // S_1 = { j * (n+d)^2 * N : j in [1, n+d] }, four blocks per slot
    long nd = 3, N = red.words.width;
    CHECK((long)red.block_shifts.size() == 4 * nd);
    for (long j = 1; j <= nd; j++)
      for (int cpy = 0; cpy < 4; cpy++)
        CHECK(red.block_shifts[(size_t)(4 * (j - 1) + cpy)] ==
              Int(j) * nd * nd * N);
    KpInstance mem = kppm_member(red, 7);
    CHECK((long)mem.expr.atoms.size() == 2 * red.m + 1);
    CHECK(variables(mem) == variables(KpInstance{Expression{red.wg, red.ehat}, {}, false}));
  }

  SUBCASE("d=0 coincides with the positive reduction") {
    Expression e;
    e.grp = h;
    e.atoms = {power_atom(u, "x"), const_atom(inv(u))};
    KpInstance inst{e, {{{0, 2}}, {}, Variant::KPpm}, false};
    KppmWreathReduction red = kppm_to_wreath(inst, a, b, u, 2);
    WreathReduction plus = kpplus_to_wreath(inst, a, u, 2);
    CHECK(red.m == 2);
    KpInstance mem = kppm_member(red, 0);
    REQUIRE(mem.expr.atoms.size() == plus.inst.expr.atoms.size());
    for (size_t i = 0; i < mem.expr.atoms.size(); i++) {
      CHECK(elem_eq(mem.expr.atoms[i].g, plus.inst.expr.atoms[i].g));
      CHECK(mem.expr.atoms[i].var == plus.inst.expr.atoms[i].var);
    }
  }

  SUBCASE("witness lifts into some member; collisions leave a residue") {
    // E+ = u^x (u^-1 v^-1) v^y (v) with D={(1,3)}: sat at (1,0), disjoint
    Expression ep;
    ep.grp = h;
    ep.atoms = {power_atom(u, "x"), const_atom(mul(inv(u), inv(v))),
                power_atom(v, "y"), const_atom(v)};
    KpInstance instp{ep, {{}, {{1, 3}}, Variant::KPpm}, false};
    // E- drops the final const: the only product-1 point (1,1) collides
    Expression en;
    en.grp = h;
    en.atoms = {power_atom(u, "x"), const_atom(mul(inv(u), inv(v))),
                power_atom(v, "y")};
    KpInstance instn{en, {{}, {{1, 3}}, Variant::KPpm}, false};

    auto sp = brute_solve(instp, 3);
    REQUIRE(sp);
    CHECK((*sp)["x"] == 1);
    CHECK((*sp)["y"] == 0);
    CHECK(!brute_solve(instn, 3));
    KpInstance free = instn;
    free.cons.disj.clear();
    auto snf = brute_solve(free, 3);
    REQUIRE(snf);
    CHECK((*snf)["x"] == 1);
    CHECK((*snf)["y"] == 1);

    KppmWreathReduction redp = kppm_to_wreath(instp, a, b, u, 2);
    CHECK(redp.all_tame);
    Valuation nup;
    for (const std::string& x :
         variables(KpInstance{Expression{redp.wg, redp.ehat}, {}, false}))
      nup[x] = x[0] == 'x' ? 1 : 0;
    // walk-level loop pairs hold under the lifted witness
    KpInstance jinst{Expression{h, {}}, {redp.loops, {}, Variant::KPpm}, false};
    for (const Atom& at : redp.ehat) {
      const Element cur = sigma(at.g);
      jinst.expr.atoms.push_back(at.is_power ? power_atom(cur, at.var)
                                             : const_atom(cur));
    }
    CHECK(is_identity(evaluate(jinst.expr, nup, true)));
    CHECK(check_constraints(jinst, nup));
    long N = redp.words.width;
    bool found = false;
    for (long rr : {N, 2 * N, 3 * N, 7 * N})
      if (is_identity(evaluate(kppm_member(redp, rr).expr, nup, true))) {
        found = true;
        break;
      }
    CHECK(found);

    KppmWreathReduction redn = kppm_to_wreath(instn, a, b, u, 2);
    Valuation nun;
    for (const std::string& x :
         variables(KpInstance{Expression{redn.wg, redn.ehat}, {}, false}))
      nun[x] = 1;
    long Nn = redn.words.width;
    for (long rr : {0L, Nn, 2 * Nn, 5 * Nn}) {
      Element val = evaluate(kppm_member(redn, rr).expr, nun, true);
      CHECK(is_identity(sigma(val)));
      CHECK(!is_identity(val));
    }
  }

  SUBCASE("self-pair on a constant: every sampled member stays nontrivial") {
    GroupRef z = zn_group(1);
    Element t = zn_make(z, {1});
    Expression e;
    e.grp = z;
    e.atoms = {const_atom(identity(z))};
    KpInstance inst{e, {{}, {{1, 1}}, Variant::KPpm}, false};
    CHECK(!brute_solve(inst, 2));
    KppmWreathReduction red = kppm_to_wreath(inst, a, b, t, 2);
    CHECK(red.m == 1 + 4 * 1 * 2 * 3);
    CHECK(red.all_tame);
    CHECK(variables(kppm_member(red, 0)).empty());
    long N = red.words.width;
    for (long rr : {0L, 1L, N, 2 * N, 13 * N})
      CHECK(!is_identity(evaluate(kppm_member(red, rr).expr, {}, true)));
  }

  SUBCASE("rejects inputs outside the normalized fragment") {
    Expression e;
    e.grp = h;
    e.atoms = {power_atom(u, "x"), power_atom(u, "y")};
    KpInstance same{e, {{}, {{1, 2}}, Variant::KPpm}, false};
    CHECK_THROWS_AS(kppm_to_wreath(same, a, b, u, 2), gkp_error);

    GroupRef ht = product_group(zn_group(1), cyclic_group(2));
    Element tt = prod_make(ht, zn_make(zn_group(1), {1}),
                           identity(cyclic_group(2)));
    Element tor = prod_make(ht, zn_make(zn_group(1), {0}),
                            cyc_make(cyclic_group(2), 1));
    Expression e2;
    e2.grp = ht;
    e2.atoms = {power_atom(tor, "x")};
    KpInstance torsion{e2, {{}, {{1, 1}}, Variant::KPpm}, false};
    CHECK_THROWS_AS(kppm_to_wreath(torsion, a, b, tt, 2), gkp_error);

    KpInstance commuting = same;
    CHECK_THROWS_AS(kppm_to_wreath(commuting, a, a, u, 2), gkp_error);
  }
}

TEST_CASE("good shifts respect the guaranteed bound") {
  CHECK(find_shift({}, {}) == 0);
  CHECK(find_shift({{}, {}}, {{}, {}}) == 0);
  CHECK(find_shift({{0}}, {{0}}) == 1);
  CHECK(find_shift({{0, 3}}, {{1, 4}}) == 0);
  Rng rng(99);
  for (int it = 0; it < 50; it++) {
    long m = 1 + (long)(rng() % 4);
    std::vector<std::vector<long>> F, A;
    long nmax = 0, lmax = 0;
    for (long i = 0; i < m; i++) {
      std::vector<long> f, av;
      long nf = rng() % 6, na = rng() % 5;
      for (long j = 0; j < nf; j++) f.push_back((long)(rng() % 6));
      for (long j = 0; j < na; j++) av.push_back((long)(rng() % 41) - 20);
      nmax = std::max(nmax, (long)f.size());
      lmax = std::max(lmax, (long)av.size());
      F.push_back(f);
      A.push_back(av);
    }
    long r = find_shift(F, A);
    CHECK(r <= nmax * m * lmax);
    for (long i = 0; i < m; i++)
      for (long x : F[(size_t)i])
        for (long y : A[(size_t)i]) CHECK(r + x != y);
    for (long rp = 0; rp < r; rp++) {
      bool ok = true;
      for (long i = 0; i < m && ok; i++)
        for (long x : F[(size_t)i])
          for (long y : A[(size_t)i])
            if (rp + x == y) ok = false;
      CHECK(!ok);  // returned shift is the smallest
    }
  }
}
