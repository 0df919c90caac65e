#include "gadgets.hh"

#include <algorithm>
#include <cstdint>
#include <set>
#include <unordered_map>

namespace gkp {
namespace {

bool is_prime(long v) {
  if (v < 2) return false;
  for (long d = 2; d * d <= v; d += 1)
    if (v % d == 0) return false;
  return true;
}

long next_prime(long v) {
  long c = v + 1;
  while (!is_prime(c)) c += 1;
  return c;
}

bool is_trivial_group(const GroupRef& g) {
  switch (g->kind) {
    case GroupSpec::Zn: return g->rank == 0;
    case GroupSpec::Cyclic: return g->mod == 1;
    case GroupSpec::Sym: return g->degree <= 1;
    case GroupSpec::Product:
      return is_trivial_group(g->left) && is_trivial_group(g->right);
    default: return false;
  }
}

bool is_abelian(const GroupRef& g) {
  switch (g->kind) {
    case GroupSpec::Zn:
    case GroupSpec::Cyclic: return true;
    case GroupSpec::Sym: return g->degree <= 2;
    case GroupSpec::Product:
      return is_abelian(g->left) && is_abelian(g->right);
    case GroupSpec::H3: return false;
    case GroupSpec::BS: return g->q == 1;
    case GroupSpec::Wreath:
      return is_trivial_group(g->right) ? is_abelian(g->left)
                                        : is_trivial_group(g->left);
  }
  throw gkp_error("unknown group kind");
}

void require_infinite(const Element& t) {
  if (order(t)) throw gkp_error("ray element must have infinite order");
}

Element lift_top(const GroupRef& wg, const Element& h) {
  return make_wreath(wg, {}, h);
}

Element lift_base(const GroupRef& wg, const Element& c) {
  if (is_identity(c)) return identity(wg);
  return make_wreath(wg, {{identity(wg->right), c}}, identity(wg->right));
}

void check_var_names(const std::vector<std::string>& vars) {
  for (const auto& v : vars)
    if (v.find('@') != std::string::npos)
      throw gkp_error("variable names may not contain '@': " + v);
}

// ---------- periodic complexity engine ----------

using Fn = std::map<long, Element>;

Fn to_fn(const PeriodicFunction& u) {
  Fn w;
  for (const auto& [p, v] : u.vals)
    if (!is_identity(v)) w.emplace(p, v);
  return w;
}

bool fn_basic_periodic(const Fn& w) {
  if (w.empty()) return false;
  auto it = w.begin();
  long prev = it->first;
  const Element& val = it->second;
  long gap = -1;
  for (++it; it != w.end(); ++it) {
    if (!elem_eq(it->second, val)) return false;
    long g = it->first - prev;
    if (gap == -1) gap = g;
    else if (g != gap) return false;
    prev = it->first;
  }
  return true;
}

// closure of the values under product/inverse, abandoned past the cap
std::optional<std::vector<Element>> value_group(const PeriodicFunction& u,
                                                size_t cap = 64) {
  std::vector<Element> elems{identity(u.g)};
  std::set<std::string> keys{elem_key(elems[0])};
  auto add = [&](const Element& e) {
    if (keys.insert(elem_key(e)).second) elems.push_back(e);
  };
  for (const auto& [p, v] : u.vals) add(v);
  for (size_t done = 0; done < elems.size() && elems.size() <= cap; done++) {
    add(inv(elems[done]));
    size_t fixed = elems.size();
    for (size_t j = 0; j < fixed && elems.size() <= cap; j++)
      add(mul(elems[done], elems[j]));
  }
  if (elems.size() > cap) return std::nullopt;
  return elems;
}

bool all_commute(const std::vector<Element>& v) {
  for (size_t i = 0; i < v.size(); i++)
    for (size_t j = i + 1; j < v.size(); j++)
      if (!elem_eq(mul(v[i], v[j]), mul(v[j], v[i]))) return false;
  return true;
}

// the search works over closure indices so the hot path is pure integer
// arithmetic; closure[0] must be the identity
struct PcSearch {
  using IFn = std::map<long, int>;  // position -> closure index, identity omitted
  std::vector<Element> closure;
  std::vector<int> cay;   // flattened multiplication table
  std::vector<int> cinv;  // inverse indices
  std::vector<int> vals;  // candidate factor values, identity excluded
  bool abelian = true;
  long node_cap = 2000000;
  long nodes = 0;
  bool complete = true;
  std::unordered_map<std::string, int> failed;  // canon -> max depth refuted

  static PcSearch make(const std::vector<Element>& closure) {
    PcSearch s;
    s.closure = closure;
    int n = (int)closure.size();
    std::unordered_map<std::string, int> idx;
    for (int i = 0; i < n; i++) idx[elem_key(closure[i])] = i;
    s.cay.assign((size_t)n * n, 0);
    s.cinv.assign(n, 0);
    for (int i = 0; i < n; i++) {
      s.cinv[i] = idx.at(elem_key(inv(closure[i])));
      for (int j = 0; j < n; j++)
        s.cay[(size_t)i * n + j] = idx.at(elem_key(mul(closure[i], closure[j])));
    }
    for (int i = 1; i < n; i++) s.vals.push_back(i);
    s.abelian = all_commute(closure);
    return s;
  }

  int at(int i, int j) const { return cay[(size_t)i * closure.size() + j]; }

  int find_value(const Element& v) const {
    for (int i = 0; i < (int)closure.size(); i++)
      if (elem_eq(closure[i], v)) return i;
    return -1;
  }

  static std::string key(const IFn& w) {
    std::string k;
    k.reserve(w.size() * 5);
    long base = w.begin()->first;
    for (const auto& [p, v] : w) {
      uint32_t dp = (uint32_t)(p - base);
      k.append(reinterpret_cast<const char*>(&dp), sizeof dp);
      k.push_back((char)v);
    }
    return k;
  }

  static bool basic_periodic(const IFn& w) {
    auto it = w.begin();
    long prev = it->first;
    int val = it->second;
    long gap = -1;
    for (++it; it != w.end(); ++it) {
      if (it->second != val) return false;
      long g = it->first - prev;
      if (gap == -1) gap = g;
      else if (g != gap) return false;
      prev = it->first;
    }
    return true;
  }

  bool strip(IFn w, long start, long step, long count, int c, int d) {
    if (++nodes > node_cap) {
      complete = false;
      return false;
    }
    int ci = cinv[c];
    for (long i = 0; i <= count; i++) {
      long pos = start + step * i;
      auto it = w.find(pos);
      int nv = at(ci, it == w.end() ? 0 : it->second);
      if (nv == 0) {
        if (it != w.end()) w.erase(it);
      } else if (it != w.end()) {
        it->second = nv;
      } else {
        w.emplace(pos, nv);
      }
    }
    return can(w, d);
  }

  bool can(const IFn& w, int d) {
    if (!complete) return false;
    if (w.empty()) return true;
    if (d <= 0) return false;
    if (basic_periodic(w)) return true;
    if (d == 1) return false;
    std::string k = key(w);
    auto it = failed.find(k);
    if (it != failed.end() && it->second >= d) return false;
    long lo = w.begin()->first, hi = w.rbegin()->first;
    // a factor's support stays inside the hull of the remaining support; in
    // the abelian case factors commute pointwise, so one may assume the
    // first factor covers the leftmost point
    long p_hi = abelian ? lo : hi;
    bool found = false;
    for (long p = lo; p <= p_hi && !found; p++) {
      long span = hi - p;
      for (long q = 1; q <= std::max(span, 1L) && !found; q++) {
        long lmax = q > span ? 0 : span / q;
        if (q > 1 && lmax == 0) break;  // singleton already tried with q=1
        for (long l = lmax; l >= 0 && !found; l--) {
          if (l == 0 && q > 1) continue;
          for (int c : vals) {
            if (strip(w, p, q, l, c, d - 1)) {
              found = true;
              break;
            }
          }
        }
      }
    }
    if (found) return true;
    if (complete) {
      int& rec = failed[k];
      rec = std::max(rec, d);
    }
    return false;
  }
};

// -1: no decomposition with <= k_max factors found
int exact_pc(const Fn& w, int k_max, PcSearch& s) {
  PcSearch::IFn iw;
  for (const auto& [p, v] : w) {
    int i = s.find_value(v);
    if (i <= 0) throw gkp_error("pc search saw a value outside the closure");
    iw.emplace(p, i);
  }
  for (int d = 0; d <= k_max; d++)
    if (s.can(iw, d)) return d;
  return -1;
}

long alternating_certificate_fn(const Fn& w) {
  if (w.empty()) return 0;
  // run-length view over the hull, unbounded identity runs on both ends
  std::vector<std::pair<Element, long>> runs;
  const Element one = identity(w.begin()->second.grp);
  const long big = 1L << 60;
  runs.push_back({one, big});
  long lo = w.begin()->first, hi = w.rbegin()->first;
  for (long p = lo; p <= hi; p++) {
    auto it = w.find(p);
    Element v = it == w.end() ? one : it->second;
    if (!runs.empty() && elem_eq(runs.back().first, v))
      runs.back().second += 1;
    else
      runs.push_back({v, 1});
  }
  runs.push_back({one, big});
  long best = 0;
  for (long k = 1; (1L << k) < 62; k++) {
    long s = 1L << (1L << k);
    long count = 0;
    const Element* prev = nullptr;
    for (const auto& [v, len] : runs) {
      if (len < s) continue;
      if (!prev || !elem_eq(*prev, v)) {
        count += 1;
        prev = &v;
      }
    }
    if (count >= 4 * k) best = k;
    else break;
  }
  return best;
}

std::vector<long> candidate_periods(const Fn& w, size_t cap = 128) {
  std::set<long> qs{1};
  std::vector<long> pos;
  pos.reserve(w.size());
  for (const auto& [p, v] : w) pos.push_back(p);
  auto add_divisors = [&](long gap) {
    for (long d = 1; d * d <= gap && qs.size() < cap; d++)
      if (gap % d == 0) {
        qs.insert(d);
        qs.insert(gap / d);
      }
  };
  // distance-2 gaps catch stretch periods whose adjacent gaps are off by one
  for (size_t j = 0; j + 1 < pos.size() && qs.size() < cap; j++) {
    add_divisors(pos[j + 1] - pos[j]);
    if (j + 2 < pos.size()) add_divisors(pos[j + 2] - pos[j]);
  }
  return {qs.begin(), qs.end()};
}

// decomposition by repeatedly stripping the longest constant progression
long greedy_upper(Fn w, const std::vector<long>& periods) {
  long count = 0;
  while (!w.empty()) {
    long bp = 0, bq = 1, bl = 0;
    for (const auto& [x, vx] : w) {
      for (long q : periods) {
        if (q < 1) continue;
        long l = 0;
        while (true) {
          auto it = w.find(x + q * (l + 1));
          if (it == w.end() || !elem_eq(it->second, vx)) break;
          l += 1;
        }
        if (l > bl) {
          bl = l;
          bp = x;
          bq = q;
        }
      }
    }
    if (bl == 0) {
      count += (long)w.size();
      break;
    }
    for (long i = 0; i <= bl; i++) w.erase(bp + bq * i);
    count += 1;
  }
  return count;
}

long run_count(const Fn& w) {
  long runs = 0;
  long prev = 0;
  const Element* pv = nullptr;
  for (const auto& [p, v] : w) {
    if (!pv || p != prev + 1 || !elem_eq(*pv, v)) runs += 1;
    prev = p;
    pv = &v;
  }
  return runs;
}

// base words with certified small periodic complexity; positions of the
// non-identity letters, value a everywhere
std::vector<Element> base_word(int target, const Element& a) {
  std::vector<long> suppv;
  if (target <= 1) {
    suppv = {0};
  } else if (target == 2) {
    // not an arithmetic progression, covered by two
    suppv = {0, 1, 3};
  } else if (target == 3) {
    // certified over the two-element quotient, which exists exactly for
    // even or infinite order
    std::optional<Int> o = order(a);
    if (!o || *o % 2 == 0) suppv = {0, 1, 5, 6, 8};
  }
  if (!suppv.empty()) {
    std::vector<Element> out((size_t)suppv.back() + 1, identity(a.grp));
    for (long p : suppv) out[(size_t)p] = a;
    return out;
  }
  PeriodicFunction u = pc_word(target, a);
  std::vector<long> sp = pf_supp(u);
  std::vector<Element> out((size_t)sp.back() + 1, identity(a.grp));
  for (long p : sp) out[(size_t)p] = pf_at(u, p);
  return out;
}

PeriodicFunction from_letters(const GroupRef& g,
                              const std::vector<Element>& letters) {
  std::map<long, Element> vals;
  for (size_t i = 0; i < letters.size(); i++)
    if (!is_identity(letters[i])) vals.emplace((long)i, letters[i]);
  return pf_make(g, std::move(vals));
}

// u_1 doubles the base: stretched copy with gaps m-1, then a plain copy
std::vector<Element> doubled_word(const std::vector<Element>& v) {
  long m = (long)v.size();
  std::vector<Element> out;
  out.reserve((size_t)(m * m + m));
  for (long i = 0; i < m; i++) {
    out.push_back(v[(size_t)i]);
    for (long j = 0; j < m - 1; j++) out.push_back(identity(v[0].grp));
  }
  for (long i = 0; i < m; i++) out.push_back(v[(size_t)i]);
  return out;
}

PeriodicFunction stretch_letters(const GroupRef& g,
                                 const std::vector<Element>& letters,
                                 long gap) {
  std::map<long, Element> vals;
  for (size_t i = 0; i < letters.size(); i++)
    if (!is_identity(letters[i])) vals.emplace((long)i * (gap + 1), letters[i]);
  return pf_make(g, std::move(vals));
}

std::vector<PeriodicFunction> interval_words_impl(int n, int k,
                                                  const Element& a,
                                                  bool prime_steps) {
  if (n < 1) throw gkp_error("interval words need n >= 1");
  if (is_identity(a)) throw gkp_error("interval words need a != 1");
  // one extra unit of base complexity absorbs the overlap between distinct
  // stretched words; a single word needs none
  int btarget = (n == 1 || k >= 3) ? k : k + 1;
  std::vector<Element> v = base_word(btarget, a);
  std::vector<Element> u1 = doubled_word(v);
  long m1 = (long)u1.size();
  if (m1 > gadget_cap) throw resource_error("interval word exceeds cap");
  std::vector<PeriodicFunction> out{from_letters(a.grp, u1)};
  long prev_len = m1;
  long step = 0;
  for (int i = 2; i <= n; i++) {
    if (prime_steps) {
      step = next_prime(std::max(m1 - 1, step));
      out.push_back(stretch_letters(a.grp, u1, step - 1));
      prev_len = (m1 - 1) * step + 1;
    } else {
      double projected = (double)(m1 - 1) * (double)(prev_len + 1) + 1;
      if (projected > (double)gadget_cap)
        throw resource_error("interval word exceeds cap");
      out.push_back(stretch_letters(a.grp, u1, prev_len));
      prev_len = (m1 - 1) * (prev_len + 1) + 1;
    }
    if (prev_len > gadget_cap) throw resource_error("interval word exceeds cap");
  }
  return out;
}

}  // namespace

// ---------- lonely-1 words ----------

LonelyOnesFamily lonely_ones_words(int n) {
  if (n < 1) throw gkp_error("lonely-1 family needs n >= 1");
  LonelyOnesFamily fam;
  fam.n = n;
  long total = 0;
  for (int i = 0; i < n; i++) {
    long lo = i == 0 ? 2L * n : 2 * fam.p[(size_t)i - 1] * fam.q[(size_t)i - 1];
    long p = next_prime(lo);
    long q = next_prime(p);
    fam.p.push_back(p);
    fam.q.push_back(q);
    fam.len.push_back(2 * p * q);
    total += p + q;
    if (total > gadget_cap) throw resource_error("lonely-1 family exceeds cap");
    std::vector<long> ones;
    ones.reserve((size_t)(p + q));
    for (long j = 0; j < q; j++) ones.push_back(j * p);
    for (long j = 0; j < p; j++) ones.push_back(q * p + j * q);
    fam.ones.push_back(std::move(ones));
  }
  return fam;
}

std::vector<int> dense_word(const LonelyOnesFamily& fam, int i) {
  if (i < 0 || i >= fam.n) throw gkp_error("word index out of range");
  if (fam.len[(size_t)i] > gadget_cap)
    throw resource_error("dense word exceeds cap");
  std::vector<int> w((size_t)fam.len[(size_t)i], 0);
  for (long p : fam.ones[(size_t)i]) w[(size_t)p] = 1;
  return w;
}

bool has_lonely_one(const std::vector<std::vector<int>>& words,
                    const std::vector<long>& shifts) {
  if (words.size() != shifts.size())
    throw gkp_error("one shift per word required");
  if (words.empty()) return false;
  long lo = shifts[0], hi = shifts[0];
  for (size_t i = 0; i < words.size(); i++) {
    lo = std::min(lo, shifts[i]);
    hi = std::max(hi, shifts[i] + (long)words[i].size());
  }
  for (long col = lo; col < hi; col++) {
    int count = 0;
    for (size_t i = 0; i < words.size() && count < 2; i++) {
      long j = col - shifts[i];
      if (j >= 0 && j < (long)words[i].size() && words[i][(size_t)j] == 1)
        count += 1;
    }
    if (count == 1) return true;
  }
  return false;
}

bool has_lonely_one(const LonelyOnesFamily& fam, const std::vector<int>& idx,
                    const std::vector<long>& shifts) {
  if (idx.size() != shifts.size())
    throw gkp_error("one shift per word required");
  std::map<long, int> cols;
  for (size_t k = 0; k < idx.size(); k++) {
    if (idx[k] < 0 || idx[k] >= fam.n) throw gkp_error("word index out of range");
    for (long p : fam.ones[(size_t)idx[k]]) cols[shifts[k] + p] += 1;
  }
  for (const auto& [c, cnt] : cols)
    if (cnt == 1) return true;
  return false;
}

// ---------- cancelling conjugates / pairs ----------

std::vector<Element> cancelling_conjugates(int n, const Element& a,
                                           const Element& t) {
  if (is_identity(a)) throw gkp_error("cancelling conjugates need a != 1");
  require_infinite(t);
  LonelyOnesFamily fam = lonely_ones_words(n);
  GroupRef wg = wreath_group(a.grp, t.grp);
  std::vector<Element> out;
  out.reserve((size_t)n);
  for (int i = 0; i < n; i++) {
    std::vector<std::pair<Element, Element>> supp;
    supp.reserve(fam.ones[(size_t)i].size());
    for (long j : fam.ones[(size_t)i]) supp.push_back({pow(t, j), a});
    out.push_back(make_wreath(wg, std::move(supp), identity(t.grp)));
  }
  return out;
}

std::vector<Element> cancelling_pairs(
    const std::vector<std::pair<int, int>>& pairs, int n, const Element& a,
    const Element& t) {
  if (n < 0) throw gkp_error("cancelling pairs need n >= 0");
  for (auto [r, s] : pairs)
    if (r < 0 || s < 0 || r > n || s > n)
      throw gkp_error("pair index out of range");
  GroupRef wg = wreath_group(a.grp, t.grp);
  std::vector<Element> bar;
  if (!pairs.empty()) bar = cancelling_conjugates((int)pairs.size(), a, t);
  else {
    if (is_identity(a)) throw gkp_error("cancelling conjugates need a != 1");
    require_infinite(t);
  }
  std::vector<Element> out((size_t)n + 1, identity(wg));
  for (size_t j = 0; j < pairs.size(); j++) {
    auto [r, s] = pairs[j];
    out[(size_t)r] = mul(out[(size_t)r], bar[j]);
    out[(size_t)s] = mul(out[(size_t)s], inv(bar[j]));
  }
  return out;
}

// ---------- interval knapsack -> wreath knapsack ----------

IkpReduction ikp_to_wreath(const MultiInstance& ikp, const Element& a,
                           const Element& t) {
  validate(ikp);
  if (ikp.integer_mode)
    throw gkp_error("interval reduction needs natural mode");
  if (ikp.expeq) throw gkp_error("interval reduction needs window form");
  if (!spec_eq(t.grp, ikp.grp))
    throw gkp_error("ray element must live in the instance group");
  if (is_identity(a)) throw gkp_error("interval reduction needs a != 1");
  require_infinite(t);
  check_var_names(variables(ikp));
  int n = (int)ikp.exprs.size();
  std::vector<Element> f = cancelling_pairs(ikp.pairs, n, a, t);
  GroupRef wg = wreath_group(a.grp, ikp.grp);

  IkpReduction red;
  for (const std::string& x : variables(ikp)) red.bar[x] = x + "@m";

  Expression expr;
  expr.grp = wg;
  // mirror block: reversed inverted copies of E_n ... E_1 with fresh vars
  for (int i = n - 1; i >= 0; i--) {
    const auto& atoms = ikp.exprs[(size_t)i].atoms;
    for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
      Element g = lift_top(wg, inv(it->g));
      if (it->is_power)
        expr.atoms.push_back(power_atom(g, red.bar.at(it->var)));
      else
        expr.atoms.push_back(const_atom(g));
    }
  }
  expr.atoms.push_back(const_atom(f[0]));
  for (int i = 0; i < n; i++) {
    for (const Atom& at : ikp.exprs[(size_t)i].atoms) {
      Element g = lift_top(wg, at.g);
      if (at.is_power)
        expr.atoms.push_back(power_atom(g, at.var));
      else
        expr.atoms.push_back(const_atom(g));
    }
    expr.atoms.push_back(const_atom(f[(size_t)i + 1]));
  }
  red.inst = KpInstance{std::move(expr), {}, false};
  validate(red.inst);
  return red;
}

Valuation ikp_witness_forward(const IkpReduction& red, const Valuation& nu) {
  Valuation out = nu;
  for (const auto& [x, xb] : red.bar) out[xb] = nu.at(x);
  return out;
}

Valuation ikp_witness_back(const IkpReduction& red, const Valuation& nu) {
  Valuation out;
  for (const auto& [x, xb] : red.bar) out[x] = nu.at(x);
  return out;
}

// ---------- periodic complexity ----------

PeriodicFunction pc_word(int k, const Element& a) {
  if (k < 0) throw gkp_error("pc word needs k >= 0");
  if (is_identity(a)) throw gkp_error("pc word needs a != 1");
  if (k == 0) return pf_make(a.grp, {});
  if ((1L << k) >= 20 || 4.0 * k * (double)(1L << (1L << k)) > (double)gadget_cap)
    throw resource_error("pc word exceeds cap");
  long b = 1L << (1L << k);
  std::map<long, Element> vals;
  for (long blk = 0; blk < 2 * k; blk++)
    for (long j = 0; j < b; j++) vals.emplace(blk * 2 * b + j, a);
  return pf_make(a.grp, std::move(vals));
}

PeriodicFunction pc_word(int k) {
  return pc_word(k, cyc_make(cyclic_group(2), 1));
}

long alternating_certificate(const PeriodicFunction& u) {
  return alternating_certificate_fn(to_fn(u));
}

PcResult periodic_complexity(const PeriodicFunction& u, int k_max,
                             long window) {
  if (k_max < 0 || window < 1) throw gkp_error("bad pc search limits");
  Fn w = to_fn(u);
  if (w.empty()) return {0, 0, true};
  std::optional<std::vector<Element>> grp = value_group(u);
  long width = w.rbegin()->first - w.begin()->first + 1;

  std::optional<PcSearch> proto;
  if (grp) proto = PcSearch::make(*grp);
  auto make_search = [&](long cap) {
    PcSearch s = *proto;
    s.node_cap = cap;
    return s;
  };

  PcResult res;
  res.lower = 1;
  if (!fn_basic_periodic(w)) res.lower = 2;
  res.lower = std::max(res.lower, alternating_certificate_fn(w));

  if (grp && width <= window) {
    PcSearch s = make_search(500000);
    int k = exact_pc(w, k_max, s);
    if (k >= 0 && s.complete) return {k, k, true};
    if (k >= 0) {
      res.upper = k;
      res.exact = res.lower == k;
      return res;
    }
    if (s.complete) {
      res.lower = std::max(res.lower, (long)k_max + 1);
      return res;
    }
  }

  std::vector<long> periods = candidate_periods(w);
  if (grp) {
    // projections onto progressions never increase the complexity, so the
    // exact count of a narrow projection bounds the original from below
    for (long q : periods) {
      if (q < 2) continue;
      std::set<long> phases;
      for (const auto& [p, v] : w) phases.insert(((p % q) + q) % q);
      for (long r : phases) {
        Fn sub;
        for (const auto& [p, v] : w)
          if (((p % q) + q) % q == r) sub.emplace((p - r) / q, v);
        long swidth = sub.rbegin()->first - sub.begin()->first + 1;
        if (swidth > window || swidth >= width) continue;
        PcSearch s = make_search(100000);
        int k = exact_pc(sub, k_max, s);
        if (!s.complete) continue;
        res.lower = std::max(res.lower, k >= 0 ? (long)k : (long)k_max + 1);
      }
    }
  }
  res.upper = std::min(run_count(w), greedy_upper(w, periods));
  res.exact = res.upper && res.lower == *res.upper;
  return res;
}

// ---------- interval words / loop words ----------

std::vector<PeriodicFunction> interval_words(int n, int k, const Element& a) {
  return interval_words_impl(n, k, a, false);
}

LoopWordFamily loop_words(int m, const std::vector<std::pair<int, int>>& loops,
                          const Element& a, const Element& t, int pc_target) {
  if (m < 0) throw gkp_error("loop words need m >= 0");
  if (is_identity(a)) throw gkp_error("loop words need a != 1");
  require_infinite(t);
  for (auto [i, j] : loops)
    if (i < 0 || j < i || j > m) throw gkp_error("loop pair out of range");
  LoopWordFamily fam;
  fam.m = m;
  fam.loops = loops;
  fam.pc_target = pc_target > 0 ? pc_target : 2 * m + 1;
  fam.heuristic = fam.pc_target < 2 * m + 1;
  fam.f.assign((size_t)m + 1, pf_make(a.grp, {}));
  if (!loops.empty()) {
    std::vector<PeriodicFunction> words;
    try {
      words = interval_words_impl((int)loops.size(), fam.pc_target, a, false);
    } catch (const resource_error&) {
      // stretched recipe grows geometrically per word; the prime-step
      // family keeps pairwise intersections <= 1 point at linear size
      words = interval_words_impl((int)loops.size(), fam.pc_target, a, true);
    }
    for (size_t kx = 0; kx < loops.size(); kx++) {
      auto [i, j] = loops[kx];
      fam.f[(size_t)i] = pf_mul(fam.f[(size_t)i], words[kx]);
      fam.f[(size_t)j] = pf_mul(fam.f[(size_t)j], pf_inv(words[kx]));
    }
  }
  for (const PeriodicFunction& f : fam.f) {
    std::vector<long> sp = pf_supp(f);
    if (!sp.empty()) fam.width = std::max(fam.width, sp.back() + 1);
  }
  return fam;
}

// ---------- positive instances over H -> knapsack over G wr H ----------

WreathReduction kpplus_to_wreath(const KpInstance& kpplus, const Element& a,
                                 const Element& t, int pc_target) {
  validate(kpplus);
  if (kpplus.integer_mode) throw gkp_error("natural mode required");
  if (kpplus.cons.variant != Variant::KPpm)
    throw gkp_error("plain walk semantics required");
  if (!kpplus.cons.disj.empty())
    throw gkp_error("positive instances may not carry disjointness pairs");
  if (!spec_eq(t.grp, kpplus.expr.grp))
    throw gkp_error("ray element must live in the instance group");
  int n = (int)kpplus.expr.atoms.size();
  WreathReduction red;
  red.words = loop_words(n, kpplus.cons.loops, a, t, pc_target);
  GroupRef wg = wreath_group(a.grp, kpplus.expr.grp);
  Expression expr;
  expr.grp = wg;
  expr.atoms.push_back(const_atom(pf_embed(red.words.f[0], wg, t)));
  for (int i = 0; i < n; i++) {
    const Atom& at = kpplus.expr.atoms[(size_t)i];
    Element g = lift_top(wg, at.g);
    expr.atoms.push_back(at.is_power ? power_atom(g, at.var) : const_atom(g));
    expr.atoms.push_back(
        const_atom(pf_embed(red.words.f[(size_t)i + 1], wg, t)));
  }
  red.inst = KpInstance{std::move(expr), {}, false};
  validate(red.inst);
  return red;
}

// ---------- full instances over H -> knapsack family over G wr H ----------

namespace {

struct BlockDesc {
  int center = 0;  // 1-based atom index of E being wrapped
  Element c;       // a, b, a^-1 or b^-1
  int k = 0;       // disjointness pair ordinal, 1-based
  int j = 0;       // shift ordinal within S_k, 1-based
};

AtomTameness classify_atom(const Atom& at, const Element& a,
                           const Element& t) {
  AtomTameness r;
  const WreathData& w = wreath_data(at.g);
  r.value_in_a = true;
  for (const auto& [h, v] : w.supp)
    if (!discrete_log(a, v)) r.value_in_a = false;
  if (!at.is_power) {
    r.tame = w.supp.size() <= 1;
    return r;
  }
  Commensurable cm = commensurable(sigma(at.g), t);
  r.period_vs_t = cm.result;
  r.tame = w.supp.empty() ||
           (w.supp.size() == 1 &&
            (r.value_in_a || cm.result == Commensurable::None));
  return r;
}

}  // namespace

KppmWreathReduction kppm_to_wreath(const KpInstance& inst, const Element& a,
                                   const Element& b, const Element& t,
                                   int pc_target) {
  validate(inst);
  if (inst.integer_mode) throw gkp_error("natural mode required");
  if (inst.cons.variant != Variant::KPpm)
    throw gkp_error("plain walk semantics required");
  if (!spec_eq(a.grp, b.grp)) throw gkp_error("commutator pair group mismatch");
  if (elem_eq(mul(a, b), mul(b, a)))
    throw gkp_error("commutator pair must not commute");
  if (!spec_eq(t.grp, inst.expr.grp))
    throw gkp_error("ray element must live in the instance group");
  require_infinite(t);
  check_var_names(variables(inst));

  const GroupRef& hg = inst.expr.grp;
  long n = (long)inst.expr.atoms.size();
  auto is_pow = [&](int i) { return inst.expr.atoms[(size_t)i - 1].is_power; };
  auto base = [&](int i) -> const Element& {
    return inst.expr.atoms[(size_t)i - 1].g;
  };
  for (int i = 1; i <= n; i++)
    if (is_pow(i) && order(base(i)))
      throw gkp_error("input not torsion-free");

  // orient every pair so the side carrying b is safe for the ray
  std::vector<std::pair<int, int>> pairs = inst.cons.disj;
  for (auto& [i, j] : pairs) {
    if (is_pow(i) && is_pow(j)) {
      Commensurable cm = commensurable(base(i), base(j));
      if (cm.result == Commensurable::Some)
        throw gkp_error("input not orthogonalized");
      if (cm.result == Commensurable::Unknown)
        throw resource_error("cannot verify orthogonality");
    }
    if (is_pow(j)) {
      Commensurable cm = commensurable(base(j), t);
      if (cm.result == Commensurable::Unknown)
        throw resource_error("cannot verify ray commensurability");
      if (cm.result == Commensurable::Some) std::swap(i, j);
    }
    if (is_pow(j)) {
      Commensurable cm = commensurable(base(j), t);
      if (cm.result == Commensurable::Unknown)
        throw resource_error("cannot verify ray commensurability");
      if (cm.result == Commensurable::Some)
        throw gkp_error("both pair sides commensurable to the ray");
    }
  }

  KppmWreathReduction red;
  red.wg = wreath_group(a.grp, hg);
  red.t = t;
  red.n = n;
  red.d = (long)pairs.size();
  red.m = n + 4 * red.d * (n + red.d) * (n + 2);

  std::vector<BlockDesc> blocks;
  for (int k = 1; k <= (int)red.d; k++) {
    auto [ik, jk] = pairs[(size_t)k - 1];
    for (int j = 1; j <= (int)(n + red.d); j++) {
      blocks.push_back({ik, a, k, j});
      blocks.push_back({jk, b, k, j});
      blocks.push_back({ik, inv(a), k, j});
      blocks.push_back({jk, inv(b), k, j});
    }
  }

  red.loops = inst.cons.loops;
  if (red.d > 0) red.loops.push_back({0, (int)n});
  for (size_t bo = 0; bo < blocks.size(); bo++) {
    int k0 = (int)(n + (long)bo * (n + 2));
    int i = blocks[bo].center;
    red.loops.push_back({k0, k0 + (int)n + 2});
    red.loops.push_back({i - 1, k0 + i - 1});
    red.loops.push_back({i, k0 + i + 2});
  }

  red.words = loop_words((int)red.m, red.loops, a, t, pc_target);
  long nw = red.words.width;

  for (const Atom& at : inst.expr.atoms) {
    Element g = lift_top(red.wg, at.g);
    red.ehat.push_back(at.is_power ? power_atom(g, at.var) : const_atom(g));
  }
  for (size_t bo = 0; bo < blocks.size(); bo++) {
    const BlockDesc& blk = blocks[bo];
    // shift s = j * (n+d)^(2k) * N per the pair ordinal and slot
    Int s = blk.j;
    for (int e = 0; e < 2 * blk.k; e++) s *= n + red.d;
    s *= nw;
    red.block_shifts.push_back(s);
    Element ts = pow(t, s);
    Element tsi = inv(ts);
    std::string tag = "@" + std::to_string(bo);
    auto copy_atom = [&](int u) {
      const Atom& at = inst.expr.atoms[(size_t)u - 1];
      Element g = lift_top(red.wg, at.g);
      red.ehat.push_back(at.is_power ? power_atom(g, at.var + tag)
                                     : const_atom(g));
    };
    for (int u = 1; u < blk.center; u++) copy_atom(u);
    red.ehat.push_back(const_atom(lift_top(red.wg, ts)));
    Element mid = mul(lift_base(red.wg, blk.c),
                      lift_top(red.wg, mul(mul(tsi, base(blk.center)), ts)));
    const Atom& cat = inst.expr.atoms[(size_t)blk.center - 1];
    red.ehat.push_back(cat.is_power ? power_atom(mid, cat.var + tag)
                                    : const_atom(mid));
    // the closing letter marks the final subwalk point; an identity constant
    // ends where it starts, and doubling the letter there would square away
    // order-two residues
    bool single_point = !cat.is_power && is_identity(base(blk.center));
    red.ehat.push_back(single_point
                           ? const_atom(lift_top(red.wg, tsi))
                           : const_atom(mul(lift_base(red.wg, blk.c),
                                            lift_top(red.wg, tsi))));
    for (int u = blk.center + 1; u <= (int)n; u++) copy_atom(u);
  }
  if ((long)red.ehat.size() != red.m)
    throw gkp_error("internal atom count mismatch");

  red.shift_bound = Int(nw) * red.m * red.m;
  for (const Atom& at : red.ehat)
    red.tameness.push_back(classify_atom(at, a, t));
  red.all_tame = true;
  for (const AtomTameness& tm : red.tameness) red.all_tame &= tm.tame;
  return red;
}

KpInstance kppm_member(const KppmWreathReduction& red, const Int& r) {
  Element shift = lift_top(red.wg, pow(red.t, r));
  Expression expr;
  expr.grp = red.wg;
  auto word = [&](size_t j) {
    return const_atom(
        conjugate(pf_embed(red.words.f[j], red.wg, red.t), shift));
  };
  expr.atoms.push_back(word(0));
  for (size_t i = 0; i < red.ehat.size(); i++) {
    expr.atoms.push_back(red.ehat[i]);
    expr.atoms.push_back(word(i + 1));
  }
  KpInstance inst{std::move(expr), {}, false};
  validate(inst);
  return inst;
}

// ---------- parallel shift search ----------

long find_shift(const std::vector<std::vector<long>>& F,
                const std::vector<std::vector<long>>& A) {
  if (F.size() != A.size()) throw gkp_error("set lists must align");
  long m = (long)F.size();
  long nmax = 0, lmax = 0;
  for (const auto& f : F) nmax = std::max(nmax, (long)f.size());
  std::vector<std::vector<long>> av;
  av.reserve(A.size());
  for (const auto& s : A) {
    lmax = std::max(lmax, (long)s.size());
    std::vector<long> v = s;
    std::sort(v.begin(), v.end());
    av.push_back(std::move(v));
  }
  long bound = nmax * m * lmax;
  auto good = [&](long r) {
    for (size_t i = 0; i < F.size(); i++)
      for (long x : F[i])
        if (std::binary_search(av[i].begin(), av[i].end(), r + x))
          return false;
    return true;
  };
  long best = bound + 1;
#ifdef GKP_OPENMP
#pragma omp parallel for schedule(static) reduction(min : best)
#endif
  for (long r = 0; r <= bound; r++)
    if (good(r) && r < best) best = r;
  if (best > bound)
    throw gkp_error("shift search exceeded the guaranteed bound");
  return best;
}

}  // namespace gkp
