#include "kp_model.hh"

#include "wreath.hh"

#include <algorithm>

namespace gkp {

Atom power_atom(Element g, std::string var) {
  if (var.empty()) throw gkp_error("power atom needs a variable name");
  return Atom{true, std::move(g), std::move(var)};
}
Atom const_atom(Element g) { return Atom{false, std::move(g), ""}; }

std::vector<std::string> variables(const Expression& e) {
  std::vector<std::string> vars;
  for (const Atom& a : e.atoms)
    if (a.is_power && std::find(vars.begin(), vars.end(), a.var) == vars.end())
      vars.push_back(a.var);
  return vars;
}
std::vector<std::string> variables(const KpInstance& inst) {
  return variables(inst.expr);
}
std::vector<std::string> variables(const MultiInstance& inst) {
  std::vector<std::string> vars;
  for (const Expression& e : inst.exprs)
    for (const Atom& a : e.atoms)
      if (a.is_power && std::find(vars.begin(), vars.end(), a.var) == vars.end())
        vars.push_back(a.var);
  return vars;
}

static void check_pairs(const std::vector<std::pair<int, int>>& ps, int lo,
                        int n, const char* what) {
  for (auto [i, j] : ps)
    if (i < lo || j < i || j > n)
      throw gkp_error(std::string("bad ") + what + " pair (" +
                      std::to_string(i) + "," + std::to_string(j) + ")");
}

void validate(const KpInstance& inst) {
  int n = (int)inst.expr.atoms.size();
  std::set<std::string> seen;
  for (const Atom& a : inst.expr.atoms) {
    if (!spec_eq(a.g.grp, inst.expr.grp)) throw gkp_error("atom group mismatch");
    if (a.is_power && !seen.insert(a.var).second)
      throw gkp_error("variable repeats in expression: " + a.var);
  }
  check_pairs(inst.cons.loops, 0, n, "loop");
  check_pairs(inst.cons.disj, 1, n, "disjointness");
}

void validate(const MultiInstance& inst) {
  std::set<std::string> seen;
  for (const Expression& e : inst.exprs)
    for (const Atom& a : e.atoms) {
      if (!spec_eq(a.g.grp, inst.grp)) throw gkp_error("atom group mismatch");
      if (a.is_power && !inst.expeq && !seen.insert(a.var).second)
        throw gkp_error("variable shared across expressions: " + a.var);
    }
  check_pairs(inst.pairs, 0, (int)inst.exprs.size(), "window");
}

// ---------- semantics ----------

static Int exponent_of(const Atom& a, const Valuation& nu,
                       bool require_natural) {
  auto it = nu.find(a.var);
  if (it == nu.end()) throw gkp_error("missing variable: " + a.var);
  if (require_natural && it->second < 0)
    throw gkp_error("negative exponent in natural mode: " + a.var);
  return it->second;
}

static Element atom_value(const Atom& a, const Valuation& nu,
                          bool require_natural) {
  if (!a.is_power) return a.g;
  return pow(a.g, exponent_of(a, nu, require_natural));
}

Element evaluate(const Expression& e, const Valuation& nu,
                 bool require_natural) {
  Element acc = identity(e.grp);
  for (const Atom& a : e.atoms) acc = mul(acc, atom_value(a, nu, require_natural));
  return acc;
}

FactorizedWalk induced_walk(const Expression& e, const Valuation& nu,
                            bool require_natural) {
  FactorizedWalk w;
  Element prefix = identity(e.grp);
  for (const Atom& a : e.atoms) {
    std::vector<Element> sub;
    if (!a.is_power) {
      sub.push_back(prefix);
      prefix = mul(prefix, a.g);
      sub.push_back(prefix);
    } else {
      Int x = exponent_of(a, nu, require_natural);
      int dir = x < 0 ? -1 : 1;
      Element cur = prefix;
      Element step = dir < 0 ? inv(a.g) : a.g;
      sub.push_back(cur);
      for (Int k = 0; k != x; k += dir) {
        cur = mul(cur, step);
        sub.push_back(cur);
      }
      prefix = cur;
    }
    w.subs.push_back(std::move(sub));
  }
  return w;
}

static std::vector<Element> prefixes(const Expression& e, const Valuation& nu,
                                     bool require_natural) {
  std::vector<Element> p;
  p.push_back(identity(e.grp));
  for (const Atom& a : e.atoms)
    p.push_back(mul(p.back(), atom_value(a, nu, require_natural)));
  return p;
}

// point set of sub-walk i (1-based); drop_last per MKP/HKP semantics
static std::set<std::string> walk_points(const Expression& e,
                                         const std::vector<Element>& pre,
                                         const Valuation& nu, int i,
                                         bool drop_last, bool sigma_image) {
  const Atom& a = e.atoms[i - 1];
  std::set<std::string> pts;
  auto add = [&](const Element& x) {
    pts.insert(elem_key(sigma_image ? sigma(x) : x));
  };
  if (!a.is_power) {
    add(pre[i - 1]);
    if (!drop_last) add(pre[i]);
    return pts;
  }
  Int x = nu.at(a.var);
  Int n = x < 0 ? Int(-x) : x;
  Int last = drop_last ? Int(n - 1) : n;
  Element step = x < 0 ? inv(a.g) : a.g;
  Element cur = pre[i - 1];
  for (Int k = 0; k <= last; k += 1) {
    add(cur);
    if (k != last) cur = mul(cur, step);
  }
  return pts;
}

bool check_constraints(const KpInstance& inst, const Valuation& nu) {
  bool nat = !inst.integer_mode;
  auto pre = prefixes(inst.expr, nu, nat);
  if (!is_identity(pre.back())) return false;
  for (auto [i, j] : inst.cons.loops)
    if (!elem_eq(pre[i], pre[j])) return false;
  if (!inst.cons.disj.empty()) {
    bool drop = inst.cons.variant != Variant::KPpm;
    bool sig = inst.cons.variant == Variant::HKPpm;
    std::map<int, std::set<std::string>> cache;
    auto points = [&](int i) -> const std::set<std::string>& {
      auto it = cache.find(i);
      if (it == cache.end())
        it = cache.emplace(i, walk_points(inst.expr, pre, nu, i, drop, sig)).first;
      return it->second;
    };
    for (auto [i, j] : inst.cons.disj) {
      const auto& A = points(i);
      const auto& B = points(j);
      const auto& small = A.size() <= B.size() ? A : B;
      const auto& big = A.size() <= B.size() ? B : A;
      for (const auto& k : small)
        if (big.count(k)) return false;
    }
  }
  return true;
}

bool ikp_check(const MultiInstance& inst, const Valuation& nu) {
  bool nat = !inst.integer_mode;
  std::vector<Element> q;
  q.push_back(identity(inst.grp));
  for (const Expression& e : inst.exprs)
    q.push_back(mul(q.back(), evaluate(e, nu, nat)));
  if (inst.expeq) {
    for (size_t i = 1; i < q.size(); i++)
      if (!elem_eq(q[i - 1], q[i])) return false;
    return true;
  }
  for (auto [i, j] : inst.pairs)
    if (!elem_eq(q[i], q[j])) return false;
  return true;
}

// ---------- brute force ----------

namespace {

struct Box {
  std::vector<std::string> vars;
  Int lo, hi;
};

std::optional<Valuation> scan_from(
    const Box& box, size_t depth, Valuation& nu,
    const std::function<bool(const Valuation&)>& accept) {
  if (depth == box.vars.size())
    return accept(nu) ? std::optional<Valuation>(nu) : std::nullopt;
  for (Int v = box.lo; v <= box.hi; v += 1) {
    nu[box.vars[depth]] = v;
    if (auto r = scan_from(box, depth + 1, nu, accept)) return r;
  }
  nu.erase(box.vars[depth]);
  return std::nullopt;
}

std::optional<Valuation> scan_serial(
    const Box& box, const std::function<bool(const Valuation&)>& accept) {
  Valuation nu;
  return scan_from(box, 0, nu, accept);
}

std::optional<Valuation> scan_parallel(
    const Box& box, const std::function<bool(const Valuation&)>& accept) {
#ifdef GKP_OPENMP
  if (box.vars.empty() || box.hi < box.lo) return scan_serial(box, accept);
  long range = to_long(Int(box.hi - box.lo + 1));
  std::vector<std::optional<Valuation>> res((size_t)range);
  std::string err;
  bool failed = false;
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < range; i++) {
    try {
      Valuation nu;
      nu[box.vars[0]] = box.lo + i;
      res[(size_t)i] = scan_from(box, 1, nu, accept);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        err = e.what();
      }
    }
  }
  if (failed) throw gkp_error(err);
  for (auto& r : res)
    if (r) return r;
  return std::nullopt;
#else
  return scan_serial(box, accept);
#endif
}

// necessary-condition prefilter over the cursor projection of a wreath
// instance; cheap because it works in H instead of G wr H
std::optional<KpInstance> sigma_projection(const KpInstance& inst) {
  if (inst.expr.grp->kind != GroupSpec::Wreath) return std::nullopt;
  KpInstance p;
  p.expr.grp = inst.expr.grp->right;
  for (const Atom& a : inst.expr.atoms)
    p.expr.atoms.push_back(a.is_power ? power_atom(sigma(a.g), a.var)
                                      : const_atom(sigma(a.g)));
  p.cons.loops = inst.cons.loops;
  p.integer_mode = inst.integer_mode;
  return p;
}

std::optional<MultiInstance> sigma_projection(const MultiInstance& inst) {
  if (inst.grp->kind != GroupSpec::Wreath) return std::nullopt;
  MultiInstance p;
  p.grp = inst.grp->right;
  for (const Expression& e : inst.exprs) {
    Expression pe;
    pe.grp = p.grp;
    for (const Atom& a : e.atoms)
      pe.atoms.push_back(a.is_power ? power_atom(sigma(a.g), a.var)
                                    : const_atom(sigma(a.g)));
    p.exprs.push_back(std::move(pe));
  }
  p.pairs = inst.pairs;
  p.integer_mode = inst.integer_mode;
  p.expeq = inst.expeq;
  return p;
}

bool passes(const KpInstance& inst, const Valuation& nu) {
  return check_constraints(inst, nu);
}
bool passes(const MultiInstance& inst, const Valuation& nu) {
  return ikp_check(inst, nu);
}

template <class Inst>
std::optional<Valuation> brute_impl(const Inst& inst, const Int& bound,
                                    bool parallel) {
  validate(inst);
  if (bound < 0) throw gkp_error("brute_solve needs bound >= 0");
  Box box{variables(inst), inst.integer_mode ? Int(-bound) : Int(0), bound};
  auto proj = sigma_projection(inst);
  auto accept = [&](const Valuation& nu) {
    if (proj && !passes(*proj, nu)) return false;
    return passes(inst, nu);
  };
  return parallel ? scan_parallel(box, accept) : scan_serial(box, accept);
}

}  // namespace

std::optional<Valuation> brute_solve(const KpInstance& inst, const Int& bound) {
  return brute_impl(inst, bound, true);
}
std::optional<Valuation> brute_solve(const MultiInstance& inst,
                                     const Int& bound) {
  return brute_impl(inst, bound, true);
}
std::optional<Valuation> brute_solve_serial(const KpInstance& inst,
                                            const Int& bound) {
  return brute_impl(inst, bound, false);
}
std::optional<Valuation> brute_solve_serial(const MultiInstance& inst,
                                            const Int& bound) {
  return brute_impl(inst, bound, false);
}

std::vector<Valuation> guided_solutions(const KpInstance& inst,
                                        const std::vector<std::string>& keep,
                                        const Int& bound) {
  validate(inst);
  if (!inst.cons.disj.empty())
    throw gkp_error("guided enumeration handles loop constraints only");
  if (bound < 0) throw gkp_error("guided_solutions needs bound >= 0");
  const auto& atoms = inst.expr.atoms;
  int n = (int)atoms.size();
  std::vector<std::vector<int>> closing(n + 1);
  for (const auto& [i, j] : inst.cons.loops)
    if (i < j) closing[j].push_back(i);
  std::vector<Element> prefix((size_t)n + 1, identity(inst.expr.grp));
  std::set<Valuation> out;
  Valuation nu;
  Int lo = inst.integer_mode ? Int(-bound) : Int(0);
  std::function<void(int)> step = [&](int i) {
    for (int s : closing[i])
      if (!elem_eq(prefix[s], prefix[i])) return;
    if (i == n) {
      if (!is_identity(prefix[n])) return;
      Valuation r;
      for (const auto& v : keep)
        if (auto it = nu.find(v); it != nu.end()) r.emplace(v, it->second);
      out.insert(std::move(r));
      return;
    }
    const Atom& a = atoms[i];
    if (!a.is_power) {
      prefix[i + 1] = mul(prefix[i], a.g);
      step(i + 1);
      return;
    }
    Element cur = mul(prefix[i], pow(a.g, lo));
    for (Int e = lo; e <= bound; e += 1) {
      nu[a.var] = e;
      prefix[i + 1] = cur;
      step(i + 1);
      if (e < bound) cur = mul(cur, a.g);
    }
    nu.erase(a.var);
  };
  step(0);
  return {out.begin(), out.end()};
}

// ---------- variant conversions ----------

Valuation BackMap::apply(const Valuation& branch_nu) const {
  Valuation out;
  for (const auto& [x, st] : m) {
    if (st.first.empty()) {
      out[x] = st.second;
    } else {
      auto it = branch_nu.find(st.first);
      if (it == branch_nu.end())
        throw gkp_error("witness map source missing: " + st.first);
      out[x] = it->second + st.second;
    }
  }
  return out;
}

static BackMap identity_back(const std::vector<std::string>& vars) {
  BackMap b;
  for (const auto& v : vars) b.m[v] = {v, Int(0)};
  return b;
}

static std::string fresh_name(std::set<std::string>& used,
                              const std::string& base) {
  std::string n = base + "'";
  while (used.count(n)) n += "'";
  used.insert(n);
  return n;
}

std::vector<KpBranch> mkp_to_kppm(const KpInstance& mkp) {
  validate(mkp);
  if (mkp.cons.variant != Variant::MKPpm)
    throw gkp_error("mkp_to_kppm expects an MKP± instance");
  std::vector<int> powers;
  for (int i = 0; i < (int)mkp.expr.atoms.size(); i++)
    if (mkp.expr.atoms[i].is_power) powers.push_back(i);
  if (powers.size() > 20) throw resource_error("too many powers to split");
  std::set<std::string> used;
  for (const auto& v : variables(mkp)) used.insert(v);

  std::vector<KpBranch> out;
  int n = (int)mkp.expr.atoms.size();
  for (unsigned long mask = 0; mask < (1ul << powers.size()); mask++) {
    std::set<int> zeroed;
    for (size_t b = 0; b < powers.size(); b++)
      if (mask & (1ul << b)) zeroed.insert(powers[b]);
    KpBranch br;
    br.inst.expr.grp = mkp.expr.grp;
    br.inst.integer_mode = mkp.integer_mode;
    br.inst.cons.variant = Variant::KPpm;
    std::set<std::string> names = used;
    std::vector<int> start(n + 1), end(n + 1);
    end[0] = 0;
    for (int i = 0; i < n; i++) {
      const Atom& a = mkp.expr.atoms[i];
      start[i + 1] = (int)br.inst.expr.atoms.size() + 1;
      if (a.is_power && zeroed.count(i)) {
        br.inst.expr.atoms.push_back(const_atom(identity(mkp.expr.grp)));
        br.back.m[a.var] = {"", Int(0)};
      } else if (a.is_power) {
        std::string y = fresh_name(names, a.var);
        br.inst.expr.atoms.push_back(power_atom(a.g, y));
        br.inst.expr.atoms.push_back(const_atom(a.g));
        br.back.m[a.var] = {y, Int(1)};
      } else {
        br.inst.expr.atoms.push_back(const_atom(identity(mkp.expr.grp)));
        br.inst.expr.atoms.push_back(const_atom(a.g));
      }
      end[i + 1] = (int)br.inst.expr.atoms.size();
    }
    for (auto [i, j] : mkp.cons.loops)
      br.inst.cons.loops.emplace_back(end[i], end[j]);
    std::set<std::pair<int, int>> dd;
    for (auto [i, j] : mkp.cons.disj) {
      if (zeroed.count(i - 1) || zeroed.count(j - 1)) continue;
      int a = start[i], b = start[j];
      dd.emplace(std::min(a, b), std::max(a, b));
    }
    br.inst.cons.disj.assign(dd.begin(), dd.end());
    out.push_back(std::move(br));
  }
  return out;
}

KpInstance kppm_to_mkp(const KpInstance& kppm) {
  validate(kppm);
  if (kppm.cons.variant != Variant::KPpm)
    throw gkp_error("kppm_to_mkp expects a KP± instance");
  KpInstance out;
  out.expr.grp = kppm.expr.grp;
  out.integer_mode = kppm.integer_mode;
  out.cons.variant = Variant::MKPpm;
  for (const Atom& a : kppm.expr.atoms) {
    out.expr.atoms.push_back(a);
    out.expr.atoms.push_back(const_atom(identity(kppm.expr.grp)));
  }
  for (auto [i, j] : kppm.cons.loops)
    out.cons.loops.emplace_back(2 * i, 2 * j);
  std::set<std::pair<int, int>> dd;
  for (auto [i, j] : kppm.cons.disj)
    for (int a : {2 * i - 1, 2 * i})
      for (int b : {2 * j - 1, 2 * j})
        dd.emplace(std::min(a, b), std::max(a, b));
  out.cons.disj.assign(dd.begin(), dd.end());
  return out;
}

// ---------- normalization ----------

namespace {

// ranges of new atom indices per original atom after replacing atom k
// (1-based) by a block of size b
struct Reindex {
  int k, b;
  int pos(int i) const { return i < k ? i : i + b - 1; }  // prefix indices
  std::pair<int, int> range(int i) const {
    if (i < k) return {i, i};
    if (i == k) return {k, k + b - 1};
    return {i + b - 1, i + b - 1};
  }
};

void remap_constraints(const ConstraintSet& in, const Reindex& rx,
                       ConstraintSet& out) {
  for (auto [i, j] : in.loops) out.loops.emplace_back(rx.pos(i), rx.pos(j));
  std::set<std::pair<int, int>> dd;
  for (auto [i, j] : in.disj) {
    auto [alo, ahi] = rx.range(i);
    auto [blo, bhi] = rx.range(j);
    for (int a = alo; a <= ahi; a++)
      for (int b = blo; b <= bhi; b++) dd.emplace(std::min(a, b), std::max(a, b));
  }
  out.disj.assign(dd.begin(), dd.end());
}

// fix the power at atom k (1-based) to the constant value c >= 0
KpBranch fix_power(const KpBranch& br, int k, long c) {
  const KpInstance& in = br.inst;
  const Atom& atom = in.expr.atoms[k - 1];
  KpBranch out;
  out.inst.expr.grp = in.expr.grp;
  out.inst.integer_mode = in.integer_mode;
  out.inst.cons.variant = in.cons.variant;
  for (int i = 0; i < k - 1; i++) out.inst.expr.atoms.push_back(in.expr.atoms[i]);
  if (c == 0) {
    out.inst.expr.atoms.push_back(const_atom(identity(in.expr.grp)));
  } else {
    for (long j = 0; j < c; j++) out.inst.expr.atoms.push_back(const_atom(atom.g));
  }
  for (int i = k; i < (int)in.expr.atoms.size(); i++)
    out.inst.expr.atoms.push_back(in.expr.atoms[i]);
  Reindex rx{k, (int)std::max(c, 1L)};
  remap_constraints(in.cons, rx, out.inst.cons);
  out.back = br.back;
  for (auto& [x, st] : out.back.m)
    if (st.first == atom.var) st = {"", st.second + c};
  return out;
}

}  // namespace

std::vector<KpBranch> normalize_kppm(const KpInstance& inst,
                                     long commensurable_bound) {
  validate(inst);
  if (inst.cons.variant != Variant::KPpm)
    throw gkp_error("normalize_kppm expects a KP± instance");
  for (auto [i, j] : inst.cons.disj)
    if (i == j) return {};  // a sub-walk can never be disjoint from itself

  std::set<std::string> names;
  for (const auto& v : variables(inst)) names.insert(v);

  std::vector<KpBranch> work{{inst, identity_back(variables(inst))}};
  std::vector<KpBranch> done;
  const size_t cap = 20000;
  while (!work.empty()) {
    if (work.size() + done.size() > cap)
      throw resource_error("normalization branch explosion");
    KpBranch br = std::move(work.back());
    work.pop_back();
    const auto& atoms = br.inst.expr.atoms;

    // torsion elimination: first power with a finite-order base
    int tors = -1;
    std::optional<Int> q;
    for (int i = 0; i < (int)atoms.size(); i++)
      if (atoms[i].is_power) {
        q = order(atoms[i].g);
        if (q) {
          tors = i + 1;
          break;
        }
      }
    if (tors > 0) {
      long qq = to_long(*q);
      if (qq > 256) throw resource_error("torsion order too large");
      for (long c = 0; c < 2 * qq; c++) work.push_back(fix_power(br, tors, c));
      continue;
    }

    // orthogonalization: first D pair of powers with commensurable bases
    bool rewritten = false;
    for (auto [l, r] : br.inst.cons.disj) {
      if (l == r) continue;
      const Atom& al = atoms[l - 1];
      const Atom& ar = atoms[r - 1];
      if (!al.is_power || !ar.is_power) continue;
      Commensurable cm = commensurable(al.g, ar.g, commensurable_bound);
      if (cm.result == Commensurable::Unknown)
        throw resource_error(
            "commensurability inconclusive; raise the search bound");
      if (cm.result == Commensurable::None) continue;
      long s = to_long(cm.s), t = to_long(cm.t);
      if (s > 512 || std::abs(t) > 512)
        throw resource_error("orthogonalization block too large");
      long ta = std::abs(t);

      // branches with small exponents
      for (long c = 0; c < s; c++) work.push_back(fix_power(br, l, c));
      for (long c = 0; c < ta; c++) work.push_back(fix_power(br, r, c));

      // main branch: peel s steps off atom l and |t| steps off atom r
      KpBranch mb;
      mb.inst.expr.grp = br.inst.expr.grp;
      mb.inst.integer_mode = br.inst.integer_mode;
      mb.inst.cons.variant = br.inst.cons.variant;
      std::string yl = fresh_name(names, al.var);
      std::string yr = fresh_name(names, ar.var);
      for (int i = 0; i < (int)atoms.size(); i++) {
        if (i + 1 == l) {
          for (long j = 0; j < s; j++) mb.inst.expr.atoms.push_back(const_atom(al.g));
          mb.inst.expr.atoms.push_back(power_atom(al.g, yl));
        } else if (i + 1 == r) {
          if (t > 0) {
            for (long j = 0; j < t; j++)
              mb.inst.expr.atoms.push_back(const_atom(ar.g));
            mb.inst.expr.atoms.push_back(power_atom(ar.g, yr));
          } else {
            mb.inst.expr.atoms.push_back(power_atom(ar.g, yr));
            for (long j = 0; j < ta; j++)
              mb.inst.expr.atoms.push_back(const_atom(ar.g));
          }
        } else {
          mb.inst.expr.atoms.push_back(atoms[i]);
        }
      }
      auto posmap = [&](int i) {
        if (i < l) return i;
        if (i < r) return i + (int)s;
        return i + (int)(s + ta);
      };
      auto rangemap = [&](int i) -> std::pair<int, int> {
        if (i == l) return {l, l + (int)s};
        if (i == r) return {r + (int)s, r + (int)(s + ta)};
        int p = posmap(i);
        return {p, p};
      };
      for (auto [i, j] : br.inst.cons.loops)
        mb.inst.cons.loops.emplace_back(posmap(i), posmap(j));
      int pw_l = l + (int)s;
      int pw_r = t > 0 ? r + (int)(s + ta) : r + (int)s;
      std::set<std::pair<int, int>> dd;
      for (auto [i, j] : br.inst.cons.disj) {
        auto [alo, ahi] = rangemap(i);
        auto [blo, bhi] = rangemap(j);
        for (int a = alo; a <= ahi; a++)
          for (int b = blo; b <= bhi; b++) {
            std::pair<int, int> p{std::min(a, b), std::max(a, b)};
            if (i == l && j == r && p == std::make_pair(std::min(pw_l, pw_r),
                                                        std::max(pw_l, pw_r)))
              continue;  // the peeled power walks are disjoint by the lemma
            dd.insert(p);
          }
      }
      mb.inst.cons.disj.assign(dd.begin(), dd.end());
      mb.back = br.back;
      for (auto& [x, st] : mb.back.m) {
        if (st.first == al.var) st = {yl, st.second + s};
        else if (st.first == ar.var) st = {yr, st.second + ta};
      }
      work.push_back(std::move(mb));
      rewritten = true;
      break;
    }
    if (!rewritten) done.push_back(std::move(br));
  }
  return done;
}

}  // namespace gkp
