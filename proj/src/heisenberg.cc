#include "heisenberg.hh"

#include <algorithm>
#include <sstream>

namespace gkp {

namespace {

Element gen_a() { return h3_make(1, 0, 0); }
Element gen_b() { return h3_make(0, 1, 0); }
Element gen_c() { return h3_make(0, 0, 1); }

bool central(const Element& g) {
  auto [a, b] = h3_projections(g);
  return a == 0 && b == 0;
}

// accumulates one gadget; head(var) anchors the previous prefix to 1 so the
// next atom is read off the walk directly
struct Builder {
  std::vector<Atom> atoms;
  std::vector<std::pair<int, int>> loops;
  std::map<std::string, int> heads;
  std::map<std::string, std::string> copies;
  std::set<std::string> used;
  int fc = 0;

  explicit Builder(std::initializer_list<std::string> names) {
    for (const auto& n : names) {
      if (n.empty()) throw gkp_error("relation variables need names");
      if (!used.insert(n).second)
        throw gkp_error("relation variables must be distinct: " + n);
    }
  }
  std::string fresh(const std::string& target) {
    std::string n;
    do n = "f" + std::to_string(++fc);
    while (used.count(n));
    used.insert(n);
    copies[n] = target;
    return n;
  }
  void head(const std::string& var, const Element& g) {
    loops.emplace_back(0, (int)atoms.size());
    atoms.push_back(power_atom(g, var));
    heads[var] = (int)atoms.size();
  }
  void copy(const Element& g, const std::string& target) {
    atoms.push_back(power_atom(g, fresh(target)));
  }
  HeadGadget finish() {
    HeadGadget g;
    g.inst.expr = {h3_group(), std::move(atoms)};
    g.inst.cons.loops = std::move(loops);
    g.inst.integer_mode = true;
    g.heads = std::move(heads);
    g.copies = std::move(copies);
    validate(g.inst);
    return g;
  }
};

}  // namespace

HeadGadget head_const(const std::string& x, const Int& a) {
  Builder b{x};
  b.head(x, gen_a());
  b.atoms.push_back(const_atom(pow(gen_a(), -a)));
  return b.finish();
}

HeadGadget head_equal(const std::string& x, const std::string& y) {
  Builder b{x, y};
  Element A = gen_a();
  b.head(x, A);
  b.copy(inv(A), x);
  b.head(y, A);
  b.copy(inv(A), y);
  b.loops.emplace_back(1, 3);  // A^x = A^x A^-f1 A^y forces x = y
  return b.finish();
}

HeadGadget head_plus(const std::string& x, const std::string& y,
                     const std::string& z) {
  Builder b{x, y, z};
  Element B = gen_b(), C = gen_c();
  b.head(x, C);             // 1
  b.copy(mul(B, C), y);     // 2
  b.copy(inv(C), z);        // 3
  b.copy(inv(B), y);        // 4
  b.head(y, B);             // 5
  b.copy(C, z);             // 6
  b.copy(inv(B), y);        // 7
  b.copy(inv(C), z);        // 8
  b.head(z, C);             // 9
  b.copy(inv(C), z);        // 10
  // prefix 2 = C^x (BC)^f1 returns at 6 as B^y C^f4, and prefix 7 must meet
  // C^z: both force f-values to y, z and leave x + y = z
  b.loops.emplace_back(2, 6);
  b.loops.emplace_back(3, 5);
  b.loops.emplace_back(7, 9);
  return b.finish();
}

HeadGadget head_times(const std::string& x, const std::string& y,
                      const std::string& z) {
  Builder b{x, y, z};
  Element A = gen_a(), B = gen_b(), C = gen_c();
  b.head(x, A);         // 1
  b.copy(B, y);         // 2: walking B^f1 past A^x deposits C^{x f1}
  b.copy(inv(A), x);    // 3
  b.copy(inv(B), y);    // 4
  b.copy(inv(C), z);    // 5
  b.head(y, B);         // 6
  b.copy(C, z);         // 7
  b.copy(inv(C), z);    // 8
  b.copy(inv(B), y);    // 9
  b.head(z, C);         // 10
  b.copy(B, y);         // 11
  b.copy(inv(B), y);    // 12
  b.copy(inv(C), z);    // 13
  // prefix 3 = A^{x-f2} B^f1 C^{x f1} meets B^y C^f5 at 7, and prefix 7
  // meets C^z B^f8 at 11: together they force z = x y
  b.loops.emplace_back(3, 7);
  b.loops.emplace_back(7, 11);
  return b.finish();
}

std::vector<Valuation> head_relation(const HeadGadget& g, const Int& bound) {
  std::vector<std::string> keep;
  for (const auto& [v, pos] : g.heads) keep.push_back(v);
  return guided_solutions(g.inst, keep, bound);
}

namespace {

Atom rename_atom(const Atom& a,
                 const std::map<std::string, std::string>& ren) {
  if (!a.is_power) return a;
  auto it = ren.find(a.var);
  return it == ren.end() ? a : power_atom(a.g, it->second);
}

}  // namespace

HeadGadget conjoin(const HeadGadget& g1, const HeadGadget& g2) {
  HeadGadget out;
  out.inst.expr.grp = h3_group();
  out.inst.integer_mode = true;

  // alpha-rename every copy variable into one fresh namespace so the only
  // names shared between the parts are heads shared on both sides
  std::set<std::string> taken;
  for (const auto& [v, p] : g1.heads) taken.insert(v);
  for (const auto& [v, p] : g2.heads) taken.insert(v);
  auto fresh = [&](const std::string& stem) {
    std::string n;
    int k = 0;
    do n = stem + std::to_string(++k);
    while (taken.count(n));
    taken.insert(n);
    return n;
  };
  std::map<std::string, std::string> ren1, ren2;
  for (const auto& [f, tgt] : g1.copies) {
    ren1[f] = fresh("f");
    out.copies[ren1[f]] = tgt;
  }
  for (const auto& [f, tgt] : g2.copies) {
    ren2[f] = fresh("f");
    out.copies[ren2[f]] = tgt;
  }

  std::vector<std::string> shared;
  for (const auto& [v, p] : g2.heads)
    if (g1.heads.count(v)) {
      shared.push_back(v);
      ren2[v] = fresh(v + "_t");  // tied twin, equated below
      out.copies[ren2[v]] = v;
    }

  auto& atoms = out.inst.expr.atoms;
  auto& loops = out.inst.cons.loops;
  for (const Atom& a : g1.inst.expr.atoms) atoms.push_back(rename_atom(a, ren1));
  int n1 = (int)atoms.size();
  loops = g1.inst.cons.loops;
  // each part multiplies to 1 on its own
  loops.emplace_back(0, n1);
  for (const Atom& a : g2.inst.expr.atoms) atoms.push_back(rename_atom(a, ren2));
  for (auto [i, j] : g2.inst.cons.loops) {
    loops.emplace_back(i + n1, j + n1);
    // a loop from the start of the second part pins its prefix to 1 outright
    if (i == 0) loops.emplace_back(0, j + n1);
  }
  out.heads = g1.heads;
  for (const auto& [v, p] : g2.heads)
    if (!g1.heads.count(v)) out.heads[v] = p + n1;

  // synchronization block per shared head: inside a rank-2 free abelian
  // subgroup, chained loops force one fresh exponent chain to carry the same
  // value from the first occurrence to the second
  for (const std::string& v : shared) {
    int i1 = g1.heads.at(v);
    int i2 = n1 + g2.heads.at(v);
    Element g = atoms[i1 - 1].g;
    Element h = atoms[i2 - 1].g;
    if (is_identity(g) || is_identity(h))
      throw gkp_error("trivial head base cannot be synchronized: " + v);
    int m = (int)atoms.size();
    auto cp = [&](const Element& base) {
      atoms.push_back(power_atom(base, fresh("f")));
      out.copies[atoms.back().var] = v;
    };
    loops.emplace_back(0, m);  // closes everything before the block
    int yh;
    if (central(g) != central(h)) {
      // g and h already generate a rank-2 subgroup
      cp(g);                   // m+1: g^xh
      cp(mul(inv(g), h));      // m+2
      cp(inv(h));              // m+3
      cp(h);                   // m+4: h^yh
      cp(inv(h));              // m+5
      loops.emplace_back(m + 2, m + 4);
      loops.emplace_back(0, m + 3);
      yh = m + 4;
    } else {
      // route through a middle generator independent from both
      Element mid = central(g) ? gen_a() : gen_c();
      cp(g);                   // m+1: g^xh
      cp(mul(inv(g), mid));    // m+2
      cp(inv(mid));            // m+3
      cp(mid);                 // m+4
      cp(mul(h, inv(mid)));    // m+5
      cp(inv(h));              // m+6
      cp(h);                   // m+7: h^yh
      cp(inv(h));              // m+8
      loops.emplace_back(m + 2, m + 4);
      loops.emplace_back(0, m + 3);
      loops.emplace_back(m + 5, m + 7);
      loops.emplace_back(0, m + 6);
      yh = m + 7;
    }
    loops.emplace_back(i1, m + 1);  // g^xh equals the first occurrence
    loops.emplace_back(i2, yh);     // h^yh equals the second
  }

  std::sort(loops.begin(), loops.end());
  loops.erase(std::unique(loops.begin(), loops.end()), loops.end());
  validate(out.inst);
  return out;
}

// ---------- diophantine systems ----------

DiophantineSystem parse_diophantine(const std::string& text) {
  DiophantineSystem sys;
  std::istringstream in(text);
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ln++;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    auto fail = [&](const std::string& what) {
      throw gkp_error("line " + std::to_string(ln) + ": " + what);
    };
    DiophEq eq;
    if (tok[0] == "let") {
      if (tok.size() != 4 || tok[2] != "=") fail("expected: let x = N");
      eq.kind = DiophEq::Const;
      eq.x = tok[1];
      try {
        eq.a = Int(tok[3]);
      } catch (const std::exception&) {
        fail("bad integer: " + tok[3]);
      }
    } else if (tok[0] == "eq") {
      if (tok.size() != 3) fail("expected: eq x y");
      eq.kind = DiophEq::Equal;
      eq.x = tok[1];
      eq.y = tok[2];
    } else if (tok[0] == "add" || tok[0] == "mul") {
      if (tok.size() != 4) fail("expected: " + tok[0] + " x y z");
      eq.kind = tok[0] == "add" ? DiophEq::Plus : DiophEq::Times;
      eq.x = tok[1];
      eq.y = tok[2];
      eq.z = tok[3];
    } else {
      fail("unknown directive: " + tok[0]);
    }
    sys.eqs.push_back(std::move(eq));
  }
  return sys;
}

namespace {

std::vector<std::string> system_vars(const DiophantineSystem& sys) {
  std::vector<std::string> vars;
  auto add = [&](const std::string& v) {
    if (!v.empty() &&
        std::find(vars.begin(), vars.end(), v) == vars.end())
      vars.push_back(v);
  };
  for (const DiophEq& e : sys.eqs) {
    add(e.x);
    add(e.y);
    add(e.z);
  }
  return vars;
}

}  // namespace

DiophReduction diophantine_to_ikp(const DiophantineSystem& system) {
  DiophReduction red;
  red.system = system;
  std::set<std::string> used;
  for (const auto& v : system_vars(system)) {
    if (v.empty()) continue;
    used.insert(v);
  }
  int ac = 0;
  auto mk_alias = [&](const std::string& orig) {
    std::string n;
    do n = orig + "_a" + std::to_string(++ac);
    while (used.count(n));
    used.insert(n);
    red.alias[n] = orig;
    return n;
  };

  std::vector<HeadGadget> parts;
  for (const DiophEq& e : system.eqs) {
    std::vector<std::string> names;
    switch (e.kind) {
      case DiophEq::Const: names = {e.x}; break;
      case DiophEq::Equal: names = {e.x, e.y}; break;
      case DiophEq::Plus:
      case DiophEq::Times: names = {e.x, e.y, e.z}; break;
    }
    for (const auto& n : names)
      if (n.empty()) throw gkp_error("equation variable missing a name");
    // gadget variables must be distinct: repeats become aliases tied back
    std::vector<std::pair<std::string, std::string>> ties;
    for (size_t i = 1; i < names.size(); i++)
      if (std::find(names.begin(), names.begin() + i, names[i]) !=
          names.begin() + i) {
        std::string a = mk_alias(names[i]);
        ties.emplace_back(a, names[i]);
        names[i] = a;
      }
    switch (e.kind) {
      case DiophEq::Const: parts.push_back(head_const(names[0], e.a)); break;
      case DiophEq::Equal:
        parts.push_back(head_equal(names[0], names[1]));
        break;
      case DiophEq::Plus:
        parts.push_back(head_plus(names[0], names[1], names[2]));
        break;
      case DiophEq::Times:
        parts.push_back(head_times(names[0], names[1], names[2]));
        break;
    }
    for (const auto& [a, orig] : ties) parts.push_back(head_equal(a, orig));
  }

  if (parts.empty()) {
    red.gadget.inst.expr.grp = h3_group();
    red.gadget.inst.integer_mode = true;
    return red;
  }
  red.gadget = parts[0];
  for (size_t i = 1; i < parts.size(); i++)
    red.gadget = conjoin(red.gadget, parts[i]);
  return red;
}

Valuation dioph_witness_forward(const DiophReduction& red,
                                const Valuation& sys) {
  auto val = [&](const std::string& name) -> Int {
    if (auto it = sys.find(name); it != sys.end()) return it->second;
    if (auto it = red.alias.find(name); it != red.alias.end())
      return sys.at(it->second);
    throw gkp_error("system witness missing variable " + name);
  };
  Valuation nu;
  for (const auto& [v, pos] : red.gadget.heads) nu[v] = val(v);
  for (const auto& [f, tgt] : red.gadget.copies) nu[f] = val(tgt);
  return nu;
}

Valuation dioph_witness_back(const DiophReduction& red, const Valuation& nu) {
  Valuation sys;
  for (const auto& v : system_vars(red.system)) {
    auto it = nu.find(v);
    if (it == nu.end())
      throw gkp_error("gadget witness missing variable " + v);
    sys[v] = it->second;
  }
  return sys;
}

// ---------- integer to natural exponents ----------

IntegerSplit integer_to_standard_ikp(const KpInstance& inst) {
  validate(inst);
  if (!inst.integer_mode)
    throw gkp_error("expected an integer-mode instance");
  if (!inst.cons.disj.empty() || inst.cons.variant != Variant::KPpm)
    throw gkp_error("exponent splitting handles loop constraints only");
  IntegerSplit out;
  out.inst.expr.grp = inst.expr.grp;
  out.inst.integer_mode = false;
  std::set<std::string> used;
  for (const auto& v : variables(inst)) used.insert(v);
  std::map<std::string, std::string> neg;
  auto neg_name = [&](const std::string& x) {
    auto it = neg.find(x);
    if (it != neg.end()) return it->second;
    std::string n = x + "_m";
    for (int k = 2; used.count(n); k++) n = x + "_m" + std::to_string(k);
    used.insert(n);
    neg[x] = n;
    out.pairs.emplace_back(x, n);
    return n;
  };
  std::vector<int> end(inst.expr.atoms.size() + 1, 0);
  for (size_t i = 0; i < inst.expr.atoms.size(); i++) {
    const Atom& a = inst.expr.atoms[i];
    out.inst.expr.atoms.push_back(a);
    if (a.is_power)
      out.inst.expr.atoms.push_back(power_atom(inv(a.g), neg_name(a.var)));
    end[i + 1] = (int)out.inst.expr.atoms.size();
  }
  for (auto [i, j] : inst.cons.loops)
    out.inst.cons.loops.emplace_back(end[i], end[j]);
  validate(out.inst);
  return out;
}

Valuation split_witness_forward(const IntegerSplit& split, const Valuation& nu) {
  Valuation out;
  for (const auto& [x, xm] : split.pairs) {
    auto it = nu.find(x);
    if (it == nu.end()) throw gkp_error("witness missing variable " + x);
    out[x] = it->second >= 0 ? it->second : Int(0);
    out[xm] = it->second >= 0 ? Int(0) : Int(-it->second);
  }
  return out;
}

Valuation split_witness_back(const IntegerSplit& split, const Valuation& nu) {
  Valuation out;
  for (const auto& [x, xm] : split.pairs) {
    auto px = nu.find(x);
    auto pm = nu.find(xm);
    if (px == nu.end() || pm == nu.end())
      throw gkp_error("witness missing variable " + x);
    out[x] = px->second - pm->second;
  }
  return out;
}

// ---------- coset intersection patterns ----------

namespace {

// head * product of stars with exponents in [0, bound], in the given order
struct Ray {
  Element head;
  std::vector<Element> stars;
};

std::set<std::string> ray_keys(const Ray& r, const Int& bound) {
  std::set<std::string> keys;
  std::function<void(size_t, const Element&)> go = [&](size_t i,
                                                       const Element& acc) {
    if (i == r.stars.size()) {
      keys.insert(elem_key(acc));
      return;
    }
    Element cur = acc;
    for (Int e = 0; e <= bound; e += 1) {
      go(i + 1, cur);
      if (e < bound) cur = mul(cur, r.stars[i]);
    }
  };
  go(0, r.head);
  return keys;
}

}  // namespace

bool satplus_intersection_check(SatPattern pattern,
                                const std::map<std::string, Int>& exponents,
                                const Int& bound) {
  if (bound < 0) throw gkp_error("intersection check needs bound >= 0");
  auto need = [&](const char* k) {
    auto it = exponents.find(k);
    if (it == exponents.end())
      throw gkp_error(std::string("missing exponent ") + k);
    return it->second;
  };
  Element A = gen_a(), B = gen_b(), C = gen_c();
  std::vector<Ray> rays;
  switch (pattern) {
    case SatPattern::PlusFirst:
      rays = {{pow(C, need("x")), {B}},
              {pow(B, need("xp")), {C}},
              {identity(h3_group()), {mul(B, C)}}};
      break;
    case SatPattern::PlusSecond:
      rays = {{pow(B, need("xp")), {C}},
              {pow(C, need("z")), {B}},
              {pow(C, need("y")), {mul(B, C)}}};
      break;
    case SatPattern::TimesFirst:
      rays = {{pow(C, need("x")), {A}},
              {pow(A, need("xp")), {C}},
              {identity(h3_group()), {mul(A, C)}}};
      break;
    case SatPattern::TimesSecond:
      rays = {{pow(C, need("y")), {B}},
              {pow(B, need("yp")), {C}},
              {identity(h3_group()), {mul(B, C)}}};
      break;
    case SatPattern::TimesThird:
      rays = {{pow(A, need("xp")), {B, inv(A)}},
              {pow(B, need("yp")), {C}},
              {pow(C, need("z")), {B}}};
      break;
  }
  std::set<std::string> acc = ray_keys(rays[0], bound);
  for (size_t i = 1; i < rays.size() && !acc.empty(); i++) {
    std::set<std::string> next = ray_keys(rays[i], bound);
    std::set<std::string> inter;
    std::set_intersection(acc.begin(), acc.end(), next.begin(), next.end(),
                          std::inserter(inter, inter.begin()));
    acc = std::move(inter);
  }
  return !acc.empty();
}

}  // namespace gkp
