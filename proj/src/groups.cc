#include "groups.hh"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <sstream>

namespace gkp {

long to_long(const Int& v) {
  if (!v.fits_slong_p()) throw resource_error("integer exceeds machine range");
  return v.get_si();
}

Int lcm(const Int& a, const Int& b) {
  Int r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

static Int gcd(const Int& a, const Int& b) {
  Int r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

static Int qpow(const Int& q, long e) {
  if (e < 0) throw gkp_error("negative q exponent in integer context");
  Int r;
  mpz_pow_ui(r.get_mpz_t(), q.get_mpz_t(), (unsigned long)e);
  return r;
}

// ---------- group specs ----------

static GroupRef make_spec(GroupSpec s) {
  return std::make_shared<const GroupSpec>(std::move(s));
}

GroupRef zn_group(int rank) {
  if (rank < 1) throw gkp_error("Z^n needs rank >= 1");
  GroupSpec s;
  s.kind = GroupSpec::Zn;
  s.rank = rank;
  return make_spec(std::move(s));
}
GroupRef cyclic_group(const Int& mod) {
  if (mod < 1) throw gkp_error("Z/k needs k >= 1");
  GroupSpec s;
  s.kind = GroupSpec::Cyclic;
  s.mod = mod;
  return make_spec(std::move(s));
}
GroupRef sym_group(int degree) {
  if (degree < 1) throw gkp_error("S_d needs d >= 1");
  GroupSpec s;
  s.kind = GroupSpec::Sym;
  s.degree = degree;
  return make_spec(std::move(s));
}
GroupRef product_group(GroupRef a, GroupRef b) {
  GroupSpec s;
  s.kind = GroupSpec::Product;
  s.left = std::move(a);
  s.right = std::move(b);
  return make_spec(std::move(s));
}
GroupRef h3_group() {
  GroupSpec s;
  s.kind = GroupSpec::H3;
  return make_spec(std::move(s));
}
GroupRef bs_group(const Int& q) {
  if (q < 2) throw gkp_error("BS(1,q) needs q >= 2");
  GroupSpec s;
  s.kind = GroupSpec::BS;
  s.q = q;
  return make_spec(std::move(s));
}
GroupRef wreath_group(GroupRef g, GroupRef h) {
  GroupSpec s;
  s.kind = GroupSpec::Wreath;
  s.left = std::move(g);
  s.right = std::move(h);
  return make_spec(std::move(s));
}

bool spec_eq(const GroupRef& a, const GroupRef& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case GroupSpec::Zn: return a->rank == b->rank;
    case GroupSpec::Cyclic: return a->mod == b->mod;
    case GroupSpec::Sym: return a->degree == b->degree;
    case GroupSpec::H3: return true;
    case GroupSpec::BS: return a->q == b->q;
    case GroupSpec::Product:
    case GroupSpec::Wreath:
      return spec_eq(a->left, b->left) && spec_eq(a->right, b->right);
  }
  return false;
}

std::string spec_to_string(const GroupRef& s) {
  switch (s->kind) {
    case GroupSpec::Zn:
      return s->rank == 1 ? "Z" : "Z^" + std::to_string(s->rank);
    case GroupSpec::Cyclic: return "Z/" + s->mod.get_str();
    case GroupSpec::Sym: return "S_" + std::to_string(s->degree);
    case GroupSpec::H3: return "H3";
    case GroupSpec::BS: return "BS(1," + s->q.get_str() + ")";
    case GroupSpec::Product:
      return "(" + spec_to_string(s->left) + " x " + spec_to_string(s->right) +
             ")";
    case GroupSpec::Wreath:
      return "(" + spec_to_string(s->left) + " wr " + spec_to_string(s->right) +
             ")";
  }
  return "?";
}

// ---------- text cursor ----------

namespace {

struct Cur {
  const std::string& s;
  size_t i = 0;

  void ws() {
    while (i < s.size() && std::isspace((unsigned char)s[i])) i++;
  }
  bool done() {
    ws();
    return i >= s.size();
  }
  char peek() {
    ws();
    return i < s.size() ? s[i] : '\0';
  }
  bool try_eat(char c) {
    ws();
    if (i < s.size() && s[i] == c) {
      i++;
      return true;
    }
    return false;
  }
  void eat(char c) {
    if (!try_eat(c))
      throw parse_error("expected '" + std::string(1, c) + "' at offset " +
                        std::to_string(i) + " in: " + s);
  }
  bool try_word(const std::string& w) {
    ws();
    if (s.compare(i, w.size(), w) == 0) {
      i += w.size();
      return true;
    }
    return false;
  }
  Int integer() {
    ws();
    size_t j = i;
    if (j < s.size() && (s[j] == '-' || s[j] == '+')) j++;
    size_t d = j;
    while (j < s.size() && std::isdigit((unsigned char)s[j])) j++;
    if (j == d) throw parse_error("expected integer at offset " +
                                  std::to_string(i) + " in: " + s);
    Int r(s.substr(i, j - i));
    i = j;
    return r;
  }
  long small_int() { return to_long(integer()); }
};

}  // namespace

GroupRef parse_group(const std::string& text) {
  Cur c{text};
  // primary (op primary)* with op in {x, wr}, left associative
  auto primary = [&](auto&& self) -> GroupRef {
    if (c.try_eat('(')) {
      GroupRef inner = self(self);
      while (true) {
        if (c.try_word("wr")) {
          inner = wreath_group(inner, self(self));
        } else if (c.try_eat('x')) {
          inner = product_group(inner, self(self));
        } else {
          break;
        }
      }
      c.eat(')');
      return inner;
    }
    if (c.try_word("BS")) {
      c.eat('(');
      Int one = c.integer();
      if (one != 1) throw parse_error("only BS(1,q) is supported");
      c.eat(',');
      Int q = c.integer();
      c.eat(')');
      return bs_group(q);
    }
    if (c.try_word("H3")) return h3_group();
    if (c.try_word("S_") || c.try_word("S")) return sym_group(c.small_int());
    if (c.try_word("Z")) {
      if (c.try_eat('/')) return cyclic_group(c.integer());
      if (c.try_eat('^')) return zn_group((int)c.small_int());
      if (c.try_eat('_')) return cyclic_group(c.integer());
      return zn_group(1);
    }
    throw parse_error("cannot parse group: " + text);
  };
  GroupRef g = primary(primary);
  while (true) {
    if (c.try_word("wr")) {
      g = wreath_group(g, primary(primary));
    } else if (c.try_eat('x')) {
      g = product_group(g, primary(primary));
    } else {
      break;
    }
  }
  if (!c.done()) throw parse_error("trailing input in group: " + text);
  return g;
}

// ---------- Z[1/q] ----------

QDyadic qd_make(Int m, long e, const Int& q) {
  if (m == 0) return {Int(0), 0};
  while (mpz_divisible_p(m.get_mpz_t(), q.get_mpz_t())) {
    m /= q;
    e++;
  }
  return {std::move(m), e};
}
QDyadic qd_from_int(const Int& v, const Int& q) { return qd_make(v, 0, q); }
QDyadic qd_add(const QDyadic& a, const QDyadic& b, const Int& q) {
  if (a.m == 0) return b;
  if (b.m == 0) return a;
  long e = std::min(a.e, b.e);
  Int m = a.m * qpow(q, a.e - e) + b.m * qpow(q, b.e - e);
  return qd_make(std::move(m), e, q);
}
QDyadic qd_neg(const QDyadic& a) { return {-a.m, a.e}; }
QDyadic qd_sub(const QDyadic& a, const QDyadic& b, const Int& q) {
  return qd_add(a, qd_neg(b), q);
}
QDyadic qd_mul(const QDyadic& a, const QDyadic& b, const Int& q) {
  return qd_make(a.m * b.m, a.e + b.e, q);
}
QDyadic qd_mul_qpow(const QDyadic& a, long k, const Int& q) {
  (void)q;
  if (a.m == 0) return a;
  return {a.m, a.e + k};
}
bool qd_is_int(const QDyadic& a) { return a.e >= 0 || a.m == 0; }
std::optional<Int> qd_div_int(const QDyadic& a, const QDyadic& b,
                              const Int& q) {
  if (b.m == 0) return std::nullopt;
  if (a.m == 0) return Int(0);
  long d = a.e - b.e;
  Int num = a.m * (d > 0 ? qpow(q, d) : Int(1));
  Int den = b.m * (d < 0 ? qpow(q, -d) : Int(1));
  if (!mpz_divisible_p(num.get_mpz_t(), den.get_mpz_t())) return std::nullopt;
  return Int(num / den);
}
int qd_sign(const QDyadic& a) { return sgn(a.m); }
std::string qd_to_string(const QDyadic& a) {
  return a.m.get_str() + " q^" + std::to_string(a.e);
}

// ---------- element construction ----------

static void check_grp(const GroupRef& g, GroupSpec::Kind k, const char* what) {
  if (!g || g->kind != k) throw gkp_error(std::string("group mismatch in ") + what);
}

Element zn_make(const GroupRef& g, std::vector<Int> coords) {
  check_grp(g, GroupSpec::Zn, "zn_make");
  if ((int)coords.size() != g->rank) throw gkp_error("Z^n coordinate count");
  return {g, ZnElem{std::move(coords)}};
}
Element cyc_make(const GroupRef& g, const Int& r) {
  check_grp(g, GroupSpec::Cyclic, "cyc_make");
  Int v = r % g->mod;
  if (v < 0) v += g->mod;
  return {g, CycElem{v}};
}
Element perm_make(const GroupRef& g, std::vector<int> img) {
  check_grp(g, GroupSpec::Sym, "perm_make");
  if ((int)img.size() != g->degree) throw gkp_error("permutation size");
  std::vector<bool> seen(img.size(), false);
  for (int v : img) {
    if (v < 0 || v >= (int)img.size() || seen[v])
      throw gkp_error("not a permutation");
    seen[v] = true;
  }
  return {g, PermElem{std::move(img)}};
}
Element prod_make(const GroupRef& g, Element a, Element b) {
  check_grp(g, GroupSpec::Product, "prod_make");
  return {g, ProdElem{std::make_shared<const Element>(std::move(a)),
                      std::make_shared<const Element>(std::move(b))}};
}
Element h3_make(const Int& a, const Int& b, const Int& c) {
  return {h3_group(), H3Elem{a, b, c}};
}
Element bs_make(const GroupRef& bs, const Int& k, const QDyadic& u) {
  check_grp(bs, GroupSpec::BS, "bs_make");
  return {bs, BSElem{k, u}};
}

static Element wreath_from_map(const GroupRef& wg,
                               std::vector<std::pair<Element, Element>> supp,
                               Element cursor) {
  std::vector<std::pair<std::string, size_t>> keys;
  keys.reserve(supp.size());
  for (size_t i = 0; i < supp.size(); i++)
    if (!is_identity(supp[i].second)) keys.emplace_back(elem_key(supp[i].first), i);
  std::sort(keys.begin(), keys.end());
  auto data = std::make_shared<WreathData>();
  data->supp.reserve(keys.size());
  for (size_t j = 0; j < keys.size(); j++) {
    if (j > 0 && keys[j].first == keys[j - 1].first)
      throw gkp_error("duplicate support point in wreath element");
    data->supp.push_back(std::move(supp[keys[j].second]));
  }
  data->cursor = std::move(cursor);
  return {wg, std::shared_ptr<const WreathData>(std::move(data))};
}

Element identity(const GroupRef& g) {
  switch (g->kind) {
    case GroupSpec::Zn: return {g, ZnElem{std::vector<Int>(g->rank, Int(0))}};
    case GroupSpec::Cyclic: return {g, CycElem{Int(0)}};
    case GroupSpec::Sym: {
      std::vector<int> img(g->degree);
      std::iota(img.begin(), img.end(), 0);
      return {g, PermElem{std::move(img)}};
    }
    case GroupSpec::Product:
      return prod_make(g, identity(g->left), identity(g->right));
    case GroupSpec::H3: return {g, H3Elem{Int(0), Int(0), Int(0)}};
    case GroupSpec::BS: return {g, BSElem{Int(0), {Int(0), 0}}};
    case GroupSpec::Wreath:
      return wreath_from_map(g, {}, identity(g->right));
  }
  throw gkp_error("bad group kind");
}

bool is_identity(const Element& g) {
  switch (g.grp->kind) {
    case GroupSpec::Zn: {
      for (const Int& c : std::get<ZnElem>(g.v).c)
        if (c != 0) return false;
      return true;
    }
    case GroupSpec::Cyclic: return std::get<CycElem>(g.v).r == 0;
    case GroupSpec::Sym: {
      const auto& img = std::get<PermElem>(g.v).img;
      for (int i = 0; i < (int)img.size(); i++)
        if (img[i] != i) return false;
      return true;
    }
    case GroupSpec::Product: {
      const auto& p = std::get<ProdElem>(g.v);
      return is_identity(*p.a) && is_identity(*p.b);
    }
    case GroupSpec::H3: {
      const auto& h = std::get<H3Elem>(g.v);
      return h.a == 0 && h.b == 0 && h.c == 0;
    }
    case GroupSpec::BS: {
      const auto& b = std::get<BSElem>(g.v);
      return b.k == 0 && b.u.m == 0;
    }
    case GroupSpec::Wreath: {
      const auto& w = *std::get<std::shared_ptr<const WreathData>>(g.v);
      return w.supp.empty() && is_identity(w.cursor);
    }
  }
  throw gkp_error("bad group kind");
}

bool elem_eq(const Element& a, const Element& b) {
  if (!spec_eq(a.grp, b.grp)) return false;
  switch (a.grp->kind) {
    case GroupSpec::Zn: return std::get<ZnElem>(a.v).c == std::get<ZnElem>(b.v).c;
    case GroupSpec::Cyclic:
      return std::get<CycElem>(a.v).r == std::get<CycElem>(b.v).r;
    case GroupSpec::Sym:
      return std::get<PermElem>(a.v).img == std::get<PermElem>(b.v).img;
    case GroupSpec::Product: {
      const auto& x = std::get<ProdElem>(a.v);
      const auto& y = std::get<ProdElem>(b.v);
      return elem_eq(*x.a, *y.a) && elem_eq(*x.b, *y.b);
    }
    case GroupSpec::H3: {
      const auto& x = std::get<H3Elem>(a.v);
      const auto& y = std::get<H3Elem>(b.v);
      return x.a == y.a && x.b == y.b && x.c == y.c;
    }
    case GroupSpec::BS: {
      const auto& x = std::get<BSElem>(a.v);
      const auto& y = std::get<BSElem>(b.v);
      return x.k == y.k && x.u == y.u;
    }
    case GroupSpec::Wreath: {
      const auto& x = *std::get<std::shared_ptr<const WreathData>>(a.v);
      const auto& y = *std::get<std::shared_ptr<const WreathData>>(b.v);
      if (!elem_eq(x.cursor, y.cursor)) return false;
      if (x.supp.size() != y.supp.size()) return false;
      for (size_t i = 0; i < x.supp.size(); i++)
        if (!elem_eq(x.supp[i].first, y.supp[i].first) ||
            !elem_eq(x.supp[i].second, y.supp[i].second))
          return false;
      return true;
    }
  }
  throw gkp_error("bad group kind");
}

// ---------- multiplication / inverse / powers ----------

static Element bs_pow(const Element& g, const Int& s);

Element mul(const Element& a, const Element& b) {
  if (!spec_eq(a.grp, b.grp)) throw gkp_error("mul across different groups");
  switch (a.grp->kind) {
    case GroupSpec::Zn: {
      const auto& x = std::get<ZnElem>(a.v).c;
      const auto& y = std::get<ZnElem>(b.v).c;
      std::vector<Int> r(x.size());
      for (size_t i = 0; i < x.size(); i++) r[i] = x[i] + y[i];
      return {a.grp, ZnElem{std::move(r)}};
    }
    case GroupSpec::Cyclic:
      return cyc_make(a.grp,
                      std::get<CycElem>(a.v).r + std::get<CycElem>(b.v).r);
    case GroupSpec::Sym: {
      const auto& x = std::get<PermElem>(a.v).img;
      const auto& y = std::get<PermElem>(b.v).img;
      std::vector<int> r(x.size());
      for (size_t i = 0; i < x.size(); i++) r[i] = y[x[i]];
      return {a.grp, PermElem{std::move(r)}};
    }
    case GroupSpec::Product: {
      const auto& x = std::get<ProdElem>(a.v);
      const auto& y = std::get<ProdElem>(b.v);
      return prod_make(a.grp, mul(*x.a, *y.a), mul(*x.b, *y.b));
    }
    case GroupSpec::H3: {
      const auto& x = std::get<H3Elem>(a.v);
      const auto& y = std::get<H3Elem>(b.v);
      return {a.grp, H3Elem{x.a + y.a, x.b + y.b, y.c + x.a * y.b + x.c}};
    }
    case GroupSpec::BS: {
      const auto& x = std::get<BSElem>(a.v);
      const auto& y = std::get<BSElem>(b.v);
      if (!x.k.fits_slong_p()) throw resource_error("BS exponent overflow");
      return {a.grp, BSElem{x.k + y.k,
                            qd_add(x.u, qd_mul_qpow(y.u, to_long(x.k), a.grp->q),
                                   a.grp->q)}};
    }
    case GroupSpec::Wreath: {
      const auto& x = *std::get<std::shared_ptr<const WreathData>>(a.v);
      const auto& y = *std::get<std::shared_ptr<const WreathData>>(b.v);
      std::map<std::string, std::pair<Element, Element>> m;
      for (const auto& [h, v] : x.supp) m.emplace(elem_key(h), std::make_pair(h, v));
      for (const auto& [h, v] : y.supp) {
        Element th = mul(x.cursor, h);
        std::string k = elem_key(th);
        auto it = m.find(k);
        if (it == m.end()) {
          m.emplace(std::move(k), std::make_pair(std::move(th), v));
        } else {
          it->second.second = mul(it->second.second, v);
        }
      }
      std::vector<std::pair<Element, Element>> supp;
      supp.reserve(m.size());
      for (auto& [k, hv] : m) supp.push_back(std::move(hv));
      return wreath_from_map(a.grp, std::move(supp), mul(x.cursor, y.cursor));
    }
  }
  throw gkp_error("bad group kind");
}

Element inv(const Element& a) {
  switch (a.grp->kind) {
    case GroupSpec::Zn: {
      std::vector<Int> r;
      for (const Int& c : std::get<ZnElem>(a.v).c) r.push_back(-c);
      return {a.grp, ZnElem{std::move(r)}};
    }
    case GroupSpec::Cyclic: return cyc_make(a.grp, -std::get<CycElem>(a.v).r);
    case GroupSpec::Sym: {
      const auto& img = std::get<PermElem>(a.v).img;
      std::vector<int> r(img.size());
      for (size_t i = 0; i < img.size(); i++) r[img[i]] = (int)i;
      return {a.grp, PermElem{std::move(r)}};
    }
    case GroupSpec::Product: {
      const auto& p = std::get<ProdElem>(a.v);
      return prod_make(a.grp, inv(*p.a), inv(*p.b));
    }
    case GroupSpec::H3: {
      const auto& h = std::get<H3Elem>(a.v);
      return {a.grp, H3Elem{-h.a, -h.b, -h.c + h.a * h.b}};
    }
    case GroupSpec::BS: {
      const auto& b = std::get<BSElem>(a.v);
      return {a.grp,
              BSElem{-b.k, qd_neg(qd_mul_qpow(b.u, -to_long(b.k), a.grp->q))}};
    }
    case GroupSpec::Wreath: {
      const auto& w = *std::get<std::shared_ptr<const WreathData>>(a.v);
      Element ci = inv(w.cursor);
      std::vector<std::pair<Element, Element>> supp;
      supp.reserve(w.supp.size());
      for (const auto& [h, v] : w.supp)
        supp.emplace_back(mul(ci, h), inv(v));
      return wreath_from_map(a.grp, std::move(supp), std::move(ci));
    }
  }
  throw gkp_error("bad group kind");
}

static Element generic_pow(const Element& a, const Int& e) {
  if (e < 0) return generic_pow(inv(a), -e);
  Element acc = identity(a.grp);
  Element base = a;
  Int n = e;
  while (n > 0) {
    if (mpz_odd_p(n.get_mpz_t())) acc = mul(acc, base);
    n >>= 1;
    if (n > 0) base = mul(base, base);
  }
  return acc;
}

static Element bs_pow(const Element& g, const Int& s) {
  const auto& b = std::get<BSElem>(g.v);
  const Int& q = g.grp->q;
  if (s == 0) return identity(g.grp);
  if (s < 0) return bs_pow(inv(g), -s);
  if (b.k == 0) return {g.grp, BSElem{Int(0), qd_make(b.u.m * s, b.u.e, q)}};
  Int ks = b.k * s;
  if (!ks.fits_slong_p() || std::abs(to_long(ks)) > (1 << 22))
    throw resource_error("BS power too large");
  long k = to_long(b.k);
  // u * (q^{ks} - 1) / (q^k - 1), computed as an exact element of Z[1/q]
  QDyadic sum;  // sum_{i=0}^{s-1} q^{k i}
  if (k > 0) {
    Int num = qpow(q, to_long(ks)) - 1;
    Int den = qpow(q, k) - 1;
    sum = qd_from_int(num / den, q);
  } else {
    long kk = -k;
    Int num = qpow(q, to_long(Int(kk * s))) - 1;
    Int den = qpow(q, kk) - 1;
    sum = qd_mul_qpow(qd_from_int(num / den, q), to_long(Int(k * (s - 1))), q);
  }
  return {g.grp, BSElem{ks, qd_mul(b.u, sum, q)}};
}

Element pow(const Element& a, const Int& e) {
  switch (a.grp->kind) {
    case GroupSpec::Zn: {
      std::vector<Int> r;
      for (const Int& c : std::get<ZnElem>(a.v).c) r.push_back(c * e);
      return {a.grp, ZnElem{std::move(r)}};
    }
    case GroupSpec::Cyclic:
      return cyc_make(a.grp, std::get<CycElem>(a.v).r * e);
    case GroupSpec::H3: {
      const auto& h = std::get<H3Elem>(a.v);
      Int binom = e * (e - 1) / 2;
      return {a.grp, H3Elem{h.a * e, h.b * e, h.c * e + binom * h.a * h.b}};
    }
    case GroupSpec::BS: return bs_pow(a, e);
    case GroupSpec::Product: {
      const auto& p = std::get<ProdElem>(a.v);
      return prod_make(a.grp, pow(*p.a, e), pow(*p.b, e));
    }
    default: return generic_pow(a, e);
  }
}

std::optional<Int> order(const Element& g) {
  switch (g.grp->kind) {
    case GroupSpec::Zn:
    case GroupSpec::H3:
    case GroupSpec::BS:
      if (is_identity(g)) return Int(1);
      return std::nullopt;
    case GroupSpec::Cyclic: {
      const Int& r = std::get<CycElem>(g.v).r;
      if (r == 0) return Int(1);
      return Int(g.grp->mod / gcd(r, g.grp->mod));
    }
    case GroupSpec::Sym: {
      const auto& img = std::get<PermElem>(g.v).img;
      std::vector<bool> seen(img.size(), false);
      Int o = 1;
      for (size_t i = 0; i < img.size(); i++) {
        if (seen[i]) continue;
        long len = 0;
        for (size_t j = i; !seen[j]; j = img[j]) {
          seen[j] = true;
          len++;
        }
        o = lcm(o, Int(len));
      }
      return o;
    }
    case GroupSpec::Product: {
      const auto& p = std::get<ProdElem>(g.v);
      auto oa = order(*p.a), ob = order(*p.b);
      if (!oa || !ob) return std::nullopt;
      return lcm(*oa, *ob);
    }
    case GroupSpec::Wreath: {
      const auto& w = *std::get<std::shared_ptr<const WreathData>>(g.v);
      auto oc = order(w.cursor);
      if (!oc) return is_identity(g) ? std::optional<Int>(Int(1)) : std::nullopt;
      Element p = pow(g, *oc);
      const auto& pw = *std::get<std::shared_ptr<const WreathData>>(p.v);
      Int o = 1;
      for (const auto& [h, v] : pw.supp) {
        auto ov = order(v);
        if (!ov) return std::nullopt;
        o = lcm(o, *ov);
      }
      return Int(*oc * o);
    }
  }
  throw gkp_error("bad group kind");
}

// ---------- discrete log ----------

static std::optional<Int> exact_div(const Int& a, const Int& b) {
  if (b == 0) return std::nullopt;
  if (!mpz_divisible_p(a.get_mpz_t(), b.get_mpz_t())) return std::nullopt;
  return Int(a / b);
}

// all e with base^e = target form, when nonempty, a coset e0 + ord(base) Z
struct LogSet {
  bool any;   // base and target both trivial: every e works
  Int e0;
  std::optional<Int> mod;  // nullopt: unique solution
};

static std::optional<LogSet> dlog_set(const Element& base,
                                      const Element& target);

std::optional<Int> discrete_log(const Element& base, const Element& target) {
  auto s = dlog_set(base, target);
  if (!s) return std::nullopt;
  if (s->any) return Int(0);
  return s->e0;
}

static std::optional<LogSet> dlog_set(const Element& base,
                                      const Element& target) {
  if (!spec_eq(base.grp, target.grp))
    throw gkp_error("discrete log across groups");
  switch (base.grp->kind) {
    case GroupSpec::Zn: {
      const auto& b = std::get<ZnElem>(base.v).c;
      const auto& t = std::get<ZnElem>(target.v).c;
      int i0 = -1;
      for (int i = 0; i < (int)b.size(); i++)
        if (b[i] != 0) {
          i0 = i;
          break;
        }
      if (i0 < 0) {
        if (is_identity(target)) return LogSet{true, Int(0), std::nullopt};
        return std::nullopt;
      }
      auto e = exact_div(t[i0], b[i0]);
      if (!e) return std::nullopt;
      for (int i = 0; i < (int)b.size(); i++)
        if (b[i] * *e != t[i]) return std::nullopt;
      return LogSet{false, *e, std::nullopt};
    }
    case GroupSpec::Cyclic: {
      Int k = base.grp->mod;
      Int b = std::get<CycElem>(base.v).r;
      Int w = std::get<CycElem>(target.v).r;
      if (b == 0) {
        if (w == 0) return LogSet{true, Int(0), std::nullopt};
        return std::nullopt;
      }
      Int d = gcd(b, k);
      if (!mpz_divisible_p(w.get_mpz_t(), d.get_mpz_t())) return std::nullopt;
      Int k2 = k / d, b2 = b / d, w2 = w / d;
      Int invb;
      if (mpz_invert(invb.get_mpz_t(), b2.get_mpz_t(), k2.get_mpz_t()) == 0)
        return std::nullopt;
      Int e = (w2 * invb) % k2;
      if (e < 0) e += k2;
      return LogSet{false, e, k2};
    }
    case GroupSpec::Sym: {
      auto o = order(base);
      Element cur = identity(base.grp);
      for (Int e = 0; e < *o; e++) {
        if (elem_eq(cur, target)) {
          if (e == 0 && *o == 1) return LogSet{true, Int(0), std::nullopt};
          return LogSet{false, e, *o};
        }
        cur = mul(cur, base);
      }
      return std::nullopt;
    }
    case GroupSpec::Product: {
      const auto& pb = std::get<ProdElem>(base.v);
      const auto& pt = std::get<ProdElem>(target.v);
      auto la = dlog_set(*pb.a, *pt.a);
      auto lb = dlog_set(*pb.b, *pt.b);
      if (!la || !lb) return std::nullopt;
      if (la->any) return lb;
      if (lb->any) return la;
      // intersect cosets e0+m Z
      auto fits = [](const LogSet& s, const Int& e) {
        if (!s.mod) return e == s.e0;
        Int d = (e - s.e0) % *s.mod;
        return d == 0;
      };
      if (!la->mod) return fits(*lb, la->e0) ? la : std::optional<LogSet>();
      if (!lb->mod) return fits(*la, lb->e0) ? lb : std::optional<LogSet>();
      Int g0 = gcd(*la->mod, *lb->mod);
      if ((lb->e0 - la->e0) % g0 != 0) return std::nullopt;
      // CRT
      Int m1 = *la->mod, m2 = *lb->mod;
      Int l = lcm(m1, m2);
      for (Int e = la->e0; e < la->e0 + l; e += m1)
        if ((e - lb->e0) % m2 == 0) {
          Int r = e % l;
          if (r < 0) r += l;
          return LogSet{false, r, l};
        }
      return std::nullopt;
    }
    case GroupSpec::H3: {
      const auto& b = std::get<H3Elem>(base.v);
      const auto& t = std::get<H3Elem>(target.v);
      std::optional<Int> e;
      if (b.a != 0)
        e = exact_div(t.a, b.a);
      else if (b.b != 0)
        e = exact_div(t.b, b.b);
      else if (b.c != 0)
        e = exact_div(t.c, b.c);
      else
        return is_identity(target) ? std::optional<LogSet>(LogSet{true, Int(0), std::nullopt})
                                   : std::nullopt;
      if (!e) return std::nullopt;
      if (!elem_eq(pow(base, *e), target)) return std::nullopt;
      return LogSet{false, *e, std::nullopt};
    }
    case GroupSpec::BS: {
      const auto& b = std::get<BSElem>(base.v);
      const auto& t = std::get<BSElem>(target.v);
      std::optional<Int> e;
      if (b.k != 0)
        e = exact_div(t.k, b.k);
      else if (b.u.m != 0)
        e = qd_div_int(t.u, b.u, base.grp->q);
      else
        return is_identity(target) ? std::optional<LogSet>(LogSet{true, Int(0), std::nullopt})
                                   : std::nullopt;
      if (!e) return std::nullopt;
      if (!elem_eq(pow(base, *e), target)) return std::nullopt;
      return LogSet{false, *e, std::nullopt};
    }
    case GroupSpec::Wreath:
      throw gkp_error("discrete log unsupported for wreath products");
  }
  throw gkp_error("bad group kind");
}

// ---------- commensurability ----------

static Commensurable normalize_sign(Int s, Int t) {
  if (s < 0) {
    s = -s;
    t = -t;
  }
  return {Commensurable::Some, s, t};
}

// minimal (s,t) != 0 with s*a = t*b over integer vectors, if any
static std::optional<std::pair<Int, Int>> vec_ratio(const std::vector<Int>& a,
                                                    const std::vector<Int>& b) {
  int i0 = -1;
  for (int i = 0; i < (int)a.size(); i++)
    if (a[i] != 0) {
      i0 = i;
      break;
    }
  if (i0 < 0) return std::nullopt;  // caller handles zero vector
  if (b[i0] == 0) return std::nullopt;
  Int d = gcd(a[i0], b[i0]);
  Int s = b[i0] / d, t = a[i0] / d;
  for (int i = 0; i < (int)a.size(); i++)
    if (s * a[i] != t * b[i]) return std::nullopt;
  return std::make_pair(s, t);
}

Commensurable commensurable(const Element& g, const Element& h,
                            long search_bound) {
  if (order(g) || order(h))
    throw gkp_error("commensurability requires infinite-order elements");
  switch (g.grp->kind) {
    case GroupSpec::Zn: {
      const auto& a = std::get<ZnElem>(g.v).c;
      const auto& b = std::get<ZnElem>(h.v).c;
      auto r = vec_ratio(a, b);
      if (!r) return {Commensurable::None, Int(0), Int(0)};
      return normalize_sign(r->first, r->second);
    }
    case GroupSpec::H3: {
      const auto& x = std::get<H3Elem>(g.v);
      const auto& y = std::get<H3Elem>(h.v);
      bool gc = x.a == 0 && x.b == 0;
      bool hc = y.a == 0 && y.b == 0;
      if (gc != hc) return {Commensurable::None, Int(0), Int(0)};
      if (gc) {
        Int d = gcd(x.c, y.c);
        return normalize_sign(y.c / d, x.c / d);
      }
      auto r = vec_ratio({x.a, x.b}, {y.a, y.b});
      if (!r) return {Commensurable::None, Int(0), Int(0)};
      Int s0 = r->first, t0 = r->second;
      Int A = s0 * s0 * x.a * x.b - t0 * t0 * y.a * y.b;
      Int B = 2 * t0 * y.c - t0 * y.a * y.b - 2 * s0 * x.c + s0 * x.a * x.b;
      if (A == 0) {
        if (B == 0) return normalize_sign(s0, t0);
        return {Commensurable::None, Int(0), Int(0)};
      }
      auto k = exact_div(B, A);
      if (!k || *k == 0) return {Commensurable::None, Int(0), Int(0)};
      return normalize_sign(*k * s0, *k * t0);
    }
    case GroupSpec::BS: {
      const auto& x = std::get<BSElem>(g.v);
      const auto& y = std::get<BSElem>(h.v);
      const Int& q = g.grp->q;
      if ((x.k == 0) != (y.k == 0)) return {Commensurable::None, Int(0), Int(0)};
      if (x.k != 0) {
        // shared fixed point: u1 (q^{k2}-1) = u2 (q^{k1}-1)
        QDyadic qk1 = qd_sub(QDyadic{Int(1), to_long(x.k)}, qd_from_int(1, q), q);
        QDyadic qk2 = qd_sub(QDyadic{Int(1), to_long(y.k)}, qd_from_int(1, q), q);
        if (!(qd_mul(x.u, qk2, q) == qd_mul(y.u, qk1, q)))
          return {Commensurable::None, Int(0), Int(0)};
        Int d = gcd(x.k, y.k);
        return normalize_sign(y.k / d, x.k / d);
      }
      // both translations: s*u1 = t*u2
      long d = x.u.e - y.u.e;
      Int s = y.u.m * (d < 0 ? qpow(q, -d) : Int(1));
      Int t = x.u.m * (d > 0 ? qpow(q, d) : Int(1));
      Int dd = gcd(s, t);
      return normalize_sign(s / dd, t / dd);
    }
    default: {
      for (long s = 1; s <= search_bound; s++) {
        Element gs = pow(g, Int(s));
        for (long t = 1; t <= search_bound; t++) {
          Element ht = pow(h, Int(t));
          if (elem_eq(gs, ht)) return {Commensurable::Some, Int(s), Int(t)};
          if (elem_eq(gs, inv(ht))) return {Commensurable::Some, Int(s), Int(-t)};
        }
      }
      return {Commensurable::Unknown, Int(0), Int(0)};
    }
  }
}

std::pair<Int, Int> h3_projections(const Element& g) {
  const auto& h = std::get<H3Elem>(g.v);
  return {h.a, h.b};
}

// ---------- words ----------

static Element word_fold(const std::string& word,
                         const std::map<char, Element>& gens,
                         const GroupRef& grp) {
  Cur c{word};
  Element acc = identity(grp);
  while (!c.done()) {
    char ch = c.peek();
    auto it = gens.find(ch);
    if (it == gens.end())
      throw parse_error("unexpected letter '" + std::string(1, ch) +
                        "' in word: " + word);
    c.i++;
    Int e = 1;
    if (c.try_eat('^')) e = c.integer();
    acc = mul(acc, pow(it->second, e));
  }
  return acc;
}

Element bs_from_word(const std::string& word, const Int& q) {
  GroupRef bs = bs_group(q);
  std::map<char, Element> gens{
      {'a', bs_make(bs, 0, qd_from_int(1, q))},
      {'t', bs_make(bs, 1, qd_from_int(0, q))},
  };
  return word_fold(word, gens, bs);
}

Element h3_from_word(const std::string& word) {
  GroupRef h3 = h3_group();
  std::map<char, Element> gens{
      {'A', h3_make(1, 0, 0)},
      {'B', h3_make(0, 1, 0)},
      {'C', h3_make(0, 0, 1)},
  };
  return word_fold(word, gens, h3);
}

// ---------- serialization ----------

std::string elem_to_string(const Element& g) {
  switch (g.grp->kind) {
    case GroupSpec::Zn: {
      std::string s = "(";
      const auto& c = std::get<ZnElem>(g.v).c;
      for (size_t i = 0; i < c.size(); i++) {
        if (i) s += ",";
        s += c[i].get_str();
      }
      return s + ")";
    }
    case GroupSpec::Cyclic: return "[" + std::get<CycElem>(g.v).r.get_str() + "]";
    case GroupSpec::Sym: {
      std::string s = "perm(";
      const auto& img = std::get<PermElem>(g.v).img;
      for (size_t i = 0; i < img.size(); i++) {
        if (i) s += " ";
        s += std::to_string(img[i]);
      }
      return s + ")";
    }
    case GroupSpec::Product: {
      const auto& p = std::get<ProdElem>(g.v);
      return "<" + elem_to_string(*p.a) + " ; " + elem_to_string(*p.b) + ">";
    }
    case GroupSpec::H3: {
      const auto& h = std::get<H3Elem>(g.v);
      return "h(" + h.a.get_str() + "," + h.b.get_str() + "," + h.c.get_str() +
             ")";
    }
    case GroupSpec::BS: {
      const auto& b = std::get<BSElem>(g.v);
      return "bs(" + b.k.get_str() + "; " + qd_to_string(b.u) + ")";
    }
    case GroupSpec::Wreath: {
      const auto& w = *std::get<std::shared_ptr<const WreathData>>(g.v);
      std::string s = "{";
      for (size_t i = 0; i < w.supp.size(); i++) {
        if (i) s += ", ";
        s += elem_to_string(w.supp[i].first) + ":" +
             elem_to_string(w.supp[i].second);
      }
      return s + "|" + elem_to_string(w.cursor) + "}";
    }
  }
  throw gkp_error("bad group kind");
}

static Element parse_elem_cur(const GroupRef& g, Cur& c);

static Element parse_wreath_cur(const GroupRef& g, Cur& c) {
  c.eat('{');
  std::vector<std::pair<Element, Element>> supp;
  if (c.peek() != '|') {
    while (true) {
      Element h = parse_elem_cur(g->right, c);
      c.eat(':');
      Element v = parse_elem_cur(g->left, c);
      supp.emplace_back(std::move(h), std::move(v));
      if (!c.try_eat(',')) break;
    }
  }
  c.eat('|');
  Element cur = parse_elem_cur(g->right, c);
  c.eat('}');
  return wreath_from_map(g, std::move(supp), std::move(cur));
}

static Element parse_elem_cur(const GroupRef& g, Cur& c) {
  c.ws();
  if (c.peek() == '1' ) {
    // bare identity shortcut, but only when not the start of a longer number
    size_t save = c.i;
    c.i++;
    char nxt = c.i < c.s.size() ? c.s[c.i] : '\0';
    if (!std::isdigit((unsigned char)nxt)) return identity(g);
    c.i = save;
  }
  switch (g->kind) {
    case GroupSpec::Zn: {
      c.eat('(');
      std::vector<Int> coords;
      coords.push_back(c.integer());
      while (c.try_eat(',')) coords.push_back(c.integer());
      c.eat(')');
      return zn_make(g, std::move(coords));
    }
    case GroupSpec::Cyclic: {
      c.eat('[');
      Int r = c.integer();
      c.eat(']');
      return cyc_make(g, r);
    }
    case GroupSpec::Sym: {
      if (!c.try_word("perm")) throw parse_error("expected perm(...)");
      c.eat('(');
      std::vector<int> img;
      while (c.peek() != ')') img.push_back((int)c.small_int());
      c.eat(')');
      return perm_make(g, std::move(img));
    }
    case GroupSpec::Product: {
      c.eat('<');
      Element a = parse_elem_cur(g->left, c);
      c.eat(';');
      Element b = parse_elem_cur(g->right, c);
      c.eat('>');
      return prod_make(g, std::move(a), std::move(b));
    }
    case GroupSpec::H3: {
      if (c.try_word("h(")) {
        Int a = c.integer();
        c.eat(',');
        Int b = c.integer();
        c.eat(',');
        Int cc = c.integer();
        c.eat(')');
        return h3_make(a, b, cc);
      }
      // word over A, B, C
      Element acc = identity(g);
      while (!c.done() && (c.peek() == 'A' || c.peek() == 'B' || c.peek() == 'C')) {
        char ch = c.peek();
        c.i++;
        Int e = 1;
        if (c.try_eat('^')) e = c.integer();
        Element gen = ch == 'A' ? h3_make(1, 0, 0)
                      : ch == 'B' ? h3_make(0, 1, 0)
                                  : h3_make(0, 0, 1);
        acc = mul(acc, pow(gen, e));
      }
      return acc;
    }
    case GroupSpec::BS: {
      if (c.try_word("bs(")) {
        Int k = c.integer();
        c.eat(';');
        Int m = c.integer();
        long e = 0;
        if (c.try_eat('q')) {
          c.eat('^');
          e = c.small_int();
        }
        c.eat(')');
        return bs_make(g, k, qd_make(m, e, g->q));
      }
      Element acc = identity(g);
      while (!c.done() && (c.peek() == 'a' || c.peek() == 't')) {
        char ch = c.peek();
        c.i++;
        Int e = 1;
        if (c.try_eat('^')) e = c.integer();
        Element gen = ch == 'a' ? bs_make(g, 0, qd_from_int(1, g->q))
                                : bs_make(g, 1, qd_from_int(0, g->q));
        acc = mul(acc, pow(gen, e));
      }
      return acc;
    }
    case GroupSpec::Wreath: return parse_wreath_cur(g, c);
  }
  throw gkp_error("bad group kind");
}

Element parse_element(const GroupRef& g, const std::string& text) {
  Cur c{text};
  Element e = parse_elem_cur(g, c);
  if (!c.done()) throw parse_error("trailing input in element: " + text);
  return e;
}

}  // namespace gkp
