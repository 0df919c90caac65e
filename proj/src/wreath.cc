#include "wreath.hh"

#include <algorithm>

namespace gkp {

const WreathData& wreath_data(const Element& g) {
  if (g.grp->kind != GroupSpec::Wreath)
    throw gkp_error("expected a wreath product element");
  return *std::get<std::shared_ptr<const WreathData>>(g.v);
}

Element make_wreath(const GroupRef& wg,
                    std::vector<std::pair<Element, Element>> supp,
                    Element cursor) {
  if (wg->kind != GroupSpec::Wreath) throw gkp_error("not a wreath group");
  // route through mul-free normalization: reuse parse path invariants
  std::vector<std::pair<Element, Element>> filtered;
  filtered.reserve(supp.size());
  for (auto& hv : supp) {
    if (!spec_eq(hv.first.grp, wg->right) || !spec_eq(hv.second.grp, wg->left))
      throw gkp_error("wreath support entry group mismatch");
    if (!is_identity(hv.second)) filtered.push_back(std::move(hv));
  }
  std::sort(filtered.begin(), filtered.end(),
            [](const auto& a, const auto& b) {
              return elem_key(a.first) < elem_key(b.first);
            });
  for (size_t i = 1; i < filtered.size(); i++)
    if (elem_eq(filtered[i].first, filtered[i - 1].first))
      throw gkp_error("duplicate support point");
  auto data = std::make_shared<WreathData>();
  data->supp = std::move(filtered);
  data->cursor = std::move(cursor);
  return {wg, std::shared_ptr<const WreathData>(std::move(data))};
}

Element sigma(const Element& g) { return wreath_data(g).cursor; }

Element tau_at(const Element& g, const Element& h) {
  const auto& w = wreath_data(g);
  std::string k = elem_key(h);
  auto it = std::lower_bound(
      w.supp.begin(), w.supp.end(), k,
      [](const auto& hv, const std::string& key) { return elem_key(hv.first) < key; });
  if (it != w.supp.end() && elem_key(it->first) == k) return it->second;
  return identity(g.grp->left);
}

std::vector<Element> supp(const Element& g) {
  const auto& w = wreath_data(g);
  std::vector<Element> r;
  r.reserve(w.supp.size());
  for (const auto& hv : w.supp) r.push_back(hv.first);
  return r;
}

Element conjugate(const Element& f, const Element& g) {
  return mul(mul(g, f), inv(g));
}

Element tau_power(const Element& g, const Int& m, const Element& h) {
  const auto& w = wreath_data(g);
  const GroupRef& G = g.grp->left;
  if (m == 0) return identity(G);
  if (m < 0) throw gkp_error("tau_power needs a natural exponent");
  if (m >= 2) {
    auto o = order(w.cursor);
    if (o) throw gkp_error("tau_power needs an infinite-order cursor for m >= 2");
  }
  const long direct_cap = 1'000'000;
  if (m <= direct_cap) {
    // tau(g^m)(h) = prod_{i=0}^{m-1} tau(g)(sigma^{-i} h), in i order
    Element acc = identity(G);
    Element x = h;
    Element ci = inv(w.cursor);
    long mm = to_long(m);
    for (long i = 0; i < mm; i++) {
      Element v = tau_at(g, x);
      if (!is_identity(v)) acc = mul(acc, v);
      x = mul(ci, x);
    }
    return acc;
  }
  // large m: locate, for each support point p, the unique i with
  // sigma^i p = h, then multiply the hits in ray order
  std::vector<std::pair<Int, const Element*>> hits;
  for (const auto& [p, v] : w.supp) {
    auto i = discrete_log(w.cursor, mul(h, inv(p)));
    if (i && *i >= 0 && *i < m) hits.emplace_back(*i, &v);
  }
  std::sort(hits.begin(), hits.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  Element acc = identity(G);
  for (const auto& [i, v] : hits) acc = mul(acc, *v);
  return acc;
}

// ---------- PeriodicFunction ----------

PeriodicFunction pf_make(GroupRef g, std::map<long, Element> vals) {
  PeriodicFunction u{std::move(g), {}};
  for (auto& [n, v] : vals)
    if (!is_identity(v)) u.vals.emplace(n, std::move(v));
  return u;
}
Element pf_at(const PeriodicFunction& u, long n) {
  auto it = u.vals.find(n);
  return it != u.vals.end() ? it->second : identity(u.g);
}
PeriodicFunction shift(const PeriodicFunction& u, long s) {
  PeriodicFunction r{u.g, {}};
  for (const auto& [n, v] : u.vals) r.vals.emplace(n + s, v);
  return r;
}
PeriodicFunction shift_inf(const PeriodicFunction& u) {
  return PeriodicFunction{u.g, {}};
}
PeriodicFunction pf_mul(const PeriodicFunction& a, const PeriodicFunction& b) {
  if (!spec_eq(a.g, b.g)) throw gkp_error("pointwise product across groups");
  PeriodicFunction r{a.g, a.vals};
  for (const auto& [n, v] : b.vals) {
    auto it = r.vals.find(n);
    if (it == r.vals.end()) {
      r.vals.emplace(n, v);
    } else {
      Element p = mul(it->second, v);
      if (is_identity(p))
        r.vals.erase(it);
      else
        it->second = std::move(p);
    }
  }
  return r;
}
PeriodicFunction pf_inv(const PeriodicFunction& a) {
  PeriodicFunction r{a.g, {}};
  for (const auto& [n, v] : a.vals) r.vals.emplace(n, inv(v));
  return r;
}
bool pf_eq(const PeriodicFunction& a, const PeriodicFunction& b) {
  if (a.vals.size() != b.vals.size()) return false;
  auto it = b.vals.begin();
  for (const auto& [n, v] : a.vals) {
    if (it->first != n || !elem_eq(it->second, v)) return false;
    ++it;
  }
  return true;
}
std::vector<long> pf_supp(const PeriodicFunction& u) {
  std::vector<long> r;
  r.reserve(u.vals.size());
  for (const auto& [n, v] : u.vals) r.push_back(n);
  return r;
}

Element pf_embed(const PeriodicFunction& u, const GroupRef& wg,
                 const Element& t) {
  // t may be given as a wreath element; positions live in the top group
  Element step = spec_eq(t.grp, wg) ? sigma(t) : t;
  if (!spec_eq(step.grp, wg->right))
    throw gkp_error("pf_embed direction must live in the top group");
  std::vector<std::pair<Element, Element>> supp;
  supp.reserve(u.vals.size());
  for (const auto& [n, v] : u.vals) supp.emplace_back(pow(step, Int(n)), v);
  return make_wreath(wg, std::move(supp), identity(wg->right));
}

}  // namespace gkp
