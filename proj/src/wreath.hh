#pragma once
#include "groups.hh"

namespace gkp {

// g must be an element of a wreath group
const WreathData& wreath_data(const Element& g);
Element make_wreath(const GroupRef& wg,
                    std::vector<std::pair<Element, Element>> supp,
                    Element cursor);

Element sigma(const Element& g);
Element tau_at(const Element& g, const Element& h);
std::vector<Element> supp(const Element& g);

// f^g = g f g^{-1}
Element conjugate(const Element& f, const Element& g);

// tau(g^m)(h) without expanding g^m; product is ordered along the sigma ray
Element tau_power(const Element& g, const Int& m, const Element& h);

// finitely supported function Z -> G, the K = Z specialization used by all
// word gadgets; position n corresponds to t^n once embedded
struct PeriodicFunction {
  GroupRef g;
  std::map<long, Element> vals;  // no identity values stored
};

PeriodicFunction pf_make(GroupRef g, std::map<long, Element> vals);
Element pf_at(const PeriodicFunction& u, long n);
PeriodicFunction shift(const PeriodicFunction& u, long s);
PeriodicFunction shift_inf(const PeriodicFunction& u);
PeriodicFunction pf_mul(const PeriodicFunction& a, const PeriodicFunction& b);
PeriodicFunction pf_inv(const PeriodicFunction& a);
bool pf_eq(const PeriodicFunction& a, const PeriodicFunction& b);
// support as a sorted position list
std::vector<long> pf_supp(const PeriodicFunction& u);

// place u along the cyclic subgroup generated by t: support point n -> t^n,
// trivial cursor
Element pf_embed(const PeriodicFunction& u, const GroupRef& wg,
                 const Element& t);

}  // namespace gkp
