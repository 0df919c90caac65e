#pragma once
#include <random>

#include "groups.hh"
#include "wreath.hh"

namespace gkp::testutil {

using Rng = std::mt19937_64;

inline Int rand_int(Rng& rng, long lo, long hi) {
  std::uniform_int_distribution<long> d(lo, hi);
  return Int(d(rng));
}

inline Element random_element(const GroupRef& g, Rng& rng, int size = 4) {
  switch (g->kind) {
    case GroupSpec::Zn: {
      std::vector<Int> c;
      for (int i = 0; i < g->rank; i++) c.push_back(rand_int(rng, -size, size));
      return zn_make(g, std::move(c));
    }
    case GroupSpec::Cyclic:
      return cyc_make(g, rand_int(rng, 0, to_long(Int(g->mod - 1))));
    case GroupSpec::Sym: {
      std::vector<int> img(g->degree);
      for (int i = 0; i < g->degree; i++) img[i] = i;
      std::shuffle(img.begin(), img.end(), rng);
      return perm_make(g, std::move(img));
    }
    case GroupSpec::Product:
      return prod_make(g, random_element(g->left, rng, size),
                       random_element(g->right, rng, size));
    case GroupSpec::H3:
      return h3_make(rand_int(rng, -size, size), rand_int(rng, -size, size),
                     rand_int(rng, -size, size));
    case GroupSpec::BS: {
      Element a = bs_make(g, 0, qd_from_int(1, g->q));
      Element t = bs_make(g, 1, qd_from_int(0, g->q));
      Element e = identity(g);
      for (int i = 0; i < size; i++) {
        Element gen = rng() % 2 ? a : t;
        e = mul(e, rng() % 2 ? gen : inv(gen));
      }
      return e;
    }
    case GroupSpec::Wreath: {
      int pts = (int)(rng() % (size + 1));
      std::vector<std::pair<Element, Element>> supp;
      for (int i = 0; i < pts; i++)
        supp.emplace_back(random_element(g->right, rng, size),
                          random_element(g->left, rng, size));
      // duplicate support points may collide; keep first of each key
      std::vector<std::pair<Element, Element>> dedup;
      for (auto& hv : supp) {
        bool dup = false;
        for (auto& kv : dedup)
          if (elem_eq(kv.first, hv.first)) dup = true;
        if (!dup) dedup.push_back(std::move(hv));
      }
      return make_wreath(g, std::move(dedup), random_element(g->right, rng, size));
    }
  }
  throw gkp_error("bad group kind");
}

}  // namespace gkp::testutil
