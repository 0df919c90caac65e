#pragma once
#include <gmpxx.h>

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace gkp {

using Int = mpz_class;

long to_long(const Int& v);
Int lcm(const Int& a, const Int& b);

struct gkp_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct resource_error : gkp_error {
  using gkp_error::gkp_error;
};
struct parse_error : gkp_error {
  using gkp_error::gkp_error;
};

// ---------- group specs ----------

struct GroupSpec;
using GroupRef = std::shared_ptr<const GroupSpec>;

struct GroupSpec {
  enum Kind { Zn, Cyclic, Sym, Product, H3, BS, Wreath } kind;
  int rank = 0;          // Zn
  Int mod;               // Cyclic
  int degree = 0;        // Sym
  GroupRef left, right;  // Product factors; Wreath: left wr right
  Int q;                 // BS
};

GroupRef zn_group(int rank);
GroupRef cyclic_group(const Int& mod);
GroupRef sym_group(int degree);
GroupRef product_group(GroupRef a, GroupRef b);
GroupRef h3_group();
GroupRef bs_group(const Int& q);
GroupRef wreath_group(GroupRef g, GroupRef h);

bool spec_eq(const GroupRef& a, const GroupRef& b);
std::string spec_to_string(const GroupRef& s);
GroupRef parse_group(const std::string& text);

// ---------- Z[1/q] ----------

// value m*q^e, canonical: m==0 => e==0, otherwise q does not divide m
struct QDyadic {
  Int m;
  long e = 0;
  bool operator==(const QDyadic&) const = default;
};

QDyadic qd_make(Int m, long e, const Int& q);
QDyadic qd_from_int(const Int& v, const Int& q);
QDyadic qd_add(const QDyadic& a, const QDyadic& b, const Int& q);
QDyadic qd_neg(const QDyadic& a);
QDyadic qd_sub(const QDyadic& a, const QDyadic& b, const Int& q);
QDyadic qd_mul(const QDyadic& a, const QDyadic& b, const Int& q);
QDyadic qd_mul_qpow(const QDyadic& a, long k, const Int& q);
bool qd_is_int(const QDyadic& a);
// exact integer quotient a/b if it exists
std::optional<Int> qd_div_int(const QDyadic& a, const QDyadic& b, const Int& q);
int qd_sign(const QDyadic& a);
std::string qd_to_string(const QDyadic& a);

// ---------- elements ----------

struct Element;
struct WreathData;

struct ZnElem {
  std::vector<Int> c;
};
struct CycElem {
  Int r;
};
struct PermElem {
  std::vector<int> img;  // i -> img[i], bijection on [0,d)
};
struct ProdElem {
  std::shared_ptr<const Element> a, b;
};
struct H3Elem {
  Int a, b, c;
};
struct BSElem {
  Int k;
  QDyadic u;
};

struct Element {
  GroupRef grp;
  std::variant<ZnElem, CycElem, PermElem, ProdElem, H3Elem, BSElem,
               std::shared_ptr<const WreathData>>
      v;
};

// finitely supported map H -> G plus cursor in H
struct WreathData {
  // sorted by elem_key of the H coordinate; values are never the G identity
  std::vector<std::pair<Element, Element>> supp;
  Element cursor;
};

Element identity(const GroupRef& g);
bool is_identity(const Element& g);
bool elem_eq(const Element& a, const Element& b);
Element mul(const Element& a, const Element& b);
Element inv(const Element& a);
Element pow(const Element& a, const Int& e);
// nullopt = infinite order
std::optional<Int> order(const Element& g);
// exact solution e of base^e = target (e may be negative); nullopt if none
std::optional<Int> discrete_log(const Element& base, const Element& target);

struct Commensurable {
  enum Result { Some, None, Unknown } result;
  Int s, t;  // g^s = h^t when result == Some
};
Commensurable commensurable(const Element& g, const Element& h,
                            long search_bound = 20);

std::pair<Int, Int> h3_projections(const Element& g);
Element h3_make(const Int& a, const Int& b, const Int& c);
Element bs_make(const GroupRef& bs, const Int& k, const QDyadic& u);
// word over a, t with optional ^exponents, e.g. "a^3 t^-1 a"
Element bs_from_word(const std::string& word, const Int& q);
// word over A, B, C with optional ^exponents
Element h3_from_word(const std::string& word);

// canonical serialization; doubles as deterministic sort key
std::string elem_to_string(const Element& g);
inline std::string elem_key(const Element& g) { return elem_to_string(g); }
Element parse_element(const GroupRef& g, const std::string& text);

// helpers for element construction
Element zn_make(const GroupRef& g, std::vector<Int> coords);
Element cyc_make(const GroupRef& g, const Int& r);
Element perm_make(const GroupRef& g, std::vector<int> img);
Element prod_make(const GroupRef& g, Element a, Element b);

}  // namespace gkp
