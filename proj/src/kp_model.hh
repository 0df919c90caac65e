#pragma once
#include "groups.hh"

#include <functional>
#include <set>

namespace gkp {

struct Atom {
  bool is_power = false;
  Element g;
  std::string var;  // empty for constants
};

Atom power_atom(Element g, std::string var);
Atom const_atom(Element g);

struct Expression {
  GroupRef grp;
  std::vector<Atom> atoms;
};

using Valuation = std::map<std::string, Int>;

enum class Variant { KPpm, MKPpm, HKPpm };

struct ConstraintSet {
  std::vector<std::pair<int, int>> loops;  // 0 <= i <= j <= n
  std::vector<std::pair<int, int>> disj;   // 1 <= i <= j <= n
  Variant variant = Variant::KPpm;
};

// single-expression instance: product must be 1, plus loop/disjointness pairs
struct KpInstance {
  Expression expr;
  ConstraintSet cons;
  bool integer_mode = false;
};

// multi-expression instance: window products per P; with expeq set, each
// expression is an equation E_i = 1 and variables may repeat
struct MultiInstance {
  GroupRef grp;
  std::vector<Expression> exprs;
  std::vector<std::pair<int, int>> pairs;  // 0 <= i <= j <= n
  bool integer_mode = false;
  bool expeq = false;
};

struct FactorizedWalk {
  std::vector<std::vector<Element>> subs;
};

// ---------- semantics ----------

std::vector<std::string> variables(const Expression& e);
std::vector<std::string> variables(const KpInstance& inst);
std::vector<std::string> variables(const MultiInstance& inst);
void validate(const KpInstance& inst);
void validate(const MultiInstance& inst);

Element evaluate(const Expression& e, const Valuation& nu,
                 bool require_natural = false);
FactorizedWalk induced_walk(const Expression& e, const Valuation& nu,
                            bool require_natural = false);
bool check_constraints(const KpInstance& inst, const Valuation& nu);
bool ikp_check(const MultiInstance& inst, const Valuation& nu);

// ---------- brute force oracle ----------

std::optional<Valuation> brute_solve(const KpInstance& inst, const Int& bound);
std::optional<Valuation> brute_solve(const MultiInstance& inst,
                                     const Int& bound);
std::optional<Valuation> brute_solve_serial(const KpInstance& inst,
                                            const Int& bound);
std::optional<Valuation> brute_solve_serial(const MultiInstance& inst,
                                            const Int& bound);

// all solutions of a loops-only instance with every exponent in the box
// (integers in [-bound, bound] in integer mode, else [0, bound]), restricted
// to `keep` and deduplicated; loop windows prune the enumeration as they
// close, so instances whose loops pin most variables stay tractable far
// beyond plain box scanning
std::vector<Valuation> guided_solutions(const KpInstance& inst,
                                        const std::vector<std::string>& keep,
                                        const Int& bound);

// ---------- variant conversions ----------

// per-branch witness translation: input var x -> nu(src)+off, or the
// constant off when src is empty
struct BackMap {
  std::map<std::string, std::pair<std::string, Int>> m;
  Valuation apply(const Valuation& branch_nu) const;
};

struct KpBranch {
  KpInstance inst;
  BackMap back;
};

// MKP± -> set of KP± instances (one per guessed zero set)
std::vector<KpBranch> mkp_to_kppm(const KpInstance& mkp);
// KP± -> single MKP± instance; same variables, loop/disj indices remapped
KpInstance kppm_to_mkp(const KpInstance& kppm);

// torsion elimination + orthogonalization for KP± instances
std::vector<KpBranch> normalize_kppm(const KpInstance& inst,
                                     long commensurable_bound = 20);

}  // namespace gkp
