#pragma once
#include "kp_model.hh"

namespace gkp {

// diophantine equations in the four primitive shapes: x = a, x = y,
// x + y = z, x * y = z; variables range over the integers
struct DiophEq {
  enum Kind { Const, Equal, Plus, Times } kind = Const;
  std::string x, y, z;
  Int a = 0;
};

struct DiophantineSystem {
  std::vector<DiophEq> eqs;
};

// line syntax: "let x = 3", "eq x y", "add x y z" (x+y=z),
// "mul x y z" (x*y=z); '#' starts a comment
DiophantineSystem parse_diophantine(const std::string& text);

// a loops-only integer-mode instance over the discrete Heisenberg group that
// defines a relation on its head variables: each head g^x sits right after a
// loop anchor (0, pos-1) forcing the preceding prefix to 1, so on solutions
// the walk reads off g^{nu(x)} directly.  every non-head variable is a copy:
// the loops force it equal to the named head, which is how witnesses extend
struct HeadGadget {
  KpInstance inst;
  std::map<std::string, int> heads;           // head var -> atom position, 1-based
  std::map<std::string, std::string> copies;  // fresh var -> head it mirrors
};

HeadGadget head_const(const std::string& x, const Int& a);
HeadGadget head_equal(const std::string& x, const std::string& y);
HeadGadget head_plus(const std::string& x, const std::string& y,
                     const std::string& z);
HeadGadget head_times(const std::string& x, const std::string& y,
                      const std::string& z);

// conjunction: concatenates the expressions, closes each part with its own
// identity loop, and equates shared heads through appended synchronization
// blocks built inside rank-2 free abelian subgroups
HeadGadget conjoin(const HeadGadget& g1, const HeadGadget& g2);

// extensional view of the defined relation: all head valuations in the box
// [-bound, bound] that extend to a solution
std::vector<Valuation> head_relation(const HeadGadget& g, const Int& bound);

struct DiophReduction {
  DiophantineSystem system;
  HeadGadget gadget;
  std::map<std::string, std::string> alias;  // alias var -> original system var
};

// the system is solvable iff the gadget instance is; equations whose sides
// repeat a variable get the repeats renamed to aliases tied back by equality
// gadgets, since gadget variables must be distinct
DiophReduction diophantine_to_ikp(const DiophantineSystem& system);
Valuation dioph_witness_forward(const DiophReduction& red, const Valuation& sys);
Valuation dioph_witness_back(const DiophReduction& red, const Valuation& nu);

// integer-mode -> natural-mode: every power g^x becomes g^x (g^-1)^x- and
// loop endpoints move to the atom-group boundaries; x = nu(x) - nu(x-)
struct IntegerSplit {
  KpInstance inst;
  std::vector<std::pair<std::string, std::string>> pairs;  // (x, x-) per var
};

IntegerSplit integer_to_standard_ikp(const KpInstance& inst);
Valuation split_witness_forward(const IntegerSplit& split, const Valuation& nu);
Valuation split_witness_back(const IntegerSplit& split, const Valuation& nu);

// coset-intersection presentation of arithmetic on the Heisenberg generators
// A, B, C = [A,B]: each pattern is a 2- or 3-way intersection of rays whose
// star exponents run over [0, bound].  free exponents are pinned by the two
// abelianization coordinates, so a bound past the largest |exponent| (and
// |product| for the Times patterns) decides emptiness exactly
enum class SatPattern {
  PlusFirst,    // C^x B^*  cap  B^xp C^*  cap  (BC)^*
  PlusSecond,   // B^xp C^*  cap  C^z B^*  cap  C^y (BC)^*
  TimesFirst,   // C^x A^*  cap  A^xp C^*  cap  (AC)^*
  TimesSecond,  // C^y B^*  cap  B^yp C^*  cap  (BC)^*
  TimesThird,   // A^xp B^* (A^-1)^*  cap  B^yp C^*  cap  C^z B^*
};

bool satplus_intersection_check(SatPattern pattern,
                                const std::map<std::string, Int>& exponents,
                                const Int& bound);

}  // namespace gkp
