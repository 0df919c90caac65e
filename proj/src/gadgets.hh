#pragma once
#include "kp_model.hh"
#include "wreath.hh"

namespace gkp {

// shared guard for word/support sizes produced by the constructions below
inline constexpr long gadget_cap = 1000000;

// ---------- lonely-1 words ----------

// binary words w_i = (1 0^{p_i-1})^{q_i} (1 0^{q_i-1})^{p_i} built over the
// smallest primes p_1 < q_1 < ... < p_n < q_n with p_1 > 2n, q_i > p_i and
// p_i > 2 p_{i-1} q_{i-1}; stacking each word twice with non-matching shifts
// always yields a column holding exactly one 1
struct LonelyOnesFamily {
  int n = 0;
  std::vector<long> p, q;
  std::vector<long> len;               // len[i] = 2 p_i q_i
  std::vector<std::vector<long>> ones; // sorted 1-positions of w_i
};

LonelyOnesFamily lonely_ones_words(int n);
// dense 0/1 view of w_i (guarded by gadget_cap)
std::vector<int> dense_word(const LonelyOnesFamily& fam, int i);
// true iff some column of the stack 0^{shift_i} w_i 0^omega has exactly one 1
bool has_lonely_one(const std::vector<std::vector<int>>& words,
                    const std::vector<long>& shifts);
// sparse variant: row k stacks word idx[k] shifted by shifts[k]
bool has_lonely_one(const LonelyOnesFamily& fam, const std::vector<int>& idx,
                    const std::vector<long>& shifts);

// ---------- cancelling conjugates / pairs ----------

// f_1..f_n in <a>^(<t>) with trivial cursor and supp(f_i) = 1-positions of
// w_i; f_1^{h_1}..f_n^{h_n} (f_1^{-1})^{h'_1}..(f_n^{-1})^{h'_n} = 1 iff
// h_i = h'_i for all i
std::vector<Element> cancelling_conjugates(int n, const Element& a,
                                           const Element& t);

// f_0..f_n with h_0 f_0 ... h_n f_n = 1 iff h_0...h_n = 1 and
// h_{i+1}...h_j = 1 for every (i,j) in pairs
std::vector<Element> cancelling_pairs(
    const std::vector<std::pair<int, int>>& pairs, int n, const Element& a,
    const Element& t);

// ---------- interval knapsack -> wreath knapsack ----------

struct IkpReduction {
  KpInstance inst;                        // plain KP over G wr H
  std::map<std::string, std::string> bar; // original var -> mirror var
};

// E_0 f_0 E_1 f_1 ... E_n f_n where E_0 mirrors E_n^{-1}..E_1^{-1} with
// fresh variables and the f_i cancel exactly when all window products are 1
IkpReduction ikp_to_wreath(const MultiInstance& ikp, const Element& a,
                           const Element& t);
// extend a window-instance witness with the mirror variables
Valuation ikp_witness_forward(const IkpReduction& red, const Valuation& nu);
// restrict a wreath witness to the original variables
Valuation ikp_witness_back(const IkpReduction& red, const Valuation& nu);

// ---------- periodic complexity ----------

// word (a^B 1^B)^{2k} with B = 2^(2^k); complexity at least k, length 4k*B
PeriodicFunction pc_word(int k, const Element& a);
PeriodicFunction pc_word(int k);

struct PcResult {
  long lower = 0;                // sound lower bound
  std::optional<long> upper;     // factor count of best decomposition found
  bool exact = false;            // lower == upper and the search was complete
};

// minimal number of basic periodic factors; exact when the support width
// fits the window and the value subgroup is finite, otherwise a bracket
PcResult periodic_complexity(const PeriodicFunction& u, int k_max,
                             long window);

// largest k such that u is (4k, 2^(2^k))-alternating; lower bound on pc
long alternating_certificate(const PeriodicFunction& u);

// ---------- interval words / loop words ----------

// words u_1..u_n such that shifted products u_1^{(p_1)} (u_1^{-1})^{(q_1)}
// ... keep complexity >= k whenever (p) != (q); u_1 doubles a base word with
// complexity >= k, u_i stretches u_1 so distinct words meet in <= 1 point
std::vector<PeriodicFunction> interval_words(int n, int k, const Element& a);

struct LoopWordFamily {
  int m = 0;
  std::vector<std::pair<int, int>> loops;
  std::vector<PeriodicFunction> f; // size m+1, placed along t once embedded
  long width = 0;                  // supp(f_i) within [0, width-1]
  int pc_target = 0;
  bool heuristic = false;          // pc_target below the prescribed 2m+1
};

// f_0..f_m over <a> with: h_1..h_m = 1 and all loop windows trivial iff
// f_0 h_1 f_1 ... h_m f_m = 1; pc_target <= 0 selects the prescribed 2m+1
LoopWordFamily loop_words(int m, const std::vector<std::pair<int, int>>& loops,
                          const Element& a, const Element& t, int pc_target);

// ---------- positive instances over H -> knapsack over G wr H ----------

struct WreathReduction {
  KpInstance inst; // plain KP over G wr H
  LoopWordFamily words;
};

// loop constraints of a KP+ instance absorbed into interleaved loop words;
// all word values lie in <a>, so any base group with a != 1 works
WreathReduction kpplus_to_wreath(const KpInstance& kpplus, const Element& a,
                                 const Element& t, int pc_target);

// ---------- full instances over H -> knapsack family over G wr H ----------

struct AtomTameness {
  bool value_in_a = false;                // tau value lies in <a>
  Commensurable::Result period_vs_t = Commensurable::None;
  bool tame = false;
};

struct KppmWreathReduction {
  GroupRef wg;
  std::vector<Atom> ehat;                 // m atoms, no loop words yet
  std::vector<std::pair<int, int>> loops; // induced loop pairs on [0,m]
  LoopWordFamily words;                   // built for those pairs
  Element t;
  long n = 0, d = 0, m = 0;
  Int shift_bound;                        // width * m^2
  std::vector<Int> block_shifts;          // s per block, construction order
  std::vector<AtomTameness> tameness;     // one entry per atom of ehat
  bool all_tame = false;
};

// commutator construction: every disjointness pair (i,j) spawns shifted
// blocks E_{i,a,s} E_{j,b,s} E_{i,a^-1,s} E_{j,b^-1,s} whose placements
// cancel exactly when the i-th and j-th subwalks are disjoint; the input
// must be normalized (torsion-free and orthogonalized)
KppmWreathReduction kppm_to_wreath(const KpInstance& inst, const Element& a,
                                   const Element& b, const Element& t,
                                   int pc_target);
// family member: loop words conjugated by t^r
KpInstance kppm_member(const KppmWreathReduction& red, const Int& r);

// ---------- parallel shift search ----------

// smallest r in [0, max|F_i| * m * max|A_i|] with (r+F_i) disjoint from A_i
long find_shift(const std::vector<std::vector<long>>& F,
                const std::vector<std::vector<long>>& A);

}  // namespace gkp
