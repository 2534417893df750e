#pragma once

// Finitely generated groups of Möbius maps: presentations, reduced-word
// enumeration, orbit counting and the Poincaré series at the ball origin.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kleinlab/mobius.hpp"
#include "kleinlab/stats.hpp"

namespace kleinlab {

enum class GroupKind { schottky, cyclic, custom };
const char* to_string(GroupKind k) noexcept;

/// Generator i (1-based letter +i) maps the exterior of `source` onto the
/// interior of `target`; letter −i does the reverse.
struct CapPair {
  SphericalCap source;
  SphericalCap target;
};

/// Signed generator indices: +i is g_i, −i its inverse (i ≥ 1).
using Word = std::vector<int>;
std::string to_string(const Word& w);

class GroupPresentation {
 public:
  /// Ping-pong construction; throws invalid_group when two of the 2k caps
  /// have intersecting or tangent closures (the message names the pair).
  static GroupPresentation schottky(const std::vector<CapPair>& pairs);
  static GroupPresentation cyclic(const MobiusMap& g);
  /// Inverses are computed when absent; supplied ones must match to 1e-10.
  static GroupPresentation custom(const std::vector<MobiusMap>& generators,
                                  const std::vector<std::optional<MobiusMap>>& inverses = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t rank() const noexcept { return gens_.size(); }
  GroupKind kind() const noexcept { return kind_; }
  const MobiusMap& generator(std::size_t i) const { return gens_.at(i); }
  /// Map of a signed letter.
  const MobiusMap& letter(int l) const;
  /// Letters in enumeration order: +1, −1, +2, −2, …
  const std::vector<int>& alphabet() const noexcept { return alphabet_; }

  const std::vector<CapPair>& cap_pairs() const noexcept { return pairs_; }
  /// Schottky only: the cap that letter l maps the complement of its
  /// opposite cap into (D(+i) = target_i, D(−i) = source_i).
  const SphericalCap& letter_cap(int l) const;

  /// Elementary: finite or virtually cyclic, detected as "no two loxodromic
  /// elements of length ≤ 2 with different fixed-point pairs".
  bool is_elementary() const noexcept { return elementary_; }

  /// Conjugate presentation δ G δ⁻¹ (caps are carried along when possible).
  GroupPresentation conjugated(const MobiusMap& delta) const;

 private:
  GroupPresentation() = default;
  void finish();

  std::size_t dim_ = 0;
  GroupKind kind_ = GroupKind::custom;
  std::vector<MobiusMap> gens_;
  std::vector<MobiusMap> invs_;
  std::vector<int> alphabet_;
  std::vector<CapPair> pairs_;
  bool elementary_ = true;
};

/// The reference Schottky group: two pairs of caps of chordal radius 0.1 on
/// S^n centered at ±e₁ and ±e₂ (pairs (e₁, −e₁) and (e₂, −e₂)).
GroupPresentation reference_schottky(std::size_t n = 2);

struct Element {
  Word word;
  MobiusMap map;
  /// Index of the element for the word without its last letter (self for the identity).
  std::size_t parent = 0;
};

/// Distinct elements of word length ≤ max_len in (length, lexicographic)
/// order with letters ordered as in alphabet(). Duplicates (up to the
/// identity tolerance) keep their first word and are not extended; for
/// Schottky groups a duplicate throws collision.
std::vector<Element> enumerate_elements(const GroupPresentation& g, std::size_t max_len);

/// Images of base under the enumerated elements, deduplicated at the given
/// chordal tolerance.
std::vector<ExtPoint> orbit(const GroupPresentation& g, const ExtPoint& base, std::size_t max_len,
                            double tolerance = 1e-12);

/// ρ(x, γ̂x) evaluated through the half-space model.
double displacement(const BallPoint& x, const MobiusMap& g);

/// Displacements ρ(0, γ̂0) of the enumerated elements.
struct OrbitProfile {
  std::vector<double> distances;  // sorted ascending
  /// Minimum over words of length exactly max_len; counts are exact below it.
  double horizon = 0.0;
  std::size_t max_len = 0;
};
OrbitProfile orbit_profile(const GroupPresentation& g, std::size_t max_len);

struct OrbitCount {
  std::size_t count = 0;
  double horizon = 0.0;
  bool reliable = true;  // R ≤ horizon
};
OrbitCount orbit_count(const OrbitProfile& p, double radius);
OrbitCount orbit_count(const GroupPresentation& g, double radius, std::size_t max_len);

double poincare_series(const OrbitProfile& p, double s);
double poincare_series(const GroupPresentation& g, double s, std::size_t max_len);

struct ExponentEstimate {
  double delta = 0.0;
  double stderr_ = 0.0;
  double r_min = 0.0, r_max = 0.0;  // fit window
  std::size_t samples = 0;
  bool elementary = false;
};
/// Least-squares slope of log N(R) over R ∈ [R of the 10th element, horizon].
/// Returns 0 for elementary groups; throws insufficient_data with fewer than
/// five usable R samples.
ExponentEstimate critical_exponent(const OrbitProfile& p, bool elementary);
ExponentEstimate critical_exponent(const GroupPresentation& g, std::size_t max_len);

struct MargulisResult {
  bool inside = false;
  double min_displacement = 0.0;  // over enumerated non-identity elements
  double horizon = 0.0;
};
inline constexpr double kDefaultMargulisConstant = 0.1;
MargulisResult margulis_region_test(const BallPoint& x, const GroupPresentation& g, double epsilon,
                                    std::size_t max_len);

}  // namespace kleinlab
