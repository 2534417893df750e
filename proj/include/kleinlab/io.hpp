#pragma once

// Group-definition files (strict JSON, "format": 1) and report emission.
//
//   {
//     "format": 1,
//     "dimension": 2,
//     "kind": "schottky" | "cyclic" | "custom",
//     "ball_pairs": [{"source": CAP, "target": CAP}, ...],        schottky
//     "generators": [MAP, ...],                                    cyclic / custom
//     "cusp_ends": [{"m": 1, "radius": 1, "volume_k": 1, "lattice": [[...]]}],
//     "seed": 1, "depths": [5, 6], "epsilon0": 0.1,
//     "tolerances": {"invariance": 1e-6, "volume_change": 0.05,
//                    "agreement": 0.1, "dimension_margin": 0.3}
//   }
//
// CAP = {"center": [n+1 numbers], "angle": θ} or {"center": …, "chordal_radius": r}.
// MAP = {"inversion": bool, "pole": [n], "scale": r, "rotation": [[n×n]],
//        "offset": [n], "inverse": MAP}; every key optional (identity parts),
// "inverse" only on generators of custom groups.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kleinlab/cusp.hpp"
#include "kleinlab/group.hpp"

namespace kleinlab {

struct Tolerances {
  double invariance = 1e-6;
  double volume_change = 0.05;
  double agreement = 0.1;
  double dimension_margin = 0.3;
};

struct GroupFile {
  std::size_t dimension = 0;
  GroupKind kind = GroupKind::custom;
  std::optional<GroupPresentation> group;
  std::vector<CuspEnd> cusp_ends;
  std::uint64_t seed = 1;
  std::vector<std::size_t> depths{5, 6};
  double epsilon0 = 0.1;
  Tolerances tolerances;
};

/// Throws Error(schema) for malformed documents (the message carries the
/// field path and the line where it appears) and Error(invalid_group) when
/// the presentation breaks its invariants.
GroupFile parse_group_file(const std::string& text);
GroupFile load_group_file(const std::string& path);

using Json = nlohmann::ordered_json;

/// JSON with every float written with 17 significant digits and
/// non-finite values as null. write_json ends with a newline.
void write_json(std::ostream& os, const Json& j, int indent = 2);
std::string to_json_string(const Json& j, int indent = 2);

}  // namespace kleinlab
