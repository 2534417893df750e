#include "kleinlab/io.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "kleinlab/error.hpp"
#include "kleinlab/format.hpp"

namespace kleinlab {

namespace {

using Path = std::vector<std::string>;

std::string join(const Path& p) {
  std::string s;
  for (const auto& t : p) s += "/" + t;
  return s.empty() ? "/" : s;
}

bool is_index(const std::string& t) { return !t.empty() && t.find_first_not_of("0123456789") == std::string::npos; }

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const Path& path, const std::string& msg) const {
    std::string where = "field " + join(path);
    if (const auto line = line_of(path)) where += " (line " + std::to_string(*line) + ")";
    throw Error(ErrorCode::schema, where + ": " + msg);
  }

  void keys(const Json& obj, const Path& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) fail(child(path, k), "unknown field");
    }
  }

  const Json& required(const Json& obj, const Path& path, const char* key) const {
    if (!obj.contains(key)) fail(child(path, key), "missing required field");
    return obj.at(key);
  }

  double number(const Json& v, const Path& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(path, "must be finite");
    return x;
  }

  double positive(const Json& v, const Path& path) const {
    const double x = number(v, path);
    if (!(x > 0.0)) fail(path, "must be positive");
    return x;
  }

  std::uint64_t count(const Json& v, const Path& path) const {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      fail(path, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  Vec vec(const Json& v, const Path& path, std::size_t size) const {
    if (!v.is_array()) fail(path, "expected an array of numbers");
    if (v.size() != size) fail(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(v.size()));
    Vec out(static_cast<Eigen::Index>(size));
    for (std::size_t i = 0; i < size; ++i) out[static_cast<Eigen::Index>(i)] = number(v[i], child(path, i));
    return out;
  }

  Mat mat(const Json& v, const Path& path, std::size_t rows, std::size_t cols) const {
    if (!v.is_array() || v.size() != rows) fail(path, "expected " + std::to_string(rows) + " rows");
    Mat out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) out.row(static_cast<Eigen::Index>(i)) = vec(v[i], child(path, i), cols);
    return out;
  }

  static Path child(const Path& p, const std::string& k) {
    Path c = p;
    c.push_back(k);
    return c;
  }
  static Path child(const Path& p, std::size_t i) { return child(p, std::to_string(i)); }

 private:
  // Line of the key named by the path: keys are searched in order, an index
  // k skips to the (k+1)-th occurrence of the following key.
  std::optional<std::size_t> line_of(const Path& path) const {
    std::size_t pos = 0, skip = 0;
    bool found = false;
    for (const auto& t : path) {
      if (is_index(t)) {
        skip = std::stoul(t);
        continue;
      }
      const std::string quoted = "\"" + t + "\"";
      std::size_t p = text_.find(quoted, pos);
      for (std::size_t k = 0; k < skip && p != std::string::npos; ++k) p = text_.find(quoted, p + 1);
      skip = 0;
      if (p == std::string::npos) break;
      pos = p;
      found = true;
    }
    if (!found) return std::nullopt;
    return 1 + static_cast<std::size_t>(std::count(text_.begin(), text_.begin() + static_cast<long>(pos), '\n'));
  }

  const std::string& text_;
};

SphericalCap read_cap(const Reader& r, const Json& v, const Path& path, std::size_t n) {
  r.keys(v, path, {"center", "angle", "chordal_radius"});
  const Vec c = r.vec(r.required(v, path, "center"), Reader::child(path, "center"), n + 1);
  if (std::abs(c.norm() - 1.0) > 1e-9) r.fail(Reader::child(path, "center"), "must be a unit vector");
  const SpherePoint center = SpherePoint::normalized(c);
  const bool has_angle = v.contains("angle"), has_chord = v.contains("chordal_radius");
  if (has_angle == has_chord) r.fail(path, "give exactly one of angle, chordal_radius");
  try {
    if (has_angle) return SphericalCap(center, r.positive(v.at("angle"), Reader::child(path, "angle")));
    return SphericalCap::from_chordal_radius(center,
                                             r.positive(v.at("chordal_radius"), Reader::child(path, "chordal_radius")));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::schema) throw;
    r.fail(path, e.what());
  }
}

MobiusMap read_map(const Reader& r, const Json& v, const Path& path, std::size_t n, bool allow_inverse) {
  if (allow_inverse) {
    r.keys(v, path, {"inversion", "pole", "scale", "rotation", "offset", "inverse"});
  } else {
    r.keys(v, path, {"inversion", "pole", "scale", "rotation", "offset"});
  }
  bool inversion = false;
  if (v.contains("inversion")) {
    if (!v.at("inversion").is_boolean()) r.fail(Reader::child(path, "inversion"), "expected true or false");
    inversion = v.at("inversion").get<bool>();
  }
  const auto dim = static_cast<Eigen::Index>(n);
  const Vec a = v.contains("pole") ? r.vec(v.at("pole"), Reader::child(path, "pole"), n) : Vec::Zero(dim);
  const double scale = v.contains("scale") ? r.positive(v.at("scale"), Reader::child(path, "scale")) : 1.0;
  const Mat A = v.contains("rotation") ? r.mat(v.at("rotation"), Reader::child(path, "rotation"), n, n)
                                       : Mat::Identity(dim, dim);
  const Vec b = v.contains("offset") ? r.vec(v.at("offset"), Reader::child(path, "offset"), n) : Vec::Zero(dim);
  try {
    return MobiusMap(inversion, a, scale, A, b);
  } catch (const Error& e) {
    r.fail(path, e.what());
  }
}

}  // namespace

GroupFile parse_group_file(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw Error(ErrorCode::schema, "line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  const Reader r(text);
  const Path root;
  r.keys(doc, root, {"format", "dimension", "kind", "generators", "ball_pairs", "cusp_ends", "seed", "depths",
                     "epsilon0", "tolerances"});

  const Json& fmt = r.required(doc, root, "format");
  if (!fmt.is_number_integer() || fmt.get<std::int64_t>() != 1) r.fail({"format"}, "unsupported format (expected 1)");

  GroupFile f;
  const auto dim = r.count(r.required(doc, root, "dimension"), {"dimension"});
  if (dim < 1 || dim > 16) r.fail({"dimension"}, "must lie in 1..16");
  f.dimension = static_cast<std::size_t>(dim);
  const std::size_t n = f.dimension;

  const Json& kind = r.required(doc, root, "kind");
  const std::string k = kind.is_string() ? kind.get<std::string>() : "";
  if (k == "schottky") {
    f.kind = GroupKind::schottky;
  } else if (k == "cyclic") {
    f.kind = GroupKind::cyclic;
  } else if (k == "custom") {
    f.kind = GroupKind::custom;
  } else {
    r.fail({"kind"}, "expected \"schottky\", \"cyclic\" or \"custom\"");
  }

  if (f.kind == GroupKind::schottky) {
    if (doc.contains("generators")) r.fail({"generators"}, "schottky groups are given by ball_pairs");
    const Json& pairs = r.required(doc, root, "ball_pairs");
    if (!pairs.is_array() || pairs.empty()) r.fail({"ball_pairs"}, "expected a nonempty array");
    std::vector<CapPair> caps;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Path p{"ball_pairs", std::to_string(i)};
      r.keys(pairs[i], p, {"source", "target"});
      caps.push_back({read_cap(r, r.required(pairs[i], p, "source"), Reader::child(p, "source"), n),
                      read_cap(r, r.required(pairs[i], p, "target"), Reader::child(p, "target"), n)});
    }
    if (n < 2) r.fail({"dimension"}, "schottky groups need dimension >= 2");
    f.group = GroupPresentation::schottky(caps);
  } else {
    if (doc.contains("ball_pairs")) r.fail({"ball_pairs"}, "only schottky groups take ball_pairs");
    const Json& gens = r.required(doc, root, "generators");
    if (!gens.is_array() || gens.empty()) r.fail({"generators"}, "expected a nonempty array");
    if (f.kind == GroupKind::cyclic && gens.size() != 1) r.fail({"generators"}, "cyclic groups take one generator");
    std::vector<MobiusMap> maps;
    std::vector<std::optional<MobiusMap>> invs;
    for (std::size_t i = 0; i < gens.size(); ++i) {
      const Path p{"generators", std::to_string(i)};
      maps.push_back(read_map(r, gens[i], p, n, f.kind == GroupKind::custom));
      if (gens[i].contains("inverse")) {
        invs.push_back(read_map(r, gens[i].at("inverse"), Reader::child(p, "inverse"), n, false));
      } else {
        invs.push_back(std::nullopt);
      }
    }
    f.group = f.kind == GroupKind::cyclic ? GroupPresentation::cyclic(maps[0]) : GroupPresentation::custom(maps, invs);
  }

  if (doc.contains("cusp_ends")) {
    const Json& ends = doc.at("cusp_ends");
    if (!ends.is_array()) r.fail({"cusp_ends"}, "expected an array");
    for (std::size_t i = 0; i < ends.size(); ++i) {
      const Path p{"cusp_ends", std::to_string(i)};
      r.keys(ends[i], p, {"m", "radius", "volume_k", "lattice"});
      CuspEnd e;
      e.n = n;
      e.m = static_cast<std::size_t>(r.count(r.required(ends[i], p, "m"), Reader::child(p, "m")));
      e.radius = r.positive(r.required(ends[i], p, "radius"), Reader::child(p, "radius"));
      e.volume_k = r.positive(r.required(ends[i], p, "volume_k"), Reader::child(p, "volume_k"));
      if (e.m < 1 || e.m + 1 > n) r.fail(Reader::child(p, "m"), "must lie in 1..dimension-1");
      if (ends[i].contains("lattice")) {
        e.lattice = r.mat(ends[i].at("lattice"), Reader::child(p, "lattice"), n - e.m, n - e.m);
      }
      try {
        e.validate();
      } catch (const Error& err) {
        r.fail(p, err.what());
      }
      f.cusp_ends.push_back(e);
    }
  }

  if (doc.contains("seed")) f.seed = r.count(doc.at("seed"), {"seed"});
  if (doc.contains("depths")) {
    const Json& d = doc.at("depths");
    if (!d.is_array() || d.empty()) r.fail({"depths"}, "expected a nonempty array of depths");
    f.depths.clear();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto v = r.count(d[i], {"depths", std::to_string(i)});
      if (v > 12) r.fail({"depths", std::to_string(i)}, "depth above 12");
      if (!f.depths.empty() && v <= f.depths.back()) r.fail({"depths"}, "must be strictly increasing");
      f.depths.push_back(static_cast<std::size_t>(v));
    }
  }
  if (doc.contains("epsilon0")) {
    f.epsilon0 = r.positive(doc.at("epsilon0"), {"epsilon0"});
    if (f.epsilon0 > 0.5) r.fail({"epsilon0"}, "must not exceed 0.5");
  }
  if (doc.contains("tolerances")) {
    const Json& t = doc.at("tolerances");
    r.keys(t, {"tolerances"}, {"invariance", "volume_change", "agreement", "dimension_margin"});
    auto get = [&](const char* key, double& out) {
      if (t.contains(key)) out = r.positive(t.at(key), {"tolerances", key});
    };
    get("invariance", f.tolerances.invariance);
    get("volume_change", f.tolerances.volume_change);
    get("agreement", f.tolerances.agreement);
    get("dimension_margin", f.tolerances.dimension_margin);
  }
  return f;
}

GroupFile load_group_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::schema, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_group_file(ss.str());
}

namespace {

void emit(std::ostream& os, const Json& j, int indent, int level) {
  const std::string pad = indent > 0 ? std::string(static_cast<std::size_t>(indent * (level + 1)), ' ') : "";
  const std::string close = indent > 0 ? std::string(static_cast<std::size_t>(indent * level), ' ') : "";
  const char* nl = indent > 0 ? "\n" : "";
  const char* sep = indent > 0 ? ": " : ":";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{' << nl;
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad << Json(k).dump() << sep;
        emit(os, v, indent, level + 1);
      }
      os << nl << close << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[' << nl;
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ',' << nl;
        os << pad;
        emit(os, j[i], indent, level + 1);
      }
      os << nl << close << ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v)) {
        os << fmt17(v);
      } else {
        os << "null";
      }
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace

void write_json(std::ostream& os, const Json& j, int indent) {
  emit(os, j, indent, 0);
  os << '\n';
}

std::string to_json_string(const Json& j, int indent) {
  std::ostringstream os;
  emit(os, j, indent, 0);
  return os.str();
}

}  // namespace kleinlab
