#include "config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace kreg::app {
namespace {

using nlohmann::json;

/// Cursor over one JSON object that remembers its pointer path and which
/// keys were consumed, so leftovers can be reported as unknown fields.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(display(), "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(child(key), "required field is missing");
    return j_.at(key);
  }

  std::string child(const std::string& key) const { return path_ + "/" + key; }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(child(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(child(key), "expected a finite number");
    return d;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::int64_t integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(child(key), "expected an integer");
    return v.get<std::int64_t>();
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(child(key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(child(key), "expected a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array() || v.size() != 3) throw ConfigError(child(key), "expected an array of 3 numbers");
    Vec3 out{};
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw ConfigError(child(key) + "/" + std::to_string(i), "expected a number");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  const json& array(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(child(key), "expected an array");
    return v;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(child(item.key()), "unknown field");
  }

 private:
  std::string display() const { return path_.empty() ? "/" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& path, const std::string& what) {
  if (!ok) throw ConfigError(path, what);
}

forward::Primitive parse_primitive(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  forward::Primitive p;
  const std::string type = r.string("type");
  if (type == "sphere") {
    p.kind = forward::PrimitiveKind::sphere;
    const double radius = r.number("radius_vox");
    p.radii = {radius, radius, radius};
  } else if (type == "ellipsoid") {
    p.kind = forward::PrimitiveKind::ellipsoid;
    p.radii = r.vec3("radii_vox");
  } else if (type == "cylinder") {
    p.kind = forward::PrimitiveKind::cylinder;
    const double radius = r.number("radius_vox");
    p.radii = {radius, radius, radius};
    p.axis = r.vec3("axis");
    p.half_length = r.number("half_length_vox");
  } else {
    throw ConfigError(r.child("type"), "expected one of sphere, ellipsoid, cylinder");
  }
  p.center = r.vec3("center_vox");
  p.chi_ppm = r.number("chi_ppm");
  p.magnitude = r.number("magnitude", 1.0);
  r.finish();
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
  return p;
}

json primitive_to_json(const forward::Primitive& p) {
  json j;
  switch (p.kind) {
    case forward::PrimitiveKind::sphere:
      j["type"] = "sphere";
      j["radius_vox"] = p.radii[0];
      break;
    case forward::PrimitiveKind::ellipsoid:
      j["type"] = "ellipsoid";
      j["radii_vox"] = p.radii;
      break;
    case forward::PrimitiveKind::cylinder:
      j["type"] = "cylinder";
      j["radius_vox"] = p.radii[0];
      j["axis"] = p.axis;
      j["half_length_vox"] = p.half_length;
      break;
  }
  j["center_vox"] = p.center;
  j["chi_ppm"] = p.chi_ppm;
  j["magnitude"] = p.magnitude;
  return j;
}

ProtocolConfig parse_protocol(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ProtocolConfig p;
  p.name = r.string("name");
  p.euler_deg = r.vec3("euler_deg");
  p.voxel_mm = r.vec3("voxel_mm");
  for (int i = 0; i < 3; ++i)
    require(p.voxel_mm[i] > 0.0, r.child("voxel_mm") + "/" + std::to_string(i), "must be positive");
  p.noise_sigma = r.number("noise_sigma");
  require(p.noise_sigma >= 0.0, r.child("noise_sigma"), "must be non-negative");
  p.seed = r.unsigned_integer("seed");
  if (r.has("methods")) {
    const json& m = r.array("methods");
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string where = r.child("methods") + "/" + std::to_string(i);
      require(m[i].is_string(), where, "expected a string");
      try {
        p.methods.push_back(method_from_string(m[i].get<std::string>()));
      } catch (const InvalidArgument& e) {
        throw ConfigError(where, e.what());
      }
    }
  }
  r.finish();
  return p;
}

}  // namespace

std::string to_string(Method m) {
  switch (m) {
    case Method::none: return "none";
    case Method::ireg: return "ireg";
    case Method::kreg: return "kreg";
  }
  return "none";
}

Method method_from_string(const std::string& s) {
  if (s == "none") return Method::none;
  if (s == "ireg") return Method::ireg;
  if (s == "kreg") return Method::kreg;
  throw InvalidArgument("unknown method '" + s + "' (expected kreg, ireg or none)");
}

bool ProtocolConfig::is_reference_geometry(double iso_voxel_mm) const {
  for (int i = 0; i < 3; ++i) {
    if (euler_deg[i] != 0.0) return false;
    if (std::abs(voxel_mm[i] - iso_voxel_mm) > 1e-12 * iso_voxel_mm) return false;
  }
  return true;
}

geometry::ProtocolDescriptor PipelineConfig::descriptor(const ProtocolConfig& p) const {
  geometry::ProtocolDescriptor d;
  d.rotation = geometry::rotation_from_euler(p.euler_deg[0], p.euler_deg[1], p.euler_deg[2]);
  d.voxel_sizes = p.voxel_mm;
  d.fov_mm = reference.iso_voxel_mm * static_cast<double>(reference.matrix);
  for (int i = 0; i < 3; ++i) {
    const double n = std::round(d.fov_mm / p.voxel_mm[i]);
    if (n < 4.0) throw InvalidArgument("protocol '" + p.name + "' has fewer than 4 voxels along an axis");
    d.matrix_dims[i] = static_cast<std::size_t>(n);
  }
  d.echo_times_s = echo_times_s;
  d.field_strength_T = field_strength_T;
  return d;
}

geometry::ProtocolDescriptor PipelineConfig::reference_descriptor() const {
  ProtocolConfig p;
  p.name = "reference";
  p.voxel_mm = {reference.iso_voxel_mm, reference.iso_voxel_mm, reference.iso_voxel_mm};
  return descriptor(p);
}

forward::PhysicsConstants PipelineConfig::constants() const {
  forward::PhysicsConstants c;
  c.field_strength_T = field_strength_T;
  return c;
}

qsm::ChainConfig PipelineConfig::chain() const {
  qsm::ChainConfig c;
  c.tkd = tkd;
  c.constants = constants();
  c.support_fraction = support_fraction;
  return c;
}

std::vector<Method> PipelineConfig::methods_for(std::size_t index) const {
  if (index == 0) return {};
  const ProtocolConfig& p = protocols.at(index);
  if (!p.methods.empty()) return p.methods;
  if (p.is_reference_geometry(reference.iso_voxel_mm)) return {Method::none};
  return {Method::none, Method::ireg, Method::kreg};
}

PipelineConfig parse_config(const json& j) {
  ObjectReader root(j, "");
  PipelineConfig cfg;

  const std::int64_t schema = root.integer("schema");
  require(schema == kSchemaVersion, "/schema", "unsupported schema version " + std::to_string(schema));

  {
    ObjectReader r(root.at("reference"), "/reference");
    cfg.reference.iso_voxel_mm = r.number("iso_voxel_mm");
    require(cfg.reference.iso_voxel_mm > 0.0, "/reference/iso_voxel_mm", "must be positive");
    const std::int64_t m = r.integer("matrix");
    require(m >= 16 && m % 2 == 0, "/reference/matrix", "must be an even integer >= 16");
    cfg.reference.matrix = static_cast<std::size_t>(m);
    r.finish();
  }

  if (root.has("master_factor")) {
    const std::int64_t f = root.integer("master_factor");
    require(f >= 1 && f <= 4, "/master_factor", "must be an integer in [1, 4]");
    cfg.master_factor = static_cast<int>(f);
  }

  const json& protocols = root.array("protocols");
  require(protocols.size() >= 2, "/protocols",
          "need the reference scan plus at least one test protocol");
  for (std::size_t i = 0; i < protocols.size(); ++i)
    cfg.protocols.push_back(parse_protocol(protocols[i], "/protocols/" + std::to_string(i)));
  require(cfg.protocols[0].is_reference_geometry(cfg.reference.iso_voxel_mm), "/protocols/0",
          "the first protocol is the reference scan and must use reference geometry");
  require(cfg.protocols[0].methods.empty(), "/protocols/0/methods",
          "the reference scan has no registration arms");
  {
    std::set<std::string> names;
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < cfg.protocols.size(); ++i) {
      const std::string at = "/protocols/" + std::to_string(i);
      require(names.insert(cfg.protocols[i].name).second, at + "/name", "duplicate protocol name");
      require(seeds.insert(cfg.protocols[i].seed).second, at + "/seed",
              "seeds must be distinct so repeated scans get independent noise");
    }
  }

  {
    ObjectReader r(root.at("phantom"), "/phantom");
    cfg.phantom.background_chi_ppm = r.number("background_chi_ppm", 0.0);
    cfg.phantom.background_magnitude = r.number("background_magnitude", 0.0);
    const json& prims = r.array("primitives");
    for (std::size_t i = 0; i < prims.size(); ++i)
      cfg.phantom.primitives.push_back(parse_primitive(prims[i], "/phantom/primitives/" + std::to_string(i)));
    r.finish();
  }

  if (root.has("gridding")) {
    ObjectReader r(root.at("gridding"), "/gridding");
    const std::int64_t w = r.has("kernel_width") ? r.integer("kernel_width") : 6;
    const double osf = r.number("oversampling", 2.0);
    r.finish();
    try {
      cfg.gridding = nufft::GriddingConfig(static_cast<int>(w), osf);
      cfg.gridding.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("/gridding", e.what());
    }
  }

  if (root.has("tkd")) {
    ObjectReader r(root.at("tkd"), "/tkd");
    cfg.tkd.threshold = r.number("threshold");
    r.finish();
    try {
      cfg.tkd.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError("/tkd/threshold", e.what());
    }
  }

  if (root.has("support_fraction")) {
    cfg.support_fraction = root.number("support_fraction");
    require(cfg.support_fraction >= 0.0 && cfg.support_fraction < 1.0, "/support_fraction",
            "must be in [0, 1)");
  }

  if (root.has("echo_times_s")) {
    const json& te = root.array("echo_times_s");
    require(!te.empty(), "/echo_times_s", "need at least one echo");
    cfg.echo_times_s.clear();
    for (std::size_t i = 0; i < te.size(); ++i) {
      const std::string at = "/echo_times_s/" + std::to_string(i);
      require(te[i].is_number(), at, "expected a number");
      const double t = te[i].get<double>();
      require(t > 0.0, at, "must be positive");
      require(i == 0 || t > cfg.echo_times_s.back(), at, "echo times must increase");
      cfg.echo_times_s.push_back(t);
    }
  }

  cfg.field_strength_T = root.number("field_strength_T", 3.0);
  require(cfg.field_strength_T > 0.0, "/field_strength_T", "must be positive");
  if (root.has("output_dir")) cfg.output_dir = root.string("output_dir");

  root.finish();

  for (std::size_t i = 0; i < cfg.protocols.size(); ++i) {
    try {
      (void)cfg.descriptor(cfg.protocols[i]);
    } catch (const InvalidArgument& e) {
      throw ConfigError("/protocols/" + std::to_string(i), e.what());
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json to_json(const PipelineConfig& cfg) {
  json j;
  j["schema"] = kSchemaVersion;
  j["reference"] = {{"iso_voxel_mm", cfg.reference.iso_voxel_mm}, {"matrix", cfg.reference.matrix}};
  j["master_factor"] = cfg.master_factor;
  j["protocols"] = json::array();
  for (const auto& p : cfg.protocols) {
    json jp{{"name", p.name},
            {"euler_deg", p.euler_deg},
            {"voxel_mm", p.voxel_mm},
            {"noise_sigma", p.noise_sigma},
            {"seed", p.seed}};
    if (!p.methods.empty()) {
      jp["methods"] = json::array();
      for (Method m : p.methods) jp["methods"].push_back(to_string(m));
    }
    j["protocols"].push_back(jp);
  }
  json prims = json::array();
  for (const auto& p : cfg.phantom.primitives) prims.push_back(primitive_to_json(p));
  j["phantom"] = {{"background_chi_ppm", cfg.phantom.background_chi_ppm},
                  {"background_magnitude", cfg.phantom.background_magnitude},
                  {"primitives", prims}};
  j["gridding"] = {{"kernel_width", cfg.gridding.kernel_width}, {"oversampling", cfg.gridding.oversampling}};
  j["tkd"] = {{"threshold", cfg.tkd.threshold}};
  j["support_fraction"] = cfg.support_fraction;
  j["echo_times_s"] = cfg.echo_times_s;
  j["field_strength_T"] = cfg.field_strength_T;
  j["output_dir"] = cfg.output_dir;
  return j;
}

}  // namespace kreg::app
