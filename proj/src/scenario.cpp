#include "shapemg/scenario.hpp"

#include "shapemg/generators.hpp"
#include "shapemg/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

namespace shapemg {

namespace {

[[noreturn]] void reject(const std::string& msg) { throw ConfigError("config: " + msg); }

using Section = std::map<std::string, std::vector<std::string>>;

struct RawConfig {
  std::map<std::string, Section> sections;
};

RawConfig tokenize(std::istream& in) {
  RawConfig raw;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first.front() == '[') {
      if (first.back() != ']') reject("malformed section header at line " + std::to_string(lineno));
      section = first.substr(1, first.size() - 2);
      raw.sections[section];
      continue;
    }
    if (section.empty()) reject("key outside any section at line " + std::to_string(lineno));
    std::string eq;
    if (!(ls >> eq) || eq != "=")
      reject("expected 'key = value' at line " + std::to_string(lineno));
    std::vector<std::string> values;
    std::string tok;
    while (ls >> tok) values.push_back(tok);
    if (values.empty()) reject("missing value for '" + first + "' at line " + std::to_string(lineno));
    if (!raw.sections[section].emplace(first, values).second)
      reject("duplicate key '" + first + "' in [" + section + "]");
  }
  return raw;
}

double to_double(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) reject("not a number: '" + s + "'");
  return v;
}

int to_int(const std::string& s) {
  size_t pos = 0;
  int v = std::stoi(s, &pos);
  if (pos != s.size()) reject("not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "1" || s == "true" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "no") return false;
  reject("not a boolean: '" + s + "'");
}

class SectionReader {
 public:
  SectionReader(const RawConfig& raw, const std::string& name) : name_(name) {
    auto it = raw.sections.find(name);
    if (it != raw.sections.end()) entries_ = &it->second;
  }

  bool has(const std::string& key) {
    if (!entries_) return false;
    seen_.insert(key);
    return entries_->count(key) > 0;
  }
  const std::vector<std::string>& values(const std::string& key) {
    seen_.insert(key);
    auto it = entries_->find(key);
    if (it == entries_->end()) reject("missing key '" + key + "' in [" + name_ + "]");
    return it->second;
  }
  std::string str(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    if (values(key).size() != 1) reject("'" + key + "' takes one value");
    return values(key)[0];
  }
  double num(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    if (values(key).size() != 1) reject("'" + key + "' takes one value");
    return to_double(values(key)[0]);
  }
  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    if (values(key).size() != 1) reject("'" + key + "' takes one value");
    return to_int(values(key)[0]);
  }
  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    if (values(key).size() != 1) reject("'" + key + "' takes one value");
    return to_bool(values(key)[0]);
  }
  void finish() {
    if (!entries_) return;
    for (auto& [key, v] : *entries_)
      if (seen_.count(key) == 0) reject("unknown key '" + key + "' in [" + name_ + "]");
  }

 private:
  std::string name_;
  const Section* entries_ = nullptr;
  std::set<std::string> seen_;
};

InclusionSpec parse_inclusion(const std::vector<std::string>& tokens) {
  InclusionSpec spec;
  if (tokens.empty()) reject("empty inclusion");
  const std::string& kind = tokens[0];
  auto need = [&](size_t n) {
    if (tokens.size() != n)
      reject("inclusion '" + kind + "' takes " + std::to_string(n - 1) + " parameters");
  };
  if (kind == "circle") {
    need(2);
    spec.kind = InclusionSpec::Kind::circle;
    spec.radius = to_double(tokens[1]);
  } else if (kind == "offset_circle") {
    need(4);
    spec.kind = InclusionSpec::Kind::offset_circle;
    spec.radius = to_double(tokens[1]);
    spec.offset << to_double(tokens[2]), to_double(tokens[3]);
  } else if (kind == "star") {
    if (tokens.size() < 4 || tokens.size() % 2 != 0)
      reject("star inclusion takes r0 followed by amplitude/lobes pairs");
    spec.kind = InclusionSpec::Kind::star;
    spec.radius = to_double(tokens[1]);
    for (size_t i = 2; i + 1 < tokens.size(); i += 2) {
      spec.amplitudes.push_back(to_double(tokens[i]));
      spec.lobes.push_back(to_int(tokens[i + 1]));
    }
  } else if (kind == "rough") {
    if (tokens.size() != 4 && tokens.size() != 6)
      reject("rough inclusion takes r amplitude seed [cx cy]");
    spec.kind = InclusionSpec::Kind::rough;
    spec.radius = to_double(tokens[1]);
    spec.rough_amplitude = to_double(tokens[2]);
    spec.seed = static_cast<unsigned>(to_int(tokens[3]));
    if (tokens.size() == 6) spec.offset << to_double(tokens[4]), to_double(tokens[5]);
  } else {
    reject("unknown inclusion kind '" + kind + "'");
  }
  return spec;
}

Eigen::VectorXd inclusion_radii(const InclusionSpec& spec, int directions) {
  switch (spec.kind) {
    case InclusionSpec::Kind::circle:
      return circle_radii(directions, spec.radius);
    case InclusionSpec::Kind::offset_circle:
      return offset_circle_radii(directions, spec.radius, spec.offset);
    case InclusionSpec::Kind::star:
      return star_radii(directions, spec.radius, spec.amplitudes, spec.lobes);
    case InclusionSpec::Kind::rough: {
      // Seeded roughness with one smoothing pass so the coarse polygon stays
      // meshable; excites the whole interface mode spectrum. An offset makes
      // it a kinky copy of the corresponding offset circle.
      Eigen::VectorXd base = spec.offset.isZero()
                                 ? circle_radii(directions, spec.radius)
                                 : offset_circle_radii(directions, spec.radius, spec.offset);
      std::mt19937 rng(spec.seed);
      std::uniform_real_distribution<double> uni(-1.0, 1.0);
      Eigen::VectorXd noise(directions);
      for (int i = 0; i < directions; ++i) noise[i] = uni(rng);
      Eigen::VectorXd radii(directions);
      for (int i = 0; i < directions; ++i) {
        double s = 0.5 * noise[i] +
                   0.25 * (noise[(i + directions - 1) % directions] + noise[(i + 1) % directions]);
        radii[i] = base[i] * (1.0 + spec.rough_amplitude * s);
      }
      return radii;
    }
    default:
      reject("o-grid geometry needs a radial inclusion");
  }
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& in) {
  RawConfig raw = tokenize(in);
  static const std::set<std::string> known_sections{
      "geometry",  "coefficients", "objective", "measurements",
      "optimizer", "solver",       "output",    "gradient_check", "study"};
  for (auto& [name, section] : raw.sections)
    if (known_sections.count(name) == 0) reject("unknown section [" + name + "]");

  ScenarioConfig cfg;

  {
    SectionReader g(raw, "geometry");
    std::string kind = g.str("kind", "ogrid");
    GeometryConfig& geo = cfg.geometry;
    if (kind == "ogrid") geo.kind = GeometryConfig::Kind::ogrid;
    else if (kind == "structured") geo.kind = GeometryConfig::Kind::structured;
    else if (kind == "structured3d") geo.kind = GeometryConfig::Kind::structured3d;
    else reject("unknown geometry kind '" + kind + "'");
    int dim = geo.kind == GeometryConfig::Kind::structured3d ? 3 : 2;
    geo.box_lo = Eigen::VectorXd::Zero(dim);
    geo.box_hi = Eigen::VectorXd::Ones(dim);
    if (g.has("box")) {
      auto& v = g.values("box");
      if (static_cast<int>(v.size()) != 2 * dim) reject("box takes 2*dim numbers");
      for (int c = 0; c < dim; ++c) {
        geo.box_lo[c] = to_double(v[c]);
        geo.box_hi[c] = to_double(v[dim + c]);
      }
    }
    geo.levels = g.integer("levels", 2);
    if (geo.levels < 1) reject("levels must be at least 1");
    geo.directions = g.integer("directions", 32);
    geo.rings_in = g.integer("rings_in", 3);
    geo.rings_out = g.integer("rings_out", 4);
    geo.snap_circle = g.flag("snap_circle", false);
    if (g.has("inclusion")) geo.inclusion = parse_inclusion(g.values("inclusion"));
    if (g.has("cells")) {
      auto& v = g.values("cells");
      if (static_cast<int>(v.size()) != dim) reject("cells takes dim integers");
      geo.cells.resize(dim);
      for (int c = 0; c < dim; ++c) geo.cells[c] = to_int(v[c]);
    } else {
      geo.cells = Eigen::VectorXi::Constant(dim, 4);
    }
    if (g.has("inclusion_cells")) {
      auto& v = g.values("inclusion_cells");
      if (static_cast<int>(v.size()) != 2 * dim) reject("inclusion_cells takes 2*dim integers");
      geo.inclusion.kind = InclusionSpec::Kind::cells;
      geo.inclusion.cells.i0 = to_int(v[0]);
      geo.inclusion.cells.j0 = to_int(v[1]);
      geo.inclusion.cells.i1 = to_int(v[dim]);
      geo.inclusion.cells.j1 = to_int(v[dim + 1]);
      if (dim == 3) {
        geo.inclusion.cells.k0 = to_int(v[2]);
        geo.inclusion.cells.k1 = to_int(v[5]);
      }
    }
    if (geo.kind == GeometryConfig::Kind::ogrid &&
        geo.inclusion.kind == InclusionSpec::Kind::none)
      reject("o-grid geometry needs an inclusion");
    if (geo.snap_circle && geo.inclusion.kind != InclusionSpec::Kind::circle)
      reject("snap_circle needs a circle inclusion");
    g.finish();
  }

  {
    SectionReader c(raw, "coefficients");
    cfg.coefficients.k_out = c.num("k_out", 1.0);
    cfg.coefficients.k_int = c.num("k_int", 1.0);
    cfg.coefficients.lambda_out = c.num("lambda_out", 0.01);
    cfg.coefficients.lambda_int = c.num("lambda_int", 0.01);
    cfg.coefficients.mu_out = c.num("mu_out", 0.1);
    cfg.coefficients.mu_int = c.num("mu_int", 0.1);
    c.finish();
  }

  {
    SectionReader o(raw, "objective");
    cfg.objective.nu1 = o.num("nu1", 0.0);
    cfg.objective.nu2 = o.num("nu2", 0.0);
    cfg.objective.nu3 = o.num("nu3", 0.0);
    cfg.objective.nu4 = o.num("nu4", 0.0);
    if (cfg.objective.nu1 < 0 || cfg.objective.nu2 < 0 || cfg.objective.nu3 < 0 ||
        cfg.objective.nu4 < 0)
      reject("objective weights must be non-negative");
    int dim = cfg.geometry.kind == GeometryConfig::Kind::structured3d ? 3 : 2;
    cfg.objective.f_top = Eigen::VectorXd::Zero(dim);
    cfg.objective.f_top[dim - 1] = -1.0;
    if (o.has("f_top")) {
      auto& v = o.values("f_top");
      if (static_cast<int>(v.size()) != dim) reject("f_top takes dim numbers");
      for (int c = 0; c < dim; ++c) cfg.objective.f_top[c] = to_double(v[c]);
    }
    cfg.objective.t_end = o.num("T", 15.0);
    cfg.objective.dt = o.num("dt", 1.5);
    std::string mode = o.str("measurement_mode", "instants");
    if (mode == "instants") cfg.objective.mode = MeasurementMode::instants;
    else if (mode == "integral") cfg.objective.mode = MeasurementMode::integral;
    else reject("unknown measurement_mode '" + mode + "'");
    if (cfg.objective.nu2 > 0.0) {
      try {
        step_count(cfg.objective.t_end, cfg.objective.dt);
      } catch (const std::exception& e) {
        reject(e.what());
      }
      if (cfg.objective.mode == MeasurementMode::instants && cfg.objective.steps() % 2 != 0)
        reject("instants mode needs an even number of time steps");
    }
    o.finish();
  }

  {
    SectionReader m(raw, "measurements");
    std::string source = m.str("source", "none");
    if (source == "none") cfg.measurements.source = MeasurementConfig::Source::none;
    else if (source == "nodal_self") cfg.measurements.source = MeasurementConfig::Source::nodal_self;
    else if (source == "synthesize") cfg.measurements.source = MeasurementConfig::Source::synthesize;
    else if (source == "rbf_files") cfg.measurements.source = MeasurementConfig::Source::rbf_files;
    else reject("unknown measurements source '" + source + "'");
    if (m.has("target_inclusion"))
      cfg.measurements.target_inclusion = parse_inclusion(m.values("target_inclusion"));
    cfg.measurements.centers_per_axis = m.integer("centers_per_axis", 16);
    cfg.measurements.ridge = m.num("ridge", 1e-10);
    cfg.measurements.epsilon = m.num("epsilon", 0.0);
    if (m.has("rbf_files")) cfg.measurements.rbf_files = m.values("rbf_files");
    if (cfg.objective.nu2 > 0.0 && cfg.measurements.source == MeasurementConfig::Source::none)
      reject("nu2 > 0 needs a measurements source");
    if (cfg.measurements.source == MeasurementConfig::Source::synthesize &&
        cfg.measurements.target_inclusion.kind == InclusionSpec::Kind::none)
      reject("synthesize needs a target_inclusion");
    if (cfg.measurements.source == MeasurementConfig::Source::rbf_files) {
      if (cfg.measurements.rbf_files.empty()) reject("rbf_files source needs file names");
      for (auto& f : cfg.measurements.rbf_files)
        if (!std::filesystem::exists(f)) reject("measurement file '" + f + "' does not exist");
    }
    m.finish();
  }

  {
    SectionReader o(raw, "optimizer");
    std::string mode = o.str("mode", "lbfgs");
    if (mode == "lbfgs") cfg.optimizer.mode = OptimizerMode::lbfgs;
    else if (mode == "gradient_descent") cfg.optimizer.mode = OptimizerMode::gradient_descent;
    else reject("unknown optimizer mode '" + mode + "'");
    cfg.optimizer.memory = o.integer("memory", 5);
    cfg.optimizer.max_iterations = o.integer("max_iterations", 50);
    cfg.optimizer.gs_tol_abs = o.num("gs_tol_abs", 0.0);
    cfg.optimizer.gs_tol_rel = o.num("gs_tol_rel", 0.0);
    cfg.optimizer.armijo_c1 = o.num("armijo_c1", 1e-4);
    cfg.optimizer.safeguard_gamma = o.num("safeguard_gamma", 0.3);
    cfg.optimizer.safeguard_beta = o.num("safeguard_beta", 0.5);
    cfg.optimizer.safeguard_cap = o.num("safeguard_cap", 1.0);
    cfg.optimizer.max_backtracks = o.integer("max_backtracks", 30);
    cfg.optimizer.metric_lambda = o.num("metric_lambda", 0.01);
    cfg.optimizer.metric_mu = o.num("metric_mu", 0.1);
    std::string form = o.str("perimeter_form", "surface");
    if (form == "surface") cfg.optimizer.perimeter_surface_form = true;
    else if (form == "volume") cfg.optimizer.perimeter_surface_form = false;
    else reject("perimeter_form must be surface or volume");
    cfg.optimizer.nu4_scale_with_h = o.flag("nu4_scale_with_h", false);
    cfg.optimizer.schedule.switch_after = o.integer("switch_after", -1);
    cfg.optimizer.schedule.nu4_after = o.num("nu4_after", 0.0);
    if (cfg.optimizer.memory < 0 || cfg.optimizer.memory > 5)
      reject("quasi-Newton memory must be between 0 and 5");
    if (cfg.optimizer.max_iterations < 1) reject("max_iterations must be positive");
    o.finish();
  }

  {
    SectionReader s(raw, "solver");
    cfg.solver.rtol = s.num("rtol", 1e-10);
    cfg.solver.max_iterations = s.integer("max_iterations", 500);
    int sweeps = s.integer("sweeps", 2);
    if (sweeps < 1) reject("smoother sweep count must be positive");
    cfg.solver.nu_pre = cfg.solver.nu_post = sweeps;
    cfg.solver.galerkin_coarse_operators = s.flag("galerkin", true);
    s.finish();
  }

  {
    SectionReader o(raw, "output");
    cfg.output_dir = o.str("dir", "out");
    cfg.write_vtk = o.flag("write_vtk", false);
    o.finish();
  }

  {
    SectionReader g(raw, "gradient_check");
    if (g.has("components")) cfg.gradient_check.components = g.values("components");
    else {
      if (cfg.objective.nu1 > 0) cfg.gradient_check.components.push_back("j1");
      if (cfg.objective.nu2 > 0) cfg.gradient_check.components.push_back("j2");
      if (cfg.objective.nu3 > 0) cfg.gradient_check.components.push_back("j3");
      if (cfg.objective.nu4 > 0) cfg.gradient_check.components.push_back("j4");
    }
    for (auto& c : cfg.gradient_check.components)
      if (c != "j1" && c != "j2" && c != "j3" && c != "j4")
        reject("unknown gradient component '" + c + "'");
    if (g.has("t_values")) {
      cfg.gradient_check.t_values.clear();
      for (auto& t : g.values("t_values")) cfg.gradient_check.t_values.push_back(to_double(t));
      if (cfg.gradient_check.t_values.size() < 2) reject("t_values needs at least two entries");
    }
    cfg.gradient_check.fields = g.integer("fields", 5);
    cfg.gradient_check.seed = static_cast<unsigned>(g.integer("seed", 1));
    cfg.gradient_check.min_order = g.num("min_order", 0.9);
    cfg.gradient_check.field_kind = g.str("field_kind", "random");
    if (cfg.gradient_check.field_kind != "random" && cfg.gradient_check.field_kind != "smooth")
      reject("field_kind must be random or smooth");
    cfg.gradient_check.corrupt = g.str("debug_corrupt_assembly", "");
    g.finish();
  }

  {
    SectionReader s(raw, "study");
    cfg.study.levels = s.integer("levels", 5);
    cfg.study.problem = s.str("problem", "poisson");
    if (cfg.study.problem != "poisson" && cfg.study.problem != "diffusion" &&
        cfg.study.problem != "elasticity")
      reject("study problem must be poisson, diffusion or elasticity");
    cfg.study.min_level = s.integer("min_level", 3);
    cfg.study.max_level = s.integer("max_level", 6);
    if (cfg.study.min_level < 1 || cfg.study.max_level < cfg.study.min_level)
      reject("study levels must satisfy 1 <= min_level <= max_level");
    s.finish();
  }

  return cfg;
}

ScenarioConfig parse_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) reject("cannot open '" + path + "'");
  return parse_scenario(in);
}

SimplicialMeshHierarchy build_geometry(const GeometryConfig& geo) {
  switch (geo.kind) {
    case GeometryConfig::Kind::ogrid: {
      Eigen::VectorXd radii = inclusion_radii(geo.inclusion, geo.directions);
      MeshLevel coarse = make_ogrid_inclusion(geo.box_lo.head<2>(), geo.box_hi.head<2>(), radii,
                                              geo.rings_in, geo.rings_out);
      if (geo.snap_circle) {
        Eigen::Vector2d center = 0.5 * (geo.box_lo.head<2>() + geo.box_hi.head<2>());
        return build_hierarchy_snapped_circle(coarse, geo.levels, center, geo.inclusion.radius);
      }
      return build_hierarchy(coarse, geo.levels);
    }
    case GeometryConfig::Kind::structured: {
      IndexBox box =
          geo.inclusion.kind == InclusionSpec::Kind::cells ? geo.inclusion.cells : IndexBox{};
      MeshLevel coarse = make_structured_box(geo.cells[0], geo.cells[1], geo.box_lo.head<2>(),
                                             geo.box_hi.head<2>(), box);
      return build_hierarchy(coarse, geo.levels);
    }
    case GeometryConfig::Kind::structured3d: {
      IndexBox box =
          geo.inclusion.kind == InclusionSpec::Kind::cells ? geo.inclusion.cells : IndexBox{};
      MeshLevel coarse = make_structured_box3d(geo.cells[0], geo.cells[1], geo.cells[2],
                                               geo.box_lo.head<3>(), geo.box_hi.head<3>(), box);
      return build_hierarchy(coarse, geo.levels);
    }
  }
  reject("unreachable geometry kind");
}

ShapeProblem build_problem(const ScenarioConfig& config) {
  ShapeProblem problem;
  problem.coeffs = config.coefficients;
  problem.objective = config.objective;
  problem.solver = config.solver;

  if (config.objective.nu2 > 0.0) {
    switch (config.measurements.source) {
      case MeasurementConfig::Source::nodal_self: {
        SimplicialMeshHierarchy h = build_geometry(config.geometry);
        TransientTrajectory y = march_diffusion_state(h, problem.coeffs, config.objective.dt,
                                                      config.objective.t_end, problem.solver);
        problem.measurements = MeasurementHandle::from_nodal(y.fields);
        break;
      }
      case MeasurementConfig::Source::synthesize: {
        GeometryConfig target_geo = config.geometry;
        target_geo.inclusion = config.measurements.target_inclusion;
        SimplicialMeshHierarchy target = build_geometry(target_geo);
        RbfFitSettings fit;
        fit.centers_per_axis = config.measurements.centers_per_axis;
        fit.ridge = config.measurements.ridge;
        fit.epsilon = config.measurements.epsilon;
        problem.measurements = MeasurementHandle::from_rbf(synthesize_measurements(
            target, problem.coeffs, config.objective, fit, problem.solver));
        break;
      }
      case MeasurementConfig::Source::rbf_files: {
        std::vector<RbfField> fields;
        int dim = config.geometry.kind == GeometryConfig::Kind::structured3d ? 3 : 2;
        for (auto& path : config.measurements.rbf_files)
          fields.push_back(read_rbf_file(path, dim));
        problem.measurements = MeasurementHandle::from_rbf(std::move(fields));
        break;
      }
      case MeasurementConfig::Source::none:
        reject("nu2 > 0 needs measurement data");
    }
  }
  return problem;
}

namespace {

// Admissible test fields for the gradient check: either random values inside
// the interface-support set or smooth angular fields on the interface alone,
// all vanishing near the outer boundary.
Eigen::VectorXd gradient_check_field(const MeshLevel& level, unsigned seed,
                                     const std::string& kind, int wave) {
  const int d = level.dim;
  const int nv = level.num_vertices();
  std::vector<char> on_ifc = interface_vertex_mask(level);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(nv * d);
  if (kind == "smooth") {
    Eigen::VectorXd center =
        0.5 * (level.coords.colwise().minCoeff() + level.coords.colwise().maxCoeff()).transpose();
    for (int vert = 0; vert < nv; ++vert) {
      if (!on_ifc[vert]) continue;
      Eigen::VectorXd rel = level.coords.row(vert).transpose() - center;
      double th = std::atan2(rel[1], rel[0]);
      double amp = 0.6 + 0.3 * std::cos(wave * th) + 0.2 * std::sin((wave + 1) * th);
      v.segment(vert * d, d) = amp * rel.normalized();
    }
    return v;
  }
  std::vector<char> on_bdy = boundary_vertex_mask(level);
  std::vector<char> keep(nv, 0);
  for (int e = 0; e < level.num_elements(); ++e) {
    bool touches = false;
    for (int i = 0; i <= d; ++i) touches |= static_cast<bool>(on_ifc[level.simplices(e, i)]);
    if (touches)
      for (int i = 0; i <= d; ++i) keep[level.simplices(e, i)] = 1;
  }
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int vert = 0; vert < nv; ++vert)
    if (keep[vert] && !on_bdy[vert])
      for (int c = 0; c < d; ++c) v[vert * d + c] = uni(rng);
  return v;
}

}  // namespace

int run_check_gradient(const ScenarioConfig& config, std::ostream& out) {
  ShapeProblem problem = build_problem(config);
  SimplicialMeshHierarchy h = build_geometry(config.geometry);
  const MeshLevel& level = h.finest();
  const GradientCheckConfig& gc = config.gradient_check;
  const ObjectiveSpec& spec = problem.objective;

  if (gc.components.empty()) {
    out << "no active objective components; nothing to check\n";
    return 0;
  }

  LoadRestriction restriction = LoadRestriction::interface_support(level, {});
  bool all_ok = true;
  for (const std::string& component : gc.components) {
    ObjectiveSpec single = spec;
    single.nu1 = component == "j1" ? spec.nu1 : 0.0;
    single.nu2 = component == "j2" ? spec.nu2 : 0.0;
    single.nu3 = component == "j3" ? spec.nu3 : 0.0;
    single.nu4 = component == "j4" ? spec.nu4 : 0.0;
    if (single.nu1 + single.nu2 + single.nu3 + single.nu4 == 0.0) {
      out << component << ": weight is zero, skipped\n";
      continue;
    }

    Eigen::VectorXd b;
    if (component == "j1") {
      Eigen::VectorXd u = solve_elastic_state(h, problem.coeffs, spec.f_top, problem.solver);
      Eigen::VectorXd w =
          solve_elastic_adjoint(h, problem.coeffs, spec.f_top, spec.nu1, problem.solver);
      b = assemble_dj1(level, problem.coeffs, u, w, spec.nu1, restriction).b;
    } else if (component == "j2") {
      TimeWeights weights = spec.weights();
      TransientTrajectory y =
          march_diffusion_state(h, problem.coeffs, spec.dt, spec.t_end, problem.solver);
      std::vector<Eigen::VectorXd> ybar = problem.measurements.realize(level, weights);
      TransientTrajectory z =
          march_diffusion_adjoint(h, problem.coeffs, y, ybar, weights, spec.nu2, problem.solver);
      b = assemble_dj2(level, problem.coeffs, y, z, ybar, weights, spec.nu2, restriction).b;
    } else if (component == "j3") {
      b = assemble_dj3(level, spec.nu3, restriction).b;
    } else {
      if (config.optimizer.perimeter_surface_form)
        b = assemble_dj4_surface(level, discrete_mean_curvature(level), spec.nu4, restriction).b;
      else
        b = assemble_dj4_volume(level, spec.nu4, restriction).b;
    }
    if (gc.corrupt == component) b *= 1.1;  // negative-control hook

    auto evaluate = [&](const SimplicialMeshHierarchy& hh) {
      if (component == "j1") {
        Eigen::VectorXd u = solve_elastic_state(hh, problem.coeffs, spec.f_top, problem.solver);
        return eval_objective(hh.finest(), problem.coeffs, single, &u, nullptr, nullptr);
      }
      if (component == "j2") {
        TransientTrajectory y =
            march_diffusion_state(hh, problem.coeffs, spec.dt, spec.t_end, problem.solver);
        std::vector<Eigen::VectorXd> ybar =
            problem.measurements.realize(hh.finest(), spec.weights());
        return eval_objective(hh.finest(), problem.coeffs, single, nullptr, &y, &ybar);
      }
      return eval_objective(hh.finest(), problem.coeffs, single, nullptr, nullptr, nullptr);
    };

    for (int field = 0; field < gc.fields; ++field) {
      Eigen::VectorXd v =
          gradient_check_field(level, gc.seed + 101 * field, gc.field_kind, 2 + field);
      double assembled = b.dot(v);
      std::vector<double> errors;
      bool fd_failed = false;
      for (double t : gc.t_values) {
        double step = t;
        bool ok = false;
        double fd = 0.0;
        for (int halve = 0; halve < 8 && !ok; ++halve) {
          try {
            fd = fd_directional_derivative(evaluate, h, v, step);
            ok = true;
          } catch (const std::exception&) {
            step *= 0.5;  // perturbed mesh invalid at this t
          }
        }
        if (!ok) {
          fd_failed = true;
          break;
        }
        errors.push_back(std::abs(fd - assembled));
      }
      if (fd_failed) {
        out << component << " field " << field << ": no valid perturbation found\n";
        all_ok = false;
        continue;
      }
      double order = observed_taylor_order(gc.t_values, errors);
      bool ok = order >= gc.min_order;
      all_ok &= ok;
      char line[160];
      std::snprintf(line, sizeof(line), "%s field %d: b(V) = %+.6e, observed order %.3f [%s]\n",
                    component.c_str(), field, assembled, order, ok ? "ok" : "FAIL");
      out << line;
    }
  }
  out << (all_ok ? "gradient check passed\n" : "gradient check FAILED\n");
  return all_ok ? 0 : 2;
}

int run_optimize(const ScenarioConfig& config, std::ostream& out) {
  ShapeProblem problem = build_problem(config);
  SimplicialMeshHierarchy initial = build_geometry(config.geometry);
  std::filesystem::create_directories(config.output_dir);

  ShapeOptimizer optimizer(problem, config.optimizer);
  auto vtk_path = [&](int iter) {
    char name[64];
    std::snprintf(name, sizeof(name), "mesh_%04d.vtk", iter);
    return config.output_dir + "/" + name;
  };
  if (config.write_vtk) write_vtk(initial.finest(), config.output_dir + "/mesh_initial.vtk");

  OptimizeOutcome outcome =
      optimizer.run(initial, [&](int iter, const SimplicialMeshHierarchy& h, const HistoryRow&) {
        if (config.write_vtk) write_vtk(h.finest(), vtk_path(iter));
      });

  write_history_csv(outcome.history, config.output_dir + "/history.csv");
  write_mesh_ascii_file(outcome.hierarchy.finest(), config.output_dir + "/final_mesh.txt");
  if (config.write_vtk)
    write_vtk(outcome.hierarchy.finest(), config.output_dir + "/mesh_final.vtk");

  for (const HistoryRow& row : outcome.history) {
    char line[240];
    std::snprintf(line, sizeof(line), "iter %3d  J %.10e  gs %.4e  nu4 %.4g  step %.4g\n",
                  row.iter, row.total, row.gs_norm, row.nu4, row.step_scale);
    out << line;
  }
  out << "stop: " << to_string(outcome.reason) << " after " << outcome.accepted_steps
      << " accepted steps\n";
  bool useful = outcome.accepted_steps > 0 || outcome.reason == StopReason::converged;
  return useful ? 0 : 2;
}

int run_curvature_study(const ScenarioConfig& config, std::ostream& out) {
  GeometryConfig geo = config.geometry;
  geo.levels = std::max(config.study.levels, 1);
  SimplicialMeshHierarchy h = build_geometry(geo);

  out << "level  h_interface  max_abs_curvature\n";
  std::vector<double> hs, ks;
  for (int l = 0; l < h.num_levels(); ++l) {
    const MeshLevel& level = h.levels[l];
    double width = level.mean_interface_edge_length();
    double kmax = discrete_mean_curvature(level).max_abs();
    hs.push_back(width);
    ks.push_back(kmax);
    char line[120];
    std::snprintf(line, sizeof(line), "%5d  %.6e  %.6e\n", l, width, kmax);
    out << line;
  }
  if (hs.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = static_cast<int>(hs.size());
    for (int i = 0; i < n; ++i) {
      double x = std::log(hs[i]), y = std::log(std::max(ks[i], 1e-300));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    char line[80];
    std::snprintf(line, sizeof(line), "log-log slope of max curvature vs h: %.4f\n", slope);
    out << line;
  }
  return 0;
}

int run_mg_bench(const ScenarioConfig& config, std::ostream& out) {
  out << "levels  dofs  pcg_iterations\n";
  std::vector<int> iterations;
  for (int levels = config.study.min_level; levels <= config.study.max_level; ++levels) {
    GeometryConfig geo = config.geometry;
    geo.levels = levels;
    SimplicialMeshHierarchy h = build_geometry(geo);

    LevelAssembler assemble;
    int components = 1;
    if (config.study.problem == "poisson") {
      BoundaryConditionSet bcs;
      for (auto l : {BoundaryLabel::bottom, BoundaryLabel::top, BoundaryLabel::left,
                     BoundaryLabel::right, BoundaryLabel::front, BoundaryLabel::back})
        bcs.conditions[l] = BoundaryCondition::dirichlet(0.0);
      MaterialCoefficients unit;
      assemble = [bcs, unit](const MeshLevel& level) {
        DiffusionSystem sys = assemble_diffusion(level, unit, bcs);
        return LevelSystem{sys.stiffness_raw, sys.bc};
      };
    } else if (config.study.problem == "diffusion") {
      BoundaryConditionSet bcs = diffusion_bcs(h.dim());
      MaterialCoefficients coeffs = config.coefficients;
      assemble = [bcs, coeffs](const MeshLevel& level) {
        DiffusionSystem sys = assemble_diffusion(level, coeffs, bcs);
        return LevelSystem{sys.stiffness_raw, sys.bc};
      };
    } else {
      components = h.dim();
      BoundaryConditionSet bcs = all_sliding_bcs(h.dim());
      MaterialCoefficients metric;
      metric.lambda_out = metric.lambda_int = config.optimizer.metric_lambda;
      metric.mu_out = metric.mu_int = config.optimizer.metric_mu;
      assemble = [bcs, metric](const MeshLevel& level) {
        ElasticitySystem sys = assemble_elasticity(level, metric, bcs);
        return LevelSystem{sys.raw, sys.bc};
      };
    }

    MgHierarchy mg = build_problem_mg(h, assemble, components, config.solver);
    const int n = mg.finest_op().rows();
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = mg.levels.back().constrained[i] ? 0.0 : uni(rng);
    PcgResult res = pcg(mg.finest_op(), b, mg_preconditioner(mg), config.solver.rtol,
                        config.solver.max_iterations);
    if (!res.converged) {
      out << "level " << levels << ": PCG failed to converge\n";
      return 2;
    }
    iterations.push_back(res.iterations);
    char line[80];
    std::snprintf(line, sizeof(line), "%6d  %5d  %3d\n", levels, n, res.iterations);
    out << line;
  }
  if (iterations.size() > 1) {
    int spread = *std::max_element(iterations.begin(), iterations.end()) -
                 *std::min_element(iterations.begin(), iterations.end());
    out << "iteration spread across levels: " << spread << "\n";
  }
  return 0;
}

}  // namespace shapemg
