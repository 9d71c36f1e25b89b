#include "pmspace/cli.hpp"

#include "pmspace/deform.hpp"
#include "pmspace/dual.hpp"
#include "pmspace/json_io.hpp"
#include "pmspace/shapes.hpp"
#include "pmspace/verify.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

namespace pmspace {

namespace {

constexpr int kObjDigits = 12;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse_error", path + ": " + e.what());
  }
}

CaseAssignment resolve_cases(const std::string& spec, const Mesh& mesh) {
  if (spec == "affine" || spec == "parallel" || spec == "vertical") {
    return CaseAssignment::uniform(mesh, case_kind_from_string(spec));
  }
  if (!std::filesystem::exists(spec)) {
    throw UsageError("--cases expects affine, parallel, vertical or an assignment JSON path, got '" + spec + "'");
  }
  return parse_assignment(read_json(spec), mesh.num_faces());
}

Vec3 parse_vec3(const std::vector<double>& v, const char* flag) {
  if (v.size() != 3) throw UsageError(std::string(flag) + " takes three numbers");
  return Vec3(v[0], v[1], v[2]);
}

// Writes to `path` or, when empty, to `out`.
template <typename Writer>
void emit(const std::string& path, std::ostream& out, Writer&& write) {
  if (path.empty()) {
    write(out);
    return;
  }
  std::ofstream f(path);
  if (!f) throw Error("io_error", "cannot write " + path);
  write(f);
}

void emit_json(const std::string& path, std::ostream& out, const nlohmann::json& j) {
  emit(path, out, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

void emit_obj(const std::string& path, std::ostream& out, const Mesh& mesh) {
  emit(path, out, [&](std::ostream& o) { write_obj(mesh, o, kObjDigits); });
}

struct Common {
  std::string input;
  std::string cases = "affine";
  std::string output;
  double tol = 1e-10;
  std::uint32_t seed = 0;
};

void add_mesh_input(CLI::App* app, Common& c) {
  app->add_option("mesh", c.input, "input OBJ")->required();
  app->add_option("-o,--output", c.output, "output path (default: stdout)");
}

void add_cases(CLI::App* app, Common& c) {
  app->add_option("--cases", c.cases, "affine|parallel|vertical or assignment JSON path")->capture_default_str();
  app->add_option("--tol", c.tol, "relative rank tolerance of the nullspace")->capture_default_str();
}

SubspaceBasis basis_for(const Mesh& mesh, const Common& c, CaseAssignment* assignment = nullptr) {
  CaseAssignment cases = resolve_cases(c.cases, mesh);
  NullspaceOptions opt;
  opt.tol = c.tol;
  SubspaceBasis basis = build_subspace(mesh, cases, {}, opt);
  if (assignment) *assignment = std::move(cases);
  return basis;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Planar-faced mesh subspace tools", "pmspace"};
  app.require_subcommand(1);
  Common c;

  auto* analyze = app.add_subcommand("analyze", "counts, ndof, bounds and containment flags as JSON");
  add_mesh_input(analyze, c);
  add_cases(analyze, c);

  auto* basis_cmd = app.add_subcommand("basis", "dump the orthonormal basis Q");
  add_mesh_input(basis_cmd, c);
  add_cases(basis_cmd, c);

  int count = -1;
  std::string shapes_out, apply_out;
  int apply_index = -1;
  double amplitude = 0.1;
  auto* eig = app.add_subcommand("eigenshapes", "spectrum of the Laplacian restricted to the subspace");
  add_mesh_input(eig, c);
  add_cases(eig, c);
  eig->add_option("--count", count, "number of shapes (-1 = all)")->capture_default_str();
  eig->add_option("--shapes-out", shapes_out, "matrix dump of the shapes");
  eig->add_option("--apply", apply_index, "shape index to apply");
  eig->add_option("--amplitude", amplitude, "applied amplitude relative to the bbox diagonal")->capture_default_str();
  eig->add_option("--obj-out", apply_out, "OBJ of source + amplitude * shape");

  double low = 0.0, high = 0.0, gain = 1.0;
  auto* band = app.add_subcommand("bandpass", "add the eigenshapes inside a frequency band");
  add_mesh_input(band, c);
  add_cases(band, c);
  band->add_option("--low", low, "lower frequency")->capture_default_str();
  band->add_option("--high", high, "upper frequency")->required();
  band->add_option("--gain", gain, "gain")->capture_default_str();

  int seed_vertex = -1, support = 8;
  std::vector<double> direction = {0.0, 0.0, 1.0};
  double residual_tol = 1e-10;
  std::string report_out;
  auto* sparse = app.add_subcommand("sparse", "greedy sparse shape");
  add_mesh_input(sparse, c);
  add_cases(sparse, c);
  sparse->add_option("--vertex", seed_vertex, "seed vertex (default: best single vertex)");
  sparse->add_option("--support", support, "vertex budget")->capture_default_str();
  sparse->add_option("--direction", direction, "probe direction x y z")->expected(3);
  sparse->add_option("--residual-tol", residual_tol, "target ||Bx|| / ||x||")->capture_default_str();
  sparse->add_option("--amplitude", amplitude, "applied amplitude relative to the bbox diagonal")->capture_default_str();
  sparse->add_option("--report", report_out, "JSON report (default: stderr)");

  int vertex = 0;
  double lambda = 1.0;
  auto* fund = app.add_subcommand("fundamental", "smooth response to a single-vertex impulse");
  add_mesh_input(fund, c);
  add_cases(fund, c);
  fund->add_option("--vertex", vertex, "impulse vertex")->required();
  fund->add_option("--lambda", lambda, "smoothness weight")->capture_default_str();
  fund->add_option("--direction", direction, "impulse direction x y z")->expected(3);
  fund->add_option("--amplitude", amplitude, "applied amplitude relative to the bbox diagonal")->capture_default_str();

  std::string handles_path, energy_name = "arap", trace_out;
  DeformParams dparams;
  auto* def = app.add_subcommand("deform", "handle-driven deformation inside the subspace");
  add_mesh_input(def, c);
  add_cases(def, c);
  def->add_option("--handles", handles_path, "handles JSON")->required();
  def->add_option("--energy", energy_name, "arap|asap")->capture_default_str();
  def->add_option("--iterations", dparams.iterations, "max local/global iterations")->capture_default_str();
  def->add_option("--soft-weight", dparams.soft_weight, "default soft handle weight")->capture_default_str();
  def->add_option("--convergence", dparams.convergence_tol, "max vertex motion / bbox diagonal")->capture_default_str();
  def->add_option("--trace", trace_out, "energy trace CSV");

  std::vector<double> center;
  double scale = 1.0;
  std::string sidecar_out;
  auto* dual_cmd = app.add_subcommand("dual", "polar dual");
  add_mesh_input(dual_cmd, c);
  dual_cmd->add_option("--center", center, "polarity center x y z")->expected(3);
  dual_cmd->add_option("--scale", scale, "polarity radius")->capture_default_str();
  dual_cmd->add_option("--sidecar", sidecar_out, "correspondence JSON");

  std::string dual_cases = "affine", mode = "eigenshape", dual_out;
  int index = -1;
  auto* dedit = app.add_subcommand("dual-edit", "edit the polar dual and rebuild the primal");
  add_mesh_input(dedit, c);
  dedit->add_option("--dual-cases", dual_cases, "cases on the dual mesh")->capture_default_str();
  dedit->add_option("--mode", mode, "eigenshape|bandpass")->capture_default_str();
  dedit->add_option("--index", index, "eigenshape index (-1 = lowest nonzero)")->capture_default_str();
  dedit->add_option("--amplitude", amplitude, "relative to the dual bbox diagonal")->capture_default_str();
  dedit->add_option("--low", low, "band low")->capture_default_str();
  dedit->add_option("--high", high, "band high")->capture_default_str();
  dedit->add_option("--gain", gain, "band gain")->capture_default_str();
  dedit->add_option("--center", center, "polarity center x y z")->expected(3);
  dedit->add_option("--scale", scale, "polarity radius")->capture_default_str();
  dedit->add_option("--dual-out", dual_out, "edited dual OBJ");

  std::string target_path, pins_path;
  auto* closest = app.add_subcommand("closest", "closest subspace element to a target mesh");
  add_mesh_input(closest, c);
  add_cases(closest, c);
  closest->add_option("--target", target_path, "target OBJ with the same topology")->required();
  closest->add_option("--pin", pins_path, "JSON [{\"vertex\":v,\"target\":[x,y,z]}] of pinned vertices");

  auto* subdiv = app.add_subcommand("subdivide", "insert edge midpoints");
  add_mesh_input(subdiv, c);

  std::string boundary = "square";
  int sides = 6;
  auto* flat = app.add_subcommand("flatten", "Tutte embedding of a disk mesh");
  add_mesh_input(flat, c);
  flat->add_option("--boundary", boundary, "square|polygon")->capture_default_str();
  flat->add_option("--sides", sides, "polygon sides")->capture_default_str();

  std::string suite = "all";
  auto* verify = app.add_subcommand("verify", "theory audits");
  verify->add_option("--suite", suite, "all|theorem1|stencil|regular3|table1|maximality")->capture_default_str();
  verify->add_option("-o,--output", c.output, "JSON report path (default: stdout)");

  for (auto* sub : app.get_subcommands({})) sub->add_option("--seed", c.seed, "seed of randomized probes")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto used = app.get_subcommands();
    err << (used.empty() ? app.help() : used.front()->help());
    return 2;
  }

  try {
    if (*verify) {
      bool passed = false;
      const nlohmann::json report = run_verify_suite(suite, c.seed, &passed);
      emit_json(c.output, out, report);
      for (const auto& [name, section] : report.items()) {
        if (name == "passed") continue;
        bool ok = true;
        if (section.is_array()) {
          for (const auto& s : section) ok &= s.value("passed", true);
        } else {
          ok = section.value("passed", true);
        }
        err << (ok ? "PASS " : "FAIL ") << name << "\n";
      }
      err << (passed ? "all audits passed" : "some audits failed") << "\n";
      return passed ? 0 : 1;
    }

    const Mesh mesh = load_mesh(c.input);

    if (*analyze) {
      CaseAssignment cases;
      const SubspaceBasis basis = basis_for(mesh, c, &cases);
      const auto flags = containment_flags(mesh, basis);
      emit_json(c.output, out, analysis_json(mesh, cases, basis, &flags));
    } else if (*basis_cmd) {
      const SubspaceBasis basis = basis_for(mesh, c);
      emit(c.output, out, [&](std::ostream& o) { write_basis(basis, o); });
      err << "ndof " << basis.ndof << "\n";
    } else if (*eig) {
      const SubspaceBasis basis = basis_for(mesh, c);
      const Spectrum s = eigenshapes(basis, graph_laplacian(mesh), count);
      nlohmann::json j = spectrum_to_json(s);
      if (!shapes_out.empty()) {
        std::ofstream f(shapes_out);
        if (!f) throw Error("io_error", "cannot write " + shapes_out);
        write_matrix_dump(s.shapes, {{"kind", "eigenshapes"}}, f);
        j["shapes"] = shapes_out;
      }
      if (apply_index >= 0) {
        if (apply_index >= s.shapes.cols()) throw Error("invalid_argument", "shape index out of range");
        std::vector<double> coeff(apply_index + 1, 0.0);
        coeff[apply_index] = amplitude * mesh.bbox_diagonal();
        const Mesh m = linear_combination(mesh, s, coeff);
        if (apply_out.empty()) throw UsageError("--apply needs --obj-out");
        emit_obj(apply_out, out, m);
      }
      emit_json(c.output, out, j);
    } else if (*band) {
      const SubspaceBasis basis = basis_for(mesh, c);
      const BandpassResult r = bandpass_apply(mesh, eigenshapes(basis, graph_laplacian(mesh)), low, high, gain);
      if (!r.notice.empty()) err << "notice: " << r.notice << "\n";
      err << "shapes used " << r.used << ", planarity " << planarity_report(r.mesh).max << "\n";
      emit_obj(c.output, out, r.mesh);
    } else if (*sparse) {
      const SubspaceBasis basis = basis_for(mesh, c);
      SparseShapeOptions opt;
      if (seed_vertex >= 0) opt.seed_vertex = seed_vertex;
      opt.direction = parse_vec3(direction, "--direction");
      opt.target_support = support;
      opt.residual_tol = residual_tol;
      const std::vector<double> trace = sparse_residual_trace(basis, opt);
      nlohmann::json report = {{"trace", trace}, {"best_residual", trace.empty() ? 0.0 : trace.back()}};
      const Shape s = [&] {
        try {
          return sparse_shape(basis, opt);
        } catch (const Error& e) {
          report["support"] = e.ids();
          report["exact"] = false;
          emit_json(report_out, err, report);
          throw;
        }
      }();
      report["support"] = s.support;
      report["exact"] = true;
      emit_json(report_out, err, report);
      emit_obj(c.output, out, mesh.displaced(amplitude * mesh.bbox_diagonal() * s.displacement));
    } else if (*fund) {
      const SubspaceBasis basis = basis_for(mesh, c);
      const Shape s = fundamental_shape(basis, graph_laplacian(mesh), vertex, lambda, parse_vec3(direction, "--direction"));
      const double norm = s.displacement.cwiseAbs().maxCoeff();
      if (norm == 0.0) throw Error("empty_shape", "the impulse is orthogonal to the subspace", {vertex});
      err << "support " << s.support.size() << " vertices, residual " << s.residual << "\n";
      emit_obj(c.output, out, mesh.displaced(amplitude * mesh.bbox_diagonal() / norm * s.displacement));
    } else if (*def) {
      const SubspaceBasis basis = basis_for(mesh, c);
      dparams.energy = energy_from_string(energy_name);
      const DeformResult r = deform(basis, mesh, parse_handles(read_json(handles_path)), dparams);
      err << "iterations " << r.iterations << (r.converged ? " (converged)" : " (not converged)") << "\n";
      if (!r.degenerate_faces.empty()) err << "degenerate faces: " << r.degenerate_faces.size() << "\n";
      if (!trace_out.empty()) {
        std::ofstream f(trace_out);
        if (!f) throw Error("io_error", "cannot write " + trace_out);
        f << "iteration,energy\n" << std::setprecision(17);
        for (std::size_t i = 0; i < r.energy.size(); ++i) f << i + 1 << ',' << r.energy[i] << '\n';
      }
      emit_obj(c.output, out, r.mesh);
    } else if (*dual_cmd) {
      DualOptions opt;
      opt.scale = scale;
      if (!center.empty()) opt.center = parse_vec3(center, "--center");
      const DualMesh d = polar_dual(mesh, opt);
      if (d.center_moved) err << "notice: polarity center moved off a face plane\n";
      if (!sidecar_out.empty()) emit_json(sidecar_out, out, dual_sidecar(d));
      emit_obj(c.output, out, d.mesh);
    } else if (*dedit) {
      DualOptions opt;
      opt.scale = scale;
      if (!center.empty()) opt.center = parse_vec3(center, "--center");
      DualEditRequest req;
      if (mode == "eigenshape") {
        req.mode = DualEditRequest::Mode::Eigenshape;
      } else if (mode == "bandpass") {
        req.mode = DualEditRequest::Mode::Bandpass;
      } else {
        throw UsageError("--mode must be eigenshape or bandpass");
      }
      req.index = index;
      req.amplitude = amplitude;
      req.low = low;
      req.high = high;
      req.gain = gain;
      const DualMesh d = polar_dual(mesh, opt);
      const DualEditResult r = dual_edit(mesh, resolve_cases(dual_cases, d.mesh), req, opt);
      err << "max reconstruction residual " << r.max_residual << "\n";
      if (!dual_out.empty()) emit_obj(dual_out, out, r.dual.mesh);
      emit_obj(c.output, out, r.primal);
    } else if (*closest) {
      const SubspaceBasis basis = basis_for(mesh, c);
      const Mesh target = load_mesh(target_path);
      if (target.faces() != mesh.faces()) throw Error("invalid_argument", "target topology differs from the source");
      std::vector<HardConstraint> pins;
      if (!pins_path.empty()) {
        for (const Handle& h : parse_handles(read_json(pins_path))) pins.emplace_back(h.vertex, h.target);
      }
      const Mesh m = closest_pm(basis, target, pins);
      err << "distance " << (m.vertices() - target.vertices()).norm() << ", planarity "
          << planarity_report(m).max << "\n";
      emit_obj(c.output, out, m);
    } else if (*subdiv) {
      emit_obj(c.output, out, halfedge_subdivide(mesh));
    } else if (*flat) {
      std::vector<Vec2> shape;
      if (boundary == "square") {
        shape = unit_square();
      } else if (boundary == "polygon") {
        shape = regular_polygon(sides);
      } else {
        throw UsageError("--boundary must be square or polygon");
      }
      emit_obj(c.output, out, tutte_flatten(mesh, shape));
    }
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error [" << e.code() << "]: " << e.what();
    if (!e.ids().empty()) {
      err << " (ids:";
      for (int id : e.ids()) err << ' ' << id;
      err << ')';
    }
    err << "\n";
    return 1;
  }
}

}  // namespace pmspace
