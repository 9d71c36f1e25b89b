#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pmspace/basis.hpp"
#include "pmspace/cli.hpp"
#include "pmspace/corpus.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace pmspace;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pmspace");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

struct Workdir {
  fs::path dir;
  Workdir() {
    dir = fs::temp_directory_path() / ("pmspace_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  std::string mesh(const std::string& name) const {
    const std::string p = path(name + ".obj");
    save_mesh(corpus_mesh(name), p);
    return p;
  }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("analyze reports ndof and bounds") {
  Workdir w;
  const Run r = run({"analyze", w.mesh("cube"), "--cases", "affine"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["ndof"] == 12);
  CHECK(j["counts"]["faces"] == 6);
  CHECK(j["bound"]["ok"] == true);
  CHECK(j["containment"]["parallel"]["relation"] == "B_in_A");
  CHECK(nlohmann::json::parse(run({"analyze", w.mesh("cube"), "--cases", "parallel"}).out)["ndof"] == 6);
}

TEST_CASE("cases from a JSON file") {
  Workdir w;
  const std::string cases = w.path("cases.json");
  std::ofstream(cases) << R"({"default":"parallel","faces":{"0":"affine"}})";
  const Run r = run({"analyze", w.mesh("cube"), "--cases", cases});
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(r.out)["case"] == "mixed");
}

TEST_CASE("bandpass writes a planar OBJ") {
  Workdir w;
  const std::string out = w.path("out.obj");
  const Run r = run({"bandpass", w.mesh("grid_lifted"), "--cases", "affine", "--low", "0.1", "--high", "0.5", "--gain",
                     "0.2", "-o", out});
  REQUIRE(r.code == 0);
  const Mesh m = load_mesh(out);
  CHECK(planarity_report(m).max <= 1e-8);
  CHECK(m.num_faces() == corpus_mesh("grid_lifted").num_faces());
}

TEST_CASE("eigenshapes export") {
  Workdir w;
  const std::string shapes = w.path("shapes.txt");
  const Run r = run({"eigenshapes", w.mesh("cube"), "--cases", "parallel", "--shapes-out", shapes});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["frequencies"].size() == 6);
  CHECK(j["shapes"] == shapes);
  std::ifstream in(shapes);
  CHECK(read_matrix_dump(in).cols() == 6);
}

TEST_CASE("sparse shape reports exact and infeasible regimes") {
  Workdir w;
  const std::string grid = w.mesh("grid5");
  const Run ok = run({"sparse", grid, "--vertex", "12", "-o", w.path("s.obj")});
  REQUIRE(ok.code == 0);
  const auto report = nlohmann::json::parse(ok.err);
  CHECK(report["exact"] == true);
  CHECK(report["support"].size() == 5);
  const Run tight = run({"sparse", grid, "--vertex", "12", "--support", "2"});
  CHECK(tight.code == 1);
  CHECK(tight.err.find("infeasible") != std::string::npos);
}

TEST_CASE("deform writes mesh and energy trace") {
  Workdir w;
  const std::string handles = w.path("h.json");
  std::ofstream(handles) << R"([{"vertex":0,"target":[-1,-1,-1],"mode":"hard"},{"vertex":6,"target":[1.2,1.1,1.3]}])";
  const std::string trace = w.path("trace.csv");
  const Run r = run({"deform", w.mesh("cube"), "--cases", "affine", "--handles", handles, "-o", w.path("d.obj"),
                     "--trace", trace});
  REQUIRE(r.code == 0);
  const std::string csv = slurp(trace);
  CHECK(csv.rfind("iteration,energy\n", 0) == 0);
  CHECK(planarity_report(load_mesh(w.path("d.obj"))).max <= 1e-8);
}

TEST_CASE("dual and dual-edit") {
  Workdir w;
  const Run d = run({"dual", w.mesh("cube"), "--sidecar", w.path("side.json"), "-o", w.path("oct.obj")});
  REQUIRE(d.code == 0);
  CHECK(load_mesh(w.path("oct.obj")).num_vertices() == 6);
  CHECK(nlohmann::json::parse(slurp(w.path("side.json")))["scale"] == 1.0);
  const Run e = run({"dual-edit", w.mesh("dodecahedron"), "--amplitude", "0.02", "-o", w.path("p.obj")});
  REQUIRE(e.code == 0);
  CHECK(planarity_report(load_mesh(w.path("p.obj"))).max <= 1e-8);
  CHECK(run({"dual", w.mesh("open_box")}).code == 1);
}

TEST_CASE("closest, subdivide, flatten, fundamental") {
  Workdir w;
  const std::string grid = w.mesh("grid_lifted");
  CHECK(run({"closest", grid, "--target", grid, "-o", w.path("c.obj")}).code == 0);
  REQUIRE(run({"subdivide", w.mesh("cube"), "-o", w.path("sub.obj")}).code == 0);
  CHECK(load_mesh(w.path("sub.obj")).num_vertices() == 20);
  REQUIRE(run({"flatten", grid, "--boundary", "polygon", "--sides", "5", "-o", w.path("f.obj")}).code == 0);
  CHECK(load_mesh(w.path("f.obj")).vertices().row(2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(run({"fundamental", grid, "--cases", "vertical", "--vertex", "7", "-o", w.path("fu.obj")}).code == 0);
}

TEST_CASE("exit codes") {
  Workdir w;
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"analyze", w.mesh("cube"), "--bogus"}).code == 2);
  CHECK(run({"analyze", w.mesh("cube"), "--cases", "diagonal"}).code == 2);
  CHECK(run({"analyze", w.path("missing.obj")}).code == 1);
  const Run domain = run({"fundamental", w.mesh("cube"), "--vertex", "99"});
  CHECK(domain.code == 1);
  CHECK(domain.err.find("invalid_argument") != std::string::npos);
}

TEST_CASE("seeded runs are byte-identical") {
  Workdir w;
  const Run a = run({"verify", "--suite", "theorem1", "--seed", "4"});
  const Run b = run({"verify", "--suite", "theorem1", "--seed", "4"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const std::string g = w.mesh("grid_lifted");
  CHECK(run({"bandpass", g, "--high", "2", "--gain", "0.1"}).out == run({"bandpass", g, "--high", "2", "--gain", "0.1"}).out);
}

TEST_CASE("obj output uses 12 significant digits") {
  Workdir w;
  const Run r = run({"subdivide", w.mesh("torus")});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) != 0) continue;
    std::istringstream fields(line.substr(2));
    std::string num;
    while (fields >> num) {
      std::string digits;
      for (char ch : num.substr(0, num.find_first_of("eE"))) {
        if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
      }
      digits.erase(0, digits.find_first_not_of('0'));
      CHECK(digits.size() <= 12);
    }
  }
}
