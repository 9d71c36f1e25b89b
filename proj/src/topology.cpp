#include "pmspace/topology.hpp"

#include <algorithm>
#include <set>

namespace pmspace {

std::vector<std::pair<int, int>> mesh_edges(const Mesh& mesh) {
  std::vector<std::pair<int, int>> edges;
  std::set<std::pair<int, int>> seen;
  for (const Face& face : mesh.faces()) {
    const std::size_t k = face.size();
    for (std::size_t i = 0; i < k; ++i) {
      const int a = face[i];
      const int b = face[(i + 1) % k];
      const std::pair<int, int> e{std::min(a, b), std::max(a, b)};
      if (seen.insert(e).second) edges.push_back(e);
    }
  }
  return edges;
}

std::map<std::pair<int, int>, int> halfedge_faces(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> out;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const Face& face = mesh.face(f);
    const std::size_t k = face.size();
    for (std::size_t i = 0; i < k; ++i) out[{face[i], face[(i + 1) % k]}] = f;
  }
  return out;
}

std::vector<std::vector<int>> boundary_loops(const Mesh& mesh) {
  const auto he = halfedge_faces(mesh);
  std::multimap<int, int> next;  // boundary half-edge a -> b, keyed by a
  for (const auto& [edge, face] : he) {
    if (!he.contains({edge.second, edge.first})) next.emplace(edge.first, edge.second);
  }
  std::vector<std::vector<int>> loops;
  while (!next.empty()) {
    auto it = next.begin();
    const int start = it->first;
    std::vector<int> loop;
    int cur = start;
    while (true) {
      auto found = next.find(cur);
      if (found == next.end()) break;
      loop.push_back(cur);
      const int to = found->second;
      next.erase(found);
      cur = to;
      if (cur == start) break;
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

std::vector<std::vector<int>> vertex_neighbors(const Mesh& mesh) {
  std::vector<std::vector<int>> out(mesh.num_vertices());
  for (const auto& [a, b] : mesh_edges(mesh)) {
    out[a].push_back(b);
    out[b].push_back(a);
  }
  for (auto& list : out) std::sort(list.begin(), list.end());
  return out;
}

std::vector<std::vector<int>> vertex_face_fans(const Mesh& mesh) {
  const auto he = halfedge_faces(mesh);
  const int n = mesh.num_vertices();
  std::vector<std::vector<int>> incident(n);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int v : mesh.face(f)) incident[v].push_back(f);
  }
  auto neighbors_in_face = [&](int f, int v) {
    const Face& face = mesh.face(f);
    const std::size_t k = face.size();
    const std::size_t i = std::find(face.begin(), face.end(), v) - face.begin();
    return std::make_pair(face[(i + k - 1) % k], face[(i + 1) % k]);
  };
  // counter-clockwise successor crosses the edge to the previous vertex
  auto ccw_next = [&](int f, int v) -> int {
    const int prev = neighbors_in_face(f, v).first;
    auto it = he.find({v, prev});
    return it == he.end() ? -1 : it->second;
  };
  auto cw_next = [&](int f, int v) -> int {
    const int nxt = neighbors_in_face(f, v).second;
    auto it = he.find({nxt, v});
    return it == he.end() ? -1 : it->second;
  };

  std::vector<std::vector<int>> fans(n);
  for (int v = 0; v < n; ++v) {
    if (incident[v].empty()) continue;
    int start = incident[v].front();
    // rewind to the clockwise-most face on an open fan
    for (std::size_t guard = 0; guard < incident[v].size(); ++guard) {
      const int prev = cw_next(start, v);
      if (prev < 0 || prev == incident[v].front()) break;
      start = prev;
    }
    int cur = start;
    do {
      fans[v].push_back(cur);
      cur = ccw_next(cur, v);
    } while (cur >= 0 && cur != start && fans[v].size() <= incident[v].size());
  }
  return fans;
}

bool is_closed(const Mesh& mesh) {
  return mesh.num_faces() > 0 && boundary_loops(mesh).empty();
}

}  // namespace pmspace
