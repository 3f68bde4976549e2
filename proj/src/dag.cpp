#include "lcrdt/dag.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>

namespace lcrdt {

namespace {

// Breadth-first reachability over the admitted adjacency.
bool reaches(const std::map<std::string, std::vector<std::string>>& adj, const std::string& from,
             const std::string& to) {
  if (from == to) return true;
  std::deque<std::string> queue{from};
  std::set<std::string> seen{from};
  while (!queue.empty()) {
    std::string cur = std::move(queue.front());
    queue.pop_front();
    auto it = adj.find(cur);
    if (it == adj.end()) continue;
    for (const auto& next : it->second) {
      if (next == to) return true;
      if (seen.insert(next).second) queue.push_back(next);
    }
  }
  return false;
}

}  // namespace

DagView uncycle_lookup(const std::vector<DagVertex>& vertices, const std::vector<DagEdge>& edges) {
  DagView view;
  for (const auto& v : vertices) view.vertices.insert(v.id);

  std::vector<DagEdge> candidates;
  for (const auto& e : edges) {
    if (view.vertices.count(e.from) && view.vertices.count(e.to)) candidates.push_back(e);
  }
  std::sort(candidates.begin(), candidates.end(), [](const DagEdge& a, const DagEdge& b) {
    if (a.stamp != b.stamp) return stamp_less(a.stamp, b.stamp);
    return std::tie(a.from, a.to) < std::tie(b.from, b.to);
  });

  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& e : candidates) {
    if (reaches(adj, e.to, e.from)) {
      view.suppressed.push_back(e);
    } else {
      adj[e.from].push_back(e.to);
      view.retained.push_back(e);
    }
  }
  return view;
}

bool dag_is_acyclic(const DagView& view) {
  // Kahn: a topological order must consume every retained edge.
  std::map<std::string, std::size_t> in_degree;
  std::map<std::string, std::vector<std::string>> adj;
  for (const auto& v : view.vertices) in_degree[v] = 0;
  for (const auto& e : view.retained) {
    adj[e.from].push_back(e.to);
    ++in_degree[e.to];
  }
  std::deque<std::string> ready;
  for (const auto& [v, d] : in_degree) {
    if (d == 0) ready.push_back(v);
  }
  std::size_t emitted = 0;
  while (!ready.empty()) {
    std::string v = std::move(ready.front());
    ready.pop_front();
    ++emitted;
    for (const auto& next : adj[v]) {
      if (--in_degree[next] == 0) ready.push_back(next);
    }
  }
  return emitted == view.vertices.size();
}

std::string dag_to_dot(const DagView& view) {
  std::ostringstream os;
  os << "digraph tasks {\n";
  for (const auto& v : view.vertices) os << "  \"" << v << "\";\n";
  for (const auto& e : view.retained)
    os << "  \"" << e.from << "\" -> \"" << e.to << "\";\n";
  for (const auto& e : view.suppressed)
    os << "  \"" << e.from << "\" -> \"" << e.to << "\" [style=dashed];\n";
  os << "}\n";
  return os.str();
}

json dag_view_to_json(const DagView& view) {
  json j;
  j["vertices"] = json::array();
  for (const auto& v : view.vertices) j["vertices"].push_back(v);
  auto edges_json = [](const std::vector<DagEdge>& es) {
    json a = json::array();
    for (const auto& e : es) a.push_back(Codec<DagEdge>::to_json(e));
    return a;
  };
  j["retained"] = edges_json(view.retained);
  j["suppressed"] = edges_json(view.suppressed);
  return j;
}

}  // namespace lcrdt
