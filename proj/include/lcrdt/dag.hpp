#pragma once

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcrdt/set.hpp"

namespace lcrdt {

struct DagVertex {
  std::string id;
  std::string payload;

  auto operator<=>(const DagVertex&) const = default;
};

// Edge element; the creation stamp makes re-added dependencies distinct set
// elements and provides the deterministic cycle tie-break.
struct DagEdge {
  std::string from;
  std::string to;
  Tag stamp;

  auto operator<=>(const DagEdge&) const = default;
};

// Stamp order: (counter, replica) lexicographic — first writer wins.
inline bool stamp_less(const Tag& a, const Tag& b) {
  if (a.counter != b.counter) return a.counter < b.counter;
  return a.origin < b.origin;
}

template <>
struct Codec<DagVertex> {
  static void encode(ByteWriter& w, const DagVertex& v) {
    w.str(v.id);
    w.str(v.payload);
  }
  static DagVertex decode(ByteReader& r) {
    DagVertex v;
    v.id = r.str();
    v.payload = r.str();
    return v;
  }
  static json to_json(const DagVertex& v) {
    json j{{"id", v.id}};
    if (!v.payload.empty()) j["payload"] = v.payload;
    return j;
  }
  static DagVertex from_json(const json& j) {
    return DagVertex{j.at("id").get<std::string>(),
                     j.value("payload", std::string{})};
  }
};

template <>
struct Codec<DagEdge> {
  static void encode(ByteWriter& w, const DagEdge& e) {
    w.str(e.from);
    w.str(e.to);
    Codec<Tag>::encode(w, e.stamp);
  }
  static DagEdge decode(ByteReader& r) {
    DagEdge e;
    e.from = r.str();
    e.to = r.str();
    e.stamp = Codec<Tag>::decode(r);
    return e;
  }
  static json to_json(const DagEdge& e) {
    return json{{"from", e.from}, {"to", e.to}, {"stamp", Codec<Tag>::to_json(e.stamp)}};
  }
  static DagEdge from_json(const json& j) {
    return DagEdge{j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                   Codec<Tag>::from_json(j.at("stamp"))};
  }
};

struct DagView {
  std::set<std::string> vertices;
  std::vector<DagEdge> retained;
  std::vector<DagEdge> suppressed;

  bool operator==(const DagView&) const = default;
};

// Deterministic acyclic view of the two set lookups: edges with a missing
// endpoint are hidden; the rest are admitted in ascending stamp order,
// rejecting any edge that would close a cycle.
DagView uncycle_lookup(const std::vector<DagVertex>& vertices, const std::vector<DagEdge>& edges);

bool dag_is_acyclic(const DagView& view);

// Graphviz dump: retained edges solid, suppressed dashed.
std::string dag_to_dot(const DagView& view);

json dag_view_to_json(const DagView& view);

// Task-dependency data type: an un-cycling adaptation layer over two
// replicated sets (vertices and edges). The two sets are distinct wire
// channels of the same replica.
template <typename VSet, typename ESet>
class DagStack {
 public:
  struct Emitted {
    std::vector<SetMessage<DagVertex>> vertex_msgs;
    std::vector<SetMessage<DagEdge>> edge_msgs;
  };

  DagStack(VSet vset, ESet eset, ReplicaId origin)
      : vset_(std::move(vset)), eset_(std::move(eset)), origin_(origin) {}

  Emitted add_vertex(const std::string& id, const std::string& payload = {}) {
    Emitted out;
    out.vertex_msgs.push_back(vset_.local_add(DagVertex{id, payload}));
    return out;
  }

  Emitted remove_vertex(const std::string& id) {
    Emitted out;
    auto victims = visible_vertices(id);
    if (victims.empty()) throw std::invalid_argument("dag remove_vertex: unknown vertex");
    for (const auto& v : victims) out.vertex_msgs.push_back(vset_.local_remove(v));
    for (const auto& e : eset_.lookup()) {
      if (e.from == id || e.to == id) out.edge_msgs.push_back(eset_.local_remove(e));
    }
    return out;
  }

  Emitted add_edge(const std::string& from, const std::string& to) {
    if (visible_vertices(from).empty() || visible_vertices(to).empty())
      throw std::invalid_argument("dag add_edge: unknown endpoint");
    Emitted out;
    out.edge_msgs.push_back(eset_.local_add(DagEdge{from, to, Tag{origin_, ++edge_counter_}}));
    return out;
  }

  Emitted remove_edge(const std::string& from, const std::string& to) {
    Emitted out;
    for (const auto& e : eset_.lookup()) {
      if (e.from == from && e.to == to) out.edge_msgs.push_back(eset_.local_remove(e));
    }
    if (out.edge_msgs.empty()) throw std::invalid_argument("dag remove_edge: unknown edge");
    return out;
  }

  DagView lookup() const { return uncycle_lookup(vset_.lookup(), eset_.lookup()); }

  VSet& vertex_set() { return vset_; }
  const VSet& vertex_set() const { return vset_; }
  ESet& edge_set() { return eset_; }
  const ESet& edge_set() const { return eset_; }
  ReplicaId origin() const { return origin_; }
  std::uint64_t edge_counter() const { return edge_counter_; }

  void encode_state(ByteWriter& w) const {
    vset_.encode_state(w);
    eset_.encode_state(w);
  }
  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  std::vector<DagVertex> visible_vertices(const std::string& id) const {
    std::vector<DagVertex> out;
    for (const auto& v : vset_.lookup()) {
      if (v.id == id) out.push_back(v);
    }
    return out;
  }

  VSet vset_;
  ESet eset_;
  ReplicaId origin_;
  std::uint64_t edge_counter_ = 0;
};

}  // namespace lcrdt
