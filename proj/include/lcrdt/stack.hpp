#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lcrdt/dag.hpp"
#include "lcrdt/ordered_tree.hpp"
#include "lcrdt/sequence.hpp"
#include "lcrdt/set.hpp"
#include "lcrdt/tree_layers.hpp"

namespace lcrdt {

enum class StackKind : std::uint8_t { sequence = 0, tree = 1, ordered_tree = 2, dag = 3 };

const char* stack_kind_name(StackKind k);
StackKind stack_kind_from_name(const std::string& name);

// Parsed composition expression, e.g.
//   ordered-tree(connect=reappear,set=orset,pi=logoot)
// Unknown component names are rejected with the list of valid options.
struct StackSpec {
  StackKind kind = StackKind::ordered_tree;
  ConnectPolicy policy = ConnectPolicy::reappear;  // tree kinds
  bool counter_set = false;                        // default orset
  PiMode pi = PiMode::unique_site;                 // sequence orderings

  static StackSpec parse(const std::string& text);
  std::string to_string() const;
};

// One replica of an assembled layer stack, type-erased for the simulator.
// Local operations arrive as JSON (the trace format); positional references
// are interpreted modulo the current view so one trace replays on any stack
// of the same kind. Unsatisfiable operations yield zero envelopes.
class Replica {
 public:
  virtual ~Replica() = default;

  virtual ReplicaId id() const = 0;

  // Executes a local operation: translates it down the stack, applies it,
  // and returns the envelopes to broadcast.
  virtual std::vector<WireEnvelope> apply_local(const json& op) = 0;

  // Feeds one remote envelope through the delivery discipline.
  virtual void deliver(const WireEnvelope& env) = 0;

  // Canonical top-layer lookup.
  virtual json view() const = 0;

  // The same view recomputed non-incrementally from the replication layer.
  virtual json view_recomputed() const = 0;

  // Draws a random valid operation against the current view.
  virtual json propose(std::mt19937_64& rng, int insert_pct) = 0;

  // Canonical binary serialization of the full stack state.
  virtual std::vector<std::uint8_t> snapshot() const = 0;

  virtual std::size_t state_hash() const = 0;
};

using ReplicaFactory = std::function<std::unique_ptr<Replica>(ReplicaId)>;

ReplicaFactory make_replica_factory(const StackSpec& spec);

// Every composition exercised by the test suites.
std::vector<StackSpec> shipped_stacks();

namespace detail {

inline std::string random_label(std::mt19937_64& rng) {
  return std::string(1, static_cast<char>('a' + rng() % 26));
}

template <typename SetT, typename T>
void deliver_ready(Inbox& inbox, SetT& set, const WireEnvelope& env) {
  for (const auto& ready : inbox.offer(env)) {
    ByteReader r(ready.payload);
    set.apply(decode_message<T>(r));
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sequence stacks

template <typename SetT>
class SequenceReplica final : public Replica {
 public:
  SequenceReplica(ReplicaId id, PiMode mode)
      : id_(id), inbox_(id), layer_(PiGenerator(mode, id), SetT(id)) {}

  ReplicaId id() const override { return id_; }

  std::vector<WireEnvelope> apply_local(const json& op) override {
    const std::string type = op.at("type").get<std::string>();
    const std::size_t len = layer_.couples().size();
    SequenceOperation seq_op;
    if (type == "add") {
      seq_op = SequenceOperation::make_add(op.at("pos").get<std::size_t>() % (len + 1),
                                           op.at("label").get<std::string>());
    } else {
      if (len == 0) return {};
      seq_op = SequenceOperation::make_del(op.at("pos").get<std::size_t>() % len);
    }
    return emit(layer_.modify(seq_op));
  }

  void deliver(const WireEnvelope& env) override {
    detail::deliver_ready<SetT, Couple>(inbox_, layer_.inner(), env);
  }

  json view() const override { return json(layer_.lookup()); }
  json view_recomputed() const override { return json(layer_.lookup_recomputed()); }

  json propose(std::mt19937_64& rng, int insert_pct) override {
    const std::size_t len = layer_.couples().size();
    const bool insert = len == 0 || static_cast<int>(rng() % 100) < insert_pct;
    if (insert)
      return json{{"type", "add"}, {"pos", rng() % (len + 1)}, {"label", detail::random_label(rng)}};
    return json{{"type", "del"}, {"pos", rng() % len}};
  }

  std::vector<std::uint8_t> snapshot() const override {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(StackKind::sequence));
    layer_.encode_state(w);
    inbox_.encode(w);
    return w.take();
  }

  std::size_t state_hash() const override { return static_cast<std::size_t>(fnv1a64(snapshot())); }

  IncSequenceLayer<SetT>& layer() { return layer_; }

 private:
  std::vector<WireEnvelope> emit(const SetMessage<Couple>& msg) {
    if (message_is_inert(msg)) return {};
    ByteWriter w;
    encode_message(w, msg);
    WireEnvelope env{id_, ++next_seq_, 0, w.take()};
    inbox_.mark_sent(env.seq);
    return {std::move(env)};
  }

  ReplicaId id_;
  Inbox inbox_;
  std::uint64_t next_seq_ = 0;
  IncSequenceLayer<SetT> layer_;
};

// ---------------------------------------------------------------------------
// Unordered tree stacks

namespace detail {

// Pre-order positions of the view, root (empty path) first, children in
// alphabet order. Canonical addressing for trace operations.
template <typename L>
void view_positions(const TreeNode<L>& node, TreePath<L>& cur, std::vector<TreePath<L>>& out) {
  out.push_back(cur);
  for (const auto& [l, c] : node.children) {
    cur.push_back(l);
    view_positions(c, cur, out);
    cur.pop_back();
  }
}

template <typename L>
std::vector<TreePath<L>> view_positions(const TreeNode<L>& root) {
  std::vector<TreePath<L>> out;
  TreePath<L> cur;
  view_positions(root, cur, out);
  return out;
}

// k-th node in pre-order (0 = root) without materializing the position
// list; appends the node's label path to `out`.
template <typename L>
const TreeNode<L>* kth_node(const TreeNode<L>& node, std::size_t& k, TreePath<L>& out) {
  if (k == 0) return &node;
  --k;
  for (const auto& [l, c] : node.children) {
    out.push_back(l);
    if (const TreeNode<L>* hit = kth_node(c, k, out)) return hit;
    out.pop_back();
  }
  return nullptr;
}

// Same, tracking the 1-based child-index path instead.
template <typename L>
const TreeNode<L>* kth_node_indexed(const TreeNode<L>& node, std::size_t& k, IntPath& out) {
  if (k == 0) return &node;
  --k;
  std::size_t idx = 1;
  for (const auto& [l, c] : node.children) {
    out.push_back(idx);
    if (const TreeNode<L>* hit = kth_node_indexed(c, k, out)) return hit;
    out.pop_back();
    ++idx;
  }
  return nullptr;
}

}  // namespace detail

template <typename Layer>
class TreeReplica final : public Replica {
 public:
  using SetT = typename Layer::InnerSet;
  using Path = TreePath<std::string>;

  explicit TreeReplica(ReplicaId id) : id_(id), inbox_(id), layer_(SetT(id)) {}

  ReplicaId id() const override { return id_; }

  std::vector<WireEnvelope> apply_local(const json& op) override {
    const std::string type = op.at("type").get<std::string>();
    const auto& view = current_view();
    const std::size_t count = view.node_count() + 1;  // including the root
    if (type == "add") {
      std::size_t k = op.at("parent").get<std::size_t>() % count;
      Path path;
      detail::kth_node(view, k, path);
      path.push_back(op.at("label").get<std::string>());
      return emit(layer_.modify(TreeOperation<std::string>::make_add(std::move(path))));
    }
    if (count <= 1) return {};  // only the root: nothing to delete
    std::size_t k = 1 + op.at("node").get<std::size_t>() % (count - 1);
    Path path;
    detail::kth_node(view, k, path);
    return emit(layer_.modify(TreeOperation<std::string>::make_del(std::move(path))));
  }

  void deliver(const WireEnvelope& env) override {
    detail::deliver_ready<SetT, Path>(inbox_, layer_.inner(), env);
  }

  json view() const override { return tree_to_json(current_view()); }
  json view_recomputed() const override { return tree_to_json(layer_.view_recomputed()); }

  json propose(std::mt19937_64& rng, int insert_pct) override {
    const std::size_t count = current_view().node_count() + 1;
    const bool insert = count <= 1 || static_cast<int>(rng() % 100) < insert_pct;
    if (insert)
      return json{{"type", "add"}, {"parent", rng() % count}, {"label", detail::random_label(rng)}};
    return json{{"type", "del"}, {"node", rng() % (count - 1)}};
  }

  std::vector<std::uint8_t> snapshot() const override {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(StackKind::tree));
    layer_.encode_state(w);
    inbox_.encode(w);
    return w.take();
  }

  std::size_t state_hash() const override { return static_cast<std::size_t>(fnv1a64(snapshot())); }

  Layer& layer() { return layer_; }

 private:
  // binds a reference whether the layer returns its view by value or ref
  decltype(auto) current_view() const { return layer_.view(); }

  std::vector<WireEnvelope> emit(std::vector<SetMessage<Path>> msgs) {
    std::vector<WireEnvelope> out;
    for (auto& m : msgs) {
      if (message_is_inert(m)) continue;
      ByteWriter w;
      encode_message(w, m);
      WireEnvelope env{id_, ++next_seq_, 0, w.take()};
      inbox_.mark_sent(env.seq);
      out.push_back(std::move(env));
    }
    return out;
  }

  ReplicaId id_;
  Inbox inbox_;
  std::uint64_t next_seq_ = 0;
  Layer layer_;
};

// ---------------------------------------------------------------------------
// Ordered tree stacks

namespace detail {

inline void int_positions(const TreeNode<PiLabel>& node, IntPath& cur,
                          std::vector<IntPath>& out) {
  out.push_back(cur);
  std::size_t idx = 1;
  for (const auto& [l, c] : node.children) {
    cur.push_back(idx++);
    int_positions(c, cur, out);
    cur.pop_back();
  }
}

inline std::vector<IntPath> int_positions(const TreeNode<PiLabel>& root) {
  std::vector<IntPath> out;
  IntPath cur;
  int_positions(root, cur, out);
  return out;
}

json ordered_tree_to_json(const TreeNode<PiLabel>& node, bool is_root = true);

}  // namespace detail

template <typename ConnectLayer>
class OrderedTreeReplica final : public Replica {
 public:
  using SetT = typename ConnectLayer::InnerSet;

  OrderedTreeReplica(ReplicaId id, PiMode mode)
      : id_(id), inbox_(id), layer_(PiGenerator(mode, id), SetT(id)) {}

  ReplicaId id() const override { return id_; }

  std::vector<WireEnvelope> apply_local(const json& op) override {
    const std::string type = op.at("type").get<std::string>();
    const auto& view = current_view();
    IntPath raw = op.at("path").get<IntPath>();
    if (type == "add") {
      OrderedTreeOperation o =
          OrderedTreeOperation::make_add(normalize_add(view, raw), op.at("label").get<std::string>());
      return emit(layer_.modify(o));
    }
    auto del_path = normalize_del(view, raw);
    if (!del_path) return {};
    return emit(layer_.modify(OrderedTreeOperation::make_del(*del_path)));
  }

  void deliver(const WireEnvelope& env) override {
    detail::deliver_ready<SetT, OrderedPath>(inbox_, layer_.inner(), env);
  }

  json view() const override { return detail::ordered_tree_to_json(current_view()); }
  json view_recomputed() const override {
    return detail::ordered_tree_to_json(layer_.view_recomputed());
  }

  json propose(std::mt19937_64& rng, int insert_pct) override {
    const auto& view = current_view();
    const std::size_t count = view.node_count() + 1;
    const bool insert = count <= 1 || static_cast<int>(rng() % 100) < insert_pct;
    if (insert) {
      std::size_t k = rng() % count;
      IntPath p;
      const TreeNode<PiLabel>* node = detail::kth_node_indexed(view, k, p);
      p.push_back(1 + rng() % (node->children.size() + 1));
      return json{{"type", "add"}, {"path", p}, {"label", detail::random_label(rng)}};
    }
    std::size_t k = 1 + rng() % (count - 1);
    IntPath p;
    detail::kth_node_indexed(view, k, p);
    return json{{"type", "del"}, {"path", p}};
  }

  std::vector<std::uint8_t> snapshot() const override {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(StackKind::ordered_tree));
    layer_.encode_state(w);
    inbox_.encode(w);
    return w.take();
  }

  std::size_t state_hash() const override { return static_cast<std::size_t>(fnv1a64(snapshot())); }

  OrderedTreeLayer<ConnectLayer>& layer() { return layer_; }

 private:
  decltype(auto) current_view() const { return layer_.view(); }

  // Wraps each index into the current children count; a missing level turns
  // the remainder into an append at the reached node.
  static IntPath normalize_add(const TreeNode<PiLabel>& root, const IntPath& raw) {
    IntPath out;
    const TreeNode<PiLabel>* node = &root;
    for (std::size_t i = 0; i + 1 < raw.size(); ++i) {
      const std::size_t count = node->children.size();
      if (count == 0) break;
      const std::size_t idx = 1 + (raw[i] - 1) % count;
      out.push_back(idx);
      auto it = node->children.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(idx - 1));
      node = &it->second;
    }
    const std::size_t slot_raw = raw.empty() ? 1 : raw.back();
    out.push_back(1 + (slot_raw - 1) % (node->children.size() + 1));
    return out;
  }

  static std::optional<IntPath> normalize_del(const TreeNode<PiLabel>& root, const IntPath& raw) {
    if (raw.empty()) return std::nullopt;
    IntPath out;
    const TreeNode<PiLabel>* node = &root;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const std::size_t count = node->children.size();
      if (count == 0) {
        if (out.empty()) return std::nullopt;
        break;
      }
      const std::size_t idx = 1 + (raw[i] - 1) % count;
      out.push_back(idx);
      auto it = node->children.begin();
      std::advance(it, static_cast<std::ptrdiff_t>(idx - 1));
      node = &it->second;
    }
    return out;
  }

  std::vector<WireEnvelope> emit(std::vector<SetMessage<OrderedPath>> msgs) {
    std::vector<WireEnvelope> out;
    for (auto& m : msgs) {
      if (message_is_inert(m)) continue;
      ByteWriter w;
      encode_message(w, m);
      WireEnvelope env{id_, ++next_seq_, 0, w.take()};
      inbox_.mark_sent(env.seq);
      out.push_back(std::move(env));
    }
    return out;
  }

  ReplicaId id_;
  Inbox inbox_;
  std::uint64_t next_seq_ = 0;
  OrderedTreeLayer<ConnectLayer> layer_;
};

// ---------------------------------------------------------------------------
// Dag stacks

template <typename VSet, typename ESet>
class DagReplica final : public Replica {
 public:
  explicit DagReplica(ReplicaId id)
      : id_(id), inbox_(id), stack_(VSet(id), ESet(id), id) {}

  ReplicaId id() const override { return id_; }

  std::vector<WireEnvelope> apply_local(const json& op) override {
    const std::string type = op.at("type").get<std::string>();
    if (type == "add_vertex") return emit(stack_.add_vertex(op.at("id").get<std::string>()));
    const auto verts = stack_.vertex_set().lookup();
    if (type == "remove_vertex") {
      if (verts.empty()) return {};
      return emit(stack_.remove_vertex(verts[op.at("vertex").get<std::size_t>() % verts.size()].id));
    }
    if (type == "add_edge") {
      if (verts.size() < 2) return {};
      const std::size_t a = op.at("from").get<std::size_t>() % verts.size();
      std::size_t b = op.at("to").get<std::size_t>() % (verts.size() - 1);
      if (b >= a) ++b;
      return emit(stack_.add_edge(verts[a].id, verts[b].id));
    }
    const auto edges = stack_.edge_set().lookup();
    if (edges.empty()) return {};
    const auto& e = edges[op.at("edge").get<std::size_t>() % edges.size()];
    return emit(stack_.remove_edge(e.from, e.to));
  }

  void deliver(const WireEnvelope& env) override {
    for (const auto& ready : inbox_.offer(env)) {
      ByteReader r(ready.payload);
      if (ready.channel == 0)
        stack_.vertex_set().apply(decode_message<DagVertex>(r));
      else
        stack_.edge_set().apply(decode_message<DagEdge>(r));
    }
  }

  json view() const override { return dag_view_to_json(stack_.lookup()); }
  json view_recomputed() const override { return view(); }  // lookup is declarative

  json propose(std::mt19937_64& rng, int insert_pct) override {
    const auto verts = stack_.vertex_set().lookup();
    const auto edges = stack_.edge_set().lookup();
    bool insert = static_cast<int>(rng() % 100) < insert_pct;
    if (!insert && verts.empty()) insert = true;
    if (insert) {
      if (verts.size() >= 2 && rng() % 100 < 40)
        return json{{"type", "add_edge"}, {"from", rng() % verts.size()}, {"to", rng() % 1000}};
      return json{{"type", "add_vertex"}, {"id", "v" + std::to_string(id_) + "_" + std::to_string(++fresh_)}};
    }
    if (!edges.empty() && rng() % 2 == 0)
      return json{{"type", "remove_edge"}, {"edge", rng() % edges.size()}};
    return json{{"type", "remove_vertex"}, {"vertex", rng() % verts.size()}};
  }

  std::vector<std::uint8_t> snapshot() const override {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(StackKind::dag));
    stack_.encode_state(w);
    inbox_.encode(w);
    return w.take();
  }

  std::size_t state_hash() const override { return static_cast<std::size_t>(fnv1a64(snapshot())); }

  DagStack<VSet, ESet>& stack() { return stack_; }

 private:
  std::vector<WireEnvelope> emit(typename DagStack<VSet, ESet>::Emitted emitted) {
    std::vector<WireEnvelope> out;
    for (auto& m : emitted.vertex_msgs) {
      if (message_is_inert(m)) continue;
      ByteWriter w;
      encode_message(w, m);
      out.push_back(WireEnvelope{id_, ++next_seq_, 0, w.take()});
      inbox_.mark_sent(next_seq_);
    }
    for (auto& m : emitted.edge_msgs) {
      if (message_is_inert(m)) continue;
      ByteWriter w;
      encode_message(w, m);
      out.push_back(WireEnvelope{id_, ++next_seq_, 1, w.take()});
      inbox_.mark_sent(next_seq_);
    }
    return out;
  }

  ReplicaId id_;
  Inbox inbox_;
  std::uint64_t next_seq_ = 0;
  DagStack<VSet, ESet> stack_;
  std::uint64_t fresh_ = 0;
};

}  // namespace lcrdt
