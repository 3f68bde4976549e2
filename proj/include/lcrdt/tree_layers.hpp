#pragma once

#include <vector>

#include "lcrdt/set.hpp"
#include "lcrdt/tree.hpp"

namespace lcrdt {

template <typename L>
void encode_tree(ByteWriter& w, const TreeNode<L>& node) {
  Codec<L>::encode(w, node.label);
  w.u8(node.ghost ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(node.paths.size()));
  for (const auto& p : node.paths) Codec<TreePath<L>>::encode(w, p);
  w.u32(static_cast<std::uint32_t>(node.children.size()));
  for (const auto& [l, c] : node.children) encode_tree(w, c);
}

namespace detail {

template <typename L, typename SetT>
std::vector<SetMessage<TreePath<L>>> apply_stored_ops(SetT& set, const StoredOps<L>& ops) {
  std::vector<SetMessage<TreePath<L>>> msgs;
  msgs.reserve(ops.paths.size());
  for (const auto& p : ops.paths)
    msgs.push_back(ops.is_add ? set.local_add(p) : set.local_remove(p));
  return msgs;
}

}  // namespace detail

// Incremental reappear policy: removed nodes with descendants stay visible
// as ghosts; adding an orphan path recreates its lead-up as ghosts; ghost
// chains are purged bottom-up once their last descendant goes.
template <typename L, typename SetT>
class ReappearTreeLayer {
 public:
  using Path = TreePath<L>;
  using Message = SetMessage<Path>;
  using InnerSet = SetT;

  explicit ReappearTreeLayer(SetT set) : set_(std::move(set)) {
    set_.set_observer([this](SetEventKind k, const Path& p) { update(k, p); });
  }
  ReappearTreeLayer(const ReappearTreeLayer&) = delete;
  ReappearTreeLayer& operator=(const ReappearTreeLayer&) = delete;

  std::vector<Message> modify(const TreeOperation<L>& op) {
    auto ops = translate_tree_op(root_, op, ConnectPolicy::reappear);
    return detail::apply_stored_ops<L, SetT>(set_, ops);
  }

  void update(SetEventKind kind, const Path& path) {
    if (path.empty()) {
      log_anomaly("tree notification with empty path");
      return;
    }
    if (kind == SetEventKind::add) {
      Path parent(path.begin(), path.end() - 1);
      TreeNode<L>* father = resolve(root_, parent);
      if (father == nullptr) {
        auto& node = detail::ensure_chain(root_, path, true);  // reappear as ghosts
        node.ghost = false;
        node.paths.insert(path);
      } else {
        auto [it, inserted] = father->children.try_emplace(path.back());
        it->second.label = path.back();
        it->second.ghost = false;
        it->second.paths.insert(path);
      }
      return;
    }
    // del
    std::vector<TreeNode<L>*> chain{&root_};
    TreeNode<L>* node = &root_;
    for (const auto& l : path) {
      auto it = node->children.find(l);
      if (it == node->children.end()) {
        log_anomaly("reappear del for a path absent from the tree");
        return;
      }
      node = &it->second;
      chain.push_back(node);
    }
    node->paths.erase(path);
    if (!node->children.empty()) {
      node->ghost = true;  // keeps its place while descendants live
      return;
    }
    std::size_t idx = chain.size() - 1;
    for (;;) {  // purge the node, then any ghost-only ancestors
      chain[idx - 1]->children.erase(chain[idx]->label);
      --idx;
      if (idx == 0) break;
      if (!(chain[idx]->ghost && chain[idx]->children.empty())) break;
    }
  }

  const TreeNode<L>& view() const { return root_; }
  TreeNode<L> view_recomputed() const { return connect_lookup(set_.lookup(), ConnectPolicy::reappear); }

  SetT& inner() { return set_; }
  const SetT& inner() const { return set_; }
  static constexpr ConnectPolicy policy() { return ConnectPolicy::reappear; }

  void encode_state(ByteWriter& w) const {
    set_.encode_state(w);
    encode_tree(w, root_);
  }
  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  SetT set_;
  TreeNode<L> root_;
};

// Incremental root policy: orphan subtrees hang under the root, same-label
// orphans merge, and re-adding a missing path re-homes the orphans whose
// stored paths extend it. Nodes carry the original paths leading to them;
// path2node links every stored path to its node.
template <typename L, typename SetT>
class RootTreeLayer {
 public:
  using Path = TreePath<L>;
  using Message = SetMessage<Path>;
  using InnerSet = SetT;

  explicit RootTreeLayer(SetT set) : set_(std::move(set)) {
    set_.set_observer([this](SetEventKind k, const Path& p) { update(k, p); });
  }
  RootTreeLayer(const RootTreeLayer&) = delete;
  RootTreeLayer& operator=(const RootTreeLayer&) = delete;

  std::vector<Message> modify(const TreeOperation<L>& op) {
    auto ops = translate_tree_op(view(), op, ConnectPolicy::root);
    return detail::apply_stored_ops<L, SetT>(set_, ops);
  }

  void update(SetEventKind kind, const Path& path) {
    if (path.empty()) {
      log_anomaly("tree notification with empty path");
      return;
    }
    if (kind == SetEventKind::add) {
      Path father_path(path.begin(), path.end() - 1);
      Node* father = &root_;
      if (!father_path.empty()) {
        auto it = path2node_.find(father_path);
        father = it != path2node_.end() ? it->second : &root_;  // orphan goes under root
      }
      Node& node = add_child(*father, path.back(), path);
      path2node_[path] = &node;
      move_children(root_, node, path);  // reattach adopted orphans
      return;
    }
    auto it = path2node_.find(path);
    if (it == path2node_.end()) {
      log_anomaly("root del for an unknown path");
      return;
    }
    Node* node = it->second;
    path2node_.erase(it);
    node->paths.erase(path);
    move_children(*node, root_, path);
    if (node->paths.empty() && node->children.empty() && node->parent != nullptr)
      node->parent->children.erase(node->label);
  }

  TreeNode<L> view() const {
    TreeNode<L> out;
    to_view(root_, out);
    return out;
  }
  TreeNode<L> view_recomputed() const { return connect_lookup(set_.lookup(), ConnectPolicy::root); }

  SetT& inner() { return set_; }
  const SetT& inner() const { return set_; }
  static constexpr ConnectPolicy policy() { return ConnectPolicy::root; }

  void encode_state(ByteWriter& w) const {
    set_.encode_state(w);
    encode_tree(w, view());
  }
  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  struct Node {
    L label{};
    Node* parent = nullptr;
    std::set<Path> paths;
    std::map<L, Node> children;
  };

  Node& add_child(Node& parent, const L& label, const Path& stored) {
    auto [it, inserted] = parent.children.try_emplace(label);
    Node& node = it->second;
    if (inserted) {
      node.label = label;
      node.parent = &parent;
    }
    node.paths.insert(stored);  // same-label nodes fuse by unioning paths
    return node;
  }

  // Moves every child of src whose stored path equals path+label under
  // dest, recursively pulling the matching subtree along; sources emptied
  // of paths and children are pruned.
  void move_children(Node& src, Node& dest, const Path& path) {
    for (auto it = src.children.begin(); it != src.children.end();) {
      Node& child = it->second;
      Path child_path = path;
      child_path.push_back(child.label);
      if (child.paths.count(child_path) > 0) {
        child.paths.erase(child_path);
        Node& moved = add_child(dest, child.label, child_path);
        path2node_[child_path] = &moved;
        move_children(child, moved, child_path);
      }
      if (child.paths.empty() && child.children.empty())
        it = src.children.erase(it);
      else
        ++it;
    }
  }

  void to_view(const Node& node, TreeNode<L>& out) const {
    out.label = node.label;
    out.ghost = false;
    out.paths = node.paths;
    for (const auto& [l, c] : node.children) {
      TreeNode<L>& child = out.children[l];
      to_view(c, child);
    }
  }

  SetT set_;
  Node root_;
  std::map<Path, Node*> path2node_;
};

// Incremental skip policy: only the maximal prefix-closed subset of the
// stored paths is visible; the rest waits in a detached index and promotes
// in chains when the missing prefix is re-added.
template <typename L, typename SetT>
class SkipTreeLayer {
 public:
  using Path = TreePath<L>;
  using Message = SetMessage<Path>;
  using InnerSet = SetT;

  explicit SkipTreeLayer(SetT set) : set_(std::move(set)) {
    set_.set_observer([this](SetEventKind k, const Path& p) { update(k, p); });
  }
  SkipTreeLayer(const SkipTreeLayer&) = delete;
  SkipTreeLayer& operator=(const SkipTreeLayer&) = delete;

  std::vector<Message> modify(const TreeOperation<L>& op) {
    auto ops = translate_tree_op(root_, op, ConnectPolicy::skip);
    return detail::apply_stored_ops<L, SetT>(set_, ops);
  }

  void update(SetEventKind kind, const Path& path) {
    if (path.empty()) {
      log_anomaly("tree notification with empty path");
      return;
    }
    if (kind == SetEventKind::add) {
      Path parent(path.begin(), path.end() - 1);
      if (resolve(root_, parent) != nullptr)
        attach(path);
      else
        detached_.insert(path);
      return;
    }
    TreeNode<L>* node = resolve(root_, path);
    if (node == nullptr) {
      if (detached_.erase(path) == 0) log_anomaly("skip del for an unknown path");
      return;
    }
    for (const auto& q : subtree_paths(*node)) {
      if (q != path) detached_.insert(q);  // descendants become orphans
    }
    Path parent(path.begin(), path.end() - 1);
    resolve(root_, parent)->children.erase(path.back());
  }

  const TreeNode<L>& view() const { return root_; }
  TreeNode<L> view_recomputed() const { return connect_lookup(set_.lookup(), ConnectPolicy::skip); }

  SetT& inner() { return set_; }
  const SetT& inner() const { return set_; }
  static constexpr ConnectPolicy policy() { return ConnectPolicy::skip; }

  void encode_state(ByteWriter& w) const {
    set_.encode_state(w);
    encode_tree(w, root_);
    w.u32(static_cast<std::uint32_t>(detached_.size()));
    for (const auto& p : detached_) Codec<Path>::encode(w, p);
  }
  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  void attach(const Path& path) {
    auto& node = detail::ensure_chain(root_, path, false);
    node.ghost = false;
    node.paths.insert(path);
    // promote detached children chains
    std::vector<Path> ready;
    for (auto it = detached_.upper_bound(path); it != detached_.end(); ++it) {
      const Path& q = *it;
      if (q.size() <= path.size() || !std::equal(path.begin(), path.end(), q.begin())) break;
      if (q.size() == path.size() + 1) ready.push_back(q);
    }
    for (const auto& q : ready) {
      detached_.erase(q);
      attach(q);
    }
  }

  SetT set_;
  TreeNode<L> root_;
  std::set<Path> detached_;
};

// Incremental compact policy. Splice points depend non-locally on the
// stored set, so this layer keeps a mirror of the inner lookup and rebuilds
// its view per visibility change; the declarative function is the contract.
template <typename L, typename SetT>
class CompactTreeLayer {
 public:
  using Path = TreePath<L>;
  using Message = SetMessage<Path>;
  using InnerSet = SetT;

  explicit CompactTreeLayer(SetT set) : set_(std::move(set)) {
    set_.set_observer([this](SetEventKind k, const Path& p) { update(k, p); });
  }
  CompactTreeLayer(const CompactTreeLayer&) = delete;
  CompactTreeLayer& operator=(const CompactTreeLayer&) = delete;

  std::vector<Message> modify(const TreeOperation<L>& op) {
    auto ops = translate_tree_op(root_, op, ConnectPolicy::compact);
    return detail::apply_stored_ops<L, SetT>(set_, ops);
  }

  void update(SetEventKind kind, const Path& path) {
    if (kind == SetEventKind::add) {
      mirror_.push_back(path);
    } else {
      auto it = std::find(mirror_.begin(), mirror_.end(), path);
      if (it == mirror_.end()) {
        log_anomaly("compact del for a path absent from the mirror");
        return;
      }
      mirror_.erase(it);
    }
    root_ = connect_lookup(mirror_, ConnectPolicy::compact);
  }

  const TreeNode<L>& view() const { return root_; }
  TreeNode<L> view_recomputed() const { return connect_lookup(set_.lookup(), ConnectPolicy::compact); }

  SetT& inner() { return set_; }
  const SetT& inner() const { return set_; }
  static constexpr ConnectPolicy policy() { return ConnectPolicy::compact; }

  void encode_state(ByteWriter& w) const {
    set_.encode_state(w);
    encode_tree(w, root_);
  }
  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  SetT set_;
  TreeNode<L> root_;
  std::vector<Path> mirror_;
};

}  // namespace lcrdt
