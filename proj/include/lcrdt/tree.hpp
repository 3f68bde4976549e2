#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcrdt/codec.hpp"

namespace lcrdt {

template <typename L>
using TreePath = std::vector<L>;

// Orphan processing order: shortest first, then alphabet order.
template <typename L>
struct ShortLex {
  bool operator()(const TreePath<L>& a, const TreePath<L>& b) const {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
  }
};

enum class ConnectPolicy : std::uint8_t { skip = 0, reappear = 1, root = 2, compact = 3 };

inline const char* policy_name(ConnectPolicy p) {
  switch (p) {
    case ConnectPolicy::skip: return "skip";
    case ConnectPolicy::reappear: return "reappear";
    case ConnectPolicy::root: return "root";
    case ConnectPolicy::compact: return "compact";
  }
  return "?";
}

// View node. `paths` holds the stored paths placed at this node (what a
// delete must suppress from the inner set); `ghost` marks reappear nodes
// whose own path is absent from the set.
template <typename L>
struct TreeNode {
  L label{};
  bool ghost = false;
  std::set<TreePath<L>> paths;
  std::map<L, TreeNode<L>> children;

  bool operator==(const TreeNode&) const = default;

  std::size_t node_count() const {  // excluding this node
    std::size_t n = children.size();
    for (const auto& [l, c] : children) n += c.node_count();
    return n;
  }
};

template <typename L>
const TreeNode<L>* resolve(const TreeNode<L>& root, const TreePath<L>& path) {
  const TreeNode<L>* node = &root;
  for (const auto& l : path) {
    auto it = node->children.find(l);
    if (it == node->children.end()) return nullptr;
    node = &it->second;
  }
  return node;
}

template <typename L>
TreeNode<L>* resolve(TreeNode<L>& root, const TreePath<L>& path) {
  return const_cast<TreeNode<L>*>(resolve(static_cast<const TreeNode<L>&>(root), path));
}

template <typename L>
void collect_paths(const TreeNode<L>& node, std::vector<TreePath<L>>& out) {
  out.insert(out.end(), node.paths.begin(), node.paths.end());
  for (const auto& [l, c] : node.children) collect_paths(c, out);
}

// Every stored path placed in this subtree, deepest first.
template <typename L>
std::vector<TreePath<L>> subtree_paths(const TreeNode<L>& node) {
  std::vector<TreePath<L>> out;
  collect_paths(node, out);
  std::sort(out.begin(), out.end(), ShortLex<L>{});
  std::reverse(out.begin(), out.end());
  return out;
}

namespace detail {

template <typename L>
TreeNode<L>& ensure_chain(TreeNode<L>& root, const TreePath<L>& path, bool created_ghost) {
  TreeNode<L>* node = &root;
  for (const auto& l : path) {
    auto [it, inserted] = node->children.try_emplace(l);
    if (inserted) {
      it->second.label = l;
      it->second.ghost = created_ghost;
    }
    node = &it->second;
  }
  return *node;
}

template <typename L>
bool is_orphan(const std::set<TreePath<L>>& ls, const TreePath<L>& p) {
  TreePath<L> prefix;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    prefix.push_back(p[i]);
    if (!ls.count(prefix)) return true;
  }
  return false;
}

// Start of the trailing run of present prefixes: a_1..a_{j-1} absent,
// a_1..a_k present for all k in [j, n].
template <typename L>
std::size_t present_run_start(const std::set<TreePath<L>>& ls, const TreePath<L>& p) {
  std::size_t j = 1;
  TreePath<L> prefix;
  for (std::size_t len = 1; len < p.size(); ++len) {
    prefix.push_back(p[len - 1]);
    if (!ls.count(prefix)) j = len + 1;
  }
  return j;
}

}  // namespace detail

// Deterministic view of a set of label paths under one connection policy.
// Orphans (paths with an absent prefix) are processed shortest-first then
// alphabet order:
//   skip     drops the orphan path;
//   reappear recreates the missing lead-up as ghosts;
//   root     places the orphan subtree under the root;
//   compact  splices it under its longest non-orphan prefix.
template <typename L>
TreeNode<L> connect_lookup(const std::vector<TreePath<L>>& paths, ConnectPolicy policy) {
  std::set<TreePath<L>> ls(paths.begin(), paths.end());
  std::set<TreePath<L>, ShortLex<L>> ordered(paths.begin(), paths.end());

  TreeNode<L> root;
  std::vector<const TreePath<L>*> orphans;
  for (const auto& p : ordered) {
    if (p.empty()) continue;  // the root is implicit
    if (detail::is_orphan(ls, p)) {
      orphans.push_back(&p);
      continue;
    }
    auto& node = detail::ensure_chain(root, p, false);
    node.ghost = false;
    node.paths.insert(p);
  }

  for (const auto* pp : orphans) {
    const TreePath<L>& p = *pp;
    switch (policy) {
      case ConnectPolicy::skip:
        break;
      case ConnectPolicy::reappear: {
        auto& node = detail::ensure_chain(root, p, true);
        node.ghost = false;
        node.paths.insert(p);
        break;
      }
      case ConnectPolicy::root: {
        const std::size_t j = detail::present_run_start(ls, p);
        TreePath<L> placed(p.begin() + (j - 1), p.end());
        auto& node = detail::ensure_chain(root, placed, false);
        node.ghost = false;
        node.paths.insert(p);
        break;
      }
      case ConnectPolicy::compact: {
        const std::size_t j = detail::present_run_start(ls, p);
        // Longest already-placed prefix whose extension is absent from LS.
        std::size_t m = 0;
        for (std::size_t cand = j; cand-- > 0;) {
          TreePath<L> prefix(p.begin(), p.begin() + cand);
          TreePath<L> next(p.begin(), p.begin() + cand + 1);
          if (!ls.count(next) && resolve(root, prefix) != nullptr) {
            m = cand;
            break;
          }
        }
        TreePath<L> placed(p.begin(), p.begin() + m);
        placed.insert(placed.end(), p.begin() + (j - 1), p.end());
        auto& node = detail::ensure_chain(root, placed, false);
        node.ghost = false;
        node.paths.insert(p);
        break;
      }
    }
  }
  return root;
}

template <typename L>
json tree_to_json(const TreeNode<L>& node, bool include_paths = false, bool is_root = true) {
  json j;
  if (!is_root) {
    j["label"] = Codec<L>::to_json(node.label);
    if (node.ghost) j["ghost"] = true;
  }
  if (include_paths && !node.paths.empty()) {
    json ps = json::array();
    for (const auto& p : node.paths) ps.push_back(Codec<TreePath<L>>::to_json(p));
    j["paths"] = std::move(ps);
  }
  json children = json::array();
  for (const auto& [l, c] : node.children) children.push_back(tree_to_json(c, include_paths, false));
  j["children"] = std::move(children);
  return j;
}

inline std::string label_text(const std::string& l) { return l; }

template <typename L>
void tree_to_text(const TreeNode<L>& node, std::string& out, int depth = 0) {
  if (depth > 0) {
    out.append(static_cast<std::size_t>(depth - 1) * 2, ' ');
    out += label_text(node.label);
    if (node.ghost) out += " (ghost)";
    out += '\n';
  }
  for (const auto& [l, c] : node.children) tree_to_text(c, out, depth + 1);
}

template <typename L>
std::string tree_to_text(const TreeNode<L>& node) {
  std::string out;
  tree_to_text(node, out, 0);
  return out;
}

// Tree-level operation; for add the path names the new node's view
// position (parent path plus the new label).
template <typename L>
struct TreeOperation {
  enum class Type : std::uint8_t { add = 0, del = 1 };
  Type type = Type::add;
  TreePath<L> path;

  static TreeOperation make_add(TreePath<L> p) { return TreeOperation{Type::add, std::move(p)}; }
  static TreeOperation make_del(TreePath<L> p) { return TreeOperation{Type::del, std::move(p)}; }
};

// Translates a view-level operation into the stored paths to add/remove.
// Under skip and reappear the view path is the stored path; under root and
// compact a node stands for every original path in its `paths` decoration.
template <typename L>
struct StoredOps {
  bool is_add = false;
  std::vector<TreePath<L>> paths;
};

template <typename L>
StoredOps<L> translate_tree_op(const TreeNode<L>& view_root, const TreeOperation<L>& op,
                               ConnectPolicy policy) {
  if (op.path.empty()) throw std::invalid_argument("tree op: empty path");
  StoredOps<L> out;
  if (op.type == TreeOperation<L>::Type::add) {
    out.is_add = true;
    TreePath<L> parent_path(op.path.begin(), op.path.end() - 1);
    const TreeNode<L>* parent = resolve(view_root, parent_path);
    if (!parent) throw std::invalid_argument("tree add: parent path does not resolve");
    const L& label = op.path.back();
    if (policy == ConnectPolicy::skip || policy == ConnectPolicy::reappear || parent_path.empty() ||
        parent->paths.empty()) {
      out.paths.push_back(op.path);
    } else {
      for (const auto& p : parent->paths) {
        TreePath<L> stored = p;
        stored.push_back(label);
        out.paths.push_back(std::move(stored));
      }
    }
  } else {
    const TreeNode<L>* node = resolve(view_root, op.path);
    if (!node) throw std::invalid_argument("tree del: path does not resolve");
    out.paths = subtree_paths(*node);
  }
  return out;
}

}  // namespace lcrdt
