#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcrdt/pi.hpp"
#include "lcrdt/set.hpp"
#include "lcrdt/tree.hpp"

namespace lcrdt {

// A tree label marked with a position identifier. Sibling order is the
// identifier order; equal identifiers across distinct labels (possible in
// content mode) break on the label.
struct PiLabel {
  std::string label;
  PositionIdentifier pi;

  auto operator<=>(const PiLabel& o) const {
    if (auto c = pi <=> o.pi; c != 0) return c;
    return label <=> o.label;
  }
  bool operator==(const PiLabel&) const = default;
};

inline std::string label_text(const PiLabel& l) { return l.label; }

template <>
struct Codec<PiLabel> {
  static void encode(ByteWriter& w, const PiLabel& l) {
    w.str(l.label);
    Codec<PositionIdentifier>::encode(w, l.pi);
  }
  static PiLabel decode(ByteReader& r) {
    PiLabel l;
    l.label = r.str();
    l.pi = Codec<PositionIdentifier>::decode(r);
    return l;
  }
  static json to_json(const PiLabel& l) {
    return json{{"label", l.label}, {"pi", Codec<PositionIdentifier>::to_json(l.pi)}};
  }
  static PiLabel from_json(const json& j) {
    return PiLabel{j.at("label").get<std::string>(),
                   Codec<PositionIdentifier>::from_json(j.at("pi"))};
  }
};

using OrderedPath = TreePath<PiLabel>;

// 1-based child indices from the application, e.g. 2.4.5.1.
using IntPath = std::vector<std::size_t>;

struct OrderedTreeOperation {
  enum class Type : std::uint8_t { add = 0, del = 1 };
  Type type = Type::add;
  IntPath path;
  std::string label;  // add only

  static OrderedTreeOperation make_add(IntPath p, std::string label) {
    return OrderedTreeOperation{Type::add, std::move(p), std::move(label)};
  }
  static OrderedTreeOperation make_del(IntPath p) {
    return OrderedTreeOperation{Type::del, std::move(p), {}};
  }
};

// Ordering layer stacked on a tree-connect layer: translates integer
// position paths into (label, pi) paths, generating the final identifier
// between the neighbors at the insertion slot. Children of a node are
// already kept in identifier order by the connect layer's child map.
template <typename ConnectLayer>
class OrderedTreeLayer {
 public:
  using Message = SetMessage<OrderedPath>;
  using InnerSet = typename ConnectLayer::InnerSet;

  OrderedTreeLayer(PiGenerator gen, InnerSet set) : gen_(gen), connect_(std::move(set)) {}
  OrderedTreeLayer(const OrderedTreeLayer&) = delete;
  OrderedTreeLayer& operator=(const OrderedTreeLayer&) = delete;

  std::vector<Message> modify(const OrderedTreeOperation& op) {
    const auto& view = connect_.view();
    if (op.type == OrderedTreeOperation::Type::add) {
      if (op.path.empty()) throw std::invalid_argument("ordered add: empty position path");
      OrderedPath parent;
      const TreeNode<PiLabel>* node = walk(view, op.path, op.path.size() - 1, parent);
      const std::size_t slot = op.path.back();
      const std::size_t count = node->children.size();
      if (slot < 1 || slot > count + 1)
        throw std::invalid_argument("ordered add: child index out of bounds");
      const PositionIdentifier& left =
          slot >= 2 ? child_at(*node, slot - 2).first.pi : PositionIdentifier::begin_sentinel();
      const PositionIdentifier& right =
          slot <= count ? child_at(*node, slot - 1).first.pi : PositionIdentifier::end_sentinel();
      OrderedPath full = parent;
      full.push_back(PiLabel{op.label, gen_.between(left, right, op.label)});
      return connect_.modify(TreeOperation<PiLabel>::make_add(std::move(full)));
    }
    OrderedPath target;
    walk(view, op.path, op.path.size(), target);
    if (target.empty()) throw std::invalid_argument("ordered del: cannot delete the root");
    return connect_.modify(TreeOperation<PiLabel>::make_del(std::move(target)));
  }

  // Resolves a 1-based integer path to the labelled view path.
  OrderedPath resolve_int_path(const IntPath& p) const {
    const auto& view = connect_.view();
    OrderedPath out;
    walk(view, p, p.size(), out);
    return out;
  }

  decltype(auto) view() const { return connect_.view(); }
  TreeNode<PiLabel> view_recomputed() const { return connect_.view_recomputed(); }

  ConnectLayer& connect() { return connect_; }
  const ConnectLayer& connect() const { return connect_; }
  auto& inner() { return connect_.inner(); }
  const auto& inner() const { return connect_.inner(); }
  PiGenerator& generator() { return gen_; }

  void encode_state(ByteWriter& w) const { connect_.encode_state(w); }
  std::size_t state_hash() const { return connect_.state_hash(); }

 private:
  static const std::pair<const PiLabel, TreeNode<PiLabel>>& child_at(const TreeNode<PiLabel>& node,
                                                                     std::size_t idx) {
    auto it = node.children.begin();
    std::advance(it, static_cast<std::ptrdiff_t>(idx));
    return *it;
  }

  // Follows `depth` indices of p from the root, appending couples to out.
  static const TreeNode<PiLabel>* walk(const TreeNode<PiLabel>& root, const IntPath& p,
                                       std::size_t depth, OrderedPath& out) {
    const TreeNode<PiLabel>* node = &root;
    for (std::size_t i = 0; i < depth; ++i) {
      const std::size_t idx = p[i];
      if (idx < 1 || idx > node->children.size())
        throw std::invalid_argument("ordered tree: position path does not resolve");
      const auto& entry = child_at(*node, idx - 1);
      out.push_back(entry.first);
      node = &entry.second;
    }
    return node;
  }

  PiGenerator gen_;
  ConnectLayer connect_;
};

}  // namespace lcrdt
