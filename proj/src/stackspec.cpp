#include "lcrdt/stack.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace lcrdt {

namespace detail {

json ordered_tree_to_json(const TreeNode<PiLabel>& node, bool is_root) {
  json j;
  if (!is_root) {
    j["label"] = node.label.label;
    j["pi"] = node.label.pi.to_text();
    if (node.ghost) j["ghost"] = true;
  }
  json children = json::array();
  for (const auto& [l, c] : node.children) children.push_back(ordered_tree_to_json(c, false));
  j["children"] = std::move(children);
  return j;
}

}  // namespace detail

const char* stack_kind_name(StackKind k) {
  switch (k) {
    case StackKind::sequence: return "seq";
    case StackKind::tree: return "tree";
    case StackKind::ordered_tree: return "otree";
    case StackKind::dag: return "dag";
  }
  return "?";
}

StackKind stack_kind_from_name(const std::string& name) {
  if (name == "seq" || name == "sequence") return StackKind::sequence;
  if (name == "tree") return StackKind::tree;
  if (name == "otree" || name == "ordered-tree") return StackKind::ordered_tree;
  if (name == "dag") return StackKind::dag;
  throw std::invalid_argument("unknown stack kind '" + name + "' (valid: seq, tree, ordered-tree, dag)");
}

namespace {

std::string trimmed(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  auto e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return {};
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* options) {
  throw std::invalid_argument("invalid " + key + " '" + value + "' (valid: " + options + ")");
}

}  // namespace

StackSpec StackSpec::parse(const std::string& text) {
  std::string s = trimmed(text);
  std::string name = s;
  std::string args;
  if (auto p = s.find('('); p != std::string::npos) {
    if (s.back() != ')') throw std::invalid_argument("stack spec: missing ')'");
    name = trimmed(s.substr(0, p));
    args = s.substr(p + 1, s.size() - p - 2);
  }

  StackSpec spec;
  spec.kind = stack_kind_from_name(name);

  std::stringstream ss(args);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trimmed(item);
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("stack spec: expected key=value, got '" + item + "'");
    std::string key = trimmed(item.substr(0, eq));
    std::string value = trimmed(item.substr(eq + 1));

    if (key == "set") {
      if (value == "orset")
        spec.counter_set = false;
      else if (value == "counterset")
        spec.counter_set = true;
      else
        bad_value(key, value, "orset, counterset");
    } else if (key == "pi") {
      if (spec.kind != StackKind::sequence && spec.kind != StackKind::ordered_tree)
        throw std::invalid_argument("stack spec: 'pi' applies to seq and ordered-tree only");
      if (value == "logoot" || value == "unique")
        spec.pi = PiMode::unique_site;
      else if (value == "content")
        spec.pi = PiMode::content;
      else
        bad_value(key, value, "logoot, content");
    } else if (key == "connect") {
      if (spec.kind != StackKind::tree && spec.kind != StackKind::ordered_tree)
        throw std::invalid_argument("stack spec: 'connect' applies to tree and ordered-tree only");
      if (value == "skip")
        spec.policy = ConnectPolicy::skip;
      else if (value == "reappear")
        spec.policy = ConnectPolicy::reappear;
      else if (value == "root")
        spec.policy = ConnectPolicy::root;
      else if (value == "compact")
        spec.policy = ConnectPolicy::compact;
      else
        bad_value(key, value, "skip, reappear, root, compact");
    } else {
      throw std::invalid_argument("stack spec: unknown key '" + key +
                                  "' (valid: connect, set, pi)");
    }
  }
  return spec;
}

std::string StackSpec::to_string() const {
  const char* set = counter_set ? "counterset" : "orset";
  const char* pim = pi == PiMode::unique_site ? "logoot" : "content";
  std::ostringstream os;
  switch (kind) {
    case StackKind::sequence:
      os << "seq(pi=" << pim << ",set=" << set << ")";
      break;
    case StackKind::tree:
      os << "tree(connect=" << policy_name(policy) << ",set=" << set << ")";
      break;
    case StackKind::ordered_tree:
      os << "ordered-tree(connect=" << policy_name(policy) << ",set=" << set << ",pi=" << pim << ")";
      break;
    case StackKind::dag:
      os << "dag(set=" << set << ")";
      break;
  }
  return os.str();
}

namespace {

using StringPath = TreePath<std::string>;

template <template <typename, typename> class LayerT, typename SetT>
ReplicaFactory tree_factory() {
  return [](ReplicaId id) -> std::unique_ptr<Replica> {
    return std::make_unique<TreeReplica<LayerT<std::string, SetT>>>(id);
  };
}

template <template <typename, typename> class LayerT, typename SetT>
ReplicaFactory otree_factory(PiMode pi) {
  return [pi](ReplicaId id) -> std::unique_ptr<Replica> {
    return std::make_unique<OrderedTreeReplica<LayerT<PiLabel, SetT>>>(id, pi);
  };
}

template <template <typename> class SetFamily>
ReplicaFactory dispatch_tree(ConnectPolicy policy) {
  using SetT = SetFamily<StringPath>;
  switch (policy) {
    case ConnectPolicy::skip: return tree_factory<SkipTreeLayer, SetT>();
    case ConnectPolicy::reappear: return tree_factory<ReappearTreeLayer, SetT>();
    case ConnectPolicy::root: return tree_factory<RootTreeLayer, SetT>();
    case ConnectPolicy::compact: return tree_factory<CompactTreeLayer, SetT>();
  }
  throw std::logic_error("unreachable");
}

template <template <typename> class SetFamily>
ReplicaFactory dispatch_otree(ConnectPolicy policy, PiMode pi) {
  using SetT = SetFamily<OrderedPath>;
  switch (policy) {
    case ConnectPolicy::skip: return otree_factory<SkipTreeLayer, SetT>(pi);
    case ConnectPolicy::reappear: return otree_factory<ReappearTreeLayer, SetT>(pi);
    case ConnectPolicy::root: return otree_factory<RootTreeLayer, SetT>(pi);
    case ConnectPolicy::compact: return otree_factory<CompactTreeLayer, SetT>(pi);
  }
  throw std::logic_error("unreachable");
}

}  // namespace

ReplicaFactory make_replica_factory(const StackSpec& spec) {
  switch (spec.kind) {
    case StackKind::sequence:
      if (spec.counter_set)
        return [pi = spec.pi](ReplicaId id) -> std::unique_ptr<Replica> {
          return std::make_unique<SequenceReplica<CounterSet<Couple>>>(id, pi);
        };
      return [pi = spec.pi](ReplicaId id) -> std::unique_ptr<Replica> {
        return std::make_unique<SequenceReplica<ORSet<Couple>>>(id, pi);
      };
    case StackKind::tree:
      return spec.counter_set ? dispatch_tree<CounterSet>(spec.policy)
                              : dispatch_tree<ORSet>(spec.policy);
    case StackKind::ordered_tree:
      return spec.counter_set ? dispatch_otree<CounterSet>(spec.policy, spec.pi)
                              : dispatch_otree<ORSet>(spec.policy, spec.pi);
    case StackKind::dag:
      if (spec.counter_set)
        return [](ReplicaId id) -> std::unique_ptr<Replica> {
          return std::make_unique<DagReplica<CounterSet<DagVertex>, CounterSet<DagEdge>>>(id);
        };
      return [](ReplicaId id) -> std::unique_ptr<Replica> {
        return std::make_unique<DagReplica<ORSet<DagVertex>, ORSet<DagEdge>>>(id);
      };
  }
  throw std::logic_error("unreachable");
}

std::vector<StackSpec> shipped_stacks() {
  std::vector<StackSpec> out;
  for (bool counter : {false, true})
    for (PiMode pi : {PiMode::unique_site, PiMode::content}) {
      StackSpec s;
      s.kind = StackKind::sequence;
      s.counter_set = counter;
      s.pi = pi;
      out.push_back(s);
    }
  for (ConnectPolicy p : {ConnectPolicy::skip, ConnectPolicy::reappear, ConnectPolicy::root,
                          ConnectPolicy::compact}) {
    StackSpec s;
    s.kind = StackKind::tree;
    s.policy = p;
    out.push_back(s);
  }
  {
    StackSpec s;  // counter-backed tree variant
    s.kind = StackKind::tree;
    s.policy = ConnectPolicy::reappear;
    s.counter_set = true;
    out.push_back(s);
  }
  for (ConnectPolicy p : {ConnectPolicy::skip, ConnectPolicy::reappear}) {
    StackSpec s;
    s.kind = StackKind::ordered_tree;
    s.policy = p;
    out.push_back(s);
  }
  {
    StackSpec s;
    s.kind = StackKind::dag;
    out.push_back(s);
  }
  return out;
}

}  // namespace lcrdt
