#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "lcrdt/pi.hpp"
#include "lcrdt/set.hpp"

namespace lcrdt {

// A label paired with its immutable position identifier; what the
// replicated set stores for sequences.
struct Couple {
  std::string label;
  PositionIdentifier pi;

  // Ordered by position; ties between identifiers (possible in content
  // mode across distinct labels) break on the label.
  auto operator<=>(const Couple& o) const {
    if (auto c = pi <=> o.pi; c != 0) return c;
    return label <=> o.label;
  }
  bool operator==(const Couple&) const = default;
};

template <>
struct Codec<Couple> {
  static void encode(ByteWriter& w, const Couple& c) {
    w.str(c.label);
    Codec<PositionIdentifier>::encode(w, c.pi);
  }
  static Couple decode(ByteReader& r) {
    Couple c;
    c.label = r.str();
    c.pi = Codec<PositionIdentifier>::decode(r);
    return c;
  }
  static json to_json(const Couple& c) {
    return json{{"label", c.label}, {"pi", Codec<PositionIdentifier>::to_json(c.pi)}};
  }
  static Couple from_json(const json& j) {
    return Couple{j.at("label").get<std::string>(),
                  Codec<PositionIdentifier>::from_json(j.at("pi"))};
  }
};

// Ordered list built from a set of couples.
inline std::vector<Couple> order_couples(std::vector<Couple> cs) {
  std::sort(cs.begin(), cs.end());
  return cs;
}

// Index where (pi, label) inserts into a sorted couple list.
inline std::size_t insert_pos(const std::vector<Couple>& sorted, const PositionIdentifier& pi,
                              const std::string& label) {
  Couple probe{label, pi};
  auto it = std::lower_bound(sorted.begin(), sorted.end(), probe);
  return static_cast<std::size_t>(it - sorted.begin());
}

struct SequenceOperation {
  enum class Type : std::uint8_t { add = 0, del = 1 };
  Type type = Type::add;
  std::size_t position = 0;
  std::string label;  // add only

  static SequenceOperation make_add(std::size_t pos, std::string label) {
    return SequenceOperation{Type::add, pos, std::move(label)};
  }
  static SequenceOperation make_del(std::size_t pos) {
    return SequenceOperation{Type::del, pos, {}};
  }
};

namespace detail {

template <typename SetT>
SetMessage<Couple> seq_modify(SetT& set, PiGenerator& gen, const std::vector<Couple>& list,
                              const SequenceOperation& op) {
  if (op.type == SequenceOperation::Type::add) {
    if (op.position > list.size()) throw std::invalid_argument("sequence add: position out of bounds");
    const PositionIdentifier& left =
        op.position == 0 ? PositionIdentifier::begin_sentinel() : list[op.position - 1].pi;
    const PositionIdentifier& right =
        op.position == list.size() ? PositionIdentifier::end_sentinel() : list[op.position].pi;
    Couple c{op.label, gen.between(left, right, op.label)};
    return set.local_add(c);
  }
  if (op.position >= list.size()) throw std::invalid_argument("sequence del: position out of bounds");
  return set.local_remove(list[op.position]);
}

inline std::vector<std::string> labels_of(const std::vector<Couple>& cs) {
  std::vector<std::string> out;
  out.reserve(cs.size());
  for (const auto& c : cs) out.push_back(c.label);
  return out;
}

}  // namespace detail

// Non-incremental ordering layer: every lookup reorders the inner set.
template <typename SetT>
class SequenceLayer {
 public:
  using InnerSet = SetT;
  SequenceLayer(PiGenerator gen, SetT set) : gen_(gen), set_(std::move(set)) {}

  SetMessage<Couple> modify(const SequenceOperation& op) {
    return detail::seq_modify(set_, gen_, couples(), op);
  }

  std::vector<Couple> couples() const { return order_couples(set_.lookup()); }
  std::vector<std::string> lookup() const { return detail::labels_of(couples()); }

  SetT& inner() { return set_; }
  const SetT& inner() const { return set_; }
  PiGenerator& generator() { return gen_; }

  std::size_t state_hash() const { return set_.state_hash(); }

 private:
  PiGenerator gen_;
  SetT set_;
};

// Incremental ordering layer: keeps the ordered couple list and patches it
// on every inner-set visibility change.
template <typename SetT>
class IncSequenceLayer {
 public:
  using InnerSet = SetT;
  IncSequenceLayer(PiGenerator gen, SetT set) : gen_(gen), set_(std::move(set)) {
    set_.set_observer([this](SetEventKind k, const Couple& c) { update(k, c); });
  }

  IncSequenceLayer(const IncSequenceLayer&) = delete;
  IncSequenceLayer& operator=(const IncSequenceLayer&) = delete;

  SetMessage<Couple> modify(const SequenceOperation& op) {
    return detail::seq_modify(set_, gen_, list_, op);
  }

  // Notification from the inner set; public so drivers and tests can feed
  // events directly.
  void update(SetEventKind kind, const Couple& c) {
    if (kind == SetEventKind::add) {
      list_.insert(list_.begin() + insert_pos(list_, c.pi, c.label), c);
      return;
    }
    auto idx = insert_pos(list_, c.pi, c.label);
    if (idx < list_.size() && list_[idx] == c) {
      list_.erase(list_.begin() + idx);
    } else {
      log_anomaly("sequence del notification for a couple not in the list");
    }
  }

  const std::vector<Couple>& couples() const { return list_; }
  std::vector<std::string> lookup() const { return detail::labels_of(list_); }

  // The non-incremental computation, for equivalence checking.
  std::vector<std::string> lookup_recomputed() const {
    return detail::labels_of(order_couples(set_.lookup()));
  }

  SetT& inner() { return set_; }
  const SetT& inner() const { return set_; }
  PiGenerator& generator() { return gen_; }

  void encode_state(ByteWriter& w) const {
    set_.encode_state(w);
    Codec<std::vector<Couple>>::encode(w, list_);
  }

  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  PiGenerator gen_;
  SetT set_;
  std::vector<Couple> list_;
};

}  // namespace lcrdt
