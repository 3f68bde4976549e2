#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "lcrdt/codec.hpp"
#include "lcrdt/core.hpp"

namespace lcrdt {

enum class SetEventKind : std::uint8_t { add = 0, remove = 1 };

// The only wire payload: an addition or a suppression of one element.
// Observed-remove sets carry tags (an add exactly one fresh tag, a remove
// the tags it observed); counter sets carry a signed delta instead.
template <typename T>
struct SetMessage {
  SetEventKind kind = SetEventKind::add;
  T element{};
  std::vector<Tag> tags;
  std::int64_t delta = 0;
  bool counter_form = false;

  friend bool operator==(const SetMessage&, const SetMessage&) = default;
};

template <typename T>
void encode_message(ByteWriter& w, const SetMessage<T>& m) {
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.u8(m.counter_form ? 1 : 0);
  Codec<T>::encode(w, m.element);
  if (m.counter_form) {
    w.i64(m.delta);
  } else {
    w.u32(static_cast<std::uint32_t>(m.tags.size()));
    for (const auto& t : m.tags) Codec<Tag>::encode(w, t);
  }
}

template <typename T>
SetMessage<T> decode_message(ByteReader& r) {
  SetMessage<T> m;
  m.kind = static_cast<SetEventKind>(r.u8());
  m.counter_form = r.u8() != 0;
  m.element = Codec<T>::decode(r);
  if (m.counter_form) {
    m.delta = r.i64();
  } else {
    std::uint32_t n = r.u32();
    m.tags.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) m.tags.push_back(Codec<Tag>::decode(r));
  }
  return m;
}

template <typename T>
json message_to_json(const SetMessage<T>& m) {
  json j;
  j["kind"] = m.kind == SetEventKind::add ? "add" : "remove";
  j["element"] = Codec<T>::to_json(m.element);
  if (m.counter_form) {
    j["delta"] = m.delta;
  } else {
    json tags = json::array();
    for (const auto& t : m.tags) tags.push_back(Codec<Tag>::to_json(t));
    j["tags"] = std::move(tags);
  }
  return j;
}

template <typename T>
SetMessage<T> message_from_json(const json& j) {
  SetMessage<T> m;
  m.kind = j.at("kind").get<std::string>() == "add" ? SetEventKind::add : SetEventKind::remove;
  m.element = Codec<T>::from_json(j.at("element"));
  if (j.contains("delta")) {
    m.counter_form = true;
    m.delta = j.at("delta").get<std::int64_t>();
  } else {
    for (const auto& t : j.at("tags")) m.tags.push_back(Codec<Tag>::from_json(t));
  }
  return m;
}

template <typename T>
using SetObserver = std::function<void(SetEventKind, const T&)>;

// Observed-remove set, add-wins. An element is visible while it has at
// least one live tag. Removes listing tags whose add has not arrived yet
// are buffered in `pending_` (multiset: bookkeeping stays commutative when
// several concurrent removes list the same tag), so the set converges
// under per-origin FIFO without causal broadcast.
template <typename T>
class ORSet {
 public:
  using Element = T;
  using Message = SetMessage<T>;

  explicit ORSet(ReplicaId origin) : origin_(origin) {}

  Message local_add(const T& e) {
    Message m;
    m.kind = SetEventKind::add;
    m.element = e;
    m.tags.push_back(Tag{origin_, ++op_counter_});
    apply(m);
    return m;
  }

  Message local_remove(const T& e) {
    Message m;
    m.kind = SetEventKind::remove;
    m.element = e;
    if (auto it = live_.find(e); it != live_.end())
      m.tags.assign(it->second.begin(), it->second.end());
    apply(m);
    return m;
  }

  // Applies one message (local or remote, exactly once). Fires the
  // observer only when the element's visibility changed.
  void apply(const Message& m) {
    const bool was = contains(m.element);
    if (m.kind == SetEventKind::add) {
      for (const auto& t : m.tags) {
        auto p = pending_.find(t);
        if (p != pending_.end())
          pending_.erase(p);  // consumed by a buffered remove
        else
          live_[m.element].insert(t);
      }
    } else {
      auto it = live_.find(m.element);
      for (const auto& t : m.tags) {
        if (it != live_.end() && it->second.erase(t) > 0) continue;
        pending_.insert(t);
      }
      if (it != live_.end() && it->second.empty()) live_.erase(it);
    }
    const bool now = contains(m.element);
    if (was != now && observer_)
      observer_(now ? SetEventKind::add : SetEventKind::remove, m.element);
  }

  std::vector<T> lookup() const {
    std::vector<T> out;
    out.reserve(live_.size());
    for (const auto& [e, tags] : live_) out.push_back(e);
    return out;
  }

  bool contains(const T& e) const {
    auto it = live_.find(e);
    return it != live_.end() && !it->second.empty();
  }

  std::size_t live_tag_count(const T& e) const {
    auto it = live_.find(e);
    return it == live_.end() ? 0 : it->second.size();
  }

  void set_observer(SetObserver<T> o) { observer_ = std::move(o); }

  const std::map<T, std::set<Tag>>& live() const { return live_; }
  const std::multiset<Tag>& pending_removes() const { return pending_; }
  ReplicaId origin() const { return origin_; }

  bool same_state(const ORSet& o) const { return live_ == o.live_ && pending_ == o.pending_; }

  void encode_state(ByteWriter& w) const {
    w.u32(static_cast<std::uint32_t>(live_.size()));
    for (const auto& [e, tags] : live_) {
      Codec<T>::encode(w, e);
      w.u32(static_cast<std::uint32_t>(tags.size()));
      for (const auto& t : tags) Codec<Tag>::encode(w, t);
    }
    w.u32(static_cast<std::uint32_t>(pending_.size()));
    for (const auto& t : pending_) Codec<Tag>::encode(w, t);
  }

  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  ReplicaId origin_;
  std::uint64_t op_counter_ = 0;
  std::map<T, std::set<Tag>> live_;
  std::multiset<Tag> pending_;
  SetObserver<T> observer_;
};

// PN-count per element; visible while the summed delta is positive.
// Deliberately exhibits remove-wins-ish anomalies under concurrent
// add/remove (count can reach zero or below with a concurrent add).
template <typename T>
class CounterSet {
 public:
  using Element = T;
  using Message = SetMessage<T>;

  explicit CounterSet(ReplicaId origin) : origin_(origin) {}

  Message local_add(const T& e) { return local_delta(e, +1); }
  Message local_remove(const T& e) { return local_delta(e, -1); }

  void apply(const Message& m) {
    const bool was = contains(m.element);
    auto it = counts_.emplace(m.element, 0).first;
    it->second += m.delta;
    if (it->second == 0) counts_.erase(it);
    const bool now = contains(m.element);
    if (was != now && observer_)
      observer_(now ? SetEventKind::add : SetEventKind::remove, m.element);
  }

  std::vector<T> lookup() const {
    std::vector<T> out;
    for (const auto& [e, c] : counts_) {
      if (c > 0) out.push_back(e);
    }
    return out;
  }

  bool contains(const T& e) const {
    auto it = counts_.find(e);
    return it != counts_.end() && it->second > 0;
  }

  std::int64_t count(const T& e) const {
    auto it = counts_.find(e);
    return it == counts_.end() ? 0 : it->second;
  }

  void set_observer(SetObserver<T> o) { observer_ = std::move(o); }

  const std::map<T, std::int64_t>& counts() const { return counts_; }
  ReplicaId origin() const { return origin_; }

  bool same_state(const CounterSet& o) const { return counts_ == o.counts_; }

  void encode_state(ByteWriter& w) const {
    w.u32(static_cast<std::uint32_t>(counts_.size()));
    for (const auto& [e, c] : counts_) {
      Codec<T>::encode(w, e);
      w.i64(c);
    }
  }

  std::size_t state_hash() const {
    ByteWriter w;
    encode_state(w);
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  Message local_delta(const T& e, std::int64_t d) {
    Message m;
    m.kind = d > 0 ? SetEventKind::add : SetEventKind::remove;
    m.element = e;
    m.delta = d;
    m.counter_form = true;
    apply(m);
    return m;
  }

  ReplicaId origin_;
  std::map<T, std::int64_t> counts_;
  SetObserver<T> observer_;
};

// True when broadcasting the message would have no effect on any replica
// (an observed-remove suppression that observed nothing).
template <typename T>
bool message_is_inert(const SetMessage<T>& m) {
  return !m.counter_form && m.kind == SetEventKind::remove && m.tags.empty();
}

}  // namespace lcrdt
