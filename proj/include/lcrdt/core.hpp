#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "lcrdt/bytes.hpp"

namespace lcrdt {

// Small non-negative integer identifying a replica, unique within one run.
using ReplicaId = std::uint32_t;

// Globally unique identifier of a single set-add operation.
struct Tag {
  ReplicaId origin = 0;
  std::uint64_t counter = 0;

  auto operator<=>(const Tag&) const = default;
};

// Per-replica operation counters; merge is entrywise max and an absent
// entry reads as zero. Counters never decrease.
class VersionVector {
 public:
  std::uint64_t get(ReplicaId id) const {
    auto it = entries_.find(id);
    return it == entries_.end() ? 0 : it->second;
  }

  void bump(ReplicaId id) { ++entries_[id]; }

  void set_at_least(ReplicaId id, std::uint64_t v) {
    auto& e = entries_[id];
    if (v > e) e = v;
  }

  void merge(const VersionVector& other) {
    for (const auto& [id, v] : other.entries_) set_at_least(id, v);
  }

  const std::map<ReplicaId, std::uint64_t>& entries() const { return entries_; }

  bool operator==(const VersionVector&) const = default;

  std::size_t state_hash() const {
    ByteWriter w;
    for (const auto& [id, v] : entries_) {
      w.u32(id);
      w.u64(v);
    }
    return static_cast<std::size_t>(fnv1a64(w.data()));
  }

 private:
  std::map<ReplicaId, std::uint64_t> entries_;
};

// The broadcast unit: one replicated-set message from `origin`, numbered
// FIFO per origin. `channel` routes multi-set stacks (the dag uses two).
struct WireEnvelope {
  ReplicaId origin = 0;
  std::uint64_t seq = 0;  // 1-based, +1 per envelope from the same origin
  std::uint8_t channel = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const WireEnvelope&, const WireEnvelope&) = default;
};

// Delivery discipline for one replica: exactly-once, per-origin FIFO.
// Early arrivals are buffered until their predecessors show up; duplicates
// and echoes of locally generated envelopes are dropped.
class Inbox {
 public:
  explicit Inbox(ReplicaId self) : self_(self) {}

  // Feed one envelope; returns the envelopes that became deliverable, in
  // order. Empty result means duplicate, own echo, or buffered.
  std::vector<WireEnvelope> offer(WireEnvelope e);

  // Record a locally generated envelope so a later echo is ignored.
  void mark_sent(std::uint64_t seq) { delivered_.set_at_least(self_, seq); }

  const VersionVector& delivered() const { return delivered_; }
  std::size_t buffered() const;
  ReplicaId self() const { return self_; }

  std::size_t state_hash() const;
  void encode(ByteWriter& w) const;

 private:
  ReplicaId self_;
  VersionVector delivered_;
  std::map<ReplicaId, std::map<std::uint64_t, WireEnvelope>> pending_;
};

void encode_envelope(ByteWriter& w, const WireEnvelope& e);
WireEnvelope decode_envelope(ByteReader& r);

// Events that are unreachable under the delivery contract are counted and
// logged rather than treated as fatal.
void log_anomaly(const std::string& what);
std::size_t anomaly_count();
void reset_anomaly_count();

}  // namespace lcrdt
