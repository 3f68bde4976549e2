#include "lcrdt/core.hpp"

#include <atomic>
#include <iostream>

namespace lcrdt {

std::vector<WireEnvelope> Inbox::offer(WireEnvelope e) {
  std::vector<WireEnvelope> ready;
  const ReplicaId origin = e.origin;
  std::uint64_t next = delivered_.get(origin) + 1;
  if (e.seq < next) return ready;  // duplicate or own echo
  if (e.seq > next) {
    pending_[origin].emplace(e.seq, std::move(e));
    return ready;
  }
  ready.push_back(std::move(e));
  delivered_.set_at_least(origin, next);
  auto it = pending_.find(origin);
  if (it != pending_.end()) {
    auto& buf = it->second;
    while (!buf.empty() && buf.begin()->first == delivered_.get(origin) + 1) {
      delivered_.set_at_least(origin, buf.begin()->first);
      ready.push_back(std::move(buf.begin()->second));
      buf.erase(buf.begin());
    }
    if (buf.empty()) pending_.erase(it);
  }
  return ready;
}

std::size_t Inbox::buffered() const {
  std::size_t n = 0;
  for (const auto& [origin, buf] : pending_) n += buf.size();
  return n;
}

void Inbox::encode(ByteWriter& w) const {
  w.u32(self_);
  w.u32(static_cast<std::uint32_t>(delivered_.entries().size()));
  for (const auto& [id, v] : delivered_.entries()) {
    w.u32(id);
    w.u64(v);
  }
  w.u32(static_cast<std::uint32_t>(buffered()));
  for (const auto& [origin, buf] : pending_)
    for (const auto& [seq, env] : buf) encode_envelope(w, env);
}

std::size_t Inbox::state_hash() const {
  ByteWriter w;
  encode(w);
  return static_cast<std::size_t>(fnv1a64(w.data()));
}

void encode_envelope(ByteWriter& w, const WireEnvelope& e) {
  w.u32(e.origin);
  w.u64(e.seq);
  w.u8(e.channel);
  w.bytes(e.payload);
}

WireEnvelope decode_envelope(ByteReader& r) {
  WireEnvelope e;
  e.origin = r.u32();
  e.seq = r.u64();
  e.channel = r.u8();
  e.payload = r.bytes();
  return e;
}

namespace {
std::atomic<std::size_t> g_anomalies{0};
}

void log_anomaly(const std::string& what) {
  g_anomalies.fetch_add(1, std::memory_order_relaxed);
  std::clog << "[lcrdt anomaly] " << what << '\n';
}

std::size_t anomaly_count() { return g_anomalies.load(std::memory_order_relaxed); }

void reset_anomaly_count() { g_anomalies.store(0, std::memory_order_relaxed); }

}  // namespace lcrdt
