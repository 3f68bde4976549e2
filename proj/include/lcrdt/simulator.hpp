#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "lcrdt/stack.hpp"

namespace lcrdt {

inline constexpr const char* kTraceSchema = "lcrdt-trace-v1";
inline constexpr const char* kMetricsSchema = "lcrdt-metrics-v1";

struct SimConfig {
  StackKind kind = StackKind::ordered_tree;
  std::uint64_t ops = 0;
  int insert_pct = 88;
  std::uint32_t replicas = 1;
  std::uint32_t delay_min = 1;
  std::uint32_t delay_max = 3;
  std::uint64_t seed = 0;
  std::string pos_dist = "uniform";  // operation position chooser hook

  void validate() const;  // throws std::invalid_argument
  json to_json() const;
  static SimConfig from_json(const json& j);
};

struct TraceOp {
  ReplicaId replica = 0;
  std::uint64_t tick = 0;
  json op;
};

// JSON-lines trace: one header line with the config, one line per op.
struct Trace {
  SimConfig config;
  std::vector<TraceOp> ops;

  void write_jsonl(std::ostream& os) const;
  static Trace read_jsonl(std::istream& is);
  void save(const std::string& path) const;
  static Trace load(const std::string& path);
};

// Draws random operations against live stacks, so every operation is valid
// under the generation schedule. Deterministic in the seed: the same config
// yields a byte-identical trace.
Trace generate_trace(const SimConfig& config, const ReplicaFactory& factory);

struct MetricsRecord {
  std::uint64_t op_index = 0;  // 1-based index of the originating trace op
  ReplicaId replica = 0;
  enum class Kind : std::uint8_t { local = 0, remote = 1 } kind = Kind::local;
  std::uint64_t nanos = 0;
  std::uint64_t state_bytes = 0;
  bool sampled = false;  // state_bytes is meaningful
};

struct ReplayOptions {
  std::uint64_t sample_every = 100;  // serialize state every N generated ops (0 = never)
  unsigned reps = 3;                 // measured repetitions; medians reported, one warm-up when > 1
  bool threads = false;              // one thread per replica with a per-tick barrier
  bool measure = true;
  std::function<void(std::uint64_t op_index, const Replica& acting)> on_sample;
};

struct ReplayResult {
  bool converged = false;
  std::vector<MetricsRecord> records;
  std::vector<json> final_views;
  json counterexample;     // null when converged
  std::uint64_t envelopes = 0;
  std::vector<std::vector<WireEnvelope>> logs;  // per-origin emission logs
};

// Replays a trace: each op runs as a timed local modify at its replica, the
// resulting envelopes reach every peer after a deterministic logical delay
// (per-origin FIFO enforced by the inboxes), and at the end every replica's
// top-layer lookup must be equal.
ReplayResult replay(const Trace& trace, const ReplicaFactory& factory,
                    const ReplayOptions& opts = {});

struct CheckResult {
  bool consistent = false;
  std::uint32_t schedules = 0;
  json counterexample;
};

// Convergence under delivery reordering: one canonical run fixes each
// origin's envelope log, then `schedules` random interleavings (respecting
// per-origin FIFO) re-deliver those logs to fresh replicas. All final
// lookups must match across replicas and schedules.
CheckResult interleave_check(const Trace& trace, const ReplicaFactory& factory,
                             std::uint32_t schedules, std::uint64_t seed);

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& records);

// Logical delivery delay in ticks, a pure function of its inputs; always
// at least one tick.
std::uint32_t delivery_delay(std::uint64_t seed, ReplicaId origin, std::uint64_t seq,
                             ReplicaId receiver, std::uint32_t delay_min, std::uint32_t delay_max);

// Human-oriented description of the first difference between two views.
json first_difference(const json& a, const json& b);

}  // namespace lcrdt
