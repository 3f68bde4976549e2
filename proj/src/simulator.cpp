#include "lcrdt/simulator.hpp"

#include <barrier>
#include <chrono>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace lcrdt {

void SimConfig::validate() const {
  if (replicas < 1) throw std::invalid_argument("config: replicas must be >= 1");
  if (insert_pct < 0 || insert_pct > 100)
    throw std::invalid_argument("config: insert-pct must be in [0, 100]");
  if (delay_min > delay_max) throw std::invalid_argument("config: delay-min > delay-max");
  if (pos_dist != "uniform")
    throw std::invalid_argument("config: unknown position distribution '" + pos_dist +
                                "' (valid: uniform)");
}

json SimConfig::to_json() const {
  return json{{"schema", kTraceSchema},
              {"kind", stack_kind_name(kind)},
              {"ops", ops},
              {"insertPct", insert_pct},
              {"replicas", replicas},
              {"delayMin", delay_min},
              {"delayMax", delay_max},
              {"seed", seed},
              {"posDist", pos_dist}};
}

SimConfig SimConfig::from_json(const json& j) {
  if (j.value("schema", std::string{}) != kTraceSchema)
    throw std::runtime_error("trace: unsupported schema tag");
  SimConfig c;
  c.kind = stack_kind_from_name(j.at("kind").get<std::string>());
  c.ops = j.at("ops").get<std::uint64_t>();
  c.insert_pct = j.at("insertPct").get<int>();
  c.replicas = j.at("replicas").get<std::uint32_t>();
  c.delay_min = j.at("delayMin").get<std::uint32_t>();
  c.delay_max = j.at("delayMax").get<std::uint32_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.pos_dist = j.value("posDist", "uniform");
  c.validate();
  return c;
}

void Trace::write_jsonl(std::ostream& os) const {
  os << config.to_json().dump() << '\n';
  for (const auto& op : ops)
    os << json{{"r", op.replica}, {"t", op.tick}, {"op", op.op}}.dump() << '\n';
}

Trace Trace::read_jsonl(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trace: empty file");
  Trace t;
  t.config = SimConfig::from_json(json::parse(line));
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    t.ops.push_back(TraceOp{j.at("r").get<ReplicaId>(), j.at("t").get<std::uint64_t>(), j.at("op")});
  }
  return t;
}

void Trace::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write trace file: " + path);
  write_jsonl(os);
}

Trace Trace::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read trace file: " + path);
  return read_jsonl(is);
}

std::uint32_t delivery_delay(std::uint64_t seed, ReplicaId origin, std::uint64_t seq,
                             ReplicaId receiver, std::uint32_t delay_min, std::uint32_t delay_max) {
  const std::uint64_t span = static_cast<std::uint64_t>(delay_max) - delay_min + 1;
  const std::uint64_t h = splitmix64(seed ^ splitmix64((static_cast<std::uint64_t>(origin) << 40) ^
                                                       (static_cast<std::uint64_t>(receiver) << 20) ^
                                                       seq));
  const std::uint32_t d = delay_min + static_cast<std::uint32_t>(h % span);
  return d < 1 ? 1 : d;
}

Trace generate_trace(const SimConfig& config, const ReplicaFactory& factory) {
  config.validate();
  Trace out;
  out.config = config;

  std::vector<std::unique_ptr<Replica>> replicas;
  for (std::uint32_t i = 0; i < config.replicas; ++i) replicas.push_back(factory(i));

  // arrival key: (tick, receiver, origin, seq)
  std::map<std::tuple<std::uint64_t, ReplicaId, ReplicaId, std::uint64_t>, WireEnvelope> arrivals;
  std::mt19937_64 rng(config.seed);

  for (std::uint64_t op_index = 1; op_index <= config.ops; ++op_index) {
    const std::uint64_t tick = op_index;
    while (!arrivals.empty() && std::get<0>(arrivals.begin()->first) <= tick) {
      auto node = arrivals.extract(arrivals.begin());
      replicas[std::get<1>(node.key())]->deliver(node.mapped());
    }
    const ReplicaId r = static_cast<ReplicaId>(rng() % config.replicas);
    json op = replicas[r]->propose(rng, config.insert_pct);
    auto envs = replicas[r]->apply_local(op);
    out.ops.push_back(TraceOp{r, tick, std::move(op)});
    for (auto& env : envs) {
      for (std::uint32_t peer = 0; peer < config.replicas; ++peer) {
        if (peer == r) continue;
        const std::uint64_t at =
            tick + delivery_delay(config.seed, env.origin, env.seq, peer, config.delay_min,
                                  config.delay_max);
        arrivals.emplace(std::make_tuple(at, peer, env.origin, env.seq), env);
      }
    }
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct RecordKey {  // canonical event order, shared by serial and threaded runs
  std::uint64_t tick = 0;
  std::uint8_t phase = 0;  // 0 remote, 1 local
  ReplicaId receiver = 0;
  ReplicaId origin = 0;
  std::uint64_t seq = 0;

  auto operator<=>(const RecordKey&) const = default;
};

struct KeyedRecord {
  RecordKey key;
  MetricsRecord rec;
};

struct RunResult {
  bool converged = true;
  std::vector<MetricsRecord> records;
  std::vector<json> views;
  json counterexample;
  std::uint64_t envelopes = 0;
  std::vector<std::vector<WireEnvelope>> logs;
};

RunResult run_serial(const Trace& trace, const ReplicaFactory& factory, const ReplayOptions& opts) {
  const SimConfig& cfg = trace.config;
  RunResult out;
  out.logs.resize(cfg.replicas);

  std::vector<std::unique_ptr<Replica>> replicas;
  for (std::uint32_t i = 0; i < cfg.replicas; ++i) replicas.push_back(factory(i));

  std::map<std::tuple<std::uint64_t, ReplicaId, ReplicaId, std::uint64_t>,
           std::pair<WireEnvelope, std::uint64_t>>
      arrivals;

  auto deliver_due = [&](std::uint64_t tick) {
    while (!arrivals.empty() && std::get<0>(arrivals.begin()->first) <= tick) {
      auto node = arrivals.extract(arrivals.begin());
      const ReplicaId receiver = std::get<1>(node.key());
      const auto& [env, op_index] = node.mapped();
      std::uint64_t ns = 0;
      if (opts.measure) {
        auto t0 = Clock::now();
        replicas[receiver]->deliver(env);
        ns = static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
      } else {
        replicas[receiver]->deliver(env);
      }
      out.records.push_back(
          MetricsRecord{op_index, receiver, MetricsRecord::Kind::remote, ns, 0, false});
    }
  };

  std::uint64_t op_index = 0;
  for (const TraceOp& top : trace.ops) {
    ++op_index;
    deliver_due(top.tick);
    std::uint64_t ns = 0;
    std::vector<WireEnvelope> envs;
    if (opts.measure) {
      auto t0 = Clock::now();
      envs = replicas[top.replica]->apply_local(top.op);
      ns = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
    } else {
      envs = replicas[top.replica]->apply_local(top.op);
    }
    MetricsRecord rec{op_index, top.replica, MetricsRecord::Kind::local, ns, 0, false};
    if (opts.sample_every && op_index % opts.sample_every == 0) {
      rec.state_bytes = replicas[top.replica]->snapshot().size();
      rec.sampled = true;
      if (opts.on_sample) opts.on_sample(op_index, *replicas[top.replica]);
    }
    out.records.push_back(rec);
    out.envelopes += envs.size();
    for (auto& env : envs) {
      out.logs[env.origin].push_back(env);
      for (std::uint32_t peer = 0; peer < cfg.replicas; ++peer) {
        if (peer == top.replica) continue;
        const std::uint64_t at = top.tick + delivery_delay(cfg.seed, env.origin, env.seq, peer,
                                                           cfg.delay_min, cfg.delay_max);
        arrivals.emplace(std::make_tuple(at, peer, env.origin, env.seq),
                         std::make_pair(env, op_index));
      }
    }
  }
  deliver_due(~0ull);

  for (const auto& r : replicas) out.views.push_back(r->view());
  for (std::uint32_t i = 1; i < cfg.replicas; ++i) {
    if (out.views[i] != out.views[0]) {
      out.converged = false;
      out.counterexample = json{{"kind", "divergence"},
                                {"replicaA", 0},
                                {"replicaB", i},
                                {"firstDifference", first_difference(out.views[0], out.views[i])},
                                {"viewA", out.views[0]},
                                {"viewB", out.views[i]}};
      return out;
    }
  }
  return out;
}

// Threaded run: one worker per replica; per logical tick, every worker
// applies its due arrivals, then the tick's acting replica runs its local
// op and posts envelopes to the peers' mailboxes. Barriers separate the
// phases, so the event order matches the serial engine exactly.
RunResult run_threaded(const Trace& trace, const ReplicaFactory& factory,
                       const ReplayOptions& opts) {
  const SimConfig& cfg = trace.config;
  const std::uint32_t R = cfg.replicas;

  for (std::size_t i = 1; i < trace.ops.size(); ++i) {
    if (trace.ops[i].tick <= trace.ops[i - 1].tick)
      throw std::invalid_argument("threaded replay requires strictly increasing op ticks");
  }

  std::vector<std::unique_ptr<Replica>> replicas;
  for (std::uint32_t i = 0; i < R; ++i) replicas.push_back(factory(i));

  struct Mailbox {
    std::mutex mu;
    std::map<std::tuple<std::uint64_t, ReplicaId, std::uint64_t>,
             std::pair<WireEnvelope, std::uint64_t>>
        box;  // (tick, origin, seq)
  };
  std::vector<Mailbox> mail(R);
  std::atomic<std::uint64_t> pending{0};

  RunResult out;
  out.logs.resize(R);
  std::vector<std::vector<KeyedRecord>> per_thread(R);

  struct Shared {
    std::uint64_t tick = 0;
    std::size_t next_op = 0;
    const TraceOp* op = nullptr;
    std::uint64_t op_index = 0;
    bool done = false;
  } shared;

  auto advance = [&]() noexcept {
    // runs once per round, single-threaded (barrier completion)
    ++shared.tick;
    shared.op = nullptr;
    if (shared.next_op < trace.ops.size() &&
        trace.ops[shared.next_op].tick == shared.tick) {
      shared.op = &trace.ops[shared.next_op];
      shared.op_index = shared.next_op + 1;
      ++shared.next_op;
    }
    if (shared.op == nullptr && shared.next_op >= trace.ops.size() &&
        pending.load(std::memory_order_acquire) == 0) {
      shared.done = true;
    }
  };
  advance();  // set up tick 1

  std::barrier sync_a(static_cast<std::ptrdiff_t>(R));
  std::barrier sync_b(static_cast<std::ptrdiff_t>(R), advance);

  auto worker = [&](ReplicaId me) {
    while (true) {
      if (shared.done) break;
      const std::uint64_t tick = shared.tick;
      {  // phase A: apply due arrivals
        std::unique_lock lock(mail[me].mu);
        while (!mail[me].box.empty() && std::get<0>(mail[me].box.begin()->first) <= tick) {
          auto node = mail[me].box.extract(mail[me].box.begin());
          lock.unlock();
          const auto& [env, op_index] = node.mapped();
          std::uint64_t ns = 0;
          if (opts.measure) {
            auto t0 = Clock::now();
            replicas[me]->deliver(env);
            ns = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
          } else {
            replicas[me]->deliver(env);
          }
          per_thread[me].push_back(
              KeyedRecord{RecordKey{std::get<0>(node.key()), 0, me, env.origin, env.seq},
                          MetricsRecord{op_index, me, MetricsRecord::Kind::remote, ns, 0, false}});
          pending.fetch_sub(1, std::memory_order_acq_rel);
          lock.lock();
        }
      }
      sync_a.arrive_and_wait();
      // phase B: the tick's acting replica runs its local op
      if (shared.op != nullptr && shared.op->replica == me) {
        const TraceOp& top = *shared.op;
        std::uint64_t ns = 0;
        std::vector<WireEnvelope> envs;
        if (opts.measure) {
          auto t0 = Clock::now();
          envs = replicas[me]->apply_local(top.op);
          ns = static_cast<std::uint64_t>(
              std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count());
        } else {
          envs = replicas[me]->apply_local(top.op);
        }
        MetricsRecord rec{shared.op_index, me, MetricsRecord::Kind::local, ns, 0, false};
        if (opts.sample_every && shared.op_index % opts.sample_every == 0) {
          rec.state_bytes = replicas[me]->snapshot().size();
          rec.sampled = true;
          if (opts.on_sample) opts.on_sample(shared.op_index, *replicas[me]);
        }
        per_thread[me].push_back(KeyedRecord{RecordKey{tick, 1, me, me, 0}, rec});
        out.envelopes += envs.size();
        for (auto& env : envs) {
          out.logs[env.origin].push_back(env);
          for (std::uint32_t peer = 0; peer < R; ++peer) {
            if (peer == me) continue;
            const std::uint64_t at = tick + delivery_delay(cfg.seed, env.origin, env.seq, peer,
                                                           cfg.delay_min, cfg.delay_max);
            std::lock_guard g(mail[peer].mu);
            mail[peer].box.emplace(std::make_tuple(at, env.origin, env.seq),
                                   std::make_pair(env, shared.op_index));
            pending.fetch_add(1, std::memory_order_acq_rel);
          }
        }
      }
      sync_b.arrive_and_wait();
    }
  };

  {
    std::vector<std::jthread> threads;
    for (std::uint32_t i = 0; i < R; ++i) threads.emplace_back(worker, i);
  }

  std::vector<KeyedRecord> all;
  for (auto& v : per_thread) all.insert(all.end(), v.begin(), v.end());
  std::sort(all.begin(), all.end(),
            [](const KeyedRecord& a, const KeyedRecord& b) { return a.key < b.key; });
  out.records.reserve(all.size());
  for (auto& kr : all) out.records.push_back(kr.rec);

  for (const auto& r : replicas) out.views.push_back(r->view());
  for (std::uint32_t i = 1; i < R; ++i) {
    if (out.views[i] != out.views[0]) {
      out.converged = false;
      out.counterexample = json{{"kind", "divergence"},
                                {"replicaA", 0},
                                {"replicaB", i},
                                {"firstDifference", first_difference(out.views[0], out.views[i])},
                                {"viewA", out.views[0]},
                                {"viewB", out.views[i]}};
      return out;
    }
  }
  return out;
}

}  // namespace

ReplayResult replay(const Trace& trace, const ReplicaFactory& factory, const ReplayOptions& opts) {
  trace.config.validate();
  const unsigned reps = opts.reps == 0 ? 1 : opts.reps;

  auto run_once = [&](const ReplayOptions& o) {
    return opts.threads ? run_threaded(trace, factory, o) : run_serial(trace, factory, o);
  };

  if (reps > 1) {  // warm-up, discarded
    ReplayOptions warm = opts;
    warm.measure = false;
    warm.on_sample = nullptr;
    warm.sample_every = 0;
    run_once(warm);
  }

  std::vector<RunResult> runs;
  for (unsigned i = 0; i < reps; ++i) {
    ReplayOptions o = opts;
    if (i > 0) {
      o.on_sample = nullptr;  // callbacks fire once
    }
    runs.push_back(run_once(o));
    if (!runs.back().converged) break;
  }

  ReplayResult out;
  RunResult& first = runs.front();
  const RunResult& last = runs.back();
  out.converged = last.converged;
  out.final_views = last.views;
  out.counterexample = last.counterexample;
  out.envelopes = first.envelopes;
  if (out.converged && runs.size() > 1) {
    for (std::size_t i = 0; i < first.records.size(); ++i) {
      std::vector<std::uint64_t> ns;
      ns.reserve(runs.size());
      for (const auto& r : runs) ns.push_back(r.records[i].nanos);
      std::sort(ns.begin(), ns.end());
      first.records[i].nanos = ns[ns.size() / 2];
    }
  }
  out.logs = std::move(first.logs);
  out.records = std::move(first.records);
  return out;
}

CheckResult interleave_check(const Trace& trace, const ReplicaFactory& factory,
                             std::uint32_t schedules, std::uint64_t seed) {
  CheckResult out;
  out.schedules = schedules;

  ReplayOptions opts;
  opts.measure = false;
  opts.reps = 1;
  opts.sample_every = 0;
  ReplayResult canonical = replay(trace, factory, opts);
  if (!canonical.converged) {
    out.counterexample = canonical.counterexample;
    return out;
  }
  const json& reference = canonical.final_views.empty() ? json() : canonical.final_views[0];
  const std::uint32_t R = trace.config.replicas;

  for (std::uint32_t s = 0; s < schedules; ++s) {
    std::mt19937_64 rng(splitmix64(seed ^ (0x5eedull + s)));
    std::vector<std::unique_ptr<Replica>> replicas;
    for (std::uint32_t i = 0; i < R; ++i) replicas.push_back(factory(i));

    struct Pair {
      ReplicaId receiver;
      ReplicaId origin;
      std::size_t pos;
    };
    std::vector<Pair> alive;
    for (std::uint32_t r = 0; r < R; ++r)
      for (std::uint32_t o = 0; o < R; ++o)
        if (!canonical.logs[o].empty()) alive.push_back(Pair{r, o, 0});

    json decisions = json::array();
    while (!alive.empty()) {
      const std::size_t k = rng() % alive.size();
      Pair& p = alive[k];
      replicas[p.receiver]->deliver(canonical.logs[p.origin][p.pos]);
      decisions.push_back(json::array({p.receiver, p.origin}));
      if (++p.pos == canonical.logs[p.origin].size()) {
        alive[k] = alive.back();
        alive.pop_back();
      }
    }

    for (std::uint32_t r = 0; r < R; ++r) {
      json view = replicas[r]->view();
      if (view != reference) {
        out.counterexample = json{{"kind", "schedule-divergence"},
                                  {"schedule", s},
                                  {"replica", r},
                                  {"firstDifference", first_difference(reference, view)},
                                  {"reference", reference},
                                  {"view", view},
                                  {"decisions", decisions}};
        return out;
      }
    }
  }
  out.consistent = true;
  return out;
}

void write_metrics_csv(std::ostream& os, const std::vector<MetricsRecord>& records) {
  os << "# schema: " << kMetricsSchema << '\n';
  os << "opIndex,replica,kind,nanos,stateBytes\n";
  for (const auto& r : records) {
    os << r.op_index << ',' << r.replica << ','
       << (r.kind == MetricsRecord::Kind::local ? "local" : "remote") << ',' << r.nanos << ',';
    if (r.sampled) os << r.state_bytes;
    os << '\n';
  }
}

namespace {

bool find_first_difference(const json& a, const json& b, std::string& path, json& left,
                           json& right) {
  if (a == b) return false;
  if (a.is_object() && b.is_object()) {
    for (auto it = a.begin(); it != a.end(); ++it) {
      if (!b.contains(it.key())) {
        path += "/" + it.key();
        left = it.value();
        right = nullptr;
        return true;
      }
      std::string sub = path + "/" + it.key();
      if (it.value() != b.at(it.key())) {
        path = sub;
        return find_first_difference(it.value(), b.at(it.key()), path, left, right) ||
               (left = it.value(), right = b.at(it.key()), true);
      }
    }
    for (auto it = b.begin(); it != b.end(); ++it) {
      if (!a.contains(it.key())) {
        path += "/" + it.key();
        left = nullptr;
        right = it.value();
        return true;
      }
    }
    return false;
  }
  if (a.is_array() && b.is_array()) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (a[i] != b[i]) {
        path += "/" + std::to_string(i);
        return find_first_difference(a[i], b[i], path, left, right) ||
               (left = a[i], right = b[i], true);
      }
    }
    path += "/" + std::to_string(n);
    left = a.size() > n ? a[n] : json();
    right = b.size() > n ? b[n] : json();
    return true;
  }
  left = a;
  right = b;
  return true;
}

}  // namespace

json first_difference(const json& a, const json& b) {
  std::string path;
  json left, right;
  if (!find_first_difference(a, b, path, left, right)) return nullptr;
  return json{{"path", path.empty() ? "/" : path}, {"left", left}, {"right", right}};
}

}  // namespace lcrdt
