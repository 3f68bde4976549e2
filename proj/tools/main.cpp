#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "lcrdt/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiverged = 1;
constexpr int kExitUsage = 2;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("LAYERED_CRDT_SEED")) return std::strtoull(env, nullptr, 10);
  return 42;
}

void write_counterexample(const std::string& path, const lcrdt::json& ce) {
  std::ofstream os(path, std::ios::binary);
  os << ce.dump(2) << '\n';
  std::cerr << "counterexample written to " << path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layered-crdt: replicated data type stacks, trace replay and convergence checks"};
  app.require_subcommand(1);

  // gen-trace
  auto* gen = app.add_subcommand("gen-trace", "generate a random operation trace");
  std::uint64_t ops = 30000;
  int insert_pct = 88;
  std::uint32_t replicas = 4;
  std::optional<std::uint64_t> seed_flag;
  std::string out_path;
  std::string kind_name = "otree";
  std::uint32_t delay_min = 1, delay_max = 3;
  gen->add_option("--ops", ops, "number of operations");
  gen->add_option("--insert-pct", insert_pct, "percentage of insertions")->check(CLI::Range(0, 100));
  gen->add_option("--replicas", replicas, "number of replicas")->check(CLI::Range(1u, 64u));
  gen->add_option("--seed", seed_flag, "random seed (default: $LAYERED_CRDT_SEED or 42)");
  gen->add_option("--out", out_path, "output trace file")->required();
  gen->add_option("--kind", kind_name, "data type kind: seq, tree, otree, dag");
  gen->add_option("--delay-min", delay_min, "minimum delivery delay (ticks)");
  gen->add_option("--delay-max", delay_max, "maximum delivery delay (ticks)");

  // replay
  auto* rep = app.add_subcommand("replay", "replay a trace on a stack and write metrics");
  std::string trace_path, stack_text = "ordered-tree(connect=reappear,set=orset,pi=logoot)";
  std::string metrics_path;
  std::uint64_t sample_every = 100;
  unsigned reps = 3;
  bool threads = false;
  rep->add_option("--trace", trace_path, "input trace file")->required();
  rep->add_option("--stack", stack_text, "stack composition expression");
  rep->add_option("--metrics-out", metrics_path, "metrics CSV output path");
  rep->add_option("--sample-every", sample_every, "serialize state every N generated ops");
  rep->add_option("--reps", reps, "measured repetitions (medians reported)");
  rep->add_flag("--threads", threads, "run replicas on separate threads");

  // check
  auto* chk = app.add_subcommand("check", "convergence check under random delivery schedules");
  std::string chk_stack = "ordered-tree(connect=reappear,set=orset,pi=logoot)";
  std::uint32_t traces = 100, schedules = 20;
  std::uint64_t chk_ops = 50;
  std::uint32_t chk_replicas = 3;
  int chk_insert_pct = 70;
  std::optional<std::uint64_t> chk_seed_flag;
  std::string dump_path = "counterexample.json";
  chk->add_option("--stack", chk_stack, "stack composition expression");
  chk->add_option("--traces", traces, "number of random traces");
  chk->add_option("--ops", chk_ops, "operations per trace");
  chk->add_option("--schedules", schedules, "delivery schedules per trace");
  chk->add_option("--replicas", chk_replicas, "replicas per trace")->check(CLI::Range(1u, 64u));
  chk->add_option("--insert-pct", chk_insert_pct, "percentage of insertions")->check(CLI::Range(0, 100));
  chk->add_option("--seed", chk_seed_flag, "random seed (default: $LAYERED_CRDT_SEED or 42)");
  chk->add_option("--dump-out", dump_path, "counterexample output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen->parsed()) {
      lcrdt::SimConfig cfg;
      cfg.kind = lcrdt::stack_kind_from_name(kind_name);
      cfg.ops = ops;
      cfg.insert_pct = insert_pct;
      cfg.replicas = replicas;
      cfg.delay_min = delay_min;
      cfg.delay_max = delay_max;
      cfg.seed = resolve_seed(seed_flag);
      cfg.validate();

      lcrdt::StackSpec spec;  // canonical generation stack per kind
      spec.kind = cfg.kind;
      lcrdt::Trace trace = lcrdt::generate_trace(cfg, lcrdt::make_replica_factory(spec));
      trace.save(out_path);
      std::cout << "wrote " << trace.ops.size() << " ops to " << out_path << '\n';
      return kExitOk;
    }

    if (rep->parsed()) {
      lcrdt::Trace trace = lcrdt::Trace::load(trace_path);
      lcrdt::StackSpec spec = lcrdt::StackSpec::parse(stack_text);
      if (spec.kind != trace.config.kind)
        throw std::invalid_argument(std::string("trace kind '") +
                                    lcrdt::stack_kind_name(trace.config.kind) +
                                    "' does not match stack kind '" +
                                    lcrdt::stack_kind_name(spec.kind) + "'");
      lcrdt::ReplayOptions opts;
      opts.sample_every = sample_every;
      opts.reps = reps;
      opts.threads = threads;
      lcrdt::ReplayResult result = lcrdt::replay(trace, lcrdt::make_replica_factory(spec), opts);

      if (!metrics_path.empty()) {
        std::ofstream os(metrics_path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write metrics file: " + metrics_path);
        lcrdt::write_metrics_csv(os, result.records);
      } else {
        lcrdt::write_metrics_csv(std::cout, result.records);
      }

      if (!result.converged) {
        std::cerr << "replay DIVERGED\n";
        write_counterexample(metrics_path.empty() ? "counterexample.json"
                                                  : metrics_path + ".counterexample.json",
                             result.counterexample);
        return kExitDiverged;
      }
      std::cerr << "converged: " << trace.ops.size() << " local ops, " << result.envelopes
                << " envelopes, " << result.records.size() << " records\n";
      return kExitOk;
    }

    // check
    lcrdt::StackSpec spec = lcrdt::StackSpec::parse(chk_stack);
    const std::uint64_t seed = resolve_seed(chk_seed_flag);
    lcrdt::ReplicaFactory factory = lcrdt::make_replica_factory(spec);
    for (std::uint32_t t = 0; t < traces; ++t) {
      lcrdt::SimConfig cfg;
      cfg.kind = spec.kind;
      cfg.ops = chk_ops;
      cfg.insert_pct = chk_insert_pct;
      cfg.replicas = chk_replicas;
      cfg.seed = lcrdt::splitmix64(seed ^ (0xabcdull + t));
      lcrdt::Trace trace = lcrdt::generate_trace(cfg, factory);
      lcrdt::CheckResult res = lcrdt::interleave_check(trace, factory, schedules, cfg.seed);
      if (!res.consistent) {
        std::cerr << "inconsistent at trace " << t << '\n';
        write_counterexample(dump_path, res.counterexample);
        return kExitDiverged;
      }
    }
    std::cout << "consistent: " << traces << " traces x " << schedules << " schedules on "
              << spec.to_string() << '\n';
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
