#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "lcrdt/set.hpp"
#include "oracle_helpers.hpp"

using namespace lcrdt;

using Msg = SetMessage<std::string>;

namespace {

// Applies origin logs to a fresh replica in every per-origin-FIFO
// interleaving; returns all resulting states.
template <typename SetT>
std::vector<SetT> all_orders(const std::vector<std::vector<typename SetT::Message>>& logs) {
  std::vector<SetT> out;
  std::vector<std::size_t> sizes;
  for (const auto& l : logs) sizes.push_back(l.size());
  oracle::fifo_interleavings(sizes, [&](const auto& seq) {
    SetT replica(99);
    for (const auto& [origin, index] : seq) replica.apply(logs[origin][index]);
    out.push_back(std::move(replica));
  });
  return out;
}

}  // namespace

TEST_CASE("add makes an element visible") {
  ORSet<std::string> s(1);
  CHECK(s.lookup().empty());
  s.local_add("a");
  CHECK(s.lookup() == std::vector<std::string>{"a"});
}

TEST_CASE("re-adding keeps one visible element with two live tags") {
  ORSet<std::string> s(1);
  s.local_add("a");
  s.local_add("a");
  CHECK(s.lookup() == std::vector<std::string>{"a"});
  CHECK(s.live_tag_count("a") == 2);
}

TEST_CASE("concurrent adds of the same element merge into one") {
  ORSet<std::string> a(1), b(2);
  auto ma = a.local_add("a");
  auto mb = b.local_add("a");
  a.apply(mb);
  b.apply(ma);
  CHECK(a.lookup() == std::vector<std::string>{"a"});
  CHECK(b.lookup() == std::vector<std::string>{"a"});
  CHECK(a.same_state(b));
}

TEST_CASE("add then remove empties the set") {
  ORSet<std::string> s(1);
  s.local_add("a");
  s.local_remove("a");
  CHECK(s.lookup().empty());
}

TEST_CASE("add wins against a concurrent blind remove, all delivery orders") {
  // replica 1 adds 'a'; replica 2 removes 'a' having observed nothing.
  ORSet<std::string> r1(1), r2(2);
  auto add = r1.local_add("a");
  auto rem = r2.local_remove("a");
  CHECK(rem.tags.empty());

  // both delivery orders at a third replica, plus each other's message
  auto states = all_orders<ORSet<std::string>>({{add}, {rem}});
  for (auto& s : states) CHECK(s.lookup() == std::vector<std::string>{"a"});

  r1.apply(rem);
  r2.apply(add);
  CHECK(r1.lookup() == std::vector<std::string>{"a"});
  CHECK(r2.lookup() == std::vector<std::string>{"a"});
  CHECK(r1.same_state(r2));
}

TEST_CASE("counter set resolves the same scenario to absence") {
  CounterSet<std::string> r1(1), r2(2);
  auto add = r1.local_add("a");
  auto rem = r2.local_remove("a");
  r1.apply(rem);
  r2.apply(add);
  CHECK(r1.count("a") == 0);
  CHECK(r2.count("a") == 0);
  CHECK(r1.lookup().empty());
  CHECK(r2.lookup().empty());
  CHECK(r1.same_state(r2));
}

TEST_CASE("overlapping removes are idempotent on the overlap") {
  ORSet<std::string> base(1);
  auto add = base.local_add("a");
  ORSet<std::string> o1(2), o2(3);
  o1.apply(add);
  o2.apply(add);
  auto rem1 = o1.local_remove("a");
  auto rem2 = o2.local_remove("a");
  CHECK(rem1.tags == rem2.tags);

  auto states = all_orders<ORSet<std::string>>({{add}, {rem1}, {rem2}});
  REQUIRE(!states.empty());
  for (auto& s : states) {
    CHECK(s.lookup().empty());
    CHECK(s.same_state(states.front()));
  }
}

TEST_CASE("remove before its add converges to the causal result") {
  ORSet<std::string> writer(1);
  auto add = writer.local_add("a");
  ORSet<std::string> observer(2);
  observer.apply(add);
  auto rem = observer.local_remove("a");

  auto states = all_orders<ORSet<std::string>>({{add}, {rem}});
  for (auto& s : states) {
    CHECK(s.lookup().empty());
    CHECK(s.same_state(states.front()));
  }
}

TEST_CASE("deliverable message pairs commute") {
  std::mt19937_64 rng(2024);
  for (int round = 0; round < 200; ++round) {
    // build a random base state from two writers
    ORSet<std::string> w1(1), w2(2);
    std::vector<Msg> log1, log2;
    auto step = [&Rng = rng](ORSet<std::string>& w, std::vector<Msg>& log) {
      std::string e = "e" + std::to_string(Rng() % 4);
      if (Rng() % 3 == 0)
        log.push_back(w.local_remove(e));
      else
        log.push_back(w.local_add(e));
    };
    for (int i = 0; i < 6; ++i) step(w1, log1);
    for (int i = 0; i < 6; ++i) step(w2, log2);

    // pick a prefix point, then apply the next message from each origin in
    // both orders
    std::size_t c1 = rng() % log1.size();
    std::size_t c2 = rng() % log2.size();
    auto build = [&](bool first1) {
      ORSet<std::string> s(9);
      for (std::size_t i = 0; i < c1; ++i) s.apply(log1[i]);
      for (std::size_t i = 0; i < c2; ++i) s.apply(log2[i]);
      if (first1) {
        s.apply(log1[c1]);
        s.apply(log2[c2]);
      } else {
        s.apply(log2[c2]);
        s.apply(log1[c1]);
      }
      return s;
    };
    auto a = build(true);
    auto b = build(false);
    CHECK(a.same_state(b));
  }
}

TEST_CASE("counter set lookup is the positive-count filter, any order") {
  std::mt19937_64 rng(77);
  for (int round = 0; round < 100; ++round) {
    std::vector<std::vector<SetMessage<std::string>>> logs(2);
    CounterSet<std::string> w1(1), w2(2);
    std::map<std::string, std::int64_t> expected;
    for (int i = 0; i < 5; ++i) {
      std::string e = "e" + std::to_string(rng() % 3);
      bool add = rng() % 2 == 0;
      expected[e] += add ? 1 : -1;
      logs[0].push_back(add ? w1.local_add(e) : w1.local_remove(e));
    }
    for (int i = 0; i < 3; ++i) {
      std::string e = "e" + std::to_string(rng() % 3);
      bool add = rng() % 2 == 0;
      expected[e] += add ? 1 : -1;
      logs[1].push_back(add ? w2.local_add(e) : w2.local_remove(e));
    }
    std::vector<std::string> want;
    for (const auto& [e, c] : expected) {
      if (c > 0) want.push_back(e);
    }
    auto states = all_orders<CounterSet<std::string>>(logs);
    for (auto& s : states) CHECK(s.lookup() == want);
  }
}

TEST_CASE("convergence: 3 replicas, 1000 ops, 100 random interleavings") {
  // generation run with staggered cross-delivery, then re-delivery of the
  // fixed logs under random per-origin-FIFO interleavings
  auto run = [](auto make_set) {
    using SetT = decltype(make_set(0));
    std::mt19937_64 rng(4242);
    std::vector<SetT> writers{make_set(0), make_set(1), make_set(2)};
    std::vector<std::vector<typename SetT::Message>> logs(3);
    std::vector<std::array<std::size_t, 3>> seen(3, {0, 0, 0});

    for (int op = 0; op < 1000; ++op) {
      const std::size_t r = rng() % 3;
      std::string e = "e" + std::to_string(rng() % 8);
      logs[r].push_back(rng() % 100 < 65 ? writers[r].local_add(e) : writers[r].local_remove(e));
      if (rng() % 2 == 0) {  // lazily deliver someone else's backlog
        const std::size_t from = rng() % 3, to = rng() % 3;
        if (from != to && seen[to][from] < logs[from].size())
          writers[to].apply(logs[from][seen[to][from]++]);
      }
    }

    // reference: deliver everything in origin-major order
    SetT reference = make_set(9);
    for (const auto& log : logs)
      for (const auto& m : log) reference.apply(m);

    for (int schedule = 0; schedule < 100; ++schedule) {
      SetT replica = make_set(10);
      std::array<std::size_t, 3> pos{0, 0, 0};
      std::size_t remaining = logs[0].size() + logs[1].size() + logs[2].size();
      while (remaining > 0) {
        std::size_t o = rng() % 3;
        while (pos[o] >= logs[o].size()) o = (o + 1) % 3;
        replica.apply(logs[o][pos[o]++]);
        --remaining;
      }
      CHECK(replica.same_state(reference));
      CHECK(replica.lookup() == reference.lookup());
    }
  };
  run([](ReplicaId id) { return ORSet<std::string>(id); });
  run([](ReplicaId id) { return CounterSet<std::string>(id); });
}

TEST_CASE("observer fires only on visibility changes") {
  ORSet<std::string> a(1), b(2);
  std::vector<std::pair<SetEventKind, std::string>> events;
  b.set_observer([&](SetEventKind k, const std::string& e) { events.emplace_back(k, e); });

  auto add1 = a.local_add("x");
  auto add2 = a.local_add("x");
  b.apply(add1);
  b.apply(add2);  // second tag: still visible, no event
  REQUIRE(events.size() == 1);
  CHECK(events[0] == std::pair{SetEventKind::add, std::string("x")});

  auto rem = a.local_remove("x");  // removes both tags
  b.apply(rem);
  REQUIRE(events.size() == 2);
  CHECK(events[1] == std::pair{SetEventKind::remove, std::string("x")});
}

TEST_CASE("buffered remove suppresses the add notification") {
  ORSet<std::string> writer(1);
  auto add = writer.local_add("x");
  auto rem = writer.local_remove("x");

  ORSet<std::string> late(2);
  std::vector<SetEventKind> events;
  late.set_observer([&](SetEventKind k, const std::string&) { events.push_back(k); });
  late.apply(rem);
  late.apply(add);  // tag consumed by the pending remove: never visible
  CHECK(events.empty());
  CHECK(late.lookup().empty());
}
