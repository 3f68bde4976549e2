#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "lcrdt/dag.hpp"
#include "lcrdt/ordered_tree.hpp"
#include "lcrdt/sequence.hpp"
#include "oracle_helpers.hpp"

using namespace lcrdt;

namespace {

std::mt19937_64 g_rng(20240);

std::string rand_str() {
  std::string s;
  const std::size_t n = g_rng() % 6;
  for (std::size_t i = 0; i < n; ++i) s.push_back(static_cast<char>('a' + g_rng() % 26));
  return s;
}

Tag rand_tag() { return Tag{static_cast<ReplicaId>(g_rng() % 8), g_rng() % 1000}; }

PositionIdentifier rand_pi() {
  std::vector<PiComponent> comps;
  const std::size_t n = g_rng() % 4;
  for (std::size_t i = 0; i < n; ++i)
    comps.push_back(PiComponent{static_cast<std::uint32_t>(g_rng() % kPiDigitBase), g_rng() % 100,
                                g_rng() % 100});
  return PositionIdentifier(std::move(comps));
}

template <typename T>
SetMessage<T> rand_message(T element, bool counter_form) {
  SetMessage<T> m;
  m.kind = g_rng() % 2 == 0 ? SetEventKind::add : SetEventKind::remove;
  m.element = std::move(element);
  m.counter_form = counter_form;
  if (counter_form) {
    m.delta = static_cast<std::int64_t>(g_rng() % 7) - 3;
  } else {
    const std::size_t n = m.kind == SetEventKind::add ? 1 : g_rng() % 3;
    for (std::size_t i = 0; i < n; ++i) m.tags.push_back(rand_tag());
  }
  return m;
}

// decode(encode(m)) == m and encode(decode(bytes)) == bytes
template <typename T>
void check_roundtrip(const SetMessage<T>& m) {
  ByteWriter w;
  encode_message(w, m);
  const auto bytes = w.data();
  ByteReader r(bytes);
  auto back = decode_message<T>(r);
  CHECK(r.done());
  CHECK(back == m);
  ByteWriter w2;
  encode_message(w2, back);
  CHECK(w2.data() == bytes);

  auto j = message_to_json(m);
  CHECK(message_from_json<T>(j) == m);
}

}  // namespace

TEST_CASE("set messages round-trip bit-exactly for every element type") {
  for (int i = 0; i < 200; ++i) {
    check_roundtrip(rand_message<std::string>(rand_str(), i % 2 == 0));
    check_roundtrip(rand_message<Couple>(Couple{rand_str(), rand_pi()}, i % 2 == 0));

    TreePath<std::string> path;
    for (std::size_t k = 0; k < g_rng() % 4; ++k) path.push_back(rand_str());
    check_roundtrip(rand_message<TreePath<std::string>>(path, i % 2 == 0));

    OrderedPath opath;
    for (std::size_t k = 0; k < g_rng() % 3; ++k) opath.push_back(PiLabel{rand_str(), rand_pi()});
    check_roundtrip(rand_message<OrderedPath>(opath, i % 2 == 0));

    check_roundtrip(rand_message<DagVertex>(DagVertex{rand_str(), rand_str()}, i % 2 == 0));
    check_roundtrip(
        rand_message<DagEdge>(DagEdge{rand_str(), rand_str(), rand_tag()}, i % 2 == 0));
  }
}

TEST_CASE("json forms match the documented shapes") {
  ORSet<std::string> s(3);
  auto add = s.local_add("x");
  auto aj = message_to_json(add);
  CHECK(aj["kind"] == "add");
  CHECK(aj["element"] == "x");
  REQUIRE(aj["tags"].size() == 1);
  CHECK(aj["tags"][0]["origin"] == 3);
  CHECK(aj["tags"][0]["counter"] == 1);
  CHECK(!aj.contains("delta"));

  CounterSet<std::string> c(1);
  auto rem = c.local_remove("y");
  auto rj = message_to_json(rem);
  CHECK(rj["kind"] == "remove");
  CHECK(rj["delta"] == -1);
  CHECK(!rj.contains("tags"));
}

TEST_CASE("truncated payloads are rejected") {
  ORSet<std::string> s(1);
  auto m = s.local_add("hello");
  ByteWriter w;
  encode_message(w, m);
  auto bytes = w.data();
  bytes.pop_back();
  ByteReader r(bytes);
  CHECK_THROWS_AS(decode_message<std::string>(r), std::runtime_error);
}

TEST_CASE("snapshots are deterministic functions of state") {
  ORSet<Couple> a(1), b(2);
  PiGenerator g1(PiMode::unique_site, 1), g2(PiMode::unique_site, 2);
  auto p = g1.between(PositionIdentifier::begin_sentinel(), PositionIdentifier::end_sentinel(), "x");
  auto m1 = a.local_add(Couple{"x", p});
  auto m2 = a.local_add(Couple{"y", g1.between(p, PositionIdentifier::end_sentinel(), "y")});
  b.apply(m2);
  b.apply(m1);  // different arrival order, same state
  ByteWriter wa, wb;
  a.encode_state(wa);
  b.encode_state(wb);
  CHECK(wa.data() == wb.data());
  CHECK(a.state_hash() == b.state_hash());
}
