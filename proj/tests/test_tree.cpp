#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "lcrdt/tree.hpp"
#include "oracle_helpers.hpp"

using namespace lcrdt;

namespace {

using Path = TreePath<std::string>;

Path path(const std::string& labels) {
  Path p;
  for (char c : labels) p.emplace_back(1, c);
  return p;
}

std::vector<Path> paths(std::initializer_list<const char*> ps) {
  std::vector<Path> out;
  for (const char* s : ps) out.push_back(path(s));
  return out;
}

// flat rendering "a a.c" of the view positions (ghosts marked with *)
void flatten(const TreeNode<std::string>& node, std::string& cur, std::vector<std::string>& out) {
  for (const auto& [l, c] : node.children) {
    std::string here = cur.empty() ? l : cur + "." + l;
    out.push_back(c.ghost ? here + "*" : here);
    flatten(c, here, out);
  }
}

std::vector<std::string> shape(const TreeNode<std::string>& root) {
  std::vector<std::string> out;
  std::string cur;
  flatten(root, cur, out);
  return out;
}

}  // namespace

TEST_CASE("the running conflict scenario under all four policies") {
  const auto ls = paths({"a", "ac", "abc"});
  CHECK(shape(connect_lookup(ls, ConnectPolicy::skip)) == std::vector<std::string>{"a", "a.c"});
  CHECK(shape(connect_lookup(ls, ConnectPolicy::reappear)) ==
        std::vector<std::string>{"a", "a.b*", "a.b.c", "a.c"});
  CHECK(shape(connect_lookup(ls, ConnectPolicy::root)) ==
        std::vector<std::string>{"a", "a.c", "c"});
  CHECK(shape(connect_lookup(ls, ConnectPolicy::compact)) ==
        std::vector<std::string>{"a", "a.c"});
  // compact merges the spliced orphan into the existing node
  auto compacted = connect_lookup(ls, ConnectPolicy::compact);
  const auto& c = compacted.children.at("a").children.at("c");
  CHECK(c.paths == std::set<Path>{path("ac"), path("abc")});
}

TEST_CASE("empty set yields a root-only tree") {
  for (auto p : {ConnectPolicy::skip, ConnectPolicy::reappear, ConnectPolicy::root,
                 ConnectPolicy::compact}) {
    auto t = connect_lookup(std::vector<Path>{}, p);
    CHECK(t.children.empty());
  }
}

TEST_CASE("skip keeps exactly the maximal prefix-closed subset") {
  std::mt19937_64 rng(17);
  for (int round = 0; round < 500; ++round) {
    std::set<Path> ls;
    for (int i = 0; i < 6; ++i) {
      Path p;
      const std::size_t len = 1 + rng() % 4;
      for (std::size_t k = 0; k < len; ++k) p.push_back(oracle::small_label(rng));
      ls.insert(p);
    }
    std::vector<Path> lsv(ls.begin(), ls.end());
    auto view = connect_lookup(lsv, ConnectPolicy::skip);

    // independent: largest prefix-closed subset
    std::set<Path> closed;
    bool changed = true;
    while (changed) {
      changed = false;
      for (const auto& p : ls) {
        if (closed.count(p)) continue;
        bool ok = true;
        for (std::size_t len = 1; len < p.size(); ++len) {
          if (!closed.count(Path(p.begin(), p.begin() + len))) ok = false;
        }
        if (ok) {
          closed.insert(p);
          changed = true;
        }
      }
    }
    std::vector<Path> got;
    collect_paths(view, got);
    CHECK(std::set<Path>(got.begin(), got.end()) == closed);
  }
}

TEST_CASE("reappear materializes the prefix closure with ghosts off-set") {
  const auto ls = paths({"abc", "abd", "x"});
  auto view = connect_lookup(ls, ConnectPolicy::reappear);
  CHECK(shape(view) ==
        std::vector<std::string>{"a*", "a.b*", "a.b.c", "a.b.d", "x"});
}

TEST_CASE("compact splices nested gaps under the longest surviving prefix") {
  CHECK(shape(connect_lookup(paths({"a", "abcd"}), ConnectPolicy::compact)) ==
        std::vector<std::string>{"a", "a.d"});
  CHECK(shape(connect_lookup(paths({"a", "ab", "abde"}), ConnectPolicy::compact)) ==
        std::vector<std::string>{"a", "a.b", "a.b.e"});
  // two gaps: the trailing run splices under the first surviving prefix,
  // and the middle orphan lands at its own splice point
  CHECK(shape(connect_lookup(paths({"a", "abc", "abcde"}), ConnectPolicy::compact)) ==
        std::vector<std::string>{"a", "a.c", "a.e"});
}

TEST_CASE("root places orphan suffixes under the root and fuses same labels") {
  // same-label orphan chains fold into one root child
  auto view = connect_lookup(paths({"c", "abc"}), ConnectPolicy::root);
  CHECK(shape(view) == std::vector<std::string>{"c"});
  CHECK(view.children.at("c").paths == std::set<Path>{path("c"), path("abc")});
}

TEST_CASE("policy evaluation is independent of input enumeration order") {
  std::mt19937_64 rng(23);
  auto ls = paths({"a", "ab", "abc", "bd", "ce", "c"});
  for (auto policy : {ConnectPolicy::skip, ConnectPolicy::reappear, ConnectPolicy::root,
                      ConnectPolicy::compact}) {
    auto reference = connect_lookup(ls, policy);
    for (int i = 0; i < 20; ++i) {
      auto shuffled = ls;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CHECK(connect_lookup(shuffled, policy) == reference);
    }
  }
}

TEST_CASE("random small instances match the quantifier-scan oracle") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 1500; ++round) {
    std::vector<Path> ls;
    std::set<Path> dedup;
    const int n = static_cast<int>(rng() % 7);
    for (int i = 0; i < n; ++i) {
      Path p;
      const std::size_t len = 1 + rng() % 4;
      for (std::size_t k = 0; k < len; ++k) p.push_back(oracle::small_label(rng));
      if (dedup.insert(p).second) ls.push_back(p);
    }
    for (auto policy : {ConnectPolicy::skip, ConnectPolicy::reappear, ConnectPolicy::root,
                        ConnectPolicy::compact}) {
      auto got = connect_lookup(ls, policy);
      auto want = oracle::policy_tree(ls, policy);
      if (got != want) {
        CAPTURE(policy_name(policy));
        CAPTURE(tree_to_json(got, true).dump());
        CAPTURE(tree_to_json(want, true).dump());
        std::string inputs;
        for (const auto& p : ls) {
          for (const auto& l : p) inputs += l;
          inputs += ' ';
        }
        CAPTURE(inputs);
        CHECK(got == want);
      }
    }
  }
}

TEST_CASE("exhaustive tiny instances match the oracle") {
  // all subsets of size <= 3 of the 12 paths over {a,b} with length <= 2,
  // plus a few deeper fixed paths
  std::vector<Path> universe;
  for (const char* s : {"a", "b", "aa", "ab", "ba", "bb", "aab", "abb", "bab", "aba"})
    universe.push_back(path(s));
  const std::size_t u = universe.size();
  for (std::size_t i = 0; i < u; ++i)
    for (std::size_t j = i; j < u; ++j)
      for (std::size_t k = j; k < u; ++k) {
        std::set<Path> s{universe[i], universe[j], universe[k]};
        std::vector<Path> ls(s.begin(), s.end());
        for (auto policy : {ConnectPolicy::skip, ConnectPolicy::reappear, ConnectPolicy::root,
                            ConnectPolicy::compact}) {
          CHECK(connect_lookup(ls, policy) == oracle::policy_tree(ls, policy));
        }
      }
}

TEST_CASE("add translation: skip and reappear keep the view path") {
  auto view = connect_lookup(paths({"a", "ab"}), ConnectPolicy::reappear);
  auto ops = translate_tree_op(view, TreeOperation<std::string>::make_add(path("abc")),
                               ConnectPolicy::reappear);
  CHECK(ops.is_add);
  CHECK(ops.paths == std::vector<Path>{path("abc")});
}

TEST_CASE("add under a ghost uses the ghost's position") {
  // orphan abc recreated b as a ghost; adding d under a.b stores abd
  auto view = connect_lookup(paths({"a", "abc"}), ConnectPolicy::reappear);
  REQUIRE(view.children.at("a").children.at("b").ghost);
  auto ops = translate_tree_op(view, TreeOperation<std::string>::make_add(path("abd")),
                               ConnectPolicy::reappear);
  CHECK(ops.paths == std::vector<Path>{path("abd")});
}

TEST_CASE("delete translation removes the whole subtree, deepest first") {
  auto view = connect_lookup(paths({"a", "ab", "abc"}), ConnectPolicy::reappear);
  auto ops = translate_tree_op(view, TreeOperation<std::string>::make_del(path("ab")),
                               ConnectPolicy::reappear);
  CHECK(!ops.is_add);
  CHECK(ops.paths == std::vector<Path>{path("abc"), path("ab")});
  // a three-node subtree suppresses three stored paths
  auto all = translate_tree_op(view, TreeOperation<std::string>::make_del(path("a")),
                               ConnectPolicy::reappear);
  CHECK(all.paths.size() == 3);
}

TEST_CASE("root-policy add concatenates every stored path of the node") {
  auto view = connect_lookup(paths({"c", "a", "abc"}), ConnectPolicy::root);
  auto ops = translate_tree_op(view, TreeOperation<std::string>::make_add(path("cd")),
                               ConnectPolicy::root);
  CHECK(ops.is_add);
  CHECK(std::set<Path>(ops.paths.begin(), ops.paths.end()) ==
        std::set<Path>{path("cd"), path("abcd")});
}

TEST_CASE("unresolvable paths are rejected") {
  auto view = connect_lookup(paths({"a"}), ConnectPolicy::skip);
  CHECK_THROWS_AS(
      translate_tree_op(view, TreeOperation<std::string>::make_add(path("xz")), ConnectPolicy::skip),
      std::invalid_argument);
  CHECK_THROWS_AS(
      translate_tree_op(view, TreeOperation<std::string>::make_del(path("z")), ConnectPolicy::skip),
      std::invalid_argument);
}

TEST_CASE("canonical renderings") {
  auto view = connect_lookup(paths({"a", "abc"}), ConnectPolicy::reappear);
  auto j = tree_to_json(view);
  CHECK(j["children"][0]["label"] == "a");
  CHECK(j["children"][0]["children"][0]["label"] == "b");
  CHECK(j["children"][0]["children"][0]["ghost"] == true);
  auto text = tree_to_text(view);
  CHECK(text == "a\n  b (ghost)\n    c\n");
}
