#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "lcrdt/bytes.hpp"
#include "lcrdt/core.hpp"

namespace lcrdt {

using json = nlohmann::json;

// Binary + JSON codec for a set-element type. Specialized per element;
// the binary side is the canonical form (length-prefixed, little-endian).
template <typename T>
struct Codec;

template <>
struct Codec<std::string> {
  static void encode(ByteWriter& w, const std::string& v) { w.str(v); }
  static std::string decode(ByteReader& r) { return r.str(); }
  static json to_json(const std::string& v) { return v; }
  static std::string from_json(const json& j) { return j.get<std::string>(); }
};

template <>
struct Codec<Tag> {
  static void encode(ByteWriter& w, const Tag& t) {
    w.u32(t.origin);
    w.u64(t.counter);
  }
  static Tag decode(ByteReader& r) {
    Tag t;
    t.origin = r.u32();
    t.counter = r.u64();
    return t;
  }
  static json to_json(const Tag& t) { return json{{"origin", t.origin}, {"counter", t.counter}}; }
  static Tag from_json(const json& j) {
    return Tag{j.at("origin").get<ReplicaId>(), j.at("counter").get<std::uint64_t>()};
  }
};

template <typename E>
struct Codec<std::vector<E>> {
  static void encode(ByteWriter& w, const std::vector<E>& v) {
    w.u32(static_cast<std::uint32_t>(v.size()));
    for (const auto& e : v) Codec<E>::encode(w, e);
  }
  static std::vector<E> decode(ByteReader& r) {
    std::uint32_t n = r.u32();
    std::vector<E> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(Codec<E>::decode(r));
    return v;
  }
  static json to_json(const std::vector<E>& v) {
    json a = json::array();
    for (const auto& e : v) a.push_back(Codec<E>::to_json(e));
    return a;
  }
  static std::vector<E> from_json(const json& j) {
    std::vector<E> v;
    for (const auto& e : j) v.push_back(Codec<E>::from_json(e));
    return v;
  }
};

}  // namespace lcrdt
