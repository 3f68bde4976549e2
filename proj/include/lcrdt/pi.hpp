#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lcrdt/codec.hpp"
#include "lcrdt/core.hpp"

namespace lcrdt {

// Digits live in [0, kPiDigitBase). Freshly generated components use
// [2, kPiDigitBase-2]; digits 0 and 1 are reserved for "bridge" components
// inserted when descending past a too-tight right bound, which keeps the
// space dense: a new identifier fits strictly between any two distinct ones.
inline constexpr std::uint32_t kPiDigitBase = 1u << 20;

struct PiComponent {
  std::uint32_t digit = 0;
  std::uint64_t site = 0;   // replica id, or a content key derived from the label
  std::uint64_t clock = 0;  // per-replica generation counter (0 in content mode)

  auto operator<=>(const PiComponent&) const = default;
};

// Element of the dense totally ordered space. Comparison is lexicographic
// over components; a strict prefix sorts before its extensions. Immutable
// once attached to a label.
class PositionIdentifier {
 public:
  PositionIdentifier() = default;
  explicit PositionIdentifier(std::vector<PiComponent> comps) : comps_(std::move(comps)) {}

  static const PositionIdentifier& begin_sentinel();
  static const PositionIdentifier& end_sentinel();

  const std::vector<PiComponent>& components() const { return comps_; }
  bool empty() const { return comps_.empty(); }

  auto operator<=>(const PositionIdentifier& o) const { return comps_ <=> o.comps_; }
  bool operator==(const PositionIdentifier&) const = default;

  // Debug rendering "digit.site.clock:digit.site.clock:..."; not a
  // stability contract.
  std::string to_text() const;

 private:
  std::vector<PiComponent> comps_;
};

enum class PiMode : std::uint8_t {
  unique_site = 0,  // components stamped (origin, clock): globally unique identifiers
  content = 1,      // components keyed by the label: concurrent identical inserts collide on purpose
};

std::uint64_t content_key(std::string_view label);

// Forges identifiers strictly between two neighbors. In unique mode the
// result is a function of (left, right, origin, clock); in content mode a
// function of (left, right, label) only, so every replica forges the same
// identifier for the same insertion.
class PiGenerator {
 public:
  PiGenerator(PiMode mode, ReplicaId origin) : mode_(mode), origin_(origin) {}

  // Requires left < right; throws std::invalid_argument otherwise.
  PositionIdentifier between(const PositionIdentifier& left, const PositionIdentifier& right,
                             std::string_view label);

  PiMode mode() const { return mode_; }
  ReplicaId origin() const { return origin_; }
  std::uint64_t clock() const { return clock_; }
  void restore_clock(std::uint64_t c) { clock_ = c; }

 private:
  PiMode mode_;
  ReplicaId origin_;
  std::uint64_t clock_ = 0;
};

template <>
struct Codec<PiComponent> {
  static void encode(ByteWriter& w, const PiComponent& c) {
    w.u32(c.digit);
    w.u64(c.site);
    w.u64(c.clock);
  }
  static PiComponent decode(ByteReader& r) {
    PiComponent c;
    c.digit = r.u32();
    c.site = r.u64();
    c.clock = r.u64();
    return c;
  }
  static json to_json(const PiComponent& c) { return json::array({c.digit, c.site, c.clock}); }
  static PiComponent from_json(const json& j) {
    return PiComponent{j.at(0).get<std::uint32_t>(), j.at(1).get<std::uint64_t>(),
                       j.at(2).get<std::uint64_t>()};
  }
};

template <>
struct Codec<PositionIdentifier> {
  static void encode(ByteWriter& w, const PositionIdentifier& p) {
    Codec<std::vector<PiComponent>>::encode(w, p.components());
  }
  static PositionIdentifier decode(ByteReader& r) {
    return PositionIdentifier(Codec<std::vector<PiComponent>>::decode(r));
  }
  static json to_json(const PositionIdentifier& p) {
    return Codec<std::vector<PiComponent>>::to_json(p.components());
  }
  static PositionIdentifier from_json(const json& j) {
    return PositionIdentifier(Codec<std::vector<PiComponent>>::from_json(j));
  }
};

}  // namespace lcrdt
