#include "lcrdt/pi.hpp"

#include <limits>
#include <sstream>
#include <stdexcept>

namespace lcrdt {

namespace {

constexpr std::uint32_t kMinFresh = 2;
constexpr std::uint32_t kMaxFresh = kPiDigitBase - 2;

struct PickCtx {
  std::uint64_t key;    // origin/clock mix or content key
  std::uint64_t site;   // site stamped on emitted components
  std::uint64_t clock;  // clock stamped on emitted components
};

std::uint32_t pick_digit(const PickCtx& ctx, std::uint32_t lo, std::uint32_t hi, std::size_t depth) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - lo + 1;
  const std::uint64_t h = splitmix64(ctx.key ^ (0x9e3779b97f4a7c15ull * (depth + 1)));
  return lo + static_cast<std::uint32_t>(h % span);
}

PiComponent fresh(const PickCtx& ctx, std::uint32_t lo, std::uint32_t hi, std::size_t depth) {
  return PiComponent{pick_digit(ctx, lo, hi, depth), ctx.site, ctx.clock};
}

// Suffix strictly greater than l's suffix starting at depth d. The right
// bound at this subtree is open, so any extension past l's end works.
void gen_above(const std::vector<PiComponent>& l, std::size_t d, const PickCtx& ctx,
               std::vector<PiComponent>& out) {
  for (;; ++d) {
    if (d >= l.size()) {
      out.push_back(fresh(ctx, kMinFresh, kMaxFresh, out.size()));
      return;
    }
    const std::uint32_t dl = l[d].digit;
    if (dl + 1 <= kMaxFresh) {
      out.push_back(fresh(ctx, std::max(kMinFresh, dl + 1), kMaxFresh, out.size()));
      return;
    }
    out.push_back(l[d]);
  }
}

// Suffix strictly less than r's suffix starting at depth d. Descends along
// r past digit-0/1 bridges; r's final component always has digit >= 2, so
// the descent terminates with room below it.
void gen_below(const std::vector<PiComponent>& r, std::size_t d, const PickCtx& ctx,
               std::vector<PiComponent>& out) {
  for (;; ++d) {
    if (d >= r.size()) throw std::logic_error("pi generation: right bound exhausted");
    const std::uint32_t dr = r[d].digit;
    if (dr >= 3) {
      out.push_back(fresh(ctx, kMinFresh, dr - 1, out.size()));
      return;
    }
    if (dr == 2 || dr == 1) {
      out.push_back(PiComponent{dr - 1, ctx.site, ctx.clock});  // bridge below
      out.push_back(fresh(ctx, kMinFresh, kMaxFresh, out.size()));
      return;
    }
    out.push_back(r[d]);  // dr == 0: copy the bridge and keep descending
  }
}

}  // namespace

const PositionIdentifier& PositionIdentifier::begin_sentinel() {
  static const PositionIdentifier begin{};
  return begin;
}

const PositionIdentifier& PositionIdentifier::end_sentinel() {
  static const PositionIdentifier end{std::vector<PiComponent>{
      PiComponent{kPiDigitBase - 1, std::numeric_limits<std::uint64_t>::max(),
                  std::numeric_limits<std::uint64_t>::max()}}};
  return end;
}

std::string PositionIdentifier::to_text() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < comps_.size(); ++i) {
    if (i) os << ':';
    os << comps_[i].digit << '.' << comps_[i].site << '.' << comps_[i].clock;
  }
  return os.str();
}

std::uint64_t content_key(std::string_view label) { return fnv1a64(label.data(), label.size()); }

PositionIdentifier PiGenerator::between(const PositionIdentifier& left,
                                        const PositionIdentifier& right, std::string_view label) {
  if (!(left < right)) throw std::invalid_argument("pi generation requires left < right");

  PickCtx ctx;
  if (mode_ == PiMode::unique_site) {
    ++clock_;
    ctx.site = origin_;
    ctx.clock = clock_;
    ctx.key = splitmix64((static_cast<std::uint64_t>(origin_) << 32) ^ clock_);
  } else {
    ctx.site = content_key(label);
    ctx.clock = 0;
    ctx.key = ctx.site;
  }

  const auto& l = left.components();
  const auto& r = right.components();

  std::size_t k = 0;
  while (k < l.size() && k < r.size() && l[k] == r[k]) ++k;

  std::vector<PiComponent> out;
  if (k == l.size()) {
    // l is a strict prefix of r: fit just below r's next component.
    out.assign(l.begin(), l.end());
    gen_below(r, k, ctx, out);
  } else {
    // First difference at k with l[k] < r[k].
    out.assign(l.begin(), l.begin() + k);
    const std::uint32_t lo = std::max(kMinFresh, l[k].digit + 1);
    const std::uint32_t hi = std::min(kMaxFresh, r[k].digit == 0 ? 0 : r[k].digit - 1);
    if (r[k].digit >= 1 && lo <= hi) {
      out.push_back(fresh(ctx, lo, hi, out.size()));
    } else {
      // No room at this depth: keep l[k] (still < r[k]) and grow above l.
      out.push_back(l[k]);
      gen_above(l, k + 1, ctx, out);
    }
  }

  PositionIdentifier result(std::move(out));
  if (!(left < result) || !(result < right))
    throw std::logic_error("pi generation produced an out-of-range identifier");
  return result;
}

}  // namespace lcrdt
