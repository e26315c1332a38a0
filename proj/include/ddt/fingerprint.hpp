#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

namespace ddt {

/// Selects one member of the hash family. One seed defines one epoch.
struct hash_seed {
  std::uint64_t value = 0;
  friend constexpr bool operator==(hash_seed, hash_seed) = default;
};

/// Hash value identifying the string induced by a node within one epoch.
struct fingerprint {
  std::uint64_t value = 0;
  friend constexpr auto operator<=>(fingerprint, fingerprint) = default;
};

struct fingerprint_hash {
  std::size_t operator()(fingerprint f) const noexcept {
    // Values are already well mixed.
    return static_cast<std::size_t>(f.value);
  }
};

// Preimage tags of the canonical serialization.
inline constexpr std::byte leaf_tag{0x4C};
inline constexpr std::byte duplicate_tag{0x44};
inline constexpr std::byte increasing_tag{0x49};

struct leaf_preimage {
  std::uint64_t symbol = 0;
  std::uint8_t width = 1;  // bytes of the symbol that are serialized
  friend bool operator==(const leaf_preimage&, const leaf_preimage&) = default;
};

struct duplicate_preimage {
  std::uint64_t level = 1;
  std::uint64_t multiplicity = 1;
  fingerprint child;
  friend bool operator==(const duplicate_preimage&, const duplicate_preimage&) = default;
};

struct increasing_preimage {
  std::uint64_t level = 2;
  std::vector<fingerprint> children;
  friend bool operator==(const increasing_preimage&, const increasing_preimage&) = default;
};

using preimage = std::variant<leaf_preimage, duplicate_preimage, increasing_preimage>;

/// Level parity and child ordering rules of a preimage.
inline bool well_formed(const preimage& p) {
  if (const auto* l = std::get_if<leaf_preimage>(&p)) {
    return l->width >= 1 && l->width <= 8;
  }
  if (const auto* d = std::get_if<duplicate_preimage>(&p)) {
    return d->level % 2 == 1 && d->multiplicity >= 1;
  }
  const auto& inc = std::get<increasing_preimage>(p);
  if (inc.level < 2 || inc.level % 2 != 0 || inc.children.empty()) return false;
  for (std::size_t i = 1; i < inc.children.size(); ++i) {
    if (!(inc.children[i - 1] < inc.children[i])) return false;
  }
  return true;
}

/// Seeded streaming hash over a byte sequence. Bytes are consumed as
/// little-endian 64-bit lanes; a trailing partial lane is zero padded and the
/// total length is folded into the finalizer, so the result depends only on
/// the byte sequence, not on how it was fed.
class hasher {
 public:
  explicit hasher(hash_seed seed) : state_(seed.value ^ 0x9E3779B97F4A7C15ULL) {}

  void put_u8(std::uint8_t b) {
    pending_ |= std::uint64_t{b} << (8 * fill_);
    ++length_;
    if (++fill_ == 8) {
      absorb(pending_);
      pending_ = 0;
      fill_ = 0;
    }
  }

  void put_u64(std::uint64_t w) {
    length_ += 8;
    if (fill_ == 0) {
      absorb(w);
      return;
    }
    absorb(pending_ | (w << (8 * fill_)));
    pending_ = w >> (64 - 8 * fill_);
  }

  void put_bytes(std::span<const std::byte> bytes) {
    for (std::byte b : bytes) put_u8(static_cast<std::uint8_t>(b));
  }

  std::uint64_t finish() const {
    std::uint64_t h = state_;
    if (fill_ != 0) h = mix_lane(h, pending_);
    h ^= length_;
    return fmix(h);
  }

 private:
  static std::uint64_t fmix(std::uint64_t k) {
    k ^= k >> 33;
    k *= 0xff51afd7ed558ccdULL;
    k ^= k >> 33;
    k *= 0xc4ceb9fe1a85ec53ULL;
    k ^= k >> 33;
    return k;
  }

  static std::uint64_t mix_lane(std::uint64_t h, std::uint64_t w) {
    w *= 0x87c37b91114253d5ULL;
    w = std::rotl(w, 31);
    w *= 0x4cf5ad432745937fULL;
    h ^= w;
    h = std::rotl(h, 27);
    return h * 5 + 0x52dce729;
  }

  void absorb(std::uint64_t w) { state_ = mix_lane(state_, w); }

  std::uint64_t state_;
  std::uint64_t pending_ = 0;
  std::uint64_t length_ = 0;
  unsigned fill_ = 0;
};

inline constexpr std::uint64_t fingerprint_mask(unsigned bits) {
  return bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
}

namespace detail {

inline void append_u64(std::vector<std::byte>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::byte>(v >> (8 * i)));
}

}  // namespace detail

/// Canonical byte serialization: tag byte, then fixed-width little-endian
/// fields; the increasing child list is length prefixed.
inline std::vector<std::byte> serialize(const preimage& p) {
  std::vector<std::byte> out;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, leaf_preimage>) {
          out.push_back(leaf_tag);
          for (unsigned i = 0; i < v.width; ++i) {
            out.push_back(static_cast<std::byte>(v.symbol >> (8 * i)));
          }
        } else if constexpr (std::is_same_v<T, duplicate_preimage>) {
          out.push_back(duplicate_tag);
          detail::append_u64(out, v.level);
          detail::append_u64(out, v.multiplicity);
          detail::append_u64(out, v.child.value);
        } else {
          out.push_back(increasing_tag);
          detail::append_u64(out, v.level);
          detail::append_u64(out, v.children.size());
          for (fingerprint c : v.children) detail::append_u64(out, c.value);
        }
      },
      p);
  return out;
}

inline fingerprint hash_bytes(hash_seed seed, std::span<const std::byte> bytes,
                              unsigned bits = 64) {
  hasher h(seed);
  h.put_bytes(bytes);
  return fingerprint{h.finish() & fingerprint_mask(bits)};
}

/// Fingerprint of a preimage. `bits` truncates the hash; anything below 64
/// exists for exercising the collision path.
inline fingerprint hash_preimage(hash_seed seed, const preimage& p, unsigned bits = 64) {
  const auto bytes = serialize(p);
  return hash_bytes(seed, bytes, bits);
}

// Allocation-free equivalents of hash_preimage for each preimage kind.

inline fingerprint hash_leaf(hash_seed seed, std::uint64_t symbol, unsigned width,
                             unsigned bits = 64) {
  hasher h(seed);
  h.put_u8(static_cast<std::uint8_t>(leaf_tag));
  for (unsigned i = 0; i < width; ++i) h.put_u8(static_cast<std::uint8_t>(symbol >> (8 * i)));
  return fingerprint{h.finish() & fingerprint_mask(bits)};
}

inline fingerprint hash_duplicate(hash_seed seed, std::uint64_t level,
                                  std::uint64_t multiplicity, fingerprint child,
                                  unsigned bits = 64) {
  hasher h(seed);
  h.put_u8(static_cast<std::uint8_t>(duplicate_tag));
  h.put_u64(level);
  h.put_u64(multiplicity);
  h.put_u64(child.value);
  return fingerprint{h.finish() & fingerprint_mask(bits)};
}

/// `child_fp(i)` yields the fingerprint of child i for i in [0, count).
template <class ChildFp>
fingerprint hash_increasing(hash_seed seed, std::uint64_t level, std::size_t count,
                            ChildFp&& child_fp, unsigned bits = 64) {
  hasher h(seed);
  h.put_u8(static_cast<std::uint8_t>(increasing_tag));
  h.put_u64(level);
  h.put_u64(count);
  for (std::size_t i = 0; i < count; ++i) h.put_u64(child_fp(i).value);
  return fingerprint{h.finish() & fingerprint_mask(bits)};
}

enum class register_result { registered, collision_detected };

/// Map from fingerprint to whatever describes the preimage that produced it.
/// `Same` decides whether two entries describe the same preimage.
template <class Entry, class Same = std::equal_to<>>
class basic_fingerprint_table {
 public:
  explicit basic_fingerprint_table(hash_seed epoch = {}, Same same = {})
      : epoch_(epoch), same_(std::move(same)) {}

  hash_seed epoch() const { return epoch_; }
  std::size_t size() const { return map_.size(); }
  bool empty() const { return map_.empty(); }

  /// Inserts (fp -> entry). Idempotent for an identical preimage; a different
  /// preimage under a used fingerprint leaves the table unchanged.
  register_result try_register(fingerprint fp, const Entry& entry) {
    auto [it, inserted] = map_.try_emplace(fp, entry);
    if (inserted || same_(it->second, entry)) return register_result::registered;
    return register_result::collision_detected;
  }

  const Entry* find(fingerprint fp) const {
    auto it = map_.find(fp);
    return it == map_.end() ? nullptr : &it->second;
  }

  /// Removes fp only if its entry satisfies pred.
  template <class Pred>
  bool erase_if(fingerprint fp, Pred pred) {
    auto it = map_.find(fp);
    if (it == map_.end() || !pred(it->second)) return false;
    map_.erase(it);
    return true;
  }

  void reset(hash_seed epoch) {
    map_.clear();
    epoch_ = epoch;
  }

  void reserve(std::size_t n) { map_.reserve(n); }

  template <class F>
  void for_each(F&& f) const {
    for (const auto& [fp, e] : map_) f(fp, e);
  }

 private:
  hash_seed epoch_;
  [[no_unique_address]] Same same_;
  std::unordered_map<fingerprint, Entry, fingerprint_hash> map_;
};

using fingerprint_table = basic_fingerprint_table<preimage>;

inline std::optional<preimage> lookup(const fingerprint_table& table, fingerprint fp) {
  if (const preimage* p = table.find(fp)) return *p;
  return std::nullopt;
}

}  // namespace ddt
