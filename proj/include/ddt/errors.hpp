#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ddt {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two different preimages hashed to the same fingerprint. The epoch is dead:
/// every handle issued under it must be discarded and the caller restarts
/// with a fresh seed.
class collision_detected : public error {
 public:
  collision_detected() : error("fingerprint collision detected") {}
};

/// A node would exceed the height cap of the collection. Same recovery as a
/// collision.
class rebuild_required : public error {
 public:
  explicit rebuild_required(std::size_t level)
      : error("height cap exceeded at level " + std::to_string(level)) {}
};

/// Handles from different collections or from a retired epoch were mixed.
class epoch_mismatch : public error {
 public:
  epoch_mismatch() : error("handles belong to different epochs") {}
};

class index_out_of_range : public error {
 public:
  index_out_of_range(std::uint64_t index, std::uint64_t length)
      : error("index " + std::to_string(index) + " out of range for length " +
              std::to_string(length)) {}
};

class split_at_boundary : public error {
 public:
  explicit split_at_boundary(std::uint64_t index)
      : error("cannot split at boundary position " + std::to_string(index)) {}
};

class invalid_input : public error {
 public:
  using error::error;
};

class not_prime : public error {
 public:
  explicit not_prime(std::uint64_t p) : error(std::to_string(p) + " is not prime") {}
};

/// A broken internal invariant. Never expected; indicates a bug.
class internal_inconsistency : public error {
 public:
  using error::error;
};

}  // namespace ddt

#define DDT_CHECK(cond, msg)                                                  \
  do {                                                                        \
    if (!(cond)) throw ::ddt::internal_inconsistency(std::string(msg) + " [" \
                                                     #cond "]");              \
  } while (false)
