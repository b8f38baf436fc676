#pragma once

// Append-only hash chain of vote registrations.
//
// Canonical block serialization, the input to block_hash:
//   index        u64 big-endian
//   voter digest 32 bytes
//   details len  u32 big-endian, followed by the UTF-8 signing details
//   timestamp    u64 big-endian, milliseconds
//   prev_hash    32 bytes
// A stored record is the canonical serialization followed by block_hash.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qvote/crypto.hpp"
#include "qvote/error.hpp"

namespace qvote {

struct Block {
  std::uint64_t index = 0;
  HashId voter_hash_id;
  std::string signing_details;
  std::uint64_t timestamp_ms = 0;
  Digest prev_hash{};
  Digest block_hash{};

  friend bool operator==(const Block&, const Block&) = default;
};

namespace detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

inline std::uint64_t get_be(std::span<const std::uint8_t> bytes) {
  std::uint64_t v = 0;
  for (std::uint8_t b : bytes) v = (v << 8) | b;
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> canonical_bytes(const Block& b) {
  if (b.signing_details.size() > UINT32_MAX) throw Error(ErrorCode::InvalidArgument, "signing details too long");
  std::vector<std::uint8_t> out;
  out.reserve(8 + 32 + 4 + b.signing_details.size() + 8 + 32);
  detail::put_u64(out, b.index);
  out.insert(out.end(), b.voter_hash_id.digest.begin(), b.voter_hash_id.digest.end());
  detail::put_u32(out, static_cast<std::uint32_t>(b.signing_details.size()));
  out.insert(out.end(), b.signing_details.begin(), b.signing_details.end());
  detail::put_u64(out, b.timestamp_ms);
  out.insert(out.end(), b.prev_hash.begin(), b.prev_hash.end());
  return out;
}

inline Digest compute_block_hash(const Block& b) { return sha256(canonical_bytes(b)); }

inline std::vector<std::uint8_t> serialize_record(const Block& b) {
  auto out = canonical_bytes(b);
  out.insert(out.end(), b.block_hash.begin(), b.block_hash.end());
  return out;
}

/// Inverse of serialize_record. Returns nullopt when the byte layout is
/// inconsistent (for example a length prefix that disagrees with the size).
inline std::optional<Block> parse_record(std::span<const std::uint8_t> bytes) {
  constexpr std::size_t kFixed = 8 + 32 + 4 + 8 + 32 + 32;
  if (bytes.size() < kFixed) return std::nullopt;
  const std::uint64_t details_len = detail::get_be(bytes.subspan(40, 4));
  if (bytes.size() != kFixed + details_len) return std::nullopt;
  Block b;
  std::size_t pos = 0;
  b.index = detail::get_be(bytes.subspan(pos, 8));
  pos += 8;
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), 32, b.voter_hash_id.digest.begin());
  pos += 32 + 4;
  b.signing_details.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                           bytes.begin() + static_cast<std::ptrdiff_t>(pos + details_len));
  pos += details_len;
  b.timestamp_ms = detail::get_be(bytes.subspan(pos, 8));
  pos += 8;
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), 32, b.prev_hash.begin());
  pos += 32;
  std::copy_n(bytes.begin() + static_cast<std::ptrdiff_t>(pos), 32, b.block_hash.begin());
  return b;
}

struct ChainCheck {
  bool valid = true;
  std::optional<std::size_t> first_bad_index;
};

inline ChainCheck verify_chain(std::span<const Block> blocks) {
  Digest expected_prev{};
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Block& b = blocks[i];
    if (b.index != i || b.prev_hash != expected_prev || b.block_hash != compute_block_hash(b)) {
      return {false, i};
    }
    expected_prev = b.block_hash;
  }
  return {true, std::nullopt};
}

/// Chain check over stored records; an unparseable record is a violation at
/// its own position.
inline ChainCheck verify_records(std::span<const std::vector<std::uint8_t>> records) {
  std::vector<Block> blocks;
  blocks.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto b = parse_record(records[i]);
    if (!b) {
      const ChainCheck prefix = verify_chain(blocks);
      return prefix.valid ? ChainCheck{false, i} : prefix;
    }
    blocks.push_back(std::move(*b));
  }
  return verify_chain(blocks);
}

/// Single writer. Existing blocks are never modified through this interface.
class Ledger {
 public:
  Ledger() = default;

  /// Imports blocks as they are, without validating them. The next append
  /// refuses to extend an invalid chain.
  static Ledger from_blocks(std::vector<Block> blocks) {
    Ledger l;
    l.blocks_ = std::move(blocks);
    l.unverified_ = true;
    return l;
  }

  const Block& append_block(const HashId& voter_hash_id, std::string signing_details, std::uint64_t timestamp_ms) {
    if (unverified_) {
      if (const auto check = verify_chain(blocks_); !check.valid) {
        throw Error(ErrorCode::InvalidLedger, "chain broken at block " + std::to_string(*check.first_bad_index));
      }
      unverified_ = false;
    }
    if (find_registration(voter_hash_id)) {
      throw Error(ErrorCode::DuplicateVoter, "hash ID " + voter_hash_id.hex() + " already recorded");
    }
    Block b;
    b.index = blocks_.size();
    b.voter_hash_id = voter_hash_id;
    b.signing_details = std::move(signing_details);
    b.timestamp_ms = timestamp_ms;
    if (!blocks_.empty()) b.prev_hash = blocks_.back().block_hash;
    b.block_hash = compute_block_hash(b);
    blocks_.push_back(std::move(b));
    return blocks_.back();
  }

  std::span<const Block> blocks() const noexcept { return blocks_; }
  std::size_t size() const noexcept { return blocks_.size(); }
  bool empty() const noexcept { return blocks_.empty(); }

  std::optional<Block> find_registration(const HashId& voter_hash_id) const {
    for (const auto& b : blocks_) {
      if (b.voter_hash_id.digest == voter_hash_id.digest) return b;
    }
    return std::nullopt;
  }

  nlohmann::json to_json() const {
    auto out = nlohmann::json::array();
    for (const auto& b : blocks_) {
      out.push_back({{"index", b.index},
                     {"voter_hash_id", b.voter_hash_id.hex()},
                     {"signing_details", b.signing_details},
                     {"timestamp_ms", b.timestamp_ms},
                     {"prev_hash", to_hex(b.prev_hash)},
                     {"block_hash", to_hex(b.block_hash)}});
    }
    return out;
  }

  static Ledger from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw Error(ErrorCode::ParseError, "ledger JSON must be an array");
    std::vector<Block> blocks;
    try {
      for (const auto& e : j) {
        Block b;
        b.index = e.at("index").get<std::uint64_t>();
        b.voter_hash_id.digest = digest_from_hex(e.at("voter_hash_id").get<std::string>());
        b.signing_details = e.at("signing_details").get<std::string>();
        b.timestamp_ms = e.at("timestamp_ms").get<std::uint64_t>();
        b.prev_hash = digest_from_hex(e.at("prev_hash").get<std::string>());
        b.block_hash = digest_from_hex(e.at("block_hash").get<std::string>());
        blocks.push_back(std::move(b));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::ParseError, std::string("ledger JSON: ") + ex.what());
    }
    return from_blocks(std::move(blocks));
  }

 private:
  std::vector<Block> blocks_;
  bool unverified_ = false;
};

inline ChainCheck verify_chain(const Ledger& ledger) { return verify_chain(ledger.blocks()); }

inline std::optional<Block> find_registration(const Ledger& ledger, const HashId& voter_hash_id) {
  return ledger.find_registration(voter_hash_id);
}

}  // namespace qvote
