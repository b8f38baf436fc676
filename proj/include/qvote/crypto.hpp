#pragma once

// Classical side of the protocol: simulated-QRNG keys, one-time pad, keyed
// hash IDs, and gate-sequence signatures.

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qvote/error.hpp"
#include "qvote/qsim.hpp"
#include "qvote/rng.hpp"

namespace qvote {

using BitVector = std::vector<bool>;
using Digest = std::array<std::uint8_t, 32>;

inline constexpr std::string_view kHashAlgorithm = "sha-256";
inline constexpr std::string_view kKeySource = "simulated-qrng";
inline constexpr std::size_t kDefaultKeyLength = 256;

inline Digest sha256(std::span<const std::uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw Error(ErrorCode::InvalidArgument, "sha-256 digest failed");
  }
  return out;
}

inline Digest sha256(std::string_view text) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xF];
  }
  return out;
}

inline Digest digest_from_hex(std::string_view hex) {
  if (hex.size() != 64) throw Error(ErrorCode::ParseError, "digest hex must be 64 characters");
  const auto nibble = [&](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    throw Error(ErrorCode::ParseError, "digest hex must be lowercase hexadecimal");
  };
  Digest d{};
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  return d;
}

/// MSB-first within each byte.
inline BitVector digest_to_bits(const Digest& d) {
  BitVector bits(d.size() * 8);
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (d[i / 8] >> (7 - i % 8)) & 1U;
  return bits;
}

inline Digest digest_from_bits(const BitVector& bits) {
  if (bits.size() != 256) throw Error(ErrorCode::InvalidLength, "a digest is 256 bits");
  Digest d{};
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) d[i / 8] |= static_cast<std::uint8_t>(1U << (7 - i % 8));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Keys and one-time pad

enum class KeyLabel { AB, AC };

constexpr std::string_view to_string(KeyLabel label) { return label == KeyLabel::AB ? "K_AB" : "K_AC"; }

struct SecretKey {
  KeyLabel label = KeyLabel::AB;
  BitVector bits;

  std::string_view source() const { return kKeySource; }
  friend bool operator==(const SecretKey&, const SecretKey&) = default;
};

inline SecretKey gen_key(KeyLabel label, std::size_t length, Rng& rng) {
  if (length == 0) throw Error(ErrorCode::InvalidLength, "key length must be >= 1");
  SecretKey key{label, BitVector(length)};
  std::uint64_t word = 0;
  for (std::size_t i = 0; i < length; ++i) {
    if (i % 64 == 0) word = rng.next_u64();
    key.bits[i] = (word >> (i % 64)) & 1U;
  }
  return key;
}

/// XOR with the key prefix. Applying it twice with the same key is the
/// identity.
inline BitVector otp(const BitVector& message, const SecretKey& key) {
  if (message.size() > key.bits.size()) {
    throw Error(ErrorCode::KeyTooShort, std::to_string(message.size()) + "-bit message, " +
                                            std::to_string(key.bits.size()) + "-bit key");
  }
  BitVector out(message.size());
  for (std::size_t i = 0; i < message.size(); ++i) out[i] = message[i] != key.bits[i];
  return out;
}

// ---------------------------------------------------------------------------
// Hash IDs

struct HashId {
  Digest digest{};
  std::string algorithm_id{kHashAlgorithm};

  std::string hex() const { return to_hex(digest); }
  friend bool operator==(const HashId& a, const HashId& b) { return a.digest == b.digest && a.algorithm_id == b.algorithm_id; }
  friend bool operator<(const HashId& a, const HashId& b) { return a.digest < b.digest; }
};

/// digest = SHA-256(shared_secret || unique_id). The secret, not the
/// algorithm, is what keeps outsiders from linking an ID to its hash ID.
inline HashId hash_id(std::string_view unique_id, std::string_view shared_secret) {
  if (unique_id.empty()) throw Error(ErrorCode::InvalidId, "unique_id is empty");
  std::string buf;
  buf.reserve(shared_secret.size() + unique_id.size());
  buf.append(shared_secret);
  buf.append(unique_id);
  return HashId{sha256(buf), std::string(kHashAlgorithm)};
}

// ---------------------------------------------------------------------------
// Gate-sequence signatures

struct SignatureSpec {
  std::vector<GateOp> gates;

  /// Reversed adjoints.
  std::vector<GateOp> inverse_gates() const {
    std::vector<GateOp> out;
    out.reserve(gates.size());
    for (auto it = gates.rbegin(); it != gates.rend(); ++it) out.push_back(inverse(*it));
    return out;
  }

  /// Canonical text form recorded on the ledger: gate descriptors joined by
  /// ';', e.g. "Z@0;X@1". The empty signature is "".
  std::string descriptor() const {
    std::string out;
    for (std::size_t i = 0; i < gates.size(); ++i) {
      if (i) out += ';';
      out += format_gate(gates[i]);
    }
    return out;
  }

  static SignatureSpec parse(std::string_view descriptor) {
    SignatureSpec spec;
    while (!descriptor.empty()) {
      const auto semi = descriptor.find(';');
      spec.gates.push_back(parse_gate(descriptor.substr(0, semi)));
      if (semi == std::string_view::npos) break;
      descriptor = descriptor.substr(semi + 1);
    }
    return spec;
  }

  friend bool operator==(const SignatureSpec&, const SignatureSpec&) = default;
};

inline StateVector& sign(StateVector& s, const SignatureSpec& spec, NoiseChannel* noise = nullptr) {
  return apply_circuit(s, spec.gates, noise);
}

inline StateVector& unsign(StateVector& s, const SignatureSpec& spec, NoiseChannel* noise = nullptr) {
  const auto gates = spec.inverse_gates();
  return apply_circuit(s, gates, noise);
}

}  // namespace qvote
