#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vanetsim/core.hpp"

namespace vanetsim::crypto {

using Digest16 = std::array<std::uint8_t, 16>;
using Bytes = std::vector<std::uint8_t>;

/// Standard MD5 (RFC 1321). Used as a transfer-integrity checksum only;
/// tamper evidence comes from the authenticated cipher suite.
Digest16 md5(std::span<const std::uint8_t> data);
std::string digest_hex(const Digest16& d);

/// Deterministic LZSS codec: same input always yields the same bytes.
/// Container: 'V' 'Z' u32 raw_size, then token stream.
Bytes compress(std::span<const std::uint8_t> data);
Result<Bytes> decompress(std::span<const std::uint8_t> data);

enum class SuiteKind : std::uint8_t {
  Null = 0,                // identity transform; simulation/test mode only
  AuthenticatedHybrid = 1  // keyed stream cipher + MAC, rejects any tampering
};

struct CipherSuite {
  SuiteKind kind = SuiteKind::Null;
  std::vector<std::uint8_t> key;  // 16 bytes for AuthenticatedHybrid
  std::uint64_t nonce_counter = 0;

  static CipherSuite null_suite() { return CipherSuite{}; }
  static CipherSuite authenticated(std::vector<std::uint8_t> key_bytes) {
    CipherSuite s;
    s.kind = SuiteKind::AuthenticatedHybrid;
    s.key = std::move(key_bytes);
    return s;
  }
};

/// seal: Null -> identity. AuthenticatedHybrid -> nonce || ciphertext || tag;
/// any post-seal modification makes open() fail with AuthFailure.
Result<Bytes> seal(std::span<const std::uint8_t> plaintext, CipherSuite& suite);
Result<Bytes> open(std::span<const std::uint8_t> sealed, const CipherSuite& suite);

}  // namespace vanetsim::crypto
