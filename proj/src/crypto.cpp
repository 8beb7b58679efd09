#include "vanetsim/crypto.hpp"

#include <cstring>

namespace vanetsim::crypto {

// ---------------------------------------------------------------- MD5

namespace {

constexpr std::uint32_t kMd5K[64] = {
    0xd76aa478, 0xe8c7b756, 0x242070db, 0xc1bdceee, 0xf57c0faf, 0x4787c62a,
    0xa8304613, 0xfd469501, 0x698098d8, 0x8b44f7af, 0xffff5bb1, 0x895cd7be,
    0x6b901122, 0xfd987193, 0xa679438e, 0x49b40821, 0xf61e2562, 0xc040b340,
    0x265e5a51, 0xe9b6c7aa, 0xd62f105d, 0x02441453, 0xd8a1e681, 0xe7d3fbc8,
    0x21e1cde6, 0xc33707d6, 0xf4d50d87, 0x455a14ed, 0xa9e3e905, 0xfcefa3f8,
    0x676f02d9, 0x8d2a4c8a, 0xfffa3942, 0x8771f681, 0x6d9d6122, 0xfde5380c,
    0xa4beea44, 0x4bdecfa9, 0xf6bb4b60, 0xbebfbc70, 0x289b7ec6, 0xeaa127fa,
    0xd4ef3085, 0x04881d05, 0xd9d4d039, 0xe6db99e5, 0x1fa27cf8, 0xc4ac5665,
    0xf4292244, 0x432aff97, 0xab9423a7, 0xfc93a039, 0x655b59c3, 0x8f0ccc92,
    0xffeff47d, 0x85845dd1, 0x6fa87e4f, 0xfe2ce6e0, 0xa3014314, 0x4e0811a1,
    0xf7537e82, 0xbd3af235, 0x2ad7d2bb, 0xeb86d391};

constexpr int kMd5S[64] = {7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22, 7, 12, 17, 22,
                           5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20, 5, 9,  14, 20,
                           4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23, 4, 11, 16, 23,
                           6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21, 6, 10, 15, 21};

inline std::uint32_t rotl32(std::uint32_t x, int c) { return (x << c) | (x >> (32 - c)); }

void md5_block(std::uint32_t state[4], const std::uint8_t* block) {
  std::uint32_t m[16];
  for (int i = 0; i < 16; ++i) {
    m[i] = static_cast<std::uint32_t>(block[i * 4]) |
           static_cast<std::uint32_t>(block[i * 4 + 1]) << 8 |
           static_cast<std::uint32_t>(block[i * 4 + 2]) << 16 |
           static_cast<std::uint32_t>(block[i * 4 + 3]) << 24;
  }
  std::uint32_t a = state[0], b = state[1], c = state[2], d = state[3];
  for (int i = 0; i < 64; ++i) {
    std::uint32_t f;
    int g;
    if (i < 16) {
      f = (b & c) | (~b & d);
      g = i;
    } else if (i < 32) {
      f = (d & b) | (~d & c);
      g = (5 * i + 1) % 16;
    } else if (i < 48) {
      f = b ^ c ^ d;
      g = (3 * i + 5) % 16;
    } else {
      f = c ^ (b | ~d);
      g = (7 * i) % 16;
    }
    const std::uint32_t tmp = d;
    d = c;
    c = b;
    b = b + rotl32(a + f + kMd5K[i] + m[g], kMd5S[i]);
    a = tmp;
  }
  state[0] += a;
  state[1] += b;
  state[2] += c;
  state[3] += d;
}

}  // namespace

Digest16 md5(std::span<const std::uint8_t> data) {
  std::uint32_t state[4] = {0x67452301, 0xefcdab89, 0x98badcfe, 0x10325476};

  std::size_t i = 0;
  for (; i + 64 <= data.size(); i += 64) {
    md5_block(state, data.data() + i);
  }

  std::uint8_t tail[128] = {0};
  const std::size_t rem = data.size() - i;
  if (rem > 0) std::memcpy(tail, data.data() + i, rem);
  tail[rem] = 0x80;
  const std::size_t tail_len = rem + 9 <= 64 ? 64 : 128;
  const std::uint64_t bit_len = static_cast<std::uint64_t>(data.size()) * 8;
  for (int k = 0; k < 8; ++k) {
    tail[tail_len - 8 + k] = static_cast<std::uint8_t>(bit_len >> (8 * k));
  }
  md5_block(state, tail);
  if (tail_len == 128) md5_block(state, tail + 64);

  Digest16 out;
  for (int w = 0; w < 4; ++w) {
    for (int k = 0; k < 4; ++k) {
      out[w * 4 + k] = static_cast<std::uint8_t>(state[w] >> (8 * k));
    }
  }
  return out;
}

std::string digest_hex(const Digest16& d) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(32);
  for (auto b : d) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0xf]);
  }
  return s;
}

// ---------------------------------------------------------------- LZSS

// Greedy LZSS, 4 KiB window, match length 3..130. Token groups of 8 are
// announced by a flag byte (bit set = literal); matches encode as a 2-byte
// offset plus a 1-byte length.
namespace {

constexpr std::size_t kWindow = 4096;
constexpr std::size_t kMinMatch = 3;
constexpr std::size_t kMaxMatch = 130;

}  // namespace

Bytes compress(std::span<const std::uint8_t> data) {
  Bytes out;
  out.reserve(data.size() / 2 + 16);
  out.push_back('V');
  out.push_back('Z');
  const std::uint32_t n = static_cast<std::uint32_t>(data.size());
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(n >> (8 * k)));

  // hash chains over 3-byte prefixes
  std::vector<std::int32_t> head(1 << 14, -1);
  std::vector<std::int32_t> prev(data.size(), -1);
  auto hash3 = [&](std::size_t i) {
    const std::uint32_t v = static_cast<std::uint32_t>(data[i]) |
                            static_cast<std::uint32_t>(data[i + 1]) << 8 |
                            static_cast<std::uint32_t>(data[i + 2]) << 16;
    return (v * 2654435761u) >> 18;
  };

  std::size_t i = 0;
  std::size_t flag_pos = 0;
  int flag_bit = 8;  // groups are created lazily so empty input has no tokens
  auto emit_flag = [&](bool literal) {
    if (flag_bit == 8) {
      flag_pos = out.size();
      out.push_back(0);
      flag_bit = 0;
    }
    if (literal) out[flag_pos] |= static_cast<std::uint8_t>(1u << flag_bit);
    ++flag_bit;
  };

  while (i < data.size()) {
    std::size_t best_len = 0;
    std::size_t best_off = 0;
    if (i + kMinMatch <= data.size()) {
      std::int32_t cand = head[hash3(i)];
      int probes = 32;
      while (cand >= 0 && probes-- > 0 && i - static_cast<std::size_t>(cand) <= kWindow) {
        const std::size_t c = static_cast<std::size_t>(cand);
        std::size_t len = 0;
        const std::size_t max_len = std::min(kMaxMatch, data.size() - i);
        while (len < max_len && data[c + len] == data[i + len]) ++len;
        if (len >= kMinMatch && len > best_len) {
          best_len = len;
          best_off = i - c;
          if (len == kMaxMatch) break;
        }
        cand = prev[c];
      }
    }

    if (best_len >= kMinMatch) {
      emit_flag(false);
      out.push_back(static_cast<std::uint8_t>(best_off & 0xff));
      out.push_back(static_cast<std::uint8_t>((best_off >> 8) & 0xff));
      out.push_back(static_cast<std::uint8_t>(best_len - kMinMatch));
      for (std::size_t j = i; j < i + best_len; ++j) {
        if (j + 2 >= data.size()) break;
        const auto h = hash3(j);
        prev[j] = head[h];
        head[h] = static_cast<std::int32_t>(j);
      }
      i += best_len;
    } else {
      emit_flag(true);
      out.push_back(data[i]);
      if (i + 2 < data.size()) {
        const auto h = hash3(i);
        prev[i] = head[h];
        head[h] = static_cast<std::int32_t>(i);
      }
      ++i;
    }
  }
  return out;
}

Result<Bytes> decompress(std::span<const std::uint8_t> data) {
  if (data.size() < 6 || data[0] != 'V' || data[1] != 'Z') {
    return make_error(Errc::CorruptStream, "bad container header");
  }
  std::uint32_t n = 0;
  for (int k = 0; k < 4; ++k) n |= static_cast<std::uint32_t>(data[2 + k]) << (8 * k);

  Bytes out;
  out.reserve(n);
  std::size_t i = 6;
  while (out.size() < n) {
    if (i >= data.size()) return make_error(Errc::CorruptStream, "truncated flag byte");
    const std::uint8_t flags = data[i++];
    for (int bit = 0; bit < 8 && out.size() < n; ++bit) {
      if (flags & (1u << bit)) {
        if (i >= data.size()) return make_error(Errc::CorruptStream, "truncated literal");
        out.push_back(data[i++]);
      } else {
        if (i + 3 > data.size()) return make_error(Errc::CorruptStream, "truncated match");
        const std::size_t off = static_cast<std::size_t>(data[i]) |
                                (static_cast<std::size_t>(data[i + 1]) << 8);
        const std::size_t len = kMinMatch + data[i + 2];
        i += 3;
        if (off == 0 || off > out.size()) {
          return make_error(Errc::CorruptStream, "match offset out of window");
        }
        for (std::size_t k = 0; k < len && out.size() < n; ++k) {
          out.push_back(out[out.size() - off]);
        }
      }
    }
  }
  if (i != data.size()) return make_error(Errc::CorruptStream, "trailing bytes");
  return out;
}

// ---------------------------------------------------------------- cipher

// AuthenticatedHybrid layout: nonce(8) || ciphertext || tag(16).
// Keystream block j = MD5(key || nonce || j); tag = MD5(key || nonce ||
// ciphertext || key). Tamper evidence for the simulation, not real crypto.
namespace {

void keystream_xor(const std::vector<std::uint8_t>& key, std::uint64_t nonce,
                   std::span<const std::uint8_t> in, Bytes& out) {
  Bytes block_input(key.size() + 16);
  std::memcpy(block_input.data(), key.data(), key.size());
  for (int k = 0; k < 8; ++k) {
    block_input[key.size() + k] = static_cast<std::uint8_t>(nonce >> (8 * k));
  }
  for (std::size_t i = 0; i < in.size(); i += 16) {
    const std::uint64_t counter = i / 16;
    for (int k = 0; k < 8; ++k) {
      block_input[key.size() + 8 + k] = static_cast<std::uint8_t>(counter >> (8 * k));
    }
    const Digest16 ks = md5(block_input);
    const std::size_t chunk = std::min<std::size_t>(16, in.size() - i);
    for (std::size_t k = 0; k < chunk; ++k) {
      out.push_back(in[i + k] ^ ks[k]);
    }
  }
}

Digest16 compute_tag(const std::vector<std::uint8_t>& key, const std::uint8_t* nonce8,
                     std::span<const std::uint8_t> ciphertext) {
  Bytes mac_input;
  mac_input.reserve(key.size() * 2 + 8 + ciphertext.size());
  mac_input.insert(mac_input.end(), key.begin(), key.end());
  mac_input.insert(mac_input.end(), nonce8, nonce8 + 8);
  mac_input.insert(mac_input.end(), ciphertext.begin(), ciphertext.end());
  mac_input.insert(mac_input.end(), key.begin(), key.end());
  return md5(mac_input);
}

}  // namespace

Result<Bytes> seal(std::span<const std::uint8_t> plaintext, CipherSuite& suite) {
  if (suite.kind == SuiteKind::Null) {
    return Bytes(plaintext.begin(), plaintext.end());
  }
  if (suite.key.empty()) return make_error(Errc::KeyUnavailable, "suite has no key");

  const std::uint64_t nonce = suite.nonce_counter++;
  Bytes out;
  out.reserve(8 + plaintext.size() + 16);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(nonce >> (8 * k)));
  keystream_xor(suite.key, nonce, plaintext, out);
  const Digest16 tag =
      compute_tag(suite.key, out.data(), std::span(out).subspan(8, plaintext.size()));
  out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

Result<Bytes> open(std::span<const std::uint8_t> sealed, const CipherSuite& suite) {
  if (suite.kind == SuiteKind::Null) {
    return Bytes(sealed.begin(), sealed.end());
  }
  if (suite.key.empty()) return make_error(Errc::KeyUnavailable, "suite has no key");
  if (sealed.size() < 24) return make_error(Errc::AuthFailure, "sealed blob too short");

  const std::size_t ct_len = sealed.size() - 24;
  const auto ciphertext = sealed.subspan(8, ct_len);
  const Digest16 expect = compute_tag(suite.key, sealed.data(), ciphertext);
  const auto* tag = sealed.data() + 8 + ct_len;
  std::uint8_t diff = 0;
  for (int k = 0; k < 16; ++k) diff |= static_cast<std::uint8_t>(expect[k] ^ tag[k]);
  if (diff != 0) return make_error(Errc::AuthFailure, "tag mismatch");

  std::uint64_t nonce = 0;
  for (int k = 0; k < 8; ++k) nonce |= static_cast<std::uint64_t>(sealed[k]) << (8 * k);
  Bytes out;
  out.reserve(ct_len);
  keystream_xor(suite.key, nonce, ciphertext, out);
  return out;
}

}  // namespace vanetsim::crypto
