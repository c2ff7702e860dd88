#pragma once

// MAC, key derivation and the attestation routine (SW-Att) in its plain and
// verifier-authenticated forms. HMAC-SHA-256 comes from libcrypto.

#include <rata/common.hpp>

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <random>
#include <variant>

namespace rata {

/// Device master key K. Never serialized into traces or reports.
struct master_key {
  block32 bytes{};
};

struct challenge {
  block32 bytes{};
  friend bool operator==(const challenge&, const challenge&) = default;
  friend auto operator<=>(const challenge&, const challenge&) = default;
};

struct mac_tag {
  block32 bytes{};
  friend bool operator==(const mac_tag&, const mac_tag&) = default;
};

/// Prover-side monotonic request counter (compared like memcmp).
struct auth_counter {
  block32 bytes{};
  friend bool operator==(const auth_counter&, const auth_counter&) = default;
};

inline mac_tag mac(std::span<const byte> key, std::span<const byte> data) {
  static constexpr byte empty = 0;
  mac_tag tag;
  unsigned int len = 0;
  const byte* in = data.empty() ? &empty : data.data();
  const void* k = key.empty() ? static_cast<const void*>(&empty) : key.data();
  if (!HMAC(EVP_sha256(), k, static_cast<int>(key.size()), in, data.size(), tag.bytes.data(), &len) ||
      len != tag.bytes.size())
    throw error("HMAC-SHA-256 failed");
  return tag;
}

inline mac_tag mac(const master_key& key, std::span<const byte> data) { return mac(key.bytes, data); }

/// KDF(K, seed) = HMAC_K(seed).
inline block32 derive_key(const master_key& master, std::span<const byte> seed) {
  return mac(master, seed).bytes;
}

/// Construction-1 attestation: HMAC(KDF(K, Chal), AR).
inline mac_tag sw_att_plain(const master_key& master, const challenge& chal, std::span<const byte> ar) {
  return mac(derive_key(master, chal.bytes), ar);
}

/// memcmp(a, b, 32) > 0
inline bool lexicographically_greater(const block32& a, const block32& b) {
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

/// Request authenticator a verifier attaches to `chal`: HMAC_K(chal).
inline mac_tag request_auth(const master_key& master, const challenge& chal) { return mac(master, chal.bytes); }

/// Attestation key for authenticated requests: the routine zero-pads K to a
/// 64-byte HMAC key and chains key' = HMAC_K(HMAC_K(chal)). Zero padding to
/// the SHA-256 block size is what HMAC does anyway, so 32-byte K is equivalent.
inline block32 derive_auth_key(const master_key& master, const challenge& chal) {
  std::array<byte, 64> padded{};
  std::copy(master.bytes.begin(), master.bytes.end(), padded.begin());
  mac_tag verification = mac(padded, chal.bytes);
  return mac(padded, verification.bytes).bytes;
}

struct att_accepted {
  mac_tag tag;
  auth_counter new_ctr;
};
struct att_rejected {};

using att_result = std::variant<att_accepted, att_rejected>;

/// Authentication guard of the attestation routine: the first check.
/// True when the request may proceed.
inline bool authenticate_request(const master_key& master, const challenge& chal, const mac_tag& auth,
                                 const auth_counter& ctr) {
  if (!lexicographically_greater(chal.bytes, ctr.bytes)) return false;
  return request_auth(master, chal) == auth;
}

/// SW-Att with verifier authentication. Rejects replays (chal <= ctr) and
/// forged authenticators; otherwise MACs `ar` under the chained key and
/// advances the counter to `chal`.
inline att_result sw_att_auth(const master_key& master, const challenge& chal, const mac_tag& auth,
                              std::span<const byte> ar, const auth_counter& ctr) {
  if (!authenticate_request(master, chal, auth, ctr)) return att_rejected{};
  return att_accepted{mac(derive_auth_key(master, chal), ar), auth_counter{chal.bytes}};
}

/// 32-byte big-endian increment.
inline block32 increment(block32 v) {
  for (std::size_t i = v.size(); i-- > 0;) {
    if (++v[i] != 0) break;
  }
  return v;
}

/// Uniform 256-bit challenge from a seeded engine.
template <class Engine>
challenge random_challenge(Engine& rng) {
  challenge c;
  for (std::size_t i = 0; i < c.bytes.size(); i += 8) {
    std::uint64_t w = rng();
    for (std::size_t j = 0; j < 8; ++j) c.bytes[i + j] = static_cast<byte>(w >> (8 * j));
  }
  return c;
}

} // namespace rata
