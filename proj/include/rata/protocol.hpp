#pragma once

// Request / Attest / Verify for the timestamp design (A), the clockless
// challenge-as-LMT design (B), and the plain hybrid-RA baseline.

#include <rata/crypto.hpp>
#include <rata/prover.hpp>

#include <optional>

namespace rata {

/// Expected AR content M with the LMT bytes cut out; the verifier splices the
/// reported LMT back in before checking the MAC.
struct expected_memory {
  bytes ar_body;
  std::size_t lmt_offset = 0;
  std::size_t lmt_width = 0;

  static expected_memory from_image(const memory_image& image) {
    const auto& m = image.map();
    auto ar = region_bytes(image, m.ar);
    expected_memory e;
    e.lmt_offset = m.lmt_offset();
    e.lmt_width = m.lmt.size();
    e.ar_body.assign(ar.begin(), ar.begin() + static_cast<std::ptrdiff_t>(e.lmt_offset));
    e.ar_body.insert(e.ar_body.end(), ar.begin() + static_cast<std::ptrdiff_t>(e.lmt_offset + e.lmt_width), ar.end());
    return e;
  }

  /// M reflecting LMT = `lmt`.
  bytes with_lmt(std::span<const byte> lmt) const {
    if (lmt.size() != lmt_width) throw error("reported LMT has the wrong width");
    bytes m;
    m.reserve(ar_body.size() + lmt_width);
    m.insert(m.end(), ar_body.begin(), ar_body.begin() + static_cast<std::ptrdiff_t>(lmt_offset));
    m.insert(m.end(), lmt.begin(), lmt.end());
    m.insert(m.end(), ar_body.begin() + static_cast<std::ptrdiff_t>(lmt_offset), ar_body.end());
    return m;
  }
};

struct verifier_a {
  master_key key;
  expected_memory expected;
  cycle_t clock = 0;
};

struct association {
  challenge chal;
  cycle_t time = 0;

  friend bool operator==(const association&, const association&) = default;
};

struct verifier_b {
  master_key key;
  auth_counter ctr{};
  std::optional<association> pair_p; // (⊥, ⊥) until the first valid response
  expected_memory expected;
  cycle_t clock = 0;
};

// --- timestamp design ------------------------------------------------------

template <class Engine>
challenge request_a(const verifier_a&, Engine& rng) {
  return random_challenge(rng);
}

inline attest_report attest_a(prover<rata_a_monitor>& prv, const challenge& chal) {
  return prv.attest_plain(chal, attest_case::full_ar);
}

/// 1 iff t_LMT < t0 and the tag is HMAC(KDF(K, Chal), M) with M carrying the reported LMT.
inline bool verify_a(const verifier_a& vrf, const attest_report& report, const challenge& chal, cycle_t t0) {
  if (report.lmt.size() != lmt_width_a) return false;
  if (!(decode_timestamp(report.lmt) < t0)) return false;
  return sw_att_plain(vrf.key, chal, vrf.expected.with_lmt(report.lmt)) == report.tag;
}

// --- clockless design ------------------------------------------------------

/// Next counter value as the challenge, authenticated under K.
inline std::pair<challenge, mac_tag> request_b(verifier_b& vrf) {
  vrf.ctr.bytes = increment(vrf.ctr.bytes);
  challenge chal{vrf.ctr.bytes};
  return {chal, request_auth(vrf.key, chal)};
}

inline std::optional<attest_report> attest_b(prover<rata_b_monitor>& prv, const challenge& chal, const mac_tag& auth) {
  return prv.attest_auth(chal, auth, attest_case::full_ar);
}

namespace detail {

inline bool lmt_matches_pair(const verifier_b& vrf, const attest_report& report, cycle_t t0) {
  return vrf.pair_p && std::equal(report.lmt.begin(), report.lmt.end(), vrf.pair_p->chal.bytes.begin(),
                                  vrf.pair_p->chal.bytes.end()) &&
         t0 > vrf.pair_p->time;
}

} // namespace detail

/// Tag check first (no state change on failure); then 1 if LMT = Chal_P and
/// t0 > t_P; otherwise P := (LMT, now) and 0.
inline bool verify_b(verifier_b& vrf, const attest_report& report, const challenge& chal, cycle_t t0) {
  if (report.lmt.size() != lmt_width_b) return false;
  if (mac(derive_auth_key(vrf.key, chal), vrf.expected.with_lmt(report.lmt)) != report.tag) return false;
  if (detail::lmt_matches_pair(vrf, report, t0)) return true;
  challenge lmt_as_chal;
  std::copy(report.lmt.begin(), report.lmt.end(), lmt_as_chal.bytes.begin());
  vrf.pair_p = association{lmt_as_chal, vrf.clock};
  return false;
}

// --- baseline (no TOCTOU hardware) ------------------------------------------

inline attest_report attest_baseline(prover<null_monitor>& prv, const challenge& chal) {
  return prv.attest_plain(chal, attest_case::full_ar);
}

/// Plain hybrid-RA check: the MAC over the expected AR, nothing else.
inline bool verify_baseline(const verifier_a& vrf, const attest_report& report, const challenge& chal) {
  if (report.lmt.size() != vrf.expected.lmt_width) return false;
  return sw_att_plain(vrf.key, chal, vrf.expected.with_lmt(report.lmt)) == report.tag;
}

// --- constant-time attestation ---------------------------------------------

struct fast_attestation {
  attest_report report;
  attest_case taken = attest_case::full_ar;
  std::size_t attested_bytes = 0;
};

inline fast_attestation attest_fast(prover<rata_a_monitor>& prv, const challenge& chal) {
  auto [r, c] = prv.attest_fast_plain(chal);
  return {r, c, c == attest_case::lmt_only ? prv.map().lmt.size() : prv.map().ar.size()};
}

inline std::optional<fast_attestation> attest_fast(prover<rata_b_monitor>& prv, const challenge& chal,
                                                   const mac_tag& auth) {
  auto res = prv.attest_fast_auth(chal, auth);
  if (!res) return std::nullopt;
  auto [r, c] = *res;
  return fast_attestation{r, c, c == attest_case::lmt_only ? prv.map().lmt.size() : prv.map().ar.size()};
}

/// Case-1 check for the timestamp design: H over LMT alone plus t_LMT < t0.
inline bool verify_fast_a(const verifier_a& vrf, const fast_attestation& fa, const challenge& chal, cycle_t t0) {
  if (fa.taken == attest_case::full_ar) return verify_a(vrf, fa.report, chal, t0);
  if (fa.report.lmt.size() != lmt_width_a) return false;
  if (!(decode_timestamp(fa.report.lmt) < t0)) return false;
  return sw_att_plain(vrf.key, chal, fa.report.lmt) == fa.report.tag;
}

/// Case-1 check for the clockless design. A Case-1 response says nothing
/// about AR itself, so it never refreshes P.
inline bool verify_fast_b(verifier_b& vrf, const fast_attestation& fa, const challenge& chal, cycle_t t0) {
  if (fa.taken == attest_case::full_ar) return verify_b(vrf, fa.report, chal, t0);
  if (fa.report.lmt.size() != lmt_width_b) return false;
  if (mac(derive_auth_key(vrf.key, chal), fa.report.lmt) != fa.report.tag) return false;
  return detail::lmt_matches_pair(vrf, fa.report, t0);
}

} // namespace rata
