#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sudp {

/// Closed error taxonomy. Every rejection a role can emit is one of these;
/// attack scripts and scenario expectations assert the exact code. Messages
/// never carry key material or plaintext fragments.
enum class Err {
  // crypto profile
  invalid_length,
  invalid_role,
  invalid_kdf_info,
  aead_failure,
  wrap_integrity_failure,
  decap_failure,
  entropy_failure,
  // serialization
  decode_failure,
  non_canonical,
  // operation / adapter
  invalid_operation,
  authority_header_present,
  malformed_url,
  missing_shadow,
  shadow_hash_mismatch,
  // authenticator
  unknown_cid,
  gesture_declined,
  prf_output_absent,
  // authorizer
  declined,
  unknown_credential_in_handoff,
  // custodian
  pool_exhausted,
  unknown_or_expired_freshness,
  unknown_credential,
  signature_invalid,
  policy_denied,
  expired_operation,
  rho_consumed,
  unwrap_failure,
  decrypt_failure,
  unknown_target,
  missing_recipient,
  missing_opt,
  opt_commitment_mismatch,
  enrollment_material_malformed,
  revoking_last_credential,
  environment_rejection,
  release_nonconformant,
  corrupt_state,
  version_mismatch,
  persistence_failure,
  crash_injected,
  // channel
  pk_authenticity_failure,
  channel_failure,
  // environment
  authority_rejected,
  // harness
  scenario_parse_error,
};

inline std::string_view err_name(Err e) {
  switch (e) {
    case Err::invalid_length: return "invalid-length";
    case Err::invalid_role: return "invalid-role";
    case Err::invalid_kdf_info: return "invalid-kdf-info";
    case Err::aead_failure: return "aead-failure";
    case Err::wrap_integrity_failure: return "wrap-integrity-failure";
    case Err::decap_failure: return "decap-failure";
    case Err::entropy_failure: return "entropy-failure";
    case Err::decode_failure: return "decode-failure";
    case Err::non_canonical: return "non-canonical";
    case Err::invalid_operation: return "invalid-operation";
    case Err::authority_header_present: return "authority-header-present";
    case Err::malformed_url: return "malformed-url";
    case Err::missing_shadow: return "missing-shadow";
    case Err::shadow_hash_mismatch: return "shadow-hash-mismatch";
    case Err::unknown_cid: return "unknown-cid";
    case Err::gesture_declined: return "gesture-declined";
    case Err::prf_output_absent: return "prf-output-absent";
    case Err::declined: return "declined";
    case Err::unknown_credential_in_handoff: return "unknown-credential-in-handoff";
    case Err::pool_exhausted: return "pool-exhausted";
    case Err::unknown_or_expired_freshness: return "unknown-or-expired-freshness";
    case Err::unknown_credential: return "unknown-credential";
    case Err::signature_invalid: return "signature-invalid";
    case Err::policy_denied: return "policy-denied";
    case Err::expired_operation: return "expired-operation";
    case Err::rho_consumed: return "rho-consumed";
    case Err::unwrap_failure: return "unwrap-failure";
    case Err::decrypt_failure: return "decrypt-failure";
    case Err::unknown_target: return "unknown-target";
    case Err::missing_recipient: return "missing-recipient";
    case Err::missing_opt: return "missing-opt";
    case Err::opt_commitment_mismatch: return "opt-commitment-mismatch";
    case Err::enrollment_material_malformed: return "enrollment-material-malformed";
    case Err::revoking_last_credential: return "revoking-last-credential";
    case Err::environment_rejection: return "environment-rejection";
    case Err::release_nonconformant: return "release-nonconformant";
    case Err::corrupt_state: return "corrupt-state";
    case Err::version_mismatch: return "version-mismatch";
    case Err::persistence_failure: return "persistence-failure";
    case Err::crash_injected: return "crash-injected";
    case Err::pk_authenticity_failure: return "pk-authenticity-failure";
    case Err::channel_failure: return "channel-failure";
    case Err::authority_rejected: return "authority-rejected";
    case Err::scenario_parse_error: return "scenario-parse-error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  explicit Error(Err code, std::string detail = "")
      : std::runtime_error(detail.empty()
                               ? std::string(err_name(code))
                               : std::string(err_name(code)) + ": " + detail),
        code_(code) {}

  Err code() const { return code_; }
  std::string_view name() const { return err_name(code_); }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, std::string detail = "") {
  throw Error(code, std::move(detail));
}

}  // namespace sudp
