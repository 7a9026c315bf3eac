"""Signature envelopes and the signed statements they carry.

Envelopes are DSSE-shaped JSON: a base64 payload, a payload type, and one
or more Ed25519 signatures computed over the exact decoded payload bytes
(raw-bytes signing, no canonicalization step). Verification succeeds when
at least one signature comes from a trusted signer holding the demanded
purpose. Statement schemas are strict: unknown fields are rejected.
"""

from __future__ import annotations

import base64
import binascii
import json
from dataclasses import dataclass
from typing import Any

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .core import Digest, PermissionSet, SignerPurpose
from .errors import (
    BadSignatureError,
    EvidenceError,
    MalformedEnvelopeError,
    ProvenanceError,
    SsdfError,
    UntrustedSignerError,
)
from .policy import TrustPolicy

PAYLOAD_TYPE_RELEASE = "application/vnd.ricgate.release+json"
PAYLOAD_TYPE_PROVENANCE = "application/vnd.ricgate.provenance+json"
PAYLOAD_TYPE_SSDF = "application/vnd.ricgate.ssdf+json"
PAYLOAD_TYPE_APPROVAL = "application/vnd.ricgate.approval+json"

SSDF_PRACTICE_VOCABULARY = frozenset(
    {
        "documented-sdlc-policy",
        "code-review",
        "protected-ci",
        "release-controls",
        "separation-of-duties",
        "hardened-runners",
    }
)


@dataclass(frozen=True)
class EnvelopeSignature:
    key_id: str
    signature: bytes


@dataclass(frozen=True)
class SignatureEnvelope:
    payload: bytes
    payload_type: str
    signatures: tuple[EnvelopeSignature, ...]

    def __post_init__(self) -> None:
        if not self.signatures:
            raise ValueError("envelope must carry at least one signature")


def _b64decode(value: str, what: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise MalformedEnvelopeError(f"malformed-envelope: {what} is not valid base64") from exc


def parse_envelope(raw: bytes) -> SignatureEnvelope:
    """Parse and structurally validate an envelope document."""
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedEnvelopeError(f"malformed-envelope: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedEnvelopeError("malformed-envelope: root must be an object")
    unknown = set(doc) - {"payload", "payloadType", "signatures"}
    if unknown:
        raise MalformedEnvelopeError(f"malformed-envelope: unexpected fields {sorted(unknown)}")
    payload_b64 = doc.get("payload")
    payload_type = doc.get("payloadType")
    raw_sigs = doc.get("signatures")
    if not isinstance(payload_b64, str) or not isinstance(payload_type, str) or not payload_type:
        raise MalformedEnvelopeError("malformed-envelope: payload and payloadType are required")
    if not isinstance(raw_sigs, list) or not raw_sigs:
        raise MalformedEnvelopeError("malformed-envelope: at least one signature entry required")
    payload = _b64decode(payload_b64, "payload")
    signatures = []
    for i, entry in enumerate(raw_sigs):
        if not isinstance(entry, dict) or set(entry) != {"keyid", "sig"}:
            raise MalformedEnvelopeError(
                f"malformed-envelope: signature entry {i} must have exactly keyid and sig"
            )
        key_id = entry["keyid"]
        sig_b64 = entry["sig"]
        if not isinstance(key_id, str) or not key_id or not isinstance(sig_b64, str):
            raise MalformedEnvelopeError(f"malformed-envelope: signature entry {i} is invalid")
        signatures.append(EnvelopeSignature(key_id, _b64decode(sig_b64, f"signature {i}")))
    return SignatureEnvelope(payload, payload_type, tuple(signatures))


def sign_envelope(
    payload: bytes, payload_type: str, key: Ed25519PrivateKey, key_id: str
) -> dict[str, Any]:
    """Produce a JSON-ready envelope signing the raw payload bytes."""
    signature = key.sign(payload)
    return {
        "payload": base64.b64encode(payload).decode("ascii"),
        "payloadType": payload_type,
        "signatures": [
            {"keyid": key_id, "sig": base64.b64encode(signature).decode("ascii")}
        ],
    }


def verify_envelope_with_signer(
    envelope: SignatureEnvelope, policy: TrustPolicy, purpose: SignerPurpose
) -> tuple[bytes, str]:
    """Verify an envelope and return (payload bytes, verifying key_id).

    At least one signature must verify under a trusted signer holding the
    given purpose; verification is over the exact decoded payload bytes.
    """
    trusted = [
        sig for sig in envelope.signatures if policy.is_trusted_signer(sig.key_id, purpose)
    ]
    if not trusted:
        listed = sorted({sig.key_id for sig in envelope.signatures})
        raise UntrustedSignerError(
            f"untrusted-signer: no trusted {purpose.value} signer among {listed}"
        )
    for sig in trusted:
        signer = policy.signer(sig.key_id)
        assert signer is not None
        try:
            public_key = Ed25519PublicKey.from_public_bytes(signer.public_key)
            public_key.verify(sig.signature, envelope.payload)
        except (InvalidSignature, ValueError):
            continue
        return envelope.payload, sig.key_id
    raise BadSignatureError(
        f"bad-signature: no {purpose.value} signature verified over the payload"
    )


def verify_envelope(
    envelope: SignatureEnvelope, policy: TrustPolicy, purpose: SignerPurpose
) -> bytes:
    """Verify an envelope and return the raw payload bytes."""
    payload, _ = verify_envelope_with_signer(envelope, policy, purpose)
    return payload


def _statement_object(raw: bytes, error: type[EvidenceError], what: str) -> dict:
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise error(f"{what}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise error(f"{what}: root must be an object")
    return doc


def parse_release_statement(raw: bytes) -> Digest:
    """Parse a release-signature statement binding an artifact digest."""
    doc = _statement_object(raw, EvidenceError, "release statement")
    if set(doc) != {"artifact_sha256"}:
        raise EvidenceError("release statement must contain exactly artifact_sha256")
    value = doc["artifact_sha256"]
    if not isinstance(value, str):
        raise EvidenceError("release statement artifact_sha256 must be a string")
    try:
        return Digest.sha256(value)
    except ValueError as exc:
        raise EvidenceError(f"release statement: {exc}") from exc


@dataclass(frozen=True)
class Provenance:
    """Build provenance: what was built, by which pipeline, from which repo."""

    subject_digests: tuple[Digest, ...]
    builder_id: str
    source_repo: str
    build_platform_hardened: bool
    transparency_log_entry: str | None = None

    def __post_init__(self) -> None:
        if not self.subject_digests:
            raise ValueError("provenance subject digest list must be non-empty")
        if not self.builder_id:
            raise ValueError("provenance builder id must be non-empty")


def extract_provenance(raw: bytes) -> Provenance:
    """Parse an in-toto-style provenance statement.

    Expects ``subject[{name, digest{sha256}}]``, ``predicateType``, and
    ``predicate{builder{id}, sourceRepo, hardened?, logEntry?}``; the
    hardened flag defaults to false when absent.
    """
    doc = _statement_object(raw, ProvenanceError, "provenance-malformed")
    unknown = set(doc) - {"subject", "predicateType", "predicate"}
    if unknown:
        raise ProvenanceError(f"provenance-malformed: unexpected fields {sorted(unknown)}")
    subject = doc.get("subject")
    predicate_type = doc.get("predicateType")
    predicate = doc.get("predicate")
    if not isinstance(subject, list) or not subject:
        raise ProvenanceError("provenance-malformed: subject must be a non-empty list")
    if not isinstance(predicate_type, str) or not predicate_type:
        raise ProvenanceError("provenance-malformed: predicateType is required")
    if not isinstance(predicate, dict):
        raise ProvenanceError("provenance-malformed: predicate must be an object")

    digests = []
    for i, entry in enumerate(subject):
        if not isinstance(entry, dict) or set(entry) != {"name", "digest"}:
            raise ProvenanceError(f"provenance-malformed: subject {i} must have name and digest")
        digest_map = entry["digest"]
        if (
            not isinstance(entry["name"], str)
            or not isinstance(digest_map, dict)
            or set(digest_map) != {"sha256"}
            or not isinstance(digest_map["sha256"], str)
        ):
            raise ProvenanceError(f"provenance-malformed: subject {i} digest must be {{sha256}}")
        try:
            digests.append(Digest.sha256(digest_map["sha256"]))
        except ValueError as exc:
            raise ProvenanceError(f"provenance-malformed: subject {i}: {exc}") from exc

    unknown = set(predicate) - {"builder", "sourceRepo", "hardened", "logEntry"}
    if unknown:
        raise ProvenanceError(
            f"provenance-malformed: predicate has unexpected fields {sorted(unknown)}"
        )
    builder = predicate.get("builder")
    if not isinstance(builder, dict) or set(builder) != {"id"} or not isinstance(
        builder["id"], str
    ):
        raise ProvenanceError("provenance-malformed: predicate.builder.id is required")
    source_repo = predicate.get("sourceRepo")
    if not isinstance(source_repo, str) or not source_repo:
        raise ProvenanceError("provenance-malformed: predicate.sourceRepo is required")
    hardened = predicate.get("hardened", False)
    if not isinstance(hardened, bool):
        raise ProvenanceError("provenance-malformed: predicate.hardened must be a boolean")
    log_entry = predicate.get("logEntry")
    if log_entry is not None and (not isinstance(log_entry, str) or not log_entry):
        raise ProvenanceError("provenance-malformed: predicate.logEntry must be a string")

    try:
        return Provenance(tuple(digests), builder["id"], source_repo, hardened, log_entry)
    except ValueError as exc:
        raise ProvenanceError(f"provenance-malformed: {exc}") from exc


@dataclass(frozen=True)
class SsdfAttestation:
    """Assessor-signed declaration of secure development practices."""

    practices: frozenset[str]
    assessor_key_id: str

    def __post_init__(self) -> None:
        unknown = self.practices - SSDF_PRACTICE_VOCABULARY
        if unknown:
            raise ValueError(f"unknown practices {sorted(unknown)}")


def extract_ssdf(raw: bytes, assessor_key_id: str = "") -> SsdfAttestation:
    """Parse a practice declaration against the closed practice vocabulary.

    The assessor identity comes from the envelope that carried the
    declaration, not from the payload itself.
    """
    doc = _statement_object(raw, SsdfError, "ssdf-malformed")
    if set(doc) != {"practices"}:
        raise SsdfError("ssdf-malformed: declaration must contain exactly practices")
    practices = doc["practices"]
    if not isinstance(practices, list):
        raise SsdfError("ssdf-malformed: practices must be a list")
    seen: set[str] = set()
    for p in practices:
        if not isinstance(p, str) or p not in SSDF_PRACTICE_VOCABULARY:
            raise SsdfError(f"ssdf-malformed: unknown practice {p!r}")
        if p in seen:
            raise SsdfError(f"ssdf-malformed: duplicate practice {p!r}")
        seen.add(p)
    return SsdfAttestation(frozenset(seen), assessor_key_id)


@dataclass(frozen=True)
class ApprovalRecord:
    """Approver-signed grant of capabilities beyond an app's profile."""

    app_id: str
    capabilities: PermissionSet


def parse_approval_statement(raw: bytes) -> ApprovalRecord:
    doc = _statement_object(raw, EvidenceError, "approval statement")
    if set(doc) != {"app_id", "capabilities"}:
        raise EvidenceError("approval statement must contain exactly app_id and capabilities")
    app_id = doc["app_id"]
    caps = doc["capabilities"]
    if not isinstance(app_id, str) or not app_id:
        raise EvidenceError("approval statement app_id must be a non-empty string")
    if not isinstance(caps, list) or len(caps) != len(set(caps)):
        raise EvidenceError("approval statement capabilities must be a duplicate-free list")
    try:
        return ApprovalRecord(app_id, PermissionSet.from_iterable(caps))
    except (TypeError, ValueError) as exc:
        raise EvidenceError(f"approval statement: {exc}") from exc
