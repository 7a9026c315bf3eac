"""Core value types shared by every part of the gate.

Digests, assurance levels, evidence families, signer identities, permission
capabilities, release versions, and lifecycle threat tags. All types are
immutable values; all operations are pure functions, safe for concurrent use.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterable

_HEX_RE = re.compile(r"^[0-9a-f]+$")
_VERSION_RE = re.compile(r"^(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)\.(0|[1-9][0-9]*)$")
# capability grammar: <verb>:<resource>, e.g. "read:kpm", "write:policy"
_CAPABILITY_RE = re.compile(r"^[a-z][a-z0-9_-]*:[a-z][a-z0-9_./-]*$")

ED25519_PUBLIC_KEY_LEN = 32


class DigestAlgorithm(Enum):
    SHA256 = "sha256"


_DIGEST_HEX_LEN = {DigestAlgorithm.SHA256: 64}


@dataclass(frozen=True)
class Digest:
    """A content digest: algorithm plus lowercase hex."""

    algorithm: DigestAlgorithm
    hex: str

    def __post_init__(self) -> None:
        expected = _DIGEST_HEX_LEN[self.algorithm]
        if len(self.hex) != expected or not _HEX_RE.match(self.hex):
            raise ValueError(
                f"{self.algorithm.value} digest must be {expected} lowercase hex characters"
            )

    @classmethod
    def sha256(cls, hex_value: str) -> "Digest":
        return cls(DigestAlgorithm.SHA256, hex_value)

    def __str__(self) -> str:
        return f"{self.algorithm.value}:{self.hex}"


def compute_digest(data: bytes) -> Digest:
    """sha256 of the exact input bytes, as a Digest. Deterministic."""
    return Digest(DigestAlgorithm.SHA256, hashlib.sha256(data).hexdigest())


class AssuranceLevel(IntEnum):
    """Assurance level 0..3; totally ordered by integer value."""

    L0 = 0
    L1 = 1
    L2 = 2
    L3 = 3


class EvidenceFamily(Enum):
    SSDF = "ssdf"
    SBOM = "sbom"
    PROVENANCE = "provenance"


class SignerPurpose(Enum):
    RELEASE_SIGNING = "release-signing"
    PROVENANCE = "provenance"
    SSDF_ASSESSOR = "ssdf-assessor"
    APPROVER = "approver"


@dataclass(frozen=True)
class SignerIdentity:
    """A trusted key with the purposes it may sign for.

    Purposes are deliberately separated so one stolen key cannot satisfy
    release signing, provenance, assessment, and approval at once.
    """

    key_id: str
    public_key: bytes
    purposes: frozenset[SignerPurpose]

    def __post_init__(self) -> None:
        if not self.key_id:
            raise ValueError("signer key_id must be non-empty")
        if len(self.public_key) != ED25519_PUBLIC_KEY_LEN:
            raise ValueError(
                f"ed25519 public key must be {ED25519_PUBLIC_KEY_LEN} bytes, "
                f"got {len(self.public_key)}"
            )
        if not self.purposes:
            raise ValueError(f"signer {self.key_id!r} must hold at least one purpose")


@dataclass(frozen=True)
class PermissionSet:
    """A set of capability strings of the form verb:resource."""

    capabilities: frozenset[str]

    def __post_init__(self) -> None:
        for cap in self.capabilities:
            if not _CAPABILITY_RE.match(cap):
                raise ValueError(f"capability {cap!r} does not match verb:resource grammar")

    @classmethod
    def of(cls, *capabilities: str) -> "PermissionSet":
        return cls(frozenset(capabilities))

    @classmethod
    def from_iterable(cls, capabilities: Iterable[str]) -> "PermissionSet":
        return cls(frozenset(capabilities))

    def sorted(self) -> list[str]:
        return sorted(self.capabilities)

    def difference(self, other: "PermissionSet") -> frozenset[str]:
        return self.capabilities - other.capabilities

    def __len__(self) -> int:
        return len(self.capabilities)

    def __iter__(self):
        return iter(self.capabilities)

    def __contains__(self, capability: str) -> bool:
        return capability in self.capabilities


def is_subset(requested: PermissionSet, approved: PermissionSet) -> bool:
    """True iff every requested capability is in approved (exact match)."""
    return requested.capabilities <= approved.capabilities


@dataclass(frozen=True, order=True)
class Version:
    """Strict M.m.p release version; ordering is lexicographic on the parts."""

    major: int
    minor: int
    patch: int

    def __post_init__(self) -> None:
        for part in (self.major, self.minor, self.patch):
            if not isinstance(part, int) or part < 0:
                raise ValueError(f"version components must be non-negative integers: {self}")

    @classmethod
    def parse(cls, text: str) -> "Version":
        m = _VERSION_RE.match(text)
        if not m:
            raise ValueError(f"invalid version {text!r}: expected strict MAJOR.MINOR.PATCH")
        return cls(int(m.group(1)), int(m.group(2)), int(m.group(3)))

    def __str__(self) -> str:
        return f"{self.major}.{self.minor}.{self.patch}"


def compare_versions(a: Version, b: Version) -> int:
    """-1, 0, or 1 as a is less than, equal to, or greater than b."""
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


class LifecycleStage(Enum):
    BUILD = "build"
    SIGN = "sign"
    PUBLISH = "publish"
    ONBOARD = "onboard"
    RUNTIME = "runtime"
    UPDATE = "update"


# Closed per-stage vocabulary of threat labels used on check results,
# audit records, and scenarios.
THREAT_LABELS: dict[LifecycleStage, frozenset[str]] = {
    LifecycleStage.BUILD: frozenset(
        {
            "compromised CI runner",
            "poisoned dependency",
            "malicious build script",
            "build-cache poisoning",
        }
    ),
    LifecycleStage.SIGN: frozenset(
        {
            "signing-key theft",
            "unauthorized signing",
            "signature stripping",
            "forged attestations",
        }
    ),
    LifecycleStage.PUBLISH: frozenset(
        {
            "registry poisoning",
            "tag overwrite",
            "replay of vulnerable versions",
            "metadata tampering",
        }
    ),
    LifecycleStage.ONBOARD: frozenset(
        {
            "admission bypass",
            "policy mis-binding",
            "identity spoofing",
            "weak evidence checks",
        }
    ),
    LifecycleStage.RUNTIME: frozenset(
        {
            "privilege escalation",
            "side-channel or data exfiltration",
            "policy abuse",
            "DoS of RIC services",
        }
    ),
    LifecycleStage.UPDATE: frozenset(
        {
            "tampered update",
            "downgrade to vulnerable release",
            "partial-rollout manipulation",
        }
    ),
}


@dataclass(frozen=True)
class ThreatTag:
    """A lifecycle stage plus a label from that stage's threat vocabulary."""

    stage: LifecycleStage
    label: str

    def __post_init__(self) -> None:
        if self.label not in THREAT_LABELS[self.stage]:
            raise ValueError(f"unknown threat label {self.label!r} for stage {self.stage.value}")

    def as_dict(self) -> dict[str, str]:
        return {"stage": self.stage.value, "label": self.label}
