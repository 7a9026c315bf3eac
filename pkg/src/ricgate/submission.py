"""Submission package loading and evidence completeness.

A submission package is a directory (or zip archive) containing
``manifest.json``, the artifact blob, and the evidence files the manifest
declares. Missing evidence files are recorded, not fatal: completeness and
the checks decide what a gap means. Paths are confined to the package root.
"""

from __future__ import annotations

import json
import zipfile
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from . import attestation, sbom
from .core import AssuranceLevel, Digest, PermissionSet, Version
from .errors import EvidenceError, GateError, PackageError


class EvidenceKind(Enum):
    SIGNATURE = "signature"
    SBOM = "sbom"
    SCAN_REPORT = "scan_report"
    VEX = "vex"
    PROVENANCE = "provenance"
    SSDF_ATTESTATION = "ssdf_attestation"
    PERMISSION_REQUEST = "permission_request"
    APPROVALS = "approvals"
    POLICY_SNAPSHOT = "policy_snapshot"
    REGISTRY_LOG = "registry_log"


MANIFEST_NAME = "manifest.json"

# Evidence kinds held operator-side in a full deployment but accepted
# in-package here; audit records flag them as submitter-supplied.
SUBMITTER_SUPPLIED_KINDS = (EvidenceKind.POLICY_SNAPSHOT, EvidenceKind.REGISTRY_LOG)


@dataclass(frozen=True)
class SubmissionManifest:
    app_id: str
    version: Version
    environment: str
    artifact_path: str
    artifact_digest: Digest
    immutable_ref: bool
    evidence_paths: Mapping[EvidenceKind, str]

    def __post_init__(self) -> None:
        if not self.app_id:
            raise ValueError("manifest app_id must be non-empty")
        targets = list(self.evidence_paths.values())
        if len(targets) != len(set(targets)):
            raise ValueError("manifest evidence paths must not share targets")


@dataclass(frozen=True)
class SubmissionPackage:
    manifest: SubmissionManifest
    artifact_bytes: bytes
    evidence: Mapping[EvidenceKind, bytes]
    missing_evidence: frozenset[EvidenceKind]


def _validate_relative_path(path: str, what: str) -> str:
    if not isinstance(path, str) or not path:
        raise PackageError(f"package-invalid: {what} must be a non-empty string")
    if "\\" in path or path.startswith("/"):
        raise PackageError(f"package-invalid: {what} {path!r} must be a relative POSIX path")
    parts = path.split("/")
    if any(part in ("", ".", "..") for part in parts):
        raise PackageError(f"package-invalid: {what} {path!r} escapes or is not normalized")
    return path


class _DirectorySource:
    def __init__(self, root: Path):
        self.root = root.resolve()

    def exists(self, rel: str) -> bool:
        return (self.root / rel).is_file()

    def read(self, rel: str) -> bytes:
        target = (self.root / rel).resolve()
        if self.root not in target.parents and target != self.root:
            raise PackageError(f"package-invalid: path {rel!r} escapes the package root")
        return target.read_bytes()


class _ZipSource:
    def __init__(self, archive: zipfile.ZipFile):
        self.archive = archive
        self.names = set(archive.namelist())

    def exists(self, rel: str) -> bool:
        return rel in self.names

    def read(self, rel: str) -> bytes:
        return self.archive.read(rel)


def _open_source(root: Path):
    if root.is_dir():
        return _DirectorySource(root)
    if root.is_file() and root.suffix == ".zip":
        try:
            return _ZipSource(zipfile.ZipFile(root))
        except zipfile.BadZipFile as exc:
            raise PackageError(f"package-invalid: {root} is not a readable zip archive") from exc
    raise PackageError(f"package-invalid: {root} is neither a directory nor a .zip archive")


def parse_manifest(raw: bytes) -> SubmissionManifest:
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise PackageError(f"package-invalid: manifest is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise PackageError("package-invalid: manifest root must be an object")
    expected = {
        "app_id",
        "version",
        "environment",
        "artifact_path",
        "artifact_sha256",
        "immutable_ref",
        "evidence",
    }
    if set(doc) != expected:
        missing = sorted(expected - set(doc))
        unknown = sorted(set(doc) - expected)
        raise PackageError(
            f"package-invalid: manifest missing fields {missing}, unexpected fields {unknown}"
        )
    for key in ("app_id", "version", "environment", "artifact_path", "artifact_sha256"):
        if not isinstance(doc[key], str):
            raise PackageError(f"package-invalid: manifest {key} must be a string")
    if not isinstance(doc["immutable_ref"], bool):
        raise PackageError("package-invalid: manifest immutable_ref must be a boolean")
    if not isinstance(doc["evidence"], dict):
        raise PackageError("package-invalid: manifest evidence must be an object")

    try:
        version = Version.parse(doc["version"])
        digest = Digest.sha256(doc["artifact_sha256"])
    except ValueError as exc:
        raise PackageError(f"package-invalid: {exc}") from exc

    artifact_path = _validate_relative_path(doc["artifact_path"], "artifact path")
    evidence_paths: dict[EvidenceKind, str] = {}
    for kind_raw, rel in doc["evidence"].items():
        try:
            kind = EvidenceKind(kind_raw)
        except ValueError:
            raise PackageError(
                f"package-invalid: unknown evidence kind {kind_raw!r} in manifest"
            ) from None
        evidence_paths[kind] = _validate_relative_path(rel, f"evidence path for {kind_raw}")

    try:
        return SubmissionManifest(
            app_id=doc["app_id"],
            version=version,
            environment=doc["environment"],
            artifact_path=artifact_path,
            artifact_digest=digest,
            immutable_ref=doc["immutable_ref"],
            evidence_paths=evidence_paths,
        )
    except ValueError as exc:
        raise PackageError(f"package-invalid: {exc}") from exc


def load_package(root: str | Path) -> SubmissionPackage:
    """Read a submission package from a directory or zip archive.

    The manifest and artifact must be readable; declared evidence files
    that are absent are recorded in ``missing_evidence``.
    """
    source = _open_source(Path(root))
    if not source.exists(MANIFEST_NAME):
        raise PackageError(f"package-invalid: {root} has no {MANIFEST_NAME}")
    manifest = parse_manifest(source.read(MANIFEST_NAME))

    if not source.exists(manifest.artifact_path):
        raise PackageError(
            f"package-invalid: artifact file {manifest.artifact_path!r} is missing"
        )
    artifact_bytes = source.read(manifest.artifact_path)

    evidence: dict[EvidenceKind, bytes] = {}
    missing: set[EvidenceKind] = set()
    for kind, rel in manifest.evidence_paths.items():
        if source.exists(rel):
            evidence[kind] = source.read(rel)
        else:
            missing.add(kind)
    return SubmissionPackage(manifest, artifact_bytes, evidence, frozenset(missing))


@dataclass(frozen=True)
class PermissionRequest:
    app_id: str
    capabilities: PermissionSet


def parse_permission_request(raw: bytes) -> PermissionRequest:
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise EvidenceError(f"evidence-unparseable: permission request: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"app_id", "capabilities"}:
        raise EvidenceError(
            "evidence-unparseable: permission request must contain exactly app_id and capabilities"
        )
    if not isinstance(doc["app_id"], str) or not doc["app_id"]:
        raise EvidenceError("evidence-unparseable: permission request app_id must be non-empty")
    caps = doc["capabilities"]
    if not isinstance(caps, list) or len(caps) != len(set(map(str, caps))):
        raise EvidenceError(
            "evidence-unparseable: permission request capabilities must be a duplicate-free list"
        )
    try:
        return PermissionRequest(doc["app_id"], PermissionSet.from_iterable(caps))
    except (TypeError, ValueError) as exc:
        raise EvidenceError(f"evidence-unparseable: permission request: {exc}") from exc


@dataclass(frozen=True)
class RegistryLog:
    app_id: str
    published: tuple[Version, ...]


def parse_registry_log(raw: bytes) -> RegistryLog:
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise EvidenceError(f"evidence-unparseable: registry log: {exc}") from exc
    if not isinstance(doc, dict) or set(doc) != {"app_id", "published_versions"}:
        raise EvidenceError(
            "evidence-unparseable: registry log must contain exactly app_id and published_versions"
        )
    if not isinstance(doc["app_id"], str) or not doc["app_id"]:
        raise EvidenceError("evidence-unparseable: registry log app_id must be non-empty")
    raw_versions = doc["published_versions"]
    if not isinstance(raw_versions, list):
        raise EvidenceError("evidence-unparseable: published_versions must be a list")
    versions = []
    for v in raw_versions:
        if not isinstance(v, str):
            raise EvidenceError("evidence-unparseable: published versions must be strings")
        try:
            versions.append(Version.parse(v))
        except ValueError as exc:
            raise EvidenceError(f"evidence-unparseable: registry log: {exc}") from exc
    return RegistryLog(doc["app_id"], tuple(versions))


def parse_policy_snapshot(raw: bytes) -> Mapping[str, Any]:
    """Isolation/admission snapshot; any JSON object is accepted."""
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise EvidenceError(f"evidence-unparseable: policy snapshot: {exc}") from exc
    if not isinstance(doc, dict):
        raise EvidenceError("evidence-unparseable: policy snapshot must be a JSON object")
    return doc


def _signature_parses(raw: bytes) -> None:
    envelope = attestation.parse_envelope(raw)
    attestation.parse_release_statement(envelope.payload)


def _provenance_parses(raw: bytes) -> None:
    envelope = attestation.parse_envelope(raw)
    attestation.extract_provenance(envelope.payload)


def _ssdf_parses(raw: bytes) -> None:
    envelope = attestation.parse_envelope(raw)
    attestation.extract_ssdf(envelope.payload)


def _approvals_parse(raw: bytes) -> None:
    envelope = attestation.parse_envelope(raw)
    attestation.parse_approval_statement(envelope.payload)


_PARSERS = {
    EvidenceKind.SIGNATURE: _signature_parses,
    EvidenceKind.SBOM: sbom.parse_sbom,
    EvidenceKind.SCAN_REPORT: sbom.parse_scan_report,
    EvidenceKind.VEX: sbom.parse_exceptions,
    EvidenceKind.PROVENANCE: _provenance_parses,
    EvidenceKind.SSDF_ATTESTATION: _ssdf_parses,
    EvidenceKind.PERMISSION_REQUEST: parse_permission_request,
    EvidenceKind.APPROVALS: _approvals_parse,
    EvidenceKind.POLICY_SNAPSHOT: parse_policy_snapshot,
    EvidenceKind.REGISTRY_LOG: parse_registry_log,
}


def is_parseable(kind: EvidenceKind, raw: bytes) -> bool:
    """True iff the kind's parser accepts the bytes (not: the check passes)."""
    try:
        _PARSERS[kind](raw)
    except (GateError, ValueError):
        return False
    return True


_LEVEL1_KINDS = frozenset(
    {
        EvidenceKind.SIGNATURE,
        EvidenceKind.SBOM,
        EvidenceKind.SCAN_REPORT,
        EvidenceKind.SSDF_ATTESTATION,
    }
)
_LEVEL2_KINDS = _LEVEL1_KINDS | {EvidenceKind.PROVENANCE, EvidenceKind.POLICY_SNAPSHOT}
_LEVEL3_KINDS = _LEVEL2_KINDS | {EvidenceKind.VEX, EvidenceKind.REGISTRY_LOG}

REQUIRED_EVIDENCE_BY_LEVEL: dict[AssuranceLevel, frozenset[EvidenceKind]] = {
    AssuranceLevel.L0: frozenset(),
    AssuranceLevel.L1: _LEVEL1_KINDS,
    AssuranceLevel.L2: _LEVEL2_KINDS,
    AssuranceLevel.L3: _LEVEL3_KINDS,
}


def required_evidence(
    manifest: SubmissionManifest, target_level: AssuranceLevel
) -> frozenset[EvidenceKind]:
    """Evidence kinds a submission needs at the target level.

    When the package declares a permission request and the target level is
    2 or higher, the approval-workflow evidence joins the required set.
    """
    required = REQUIRED_EVIDENCE_BY_LEVEL[target_level]
    if (
        target_level >= AssuranceLevel.L2
        and EvidenceKind.PERMISSION_REQUEST in manifest.evidence_paths
    ):
        required = required | {EvidenceKind.PERMISSION_REQUEST, EvidenceKind.APPROVALS}
    return required


@dataclass(frozen=True)
class CompletenessReport:
    required: frozenset[EvidenceKind]
    present_and_parseable: frozenset[EvidenceKind]
    fraction: Fraction

    def __post_init__(self) -> None:
        if not 0 <= self.fraction <= 1:
            raise ValueError("completeness fraction must be within [0, 1]")


def completeness(pkg: SubmissionPackage, target_level: AssuranceLevel) -> CompletenessReport:
    """Fraction of required evidence items that are present and parseable."""
    required = required_evidence(pkg.manifest, target_level)
    parseable = frozenset(
        kind for kind, raw in pkg.evidence.items() if is_parseable(kind, raw)
    )
    if not required:
        fraction = Fraction(1)
    else:
        fraction = Fraction(len(parseable & required), len(required))
    return CompletenessReport(required, parseable, fraction)
