"""Adversarial scenario corpus and desk-scale metrics.

Generates a clean, fully-evidenced package plus adversarial variants:

- tampered_update: artifact bytes mutated after signing
- dependency_confusion (two severities): an SBOM component shadowing an
  internal name, once with an unknown origin and once from a deny-listed
  public origin
- insider_bypass (two variants): a permission request exceeding the
  approved profile, with the approval record removed or present

Generation is deterministic for a given seed, including the keypairs,
so corpora are reproducible without checking in private keys.
"""

from __future__ import annotations

import hashlib
import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from statistics import mean
from typing import Any, Mapping, Sequence

from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey
from cryptography.hazmat.primitives.serialization import (
    Encoding,
    PublicFormat,
)

from . import attestation
from .core import AssuranceLevel, compute_digest
from .engine import Verdict, evaluate_package
from .errors import GateError
from .policy import TrustPolicy, load_policy_file
from .sbom import Component
from .submission import load_package

APP_ID = "xapp-kpm"
BUILDER_ID = "ci.operator.example/pipeline-a"
HARDENED_BUILDER_ID = "ci.operator.example/pipeline-hardened"
SOURCE_REPO = "git.example/ric-apps/xapp-kpm"

LABELS_NAME = "labels.json"
POLICY_NAME = "policy.json"

SCENARIO_KINDS = ("clean", "tampered_update", "dependency_confusion", "insider_bypass")


@dataclass(frozen=True)
class SigningKey:
    key_id: str
    private: Ed25519PrivateKey

    def public_b64(self) -> str:
        import base64

        raw = self.private.public_key().public_bytes(Encoding.Raw, PublicFormat.Raw)
        return base64.b64encode(raw).decode("ascii")


@dataclass(frozen=True)
class CorpusKeys:
    release: SigningKey
    provenance: SigningKey
    assessor: SigningKey
    approver: SigningKey


def derive_key(seed: int, label: str) -> SigningKey:
    """Deterministic Ed25519 keypair for corpus fixtures (never production)."""
    material = hashlib.sha256(f"ricgate-corpus:{seed}:{label}".encode("utf-8")).digest()
    return SigningKey(label, Ed25519PrivateKey.from_private_bytes(material))


def derive_corpus_keys(seed: int) -> CorpusKeys:
    return CorpusKeys(
        release=derive_key(seed, "release-1"),
        provenance=derive_key(seed, "prov-1"),
        assessor=derive_key(seed, "assessor-1"),
        approver=derive_key(seed, "approver-1"),
    )


def bundled_policy_document(keys: CorpusKeys) -> dict[str, Any]:
    """The operator policy the corpus scenarios are evaluated against."""
    return {
        "signers": [
            {
                "key_id": keys.release.key_id,
                "public_key": keys.release.public_b64(),
                "purposes": ["release-signing"],
            },
            {
                "key_id": keys.provenance.key_id,
                "public_key": keys.provenance.public_b64(),
                "purposes": ["provenance"],
            },
            {
                "key_id": keys.assessor.key_id,
                "public_key": keys.assessor.public_b64(),
                "purposes": ["ssdf-assessor"],
            },
            {
                "key_id": keys.approver.key_id,
                "public_key": keys.approver.public_b64(),
                "purposes": ["approver"],
            },
        ],
        "approved_builders": [
            {"id": BUILDER_ID, "hardened": False},
            {"id": HARDENED_BUILDER_ID, "hardened": True},
        ],
        "approved_source_repos": [SOURCE_REPO],
        "dependency_rules": [
            {"pattern": "pkg:pypi/internal-", "action": "deny"},
            {"pattern": "pkg:internal-pypi/", "action": "allow"},
            {"pattern": "pkg:pypi/", "action": "allow"},
        ],
        "permission_profiles": {APP_ID: ["read:config", "read:kpm"]},
        "required_levels": {"sandbox": 0, "lab": 1, "production": 2},
        "monitoring": {APP_ID: True},
    }


CLEAN_COMPONENTS = (
    Component("internal-telemetry", "2.3.1", "pkg:internal-pypi/internal-telemetry"),
    Component("numpy", "1.26.4", "pkg:pypi/numpy"),
    Component("requests", "2.32.0", "pkg:pypi/requests"),
)

CLEAN_SCAN_FINDINGS = (
    {"component_name": "requests", "severity": "medium", "finding_id": "F-001"},
)

LEVEL2_PRACTICES = (
    "documented-sdlc-policy",
    "code-review",
    "protected-ci",
    "release-controls",
)


def encode_spdx_sbom(components: Sequence[Component], name: str = "sbom") -> dict[str, Any]:
    """Encode components as an SPDX 2.3 JSON subset document."""
    packages = []
    for i, c in enumerate(sorted(components, key=Component.sort_key)):
        pkg: dict[str, Any] = {
            "SPDXID": f"SPDXRef-Package-{i}",
            "name": c.name,
            "versionInfo": c.version,
            "downloadLocation": "NOASSERTION",
        }
        if c.origin is not None:
            pkg["externalRefs"] = [
                {
                    "referenceCategory": "PACKAGE-MANAGER",
                    "referenceType": "purl",
                    "referenceLocator": c.origin,
                }
            ]
        packages.append(pkg)
    return {
        "spdxVersion": "SPDX-2.3",
        "dataLicense": "CC0-1.0",
        "SPDXID": "SPDXRef-DOCUMENT",
        "name": name,
        "documentNamespace": f"https://sbom.example/{name}",
        "packages": packages,
    }


def encode_cyclonedx_sbom(components: Sequence[Component]) -> dict[str, Any]:
    """Encode components as a CycloneDX 1.5 JSON subset document."""
    entries = []
    for c in sorted(components, key=Component.sort_key):
        entry: dict[str, Any] = {"type": "library", "name": c.name, "version": c.version}
        if c.origin is not None:
            entry["purl"] = c.origin
        entries.append(entry)
    return {
        "bomFormat": "CycloneDX",
        "specVersion": "1.5",
        "version": 1,
        "components": entries,
    }


def _json_bytes(obj: Any) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _sign(payload_obj: Any, payload_type: str, key: SigningKey) -> bytes:
    payload = json.dumps(payload_obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    envelope = attestation.sign_envelope(payload, payload_type, key.private, key.key_id)
    return _json_bytes(envelope)


def write_package(
    root: Path,
    keys: CorpusKeys,
    *,
    app_id: str = APP_ID,
    version: str = "1.5.0",
    environment: str = "production",
    immutable_ref: bool = True,
    artifact: bytes,
    tampered_artifact: bytes | None = None,
    components: Sequence[Component] | None = CLEAN_COMPONENTS,
    sbom_format: str = "spdx",
    scan_findings: Sequence[Mapping[str, str]] | None = CLEAN_SCAN_FINDINGS,
    exception_entries: Sequence[Mapping[str, str]] | None = None,
    ssdf_practices: Sequence[str] | None = LEVEL2_PRACTICES,
    builder_id: str | None = BUILDER_ID,
    source_repo: str = SOURCE_REPO,
    hardened: bool = False,
    log_entry: str | None = None,
    permission_request: Sequence[str] | None = None,
    approval_capabilities: Sequence[str] | None = None,
    policy_snapshot: bool = True,
    registry_versions: Sequence[str] | None = ("1.4.0", "1.4.2"),
    signature: bool = True,
) -> Path:
    """Write one submission package directory.

    The manifest digest, release signature, and provenance subject always
    bind ``artifact``; passing ``tampered_artifact`` writes different bytes
    to disk, modeling post-signing tampering.
    """
    root.mkdir(parents=True, exist_ok=True)
    (root / "evidence").mkdir(exist_ok=True)
    digest = compute_digest(artifact)
    evidence_paths: dict[str, str] = {}

    def emit(kind: str, filename: str, data: bytes) -> None:
        evidence_paths[kind] = f"evidence/{filename}"
        (root / "evidence" / filename).write_bytes(data)

    (root / "artifact.bin").write_bytes(
        tampered_artifact if tampered_artifact is not None else artifact
    )

    if signature:
        emit(
            "signature",
            "release.sig.json",
            _sign({"artifact_sha256": digest.hex}, attestation.PAYLOAD_TYPE_RELEASE, keys.release),
        )
    if components is not None:
        if sbom_format == "spdx":
            emit("sbom", "sbom.spdx.json", _json_bytes(encode_spdx_sbom(components, app_id)))
        else:
            emit("sbom", "sbom.cdx.json", _json_bytes(encode_cyclonedx_sbom(components)))
    if scan_findings is not None:
        emit("scan_report", "scan.json", _json_bytes({"findings": list(scan_findings)}))
    if exception_entries is not None:
        emit("vex", "exceptions.json", _json_bytes({"entries": list(exception_entries)}))
    if ssdf_practices is not None:
        emit(
            "ssdf_attestation",
            "ssdf.json",
            _sign(
                {"practices": list(ssdf_practices)},
                attestation.PAYLOAD_TYPE_SSDF,
                keys.assessor,
            ),
        )
    if builder_id is not None:
        predicate: dict[str, Any] = {
            "builder": {"id": builder_id},
            "sourceRepo": source_repo,
            "hardened": hardened,
        }
        if log_entry is not None:
            predicate["logEntry"] = log_entry
        emit(
            "provenance",
            "provenance.json",
            _sign(
                {
                    "subject": [
                        {"name": f"{app_id}-{version}.bin", "digest": {"sha256": digest.hex}}
                    ],
                    "predicateType": "https://ricgate.example/provenance/v1",
                    "predicate": predicate,
                },
                attestation.PAYLOAD_TYPE_PROVENANCE,
                keys.provenance,
            ),
        )
    if permission_request is not None:
        emit(
            "permission_request",
            "permissions.json",
            _json_bytes({"app_id": app_id, "capabilities": sorted(permission_request)}),
        )
    if approval_capabilities is not None:
        emit(
            "approvals",
            "approvals.json",
            _sign(
                {"app_id": app_id, "capabilities": sorted(approval_capabilities)},
                attestation.PAYLOAD_TYPE_APPROVAL,
                keys.approver,
            ),
        )
    if policy_snapshot:
        emit(
            "policy_snapshot",
            "policy_snapshot.json",
            _json_bytes(
                {
                    "app_id": app_id,
                    "network_policy": "default-deny",
                    "namespace_isolation": True,
                }
            ),
        )
    if registry_versions is not None:
        emit(
            "registry_log",
            "registry_log.json",
            _json_bytes({"app_id": app_id, "published_versions": list(registry_versions)}),
        )

    manifest = {
        "app_id": app_id,
        "version": version,
        "environment": environment,
        "artifact_path": "artifact.bin",
        "artifact_sha256": digest.hex,
        "immutable_ref": immutable_ref,
        "evidence": evidence_paths,
    }
    (root / "manifest.json").write_bytes(_json_bytes(manifest))
    return root


@dataclass(frozen=True)
class Scenario:
    name: str
    kind: str
    environment: str
    package_root: Path
    expected_verdict_by_level: Mapping[AssuranceLevel, Verdict]

    def __post_init__(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not self.expected_verdict_by_level:
            raise ValueError(f"scenario {self.name!r} declares no expected verdicts")


def _expectations(**by_level: str) -> dict[AssuranceLevel, Verdict]:
    return {
        AssuranceLevel(int(level.lstrip("l"))): Verdict(verdict)
        for level, verdict in by_level.items()
    }


def generate_corpus(out_dir: str | Path, seed: int = 1) -> list[Scenario]:
    """Write the scenario corpus and its policy; deterministic per seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    keys = derive_corpus_keys(seed)
    (out / POLICY_NAME).write_bytes(_json_bytes(bundled_policy_document(keys)))

    rng = random.Random(seed)
    artifact = rng.randbytes(4096)
    tampered = bytearray(artifact)
    tampered[len(tampered) // 2] ^= 0x01

    confusion_unknown = CLEAN_COMPONENTS + (
        Component("internal-telemetry", "2.3.2", "pkg:npm/internal-telemetry"),
    )
    confusion_denied = CLEAN_COMPONENTS + (
        Component("internal-telemetry", "2.3.2", "pkg:pypi/internal-telemetry"),
    )

    write_package(out / "clean", keys, artifact=artifact)
    write_package(
        out / "tampered_update", keys, artifact=artifact, tampered_artifact=bytes(tampered)
    )
    write_package(
        out / "dependency_confusion_unknown",
        keys,
        artifact=artifact,
        environment="lab",
        components=confusion_unknown,
        sbom_format="cdx",
    )
    write_package(
        out / "dependency_confusion_denied",
        keys,
        artifact=artifact,
        components=confusion_denied,
        sbom_format="cdx",
    )
    write_package(
        out / "insider_bypass_unapproved",
        keys,
        artifact=artifact,
        permission_request=("read:kpm", "write:policy"),
    )
    write_package(
        out / "insider_bypass_approved",
        keys,
        artifact=artifact,
        permission_request=("read:kpm", "write:policy"),
        approval_capabilities=("write:policy",),
    )

    scenarios = [
        Scenario(
            "clean",
            "clean",
            "production",
            out / "clean",
            _expectations(l0="accept", l1="accept", l2="accept"),
        ),
        Scenario(
            "tampered_update",
            "tampered_update",
            "production",
            out / "tampered_update",
            _expectations(l2="block"),
        ),
        Scenario(
            "dependency_confusion_unknown",
            "dependency_confusion",
            "lab",
            out / "dependency_confusion_unknown",
            _expectations(l1="escalate"),
        ),
        Scenario(
            "dependency_confusion_denied",
            "dependency_confusion",
            "production",
            out / "dependency_confusion_denied",
            _expectations(l2="block"),
        ),
        Scenario(
            "insider_bypass_unapproved",
            "insider_bypass",
            "production",
            out / "insider_bypass_unapproved",
            _expectations(l2="block"),
        ),
        Scenario(
            "insider_bypass_approved",
            "insider_bypass",
            "production",
            out / "insider_bypass_approved",
            _expectations(l2="escalate"),
        ),
    ]

    labels = {
        "policy": POLICY_NAME,
        "scenarios": [
            {
                "name": s.name,
                "kind": s.kind,
                "environment": s.environment,
                "expected_verdict_by_level": {
                    str(int(level)): verdict.value
                    for level, verdict in sorted(s.expected_verdict_by_level.items())
                },
            }
            for s in scenarios
        ],
    }
    (out / LABELS_NAME).write_bytes(_json_bytes(labels))
    return scenarios


def load_corpus(corpus_dir: str | Path) -> list[Scenario]:
    """Read scenario labels back from a generated corpus directory."""
    corpus = Path(corpus_dir)
    labels_path = corpus / LABELS_NAME
    if not labels_path.is_file():
        raise GateError(f"corpus {corpus} has no {LABELS_NAME}")
    labels = json.loads(labels_path.read_text(encoding="utf-8"))
    scenarios = []
    for entry in labels["scenarios"]:
        scenarios.append(
            Scenario(
                name=entry["name"],
                kind=entry["kind"],
                environment=entry["environment"],
                package_root=corpus / entry["name"],
                expected_verdict_by_level={
                    AssuranceLevel(int(level)): Verdict(verdict)
                    for level, verdict in entry["expected_verdict_by_level"].items()
                },
            )
        )
    return scenarios


@dataclass(frozen=True)
class ScenarioRun:
    name: str
    kind: str
    environment: str
    required_level: AssuranceLevel
    verdict: Verdict
    expected_verdict: Verdict
    matched: bool
    latency_s: float
    completeness: float

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "environment": self.environment,
            "required_level": int(self.required_level),
            "verdict": self.verdict.value,
            "expected_verdict": self.expected_verdict.value,
            "matched": self.matched,
            "latency_s": self.latency_s,
            "completeness": self.completeness,
        }


@dataclass(frozen=True)
class MetricsReport:
    runs: tuple[ScenarioRun, ...]
    latency_mean_s: float
    latency_max_s: float
    detection_coverage: float
    decision_consistency: float
    reviewer_agreement: float | None = None

    def __post_init__(self) -> None:
        for value in (self.detection_coverage, self.decision_consistency):
            if not 0.0 <= value <= 1.0:
                raise ValueError("metric fractions must lie in [0, 1]")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "packages": [r.as_dict() for r in self.runs],
            "latency_mean_s": self.latency_mean_s,
            "latency_max_s": self.latency_max_s,
            "detection_coverage": self.detection_coverage,
            "decision_consistency": self.decision_consistency,
        }
        if self.reviewer_agreement is not None:
            out["reviewer_agreement"] = self.reviewer_agreement
        return out

    def render_table(self) -> str:
        header = (
            f"{'package':<30} {'kind':<22} {'env':<11} {'lvl':<4} "
            f"{'verdict':<9} {'expected':<9} {'match':<6} {'latency':<9} completeness"
        )
        lines = [header, "-" * len(header)]
        for r in self.runs:
            lines.append(
                f"{r.name:<30} {r.kind:<22} {r.environment:<11} {int(r.required_level):<4} "
                f"{r.verdict.value:<9} {r.expected_verdict.value:<9} "
                f"{'yes' if r.matched else 'NO':<6} {r.latency_s:<9.4f} {r.completeness:.3f}"
            )
        lines.append("")
        lines.append(f"latency mean/max: {self.latency_mean_s:.4f}s / {self.latency_max_s:.4f}s")
        lines.append(f"detection coverage:   {self.detection_coverage:.3f}")
        lines.append(f"decision consistency: {self.decision_consistency:.3f}")
        if self.reviewer_agreement is not None:
            lines.append(f"reviewer agreement:   {self.reviewer_agreement:.3f}")
        return "\n".join(lines) + "\n"


def run_corpus(
    corpus_dir: str | Path,
    policy: TrustPolicy | None = None,
    *,
    reviewer_verdicts: Mapping[str, str] | None = None,
) -> MetricsReport:
    """Run the gate over every corpus package and aggregate the metrics.

    Detection coverage counts adversarial packages with a non-accept
    verdict; decision consistency compares verdicts with the corpus labels.
    When ``reviewer_verdicts`` maps package names to externally supplied
    verdicts, their agreement with the gate is reported as well.
    """
    corpus = Path(corpus_dir)
    scenarios = load_corpus(corpus)
    if policy is None:
        policy = load_policy_file(corpus / POLICY_NAME)

    runs: list[ScenarioRun] = []
    agreements: list[bool] = []
    for scenario in scenarios:
        level = policy.required_level(scenario.environment)
        started = time.perf_counter()
        pkg = load_package(scenario.package_root)
        report = evaluate_package(pkg, policy, required_level=level)
        latency = time.perf_counter() - started
        expected = scenario.expected_verdict_by_level[level]
        verdict = report.decision.verdict
        runs.append(
            ScenarioRun(
                name=scenario.name,
                kind=scenario.kind,
                environment=scenario.environment,
                required_level=level,
                verdict=verdict,
                expected_verdict=expected,
                matched=verdict is expected,
                latency_s=latency,
                completeness=float(report.completeness.fraction),
            )
        )
        if reviewer_verdicts is not None and scenario.name in reviewer_verdicts:
            raw = reviewer_verdicts[scenario.name]
            try:
                reviewed = Verdict(raw)
            except ValueError:
                raise GateError(
                    f"invalid reviewer verdict {raw!r} for {scenario.name!r}"
                ) from None
            agreements.append(reviewed is verdict)

    adversarial = [r for r in runs if r.kind != "clean"]
    detected = [r for r in adversarial if r.verdict is not Verdict.ACCEPT]
    return MetricsReport(
        runs=tuple(runs),
        latency_mean_s=mean(r.latency_s for r in runs) if runs else 0.0,
        latency_max_s=max((r.latency_s for r in runs), default=0.0),
        detection_coverage=len(detected) / len(adversarial) if adversarial else 1.0,
        decision_consistency=(
            sum(r.matched for r in runs) / len(runs) if runs else 1.0
        ),
        reviewer_agreement=(
            sum(agreements) / len(agreements) if reviewer_verdicts is not None and agreements
            else None
        ),
    )


def generate_scaled_package(
    out_dir: str | Path, seed: int = 1, *, artifact_size: int, component_count: int
) -> tuple[Path, Path]:
    """A clean package scaled up for latency measurements.

    Returns (package_root, policy_path).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    keys = derive_corpus_keys(seed)
    policy_path = out / POLICY_NAME
    policy_path.write_bytes(_json_bytes(bundled_policy_document(keys)))
    rng = random.Random(seed)
    artifact = rng.randbytes(artifact_size)
    components = tuple(
        Component(f"dep-{i:04d}", f"1.0.{i % 10}", f"pkg:pypi/dep-{i:04d}")
        for i in range(component_count)
    )
    package_root = write_package(
        out / "scaled", keys, artifact=artifact, components=components
    )
    return package_root, policy_path
