"""The five onboarding checks.

Outcome semantics: fail is a verified violation, escalate is an evidence
gap or a policy-sanctioned deviation that needs a human, pass is an
affirmative verification. Artifact integrity and build provenance are
strictly pass/fail; the other three may escalate. Every check is a pure
function of the package evidence and the policy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from . import attestation
from .core import (
    Digest,
    LifecycleStage,
    PermissionSet,
    SignerPurpose,
    ThreatTag,
    Version,
    compute_digest,
    is_subset,
)
from .errors import (
    BadSignatureError,
    EvidenceError,
    UntrustedSignerError,
)
from .policy import DependencyClass, TrustPolicy
from .sbom import Component, ExceptionDoc, ScanReport
from .submission import (
    EvidenceKind,
    PermissionRequest,
    RegistryLog,
    SubmissionPackage,
)


class CheckId(Enum):
    ARTIFACT_INTEGRITY = "artifact_integrity"
    DEPENDENCY_TRANSPARENCY = "dependency_transparency"
    BUILD_PROVENANCE = "build_provenance"
    RUNTIME_BINDING = "runtime_binding"
    ANTI_ROLLBACK = "anti_rollback"


class CheckOutcome(Enum):
    PASS = "pass"
    FAIL = "fail"
    ESCALATE = "escalate"


@dataclass(frozen=True)
class CheckResult:
    check_id: CheckId
    outcome: CheckOutcome
    reasons: tuple[str, ...]
    threat_tags: tuple[ThreatTag, ...]
    evidence_used: tuple[EvidenceKind, ...]

    def __post_init__(self) -> None:
        if self.outcome is not CheckOutcome.PASS and not self.reasons:
            raise ValueError(f"{self.check_id.value}: {self.outcome.value} requires a reason")


@dataclass(frozen=True)
class ControlAnnotation:
    """Threat/control/evidence line attached to non-pass checks in audits."""

    threat: str
    controls: str
    evidence: str

    def as_dict(self) -> dict[str, str]:
        return {"threat": self.threat, "controls": self.controls, "evidence": self.evidence}


CONTROL_CATALOG: dict[CheckId, ControlAnnotation] = {
    CheckId.ARTIFACT_INTEGRITY: ControlAnnotation(
        threat="Signing / registry compromise",
        controls="Protected signing keys; immutable tags; signed metadata",
        evidence="Signature chain; registry audit log; optional transparency proof",
    ),
    CheckId.DEPENDENCY_TRANSPARENCY: ControlAnnotation(
        threat="Dependency confusion",
        controls="Pinned dependencies; allowlists; private registries; SBOM",
        evidence="SBOM; dependency-policy report; vulnerability scan",
    ),
    CheckId.BUILD_PROVENANCE: ControlAnnotation(
        threat="Build compromise",
        controls="Harden CI; reviewed changes; isolated builds; provenance",
        evidence="Provenance attestation; build logs; CI identity",
    ),
    CheckId.RUNTIME_BINDING: ControlAnnotation(
        threat="Weak onboarding verification or excessive permissions",
        controls="Verify signature, SBOM, and provenance; least privilege; approval workflow",
        evidence="Admission log; policy snapshot; RBAC/ABAC diff",
    ),
    CheckId.ANTI_ROLLBACK: ControlAnnotation(
        threat="Tampered update / downgrade",
        controls="Signed releases; staged rollout; anti-rollback checks",
        evidence="Signed manifest; rollout log; rollback authorization",
    ),
}

_TAMPER_TAGS = (
    ThreatTag(LifecycleStage.SIGN, "signature stripping"),
    ThreatTag(LifecycleStage.UPDATE, "tampered update"),
)
_GAP_TAG = ThreatTag(LifecycleStage.ONBOARD, "weak evidence checks")
_CONFUSION_TAG = ThreatTag(LifecycleStage.BUILD, "poisoned dependency")
_MISBINDING_TAG = ThreatTag(LifecycleStage.ONBOARD, "policy mis-binding")


def check_artifact_integrity(pkg: SubmissionPackage, policy: TrustPolicy) -> CheckResult:
    """Digest must match the manifest and a trusted release signature must
    bind that digest. All problems are fail outcomes with reasons."""
    reasons: list[str] = []
    tags: list[ThreatTag] = []
    evidence_used: list[EvidenceKind] = []

    computed = compute_digest(pkg.artifact_bytes)
    if computed != pkg.manifest.artifact_digest:
        reasons.append(
            f"artifact digest {computed.hex} does not match manifest "
            f"{pkg.manifest.artifact_digest.hex}"
        )
        tags.extend(_TAMPER_TAGS)

    raw = pkg.evidence.get(EvidenceKind.SIGNATURE)
    if raw is None:
        reasons.append("release signature evidence missing")
        tags.append(ThreatTag(LifecycleStage.SIGN, "signature stripping"))
    else:
        evidence_used.append(EvidenceKind.SIGNATURE)
        try:
            envelope = attestation.parse_envelope(raw)
            payload = attestation.verify_envelope(
                envelope, policy, SignerPurpose.RELEASE_SIGNING
            )
            signed_digest = attestation.parse_release_statement(payload)
            if signed_digest != pkg.manifest.artifact_digest:
                reasons.append(
                    f"signed digest {signed_digest.hex} does not match manifest "
                    f"{pkg.manifest.artifact_digest.hex}"
                )
                tags.append(ThreatTag(LifecycleStage.PUBLISH, "metadata tampering"))
        except UntrustedSignerError as exc:
            reasons.append(str(exc))
            tags.append(ThreatTag(LifecycleStage.SIGN, "unauthorized signing"))
        except BadSignatureError as exc:
            reasons.append(str(exc))
            tags.extend(_TAMPER_TAGS)
        except EvidenceError as exc:
            reasons.append(str(exc))
            tags.append(ThreatTag(LifecycleStage.SIGN, "signature stripping"))

    outcome = CheckOutcome.PASS if not reasons else CheckOutcome.FAIL
    return CheckResult(
        CheckId.ARTIFACT_INTEGRITY,
        outcome,
        tuple(reasons),
        _dedupe(tags),
        tuple(evidence_used),
    )


def check_dependency_transparency(
    components: Sequence[Component] | None,
    scan: ScanReport | None,
    exceptions: ExceptionDoc | None,
    policy: TrustPolicy,
    *,
    gaps: Sequence[str] = (),
) -> CheckResult:
    """Component origins must match approved sources and every high or
    critical finding needs a declared exception.

    ``gaps`` carries upstream evidence problems (missing or unparseable
    SBOM/scan); any gap forces escalate since the rule cannot be evaluated.
    """
    fail_reasons: list[str] = []
    escalate_reasons: list[str] = list(gaps)
    tags: list[ThreatTag] = [_GAP_TAG] if gaps else []
    evidence_used: list[EvidenceKind] = []

    if components is None and not gaps:
        escalate_reasons.append("sbom evidence unavailable")
        tags.append(_GAP_TAG)
    if components is not None:
        evidence_used.append(EvidenceKind.SBOM)
        for component in components:
            origin_class = policy.classify_dependency(component.origin)
            label = f"{component.name}@{component.version} (origin {component.origin or 'absent'})"
            if origin_class is DependencyClass.DENIED:
                fail_reasons.append(f"component {label} matches a deny rule")
                tags.append(_CONFUSION_TAG)
            elif origin_class is DependencyClass.UNKNOWN:
                escalate_reasons.append(f"component {label} has unknown origin")
                tags.append(_CONFUSION_TAG)
            elif origin_class is DependencyClass.EXCEPTION:
                escalate_reasons.append(f"component {label} matches an exception rule")
                tags.append(_CONFUSION_TAG)

    if scan is None and not gaps:
        escalate_reasons.append("scan report unavailable")
        tags.append(_GAP_TAG)
    if scan is not None:
        evidence_used.append(EvidenceKind.SCAN_REPORT)
        if exceptions is not None:
            evidence_used.append(EvidenceKind.VEX)
        for finding in scan.high_or_critical():
            if exceptions is None or not exceptions.covers(finding.finding_id):
                escalate_reasons.append(
                    f"{finding.severity.value} finding {finding.finding_id} on "
                    f"{finding.component_name} has no exception entry"
                )
                tags.append(_CONFUSION_TAG)

    if fail_reasons:
        outcome, reasons = CheckOutcome.FAIL, fail_reasons + escalate_reasons
    elif escalate_reasons:
        outcome, reasons = CheckOutcome.ESCALATE, escalate_reasons
    else:
        outcome, reasons = CheckOutcome.PASS, []
    return CheckResult(
        CheckId.DEPENDENCY_TRANSPARENCY,
        outcome,
        tuple(reasons),
        _dedupe(tags),
        tuple(evidence_used),
    )


def check_build_provenance(
    prov: attestation.Provenance | None,
    artifact_digest: Digest,
    policy: TrustPolicy,
    *,
    evidence_problem: str | None = None,
    problem_tag: ThreatTag = _GAP_TAG,
) -> CheckResult:
    """Builder identity, source repository, and subject binding must all
    match the approved pipeline. Strictly pass/fail: absent or unverifiable
    provenance is a fail with the upstream problem as the reason."""
    if prov is None:
        return CheckResult(
            CheckId.BUILD_PROVENANCE,
            CheckOutcome.FAIL,
            (evidence_problem or "provenance evidence unavailable",),
            (problem_tag,),
            (),
        )
    reasons: list[str] = []
    tags: list[ThreatTag] = []
    if prov.builder_id not in policy.approved_builders:
        reasons.append(f"builder {prov.builder_id!r} is not an approved builder")
        tags.append(ThreatTag(LifecycleStage.BUILD, "compromised CI runner"))
    if prov.source_repo not in policy.approved_source_repos:
        reasons.append(f"source repo {prov.source_repo!r} is not an approved repository")
        tags.append(ThreatTag(LifecycleStage.BUILD, "malicious build script"))
    if artifact_digest not in prov.subject_digests:
        reasons.append(
            f"artifact digest {artifact_digest.hex} is not among the provenance subjects"
        )
        tags.append(ThreatTag(LifecycleStage.SIGN, "forged attestations"))
    outcome = CheckOutcome.PASS if not reasons else CheckOutcome.FAIL
    return CheckResult(
        CheckId.BUILD_PROVENANCE,
        outcome,
        tuple(reasons),
        _dedupe(tags),
        (EvidenceKind.PROVENANCE,),
    )


def check_runtime_binding(
    request: PermissionRequest | None,
    approval: attestation.ApprovalRecord | None,
    app_id: str,
    policy: TrustPolicy,
    *,
    policy_snapshot_present: bool = True,
    request_problem: str | None = None,
    approval_problem: str | None = None,
) -> CheckResult:
    """Requested privileges must be no broader than the approved profile.

    Excess capabilities covered by a valid approver-signed record escalate
    for human review; unapproved excess is a fail. Missing isolation
    evidence (policy snapshot) downgrades a pass to escalate.
    """
    evidence_used: list[EvidenceKind] = []
    if request is not None or request_problem:
        evidence_used.append(EvidenceKind.PERMISSION_REQUEST)
    if approval is not None or approval_problem:
        evidence_used.append(EvidenceKind.APPROVALS)
    if policy_snapshot_present:
        evidence_used.append(EvidenceKind.POLICY_SNAPSHOT)

    def result(outcome: CheckOutcome, reasons: list[str], tags: list[ThreatTag]) -> CheckResult:
        return CheckResult(
            CheckId.RUNTIME_BINDING, outcome, tuple(reasons), _dedupe(tags), tuple(evidence_used)
        )

    if request_problem:
        return result(CheckOutcome.ESCALATE, [request_problem], [_GAP_TAG])

    if request is not None and request.app_id != app_id:
        return result(
            CheckOutcome.FAIL,
            [f"permission request is for app {request.app_id!r}, not {app_id!r}"],
            [ThreatTag(LifecycleStage.ONBOARD, "identity spoofing")],
        )

    profile = policy.permission_profiles.get(app_id)
    if profile is None:
        return result(
            CheckOutcome.FAIL,
            [f"no approved permission profile for app {app_id!r}"],
            [_MISBINDING_TAG],
        )

    requested = request.capabilities if request is not None else PermissionSet(frozenset())
    if is_subset(requested, profile):
        if not policy_snapshot_present:
            return result(
                CheckOutcome.ESCALATE,
                ["isolation evidence (policy snapshot) missing or unparseable"],
                [_GAP_TAG],
            )
        return result(CheckOutcome.PASS, [], [])

    excess = sorted(requested.difference(profile))
    reasons = [f"requested capabilities exceed approved profile: {', '.join(excess)}"]
    if approval is not None and approval.app_id == app_id and all(
        cap in approval.capabilities for cap in excess
    ):
        reasons.append("excess capabilities are covered by a signed approval record")
        if not policy_snapshot_present:
            reasons.append("isolation evidence (policy snapshot) missing or unparseable")
        return result(CheckOutcome.ESCALATE, reasons, [_MISBINDING_TAG])
    if approval_problem:
        reasons.append(approval_problem)
    elif approval is not None and approval.app_id != app_id:
        reasons.append(f"approval record is for app {approval.app_id!r}, not {app_id!r}")
    elif approval is not None:
        reasons.append("approval record does not cover the excess capabilities")
    else:
        reasons.append("no approval record for the excess capabilities")
    return result(CheckOutcome.FAIL, reasons, [_MISBINDING_TAG])


def check_anti_rollback(
    version: Version,
    log: RegistryLog | None,
    app_id: str,
    *,
    evidence_problem: str | None = None,
) -> CheckResult:
    """The submitted version must be strictly newer than every published
    version; an empty log passes, a missing log escalates."""

    def result(
        outcome: CheckOutcome, reasons: list[str], tags: list[ThreatTag], used: bool = True
    ) -> CheckResult:
        return CheckResult(
            CheckId.ANTI_ROLLBACK,
            outcome,
            tuple(reasons),
            _dedupe(tags),
            (EvidenceKind.REGISTRY_LOG,) if used else (),
        )

    if evidence_problem:
        return result(CheckOutcome.ESCALATE, [evidence_problem], [_GAP_TAG])
    if log is None:
        return result(
            CheckOutcome.ESCALATE, ["registry log evidence unavailable"], [_GAP_TAG], used=False
        )
    if log.app_id != app_id:
        return result(
            CheckOutcome.ESCALATE,
            [f"registry log is for app {log.app_id!r}, not {app_id!r}"],
            [ThreatTag(LifecycleStage.PUBLISH, "metadata tampering")],
        )
    if not log.published:
        return result(CheckOutcome.PASS, [], [])
    newest = max(log.published)
    if version > newest:
        return result(CheckOutcome.PASS, [], [])
    if version == newest:
        return result(
            CheckOutcome.FAIL,
            [f"version {version} equals the published maximum"],
            [ThreatTag(LifecycleStage.PUBLISH, "tag overwrite")],
        )
    return result(
        CheckOutcome.FAIL,
        [f"version {version} is lower than the published maximum {newest}"],
        [ThreatTag(LifecycleStage.UPDATE, "downgrade to vulnerable release")],
    )


def _dedupe(tags: Sequence[ThreatTag]) -> tuple[ThreatTag, ...]:
    seen: list[ThreatTag] = []
    for tag in tags:
        if tag not in seen:
            seen.append(tag)
    return tuple(seen)
