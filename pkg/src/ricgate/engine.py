"""Evidence scoring and the gate decision.

The pipeline runs: parse and verify evidence, evaluate the five checks,
score the three evidence families (a family reaches level L only when every
requirement up to L holds), combine levels by minimum, and decide
Accept / Escalate / Block. A deterministic audit record captures the full
evidence trail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Iterable, Mapping

from . import attestation, sbom, submission
from .checks import (
    CONTROL_CATALOG,
    CheckId,
    CheckOutcome,
    CheckResult,
    check_anti_rollback,
    check_artifact_integrity,
    check_build_provenance,
    check_dependency_transparency,
    check_runtime_binding,
)
from .core import (
    AssuranceLevel,
    EvidenceFamily,
    LifecycleStage,
    SignerPurpose,
    ThreatTag,
    compute_digest,
)
from .errors import EvidenceError
from .policy import DependencyClass, TrustPolicy
from .submission import (
    CompletenessReport,
    EvidenceKind,
    SubmissionPackage,
    completeness,
)

_SSDF_PRACTICES_BY_LEVEL: dict[AssuranceLevel, frozenset[str]] = {
    AssuranceLevel.L1: frozenset({"documented-sdlc-policy", "code-review"}),
    AssuranceLevel.L2: frozenset({"protected-ci", "release-controls"}),
    AssuranceLevel.L3: frozenset({"separation-of-duties", "hardened-runners"}),
}


class Verdict(Enum):
    ACCEPT = "accept"
    ESCALATE = "escalate"
    BLOCK = "block"


@dataclass(frozen=True)
class AssuranceScore:
    ssdf_level: AssuranceLevel
    sbom_level: AssuranceLevel
    provenance_level: AssuranceLevel
    combined: AssuranceLevel

    def __post_init__(self) -> None:
        expected = combined_level(self.ssdf_level, self.sbom_level, self.provenance_level)
        if self.combined is not expected:
            raise ValueError(f"combined level must be {expected}, got {self.combined}")

    @classmethod
    def from_family_levels(
        cls, ssdf: AssuranceLevel, sbom_level: AssuranceLevel, provenance: AssuranceLevel
    ) -> "AssuranceScore":
        return cls(ssdf, sbom_level, provenance, combined_level(ssdf, sbom_level, provenance))

    def as_dict(self) -> dict[str, int]:
        return {
            "ssdf": int(self.ssdf_level),
            "sbom": int(self.sbom_level),
            "provenance": int(self.provenance_level),
            "combined": int(self.combined),
        }


def combined_level(
    ssdf: AssuranceLevel, sbom_level: AssuranceLevel, provenance: AssuranceLevel
) -> AssuranceLevel:
    """A submission reaches a level only when every family reaches it."""
    return min(ssdf, sbom_level, provenance)


@dataclass(frozen=True)
class GateDecision:
    verdict: Verdict
    required_level: AssuranceLevel
    score: AssuranceScore
    triggering_reasons: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.verdict is Verdict.ACCEPT:
            if self.triggering_reasons:
                raise ValueError("accept decisions carry no triggering reasons")
            if self.score.combined < self.required_level:
                raise ValueError("accept requires combined level >= required level")


def decide(
    results: Iterable[CheckResult], score: AssuranceScore, required_level: AssuranceLevel
) -> GateDecision:
    """Block on any verified violation or level shortfall, escalate on any
    open escalation, accept otherwise. Block dominates escalate."""
    results = list(results)
    fail_reasons = [
        f"{r.check_id.value}: {reason}"
        for r in results
        if r.outcome is CheckOutcome.FAIL
        for reason in r.reasons
    ]
    escalate_reasons = [
        f"{r.check_id.value}: {reason}"
        for r in results
        if r.outcome is CheckOutcome.ESCALATE
        for reason in r.reasons
    ]
    shortfall = score.combined < required_level
    if shortfall:
        fail_reasons.append(
            f"combined assurance level {int(score.combined)} is below required "
            f"level {int(required_level)}"
        )
    if fail_reasons:
        return GateDecision(Verdict.BLOCK, required_level, score, tuple(fail_reasons))
    if escalate_reasons:
        return GateDecision(Verdict.ESCALATE, required_level, score, tuple(escalate_reasons))
    return GateDecision(Verdict.ACCEPT, required_level, score, ())


@dataclass
class EvidenceBundle:
    """Parsed and verified evidence for one package, plus parse problems."""

    components: tuple[sbom.Component, ...] | None = None
    scan: sbom.ScanReport | None = None
    exceptions: sbom.ExceptionDoc | None = None
    provenance: attestation.Provenance | None = None
    ssdf: attestation.SsdfAttestation | None = None
    permission_request: submission.PermissionRequest | None = None
    approval: attestation.ApprovalRecord | None = None
    registry_log: submission.RegistryLog | None = None
    policy_snapshot_present: bool = False
    problems: dict[EvidenceKind, str] = field(default_factory=dict)


def parse_evidence(pkg: SubmissionPackage, policy: TrustPolicy) -> EvidenceBundle:
    """Parse every present evidence item, verifying signed statements."""
    bundle = EvidenceBundle()
    evidence = pkg.evidence

    def attempt(kind: EvidenceKind, parse) -> Any:
        raw = evidence.get(kind)
        if raw is None:
            return None
        try:
            return parse(raw)
        except (EvidenceError, ValueError) as exc:
            bundle.problems[kind] = str(exc)
            return None

    bundle.components = attempt(EvidenceKind.SBOM, sbom.parse_sbom)
    bundle.scan = attempt(EvidenceKind.SCAN_REPORT, sbom.parse_scan_report)
    bundle.exceptions = attempt(EvidenceKind.VEX, sbom.parse_exceptions)
    bundle.permission_request = attempt(
        EvidenceKind.PERMISSION_REQUEST, submission.parse_permission_request
    )
    bundle.registry_log = attempt(EvidenceKind.REGISTRY_LOG, submission.parse_registry_log)
    bundle.policy_snapshot_present = (
        attempt(EvidenceKind.POLICY_SNAPSHOT, submission.parse_policy_snapshot) is not None
    )

    def verified(kind: EvidenceKind, purpose: SignerPurpose):
        raw = evidence.get(kind)
        if raw is None:
            return None
        try:
            envelope = attestation.parse_envelope(raw)
            return attestation.verify_envelope_with_signer(envelope, policy, purpose)
        except (EvidenceError, ValueError) as exc:
            bundle.problems[kind] = str(exc)
            return None

    prov = verified(EvidenceKind.PROVENANCE, SignerPurpose.PROVENANCE)
    if prov is not None:
        payload, _ = prov
        try:
            bundle.provenance = attestation.extract_provenance(payload)
        except EvidenceError as exc:
            bundle.problems[EvidenceKind.PROVENANCE] = str(exc)

    ssdf_result = verified(EvidenceKind.SSDF_ATTESTATION, SignerPurpose.SSDF_ASSESSOR)
    if ssdf_result is not None:
        payload, key_id = ssdf_result
        try:
            bundle.ssdf = attestation.extract_ssdf(payload, assessor_key_id=key_id)
        except EvidenceError as exc:
            bundle.problems[EvidenceKind.SSDF_ATTESTATION] = str(exc)

    approval_result = verified(EvidenceKind.APPROVALS, SignerPurpose.APPROVER)
    if approval_result is not None:
        payload, _ = approval_result
        try:
            bundle.approval = attestation.parse_approval_statement(payload)
        except EvidenceError as exc:
            bundle.problems[EvidenceKind.APPROVALS] = str(exc)

    return bundle


def run_checks(
    pkg: SubmissionPackage, policy: TrustPolicy, bundle: EvidenceBundle
) -> dict[CheckId, CheckResult]:
    """Evaluate all five checks over one package."""
    manifest = pkg.manifest
    problems = bundle.problems

    sbom_gaps = []
    for kind, label in (
        (EvidenceKind.SBOM, "sbom"),
        (EvidenceKind.SCAN_REPORT, "scan report"),
    ):
        if kind in problems:
            sbom_gaps.append(f"{label} unparseable: {problems[kind]}")
        elif kind not in pkg.evidence:
            sbom_gaps.append(f"{label} evidence missing")
    if EvidenceKind.VEX in problems:
        sbom_gaps.append(f"exception document unparseable: {problems[EvidenceKind.VEX]}")

    prov_problem = None
    prov_tag = ThreatTag(LifecycleStage.ONBOARD, "weak evidence checks")
    if EvidenceKind.PROVENANCE in problems:
        prov_problem = problems[EvidenceKind.PROVENANCE]
        if prov_problem.startswith(("bad-signature", "untrusted-signer")):
            prov_tag = ThreatTag(LifecycleStage.SIGN, "forged attestations")
    elif EvidenceKind.PROVENANCE not in pkg.evidence:
        prov_problem = "provenance evidence missing"

    request_problem = None
    if EvidenceKind.PERMISSION_REQUEST in problems:
        request_problem = (
            f"permission request unparseable: {problems[EvidenceKind.PERMISSION_REQUEST]}"
        )
    approval_problem = None
    if EvidenceKind.APPROVALS in problems:
        approval_problem = f"approval record invalid: {problems[EvidenceKind.APPROVALS]}"

    log_problem = None
    if EvidenceKind.REGISTRY_LOG in problems:
        log_problem = f"registry log unparseable: {problems[EvidenceKind.REGISTRY_LOG]}"

    results = [
        check_artifact_integrity(pkg, policy),
        check_dependency_transparency(
            bundle.components, bundle.scan, bundle.exceptions, policy, gaps=tuple(sbom_gaps)
        ),
        check_build_provenance(
            bundle.provenance,
            compute_digest(pkg.artifact_bytes),
            policy,
            evidence_problem=prov_problem,
            problem_tag=prov_tag,
        ),
        check_runtime_binding(
            bundle.permission_request,
            bundle.approval,
            manifest.app_id,
            policy,
            policy_snapshot_present=bundle.policy_snapshot_present,
            request_problem=request_problem,
            approval_problem=approval_problem,
        ),
        check_anti_rollback(
            manifest.version,
            bundle.registry_log,
            manifest.app_id,
            evidence_problem=log_problem,
        ),
    ]
    return {r.check_id: r for r in results}


def _ssdf_unmet(
    level: AssuranceLevel, bundle: EvidenceBundle
) -> list[str]:
    if bundle.ssdf is None:
        return ["verified practice attestation signed by a trusted assessor"]
    missing = sorted(_SSDF_PRACTICES_BY_LEVEL[level] - bundle.ssdf.practices)
    return [f"attested practices: {', '.join(missing)}"] if missing else []


def _sbom_unmet(
    level: AssuranceLevel,
    bundle: EvidenceBundle,
    results: Mapping[CheckId, CheckResult],
    policy: TrustPolicy,
    app_id: str,
) -> list[str]:
    unmet: list[str] = []
    if level is AssuranceLevel.L1:
        if bundle.components is None:
            unmet.append("parseable SBOM (SPDX or CycloneDX)")
        if bundle.scan is None:
            unmet.append("parseable vulnerability scan report")
    elif level is AssuranceLevel.L2:
        if results[CheckId.DEPENDENCY_TRANSPARENCY].outcome is CheckOutcome.FAIL:
            unmet.append("dependency transparency check must not fail")
        unknowns = [
            c.name
            for c in bundle.components or ()
            if policy.classify_dependency(c.origin) is DependencyClass.UNKNOWN
        ]
        if unknowns:
            unmet.append(f"known origin for components: {', '.join(sorted(unknowns))}")
        if not policy.monitoring_declared.get(app_id, False):
            unmet.append("monitoring declared for the app in policy")
    else:
        if bundle.exceptions is None:
            unmet.append("exception document (VEX) present")
        elif bundle.scan is not None:
            uncovered = [
                f.finding_id
                for f in bundle.scan.high_or_critical()
                if not bundle.exceptions.covers(f.finding_id)
            ]
            if uncovered:
                unmet.append(
                    f"exception entries for high/critical findings: {', '.join(sorted(uncovered))}"
                )
    return unmet


def _provenance_unmet(
    level: AssuranceLevel,
    bundle: EvidenceBundle,
    results: Mapping[CheckId, CheckResult],
    policy: TrustPolicy,
    immutable_ref: bool,
) -> list[str]:
    unmet: list[str] = []
    if level is AssuranceLevel.L1:
        if results[CheckId.ARTIFACT_INTEGRITY].outcome is not CheckOutcome.PASS:
            unmet.append("artifact integrity check must pass (trusted signature, digest match)")
        if not immutable_ref:
            unmet.append("digest-pinned (immutable) artifact reference in the manifest")
    elif level is AssuranceLevel.L2:
        if results[CheckId.BUILD_PROVENANCE].outcome is not CheckOutcome.PASS:
            unmet.append("build provenance check must pass (approved builder and repo)")
    else:
        hardened = (
            bundle.provenance is not None
            and bundle.provenance.build_platform_hardened
            and policy.approved_builders.get(bundle.provenance.builder_id, False)
        )
        if not hardened:
            unmet.append("hardened build platform attested and approved in policy")
        if results[CheckId.ANTI_ROLLBACK].outcome is not CheckOutcome.PASS:
            unmet.append("anti-rollback check must pass against the registry log")
    return unmet


def score_details(
    bundle: EvidenceBundle,
    results: Mapping[CheckId, CheckResult],
    policy: TrustPolicy,
    *,
    app_id: str,
    immutable_ref: bool,
) -> tuple[AssuranceScore, dict[EvidenceFamily, list[str]]]:
    """Score each family and report what the next level still needs."""

    def unmet_for(family: EvidenceFamily, level: AssuranceLevel) -> list[str]:
        if family is EvidenceFamily.SSDF:
            return _ssdf_unmet(level, bundle)
        if family is EvidenceFamily.SBOM:
            return _sbom_unmet(level, bundle, results, policy, app_id)
        return _provenance_unmet(level, bundle, results, policy, immutable_ref)

    levels: dict[EvidenceFamily, AssuranceLevel] = {}
    hints: dict[EvidenceFamily, list[str]] = {}
    for family in EvidenceFamily:
        reached = AssuranceLevel.L0
        next_unmet: list[str] = []
        for level in (AssuranceLevel.L1, AssuranceLevel.L2, AssuranceLevel.L3):
            unmet = unmet_for(family, level)
            if unmet:
                next_unmet = unmet
                break
            reached = level
        levels[family] = reached
        hints[family] = next_unmet
    score = AssuranceScore.from_family_levels(
        levels[EvidenceFamily.SSDF],
        levels[EvidenceFamily.SBOM],
        levels[EvidenceFamily.PROVENANCE],
    )
    return score, hints


def score_families(
    bundle: EvidenceBundle,
    results: Mapping[CheckId, CheckResult],
    policy: TrustPolicy,
    *,
    app_id: str,
    immutable_ref: bool,
) -> AssuranceScore:
    score, _ = score_details(
        bundle, results, policy, app_id=app_id, immutable_ref=immutable_ref
    )
    return score


@dataclass(frozen=True)
class AuditRecord:
    """Deterministic, serializable trail of one gate evaluation."""

    app_id: str
    version: str
    environment: str
    timestamp: str
    policy_digest: str
    required_level: AssuranceLevel
    checks: tuple[CheckResult, ...]
    score: AssuranceScore
    decision: GateDecision
    completeness: CompletenessReport
    evidence_digests: Mapping[str, str]
    submitter_supplied: tuple[str, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "app_id": self.app_id,
            "version": self.version,
            "environment": self.environment,
            "timestamp": self.timestamp,
            "policy_digest": self.policy_digest,
            "required_level": int(self.required_level),
            "checks": [
                {
                    "check_id": r.check_id.value,
                    "outcome": r.outcome.value,
                    "reasons": list(r.reasons),
                    "threat_tags": [t.as_dict() for t in r.threat_tags],
                    "evidence_used": [k.value for k in r.evidence_used],
                }
                for r in self.checks
            ],
            "score": self.score.as_dict(),
            "decision": {
                "verdict": self.decision.verdict.value,
                "required_level": int(self.decision.required_level),
                "triggering_reasons": list(self.decision.triggering_reasons),
            },
            "completeness": {
                "required": sorted(k.value for k in self.completeness.required),
                "present_and_parseable": sorted(
                    k.value for k in self.completeness.present_and_parseable
                ),
                "fraction": float(self.completeness.fraction),
                "present_required_count": len(
                    self.completeness.present_and_parseable & self.completeness.required
                ),
                "required_count": len(self.completeness.required),
            },
            "evidence_digests": dict(sorted(self.evidence_digests.items())),
            "control_annotations": {
                r.check_id.value: CONTROL_CATALOG[r.check_id].as_dict()
                for r in self.checks
                if r.outcome is not CheckOutcome.PASS
            },
            "submitter_supplied": list(self.submitter_supplied),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def build_audit_record(
    pkg: SubmissionPackage,
    policy: TrustPolicy,
    results: Mapping[CheckId, CheckResult],
    score: AssuranceScore,
    decision: GateDecision,
    timestamp: str,
    *,
    environment: str | None = None,
) -> AuditRecord:
    """Assemble the audit record; deterministic for a fixed timestamp."""
    manifest = pkg.manifest
    digests = {"artifact": compute_digest(pkg.artifact_bytes).hex}
    for kind, raw in pkg.evidence.items():
        digests[kind.value] = compute_digest(raw).hex
    supplied = tuple(
        sorted(k.value for k in submission.SUBMITTER_SUPPLIED_KINDS if k in pkg.evidence)
    )
    return AuditRecord(
        app_id=manifest.app_id,
        version=str(manifest.version),
        environment=environment if environment is not None else manifest.environment,
        timestamp=timestamp,
        policy_digest=policy.digest.hex,
        required_level=decision.required_level,
        checks=tuple(results[check_id] for check_id in CheckId),
        score=score,
        decision=decision,
        completeness=completeness(pkg, decision.required_level),
        evidence_digests=digests,
        submitter_supplied=supplied,
    )


@dataclass(frozen=True)
class EvaluationReport:
    """Everything one gate run produced."""

    package: SubmissionPackage
    results: Mapping[CheckId, CheckResult]
    score: AssuranceScore
    hints: Mapping[EvidenceFamily, list[str]]
    decision: GateDecision
    completeness: CompletenessReport
    audit: AuditRecord


def evaluate_package(
    pkg: SubmissionPackage,
    policy: TrustPolicy,
    *,
    required_level: AssuranceLevel,
    environment: str | None = None,
    timestamp: str | None = None,
) -> EvaluationReport:
    """Run the full pipeline: verify evidence, check, score, decide, audit."""
    if timestamp is None:
        timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    bundle = parse_evidence(pkg, policy)
    results = run_checks(pkg, policy, bundle)
    score, hints = score_details(
        bundle,
        results,
        policy,
        app_id=pkg.manifest.app_id,
        immutable_ref=pkg.manifest.immutable_ref,
    )
    decision = decide(results.values(), score, required_level)
    audit = build_audit_record(
        pkg, policy, results, score, decision, timestamp, environment=environment
    )
    return EvaluationReport(
        package=pkg,
        results=results,
        score=score,
        hints=hints,
        decision=decision,
        completeness=audit.completeness,
        audit=audit,
    )
