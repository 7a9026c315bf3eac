"""Supply-chain evidence gate for RIC application onboarding.

Verifies submission-package evidence (signatures, SBOMs, provenance,
practice attestations, permissions), scores it against a four-level
assurance profile, and emits auditable Accept / Escalate / Block decisions.
"""

from .attestation import (
    Provenance,
    SignatureEnvelope,
    SsdfAttestation,
    extract_provenance,
    extract_ssdf,
    parse_envelope,
    sign_envelope,
    verify_envelope,
)
from .checks import (
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
    Digest,
    EvidenceFamily,
    PermissionSet,
    SignerIdentity,
    SignerPurpose,
    ThreatTag,
    Version,
    compare_versions,
    compute_digest,
    is_subset,
)
from .engine import (
    AssuranceScore,
    AuditRecord,
    EvaluationReport,
    GateDecision,
    Verdict,
    combined_level,
    decide,
    evaluate_package,
    score_families,
)
from .errors import (
    EvidenceError,
    GateError,
    PackageError,
    PolicyError,
    SbomError,
    UnknownEnvironmentError,
)
from .policy import DependencyClass, DependencyRule, TrustPolicy, load_policy, load_policy_file
from .sbom import Component, ExceptionDoc, ScanReport, parse_exceptions, parse_sbom, parse_scan_report
from .submission import (
    CompletenessReport,
    EvidenceKind,
    SubmissionManifest,
    SubmissionPackage,
    completeness,
    load_package,
)

__version__ = "0.1.0"

__all__ = [
    "AssuranceLevel",
    "AssuranceScore",
    "AuditRecord",
    "CheckId",
    "CheckOutcome",
    "CheckResult",
    "CompletenessReport",
    "Component",
    "DependencyClass",
    "DependencyRule",
    "Digest",
    "EvaluationReport",
    "EvidenceError",
    "EvidenceFamily",
    "EvidenceKind",
    "ExceptionDoc",
    "GateDecision",
    "GateError",
    "PackageError",
    "PermissionSet",
    "PolicyError",
    "Provenance",
    "SbomError",
    "ScanReport",
    "SignatureEnvelope",
    "SignerIdentity",
    "SignerPurpose",
    "SsdfAttestation",
    "SubmissionManifest",
    "SubmissionPackage",
    "ThreatTag",
    "TrustPolicy",
    "UnknownEnvironmentError",
    "Verdict",
    "Version",
    "check_anti_rollback",
    "check_artifact_integrity",
    "check_build_provenance",
    "check_dependency_transparency",
    "check_runtime_binding",
    "combined_level",
    "compare_versions",
    "completeness",
    "compute_digest",
    "decide",
    "evaluate_package",
    "extract_provenance",
    "extract_ssdf",
    "is_subset",
    "load_package",
    "load_policy",
    "load_policy_file",
    "parse_envelope",
    "parse_exceptions",
    "parse_sbom",
    "parse_scan_report",
    "score_families",
    "sign_envelope",
    "verify_envelope",
]
