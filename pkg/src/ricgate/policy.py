"""Operator trust configuration.

The policy names trusted signer keys by purpose, approved builders and
source repositories, ordered dependency-origin rules, per-app permission
profiles and monitoring declarations, and the assurance level each
deployment environment requires. A loaded TrustPolicy is immutable and
safe to share across concurrent check runs.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from .core import (
    AssuranceLevel,
    Digest,
    PermissionSet,
    SignerIdentity,
    SignerPurpose,
    compute_digest,
)
from .errors import PolicyError, UnknownEnvironmentError

_TOP_LEVEL_KEYS = {
    "signers",
    "approved_builders",
    "approved_source_repos",
    "dependency_rules",
    "permission_profiles",
    "required_levels",
    "monitoring",
}


class RuleAction(Enum):
    ALLOW = "allow"
    DENY = "deny"
    EXCEPTION = "exception"


class DependencyClass(Enum):
    ALLOWED = "allowed"
    DENIED = "denied"
    EXCEPTION = "exception"
    UNKNOWN = "unknown"


_ACTION_CLASSES = {
    RuleAction.ALLOW: DependencyClass.ALLOWED,
    RuleAction.DENY: DependencyClass.DENIED,
    RuleAction.EXCEPTION: DependencyClass.EXCEPTION,
}


@dataclass(frozen=True)
class DependencyRule:
    """Origin-prefix rule; rule order is significant (first match wins)."""

    pattern: str
    action: RuleAction

    def __post_init__(self) -> None:
        if not self.pattern:
            raise ValueError("dependency rule pattern must be non-empty")

    def matches(self, origin: str) -> bool:
        return origin.startswith(self.pattern)


@dataclass(frozen=True)
class TrustPolicy:
    signers: tuple[SignerIdentity, ...]
    approved_builders: Mapping[str, bool]  # builder id -> hardened
    approved_source_repos: frozenset[str]
    dependency_rules: tuple[DependencyRule, ...]
    permission_profiles: Mapping[str, PermissionSet]
    required_levels: Mapping[str, AssuranceLevel]
    monitoring_declared: Mapping[str, bool]

    @property
    def digest(self) -> Digest:
        """Policy identity: digest of the canonical re-serialized document."""
        canonical = json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))
        return compute_digest(canonical.encode("utf-8"))

    def signer(self, key_id: str) -> SignerIdentity | None:
        for s in self.signers:
            if s.key_id == key_id:
                return s
        return None

    def is_trusted_signer(self, key_id: str, purpose: SignerPurpose) -> bool:
        """True iff a signer with that key_id exists and lists that purpose."""
        s = self.signer(key_id)
        return s is not None and purpose in s.purposes

    def classify_dependency(self, origin: str | None) -> DependencyClass:
        """Classify a component origin against the ordered rules.

        An absent origin and an origin matched by no rule are both unknown;
        otherwise the first rule whose pattern is a prefix of the origin
        decides the class.
        """
        if origin is None:
            return DependencyClass.UNKNOWN
        for rule in self.dependency_rules:
            if rule.matches(origin):
                return _ACTION_CLASSES[rule.action]
        return DependencyClass.UNKNOWN

    def required_level(self, environment: str) -> AssuranceLevel:
        """The assurance level an environment requires; never defaults."""
        try:
            return self.required_levels[environment]
        except KeyError:
            raise UnknownEnvironmentError(
                f"no required assurance level configured for environment {environment!r}"
            ) from None

    def to_document(self) -> dict[str, Any]:
        """Re-serialize to the policy document form accepted by load_policy."""
        return {
            "signers": [
                {
                    "key_id": s.key_id,
                    "public_key": base64.b64encode(s.public_key).decode("ascii"),
                    "purposes": sorted(p.value for p in s.purposes),
                }
                for s in self.signers
            ],
            "approved_builders": [
                {"id": builder_id, "hardened": hardened}
                for builder_id, hardened in sorted(self.approved_builders.items())
            ],
            "approved_source_repos": sorted(self.approved_source_repos),
            "dependency_rules": [
                {"pattern": r.pattern, "action": r.action.value} for r in self.dependency_rules
            ],
            "permission_profiles": {
                app: profile.sorted() for app, profile in sorted(self.permission_profiles.items())
            },
            "required_levels": {
                env: int(level) for env, level in sorted(self.required_levels.items())
            },
            "monitoring": dict(sorted(self.monitoring_declared.items())),
        }


def _fail(message: str) -> None:
    raise PolicyError(f"policy-invalid: {message}")


def _expect(value: Any, kind: type, what: str) -> Any:
    if not isinstance(value, kind):
        _fail(f"{what} must be {kind.__name__}, got {type(value).__name__}")
    return value


def _parse_signer(entry: Any, seen_ids: set[str]) -> SignerIdentity:
    entry = _expect(entry, dict, "signer entry")
    unknown = set(entry) - {"key_id", "public_key", "purposes"}
    if unknown:
        _fail(f"signer entry has unexpected fields {sorted(unknown)}")
    key_id = _expect(entry.get("key_id"), str, "signer key_id")
    if key_id in seen_ids:
        _fail(f"duplicate signer key_id {key_id!r}")
    seen_ids.add(key_id)
    raw_key = _expect(entry.get("public_key"), str, "signer public_key")
    try:
        public_key = base64.b64decode(raw_key, validate=True)
    except Exception:
        _fail(f"signer {key_id!r} public_key is not valid base64")
    purposes = _expect(entry.get("purposes"), list, "signer purposes")
    parsed_purposes = set()
    for p in purposes:
        try:
            parsed_purposes.add(SignerPurpose(p))
        except ValueError:
            _fail(f"signer {key_id!r} has unknown purpose {p!r}")
    try:
        return SignerIdentity(key_id, public_key, frozenset(parsed_purposes))
    except ValueError as exc:
        _fail(str(exc))
    raise AssertionError("unreachable")


def load_policy(document: Mapping[str, Any]) -> TrustPolicy:
    """Validate a policy document and build an immutable TrustPolicy.

    The policy identity digest is computed over the canonical (sorted,
    compact) JSON form, so textual reformatting does not change identity.
    """
    document = _expect(document, dict, "policy document")
    unknown = set(document) - _TOP_LEVEL_KEYS
    if unknown:
        _fail(f"unexpected top-level keys {sorted(unknown)}")

    seen_ids: set[str] = set()
    signers = tuple(
        _parse_signer(entry, seen_ids)
        for entry in _expect(document.get("signers", []), list, "signers")
    )

    builders: dict[str, bool] = {}
    for entry in _expect(document.get("approved_builders", []), list, "approved_builders"):
        entry = _expect(entry, dict, "builder entry")
        unknown = set(entry) - {"id", "hardened"}
        if unknown:
            _fail(f"builder entry has unexpected fields {sorted(unknown)}")
        builder_id = _expect(entry.get("id"), str, "builder id")
        if not builder_id:
            _fail("builder id must be non-empty")
        if builder_id in builders:
            _fail(f"duplicate builder id {builder_id!r}")
        builders[builder_id] = bool(_expect(entry.get("hardened", False), bool, "builder hardened"))

    repos = frozenset(
        _expect(r, str, "source repo")
        for r in _expect(document.get("approved_source_repos", []), list, "approved_source_repos")
    )

    rules = []
    for entry in _expect(document.get("dependency_rules", []), list, "dependency_rules"):
        entry = _expect(entry, dict, "dependency rule")
        unknown = set(entry) - {"pattern", "action"}
        if unknown:
            _fail(f"dependency rule has unexpected fields {sorted(unknown)}")
        pattern = _expect(entry.get("pattern"), str, "rule pattern")
        action_raw = _expect(entry.get("action"), str, "rule action")
        try:
            action = RuleAction(action_raw)
        except ValueError:
            _fail(f"unknown dependency rule action {action_raw!r}")
        try:
            rules.append(DependencyRule(pattern, action))
        except ValueError as exc:
            _fail(str(exc))

    profiles: dict[str, PermissionSet] = {}
    raw_profiles = _expect(document.get("permission_profiles", {}), dict, "permission_profiles")
    for app_id, caps in raw_profiles.items():
        caps = _expect(caps, list, f"permission profile for {app_id!r}")
        try:
            profiles[app_id] = PermissionSet.from_iterable(
                _expect(c, str, "capability") for c in caps
            )
        except ValueError as exc:
            _fail(str(exc))

    levels: dict[str, AssuranceLevel] = {}
    raw_levels = _expect(document.get("required_levels", {}), dict, "required_levels")
    for env, value in raw_levels.items():
        if not isinstance(value, int) or isinstance(value, bool):
            _fail(f"required level for {env!r} must be an integer")
        try:
            levels[env] = AssuranceLevel(value)
        except ValueError:
            _fail(f"required level for {env!r} must be within 0..3, got {value}")

    monitoring: dict[str, bool] = {}
    raw_monitoring = _expect(document.get("monitoring", {}), dict, "monitoring")
    for app_id, declared in raw_monitoring.items():
        monitoring[app_id] = bool(_expect(declared, bool, f"monitoring flag for {app_id!r}"))

    return TrustPolicy(
        signers=signers,
        approved_builders=builders,
        approved_source_repos=repos,
        dependency_rules=tuple(rules),
        permission_profiles=profiles,
        required_levels=levels,
        monitoring_declared=monitoring,
    )


def load_policy_file(path: str | Path) -> TrustPolicy:
    """Load a policy from a JSON file on disk."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise PolicyError(f"policy-invalid: cannot read {path}: {exc}") from exc
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise PolicyError(f"policy-invalid: {path} is not valid JSON: {exc}") from exc
    return load_policy(document)
