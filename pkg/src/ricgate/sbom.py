"""SBOM, scan-report, and exception-document parsing.

Two SBOM encodings are read and normalized to one component list:

- SPDX JSON subset: top-level ``spdxVersion`` plus ``packages[]`` entries
  with ``name``, ``versionInfo``, and an optional purl external reference.
- CycloneDX JSON subset: top-level ``bomFormat: "CycloneDX"`` plus
  ``components[]`` entries with ``name``, ``version``, optional ``purl``.

Both are industry formats, so unknown fields are ignored; the scan report
and exception document are project-defined schemas and are parsed strictly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

from .errors import EvidenceError, SbomError


@dataclass(frozen=True)
class Component:
    """One normalized software component; origin is a package-URL when known."""

    name: str
    version: str
    origin: str | None = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("component name must be non-empty")

    def sort_key(self) -> tuple[str, str, str]:
        return (self.name, self.version, self.origin or "")


def normalize_components(components: Iterable[Component]) -> tuple[Component, ...]:
    """Sort by (name, version, origin) and drop duplicates."""
    return tuple(sorted(set(components), key=Component.sort_key))


def _load_json(raw: bytes, error: type[EvidenceError], what: str) -> Any:
    try:
        return json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise error(f"{what}: invalid JSON: {exc}") from exc


def _component_field(entry: dict, key: str, index: int) -> str:
    value = entry.get(key)
    if not isinstance(value, str) or not value:
        raise SbomError(f"sbom-unparseable: entry {index} missing {key}")
    return value


def _parse_spdx(doc: dict) -> list[Component]:
    packages = doc.get("packages")
    if not isinstance(packages, list):
        raise SbomError("sbom-unparseable: SPDX document has no packages list")
    components = []
    for i, pkg in enumerate(packages):
        if not isinstance(pkg, dict):
            raise SbomError(f"sbom-unparseable: package {i} is not an object")
        name = _component_field(pkg, "name", i)
        version = _component_field(pkg, "versionInfo", i)
        origin = None
        refs = pkg.get("externalRefs", [])
        if not isinstance(refs, list):
            raise SbomError(f"sbom-unparseable: package {i} externalRefs is not a list")
        for ref in refs:
            if isinstance(ref, dict) and ref.get("referenceType") == "purl":
                locator = ref.get("referenceLocator")
                if not isinstance(locator, str) or not locator:
                    raise SbomError(f"sbom-unparseable: package {i} purl reference is empty")
                origin = locator
                break
        components.append(Component(name, version, origin))
    return components


def _parse_cyclonedx(doc: dict) -> list[Component]:
    entries = doc.get("components")
    if not isinstance(entries, list):
        raise SbomError("sbom-unparseable: CycloneDX document has no components list")
    components = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict):
            raise SbomError(f"sbom-unparseable: component {i} is not an object")
        name = _component_field(entry, "name", i)
        version = _component_field(entry, "version", i)
        origin = entry.get("purl")
        if origin is not None and (not isinstance(origin, str) or not origin):
            raise SbomError(f"sbom-unparseable: component {i} purl must be a non-empty string")
        components.append(Component(name, version, origin))
    return components


def parse_sbom(raw: bytes) -> tuple[Component, ...]:
    """Auto-detect the SBOM format and return the normalized component list."""
    doc = _load_json(raw, SbomError, "sbom-unparseable")
    if not isinstance(doc, dict):
        raise SbomError("sbom-unparseable: document root must be an object")
    if doc.get("bomFormat") == "CycloneDX":
        components = _parse_cyclonedx(doc)
    elif "spdxVersion" in doc:
        components = _parse_spdx(doc)
    else:
        raise SbomError("sbom-unparseable: neither SPDX nor CycloneDX markers found")
    return normalize_components(components)


class Severity(Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"
    CRITICAL = "critical"


@dataclass(frozen=True)
class ScanFinding:
    component_name: str
    severity: Severity
    finding_id: str


@dataclass(frozen=True)
class ScanReport:
    findings: tuple[ScanFinding, ...]

    def __post_init__(self) -> None:
        ids = [f.finding_id for f in self.findings]
        if len(ids) != len(set(ids)):
            raise ValueError("scan report finding_id values must be unique")

    def high_or_critical(self) -> tuple[ScanFinding, ...]:
        return tuple(
            f for f in self.findings if f.severity in (Severity.HIGH, Severity.CRITICAL)
        )


class ExceptionStatus(Enum):
    NOT_AFFECTED = "not_affected"
    ACCEPTED_RISK = "accepted_risk"


@dataclass(frozen=True)
class ExceptionEntry:
    finding_id: str
    status: ExceptionStatus
    justification: str


@dataclass(frozen=True)
class ExceptionDoc:
    entries: tuple[ExceptionEntry, ...]

    def __post_init__(self) -> None:
        ids = [e.finding_id for e in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("exception document finding_id values must be unique")

    def covers(self, finding_id: str) -> bool:
        return any(e.finding_id == finding_id for e in self.entries)


def _strict_object(value: Any, allowed: set[str], what: str) -> dict:
    if not isinstance(value, dict):
        raise EvidenceError(f"evidence-unparseable: {what} must be an object")
    unknown = set(value) - allowed
    if unknown:
        raise EvidenceError(f"evidence-unparseable: {what} has unexpected fields {sorted(unknown)}")
    missing = allowed - set(value)
    if missing:
        raise EvidenceError(f"evidence-unparseable: {what} missing fields {sorted(missing)}")
    return value


def parse_scan_report(raw: bytes) -> ScanReport:
    """Parse a vulnerability scan report; every field is required."""
    doc = _load_json(raw, EvidenceError, "evidence-unparseable: scan report")
    doc = _strict_object(doc, {"findings"}, "scan report")
    if not isinstance(doc["findings"], list):
        raise EvidenceError("evidence-unparseable: scan report findings must be a list")
    findings = []
    for i, entry in enumerate(doc["findings"]):
        entry = _strict_object(
            entry, {"component_name", "severity", "finding_id"}, f"scan finding {i}"
        )
        try:
            severity = Severity(entry["severity"])
        except ValueError:
            raise EvidenceError(
                f"evidence-unparseable: scan finding {i} has unknown severity "
                f"{entry['severity']!r}"
            ) from None
        if not isinstance(entry["component_name"], str) or not isinstance(
            entry["finding_id"], str
        ):
            raise EvidenceError(f"evidence-unparseable: scan finding {i} fields must be strings")
        findings.append(ScanFinding(entry["component_name"], severity, entry["finding_id"]))
    try:
        return ScanReport(tuple(findings))
    except ValueError as exc:
        raise EvidenceError(f"evidence-unparseable: {exc}") from exc


def parse_exceptions(raw: bytes) -> ExceptionDoc:
    """Parse a VEX-style exception document; every field is required."""
    doc = _load_json(raw, EvidenceError, "evidence-unparseable: exception document")
    doc = _strict_object(doc, {"entries"}, "exception document")
    if not isinstance(doc["entries"], list):
        raise EvidenceError("evidence-unparseable: exception entries must be a list")
    entries = []
    for i, entry in enumerate(doc["entries"]):
        entry = _strict_object(
            entry, {"finding_id", "status", "justification"}, f"exception entry {i}"
        )
        try:
            status = ExceptionStatus(entry["status"])
        except ValueError:
            raise EvidenceError(
                f"evidence-unparseable: exception entry {i} has unknown status "
                f"{entry['status']!r}"
            ) from None
        if not isinstance(entry["finding_id"], str) or not isinstance(
            entry["justification"], str
        ):
            raise EvidenceError(f"evidence-unparseable: exception entry {i} fields must be strings")
        entries.append(ExceptionEntry(entry["finding_id"], status, entry["justification"]))
    try:
        return ExceptionDoc(tuple(entries))
    except ValueError as exc:
        raise EvidenceError(f"evidence-unparseable: {exc}") from exc
