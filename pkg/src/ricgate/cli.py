"""Operator-facing command line.

Wires the pipeline: submission package -> evidence verification -> checks ->
assurance score -> Accept / Escalate / Block. Exit codes: 0 accept,
3 escalate, 4 block, 2 for usage, configuration, or unreadable inputs —
"cannot evaluate" is never reported as a verdict.
"""

from __future__ import annotations

import json
import sys
from datetime import datetime
from pathlib import Path
from typing import NoReturn

import click

from . import corpus as corpus_mod
from .checks import CheckOutcome
from .core import EvidenceFamily
from .engine import EvaluationReport, Verdict, evaluate_package
from .errors import GateError
from .policy import TrustPolicy, load_policy_file
from .submission import load_package

VERDICT_EXIT_CODES = {Verdict.ACCEPT: 0, Verdict.ESCALATE: 3, Verdict.BLOCK: 4}


def _fail(message: str) -> NoReturn:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load_inputs(policy_path: str, package_path: str, environment: str):
    try:
        policy = load_policy_file(policy_path)
        pkg = load_package(package_path)
        required = policy.required_level(environment)
    except GateError as exc:
        _fail(str(exc))
    return policy, pkg, required


def _validated_timestamp(value: str | None) -> str | None:
    if value is None:
        return None
    try:
        datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError:
        _fail(f"timestamp {value!r} is not ISO 8601")
    return value


def _render_check_report(report: EvaluationReport, environment: str) -> str:
    decision = report.decision
    lines = [
        f"verdict: {decision.verdict.value}",
        f"required level: {int(decision.required_level)} ({environment})",
        "combined level: {} [ssdf={} sbom={} provenance={}]".format(
            int(report.score.combined),
            int(report.score.ssdf_level),
            int(report.score.sbom_level),
            int(report.score.provenance_level),
        ),
        "completeness: {}/{} ({:.3f})".format(
            len(report.completeness.present_and_parseable & report.completeness.required),
            len(report.completeness.required),
            float(report.completeness.fraction),
        ),
        "checks:",
    ]
    for check_id, result in report.results.items():
        lines.append(f"  {check_id.value:<25} {result.outcome.value}")
        if result.outcome is not CheckOutcome.PASS:
            for reason in result.reasons:
                lines.append(f"    - {reason}")
            for tag in result.threat_tags:
                lines.append(f"    threat: [{tag.stage.value}] {tag.label}")
    if decision.triggering_reasons:
        lines.append("triggering reasons:")
        for reason in decision.triggering_reasons:
            lines.append(f"  - {reason}")
    return "\n".join(lines)


@click.group()
def main() -> None:
    """Supply-chain evidence gate for application onboarding."""


@main.command()
@click.option("--policy", "policy_path", required=True, type=click.Path(exists=True))
@click.option("--package", "package_path", required=True, type=click.Path(exists=True))
@click.option("--env", "environment", required=True)
@click.option(
    "--format", "output_format", type=click.Choice(["human", "json"]), default="human"
)
@click.option("--audit-out", "audit_out", type=click.Path(), default=None)
@click.option("--timestamp", default=None, help="Pin the audit timestamp (ISO 8601).")
def check(
    policy_path: str,
    package_path: str,
    environment: str,
    output_format: str,
    audit_out: str | None,
    timestamp: str | None,
) -> None:
    """Evaluate a submission package and exit with the verdict."""
    timestamp = _validated_timestamp(timestamp)
    policy, pkg, required = _load_inputs(policy_path, package_path, environment)
    report = evaluate_package(
        pkg, policy, required_level=required, environment=environment, timestamp=timestamp
    )
    if output_format == "json":
        click.echo(report.audit.to_json(), nl=False)
    else:
        click.echo(_render_check_report(report, environment))
    if audit_out:
        Path(audit_out).write_text(report.audit.to_json(), encoding="utf-8")
    sys.exit(VERDICT_EXIT_CODES[report.decision.verdict])


@main.command()
@click.option("--policy", "policy_path", required=True, type=click.Path(exists=True))
@click.option("--package", "package_path", required=True, type=click.Path(exists=True))
@click.option("--env", "environment", required=True)
@click.option(
    "--format", "output_format", type=click.Choice(["human", "json"]), default="human"
)
def score(
    policy_path: str, package_path: str, environment: str, output_format: str
) -> None:
    """Report per-family assurance levels and what the next level needs."""
    policy, pkg, required = _load_inputs(policy_path, package_path, environment)
    report = evaluate_package(pkg, policy, required_level=required, environment=environment)
    if output_format == "json":
        payload = {
            "score": report.score.as_dict(),
            "required_level": int(required),
            "next_level_needs": {
                family.value: hints for family, hints in report.hints.items()
            },
        }
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
        return
    click.echo(f"required level ({environment}): {int(required)}")
    for family in EvidenceFamily:
        level = {
            EvidenceFamily.SSDF: report.score.ssdf_level,
            EvidenceFamily.SBOM: report.score.sbom_level,
            EvidenceFamily.PROVENANCE: report.score.provenance_level,
        }[family]
        click.echo(f"{family.value:<11} level {int(level)}")
        hints = report.hints[family]
        if hints:
            click.echo(f"  to reach level {min(int(level) + 1, 3)}:")
            for hint in hints:
                click.echo(f"    - {hint}")
    click.echo(f"combined    level {int(report.score.combined)}")


@main.group()
def policy() -> None:
    """Trust policy utilities."""


@policy.command("validate")
@click.option("--policy", "policy_path", required=True, type=click.Path(exists=True))
def policy_validate(policy_path: str) -> None:
    """Validate a policy document."""
    try:
        loaded: TrustPolicy = load_policy_file(policy_path)
    except GateError as exc:
        _fail(str(exc))
    click.echo(
        f"policy OK: {len(loaded.signers)} signers, "
        f"{len(loaded.required_levels)} environments, digest {loaded.digest.hex[:16]}"
    )


@main.group()
def corpus() -> None:
    """Scenario corpus generation and metrics."""


@corpus.command("generate")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--seed", default=1, show_default=True, type=int)
def corpus_generate(out_dir: str, seed: int) -> None:
    """Write the bundled scenario corpus (clean plus adversarial variants)."""
    try:
        scenarios = corpus_mod.generate_corpus(out_dir, seed)
    except OSError as exc:
        _fail(f"cannot write corpus: {exc}")
    for s in scenarios:
        expected = ", ".join(
            f"L{int(level)}={verdict.value}"
            for level, verdict in sorted(s.expected_verdict_by_level.items())
        )
        click.echo(f"{s.name:<30} env={s.environment:<11} expect {expected}")
    click.echo(f"corpus written to {out_dir}")


@corpus.command("run")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--policy", "policy_path", default=None, type=click.Path(exists=True))
@click.option(
    "--format", "output_format", type=click.Choice(["human", "json"]), default="human"
)
@click.option(
    "--reviewer-verdicts",
    "reviewer_path",
    default=None,
    type=click.Path(exists=True),
    help="JSON file mapping package name to an externally reviewed verdict.",
)
def corpus_run(
    corpus_dir: str, policy_path: str | None, output_format: str, reviewer_path: str | None
) -> None:
    """Run the gate over a corpus and print the metrics report."""
    reviewer_verdicts = None
    if reviewer_path is not None:
        try:
            reviewer_verdicts = json.loads(Path(reviewer_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            _fail(f"cannot read reviewer verdicts: {exc}")
        if not isinstance(reviewer_verdicts, dict):
            _fail("reviewer verdicts must be a JSON object of package name to verdict")
    try:
        loaded = load_policy_file(policy_path) if policy_path else None
        metrics = corpus_mod.run_corpus(
            corpus_dir, loaded, reviewer_verdicts=reviewer_verdicts
        )
    except GateError as exc:
        _fail(str(exc))
    if output_format == "json":
        click.echo(json.dumps(metrics.to_dict(), indent=2, sort_keys=True))
    else:
        click.echo(metrics.render_table(), nl=False)


if __name__ == "__main__":
    main()
