from __future__ import annotations

import dataclasses
import itertools
import json

import pytest

from ricgate.checks import CheckId, CheckOutcome, CheckResult
from ricgate.core import AssuranceLevel, EvidenceFamily, LifecycleStage, ThreatTag
from ricgate.corpus import APP_ID, HARDENED_BUILDER_ID, write_package
from ricgate.engine import (
    AssuranceScore,
    GateDecision,
    Verdict,
    combined_level,
    decide,
    evaluate_package,
    parse_evidence,
    run_checks,
    score_families,
)
from ricgate.submission import EvidenceKind, load_package

_RANK = {Verdict.BLOCK: 0, Verdict.ESCALATE: 1, Verdict.ACCEPT: 2}
_UPGRADE = {CheckOutcome.FAIL: CheckOutcome.ESCALATE, CheckOutcome.ESCALATE: CheckOutcome.PASS}

_RESULT_CACHE: dict[tuple[CheckId, CheckOutcome], CheckResult] = {}


def _result(check_id: CheckId, outcome: CheckOutcome) -> CheckResult:
    key = (check_id, outcome)
    if key not in _RESULT_CACHE:
        reasons = () if outcome is CheckOutcome.PASS else ("synthetic",)
        tags = (
            ()
            if outcome is CheckOutcome.PASS
            else (ThreatTag(LifecycleStage.ONBOARD, "weak evidence checks"),)
        )
        _RESULT_CACHE[key] = CheckResult(check_id, outcome, reasons, tags, ())
    return _RESULT_CACHE[key]


def _score(levels: tuple[int, int, int]) -> AssuranceScore:
    return AssuranceScore.from_family_levels(
        AssuranceLevel(levels[0]), AssuranceLevel(levels[1]), AssuranceLevel(levels[2])
    )


class TestCombinedLevel:
    def test_matches_min_oracle_for_all_64_triples(self):
        for a, b, c in itertools.product(range(4), repeat=3):
            expected = min(a, b, c)  # brute-force oracle
            got = combined_level(AssuranceLevel(a), AssuranceLevel(b), AssuranceLevel(c))
            assert int(got) == expected

    def test_examples(self):
        assert combined_level(AssuranceLevel.L2, AssuranceLevel.L2, AssuranceLevel.L2) == 2
        assert combined_level(AssuranceLevel.L3, AssuranceLevel.L3, AssuranceLevel.L0) == 0
        assert combined_level(AssuranceLevel.L0, AssuranceLevel.L0, AssuranceLevel.L0) == 0


class TestDecide:
    def test_all_pass_at_required_level_accepts(self):
        results = [_result(c, CheckOutcome.PASS) for c in CheckId]
        decision = decide(results, _score((2, 2, 2)), AssuranceLevel.L2)
        assert decision.verdict is Verdict.ACCEPT
        assert decision.triggering_reasons == ()

    def test_artifact_failure_blocks(self):
        results = [
            _result(c, CheckOutcome.FAIL if c is CheckId.ARTIFACT_INTEGRITY else CheckOutcome.PASS)
            for c in CheckId
        ]
        decision = decide(results, _score((2, 2, 2)), AssuranceLevel.L2)
        assert decision.verdict is Verdict.BLOCK

    def test_single_escalation_escalates(self):
        results = [
            _result(
                c,
                CheckOutcome.ESCALATE
                if c is CheckId.DEPENDENCY_TRANSPARENCY
                else CheckOutcome.PASS,
            )
            for c in CheckId
        ]
        decision = decide(results, _score((2, 2, 2)), AssuranceLevel.L2)
        assert decision.verdict is Verdict.ESCALATE

    def test_level_shortfall_blocks_even_when_all_checks_pass(self):
        results = [_result(c, CheckOutcome.PASS) for c in CheckId]
        decision = decide(results, _score((2, 1, 2)), AssuranceLevel.L2)
        assert decision.verdict is Verdict.BLOCK
        assert any("below required" in r for r in decision.triggering_reasons)

    def test_block_dominates_escalate(self):
        results = [
            _result(CheckId.ARTIFACT_INTEGRITY, CheckOutcome.FAIL),
            _result(CheckId.DEPENDENCY_TRANSPARENCY, CheckOutcome.ESCALATE),
            _result(CheckId.BUILD_PROVENANCE, CheckOutcome.PASS),
            _result(CheckId.RUNTIME_BINDING, CheckOutcome.PASS),
            _result(CheckId.ANTI_ROLLBACK, CheckOutcome.PASS),
        ]
        assert decide(results, _score((2, 2, 2)), AssuranceLevel.L2).verdict is Verdict.BLOCK

    def test_exhaustive_decision_space(self):
        """Over all 3^5 x 4^3 x 4 points: accept implies no fail/escalate and
        combined >= required; upgrading any check or raising any family never
        moves the verdict away from accept."""
        outcome_combos = list(itertools.product(list(CheckOutcome), repeat=len(CheckId)))
        level_triples = list(itertools.product(range(4), repeat=3))
        scores = {t: _score(t) for t in level_triples}
        check_ids = list(CheckId)

        for combo in outcome_combos:
            results = [_result(c, o) for c, o in zip(check_ids, combo)]
            any_fail = CheckOutcome.FAIL in combo
            any_escalate = CheckOutcome.ESCALATE in combo
            for triple in level_triples:
                score = scores[triple]
                for required in range(4):
                    required_level = AssuranceLevel(required)
                    decision = decide(results, score, required_level)
                    if decision.verdict is Verdict.ACCEPT:
                        assert not any_fail and not any_escalate
                        assert score.combined >= required_level

                    # upgrade one check outcome
                    for i, outcome in enumerate(combo):
                        if outcome is CheckOutcome.PASS:
                            continue
                        upgraded = list(results)
                        upgraded[i] = _result(check_ids[i], _UPGRADE[outcome])
                        better = decide(upgraded, score, required_level)
                        assert _RANK[better.verdict] >= _RANK[decision.verdict]

                    # raise one family level
                    for i in range(3):
                        if triple[i] == 3:
                            continue
                        raised = list(triple)
                        raised[i] += 1
                        better = decide(results, scores[tuple(raised)], required_level)
                        assert _RANK[better.verdict] >= _RANK[decision.verdict]


class TestGateDecisionInvariants:
    def test_accept_requires_combined_at_or_above_required(self):
        with pytest.raises(ValueError):
            GateDecision(Verdict.ACCEPT, AssuranceLevel.L2, _score((1, 1, 1)), ())

    def test_accept_carries_no_reasons(self):
        with pytest.raises(ValueError):
            GateDecision(Verdict.ACCEPT, AssuranceLevel.L1, _score((2, 2, 2)), ("why",))

    def test_score_invariant(self):
        with pytest.raises(ValueError):
            AssuranceScore(
                AssuranceLevel.L2, AssuranceLevel.L2, AssuranceLevel.L2, AssuranceLevel.L1
            )


class TestScoreFamilies:
    def test_complete_level_two_fixture(self, clean_package, bundled_policy):
        report = evaluate_package(clean_package, bundled_policy, required_level=AssuranceLevel.L2)
        assert report.score.as_dict() == {"ssdf": 2, "sbom": 2, "provenance": 2, "combined": 2}

    def test_no_sbom_zeroes_the_family_regardless_of_others(
        self, clean_package, bundled_policy
    ):
        evidence = {
            k: v for k, v in clean_package.evidence.items() if k is not EvidenceKind.SBOM
        }
        pkg = dataclasses.replace(clean_package, evidence=evidence)
        report = evaluate_package(pkg, bundled_policy, required_level=AssuranceLevel.L2)
        assert report.score.sbom_level is AssuranceLevel.L0
        assert report.score.ssdf_level is AssuranceLevel.L2
        assert report.score.provenance_level is AssuranceLevel.L2
        assert report.score.combined is AssuranceLevel.L0

    def test_level_one_fixture(self, tmp_path, corpus_keys, bundled_policy):
        # signed artifact + immutable ref + SBOM + scan + SDLC/review
        # attestation, nothing more; app has no monitoring declaration
        root = write_package(
            tmp_path / "l1",
            corpus_keys,
            app_id="xapp-l1",
            artifact=b"level one artifact",
            ssdf_practices=("documented-sdlc-policy", "code-review"),
            builder_id=None,
            policy_snapshot=False,
            registry_versions=None,
        )
        pkg = load_package(root)
        report = evaluate_package(pkg, bundled_policy, required_level=AssuranceLevel.L1)
        assert report.score.as_dict() == {"ssdf": 1, "sbom": 1, "provenance": 1, "combined": 1}

    def test_level_three_capable_package(self, tmp_path, corpus_keys, bundled_policy):
        root = write_package(
            tmp_path / "l3",
            corpus_keys,
            artifact=b"level three artifact",
            ssdf_practices=(
                "documented-sdlc-policy",
                "code-review",
                "protected-ci",
                "release-controls",
                "separation-of-duties",
                "hardened-runners",
            ),
            builder_id=HARDENED_BUILDER_ID,
            hardened=True,
            exception_entries=(),
        )
        pkg = load_package(root)
        report = evaluate_package(pkg, bundled_policy, required_level=AssuranceLevel.L2)
        assert report.score.as_dict() == {"ssdf": 3, "sbom": 3, "provenance": 3, "combined": 3}
        assert report.decision.verdict is Verdict.ACCEPT

    def test_attested_hardened_alone_does_not_reach_level_three(
        self, tmp_path, corpus_keys, bundled_policy
    ):
        # the policy does not mark this builder hardened, so the attested
        # flag alone is not enough
        root = write_package(
            tmp_path / "l3-claim",
            corpus_keys,
            artifact=b"claimed hardened",
            ssdf_practices=(
                "documented-sdlc-policy",
                "code-review",
                "protected-ci",
                "release-controls",
                "separation-of-duties",
                "hardened-runners",
            ),
            hardened=True,
            exception_entries=(),
        )
        pkg = load_package(root)
        report = evaluate_package(pkg, bundled_policy, required_level=AssuranceLevel.L2)
        assert report.score.provenance_level is AssuranceLevel.L2

    def test_family_levels_monotone_in_evidence(self, tmp_path, corpus_keys, bundled_policy):
        steps = [
            {"components": None, "scan_findings": None, "ssdf_practices": None,
             "builder_id": None, "policy_snapshot": False, "registry_versions": None},
            {"scan_findings": None, "ssdf_practices": None, "builder_id": None,
             "policy_snapshot": False, "registry_versions": None},
            {"ssdf_practices": None, "builder_id": None, "policy_snapshot": False,
             "registry_versions": None},
            {"builder_id": None, "policy_snapshot": False, "registry_versions": None},
            {"policy_snapshot": False, "registry_versions": None},
            {"registry_versions": None},
            {},
            {"exception_entries": ()},
        ]
        previous = {f: AssuranceLevel.L0 for f in EvidenceFamily}
        for i, kwargs in enumerate(steps):
            root = write_package(
                tmp_path / f"step{i}", corpus_keys, artifact=b"monotone artifact", **kwargs
            )
            pkg = load_package(root)
            bundle = parse_evidence(pkg, bundled_policy)
            results = run_checks(pkg, bundled_policy, bundle)
            score = score_families(
                bundle, results, bundled_policy, app_id=APP_ID, immutable_ref=True
            )
            current = {
                EvidenceFamily.SSDF: score.ssdf_level,
                EvidenceFamily.SBOM: score.sbom_level,
                EvidenceFamily.PROVENANCE: score.provenance_level,
            }
            for family in EvidenceFamily:
                assert current[family] >= previous[family], f"step {i}, {family}"
            previous = current


class TestAuditRecord:
    TIMESTAMP = "2026-08-09T00:00:00+00:00"

    def test_two_runs_are_byte_identical(self, clean_package, bundled_policy):
        first = evaluate_package(
            clean_package,
            bundled_policy,
            required_level=AssuranceLevel.L2,
            timestamp=self.TIMESTAMP,
        )
        second = evaluate_package(
            clean_package,
            bundled_policy,
            required_level=AssuranceLevel.L2,
            timestamp=self.TIMESTAMP,
        )
        assert first.audit.to_json().encode() == second.audit.to_json().encode()

    def test_clean_accept_record_shape(self, clean_package, bundled_policy):
        report = evaluate_package(
            clean_package,
            bundled_policy,
            required_level=AssuranceLevel.L2,
            timestamp=self.TIMESTAMP,
        )
        record = json.loads(report.audit.to_json())
        assert record["decision"]["verdict"] == "accept"
        assert [c["outcome"] for c in record["checks"]] == ["pass"] * 5
        assert record["policy_digest"] == bundled_policy.digest.hex
        assert record["control_annotations"] == {}
        assert set(record["evidence_digests"]) == {
            "artifact",
            *(k.value for k in clean_package.evidence),
        }
        assert record["submitter_supplied"] == ["policy_snapshot", "registry_log"]

    def test_tampered_run_carries_tag_and_control_line(self, corpus_dir, bundled_policy):
        pkg = load_package(corpus_dir / "tampered_update")
        report = evaluate_package(
            pkg, bundled_policy, required_level=AssuranceLevel.L2, timestamp=self.TIMESTAMP
        )
        record = json.loads(report.audit.to_json())
        integrity = next(
            c for c in record["checks"] if c["check_id"] == "artifact_integrity"
        )
        assert {"stage": "update", "label": "tampered update"} in integrity["threat_tags"]
        annotation = record["control_annotations"]["artifact_integrity"]
        assert annotation["threat"] == "Signing / registry compromise"
        assert "Protected signing keys" in annotation["controls"]

    def test_accept_implies_combined_at_least_required_on_corpus(
        self, corpus_dir, scenarios, bundled_policy
    ):
        for scenario in scenarios.values():
            pkg = load_package(scenario.package_root)
            for level in range(4):
                report = evaluate_package(
                    pkg, bundled_policy, required_level=AssuranceLevel(level)
                )
                if report.decision.verdict is Verdict.ACCEPT:
                    assert report.score.combined >= AssuranceLevel(level)

    def test_every_non_pass_check_carries_reason_and_tag_on_corpus(
        self, scenarios, bundled_policy
    ):
        for scenario in scenarios.values():
            pkg = load_package(scenario.package_root)
            report = evaluate_package(pkg, bundled_policy, required_level=AssuranceLevel.L2)
            for result in report.results.values():
                if result.outcome is not CheckOutcome.PASS:
                    assert result.reasons
                    assert result.threat_tags

    def test_checks_are_pure_over_corpus(self, scenarios, bundled_policy):
        for scenario in scenarios.values():
            pkg = load_package(scenario.package_root)
            first = run_checks(pkg, bundled_policy, parse_evidence(pkg, bundled_policy))
            second = run_checks(pkg, bundled_policy, parse_evidence(pkg, bundled_policy))
            assert first == second
