from __future__ import annotations

import base64
import itertools

import pytest

from ricgate.core import AssuranceLevel, SignerPurpose
from ricgate.corpus import derive_key
from ricgate.errors import PolicyError, UnknownEnvironmentError
from ricgate.policy import DependencyClass, load_policy


def _signer_entry(key_id: str = "release-1", purposes=("release-signing",)) -> dict:
    key = derive_key(99, key_id)
    return {"key_id": key_id, "public_key": key.public_b64(), "purposes": list(purposes)}


def _minimal_doc(**overrides) -> dict:
    doc = {"signers": [_signer_entry()], "required_levels": {"lab": 1}}
    doc.update(overrides)
    return doc


class TestLoadPolicy:
    def test_minimal_policy_round_trips_required_level(self):
        policy = load_policy(_minimal_doc())
        assert policy.required_level("lab") is AssuranceLevel.L1

    def test_duplicate_key_id_rejected(self):
        doc = _minimal_doc(signers=[_signer_entry(), _signer_entry()])
        with pytest.raises(PolicyError):
            load_policy(doc)

    def test_production_fixture_requires_level_two(self, bundled_policy):
        assert bundled_policy.required_level("production") is AssuranceLevel.L2

    def test_lab_fixture_requires_level_one(self, bundled_policy):
        assert bundled_policy.required_level("lab") is AssuranceLevel.L1

    @pytest.mark.parametrize("level", [-1, 4])
    def test_level_outside_range_rejected(self, level):
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(required_levels={"lab": level}))

    def test_non_integer_level_rejected(self):
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(required_levels={"lab": "2"}))

    def test_malformed_public_key_encoding_rejected(self):
        entry = _signer_entry()
        entry["public_key"] = "%%% not base64 %%%"
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(signers=[entry]))

    def test_wrong_length_public_key_rejected(self):
        entry = _signer_entry()
        entry["public_key"] = base64.b64encode(b"short").decode()
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(signers=[entry]))

    def test_unknown_purpose_rejected(self):
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(signers=[_signer_entry(purposes=("world-domination",))]))

    def test_empty_purposes_rejected(self):
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(signers=[_signer_entry(purposes=())]))

    def test_unknown_top_level_key_rejected(self):
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(surprise=True))

    def test_duplicate_builder_rejected(self):
        doc = _minimal_doc(
            approved_builders=[{"id": "ci/a", "hardened": False}, {"id": "ci/a", "hardened": True}]
        )
        with pytest.raises(PolicyError):
            load_policy(doc)

    def test_bad_capability_in_profile_rejected(self):
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(permission_profiles={"app": ["not a capability"]}))

    def test_round_trip_is_equivalent(self, bundled_policy):
        reloaded = load_policy(bundled_policy.to_document())
        assert reloaded == bundled_policy
        assert reloaded.digest == bundled_policy.digest

    def test_round_trip_minimal(self):
        policy = load_policy(_minimal_doc())
        assert load_policy(policy.to_document()) == policy


class TestTrustedSigner:
    def test_known_key_with_purpose(self, bundled_policy):
        assert bundled_policy.is_trusted_signer("release-1", SignerPurpose.RELEASE_SIGNING)

    def test_unknown_key(self, bundled_policy):
        assert not bundled_policy.is_trusted_signer("ghost", SignerPurpose.RELEASE_SIGNING)

    def test_purpose_separation(self, bundled_policy):
        assert bundled_policy.is_trusted_signer("assessor-1", SignerPurpose.SSDF_ASSESSOR)
        assert not bundled_policy.is_trusted_signer("assessor-1", SignerPurpose.RELEASE_SIGNING)

    def test_never_true_for_pairs_not_in_policy(self, bundled_policy):
        literal = {
            (s.key_id, purpose) for s in bundled_policy.signers for purpose in s.purposes
        }
        key_ids = [s.key_id for s in bundled_policy.signers] + ["unknown-key"]
        for key_id, purpose in itertools.product(key_ids, SignerPurpose):
            assert bundled_policy.is_trusted_signer(key_id, purpose) == (
                (key_id, purpose) in literal
            )


class TestClassifyDependency:
    def test_allow_prefix_match(self):
        policy = load_policy(
            _minimal_doc(
                dependency_rules=[{"pattern": "pkg:pypi/internal-", "action": "allow"}]
            )
        )
        assert (
            policy.classify_dependency("pkg:pypi/internal-telemetry")
            is DependencyClass.ALLOWED
        )

    def test_public_index_shadowing_denied_when_deny_rule_first(self):
        policy = load_policy(
            _minimal_doc(
                dependency_rules=[
                    {"pattern": "pkg:pypi/", "action": "deny"},
                    {"pattern": "pkg:pypi/internal-", "action": "allow"},
                ]
            )
        )
        assert (
            policy.classify_dependency("pkg:pypi/internal-telemetry") is DependencyClass.DENIED
        )

    def test_order_sensitivity_swapping_rules_flips_class(self):
        rules = [
            {"pattern": "pkg:pypi/", "action": "deny"},
            {"pattern": "pkg:pypi/internal-", "action": "allow"},
        ]
        deny_first = load_policy(_minimal_doc(dependency_rules=rules))
        allow_first = load_policy(_minimal_doc(dependency_rules=list(reversed(rules))))
        origin = "pkg:pypi/internal-telemetry"
        assert deny_first.classify_dependency(origin) is DependencyClass.DENIED
        assert allow_first.classify_dependency(origin) is DependencyClass.ALLOWED

    def test_absent_origin_is_unknown(self, bundled_policy):
        assert bundled_policy.classify_dependency(None) is DependencyClass.UNKNOWN

    def test_unmatched_origin_is_unknown(self, bundled_policy):
        assert bundled_policy.classify_dependency("pkg:npm/leftpad") is DependencyClass.UNKNOWN

    def test_exception_action(self):
        policy = load_policy(
            _minimal_doc(dependency_rules=[{"pattern": "pkg:pypi/legacy-", "action": "exception"}])
        )
        assert policy.classify_dependency("pkg:pypi/legacy-lib") is DependencyClass.EXCEPTION

    def test_empty_pattern_rejected(self):
        with pytest.raises(PolicyError):
            load_policy(_minimal_doc(dependency_rules=[{"pattern": "", "action": "allow"}]))


class TestRequiredLevel:
    def test_unmapped_environment_is_an_error(self, bundled_policy):
        with pytest.raises(UnknownEnvironmentError):
            bundled_policy.required_level("staging")

    def test_no_silent_default(self):
        policy = load_policy(_minimal_doc(required_levels={}))
        with pytest.raises(UnknownEnvironmentError):
            policy.required_level("lab")
