"""Exception hierarchy for the gate.

Value-type invariant violations raise plain ValueError; everything that
crosses a file or document boundary raises one of these.
"""


class GateError(Exception):
    """Base class for all gate errors."""


class PolicyError(GateError):
    """Trust policy document is invalid."""


class UnknownEnvironmentError(PolicyError):
    """Environment has no required assurance level in the policy."""


class PackageError(GateError):
    """Submission package is structurally invalid or unreadable."""


class EvidenceError(GateError):
    """An evidence document is malformed or unparseable."""


class SbomError(EvidenceError):
    """SBOM document is not a recognized or well-formed format."""


class EnvelopeError(EvidenceError):
    """Base class for signature envelope problems."""


class MalformedEnvelopeError(EnvelopeError):
    """Envelope structure or encoding is invalid."""


class UntrustedSignerError(EnvelopeError):
    """No signature comes from a trusted signer holding the needed purpose."""


class BadSignatureError(EnvelopeError):
    """A trusted signer's signature does not verify over the payload."""


class ProvenanceError(EvidenceError):
    """Provenance statement is malformed."""


class SsdfError(EvidenceError):
    """Practice declaration is malformed or uses unknown practices."""
