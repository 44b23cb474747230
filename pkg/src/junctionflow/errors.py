"""Exception types shared across the package."""


class JunctionFlowError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateTensions(JunctionFlowError):
    """Surface tensions violate the strict triangle inequality."""


class OrientationFailure(JunctionFlowError):
    """No consistent normal orientation satisfies the junction force balance."""


class BadMesh(JunctionFlowError):
    """Node table is too coarse, non-monotone, or otherwise unusable."""


class SupportOverlap(JunctionFlowError):
    """Cutoff supports of two junction ends of the same chart overlap."""


class FoldOver(JunctionFlowError):
    """Perturbed metric degenerated; the height fields left the graph regime."""


class SingularCoupling(JunctionFlowError):
    """The junction feedback matrix (Id - D T) is numerically singular."""


class ShapeMismatch(JunctionFlowError):
    """Field shapes do not match the cluster they claim to live on."""


class SingularSystem(JunctionFlowError):
    """Linear junction system could not be solved to tolerance."""


class ConfigError(JunctionFlowError):
    """Run configuration is malformed or inconsistent."""


class PicardDiverged(JunctionFlowError):
    """Fixed-point sweep hit its iteration cap without meeting tolerance."""


class DomainError(JunctionFlowError):
    """Symbol or boundary-value query outside the admissible parameter set."""


class Violation(JunctionFlowError):
    """A certified inequality failed on a sample; indicates an implementation bug."""
