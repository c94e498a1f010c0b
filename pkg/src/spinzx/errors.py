"""Exception hierarchy shared across the package."""


class SpinZXError(Exception):
    """Base class for all package errors."""


class ArityMismatch(SpinZXError):
    pass


class DimMismatch(SpinZXError):
    pass


class ParamLengthMismatch(SpinZXError):
    pass


class BoundaryMismatch(SpinZXError):
    pass


class ValidationError(SpinZXError):
    pass


class ParseError(SpinZXError):
    pass


class SizeExceeded(SpinZXError):
    pass


class NotClosed(SpinZXError):
    pass


class ShapeMismatch(SpinZXError):
    pass


class NumericOverflow(SpinZXError):
    pass


class UnsupportedKind(SpinZXError):
    pass


class InadmissibleTriple(SpinZXError):
    pass


class InadmissibleTree(SpinZXError):
    pass


class InvalidMagnetic(SpinZXError):
    pass


class InvalidPermutation(SpinZXError):
    pass


class NotSU2(SpinZXError):
    pass


class LeafCountMismatch(SpinZXError):
    pass


class EmptyHamiltonian(SpinZXError):
    pass


class SoundnessFailure(SpinZXError):
    """A rewrite rule failed its numeric certification grid.

    Carries the offending binding and both evaluated tensors so the
    counterexample can be inspected.
    """

    def __init__(self, rule_name, binding, lhs_tensor, rhs_tensor, max_diff):
        self.rule_name = rule_name
        self.binding = binding
        self.lhs_tensor = lhs_tensor
        self.rhs_tensor = rhs_tensor
        self.max_diff = max_diff
        super().__init__(
            f"rule {rule_name!r} failed certification at binding {binding!r}: "
            f"max difference {max_diff:.3e}"
        )


class StaleSite(SpinZXError):
    pass


class InvalidSpinArgs(SpinZXError):
    pass
