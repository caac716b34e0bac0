# errors.py – exception hierarchy shared by every module
"""All library errors derive from LaxTopError; the CLI maps them to exit codes."""

from __future__ import annotations


class LaxTopError(Exception):
    """Base class for library errors."""


class ConfigError(LaxTopError):
    """Malformed or inconsistent run configuration (exit code 2)."""


class WrongRegime(LaxTopError):
    """Operation requested in a regime that does not support it."""


class NonConvergent(LaxTopError):
    """Theta series tail above tolerance for the configured cutoff."""


class NearPole(LaxTopError):
    """An argument came closer to the singular set than the pole guard."""

    def __init__(self, argument: str, value: complex, distance: float, guard: float,
                 pair: tuple[int, int] | None = None):
        self.argument = argument
        self.pair = pair
        self.value = complex(value)
        self.distance = float(distance)
        self.guard = float(guard)
        super().__init__(
            f"{argument}={self.value:.6g} is {self.distance:.3g} from the singular set "
            f"(guard {self.guard:.3g})"
        )


class DimensionMismatch(LaxTopError):
    """Operands of incompatible dimension."""


class IndexOutOfRange(LaxTopError):
    """Block index outside the M×M grid."""


class CalibrationFailed(LaxTopError):
    """No candidate normalization passed the residue and axiom gates."""


class OffShell(LaxTopError):
    """State violates qdot_i = tr(S^ii) in strict mode."""


class NotRankOne(LaxTopError):
    """Rank-one reduction requested on data that is not rank one."""


class SingularConfiguration(LaxTopError):
    """Trajectory reached a pole of the Lax pair."""

    def __init__(self, time: float, pair: tuple[int, int] | None, detail: str = ""):
        self.time = float(time)
        self.pair = pair
        where = f" at pair {pair}" if pair is not None else ""
        super().__init__(f"singular configuration at t={self.time:.6g}{where}. {detail}".strip())
