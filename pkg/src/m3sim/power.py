"""Host power models: utilization in [0, 1] -> electrical power draw in watts.

Seven closed-form model kinds are supported, all anchored at an idle and
a max draw (``power(0) == p_idle``, ``power(1) == p_max``). A built-in
archive ships 18 ready-made configurations (ids M1..M18) calibrated for
32 W idle / 180 W max and 0 W / 180 W hosts, each carrying selection
tags (E1/E2/E3) so common subsets can be pulled out by name.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ValidationError

__all__ = ["ModelKind", "PowerModelSpec", "ModelArchive", "power", "builtin_archive"]


class ModelKind(str, Enum):
    SQRT = "sqrt"                        # idle + span * sqrt(u)
    LINEAR = "linear"                    # idle + span * u
    SQUARE = "square"                    # idle + span * u^2
    CUBIC = "cubic"                      # idle + span * u^3
    MSE = "mse"                          # idle + span * (2u - u^r)
    ASYMPTOTIC = "asymptotic"            # idle + span/2 * (1 + u - e^(-u/a))
    ASYMPTOTIC_DVFS = "asymptotic_dvfs"  # idle + span/2 * (1 + u^3 - e^(-u^3/a))


_NEEDS_R = {ModelKind.MSE}
_NEEDS_ALPHA = {ModelKind.ASYMPTOTIC, ModelKind.ASYMPTOTIC_DVFS}


@dataclass(frozen=True)
class PowerModelSpec:
    """One parameterized power model.

    r applies to the mse kind only; alpha to the asymptotic kinds only.
    Unused parameters must stay None.
    """

    kind: ModelKind
    p_idle: float
    p_max: float
    r: float | None = None
    alpha: float | None = None

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, ModelKind) else ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "p_idle", float(self.p_idle))
        object.__setattr__(self, "p_max", float(self.p_max))
        if self.p_idle < 0:
            raise ValidationError(f"p_idle must be >= 0, got {self.p_idle}")
        if self.p_max < self.p_idle:
            raise ValidationError(f"p_max ({self.p_max}) must be >= p_idle ({self.p_idle})")
        if kind in _NEEDS_R:
            if self.r is None or self.r <= 0:
                raise ValidationError(f"{kind.value} model needs r > 0, got {self.r}")
            object.__setattr__(self, "r", float(self.r))
        elif self.r is not None:
            raise ValidationError(f"{kind.value} model does not take r")
        if kind in _NEEDS_ALPHA:
            if self.alpha is None or self.alpha <= 0:
                raise ValidationError(f"{kind.value} model needs alpha > 0, got {self.alpha}")
            object.__setattr__(self, "alpha", float(self.alpha))
        elif self.alpha is not None:
            raise ValidationError(f"{kind.value} model does not take alpha")


def power(spec: PowerModelSpec, utilization):
    """Power draw at the given utilization (scalar or array).

    Utilization is clamped to [0, 1] before evaluation; the return type
    mirrors the input (float in, float out; array in, array out).
    """
    scalar = np.isscalar(utilization) or np.ndim(utilization) == 0
    u = np.clip(np.asarray(utilization, dtype=np.float64), 0.0, 1.0)
    span = spec.p_max - spec.p_idle
    kind = spec.kind
    if kind is ModelKind.SQRT:
        out = spec.p_idle + span * np.sqrt(u)
    elif kind is ModelKind.LINEAR:
        out = spec.p_idle + span * u
    elif kind is ModelKind.SQUARE:
        out = spec.p_idle + span * u * u
    elif kind is ModelKind.CUBIC:
        out = spec.p_idle + span * u * u * u
    elif kind is ModelKind.MSE:
        out = spec.p_idle + span * (2.0 * u - u**spec.r)
    elif kind is ModelKind.ASYMPTOTIC:
        out = spec.p_idle + 0.5 * span * (1.0 + u - np.exp(-u / spec.alpha))
    elif kind is ModelKind.ASYMPTOTIC_DVFS:
        u3 = u * u * u
        out = spec.p_idle + 0.5 * span * (1.0 + u3 - np.exp(-u3 / spec.alpha))
    else:  # pragma: no cover - enum is closed
        raise ValidationError(f"unknown model kind: {kind}")
    return float(out) if scalar else out


@dataclass(frozen=True)
class ModelArchive:
    """An ordered, id-addressable collection of power model specs."""

    entries: tuple  # ((id, PowerModelSpec, frozenset[str]), ...)

    def __post_init__(self):
        seen = set()
        for mid, _, _ in self.entries:
            if mid in seen:
                raise ValidationError(f"duplicate model id in archive: {mid}")
            seen.add(mid)

    def __len__(self):
        return len(self.entries)

    def ids(self):
        return [mid for mid, _, _ in self.entries]

    def get(self, model_id: str) -> PowerModelSpec:
        for mid, spec, _ in self.entries:
            if mid == model_id:
                return spec
        raise ValidationError(f"unknown model id: {model_id}")

    def select(self, tag: str) -> list:
        """(id, spec) pairs carrying the given selection tag, in archive order."""
        picked = [(mid, spec) for mid, spec, tags in self.entries if tag in tags]
        if not picked:
            raise ValidationError(f"no archive models carry tag {tag!r}")
        return picked


def _spec(kind, p_idle, p_max, **kw):
    return PowerModelSpec(kind=kind, p_idle=p_idle, p_max=p_max, **kw)


def builtin_archive() -> ModelArchive:
    """The 18 stock model configurations with their selection tags."""
    K = ModelKind
    e = [
        ("M1", _spec(K.SQRT, 32, 180), {"E1", "E2", "E3"}),
        ("M2", _spec(K.SQRT, 0, 180), {"E3"}),
        ("M3", _spec(K.LINEAR, 32, 180), {"E2", "E3"}),
        ("M4", _spec(K.LINEAR, 0, 180), {"E3"}),
        ("M5", _spec(K.SQUARE, 32, 180), {"E2", "E3"}),
        ("M6", _spec(K.SQUARE, 0, 180), {"E3"}),
        ("M7", _spec(K.CUBIC, 32, 180), {"E2", "E3"}),
        ("M8", _spec(K.CUBIC, 0, 180), {"E3"}),
        ("M9", _spec(K.MSE, 32, 180, r=10.0), {"E1"}),
        ("M10", _spec(K.MSE, 32, 180, r=0.7), {"E2", "E3"}),
        ("M11", _spec(K.MSE, 0, 180, r=0.7), {"E3"}),
        ("M12", _spec(K.ASYMPTOTIC, 32, 180, alpha=0.3), {"E1"}),
        ("M13", _spec(K.ASYMPTOTIC, 32, 180, alpha=0.85), {"E2", "E3"}),
        ("M14", _spec(K.ASYMPTOTIC, 0, 180, alpha=0.85), {"E3"}),
        ("M15", _spec(K.ASYMPTOTIC_DVFS, 32, 180, alpha=0.3), {"E1", "E3"}),
        ("M16", _spec(K.ASYMPTOTIC_DVFS, 32, 180, alpha=0.85), {"E2", "E3"}),
        ("M17", _spec(K.ASYMPTOTIC_DVFS, 0, 180, alpha=1.9), {"E3"}),
        ("M18", _spec(K.ASYMPTOTIC_DVFS, 32, 180, alpha=1.9), {"E2", "E3"}),
    ]
    return ModelArchive(entries=tuple((mid, spec, frozenset(tags)) for mid, spec, tags in e))
