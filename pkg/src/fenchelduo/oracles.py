"""Oracle contracts for the composite problem  min_x  f(Ax) + h(x).

Everything downstream runs on five callables bundled in a :class:`ProblemSpec`:
values and conjugate values of ``f`` and ``h``, one subgradient selection for
``f``, one conjugate-subgradient selection for ``h`` (the linear minimization
oracle when ``h`` is an indicator), and a :class:`LinearMap` for ``A``.

Conventions
-----------
* Points are 1-D ``float64`` numpy arrays; ``f``-side points live in R^m,
  ``h``-side points in R^n, dual points in the same coordinates.
* ``+inf`` (``math.inf``) is the "outside the domain" value; arithmetic with
  it is always guarded explicitly, never left to float semantics.
* Subgradient oracles return a single selection.  Argmax-style oracles break
  ties deterministically (lowest index) so that runs are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "FenchelDuoError",
    "ConstructionError",
    "DomainError",
    "InfiniteValue",
    "RangeError",
    "StateError",
    "LineSearchError",
    "FitError",
    "as_point",
    "LinearMap",
    "ProblemSpec",
    "bregman_f",
    "bregman_hconj",
    "dual_pair_step",
    "duality_gap",
    "fenchel_young_residual",
]

INF = math.inf

# Tiny negative Bregman values produced by cancellation are snapped to zero.
_NEG_SNAP = 1e-12


class FenchelDuoError(Exception):
    """Base class for all library errors."""


class ConstructionError(FenchelDuoError):
    """A problem constructor received invalid data."""


class DomainError(FenchelDuoError):
    """An oracle was queried outside its domain or returned non-finite output."""


class InfiniteValue(FenchelDuoError):
    """A value that must be finite evaluated to +inf."""


class RangeError(FenchelDuoError):
    """A scalar parameter is outside its admissible range."""


class StateError(FenchelDuoError):
    """An operation was called in an invalid state (e.g. before initialization)."""


class LineSearchError(FenchelDuoError):
    """The line-search surrogate could not be evaluated anywhere on (0, 1]."""


class FitError(FenchelDuoError):
    """Not enough usable data to fit a convergence rate."""


def as_point(x, dim: Optional[int] = None, name: str = "point") -> np.ndarray:
    """Validate and return ``x`` as a finite 1-D float64 array."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1:
        raise DomainError(f"{name} must be 1-D, got shape {p.shape}")
    if dim is not None and p.shape[0] != dim:
        raise DomainError(f"{name} has dimension {p.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(p)):
        raise DomainError(f"{name} has non-finite coordinates")
    return p


@dataclass(frozen=True)
class LinearMap:
    """Linear map A: R^dim_in -> R^dim_out together with its adjoint."""

    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    dim_in: int
    dim_out: int
    matrix: Optional[np.ndarray] = None

    @staticmethod
    def identity(n: int) -> "LinearMap":
        return LinearMap(apply=lambda x: x, adjoint=lambda u: u, dim_in=n, dim_out=n)

    @staticmethod
    def from_matrix(m) -> "LinearMap":
        mat = np.asarray(m, dtype=float)
        if mat.ndim != 2:
            raise ConstructionError(f"matrix for a linear map must be 2-D, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ConstructionError("matrix for a linear map has non-finite entries")
        return LinearMap(
            apply=lambda x: mat @ x,
            adjoint=lambda u: mat.T @ u,
            dim_in=mat.shape[1],
            dim_out=mat.shape[0],
            matrix=mat,
        )

    @property
    def is_identity(self) -> bool:
        return self.matrix is None and self.dim_in == self.dim_out

    def adjoint_residual(self, rng: np.random.Generator, trials: int = 100) -> float:
        """Worst relative defect of <Ax, u> = <x, A*u> over random probes."""
        worst = 0.0
        for _ in range(trials):
            x = rng.standard_normal(self.dim_in)
            u = rng.standard_normal(self.dim_out)
            lhs = float(np.dot(self.apply(x), u))
            rhs = float(np.dot(x, self.adjoint(u)))
            worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
        return worst


@dataclass(frozen=True)
class ProblemSpec:
    """Oracle bundle for  min_x f(Ax) + h(x)  with A: R^n -> R^m.

    Required oracles:
      f_val(y) -> float|inf          value of f on R^m
      f_grad(y) -> point             one subgradient of f (argmax selection)
      f_conj_val(u) -> float|inf     f*(u) on R^m
      h_val(x) -> float|inf          value of h on R^n
      h_conj_val(w) -> float|inf     h*(w) on R^n
      h_conj_grad(w) -> point        one subgradient of h* (LMO for indicators)

    Optional closed-form Bregman distances avoid cancellation in the
    certificate arithmetic: breg_f(y2, y1) for D_f and breg_hconj(w2, w1)
    for D_{h*}.  breg_fconj / breg_h cover the conjugate side and are only
    needed to propagate closed forms through :func:`fenchelduo.duality.dualize`.

    All oracles must be pure; a spec may be shared across concurrent runs.
    """

    f_val: Callable[[np.ndarray], float]
    f_grad: Callable[[np.ndarray], np.ndarray]
    f_conj_val: Callable[[np.ndarray], float]
    h_val: Callable[[np.ndarray], float]
    h_conj_val: Callable[[np.ndarray], float]
    h_conj_grad: Callable[[np.ndarray], np.ndarray]
    linmap: LinearMap
    breg_f: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    breg_hconj: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    breg_fconj: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    breg_h: Optional[Callable[[np.ndarray, np.ndarray], float]] = None
    name: str = ""
    sample_x: Optional[Callable[[np.random.Generator], np.ndarray]] = None
    meta: dict = field(default_factory=dict)

    @property
    def dim_x(self) -> int:
        return self.linmap.dim_in

    @property
    def dim_y(self) -> int:
        return self.linmap.dim_out


def _oracle_point(fn, arg: np.ndarray, oracle: str) -> np.ndarray:
    try:
        out = np.asarray(fn(arg), dtype=float)
    except FenchelDuoError:
        raise
    except Exception as exc:  # noqa: BLE001 - user oracles may raise anything
        raise DomainError(f"oracle {oracle} failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise DomainError(f"oracle {oracle} returned non-finite output")
    return out


def _oracle_value(fn, arg: np.ndarray, oracle: str) -> float:
    try:
        out = float(fn(arg))
    except FenchelDuoError:
        raise
    except Exception as exc:  # noqa: BLE001
        raise DomainError(f"oracle {oracle} failed: {exc}") from exc
    if math.isnan(out):
        raise DomainError(f"oracle {oracle} returned NaN")
    return out


def _snap(value: float) -> float:
    if value < 0.0 and value > -_NEG_SNAP * (1.0 + abs(value)):
        return 0.0
    return value


def bregman_f(y: np.ndarray, x: np.ndarray, spec: ProblemSpec) -> float:
    """Bregman distance D_f(y, x) = f(y) - f(x) - <f'(x), y - x>.

    Uses the closed form from the spec when available, otherwise the value
    and subgradient oracles.  Raises :class:`InfiniteValue` when f(y) = +inf
    and :class:`DomainError` when the subgradient oracle fails at ``x``.
    """
    if spec.breg_f is not None:
        return _snap(float(spec.breg_f(y, x)))
    fy = _oracle_value(spec.f_val, y, "f_val")
    if math.isinf(fy):
        raise InfiniteValue("f is +inf at the first Bregman argument")
    fx = _oracle_value(spec.f_val, x, "f_val")
    if math.isinf(fx):
        raise DomainError("f is +inf at the Bregman base point")
    g = _oracle_point(spec.f_grad, x, "f_grad")
    return _snap(fy - fx - float(np.dot(g, y - x)))


def bregman_hconj(v: np.ndarray, u: np.ndarray, spec: ProblemSpec) -> float:
    """Bregman distance D_{h*}(v, u) = h*(v) - h*(u) - <v - u, (h*)'(u)>."""
    if spec.breg_hconj is not None:
        return _snap(float(spec.breg_hconj(v, u)))
    hv = _oracle_value(spec.h_conj_val, v, "h_conj_val")
    if math.isinf(hv):
        raise InfiniteValue("h* is +inf at the first Bregman argument")
    hu = _oracle_value(spec.h_conj_val, u, "h_conj_val")
    if math.isinf(hu):
        raise DomainError("h* is +inf at the Bregman base point")
    g = _oracle_point(spec.h_conj_grad, u, "h_conj_grad")
    return _snap(hv - hu - float(np.dot(v - u, g)))


def dual_pair_step(x: np.ndarray, u: np.ndarray, spec: ProblemSpec):
    """The joint oracle step (x, u) -> (s, z) = ((h*)'(-A*u), f'(Ax)).

    ``s`` is primal-feasible and ``z`` dual-feasible whenever the spec honours
    the oracle-closure contract, which is what makes the iteration well posed.
    """
    s = _oracle_point(spec.h_conj_grad, -spec.linmap.adjoint(u), "h_conj_grad")
    z = _oracle_point(spec.f_grad, spec.linmap.apply(x), "f_grad")
    return s, z


def duality_gap(x: np.ndarray, u: np.ndarray, spec: ProblemSpec) -> float:
    """f(Ax) + h(x) + f*(u) + h*(-A*u); nonnegative by weak duality.

    Raises :class:`InfiniteValue` when any of the four terms is +inf, which
    signals an infeasible primal-dual certificate pair.
    """
    terms = (
        _oracle_value(spec.f_val, spec.linmap.apply(x), "f_val"),
        _oracle_value(spec.h_val, x, "h_val"),
        _oracle_value(spec.f_conj_val, u, "f_conj_val"),
        _oracle_value(spec.h_conj_val, -spec.linmap.adjoint(u), "h_conj_val"),
    )
    for t in terms:
        if math.isinf(t):
            raise InfiniteValue("duality gap has an infinite term (infeasible pair)")
    return float(sum(terms))


def fenchel_young_residual(spec: ProblemSpec, y: Optional[np.ndarray] = None,
                           w: Optional[np.ndarray] = None) -> float:
    """Relative Fenchel-Young defect at oracle outputs; 0 for exact conjugate pairs.

    With ``y`` given checks  f(y) + f*(f'(y)) = <f'(y), y>;  with ``w`` given
    checks  h*(w) + h((h*)'(w)) = <w, (h*)'(w)>.  Returns the worst defect.
    """
    worst = 0.0
    if y is not None:
        g = _oracle_point(spec.f_grad, y, "f_grad")
        lhs = _oracle_value(spec.f_val, y, "f_val") + _oracle_value(spec.f_conj_val, g, "f_conj_val")
        rhs = float(np.dot(g, y))
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    if w is not None:
        p = _oracle_point(spec.h_conj_grad, w, "h_conj_grad")
        lhs = _oracle_value(spec.h_conj_val, w, "h_conj_val") + _oracle_value(spec.h_val, p, "h_val")
        rhs = float(np.dot(w, p))
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(rhs)))
    return worst
