"""Iteration engine.

Three projection-free drivers built on the same oracle pair
``(x, u) -> ((h*)'(-A*u), f'(Ax))``:

* :func:`run_gcs`   -- conditional-subgradient steps on the primal iterate,
  dual certificate aggregated from the observed subgradients;
* :func:`run_gmd`   -- mirror-descent steps on a dual iterate, primal
  certificate aggregated from the observed mirror points;
* :func:`run_hybrid` -- simultaneous convex-combination update of the
  primal/dual pair, which makes the certified gap exact.

A general linear map is threaded through everywhere; the identity map is the
special case with zero overhead.  Every run records a :class:`Trace` with the
full iterate history, both gap-bound variants (plain and sharpened), the true
duality gap of the certificate pair, and a streaming residual of the exact
certificate identity.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .certificates import (
    CertificateAggregate,
    GapState,
    step_divergence_dual,
    step_divergence_primal,
)
from .oracles import (
    DomainError,
    InfiniteValue,
    ProblemSpec,
    RangeError,
    as_point,
    bregman_f,
    bregman_hconj,
    fenchel_young_residual,
    _oracle_point,
    _oracle_value,
)
from .steps import StepRule

__all__ = ["Trace", "run_gcs", "run_gmd", "run_hybrid"]

_FY_DEBUG_TOL = 1e-9


@dataclass
class Trace:
    """Per-iteration log of one run.

    Row k (1-based) is recorded after the k-th update: ``alphas[k-1]`` is the
    step size used, ``primal[k-1]``/``dual[k-1]`` the objective values of the
    current certificate pair, ``true_gap`` their sum, ``gap_plain``/
    ``gap_sharp`` the two certified bounds, ``residual`` the streaming defect
    of the exact identity behind the certificate, and ``t_ms`` wall-clock
    milliseconds since the run started.  Iterate histories keep one extra
    entry (index 0 is the start point).
    """

    algo: str
    mode: str = "plain"
    policy: str = "average"
    alphas: List[float] = field(default_factory=list)
    primal: List[float] = field(default_factory=list)
    dual: List[float] = field(default_factory=list)
    gap_plain: List[float] = field(default_factory=list)
    gap_sharp: List[float] = field(default_factory=list)
    true_gap: List[float] = field(default_factory=list)
    residual: List[float] = field(default_factory=list)
    t_ms: List[float] = field(default_factory=list)
    xs: List[np.ndarray] = field(default_factory=list)
    us: List[np.ndarray] = field(default_factory=list)
    ss: List[np.ndarray] = field(default_factory=list)
    zs: List[np.ndarray] = field(default_factory=list)
    vs: List[np.ndarray] = field(default_factory=list)
    ys: List[np.ndarray] = field(default_factory=list)
    certificate: Optional[np.ndarray] = None
    error: Optional[str] = None
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.alphas)

    @property
    def gap_bound(self) -> np.ndarray:
        return np.asarray(self.gap_sharp if self.mode == "sharp" else self.gap_plain)

    def row(self, i: int) -> dict:
        return {
            "k": i + 1,
            "alpha": self.alphas[i],
            "primal": self.primal[i],
            "dual": self.dual[i],
            "gap_bound": (self.gap_sharp if self.mode == "sharp" else self.gap_plain)[i],
            "true_gap": self.true_gap[i],
            "residual": self.residual[i],
            "t_ms": self.t_ms[i],
        }


def _check_args(k_max: int, policy: str, mode: str):
    if k_max < 1:
        raise RangeError(f"k_max must be >= 1, got {k_max}")
    if policy not in ("average", "best"):
        raise RangeError(f"policy must be 'average' or 'best', got {policy!r}")
    if mode not in ("plain", "sharp"):
        raise RangeError(f"mode must be 'plain' or 'sharp', got {mode!r}")


def _fy_debug(spec, y=None, w=None):
    defect = fenchel_young_residual(spec, y=y, w=w)
    if defect > _FY_DEBUG_TOL:
        raise DomainError(f"conjugate-pair defect {defect:.3e} exceeds {_FY_DEBUG_TOL}")


def run_gcs(spec: ProblemSpec, x0, rule: StepRule, k_max: int, *,
            epsilon: Optional[float] = None, policy: str = "average",
            mode: str = "plain", debug: bool = False) -> Trace:
    """Conditional-subgradient run from ``x0`` in dom(f' o A).

    Each step reads u_k = f'(Ax_k), targets s_k = (h*)'(-A*u_k) and moves
    x_{k+1} = (1-alpha_k) x_k + alpha_k s_k.  The dual certificate is the
    aggregate of the u_k under the configured policy.
    """
    _check_args(k_max, policy, mode)
    x = as_point(x0, spec.dim_x, "x0")
    A, At = spec.linmap.apply, spec.linmap.adjoint
    trace = Trace(algo="gcs", mode=mode, policy=policy, meta=dict(spec.meta))
    trace.xs.append(x.copy())
    gap = GapState("cg")
    agg = CertificateAggregate(policy)
    dual_avg = 0.0  # lambda-weighted dual objective values, for the residual
    start = time.perf_counter()
    try:
        for k in range(k_max):
            u = _oracle_point(spec.f_grad, A(x), "f_grad")
            s = _oracle_point(spec.h_conj_grad, -At(u), "h_conj_grad")
            if debug:
                _fy_debug(spec, y=A(x), w=-At(u))
            dual_val = _oracle_value(spec.f_conj_val, u, "f_conj_val")
            dual_val += _oracle_value(spec.h_conj_val, -At(u), "h_conj_val")

            if k == 0:
                alpha = 1.0
            else:
                xi, si = x, s
                sharp = mode == "sharp"

                def d_fun(a, xi=xi, si=si, sharp=sharp):
                    if sharp:
                        return step_divergence_primal(xi, si, a, spec)
                    return bregman_f(A((1.0 - a) * xi + a * si), A(xi), spec)

                alpha = float(rule.select(k, gap.bound(mode), d_fun))
            if not (0.0 <= alpha <= 1.0):
                raise RangeError(f"rule produced step size {alpha} outside [0, 1]")

            if k == 0:
                gap.initialize(spec, x0=x, s0=s)
            else:
                gap.update(alpha, spec, x=x, s=s)
            agg.update(u, alpha, dual_val)
            dual_avg = (1.0 - alpha) * dual_avg + alpha * dual_val
            x = (1.0 - alpha) * x + alpha * s

            trace.alphas.append(alpha)
            trace.us.append(u)
            trace.ss.append(s)
            trace.xs.append(x.copy())
            primal = _oracle_value(spec.f_val, A(x), "f_val") + _oracle_value(spec.h_val, x, "h_val")
            if policy == "average":
                cert_dual = _oracle_value(spec.f_conj_val, agg.point, "f_conj_val")
                cert_dual += _oracle_value(spec.h_conj_val, -At(agg.point), "h_conj_val")
            else:
                cert_dual = agg.best_value
            trace.primal.append(primal)
            trace.dual.append(-cert_dual)
            trace.gap_plain.append(gap.plain)
            trace.gap_sharp.append(gap.sharp)
            trace.true_gap.append(primal + cert_dual)
            trace.residual.append(abs(dual_avg - gap.sharp + primal))
            trace.t_ms.append((time.perf_counter() - start) * 1e3)
            if epsilon is not None and gap.bound(mode) < epsilon:
                break
    except (DomainError, InfiniteValue) as exc:
        trace.error = str(exc)
    trace.certificate = None if agg.point is None else agg.point.copy()
    return trace


def run_gmd(spec: ProblemSpec, v0, rule: StepRule, k_max: int, *,
            epsilon: Optional[float] = None, policy: str = "average",
            mode: str = "plain", debug: bool = False) -> Trace:
    """Mirror-descent run from a dual point ``v0`` in dom((h*)' o A*).

    Each step reads the mirror point y_k = (h*)'(A* v_k) and the subgradient
    z_k = f'(A y_k), then moves v_{k+1} = (1-alpha_k) v_k - alpha_k z_k.  The
    primal certificate is the aggregate of the y_k.
    """
    _check_args(k_max, policy, mode)
    v = as_point(v0, spec.dim_y, "v0")
    A, At = spec.linmap.apply, spec.linmap.adjoint
    trace = Trace(algo="gmd", mode=mode, policy=policy, meta=dict(spec.meta))
    trace.vs.append(v.copy())
    gap = GapState("md")
    agg = CertificateAggregate(policy)
    primal_avg = 0.0  # lambda-weighted primal objective values, for the residual
    start = time.perf_counter()
    try:
        for k in range(k_max):
            y = _oracle_point(spec.h_conj_grad, At(v), "h_conj_grad")
            z = _oracle_point(spec.f_grad, A(y), "f_grad")
            if debug:
                _fy_debug(spec, y=A(y), w=At(v))
            primal_val = _oracle_value(spec.f_val, A(y), "f_val")
            primal_val += _oracle_value(spec.h_val, y, "h_val")

            if k == 0:
                alpha = 1.0
            else:
                vi, zi = v, z
                sharp = mode == "sharp"

                def d_fun(a, vi=vi, zi=zi, sharp=sharp):
                    if sharp:
                        return step_divergence_dual(vi, -zi, a, spec)
                    return bregman_hconj(At((1.0 - a) * vi - a * zi), At(vi), spec)

                alpha = float(rule.select(k, gap.bound(mode), d_fun))
            if not (0.0 <= alpha <= 1.0):
                raise RangeError(f"rule produced step size {alpha} outside [0, 1]")

            if k == 0:
                gap.initialize(spec, v0=v, z0=z)
            else:
                gap.update(alpha, spec, v=v, z=z)
            agg.update(y, alpha, primal_val)
            primal_avg = (1.0 - alpha) * primal_avg + alpha * primal_val
            v = (1.0 - alpha) * v - alpha * z

            trace.alphas.append(alpha)
            trace.ys.append(y)
            trace.zs.append(z)
            trace.vs.append(v.copy())
            if policy == "average":
                cert_primal = _oracle_value(spec.f_val, A(agg.point), "f_val")
                cert_primal += _oracle_value(spec.h_val, agg.point, "h_val")
            else:
                cert_primal = agg.best_value
            dual_obj = _oracle_value(spec.f_conj_val, -v, "f_conj_val")
            dual_obj += _oracle_value(spec.h_conj_val, At(v), "h_conj_val")
            trace.primal.append(cert_primal)
            trace.dual.append(-dual_obj)
            trace.gap_plain.append(gap.plain)
            trace.gap_sharp.append(gap.sharp)
            trace.true_gap.append(cert_primal + dual_obj)
            trace.residual.append(abs(primal_avg - gap.sharp + dual_obj))
            trace.t_ms.append((time.perf_counter() - start) * 1e3)
            if epsilon is not None and gap.bound(mode) < epsilon:
                break
    except (DomainError, InfiniteValue) as exc:
        trace.error = str(exc)
    trace.certificate = None if agg.point is None else agg.point.copy()
    return trace


def run_hybrid(spec: ProblemSpec, x0, u0, rule: StepRule, k_max: int, *,
               epsilon: Optional[float] = None, policy: str = "average",
               mode: str = "plain", debug: bool = False) -> Trace:
    """Symmetric primal-dual run from admissible ``(x0, u0)``.

    Both coordinates move toward the joint oracle output
    (s_k, z_k) = ((h*)'(-A*u_k), f'(Ax_k)) with the same step size, and the
    certified bound coincides with the true duality gap at (x_k, u_k).
    """
    _check_args(k_max, policy, mode)
    x = as_point(x0, spec.dim_x, "x0")
    u = as_point(u0, spec.dim_y, "u0")
    A, At = spec.linmap.apply, spec.linmap.adjoint
    trace = Trace(algo="hybrid", mode=mode, policy=policy, meta=dict(spec.meta))
    trace.xs.append(x.copy())
    trace.us.append(u.copy())
    gap = GapState("hyb")
    start = time.perf_counter()
    try:
        for k in range(k_max):
            s = _oracle_point(spec.h_conj_grad, -At(u), "h_conj_grad")
            z = _oracle_point(spec.f_grad, A(x), "f_grad")
            if debug:
                _fy_debug(spec, y=A(x), w=-At(u))

            if k == 0:
                alpha = 1.0
            else:
                xi, ui, si, zi = x, u, s, z
                sharp = mode == "sharp"

                def d_fun(a, xi=xi, ui=ui, si=si, zi=zi, sharp=sharp):
                    if sharp:
                        return (step_divergence_primal(xi, si, a, spec)
                                + step_divergence_dual(-ui, -zi, a, spec))
                    keep = 1.0 - a
                    d = bregman_f(A(keep * xi + a * si), A(xi), spec)
                    return d + bregman_hconj(-At(keep * ui + a * zi), -At(ui), spec)

                alpha = float(rule.select(k, gap.bound(mode), d_fun))
            if not (0.0 <= alpha <= 1.0):
                raise RangeError(f"rule produced step size {alpha} outside [0, 1]")

            if k == 0:
                gap.initialize(spec, x0=x, s0=s, u0=u, z0=z)
            else:
                gap.update(alpha, spec, x=x, s=s, u=u, z=z)
            x = (1.0 - alpha) * x + alpha * s
            u = (1.0 - alpha) * u + alpha * z

            trace.alphas.append(alpha)
            trace.ss.append(s)
            trace.zs.append(z)
            trace.xs.append(x.copy())
            trace.us.append(u.copy())
            primal = _oracle_value(spec.f_val, A(x), "f_val") + _oracle_value(spec.h_val, x, "h_val")
            dual_obj = _oracle_value(spec.f_conj_val, u, "f_conj_val")
            dual_obj += _oracle_value(spec.h_conj_val, -At(u), "h_conj_val")
            trace.primal.append(primal)
            trace.dual.append(-dual_obj)
            trace.gap_plain.append(gap.plain)
            trace.gap_sharp.append(gap.sharp)
            trace.true_gap.append(primal + dual_obj)
            trace.residual.append(abs(primal + dual_obj - gap.sharp))
            trace.t_ms.append((time.perf_counter() - start) * 1e3)
            if epsilon is not None and gap.bound(mode) < epsilon:
                break
    except (DomainError, InfiniteValue) as exc:
        trace.error = str(exc)
    trace.certificate = None if trace.us == [] else u.copy()
    return trace
