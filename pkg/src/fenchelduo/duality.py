"""Fenchel-dual problem construction and executable equivalence checks.

The dual of  min_x f(Ax) + h(x)  can itself be written in the same composite
shape,  min_v F(Bv) + H(v),  with F = h*, B = A*, and H(v) = f*(-v).  All
oracles of the dual spec are sign-and-swap rewirings of the primal oracles,
so a spec satisfying the oracle contracts dualizes for free.

Two classic consequences become deterministic numerical checks here: a
conditional-subgradient run on the primal replays, sign-flipped, as a
mirror-descent run on the dual; and the symmetric primal-dual iteration is
invariant (again up to signs) under swapping the problem with its dual.
"""

from __future__ import annotations

import numpy as np

from .engine import run_gcs, run_gmd, run_hybrid
from .oracles import ConstructionError, LinearMap, ProblemSpec, RangeError
from .steps import StepRule

__all__ = ["dualize", "check_bach_equivalence", "check_hybrid_symmetry"]


def dualize(spec: ProblemSpec) -> ProblemSpec:
    """Problem spec of the Fenchel dual  min_v h*(A*v) + f*(-v).

    The smooth role is taken by h* (so the primal's conjugate-subgradient
    oracle becomes the new subgradient oracle) and the nonsmooth role by
    v -> f*(-v), whose conjugate-subgradient oracle is w -> -f'(-w).
    Closed-form Bregman distances are carried over with the matching sign
    flips.  Dualizing twice reproduces the primal oracles composed with
    negation on both sides.
    """
    for attr in ("f_conj_val", "h_conj_val", "h_conj_grad"):
        if getattr(spec, attr) is None:
            raise ConstructionError(f"dualization needs the {attr} oracle")
    lm = spec.linmap
    dual_map = LinearMap(
        apply=lm.adjoint,
        adjoint=lm.apply,
        dim_in=lm.dim_out,
        dim_out=lm.dim_in,
        matrix=None if lm.matrix is None else lm.matrix.T,
    )
    return ProblemSpec(
        f_val=spec.h_conj_val,
        f_grad=spec.h_conj_grad,
        f_conj_val=spec.h_val,
        h_val=lambda w: spec.f_conj_val(-np.asarray(w, dtype=float)),
        h_conj_val=lambda y: spec.f_val(-np.asarray(y, dtype=float)),
        h_conj_grad=lambda w: -np.asarray(spec.f_grad(-np.asarray(w, dtype=float)), dtype=float),
        linmap=dual_map,
        breg_f=spec.breg_hconj,
        breg_hconj=None if spec.breg_f is None else (lambda y2, y1: spec.breg_f(-y2, -y1)),
        breg_fconj=spec.breg_h,
        breg_h=None if spec.breg_fconj is None else (lambda w2, w1: spec.breg_fconj(-w2, -w1)),
        name=f"dual({spec.name})" if spec.name else "dual",
        sample_x=None,
        meta={"dual_of": spec.name, **{k: v for k, v in spec.meta.items() if k != "problem"}},
    )


def _require_schedule(rule: StepRule):
    if not rule.is_schedule:
        raise RangeError(
            "equivalence checks need a deterministic step schedule; "
            f"got trajectory-dependent rule {rule.label!r}"
        )


def check_bach_equivalence(spec: ProblemSpec, x0, rule: StepRule, k_max: int) -> float:
    """Max deviation between a primal conditional-subgradient run and the
    sign-mapped mirror-descent run on the dual started from -x0.

    The correspondence is (v_k, y_k, z_k) = (-x_k, -u_k, s_k); the returned
    value is the worst infinity-norm defect of those three pairings over the
    whole run.  Exact in theory, so anything above 1e-12 indicates a wiring
    error.
    """
    _require_schedule(rule)
    primal = run_gcs(spec, x0, rule, k_max)
    if primal.error:
        raise ConstructionError(f"primal run aborted: {primal.error}")
    dual = run_gmd(dualize(spec), -np.asarray(x0, dtype=float), rule, k_max)
    if dual.error:
        raise ConstructionError(f"dual run aborted: {dual.error}")
    dev = 0.0
    for vk, xk in zip(dual.vs, primal.xs):
        dev = max(dev, float(np.max(np.abs(vk + xk))))
    for yk, uk in zip(dual.ys, primal.us):
        dev = max(dev, float(np.max(np.abs(yk + uk))))
    for zk, sk in zip(dual.zs, primal.ss):
        dev = max(dev, float(np.max(np.abs(zk - sk))))
    return dev


def check_hybrid_symmetry(spec: ProblemSpec, x0, u0, rule: StepRule, k_max: int) -> float:
    """Max deviation between a symmetric run on the problem and one on its
    dual started from (-u0, x0).

    The pairings are (x'_k, u'_k) = (-u_k, x_k) and (s'_k, z'_k) = (-z_k, s_k).
    """
    _require_schedule(rule)
    here = run_hybrid(spec, x0, u0, rule, k_max)
    if here.error:
        raise ConstructionError(f"primal run aborted: {here.error}")
    there = run_hybrid(dualize(spec), -np.asarray(u0, dtype=float),
                       np.asarray(x0, dtype=float), rule, k_max)
    if there.error:
        raise ConstructionError(f"dual run aborted: {there.error}")
    dev = 0.0
    for xd, uk in zip(there.xs, here.us):
        dev = max(dev, float(np.max(np.abs(xd + uk))))
    for ud, xk in zip(there.us, here.xs):
        dev = max(dev, float(np.max(np.abs(ud - xk))))
    for sd, zk in zip(there.ss, here.zs):
        dev = max(dev, float(np.max(np.abs(sd + zk))))
    for zd, sk in zip(there.zs, here.ss):
        dev = max(dev, float(np.max(np.abs(zd - sk))))
    return dev
