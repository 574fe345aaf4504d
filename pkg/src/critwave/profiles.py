"""Greedy multi-bubble profile extraction.

Decomposes a radial field into a signed sum of rescaled ground states
iota_j W_{lam_j} plus a residual, by matching pursuit over the scale
parameter, and checks the Pythagorean splitting of the gradient energy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateInputError, InvalidDataError, InvalidParameterError
from .ground_state import GroundStateParams, eval_w, eval_w_deriv
from .mesh import FieldState, RadialMesh
from .radial import FOUR_PI


@dataclass(frozen=True)
class Bubble:
    """One extracted rescaled ground state iota * W_lam."""

    iota: int
    lam: float
    coeff: float  # raw projection coefficient before snapping to iota
    correlation: float  # normalized gradient correlation at extraction


@dataclass
class ProfileDecomposition:
    bubbles: list
    residual: FieldState
    total_grad_sq: float
    residual_grad_sq: float

    @property
    def n_bubbles(self) -> int:
        return len(self.bubbles)


def _grad_inner(mesh: RadialMesh, du1: np.ndarray, du2: np.ndarray) -> float:
    r = mesh.nodes
    return FOUR_PI * mesh.integrate(r * r * du1 * du2)


def _w_grad_samples(mesh: RadialMesh, lam: float) -> np.ndarray:
    return eval_w_deriv(mesh.nodes, GroundStateParams(lam=lam))


def w_grad_norm_sq(mesh: RadialMesh, lam: float) -> float:
    """Mesh-truncated int |grad W_lam|^2 (used to normalize projections)."""
    dw = _w_grad_samples(mesh, lam)
    return _grad_inner(mesh, dw, dw)


def correlate_scale(mesh: RadialMesh, du: np.ndarray, lam: float) -> tuple[float, float]:
    """(correlation, coefficient) of the gradient du against grad W_lam.

    correlation is normalized to [-1, 1]; coefficient is the projection
    <du, dW_lam> / ||dW_lam||^2, both with mesh-truncated norms.
    """
    if lam <= 0:
        raise InvalidParameterError("lam must be positive")
    dw = _w_grad_samples(mesh, lam)
    inner = _grad_inner(mesh, du, dw)
    nw = _grad_inner(mesh, dw, dw)
    nu = _grad_inner(mesh, du, du)
    if nu <= 0 or nw <= 0:
        raise DegenerateInputError("vanishing gradient norm")
    return inner / np.sqrt(nu * nw), inner / nw


def _best_scale(mesh, du, lam_min, lam_max, n_seeds=8):
    """Multi-start golden-section search of |correlation| over log lam."""

    def neg_abs_corr(loglam):
        return -abs(correlate_scale(mesh, du, np.exp(loglam))[0])

    seeds = np.geomspace(lam_min, lam_max, n_seeds)
    half = 0.5 * (np.log(lam_max) - np.log(lam_min)) / (n_seeds - 1)
    best = (np.inf, None)
    for s in seeds:
        lo, hi = np.log(s) - 1.5 * half, np.log(s) + 1.5 * half
        res = minimize_scalar(
            neg_abs_corr, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10}
        )
        if res.fun < best[0]:
            best = (res.fun, float(np.exp(res.x)))
    return best[1], -best[0]


def extract(
    field: FieldState,
    max_bubbles: int = 3,
    separation_factor: float = 10.0,
    correlation_floor: float = 0.3,
    coeff_window: tuple = (0.7, 1.3),
    lam_range: tuple | None = None,
    refine_sweeps: int = 2,
) -> ProfileDecomposition:
    """Greedy matching pursuit over the dictionary {+-W_lam}.

    Repeatedly finds the scale maximizing the absolute gradient
    correlation of the residual, snaps the projection coefficient to
    +-1 when it lies in coeff_window, subtracts, and stops when the
    correlation drops below correlation_floor, the coefficient falls
    outside the window, or a scale collides with one already found.
    """
    mesh = field.mesh
    r = mesh.nodes
    if lam_range is None:
        lam_range = (5.0 * float(r[1]), mesh.rmax / 5.0)
    lam_min, lam_max = lam_range
    if not (0 < lam_min < lam_max):
        raise InvalidParameterError("need 0 < lam_min < lam_max")

    u_res = field.u().copy()
    du_res = field.du_dr().copy()
    total = _grad_inner(mesh, du_res, du_res)
    if total <= 0:
        raise DegenerateInputError("field has vanishing gradient energy")

    bubbles = []
    while len(bubbles) < max_bubbles:
        if _grad_inner(mesh, du_res, du_res) <= 1e-30 * total:
            break
        lam, corr_abs = _best_scale(mesh, du_res, lam_min, lam_max)
        if corr_abs < correlation_floor:
            break
        corr, coeff = correlate_scale(mesh, du_res, lam)
        if not (coeff_window[0] <= abs(coeff) <= coeff_window[1]):
            break
        if any(max(lam / b.lam, b.lam / lam) < separation_factor for b in bubbles):
            break
        iota = 1 if coeff > 0 else -1
        params = GroundStateParams(lam=lam, iota=iota)
        u_res = u_res - eval_w(r, params)
        du_res = du_res - eval_w_deriv(r, params)
        bubbles.append(Bubble(iota=iota, lam=lam, coeff=float(coeff), correlation=float(corr)))

    # back-fitting: re-optimize each scale against the field minus the other
    # bubbles, which removes the leading-order bias from overlapping tails
    du_field = field.du_dr()
    u_field = field.u()
    for _ in range(refine_sweeps if len(bubbles) > 1 else 0):
        for j, b in enumerate(bubbles):
            du_j = du_field.copy()
            for k, other in enumerate(bubbles):
                if k != j:
                    du_j -= eval_w_deriv(r, GroundStateParams(lam=other.lam, iota=other.iota))

            def neg_abs(loglam):
                return -abs(correlate_scale(mesh, du_j, np.exp(loglam))[0])

            lo, hi = np.log(b.lam / 3.0), np.log(b.lam * 3.0)
            res = minimize_scalar(neg_abs, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
            lam_j = float(np.exp(res.x))
            corr, coeff = correlate_scale(mesh, du_j, lam_j)
            bubbles[j] = Bubble(
                iota=1 if coeff > 0 else -1, lam=lam_j, coeff=float(coeff), correlation=float(corr)
            )
    if refine_sweeps and len(bubbles) > 1:
        u_res = u_field.copy()
        du_res = du_field.copy()
        for b in bubbles:
            params = GroundStateParams(lam=b.lam, iota=b.iota)
            u_res = u_res - eval_w(r, params)
            du_res = du_res - eval_w_deriv(r, params)

    residual = FieldState.from_u(mesh, u_res, field.ut(), t=field.t)
    return ProfileDecomposition(
        bubbles=bubbles,
        residual=residual,
        total_grad_sq=total,
        residual_grad_sq=_grad_inner(mesh, du_res, du_res),
    )


@dataclass(frozen=True)
class PythagoreanReport:
    total_grad_sq: float
    bubble_sum: float
    residual_grad_sq: float

    @property
    def defect(self) -> float:
        return abs(self.total_grad_sq - self.bubble_sum - self.residual_grad_sq)

    @property
    def relative_defect(self) -> float:
        return self.defect / self.total_grad_sq


def pythagorean_check(decomp: ProfileDecomposition) -> PythagoreanReport:
    """Gradient energy should split as sum of bubble energies + residual."""
    mesh = decomp.residual.mesh
    bubble_sum = sum(w_grad_norm_sq(mesh, b.lam) for b in decomp.bubbles)
    return PythagoreanReport(
        total_grad_sq=decomp.total_grad_sq,
        bubble_sum=float(bubble_sum),
        residual_grad_sq=decomp.residual_grad_sq,
    )


def orthogonality_matrix(decomp: ProfileDecomposition) -> np.ndarray:
    """Normalized gradient Gram matrix of the extracted bubbles."""
    mesh = decomp.residual.mesh
    dws = [_w_grad_samples(mesh, b.lam) for b in decomp.bubbles]
    norms = [np.sqrt(_grad_inner(mesh, dw, dw)) for dw in dws]
    n = len(dws)
    m = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = m[j, i] = _grad_inner(mesh, dws[i], dws[j]) / (norms[i] * norms[j])
    return m


def export_json(decomp: ProfileDecomposition, path) -> None:
    payload = {
        "bubbles": [
            {
                "iota": b.iota,
                "lam": repr(float(b.lam)),
                "coeff": repr(float(b.coeff)),
                "correlation": repr(float(b.correlation)),
            }
            for b in decomp.bubbles
        ],
        "total_grad_sq": repr(float(decomp.total_grad_sq)),
        "residual_grad_sq": repr(float(decomp.residual_grad_sq)),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def import_json(path) -> dict:
    """Load an exported decomposition summary (without the residual field)."""
    with open(path) as fh:
        payload = json.load(fh)
    try:
        return {
            "bubbles": [
                Bubble(
                    iota=int(b["iota"]),
                    lam=float(b["lam"]),
                    coeff=float(b["coeff"]),
                    correlation=float(b["correlation"]),
                )
                for b in payload["bubbles"]
            ],
            "total_grad_sq": float(payload["total_grad_sq"]),
            "residual_grad_sq": float(payload["residual_grad_sq"]),
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidDataError(f"malformed decomposition file: {exc}") from exc
