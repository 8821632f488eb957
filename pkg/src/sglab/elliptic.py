"""Elliptic solvers and Hessian determinant algebra.

The SG potential solves a Poisson equation with a Monge-Ampere
perturbation,

    lap psi = rho - eps * det(D^2 psi),    <psi> = 0,

handled by Picard iteration: each sweep inverts the Laplacian with the
determinant frozen at the previous iterate. The map contracts while
eps * ||D^2 psi||_Linf stays below 1/2, which the bootstrap regime
(margin against 1/4) guarantees with room to spare.

Matrix norm conventions, used consistently everywhere:
  - pointwise Linf of a Hessian: symmetric 2x2 operator norm
    (largest absolute eigenvalue), maximized over the grid;
  - L2 of a Hessian: Frobenius norm with the off-diagonal counted
    twice, so ||D^2 psi||_L2 equals ||lap psi||_L2 exactly on the
    torus (integration by parts is exact mode by mode).

All quadratic products are formed pointwise and 2/3-dealiased, which
keeps them alias-free for band-limited inputs.
"""

from dataclasses import dataclass

import numpy as np

from .spectral import (
    ScalarField,
    NormKind,
    derivative,
    inv_laplacian,
    dealias,
    norm,
)

__all__ = [
    "EllipticDivergenceError",
    "EllipticConvergenceError",
    "MASolveReport",
    "BootstrapStatus",
    "hessian",
    "hessian_det",
    "cofactor_contract",
    "det_expansion_residual",
    "hessian_linf",
    "hessian_l2",
    "solve_sg_potential",
    "solve_corrector_potential",
    "bootstrap_status",
]


class EllipticDivergenceError(RuntimeError):
    """Picard iteration left its contraction region (eps * ||D^2 psi|| > 1/2)."""


class EllipticConvergenceError(RuntimeError):
    """Picard iteration failed to meet tolerance within max_iter sweeps."""


@dataclass(frozen=True)
class MASolveReport:
    """Solver diagnostics: sweeps used, final residual, Hessian size."""

    iterations: int
    residual: float
    hessian_linf: float
    converged: bool


@dataclass(frozen=True)
class BootstrapStatus:
    """Snapshot of the regime margins at one time.

    grad_margin    = 1/4 - eps * ||grad rho||_Linf
    hessian_margin = 1/4 - eps * ||D^2 psi||_Linf
    inside         = both margins strictly positive
    log_estimate_ratio compares ||D^2 psi||_Linf against the
    log-endpoint bound  m0 * (1 + log+ (||rho||_Calpha / m0)).
    """

    grad_margin: float
    hessian_margin: float
    log_estimate_ratio: float
    inside: bool


def hessian(psi: ScalarField) -> tuple[ScalarField, ScalarField, ScalarField]:
    """Return (psi_xx, psi_xy, psi_yy) via spectral differentiation."""
    return derivative(psi, (2, 0)), derivative(psi, (1, 1)), derivative(psi, (0, 2))


def hessian_det(psi: ScalarField) -> ScalarField:
    """det D^2 psi = psi_xx psi_yy - psi_xy^2, dealiased.

    The result has numerically zero mean: the determinant is a sum of
    perfect mixed derivatives, so its integral over the torus vanishes.
    """
    pxx, pxy, pyy = hessian(psi)
    det = pxx * pyy - pxy * pxy
    return dealias(det)


def cofactor_contract(phi: ScalarField, eta: ScalarField) -> ScalarField:
    """(cof D^2 phi) : D^2 eta = phi_yy eta_xx - 2 phi_xy eta_xy + phi_xx eta_yy."""
    axx, axy, ayy = hessian(phi)
    bxx, bxy, byy = hessian(eta)
    out = ayy * bxx - 2.0 * (axy * bxy) + axx * byy
    return dealias(out)


def det_expansion_residual(phi: ScalarField, eta: ScalarField, eps: float) -> float:
    """L2 norm of det D^2(phi + eps eta) minus its exact quadratic expansion.

    det is quadratic, so
        det D^2(phi + eps eta)
          = det D^2 phi + eps (cof D^2 phi):D^2 eta + eps^2 det D^2 eta
    holds identically; the residual is pure floating-point noise and a
    sharp canary for inconsistent dealiasing between the two sides.
    """
    combined = hessian_det(phi + eps * eta)
    expanded = (
        hessian_det(phi)
        + eps * cofactor_contract(phi, eta)
        + (eps * eps) * hessian_det(eta)
    )
    return norm(combined - expanded, NormKind.L2)


def _hessian_operator_linf(pxx, pxy, pyy) -> float:
    # largest |eigenvalue| of a symmetric 2x2 field, maximized over the grid
    half_tr = 0.5 * (pxx.values + pyy.values)
    disc = np.sqrt((0.5 * (pxx.values - pyy.values)) ** 2 + pxy.values ** 2)
    return float(np.max(np.abs(half_tr) + disc))


def hessian_linf(psi: ScalarField) -> float:
    """Pointwise operator norm of D^2 psi, maximized over the grid."""
    return _hessian_operator_linf(*hessian(psi))


def hessian_l2(psi: ScalarField) -> float:
    """Frobenius L2 norm of D^2 psi (equals ||lap psi||_L2 on the torus)."""
    pxx, pxy, pyy = hessian(psi)
    sq = pxx.values ** 2 + 2.0 * pxy.values ** 2 + pyy.values ** 2
    return float(np.sqrt(np.mean(sq)))


def solve_sg_potential(
    rho: ScalarField,
    eps: float,
    tol: float = 1e-12,
    max_iter: int = 100,
) -> tuple[ScalarField, MASolveReport]:
    """Solve lap psi = rho - eps det D^2 psi with <psi> = 0.

    Picard sweeps psi <- lap^-1(rho - eps det D^2 psi_prev), seeded with
    the Poisson solution. Stops when the relative H1 update drops below
    tol. eps = 0 returns the plain Poisson solution after one sweep, and
    so does any rho whose potential has identically zero determinant
    (e.g. data varying in only one direction).

    Raises EllipticDivergenceError when eps * ||D^2 psi|| exceeds 1/2
    while the sweep update is still above tol (outside the contraction
    regime with work left to do; a converged sweep never trips it, so
    large-Hessian data with vanishing determinant still solve exactly)
    and EllipticConvergenceError when max_iter sweeps do not reach tol.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    psi = inv_laplacian(rho)
    h1 = NormKind.Hs(1.0)
    for sweep in range(1, max_iter + 1):
        hlinf = hessian_linf(psi)
        det = hessian_det(psi)
        rhs = ScalarField.from_spectral(
            rho.grid, rho.spectral - eps * det.spectral
        )
        psi_next = inv_laplacian(rhs)
        update = norm(psi_next - psi, h1)
        scale = max(norm(psi_next, h1), 1e-14)
        psi = psi_next
        if update / scale <= tol:
            lap = derivative(psi, (2, 0)) + derivative(psi, (0, 2))
            resid = norm(lap - rho + eps * hessian_det(psi), NormKind.L2)
            return psi, MASolveReport(
                iterations=sweep,
                residual=resid,
                hessian_linf=hessian_linf(psi),
                converged=True,
            )
        if eps * hlinf > 0.5:
            raise EllipticDivergenceError(
                f"eps*||D^2 psi||_Linf = {eps * hlinf:.3e} > 1/2 at sweep {sweep}"
            )
    raise EllipticConvergenceError(
        f"no convergence to tol={tol:g} within {max_iter} sweeps"
    )


def solve_corrector_potential(
    rho1: ScalarField, phibar: ScalarField
) -> ScalarField:
    """First-order potential: lap phi1 = rho1 - det D^2 phibar, <phi1> = 0."""
    det = hessian_det(phibar)
    rhs = ScalarField.from_spectral(rho1.grid, rho1.spectral - det.spectral)
    return inv_laplacian(rhs)


def bootstrap_status(
    rho: ScalarField,
    psi: ScalarField,
    eps: float,
    alpha: float = 0.5,
    m0: float | None = None,
) -> BootstrapStatus:
    """Evaluate the regime margins for a (rho, psi) pair.

    m0 defaults to ||rho||_Linf of the supplied field; callers tracking a
    trajectory should pass the initial value, which transport conserves.
    """
    if m0 is None:
        m0 = norm(rho, NormKind.Linf)
    grad_margin = 0.25 - eps * norm(rho, NormKind.GradLinf)
    hlinf = hessian_linf(psi)
    hessian_margin = 0.25 - eps * hlinf
    calpha = norm(rho, NormKind.Calpha(alpha))
    if m0 <= 0:
        ratio = np.inf if hlinf > 0 else 0.0
    else:
        logplus = max(0.0, np.log(calpha / m0)) if calpha > 0 else 0.0
        ratio = hlinf / (m0 * (1.0 + logplus))
    return BootstrapStatus(
        grad_margin=float(grad_margin),
        hessian_margin=float(hessian_margin),
        log_estimate_ratio=float(ratio),
        inside=bool(grad_margin > 0 and hessian_margin > 0),
    )
