"""Cell-interface reconstruction and two-state numerical flux functions.

Reconstruction operates component-wise on conserved variables.  The WENO
variants blend two linear substencils over the window (u_{i-1}, u_i, u_{i+1});
WENO3 uses the classical third-order ideal weights (1/3, 2/3), WENO2 the
second-order central-slope weights (1/2, 1/2).  Both need a ghost width of 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .equations import (
    EquationModel,
    EULER,
    max_wave_speed,
    physical_flux,
    pressure,
    sound_speed,
)
from .errors import ConfigError, UnphysicalStateError
from .grid import Field, data_axis, _sl


class ReconstructionKind(Enum):
    NONE = "none"
    WENO2 = "weno2"
    WENO3 = "weno3"


class FluxKind(Enum):
    RUSANOV = "rusanov"
    HLLC = "hllc"


@dataclass(frozen=True)
class Reconstruction:
    kind: ReconstructionKind = ReconstructionKind.NONE
    epsilon: float = 1e-6

    @property
    def radius(self) -> int:
        return 1 if self.kind is ReconstructionKind.NONE else 2


#: ideal linear weights (downwind-biased substencil second)
IDEAL_WEIGHTS = {
    ReconstructionKind.WENO2: (0.5, 0.5),
    ReconstructionKind.WENO3: (1.0 / 3.0, 2.0 / 3.0),
}


class FacePair(NamedTuple):
    """Reconstructed states on the two sides of each interface."""

    uL: np.ndarray
    uR: np.ndarray


def weno_weights(um, uc, up, kind: ReconstructionKind, epsilon: float = 1e-6):
    """Normalized nonlinear weights for the two substencils of the window.

    Equal smoothness indicators give back the ideal weights exactly.
    """
    if kind not in IDEAL_WEIGHTS:
        raise ConfigError(f"weno_weights needs WENO2 or WENO3, got {kind}")
    d0, d1 = IDEAL_WEIGHTS[kind]
    beta0 = (np.asarray(uc) - np.asarray(um)) ** 2
    beta1 = (np.asarray(up) - np.asarray(uc)) ** 2
    a0 = d0 / (epsilon + beta0) ** 2
    a1 = d1 / (epsilon + beta1) ** 2
    total = a0 + a1
    return a0 / total, a1 / total


def weno_face_value(um, uc, up, kind: ReconstructionKind, epsilon: float):
    """Reconstructed value at the downwind face of the center cell.

    Incremental form keeps constant data bitwise exact: both candidate
    polynomials are written as uc plus a slope correction.
    """
    w0, w1 = weno_weights(um, uc, up, kind, epsilon)
    return uc + 0.5 * (w0 * (uc - um) + w1 * (up - uc))


def reconstruct_axis(
    data: np.ndarray, np_ax: int, n: int, g: int, recon: Reconstruction
) -> FacePair:
    """Face states at the n+1 interfaces of one axis of a padded array.

    Interface j sits between padded cells (g-1+j, g+j), j = 0..n.
    """
    nd = data.ndim
    if recon.radius > g:
        raise ConfigError(
            f"reconstruction radius {recon.radius} exceeds ghost width {g}"
        )

    def take(lo, hi):
        return data[_sl(nd, np_ax, slice(lo, hi))]

    if recon.kind is ReconstructionKind.NONE:
        return FacePair(take(g - 1, g + n), take(g, g + n + 1))
    # left state: downwind face of cells g-1 .. g+n-1
    uL = weno_face_value(
        take(g - 2, g + n - 1), take(g - 1, g + n), take(g, g + n + 1),
        recon.kind, recon.epsilon,
    )
    # right state: mirrored stencil around cells g .. g+n
    uR = weno_face_value(
        take(g + 1, g + n + 2), take(g, g + n + 1), take(g - 1, g + n),
        recon.kind, recon.epsilon,
    )
    return FacePair(uL, uR)


def reconstruct(field: Field, axis: int, recon: Reconstruction) -> FacePair:
    """Face states along ``axis`` for every interface of a ghost-filled field."""
    grid = field.grid
    return reconstruct_axis(
        field.data,
        data_axis(grid.dim, axis),
        grid.cells[axis],
        grid.ghost_width,
        recon,
    )


def rusanov_flux(model: EquationModel, pair: FacePair, axis: int) -> np.ndarray:
    """Local Lax-Friedrichs flux: central average plus maximal dissipation."""
    uL, uR = np.asarray(pair.uL, dtype=float), np.asarray(pair.uR, dtype=float)
    fL = physical_flux(model, uL, axis)
    fR = physical_flux(model, uR, axis)
    s = np.maximum(
        max_wave_speed(model, uL, axis, check=False),
        max_wave_speed(model, uR, axis, check=False),
    )
    return 0.5 * (fL + fR) - 0.5 * s * (uR - uL)


def hllc_flux(model: EquationModel, pair: FacePair, axis: int) -> np.ndarray:
    """Three-wave HLLC flux for Euler with Davis wave-speed estimates.

    Exactly consistent: equal input states return the physical flux bitwise.
    """
    if model.kind != EULER:
        raise ConfigError("HLLC flux is only defined for the Euler equations")
    uL = np.asarray(pair.uL, dtype=float)
    uR = np.asarray(pair.uR, dtype=float)
    fL = physical_flux(model, uL, axis)
    fR = physical_flux(model, uR, axis)

    dim = model.dim
    rhoL, rhoR = uL[0], uR[0]
    vL, vR = uL[1 + axis] / rhoL, uR[1 + axis] / rhoR
    pL, pR = pressure(model, uL), pressure(model, uR)
    cL, cR = sound_speed(model, uL), sound_speed(model, uR)
    EL, ER = uL[1 + dim], uR[1 + dim]

    sL = np.minimum(vL - cL, vR - cR)
    sR = np.maximum(vL + cL, vR + cR)
    if np.any(sR - sL <= 0):
        raise UnphysicalStateError("degenerate HLLC wave fan (sL >= sR)")

    den = rhoL * (sL - vL) - rhoR * (sR - vR)  # strictly negative for c > 0
    sM = (pR - pL + rhoL * vL * (sL - vL) - rhoR * vR * (sR - vR)) / den
    p_star = pL + rhoL * (sL - vL) * (sM - vL)

    def star_state(u, rho, v, p, E, sK):
        factor = rho * (sK - v) / (sK - sM)
        out = np.empty_like(u)
        out[0] = factor
        for j in range(dim):
            out[1 + j] = factor * (u[1 + j] / rho)
        out[1 + axis] = factor * sM
        out[1 + dim] = factor * (E / rho + (sM - v) * (sM + p / (rho * (sK - v))))
        return out

    ustarL = star_state(uL, rhoL, vL, pL, EL, sL)
    ustarR = star_state(uR, rhoR, vR, pR, ER, sR)

    fstarL = fL + sL * (ustarL - uL)
    fstarR = fR + sR * (ustarR - uR)

    flux = np.where(
        sL >= 0,
        fL,
        np.where(sM >= 0, fstarL, np.where(sR > 0, fstarR, fR)),
    )
    # exact consistency F(u, u) = f(u)
    equal = np.all(uL == uR, axis=0)
    return np.where(equal, fL, flux)


FLUX_FUNCTIONS = {
    FluxKind.RUSANOV: rusanov_flux,
    FluxKind.HLLC: hllc_flux,
}


def numerical_flux(model: EquationModel, kind: FluxKind, pair: FacePair, axis: int) -> np.ndarray:
    return FLUX_FUNCTIONS[kind](model, pair, axis)
