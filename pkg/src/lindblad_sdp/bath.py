"""Bosonic bath spectral functions and Redfield coefficient tables.

The spectral density is Ohmic with a Gaussian cutoff,
J(w) = gamma * w * exp(-(w/w_c)^2) for w > 0, and the occupation factor is
the Bose distribution n(w) = 1/(e^{beta (w - mu)} - 1). The half-line
principal-value integrals entering the coefficient tables are evaluated by
singularity subtraction on an adaptive quadrature truncated at a multiple
of the cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .chain import EnergyEigenbasis
from .errors import PoleError, QuadratureError, ValidationError

# exp argument beyond which 1/(e^x - 1) underflows to an exact 0
_EXP_UNDERFLOW = 700.0


@dataclass(frozen=True)
class BathSpec:
    """One thermal bath attached at a single chain site (1-based)."""

    site: int
    inv_temperature: float
    coupling: float = 1.0
    cutoff: float = 10.0
    chem_potential: float = 0.0

    def __post_init__(self):
        if self.inv_temperature <= 0:
            raise ValidationError("inv_temperature must be positive")
        if self.coupling <= 0:
            raise ValidationError("coupling must be positive")
        if self.cutoff <= 0:
            raise ValidationError("cutoff must be positive")
        if self.chem_potential > 0:
            raise ValidationError(
                "chem_potential must be <= 0 for a bosonic bath "
                f"(got {self.chem_potential})"
            )


@dataclass(frozen=True)
class QuadratureConfig:
    """Truncation and tolerance knobs for the coefficient integrals."""

    upper_cutoff_multiple: float = 6.0
    panels: int = 200
    rel_tol: float = 1e-10

    def __post_init__(self):
        if self.upper_cutoff_multiple < 3.0:
            raise ValidationError("upper_cutoff_multiple must be >= 3")
        if self.rel_tol <= 0:
            raise ValidationError("rel_tol must be positive")
        if self.panels < 10:
            raise ValidationError("panel budget too small")

    def upper_limit(self, spec: BathSpec) -> float:
        return self.upper_cutoff_multiple * spec.cutoff


def spectral_density(omega: float, spec: BathSpec) -> float:
    """Ohmic-Gaussian J(w); zero for w <= 0 (Theta(0) := 0)."""
    if omega <= 0.0:
        return 0.0
    return spec.coupling * omega * math.exp(-((omega / spec.cutoff) ** 2))


def bose_occupation(omega: float, spec: BathSpec) -> float:
    """Bose factor 1/(e^{beta (w - mu)} - 1); underflow-safe for large w."""
    x = spec.inv_temperature * (omega - spec.chem_potential)
    if x == 0.0:
        raise PoleError(f"Bose occupation diverges at omega = mu = {omega}")
    if x > _EXP_UNDERFLOW:
        return 0.0
    return 1.0 / math.expm1(x)


def jn_product(omega: float, spec: BathSpec) -> float:
    """J(w) n(w) with the removable w -> 0 singularity filled in.

    For mu = 0 the Ohmic prefactor cancels the Bose pole and the product
    tends to gamma/beta; for mu < 0 there is no pole and J(0) n(0) = 0.
    """
    if omega < 0.0:
        return 0.0
    if omega == 0.0:
        if spec.chem_potential == 0.0:
            return spec.coupling / spec.inv_temperature
        return 0.0
    return spectral_density(omega, spec) * bose_occupation(omega, spec)


def jn_plus_product(omega: float, spec: BathSpec) -> float:
    """e^{beta (w - mu)} J(w) n(w) = J(w) (n(w) + 1), same limits as jn_product."""
    if omega < 0.0:
        return 0.0
    if omega == 0.0:
        if spec.chem_potential == 0.0:
            return spec.coupling / spec.inv_temperature
        return 0.0
    x = spec.inv_temperature * (omega - spec.chem_potential)
    n = 0.0 if x > _EXP_UNDERFLOW else 1.0 / math.expm1(x)
    return spectral_density(omega, spec) * (1.0 + n)


def _checked_quad(f, lo: float, hi: float, cfg: QuadratureConfig, points=None) -> float:
    out = integrate.quad(
        f,
        lo,
        hi,
        epsabs=cfg.rel_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.panels,
        points=points,
        full_output=1,
    )
    value, abserr = out[0], out[1]
    if len(out) > 3 or abserr > cfg.rel_tol * max(1.0, abs(value)):
        raise QuadratureError(
            f"quadrature on [{lo}, {hi}] reached abs error {abserr:.3e} "
            f"(target rel_tol {cfg.rel_tol:.1e})",
            achieved_tol=abserr,
        )
    return value


def principal_value_halfline(f, pole: float, cfg: QuadratureConfig, spec: BathSpec) -> float:
    """Cauchy principal value of int_0^{K w_c} f(w) / (w - pole) dw.

    Uses singularity subtraction when the pole lies inside the interval:
    int (f(w) - f(E)) / (w - E) dw + f(E) log((U - E)/E). Outside the
    interval the integrand is regular and is integrated directly.
    """
    upper = cfg.upper_limit(spec)
    if pole <= 0.0 or pole >= upper:
        return _checked_quad(lambda w: f(w) / (w - pole), 0.0, upper, cfg)

    f_pole = f(pole)
    # derivative fallback keeps the quotient finite if quadrature ever
    # samples next to the pole
    h = 1e-7 * max(1.0, abs(pole))
    slope = (f(pole + h) - f(pole - h)) / (2.0 * h)

    def subtracted(w):
        dw = w - pole
        if abs(dw) < 1e-14 * max(1.0, abs(pole)):
            return slope
        return (f(w) - f_pole) / dw

    smooth = _checked_quad(subtracted, 0.0, upper, cfg, points=[pole])
    return smooth + f_pole * math.log((upper - pole) / pole)


def coefficient_pair(gap: float, spec: BathSpec, cfg: QuadratureConfig) -> tuple[complex, complex]:
    """Redfield coefficients (C, D) for a single Bohr gap E.

    C = J(E) n(E)/2 - i PV int J n / (w - E), D uses the (n + 1) integrand.
    Exactly at zero gap the real parts take their analytic gamma/(2 beta)
    limit and the principal values, which have no finite limit there, are
    set to zero; in a non-degenerate chain with a magnetization-conserving
    Hamiltonian these entries multiply vanishing matrix elements.
    """
    if gap == 0.0:
        re = 0.5 * spec.coupling / spec.inv_temperature
        return complex(re, 0.0), complex(re, 0.0)
    re_c = 0.5 * jn_product(gap, spec)
    re_d = 0.5 * jn_plus_product(gap, spec)
    im_c = -principal_value_halfline(lambda w: jn_product(w, spec), gap, cfg, spec)
    im_d = -principal_value_halfline(lambda w: jn_plus_product(w, spec), gap, cfg, spec)
    return complex(re_c, im_c), complex(re_d, im_d)


def redfield_coefficients(
    eigs: EnergyEigenbasis, spec: BathSpec, cfg: QuadratureConfig | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient tables C[a, c], D[a, c] over all Bohr gaps E_c - E_a.

    Entries depend on the pair only through the gap, so the integrals are
    evaluated once per distinct gap value.
    """
    if cfg is None:
        cfg = QuadratureConfig()
    gaps = eigs.gap_table()
    rounded = np.round(gaps, 12)
    unique, inverse = np.unique(rounded, return_inverse=True)
    c_flat = np.empty(unique.size, dtype=complex)
    d_flat = np.empty(unique.size, dtype=complex)
    for idx, gap in enumerate(unique):
        try:
            c_flat[idx], d_flat[idx] = coefficient_pair(float(gap), spec, cfg)
        except QuadratureError as exc:
            alpha, gamma_idx = np.argwhere(rounded == gap)[0]
            raise QuadratureError(
                f"coefficient integral failed for bath at site {spec.site}, "
                f"pair (alpha={alpha}, gamma={gamma_idx}), gap {gap}: {exc}",
                achieved_tol=exc.achieved_tol,
            ) from exc
    shape = gaps.shape
    return c_flat[inverse].reshape(shape), d_flat[inverse].reshape(shape)
