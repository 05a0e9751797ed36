"""Reference spectra of products L * T^n, scale-aware.

The product of a dense L with a graded diagonal power T^n spans many orders
of magnitude, so eigenvalues are carried in split form: a unit-modulus
direction together with a natural-log modulus.  Spectra are computed on a
rescaled copy of the product; the dense QR solver handles moderate grading
(validated to ~30 decimal digits of spread), and a high-precision solver
takes over beyond that up to a hard cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import PowerOverflow
from .linalg import eigenvalues, phase_mod1, rotation_matrix
from .model import DiagonalModel

NUMPY_DIGIT_CAP = 30.0
MP_DIGIT_CAP = 40_000.0
_LN10 = math.log(10.0)


@dataclass(frozen=True)
class ScaledSpectrum:
    """Eigenvalue multiset stored as unit directions and log moduli."""

    unit: np.ndarray  # complex, modulus 1 (0 for an exact zero)
    log_mod: np.ndarray  # natural log of the modulus

    @classmethod
    def from_values(cls, values, log_scale: float = 0.0) -> "ScaledSpectrum":
        values = np.asarray(values, dtype=complex)
        mods = np.abs(values)
        unit = np.where(mods > 0, values / np.maximum(mods, 1e-300), 0.0)
        log_mod = np.where(mods > 0, np.log(np.maximum(mods, 1e-300)) + log_scale, -np.inf)
        return cls(unit=unit, log_mod=np.asarray(log_mod, dtype=float))

    def __len__(self) -> int:
        return len(self.unit)

    def values(self) -> np.ndarray:
        """Plain complex eigenvalues; fails when they leave float range."""
        if np.any(np.abs(self.log_mod) > 690.0):
            raise PowerOverflow("spectrum moduli exceed the float range")
        return self.unit * np.exp(self.log_mod)

    def real_simple(self, gap_tol: float = 1e-9):
        """All-real with distinct moduli, judged in split form.

        Returns (ok, min relative modulus gap); relative gaps are computed
        as 1 - exp(log difference) so arbitrary scales are fine.
        """
        if np.any(np.abs(self.unit.imag) > gap_tol):
            return False, 0.0
        order = np.argsort(self.log_mod)[::-1]
        logs = self.log_mod[order]
        min_gap = math.inf
        ok = True
        for i in range(len(logs) - 1):
            gap = -math.expm1(logs[i + 1] - logs[i])
            min_gap = min(min_gap, gap)
            if gap <= gap_tol:
                ok = False
        return ok, min_gap

    def concat(self, other: "ScaledSpectrum") -> "ScaledSpectrum":
        return ScaledSpectrum(
            unit=np.concatenate([self.unit, other.unit]),
            log_mod=np.concatenate([self.log_mod, other.log_mod]),
        )


def match_scaled(a: ScaledSpectrum, b: ScaledSpectrum) -> float:
    """Maximal relative mismatch between two split-form spectra."""
    if len(a) != len(b):
        raise ValueError(f"spectra of different sizes: {len(a)} vs {len(b)}")
    dlog = a.log_mod[:, None] - b.log_mod[None, :]
    ratio = np.exp(np.clip(dlog, -50.0, 50.0))
    cost = np.abs(a.unit[:, None] * ratio - b.unit[None, :])
    cost = np.where(np.abs(dlog) > 50.0, 1e30, cost)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def spread_digits(model: DiagonalModel, n: int) -> float:
    """Decimal digits spanned by the coordinate moduli of T^n."""
    logs = n * model.coordinate_log_moduli()
    return float((logs.max() - logs.min()) / _LN10)


def _scaled_power_blocks(model: DiagonalModel, n: int, center: float) -> np.ndarray:
    """T^n * exp(-center) assembled blockwise in closed form."""
    d = model.d
    out = np.zeros((d, d))
    pos = 0
    for blk in model.diag_blocks:
        log_mag = n * math.log(blk.modulus) - center
        mag = math.exp(log_mag)
        if blk.size == 1:
            sign = -1.0 if (blk.value < 0 and n % 2 == 1) else 1.0
            out[pos, pos] = sign * mag
        else:
            phase = float(phase_mod1(blk.theta, n))
            out[pos : pos + 2, pos : pos + 2] = mag * rotation_matrix(phase)
        pos += blk.size
    return out


def product_spectrum(L: np.ndarray, model: DiagonalModel, n: int) -> ScaledSpectrum:
    """Spectrum of L T^n by a direct dense eigensolver, in split form.

    Independent of the recursive decomposition; serves as the certifying
    oracle.  Raises PowerOverflow when the modulus spread is beyond even
    the high-precision route.
    """
    L = np.asarray(L, dtype=float)
    logs = n * model.coordinate_log_moduli()
    center = float((logs.max() + logs.min()) / 2.0)
    digits = float((logs.max() - logs.min()) / _LN10)
    if digits <= NUMPY_DIGIT_CAP:
        M = L @ _scaled_power_blocks(model, n, center)
        return ScaledSpectrum.from_values(eigenvalues(M), log_scale=center)
    if digits > MP_DIGIT_CAP:
        raise PowerOverflow(
            f"modulus spread of {digits:.0f} digits exceeds the oracle cap"
        )
    return _product_spectrum_mp(L, model, n, center, digits)


def _product_spectrum_mp(L, model, n, center, digits) -> ScaledSpectrum:
    import mpmath as mp

    with mp.workdps(int(digits) + 30):
        d = model.d
        Tn = mp.zeros(d, d)
        pos = 0
        for blk in model.diag_blocks:
            mag = mp.e ** (n * mp.log(blk.modulus) - center)
            if blk.size == 1:
                if blk.value < 0 and n % 2 == 1:
                    mag = -mag
                Tn[pos, pos] = mag
            else:
                ang = 2 * mp.pi * mp.mpf(phase_mod1(blk.theta, n))
                c, s = mp.cos(ang), mp.sin(ang)
                Tn[pos, pos] = mag * c
                Tn[pos, pos + 1] = -mag * s
                Tn[pos + 1, pos] = mag * s
                Tn[pos + 1, pos + 1] = mag * c
            pos += blk.size
        M = mp.matrix(L.tolist()) * Tn
        vals, _ = mp.eig(M)
        unit = []
        log_mod = []
        for v in vals:
            v = mp.mpc(v)
            mod = mp.sqrt(v.real ** 2 + v.imag ** 2)
            if mod == 0:
                unit.append(0j)
                log_mod.append(-math.inf)
            else:
                unit.append(complex(v.real / mod) + 1j * float(v.imag / mod))
                log_mod.append(float(mp.log(mod)) + center)
    return ScaledSpectrum(unit=np.array(unit), log_mod=np.array(log_mod))
