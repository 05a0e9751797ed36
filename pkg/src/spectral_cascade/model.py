"""Block-diagonal normal-form matrices and their exact powers.

The diagonal model diag[T_1 : ... : T_m] has per-block data: a nonzero real
scalar for 1x1 blocks, or (modulus, angle-in-turns) for 2x2 scaled-rotation
blocks.  Powers are evaluated in closed form, |lambda|^n * R_{n theta mod 1},
with the modulus handled in log space so exponents up to ~1e5 stay exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .blocks import BlockStructure, block_diag
from .errors import PowerOverflow
from .linalg import phase_mod1, rotation_matrix

_LOG_CAP = 300.0 * math.log(10.0)


@dataclass(frozen=True)
class ScalarBlock:
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value != 0.0):
            raise ValueError(f"scalar block must be finite nonzero, got {self.value}")

    @property
    def size(self) -> int:
        return 1

    @property
    def modulus(self) -> float:
        return abs(self.value)

    def matrix(self) -> np.ndarray:
        return np.array([[self.value]])

    def power(self, n: int) -> np.ndarray:
        log_mag = n * math.log(abs(self.value))
        if log_mag > _LOG_CAP:
            raise PowerOverflow(f"scalar block power {n} overflows")
        sign = -1.0 if (self.value < 0 and n % 2 == 1) else 1.0
        mag = abs(self.value) ** n if log_mag < 700.0 else math.exp(log_mag)
        return np.array([[sign * mag]])


@dataclass(frozen=True)
class RotationBlock:
    modulus: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.modulus) and self.modulus > 0.0):
            raise ValueError(f"rotation modulus must be positive, got {self.modulus}")
        if not 0.0 <= self.theta < 1.0:
            raise ValueError(f"angle must lie in [0, 1) turns, got {self.theta}")

    @property
    def size(self) -> int:
        return 2

    def matrix(self) -> np.ndarray:
        return self.modulus * rotation_matrix(self.theta)

    def power(self, n: int) -> np.ndarray:
        log_mag = n * math.log(self.modulus)
        if log_mag > _LOG_CAP:
            raise PowerOverflow(f"rotation block power {n} overflows")
        phase = float(phase_mod1(self.theta, n))
        mag = self.modulus ** n if log_mag < 700.0 else math.exp(log_mag)
        return mag * rotation_matrix(phase)


Block = Union[ScalarBlock, RotationBlock]


@dataclass(frozen=True)
class DiagonalModel:
    """T = diag[T_1 : ... : T_m] with strictly decreasing block moduli."""

    structure: BlockStructure
    diag_blocks: tuple[Block, ...]

    def __post_init__(self):
        object.__setattr__(self, "diag_blocks", tuple(self.diag_blocks))
        if len(self.diag_blocks) != self.structure.m:
            raise ValueError("one block descriptor per structure level required")
        for blk, size in zip(self.diag_blocks, self.structure.sizes):
            if blk.size != size:
                raise ValueError("block descriptor sizes disagree with the structure")
        mods = [blk.modulus for blk in self.diag_blocks]
        for j in range(len(mods) - 1):
            if not mods[j] > mods[j + 1]:
                raise ValueError(
                    f"block moduli must strictly decrease: level {j + 1} has "
                    f"{mods[j]:g} vs {mods[j + 1]:g}"
                )

    @property
    def d(self) -> int:
        return self.structure.d

    def block(self, j: int) -> Block:
        """1-based block descriptor T_j."""
        return self.diag_blocks[j - 1]

    def matrix(self) -> np.ndarray:
        return block_diag(*(b.matrix() for b in self.diag_blocks))

    def power(self, n: int) -> np.ndarray:
        """T^n, exact block-closed form."""
        return block_diag(*(b.power(n) for b in self.diag_blocks))

    def tail(self, j: int) -> "DiagonalModel":
        """The model of D^(j-1)(T) = diag[T_j : ... : T_m] (1-based)."""
        if not 1 <= j <= self.structure.m:
            raise ValueError(f"tail level {j} out of range")
        sizes = self.structure.sizes[j - 1 :]
        return DiagonalModel(BlockStructure(sizes), self.diag_blocks[j - 1 :])

    def coordinate_log_moduli(self) -> np.ndarray:
        """log|lambda| per coordinate of R^d (block modulus repeated)."""
        out = []
        for blk in self.diag_blocks:
            out.extend([math.log(blk.modulus)] * blk.size)
        return np.array(out)

    def log_abs_det(self) -> float:
        return float(np.sum(self.coordinate_log_moduli()))

    @property
    def rotation_angles(self) -> dict[int, float]:
        """Angles theta_j keyed by 1-based rotation level."""
        return {
            j: blk.theta
            for j, blk in enumerate(self.diag_blocks, start=1)
            if isinstance(blk, RotationBlock)
        }


class DiagonalPowers:
    """Power hooks for a dominated split whose V is a diagonal model.

    The split is i_1 | (d - i_1) of ``model``; A(V) is the first block and
    D(V) the tail.  The sandwich products D(V)^n u A(V)^{-n} and
    A(V)^{-n} u D(V)^n are evaluated with combined log-scales so they stay
    bounded for arbitrarily large n (every tail modulus is below the head
    modulus).
    """

    def __init__(self, model: DiagonalModel):
        if model.structure.m < 2:
            raise ValueError("need at least two blocks to split")
        self.model = model
        self.head = model.block(1)
        self.tail_model = model.tail(2)
        # log-modulus per tail coordinate, relative to the head modulus
        self._rel = self.tail_model.coordinate_log_moduli() - math.log(self.head.modulus)

    def vn(self, n: int) -> np.ndarray:
        return self.model.power(n)

    def avn(self, n: int) -> np.ndarray:
        return self.head.power(n)

    def av_mn(self, n: int) -> np.ndarray:
        head = self.head
        if isinstance(head, ScalarBlock):
            return ScalarBlock(1.0 / head.value).power(n)
        return RotationBlock(1.0 / head.modulus, (-head.theta) % 1.0).power(n)

    def dvn(self, n: int) -> np.ndarray:
        return self.tail_model.power(n)

    def dv_mn(self, n: int) -> np.ndarray:
        inv_blocks = []
        for blk in self.tail_model.diag_blocks:
            if isinstance(blk, ScalarBlock):
                inv_blocks.append(ScalarBlock(1.0 / blk.value).power(n))
            else:
                inv_blocks.append(RotationBlock(1.0 / blk.modulus, (-blk.theta) % 1.0).power(n))
        return block_diag(*inv_blocks)

    def _rotate_tail(self, u: np.ndarray, n: int, axis: int) -> np.ndarray:
        """Apply the unit-modulus part of the tail power along rows or cols."""
        out = np.array(u, dtype=float, copy=True)
        pos = 0
        for blk in self.tail_model.diag_blocks:
            k = blk.size
            if isinstance(blk, RotationBlock):
                R = rotation_matrix(float(phase_mod1(blk.theta, n)))
                if axis == 0:
                    out[pos : pos + k, :] = R @ out[pos : pos + k, :]
                else:
                    out[:, pos : pos + k] = out[:, pos : pos + k] @ R
            elif blk.value < 0 and n % 2 == 1:
                if axis == 0:
                    out[pos : pos + k, :] *= -1.0
                else:
                    out[:, pos : pos + k] *= -1.0
            pos += k
        return out

    def _rotate_head(self, u: np.ndarray, n: int, axis: int) -> np.ndarray:
        """Apply the unit-modulus part of A(V)^{-n} along rows or cols."""
        head = self.head
        out = np.array(u, dtype=float, copy=True)
        if isinstance(head, RotationBlock):
            R = rotation_matrix(float(phase_mod1((-head.theta) % 1.0, n)))
            if axis == 0:
                out = R @ out
            else:
                out = out @ R
        elif head.value < 0 and n % 2 == 1:
            out = -out
        return out

    def dvn_u_avmn(self, u: np.ndarray, n: int) -> np.ndarray:
        """D(V)^n u A(V)^{-n}; contracting, never overflows."""
        scale = np.exp(np.minimum(n * self._rel, _LOG_CAP))[:, None]
        return self._rotate_head(self._rotate_tail(u, n, axis=0), n, axis=1) * scale

    def avmn_u_dvn(self, u: np.ndarray, n: int) -> np.ndarray:
        """A(V)^{-n} u D(V)^n; contracting, never overflows."""
        scale = np.exp(np.minimum(n * self._rel, _LOG_CAP))[None, :]
        return self._rotate_tail(self._rotate_head(u, n, axis=0), n, axis=1) * scale
