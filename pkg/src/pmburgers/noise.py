"""Seeded, two-sided, random-access Brownian increment source.

The backward-forward closure re-reads windows of noise history at every
output step, and paired full/reduced runs must consume the *same* increments,
so the generator has to support random access by (component, step index)
rather than sequential streams.  Each increment is produced by a Philox
counter-based bit generator keyed on (seed, component) with the step index as
the counter, mapped to a Gaussian through the inverse normal CDF.  The same
(seed, i, k) therefore always yields the same bits, on any platform, in any
query order.

Generation recipe (fixed for this version): one 64-bit Philox word per index,
top 53 bits to a uniform in (0, 1), scipy's ndtri to a standard normal,
scaled by sqrt(dt).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

__all__ = ["WienerPath", "PathWindow"]

_UINT64_MASK = (1 << 64) - 1
_OFFSET = 1 << 63  # maps signed step indices onto the uint64 counter range


class WienerPath:
    """Increment source for n_components independent two-sided Wiener processes.

    ``increment(i, k)`` is the increment of component i over
    [k*dt, (k+1)*dt] for any integer k, negative included.  Increments for
    distinct (i, k) are independent N(0, dt) draws; prefix sums anchored at
    index 0 reconstruct a path with W(0) = 0.

    Parameters
    ----------
    seed : int
        64-bit generator seed.
    n_components : int
        Number of independent components N.
    dt : float
        Time step of the increment grid, > 0.
    origin : int, optional
        Index offset: this path's increment at k is the seed's raw increment
        at k + origin.  Realizes the time-shift action on noise paths.
    """

    def __init__(self, seed: int, n_components: int, dt: float, origin: int = 0):
        if n_components < 1:
            raise ValueError("n_components must be >= 1")
        if not dt > 0:
            raise ValueError("dt must be > 0")
        self.seed = int(seed)
        self.n_components = int(n_components)
        self.dt = float(dt)
        self.origin = int(origin)
        self._sqrt_dt = float(np.sqrt(dt))

    def shifted(self, j: int) -> "WienerPath":
        """Path whose increment at k equals this path's increment at k + j."""
        return WienerPath(self.seed, self.n_components, self.dt,
                          origin=self.origin + j)

    def increments(self, i: int, k_lo: int, k_hi: int) -> np.ndarray:
        """Increments of component i for indices k_lo..k_hi-1."""
        if not 1 <= i <= self.n_components:
            raise ValueError(f"component {i} out of range 1..{self.n_components}")
        if k_hi < k_lo:
            raise ValueError("need k_lo <= k_hi")
        count = k_hi - k_lo
        if count == 0:
            return np.empty(0)
        c0 = (k_lo + self.origin + _OFFSET) & _UINT64_MASK
        bg = np.random.Philox(
            key=np.array([self.seed & _UINT64_MASK, i], dtype=np.uint64),
            counter=np.array([c0, 0, 0, 0], dtype=np.uint64),
        )
        # Philox emits 4 words per counter value; take the first per index so
        # that value k depends only on counter k.
        raw = bg.random_raw(4 * count)[::4]
        u = (raw >> np.uint64(11)) * (1.0 / (1 << 53)) + (1.0 / (1 << 54))
        return ndtri(u) * self._sqrt_dt

    def increment(self, i: int, k: int) -> float:
        """Single increment of component i over [k dt, (k+1) dt]."""
        return float(self.increments(i, k, k + 1)[0])

    def increment_block(self, k_lo: int, k_hi: int) -> np.ndarray:
        """All components at once; shape (n_components, k_hi - k_lo)."""
        out = np.empty((self.n_components, k_hi - k_lo))
        for i in range(1, self.n_components + 1):
            out[i - 1] = self.increments(i, k_lo, k_hi)
        return out

    def bridge_value(self, i: int, k_from: int, k_to: int) -> float:
        """W_i(k_to dt) - W_i(k_from dt); antisymmetric under swap."""
        if k_from == k_to:
            return 0.0
        if k_from < k_to:
            return float(self.increments(i, k_from, k_to).sum())
        return -float(self.increments(i, k_to, k_from).sum())

    def wiener_values(self, i: int, k_lo: int, k_hi: int) -> np.ndarray:
        """W_i at grid indices k_lo..k_hi, anchored at W_i(0) = 0."""
        vals = np.concatenate([[0.0], np.cumsum(self.increments(i, k_lo, k_hi))])
        return vals + self.bridge_value(i, 0, k_lo)

    def __repr__(self):
        return (f"WienerPath(seed={self.seed}, n_components={self.n_components}, "
                f"dt={self.dt}, origin={self.origin})")


@dataclass(frozen=True)
class PathWindow:
    """Materialized increments of all components over [k_lo, k_hi).

    Long runs and window re-integration read the same indices many times;
    this caches one contiguous block as a plain array.  Column j holds the
    increments at index k_lo + j and equals the generator output exactly.
    """

    path: WienerPath
    k_lo: int
    k_hi: int
    increments: np.ndarray  # (n_components, k_hi - k_lo)

    @classmethod
    def build(cls, path: WienerPath, k_lo: int, k_hi: int) -> "PathWindow":
        block = path.increment_block(k_lo, k_hi)
        block.setflags(write=False)
        return cls(path=path, k_lo=k_lo, k_hi=k_hi, increments=block)

    def slice(self, k_from: int, k_to: int) -> np.ndarray:
        """View of the cached increments for indices k_from..k_to-1."""
        if k_from < self.k_lo or k_to > self.k_hi:
            raise ValueError(
                f"indices [{k_from}, {k_to}) outside cached window "
                f"[{self.k_lo}, {self.k_hi})"
            )
        return self.increments[:, k_from - self.k_lo : k_to - self.k_lo]

    def cumulative(self, k_ref: int) -> np.ndarray:
        """W values at grid indices k_lo..k_hi anchored at W(k_ref dt) = 0.

        Shape (n_components, k_hi - k_lo + 1).
        """
        if not self.k_lo <= k_ref <= self.k_hi:
            raise ValueError("reference index outside the cached window")
        n = self.increments.shape[0]
        vals = np.zeros((n, self.k_hi - self.k_lo + 1))
        np.cumsum(self.increments, axis=1, out=vals[:, 1:])
        return vals - vals[:, [k_ref - self.k_lo]]
