"""Periodic grid, field snapshots, and the delay-line history ring."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = ["Grid", "Field", "HistoryRing"]


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-length/2, length/2).

    n must be a power of two (>= 256) so transforms stay fast and mode
    frequencies are the usual FFT set 2*pi*k/length.
    """

    length: float
    n: int

    def __post_init__(self):
        if self.length <= 0.0:
            raise ConfigError(f"grid length must be positive, got {self.length}")
        if self.n < 256 or self.n & (self.n - 1):
            raise ConfigError(f"grid n must be a power of two >= 256, got {self.n}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    def integrate(self, values: np.ndarray) -> float:
        # periodic trapezoid = plain rectangle sum
        return float(np.sum(values) * self.dx)


@dataclass(frozen=True)
class Field:
    """One spatial snapshot."""

    values: np.ndarray
    time: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ConfigError(f"non-finite field values at t={self.time}")


class HistoryRing:
    """Ring of the last n_h+1 snapshots with their time derivatives.

    dt = h/n_h exactly, so the delayed time t-h always lands on the oldest
    stored node; the one-in step t-h+dt is the next node and the midpoint
    t-h+dt/2 comes from cubic Hermite interpolation on that cell.
    """

    def __init__(self, h: float, n_h: int, width: int, dtype=complex):
        if n_h < 1:
            raise ConfigError(f"n_h must be >= 1, got {n_h}")
        self.h = float(h)
        self.n_h = int(n_h)
        self.dt = self.h / self.n_h
        self.vals = np.zeros((n_h + 1, width), dtype)
        self.ders = np.zeros((n_h + 1, width), dtype)
        self._step = 0  # global index of the newest stored snapshot

    def fill(self, vals: np.ndarray, ders: np.ndarray) -> None:
        """Load the initial history; row j is time -h + j*dt."""
        if vals.shape != self.vals.shape or ders.shape != self.ders.shape:
            raise ConfigError(
                f"history shape {vals.shape} does not match ring "
                f"{self.vals.shape}")
        self.vals[:] = vals
        self.ders[:] = ders
        self._step = 0

    def _slot(self, step: int) -> int:
        # global step s lives in row (s + n_h) mod (n_h + 1); fill() loads
        # row j at time -h + j dt, i.e. step j - n_h, so step 0 -> row n_h
        return (step + self.n_h) % (self.n_h + 1)

    @property
    def newest(self) -> np.ndarray:
        return self.vals[self._slot(self._step)]

    def delayed_nodes(self):
        """(value, derivative) pairs at t-h and t-h+dt for the step
        starting at the newest stored time t."""
        s0 = self._slot(self._step - self.n_h)
        s1 = self._slot(self._step - self.n_h + 1)
        return (self.vals[s0], self.ders[s0]), (self.vals[s1], self.ders[s1])

    def delayed_mid(self) -> np.ndarray:
        """Cubic Hermite value at t-h+dt/2."""
        (v0, d0), (v1, d1) = self.delayed_nodes()
        return 0.5 * (v0 + v1) + 0.125 * self.dt * (d0 - d1)

    def push(self, val: np.ndarray, der: np.ndarray) -> None:
        self._step += 1
        s = self._slot(self._step)
        self.vals[s] = val
        self.ders[s] = der

    def window(self):
        """Stored nodes in time order (values, derivatives); row j is time
        t - h + j*dt for the newest stored time t.  Feeding this back as a
        history pair resumes a run exactly."""
        idx = [self._slot(self._step - self.n_h + j)
               for j in range(self.n_h + 1)]
        return self.vals[idx].copy(), self.ders[idx].copy()
