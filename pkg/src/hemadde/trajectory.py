"""Piecewise cubic-Hermite dense output for (x(t), y(t))."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

# coverage slack for evaluation at the span endpoints
SPAN_TOL = 1e-9


class CoverageError(ValueError):
    """Requested time lies outside the stored solution."""


def hermite_basis(theta):
    """Cubic Hermite basis (h00, h10, h01, h11) at local coordinates ``theta``."""
    th = np.asarray(theta, dtype=float)
    th2 = th * th
    th3 = th2 * th
    return np.stack([2 * th3 - 3 * th2 + 1, th3 - 2 * th2 + th,
                     -2 * th3 + 3 * th2, th3 - th2], axis=-1)


def hermite_basis_prime(theta):
    th = np.asarray(theta, dtype=float)
    th2 = th * th
    return np.stack([6 * th2 - 6 * th, 3 * th2 - 4 * th + 1,
                     -6 * th2 + 6 * th, 3 * th2 - 2 * th], axis=-1)


@dataclass
class Trajectory:
    """Solution samples on a grid ``t`` with derivatives for Hermite interpolation.

    Segment ``i`` is ``[t[i], t[i+1]]``; values and slopes are shared at the
    nodes, so the interpolant is C1.
    """

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        for name in ("x", "y", "dx", "dy"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != self.t.shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {self.t.shape}")
            setattr(self, name, arr)
        if self.t.size and np.any(np.diff(self.t) <= 0):
            raise ValueError("trajectory grid must be strictly increasing")

    @property
    def t_span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def segments(self):
        return list(zip(self.t[:-1].tolist(), self.t[1:].tolist()))

    def __len__(self):
        return self.t.size

    def _locate(self, s):
        s = np.asarray(s, dtype=float)
        t0, t1 = self.t_span
        tol = SPAN_TOL * max(1.0, abs(t1))
        if s.size and (np.min(s) < t0 - tol or np.max(s) > t1 + tol):
            raise CoverageError(
                f"times [{np.min(s):.6g}, {np.max(s):.6g}] outside trajectory span [{t0}, {t1}]")
        if self.t.size == 1:
            return s, np.zeros(s.shape, dtype=int), np.zeros(s.shape), np.ones(s.shape)
        i = np.clip(np.searchsorted(self.t, s, side="right") - 1, 0, self.t.size - 2)
        h = self.t[i + 1] - self.t[i]
        return s, i, (s - self.t[i]) / h, h

    def _interp(self, s, v, dv, derivative=False):
        s, i, th, h = self._locate(s)
        if self.t.size == 1:
            out = np.full(s.shape, dv[0] if derivative else v[0])
            return out if out.ndim else float(out)
        if derivative:
            B = hermite_basis_prime(th)
            out = (B[..., 0] * v[i] + B[..., 2] * v[i + 1]) / h + B[..., 1] * dv[i] + B[..., 3] * dv[i + 1]
        else:
            B = hermite_basis(th)
            out = B[..., 0] * v[i] + B[..., 1] * h * dv[i] + B[..., 2] * v[i + 1] + B[..., 3] * h * dv[i + 1]
        return out if out.ndim else float(out)

    def x_at(self, s, derivative=False):
        return self._interp(s, self.x, self.dx, derivative)

    def y_at(self, s, derivative=False):
        return self._interp(s, self.y, self.dy, derivative)

    def __call__(self, s, component="x"):
        if component == "x":
            return self.x_at(s)
        if component == "y":
            return self.y_at(s)
        raise ValueError(f"unknown component {component!r}")

    def restrict(self, t0: float, t1: float) -> Trajectory:
        """Grid nodes inside ``[t0, t1]`` (no interpolation at the cut)."""
        m = (self.t >= t0 - SPAN_TOL) & (self.t <= t1 + SPAN_TOL)
        return Trajectory(self.t[m], self.x[m], self.y[m], self.dx[m], self.dy[m])

    def concat(self, other: Trajectory) -> Trajectory:
        """Join ``other`` starting at this trajectory's last node.

        The shared node takes ``other``'s values.
        """
        if other.t.size == 0:
            return self
        if self.t.size == 0:
            return other
        tol = SPAN_TOL * max(1.0, abs(self.t[-1]))
        if abs(other.t[0] - self.t[-1]) > tol:
            raise ValueError(f"cannot join: gap between {self.t[-1]} and {other.t[0]}")
        return Trajectory(*(np.concatenate([getattr(self, f)[:-1], getattr(other, f)])
                            for f in ("t", "x", "y", "dx", "dy")))

    def sample(self, stride: float | None = None, t0: float | None = None,
               t1: float | None = None):
        """Return ``(t, x, y)`` on a uniform grid (or the stored grid when stride is None)."""
        lo = self.t[0] if t0 is None else t0
        hi = self.t[-1] if t1 is None else t1
        if stride is None:
            m = (self.t >= lo - SPAN_TOL) & (self.t <= hi + SPAN_TOL)
            return self.t[m], self.x[m], self.y[m]
        n = int(np.floor((hi - lo) / stride + 1e-9))
        ts = lo + stride * np.arange(n + 1)
        return ts, self.x_at(ts), self.y_at(ts)

    def to_csv(self, path, stride: float | None = None):
        ts, xs, ys = self.sample(stride)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "y"])
            for row in zip(ts, xs, ys):
                w.writerow([format_float(v) for v in row])


def format_float(v: float) -> str:
    """17 significant digits, scientific notation."""
    return f"{v:.16e}"


def empty_trajectory() -> Trajectory:
    z = np.empty(0)
    return Trajectory(z, z, z, z, z)
