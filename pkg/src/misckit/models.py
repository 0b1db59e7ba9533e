"""Model hierarchies and the keyed evaluation cache.

Hierarchies expose ``evaluate(alpha, y)`` and ``cost(alpha)``.  Evaluations
are deterministic: the synthetic noise is generated by a counter-based
generator keyed by (master seed, fidelity, point bits), so a repeated call
returns the same value bit for bit, exactly like a real solver returning
the same wrong answer twice.
"""

from __future__ import annotations

import hashlib
import struct
import threading
import warnings

import numpy as np
from scipy.linalg import solve_banded

__all__ = [
    "ModelHierarchy",
    "Genz2dgpNoisy",
    "Parabolic1dNoisy",
    "SingleFidelityView",
    "EvalCache",
    "keyed_standard_normal",
]


def keyed_standard_normal(master_seed: int, tag, y) -> float:
    """Standard normal draw keyed by seed, integer tag(s) and point bits."""
    payload = struct.pack("<q", master_seed)
    tag = (tag,) if isinstance(tag, int) else tuple(tag)
    payload += struct.pack(f"<{len(tag)}q", *tag)
    payload += struct.pack(f"<{len(y)}d", *[float(c) for c in y])
    digest = hashlib.blake2b(payload, digest_size=16).digest()
    key = int.from_bytes(digest, "little")
    return float(np.random.Generator(np.random.Philox(key=key)).standard_normal())


class ModelHierarchy:
    """Family of evaluable fidelities with per-fidelity solve costs."""

    n_model: int
    n_y: int

    def evaluate(self, alpha, y) -> float:
        raise NotImplementedError

    def cost(self, alpha) -> float:
        raise NotImplementedError

    def max_levels(self):
        """Upper bound per fidelity dimension, or None when unbounded."""
        return None


class Genz2dgpNoisy(ModelHierarchy):
    """Two-dimensional Gaussian peak with fidelity-dependent synthetic noise.

    The noiseless part peaks at (0.5, 0.5); fidelity ``a`` adds a keyed
    normal draw of scale 10^(-2a) and costs 10^a.
    """

    C = 36.0 / 13.0
    C1 = C / 4.0
    C2 = C / 9.0

    n_model = 1
    n_y = 2

    def __init__(self, master_seed: int = 0, max_level: int = 8):
        self.master_seed = int(master_seed)
        self.max_level = int(max_level)

    def noiseless(self, y) -> float:
        dx = y[0] - 0.5
        dy = y[1] - 0.5
        return float(np.exp(-(self.C1**2) * dx * dx) * np.exp(-(self.C2**2) * dy * dy))

    def noise_scale(self, alpha) -> float:
        return 10.0 ** (-2 * alpha[0])

    def evaluate(self, alpha, y) -> float:
        a = alpha[0]
        if a < 1:
            raise ValueError("fidelity level must be >= 1")
        z = keyed_standard_normal(self.master_seed, a, y)
        return self.noiseless(y) + self.noise_scale(alpha) * z

    def cost(self, alpha) -> float:
        return 10.0 ** alpha[0]

    def max_levels(self):
        return (self.max_level,)


class Parabolic1dNoisy(ModelHierarchy):
    """Noisy timestepping test problem: 1D advection-diffusion to t = 10.

    Method-of-lines central differences on (-1, 1) with a time-dependent
    boundary drive; integrated by an adaptive trapezoidal corrector with
    an AB2 predictor whose local-error control is keyed to the fidelity:
    tolerance 10^(-a), modelled cost 10^(a/3).  The step-size controller
    reacts discontinuously to the parameters, which is the noise source.
    """

    n_model = 1
    n_y = 2

    A0 = 0.1
    T_FINAL = 10.0
    X_STAR = 0.5
    MAX_LEVEL = 6

    def __init__(self, n_cells: int = 200):
        if n_cells < 8 or n_cells % 4 != 0:
            raise ValueError("n_cells must be a multiple of 4 and >= 8")
        self.n_cells = n_cells
        self.h = 2.0 / n_cells
        self.x = -1.0 + self.h * np.arange(1, n_cells)  # interior nodes
        self._qoi_node = int(round((self.X_STAR + 1.0) / self.h)) - 1

    def max_levels(self):
        return (self.MAX_LEVEL,)

    def cost(self, alpha) -> float:
        return 10.0 ** (alpha[0] / 3.0)

    @staticmethod
    def _boundary(t):
        return (1.0 - np.exp(-t / 0.1)) * (1.0 + 0.1 * np.sin(2.0 * np.pi * t))

    def _operator(self, y):
        """Tridiagonal MOL operator and boundary injection coefficients."""
        a = 0.1 * self.A0 + 1.8 * self.A0 * y[0]
        w = 2.0 * (1.0 - self.x**2) * (1.0 + 0.5 * (2.0 * y[1] - 1.0))
        h = self.h
        lower = a / h**2 + w / (2 * h)
        diag = -2.0 * a / h**2 * np.ones_like(self.x)
        upper = a / h**2 - w / (2 * h)
        # boundary value g(t) enters the first and last rows
        g_left = a / h**2 + w[0] / (2 * h)
        g_right = a / h**2 - w[-1] / (2 * h)
        return lower, diag, upper, g_left, g_right

    def evaluate(self, alpha, y) -> float:
        a_lvl = alpha[0]
        if not 1 <= a_lvl <= self.MAX_LEVEL:
            raise ValueError(f"fidelity level must be in [1, {self.MAX_LEVEL}]")
        tol = 10.0 ** (-a_lvl)
        lower, diag, upper, g_left, g_right = self._operator(y)
        n = self.x.size

        def rhs(t, u):
            out = diag * u
            out[1:] += lower[1:] * u[:-1]
            out[:-1] += upper[:-1] * u[1:]
            g = self._boundary(t)
            out[0] += g_left * g
            out[-1] += g_right * g
            return out

        def trap_solve(dt, b):
            ab = np.zeros((3, n))
            ab[0, 1:] = -0.5 * dt * upper[:-1]
            ab[1, :] = 1.0 - 0.5 * dt * diag
            ab[2, :-1] = -0.5 * dt * lower[1:]
            return solve_banded((1, 1), ab, b)

        u = np.zeros(n)
        t = 0.0
        dt = min(1e-3, tol ** (1.0 / 3.0))
        f_prev = rhs(t, u)
        dt_prev = dt
        while t < self.T_FINAL:
            dt = min(dt, self.T_FINAL - t)
            f_now = rhs(t, u)
            # AB2 predictor (variable step), trapezoidal corrector
            r = dt / dt_prev
            u_pred = u + dt * ((1.0 + 0.5 * r) * f_now - 0.5 * r * f_prev)
            g_next = self._boundary(t + dt)
            b = u + 0.5 * dt * f_now
            b[0] += 0.5 * dt * g_left * g_next
            b[-1] += 0.5 * dt * g_right * g_next
            u_corr = trap_solve(dt, b)
            err = np.max(np.abs(u_corr - u_pred)) / (3.0 * (1.0 + dt_prev / dt))
            if err <= tol or dt <= 1e-10:
                t += dt
                dt_prev = dt
                f_prev = f_now
                u = u_corr
                factor = 0.9 * (tol / max(err, 1e-300)) ** (1.0 / 3.0)
                dt = dt * min(2.0, max(0.5, factor))
            else:
                dt = dt * max(0.2, 0.9 * (tol / err) ** (1.0 / 3.0))
        return float(u[self._qoi_node])


class SingleFidelityView(ModelHierarchy):
    """Parameter-only view fixing one fidelity of a base hierarchy."""

    def __init__(self, base: ModelHierarchy, alpha_ref):
        self.base = base
        self.alpha_ref = tuple(alpha_ref)
        self.n_model = 0
        self.n_y = base.n_y

    def evaluate(self, alpha, y) -> float:
        return self.base.evaluate(self.alpha_ref, y)

    def cost(self, alpha) -> float:
        return self.base.cost(self.alpha_ref)

    def max_levels(self):
        return ()


class EvalCache:
    """Keyed store of model evaluations with cost ledger and optional file.

    Keys are (fidelity, point) with exact float coordinates.  Each distinct
    key is evaluated and charged once; hits are free.  The backing file is
    append-only text, one record per line: fidelity entries, coordinate bit
    patterns (hex), value bit pattern (hex).
    """

    def __init__(self, hierarchy: ModelHierarchy, path=None, fresh: bool = False):
        self.hierarchy = hierarchy
        self.path = path
        self._data: dict = {}
        self._lock = threading.Lock()
        self._file = None
        self._io_ok = True
        self.total_cost = 0.0
        self.eval_counts: dict = {}
        if path is not None:
            try:
                if not fresh:
                    self._load(path)
                self._file = open(path, "w" if fresh else "a")
                if fresh:
                    self._file.flush()
            except OSError as exc:
                warnings.warn(f"evaluation cache file unusable ({exc}); running in memory")
                self._io_ok = False
                self._file = None

    @staticmethod
    def _encode(alpha, y, value) -> str:
        parts = [",".join(str(a) for a in alpha) or "-"]
        parts.append(",".join(struct.pack("<d", c).hex() for c in y))
        parts.append(struct.pack("<d", value).hex())
        return ";".join(parts)

    @staticmethod
    def _decode(line: str):
        alpha_s, coords_s, val_s = line.strip().split(";")
        alpha = tuple() if alpha_s == "-" else tuple(int(a) for a in alpha_s.split(","))
        y = tuple(
            struct.unpack("<d", bytes.fromhex(h))[0] for h in coords_s.split(",") if h
        )
        value = struct.unpack("<d", bytes.fromhex(val_s))[0]
        return alpha, y, value

    def _load(self, path):
        try:
            with open(path) as f:
                for line in f:
                    if not line.strip():
                        continue
                    alpha, y, value = self._decode(line)
                    self._data[(alpha, y)] = value
        except FileNotFoundError:
            pass

    def get_or_eval(self, alpha, y):
        """Return (value, was_hit); misses evaluate, persist and accrue cost."""
        alpha = tuple(alpha)
        y = tuple(float(c) for c in y)
        key = (alpha, y)
        with self._lock:
            if key in self._data:
                return self._data[key], True
        value = self.hierarchy.evaluate(alpha, y)
        with self._lock:
            if key in self._data:  # concurrent duplicate: identical by determinism
                return self._data[key], True
            self._data[key] = value
            self.total_cost += self.hierarchy.cost(alpha)
            self.eval_counts[alpha] = self.eval_counts.get(alpha, 0) + 1
            if self._file is not None and self._io_ok:
                try:
                    self._file.write(self._encode(alpha, y, value) + "\n")
                    self._file.flush()
                except OSError as exc:
                    warnings.warn(f"cache persistence failed ({exc}); continuing in memory")
                    self._io_ok = False
        return value, False

    def evaluator(self):
        """Adapter for surrogate assembly: (alpha, y) -> value."""
        return lambda alpha, y: self.get_or_eval(alpha, y)[0]

    def counts_by_fidelity(self) -> dict:
        return dict(self.eval_counts)

    def close(self):
        if self._file is not None:
            self._file.close()
            self._file = None
