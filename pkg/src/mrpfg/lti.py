"""Discrete-time SISO state-space blocks and the multirate closed-loop simulator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from mrpfg.errors import EvaluationError, InstabilityError, InvalidInputError
from mrpfg.signals import FAST, SLOW, RateConfig


@dataclass(frozen=True)
class StateSpaceModel:
    """SISO discrete-time model ``x+ = Ax + Bu, y = Cx + Du``.

    ``ts`` is the sampling time of the block and ``rate`` tags it as a
    fast-rate plant block or a slow-rate controller.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    ts: float
    rate: str = FAST

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if A.size == 0:
            A = np.zeros((0, 0))
        n = A.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, 1)
        C = np.asarray(self.C, dtype=float).reshape(1, n)
        D = np.asarray(self.D, dtype=float).reshape(1, 1)
        if A.shape != (n, n):
            raise InvalidInputError(f"A must be square, got shape {A.shape}")
        if self.rate not in (FAST, SLOW):
            raise InvalidInputError(f"unknown rate tag {self.rate!r}")
        if not self.ts > 0:
            raise InvalidInputError(f"ts must be positive, got {self.ts}")
        for name, val in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, val)

    @property
    def order(self) -> int:
        return self.A.shape[0]

    @classmethod
    def gain(cls, g: float, ts: float, rate: str = FAST) -> "StateSpaceModel":
        return cls(np.zeros((0, 0)), np.zeros((0, 1)), np.zeros((1, 0)), [[g]], ts, rate)

    @classmethod
    def from_tf(cls, num, den, ts: float, rate: str = FAST) -> "StateSpaceModel":
        """Realize ``num(z)/den(z)`` (descending powers of z)."""
        A, B, C, D = sps.tf2ss(num, den)
        return cls(A, B, C, D, ts, rate)

    def scaled(self, k: float) -> "StateSpaceModel":
        return StateSpaceModel(self.A, self.B, k * self.C, k * self.D, self.ts, self.rate)

    def poles(self) -> np.ndarray:
        return np.linalg.eigvals(self.A) if self.order else np.zeros(0, dtype=complex)

    def is_stable(self) -> bool:
        return bool(np.all(np.abs(self.poles()) < 1.0))


@dataclass(frozen=True)
class GeneralizedPlant:
    """Fast-rate plant ``[w; u] -> [z; y]`` made of four SISO blocks."""

    g11: StateSpaceModel
    g12: StateSpaceModel
    g21: StateSpaceModel
    g22: StateSpaceModel

    def __post_init__(self):
        ts = {b.ts for b in self.blocks()}
        if len(ts) != 1:
            raise InvalidInputError(f"generalized plant blocks disagree on ts: {sorted(ts)}")

    def blocks(self):
        return (self.g11, self.g12, self.g21, self.g22)

    @property
    def ts(self) -> float:
        return self.g11.ts

    @classmethod
    def output_disturbance(cls, plant: StateSpaceModel) -> "GeneralizedPlant":
        """Wiring ``z = y = -w - P u`` for a disturbance added at the plant output."""
        minus_one = StateSpaceModel.gain(-1.0, plant.ts)
        minus_p = plant.scaled(-1.0)
        return cls(minus_one, minus_p, minus_one, minus_p)


@dataclass(frozen=True)
class MultirateLoop:
    """Fast-rate plant closed by a slow-rate controller through hold and sampler."""

    plant: GeneralizedPlant
    controller: StateSpaceModel
    rate: RateConfig

    def __post_init__(self):
        if self.controller.rate != SLOW:
            raise InvalidInputError("controller must carry the slow rate tag")
        if not np.isclose(self.plant.ts, self.rate.tsh, rtol=1e-12):
            raise InvalidInputError(
                f"plant ts={self.plant.ts} does not match tsh={self.rate.tsh}"
            )
        if not np.isclose(self.controller.ts, self.rate.tsl, rtol=1e-12):
            raise InvalidInputError(
                f"controller ts={self.controller.ts} does not match "
                f"tsl={self.rate.tsl} (F={self.rate.fac})"
            )

    def with_controller(self, controller: StateSpaceModel) -> "MultirateLoop":
        return MultirateLoop(self.plant, controller, self.rate)


def frf_on_grid(sys: StateSpaceModel, omega, ts: float | None = None, tol: float = 1e-10):
    """Vectorized ``C (e^{jw ts} I - A)^{-1} B + D``; NaN where the resolvent is singular."""
    ts = sys.ts if ts is None else ts
    omega = np.asarray(omega, dtype=float)
    shape = omega.shape
    z = np.exp(1j * omega.ravel() * ts)
    out = np.full(z.shape, sys.D[0, 0], dtype=complex)
    if sys.order:
        lam = sys.poles()
        dist = np.min(np.abs(z[:, None] - lam[None, :]), axis=1)
        ok = dist > tol * np.maximum(1.0, np.abs(z))
        n = sys.order
        R = z[ok, None, None] * np.eye(n) - sys.A
        x = np.linalg.solve(R, np.broadcast_to(sys.B, (R.shape[0], n, 1)))
        out[ok] += (sys.C @ x)[:, 0, 0]
        out[~ok] = np.nan
    return out.reshape(shape)


def eval_frf(sys: StateSpaceModel, omega, ts: float | None = None):
    """Frequency response of ``sys`` at ``omega`` rad/s.

    Raises
    ------
    EvaluationError
        If a pole of ``sys`` lies on the unit circle at one of the requested
        frequencies.
    """
    out = frf_on_grid(sys, omega, ts)
    if np.any(np.isnan(out)):
        raise EvaluationError("pole on the unit circle at a requested frequency")
    return out[()] if np.ndim(out) == 0 else out


def simulate(sys: StateSpaceModel, u, x0=None) -> np.ndarray:
    """Run the state recursion on ``u`` from ``x0`` (zero by default)."""
    u = np.asarray(u)
    dtype = np.result_type(u.dtype, float)
    x = np.zeros(sys.order, dtype=dtype) if x0 is None else np.asarray(x0, dtype=dtype).copy()
    A, b, c, d = sys.A, sys.B[:, 0], sys.C[0], sys.D[0, 0]
    y = np.empty(u.shape[0], dtype=dtype)
    for n, un in enumerate(u):
        y[n] = c @ x + d * un
        x = A @ x + b * un
    return y


def downsampled_model(sys: StateSpaceModel, fac: int) -> StateSpaceModel:
    """Slow-rate model of ``sampler * sys * hold``: ``A^F``, ``sum_i A^i B``."""
    n = sys.order
    Ap = np.eye(n)
    Bl = np.zeros((n, 1))
    for _ in range(fac):
        Bl = Bl + Ap @ sys.B
        Ap = Ap @ sys.A
    return StateSpaceModel(Ap, Bl, sys.C, sys.D, sys.ts * fac, SLOW)


def _augment(plant: GeneralizedPlant):
    """Stack the four blocks into one model with inputs [w, u] and outputs [z, y]."""
    blocks = plant.blocks()
    n = [b.order for b in blocks]
    A = np.zeros((sum(n), sum(n)))
    B = np.zeros((sum(n), 2))
    C = np.zeros((2, sum(n)))
    D = np.zeros((2, 2))
    # (output row, input column) of g11, g12, g21, g22
    pos = [(0, 0), (0, 1), (1, 0), (1, 1)]
    off = 0
    for blk, (i, j), ni in zip(blocks, pos, n):
        sl = slice(off, off + ni)
        A[sl, sl] = blk.A
        B[sl, j] = blk.B[:, 0]
        C[i, sl] = blk.C[0]
        D[i, j] = blk.D[0, 0]
        off += ni
    return A, B, C, D


def simulate_multirate_loop(
    loop: MultirateLoop,
    w,
    n_settle_periods: int = 2,
    divergence_threshold: float = 1e9,
) -> dict[str, np.ndarray]:
    """Time-step the multirate loop driven by ``w``.

    The controller samples ``y`` every ``F`` fast samples and its output is
    held for ``F`` samples. ``w`` is applied ``n_settle_periods + 1`` times in
    succession from zero initial state and only the last period is returned,
    so with enough settling periods the data are in periodic steady state.

    Returns
    -------
    dict
        Fast-rate arrays ``z``, ``u`` and ``y`` of the same length as ``w``.

    Raises
    ------
    InstabilityError
        If ``|y|`` or ``|z|`` exceeds ``divergence_threshold``.
    """
    w = np.asarray(w)
    F = loop.rate.fac
    N = w.shape[0]
    if N != loop.rate.n_fast:
        raise InvalidInputError(f"w has {N} samples, expected {loop.rate.n_fast}")
    if n_settle_periods < 0:
        raise InvalidInputError("n_settle_periods must be nonnegative")
    A, B, C, D = _augment(loop.plant)
    K = loop.controller
    Ak, bk, ck, dk = K.A, K.B[:, 0], K.C[0], K.D[0, 0]
    dyu = D[1, 1]
    loop_gain = 1.0 - dyu * dk
    if abs(loop_gain) < 1e-12:
        raise EvaluationError("algebraic loop 1 - D22*Dk is singular")

    dtype = np.result_type(w.dtype, float)
    x = np.zeros(A.shape[0], dtype=dtype)
    xk = np.zeros(K.order, dtype=dtype)
    bw, bu = B[:, 0], B[:, 1]
    cz, cy = C[0], C[1]
    dzw, dzu, dyw = D[0, 0], D[0, 1], D[1, 0]
    z = np.empty(N, dtype=dtype)
    u = np.empty(N, dtype=dtype)
    y = np.empty(N, dtype=dtype)
    u_hold = 0.0
    n_total = N * (n_settle_periods + 1)
    start = N * n_settle_periods
    for n in range(n_total):
        wn = w[n % N]
        y_free = cy @ x + dyw * wn
        if n % F == 0:
            yl = (y_free + dyu * (ck @ xk)) / loop_gain
            u_hold = ck @ xk + dk * yl
            xk = Ak @ xk + bk * yl
            if abs(yl) > divergence_threshold:
                raise InstabilityError(
                    f"|y| exceeded {divergence_threshold:g} at sample {n}; "
                    "the loop is probably unstable"
                )
        yn = y_free + dyu * u_hold
        zn = cz @ x + dzw * wn + dzu * u_hold
        if n >= start:
            m = n - start
            z[m], u[m], y[m] = zn, u_hold, yn
        x = A @ x + bw * wn + bu * u_hold
    if not np.all(np.isfinite(z)) or np.max(np.abs(z)) > divergence_threshold:
        raise InstabilityError(f"|z| exceeded {divergence_threshold:g}")
    return {"z": z, "u": u, "y": y}


# Demo system: two inertias coupled by a flexible shaft, driven and measured
# at the first inertia. Rigid-body mode plus one resonance at 22 Hz, with the
# antiresonance at 22/sqrt(2) Hz.
TWO_MASS = {
    "J1": 1.0,
    "J2": 1.0,
    "f_res": 22.0,
    "zeta": 0.08,
    "b": 0.5,
}


def _two_mass_ct(J1, J2, f_res, zeta, b):
    w0 = 2 * np.pi * f_res
    k = w0**2 / (1 / J1 + 1 / J2)
    d = 2 * zeta * np.sqrt(k * J1 * J2 / (J1 + J2))
    A = np.array(
        [
            [0, 1, 0, 0],
            [-k / J1, -(d + b) / J1, k / J1, d / J1],
            [0, 0, 0, 1],
            [k / J2, d / J2, -k / J2, -d / J2],
        ]
    )
    B = np.array([[0.0], [1 / J1], [0], [0]])
    C = np.array([[1.0, 0, 0, 0]])
    return A, B, C, np.zeros((1, 1))


def make_demo_plant(kind: str = "two_mass", tsh: float = 1 / 240) -> GeneralizedPlant:
    """Output-disturbance generalized plant around a ZOH-discretized demo system.

    Only ``kind="two_mass"`` exists: a 4th-order two-inertia model.
    """
    if kind != "two_mass":
        raise InvalidInputError(f"unknown demo plant kind {kind!r}")
    A, B, C, D = sps.cont2discrete(_two_mass_ct(**TWO_MASS), tsh, method="zoh")[:4]
    return GeneralizedPlant.output_disturbance(StateSpaceModel(A, B, C, D, tsh, FAST))


def make_demo_controller(
    tsl: float = 1 / 80,
    f_c: float = 6.0,
    lead_ratio: float = 0.1,
    integrator_ratio: float = 0.2,
) -> StateSpaceModel:
    """Lead filter with integral action, tuned for crossover ``f_c`` on the two-mass plant.

    Designed in continuous time and mapped to ``tsl`` with the bilinear
    transform. The gain puts the continuous-time loop gain at 1 at ``f_c``.
    """
    wc = 2 * np.pi * f_c
    wz, wp = wc * np.sqrt(lead_ratio), wc / np.sqrt(lead_ratio)
    num = np.polymul([1 / wz, 1.0], [1.0, integrator_ratio * wc])
    den = np.polymul([1 / wp, 1.0], [1.0, 0.0])
    A, B, C, _ = _two_mass_ct(**TWO_MASS)
    s = 1j * wc
    p = (C @ np.linalg.solve(s * np.eye(4) - A, B))[0, 0]
    g = 1.0 / abs(np.polyval(num, s) / np.polyval(den, s) * p)
    numd, dend, _ = sps.cont2discrete((g * num, den), tsl, method="bilinear")
    return StateSpaceModel.from_tf(np.ravel(numd), dend, tsl, SLOW)


def make_demo_loop(rate: RateConfig | None = None, **controller_kw) -> MultirateLoop:
    """Demo plant at ``rate.tsh`` closed by the demo controller at ``rate.tsl``.

    Defaults to 240 Hz / 80 Hz (F = 3) with N = 10800.
    """
    rate = rate or RateConfig.from_frequencies(240.0, 3, 10800)
    return MultirateLoop(
        make_demo_plant("two_mass", rate.tsh),
        make_demo_controller(rate.tsl, **controller_kw),
        rate,
    )
