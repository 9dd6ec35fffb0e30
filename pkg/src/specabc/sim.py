"""Trajectory generation for the oscillator and neural mass models.

Four schemes share one calling convention:

* ``exact``: iterates the exact Gaussian transition of a linear model,
  x(t+dt) = e^(A dt) x(t) + xi, xi ~ N(0, C(dt)).
* ``strang_ode_outer``: splits the forcing off as an outer half-kick around
  the exact linear-SDE step (kick, linear step, kick).
* ``strang_sde_outer``: splits the other way round, deterministic half
  propagators e^(A dt/2) around a full stochastic forcing step.
* ``euler``: Euler-Maruyama on the full drift. Unstable for stiff settings;
  a non-finite state stops the iteration and flags the trajectory as
  overflowed instead of raising, with NaN filling the remaining samples.

Randomness comes from counter-based streams keyed by (master_seed,
stream_index), so any trajectory is reproducible in isolation and runs are
independent of how work is scheduled across processes. Unless an explicit
initial state is supplied, paths start at zero and a model-specific burn-in
prefix is simulated and dropped; the returned trajectory always holds
exactly ``grid.n_steps`` samples of the scalar observable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ConfigError, DomainError, UnsupportedSchemeError
from .linalg import cholesky_psd, increment_covariance, matrix_exp
from .models import HamiltonianModel, linear_part_coefficients

__all__ = [
    "SCHEMES",
    "SimGrid",
    "RngStream",
    "Trajectory",
    "make_grid",
    "simulate",
    "simulate_states",
    "simulate_exact",
    "simulate_euler",
    "simulate_strang_ode_outer",
    "simulate_strang_sde_outer",
    "write_trajectory_csv",
]

SCHEMES = ("exact", "euler", "strang_ode_outer", "strang_sde_outer")

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """A reproducible substream of a counter-based generator."""

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = ((self.master_seed & _MASK64) << 64) | (self.stream_index & _MASK64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class SimGrid:
    """Equidistant time grid with step dt, horizon t_end and n_steps steps."""

    dt: float
    t_end: float
    n_steps: int

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0.0):
            raise DomainError(f"dt must be positive and finite, got {self.dt!r}")
        if not (np.isfinite(self.t_end) and self.t_end > 0.0):
            raise DomainError(f"t_end must be positive and finite, got {self.t_end!r}")
        if self.n_steps < 2:
            raise DomainError(f"need at least 2 steps, got {self.n_steps}")
        if abs(self.n_steps * self.dt - self.t_end) > 1e-9 * self.t_end:
            raise DomainError(
                f"inconsistent grid: {self.n_steps} * {self.dt} != {self.t_end}"
            )


def make_grid(dt: float, t_end: float) -> SimGrid:
    """Grid with n_steps = round(t_end / dt).

    When dt does not divide t_end, the horizon snaps to n_steps * dt so the
    grid invariant holds exactly.
    """
    if not (np.isfinite(dt) and dt > 0.0):
        raise DomainError(f"dt must be positive and finite, got {dt!r}")
    if not (np.isfinite(t_end) and t_end > 0.0):
        raise DomainError(f"t_end must be positive and finite, got {t_end!r}")
    n_steps = int(round(t_end / dt))
    return SimGrid(dt=dt, t_end=n_steps * dt, n_steps=n_steps)


@dataclass(frozen=True)
class Trajectory:
    """Output samples y(t_i), i = 1..n_steps, of one simulated path."""

    grid: SimGrid
    values: np.ndarray
    scheme: str
    seed: int
    stream_index: int = 0
    overflowed: bool = False

    @property
    def times(self) -> np.ndarray:
        return self.grid.dt * np.arange(1, self.grid.n_steps + 1)


def _as_state(model: HamiltonianModel, x0) -> np.ndarray:
    if x0 is None:
        return np.zeros(model.dim)
    x = np.ascontiguousarray(x0, dtype=float)
    if x.shape != (model.dim,):
        raise DomainError(f"initial state must have shape ({model.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("initial state must be finite")
    return x


def simulate_states(
    model: HamiltonianModel,
    grid: SimGrid,
    scheme: str,
    rng: RngStream,
    x0=None,
) -> tuple[np.ndarray, bool]:
    """Full recorded state path, shape (n_steps, 2d), plus an overflow flag.

    The burn-in prefix (skipped when x0 is given) is simulated and discarded
    before recording starts.
    """
    if scheme not in SCHEMES:
        raise ConfigError(f"unknown scheme {scheme!r}; known: {', '.join(SCHEMES)}")
    if scheme == "exact" and not model.is_linear:
        raise UnsupportedSchemeError(
            f"exact simulation needs a linear model, {model.model_id} has a forcing"
        )
    start = _as_state(model, x0)
    n_burn = 0 if x0 is not None else int(round(model.burn_in_time / grid.dt))
    n_total = n_burn + grid.n_steps
    gen = rng.generator()
    gp = np.ascontiguousarray(model.g_params, dtype=float)
    if scheme in ("exact", "strang_ode_outer"):
        a, b = linear_part_coefficients(model)
        prop = matrix_exp(a, grid.dt)
        chol = cholesky_psd(increment_covariance(a, b, grid.dt))
        normals = gen.standard_normal((n_total, model.dim))
        if scheme == "exact":
            states, overflow_at = _kernels.run_linear(start, prop, chol, normals, n_burn)
        else:
            states, overflow_at = _kernels.run_strang_ode(
                start, prop, chol, normals, n_burn, grid.dt, model.g_kind, gp
            )
    elif scheme == "strang_sde_outer":
        a, _ = linear_part_coefficients(model)
        half_prop = matrix_exp(a, 0.5 * grid.dt)
        normals = gen.standard_normal((n_total, model.dim_d))
        states, overflow_at = _kernels.run_strang_sde(
            start,
            half_prop,
            np.ascontiguousarray(model.sig, dtype=float),
            normals,
            n_burn,
            grid.dt,
            model.g_kind,
            gp,
        )
    else:
        normals = gen.standard_normal((n_total, model.dim_d))
        states, overflow_at = _kernels.run_euler(
            start,
            np.ascontiguousarray(model.lam, dtype=float),
            np.ascontiguousarray(model.gam, dtype=float),
            np.ascontiguousarray(model.sig, dtype=float),
            normals,
            n_burn,
            grid.dt,
            model.g_kind,
            gp,
        )
    return states, overflow_at >= 0


def simulate(
    model: HamiltonianModel,
    grid: SimGrid,
    scheme: str,
    rng: RngStream,
    x0=None,
) -> Trajectory:
    """Simulate one path and record the scalar observable."""
    states, overflowed = simulate_states(model, grid, scheme, rng, x0)
    values = states @ model.output_weights
    return Trajectory(
        grid=grid,
        values=values,
        scheme=scheme,
        seed=rng.master_seed,
        stream_index=rng.stream_index,
        overflowed=overflowed,
    )


def simulate_exact(model, grid, rng, x0=None) -> Trajectory:
    return simulate(model, grid, "exact", rng, x0)


def simulate_euler(model, grid, rng, x0=None) -> Trajectory:
    return simulate(model, grid, "euler", rng, x0)


def simulate_strang_ode_outer(model, grid, rng, x0=None) -> Trajectory:
    return simulate(model, grid, "strang_ode_outer", rng, x0)


def simulate_strang_sde_outer(model, grid, rng, x0=None) -> Trajectory:
    return simulate(model, grid, "strang_sde_outer", rng, x0)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write `t,y` rows with 17 significant digits (lossless for float64)."""
    times = traj.times
    with open(path, "w") as fh:
        fh.write("t,y\n")
        for t, y in zip(times, traj.values):
            fh.write(f"{t:.17g},{y:.17g}\n")
