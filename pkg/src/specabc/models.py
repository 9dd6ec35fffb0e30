"""Model definitions: damped stochastic oscillators and a neural mass model.

Every model shares the same backbone. The state x = (q, p) stacks d
positions over d momenta and evolves as

    dq = p dt
    dp = (-Lam^2 q - 2 Gam p + G(q)) dt + Sig dW

with Lam, Gam, Sig diagonal and positive, and a forcing G that acts on the
momentum block only. A model observes a fixed linear readout w . x. The
linear part (G absent) is a Gaussian process whose transition law is exact
and computable, which is what the structure-preserving integrators in
:mod:`specabc.sim` exploit.

Four concrete models ship: two linear oscillators with closed-form
stationary laws (weakly and critically damped), a pendulum-type nonlinear
oscillator, and a six-dimensional neural mass model of EEG rhythms
(Jansen-Rit). Parameters live in plain name->value dicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import partial
from typing import Callable

import numpy as np

from .errors import ModelConstructionError

__all__ = [
    "HamiltonianModel",
    "StationaryAnalytics",
    "make_weakly_damped_oscillator",
    "make_critically_damped_oscillator",
    "make_nonlinear_oscillator",
    "make_jansen_rit",
    "make_model",
    "linear_part_coefficients",
    "sigmoid_rate",
    "canonical_param_name",
    "MODEL_IDS",
]

# Forcing kinds understood by the compiled step kernels.
G_NONE = 0
G_SINE = 1
G_NEURAL_MASS = 2


@dataclass(frozen=True)
class StationaryAnalytics:
    """Closed-form stationary law of the observable, where one is known.

    autocovariance maps an array of lags tau >= 0 to r(tau); r(0) equals
    variance.
    """

    mean: float
    variance: float
    autocovariance: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class HamiltonianModel:
    """A concrete model instance with all parameter values bound.

    lam, gam, sig are the diagonals of Lam, Gam, Sig. g_kind and g_params
    select the forcing for the compiled kernels; nonlinear_g exposes the
    same map as a plain function of q. params holds every named parameter
    value; free_names marks the subset an inference run varies.
    """

    model_id: str
    dim_d: int
    lam: np.ndarray
    gam: np.ndarray
    sig: np.ndarray
    output_weights: np.ndarray
    params: dict[str, float]
    free_names: tuple[str, ...] = ()
    g_kind: int = G_NONE
    g_params: np.ndarray = field(default_factory=lambda: np.zeros(1))
    analytics: StationaryAnalytics | None = None
    burn_in_time: float = 0.0

    @property
    def dim(self) -> int:
        return 2 * self.dim_d

    @property
    def is_linear(self) -> bool:
        return self.g_kind == G_NONE

    def nonlinear_g(self, q) -> np.ndarray:
        """Forcing G(q) as a length-d vector; identically zero when linear."""
        qv = np.asarray(q, dtype=float)
        if self.g_kind == G_NONE:
            return np.zeros(self.dim_d)
        if self.g_kind == G_SINE:
            out = np.zeros(self.dim_d)
            out[0] = self.g_params[0] * np.sin(qv[0])
            return out
        aa, bb, mu, c1, c2, c3, c4, vmax, v0, slope = self.g_params
        return np.array(
            [
                aa * sigmoid_rate(qv[1] - qv[2], vmax=vmax, v0=v0, r=slope),
                aa * (mu + c2 * sigmoid_rate(c1 * qv[0], vmax=vmax, v0=v0, r=slope)),
                bb * c4 * sigmoid_rate(c3 * qv[0], vmax=vmax, v0=v0, r=slope),
            ]
        )

    def with_params(self, updates: dict[str, float]) -> "HamiltonianModel":
        """Rebuild this model with some parameter values replaced."""
        fixed = {canonical_param_name(self.model_id, k): v for k, v in updates.items()}
        unknown = set(fixed) - set(self.params)
        if unknown:
            raise ModelConstructionError(
                f"unknown parameter(s) for {self.model_id}: {sorted(unknown)}"
            )
        merged = dict(self.params)
        merged.update(fixed)
        return make_model(self.model_id, merged, free=self.free_names)


def linear_part_coefficients(model: HamiltonianModel) -> tuple[np.ndarray, np.ndarray]:
    """Drift and diffusion matrices (a, b) of the linear backbone.

    a = [[0, I], [-Lam^2, -2 Gam]] (2d x 2d), b = [[0], [Sig]] (2d x d).
    """
    d = model.dim_d
    a = np.zeros((2 * d, 2 * d))
    a[:d, d:] = np.eye(d)
    a[d:, :d] = -np.diag(model.lam**2)
    a[d:, d:] = -2.0 * np.diag(model.gam)
    b = np.zeros((2 * d, d))
    b[d:, :] = np.diag(model.sig)
    return a, b


def sigmoid_rate(x, vmax: float = 5.0, v0: float = 6.0, r: float = 0.56):
    """Logistic voltage-to-rate curve vmax / (1 + exp(r (v0 - x))).

    The exponent is clamped at 700 so very negative x gives a vanishing
    rate instead of overflowing the exp.
    """
    arg = np.minimum(r * (v0 - np.asarray(x, dtype=float)), 700.0)
    return vmax / (1.0 + np.exp(arg))


def _require(params: dict, names: tuple[str, ...], model_id: str) -> None:
    missing = [n for n in names if n not in params]
    if missing:
        raise ModelConstructionError(f"{model_id} needs parameter(s) {missing}")
    extra = set(params) - set(names)
    if extra:
        raise ModelConstructionError(
            f"{model_id} does not take parameter(s) {sorted(extra)}"
        )


def _positive(params: dict, name: str, model_id: str) -> float:
    value = params[name]
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ModelConstructionError(
            f"{model_id}: {name} must be a number, got {value!r}"
        ) from None
    if not np.isfinite(v) or v <= 0.0:
        raise ModelConstructionError(
            f"{model_id}: {name} must be positive and finite, got {value!r}"
        )
    return v


# Module-level so analytics survive pickling into worker processes.
def _osc_weak_autocov(tau, lam: float, gam: float, sig: float):
    t = np.abs(np.asarray(tau, dtype=float))
    kappa = np.sqrt(lam**2 - gam**2)
    return (
        sig**2
        / (4.0 * lam**2)
        * np.exp(-gam * t)
        * (np.cos(kappa * t) / gam + np.sin(kappa * t) / kappa)
    )


def _osc_critical_autocov(tau, gam: float, sig: float):
    t = np.abs(np.asarray(tau, dtype=float))
    return sig**2 / 4.0 * np.exp(-gam * t) * (1.0 / gam - t)


def make_weakly_damped_oscillator(params: dict[str, float]) -> HamiltonianModel:
    """Scalar oscillator with lambda > gamma, observing the position q.

    The stationary law of q is N(0, sigma^2 / (4 gamma lambda^2)) with
    autocovariance

        r(tau) = sigma^2 / (4 lambda^2) e^(-gamma tau)
                 (cos(kappa tau)/gamma + sin(kappa tau)/kappa),

    kappa = sqrt(lambda^2 - gamma^2), so the spectral density peaks near
    kappa / (2 pi).
    """
    _require(params, ("lambda", "gamma", "sigma"), "mp2")
    lam = _positive(params, "lambda", "mp2")
    gam = _positive(params, "gamma", "mp2")
    sig = _positive(params, "sigma", "mp2")
    if lam <= gam:
        raise ModelConstructionError(
            f"mp2: weak damping requires lambda > gamma, got {lam} <= {gam}"
        )
    analytics = StationaryAnalytics(
        mean=0.0,
        variance=sig**2 / (4.0 * gam * lam**2),
        autocovariance=partial(_osc_weak_autocov, lam=lam, gam=gam, sig=sig),
    )
    return HamiltonianModel(
        model_id="mp2",
        dim_d=1,
        lam=np.array([lam]),
        gam=np.array([gam]),
        sig=np.array([sig]),
        output_weights=np.array([1.0, 0.0]),
        params={"lambda": lam, "gamma": gam, "sigma": sig},
        analytics=analytics,
        burn_in_time=10.0 / gam,
    )


def make_critically_damped_oscillator(params: dict[str, float]) -> HamiltonianModel:
    """Scalar oscillator at the critical point lambda = gamma, observing p.

    Takes gamma and sigma; lambda is tied to gamma. The stationary law of p
    is N(0, sigma^2 / (4 gamma)) with autocovariance
    r(tau) = sigma^2 / 4 e^(-gamma tau) (1/gamma - tau), which crosses zero
    at tau = 1/gamma.
    """
    _require(params, ("gamma", "sigma"), "mp1")
    gam = _positive(params, "gamma", "mp1")
    sig = _positive(params, "sigma", "mp1")
    analytics = StationaryAnalytics(
        mean=0.0,
        variance=sig**2 / (4.0 * gam),
        autocovariance=partial(_osc_critical_autocov, gam=gam, sig=sig),
    )
    return HamiltonianModel(
        model_id="mp1",
        dim_d=1,
        lam=np.array([gam]),
        gam=np.array([gam]),
        sig=np.array([sig]),
        output_weights=np.array([0.0, 1.0]),
        params={"gamma": gam, "sigma": sig},
        analytics=analytics,
        burn_in_time=10.0 / gam,
    )


_SINE_AMPLITUDE = -1.0e3


def make_nonlinear_oscillator(params: dict[str, float]) -> HamiltonianModel:
    """Scalar oscillator driven by a pendulum forcing G(q) = -1e3 sin(q).

    Same (lambda, gamma, sigma) parameterization and q observable as the
    weakly damped model; no closed-form stationary law.
    """
    _require(params, ("lambda", "gamma", "sigma"), "mp4")
    lam = _positive(params, "lambda", "mp4")
    gam = _positive(params, "gamma", "mp4")
    sig = _positive(params, "sigma", "mp4")
    return HamiltonianModel(
        model_id="mp4",
        dim_d=1,
        lam=np.array([lam]),
        gam=np.array([gam]),
        sig=np.array([sig]),
        output_weights=np.array([1.0, 0.0]),
        params={"lambda": lam, "gamma": gam, "sigma": sig},
        g_kind=G_SINE,
        g_params=np.array([_SINE_AMPLITUDE]),
        burn_in_time=10.0 / gam,
    )


_JR_DEFAULTS = {
    "gain_A": 3.25,
    "gain_B": 22.0,
    "a": 100.0,
    "b": 50.0,
    "v0": 6.0,
    "vmax": 5.0,
    "r": 0.56,
    "sigma4": 0.01,
    "sigma6": 1.0,
}
_JR_ALIASES = {"A": "gain_A", "B": "gain_B"}
_JR_REQUIRED = ("sigma", "mu", "C")


def make_jansen_rit(params: dict[str, float]) -> HamiltonianModel:
    """Six-dimensional Jansen-Rit neural mass model, observing q2 - q3.

    q1 tracks the pyramidal population, q2 the excitatory and q3 the
    inhibitory feedback; their difference is the EEG-like output. sigma,
    mu and C (average synaptic connectivity) are required; gain_A, gain_B
    (accepted as A, B too), the rate constants a, b, the sigmoid shape
    (v0, vmax, r) and the auxiliary noise levels sigma4, sigma6 default to
    the standard alpha-rhythm values. Internal connectivities follow the
    usual C1..C4 = (C, 0.8 C, 0.25 C, 0.25 C) pattern.
    """
    given = {_JR_ALIASES.get(k, k): v for k, v in params.items()}
    extra = set(given) - set(_JR_REQUIRED) - set(_JR_DEFAULTS)
    if extra:
        raise ModelConstructionError(
            f"jrnmm does not take parameter(s) {sorted(extra)}"
        )
    missing = [n for n in _JR_REQUIRED if n not in given]
    if missing:
        raise ModelConstructionError(f"jrnmm needs parameter(s) {missing}")
    values = dict(_JR_DEFAULTS)
    values.update(given)
    checked = {n: _positive(values, n, "jrnmm") for n in values}

    a = checked["a"]
    b = checked["b"]
    big_c = checked["C"]
    g_params = np.array(
        [
            checked["gain_A"] * a,
            checked["gain_B"] * b,
            checked["mu"],
            big_c,
            0.8 * big_c,
            0.25 * big_c,
            0.25 * big_c,
            checked["vmax"],
            checked["v0"],
            checked["r"],
        ]
    )
    return HamiltonianModel(
        model_id="jrnmm",
        dim_d=3,
        lam=np.array([a, a, b]),
        gam=np.array([a, a, b]),
        sig=np.array([checked["sigma4"], checked["sigma"], checked["sigma6"]]),
        output_weights=np.array([0.0, 1.0, -1.0, 0.0, 0.0, 0.0]),
        params=checked,
        g_kind=G_NEURAL_MASS,
        g_params=g_params,
        burn_in_time=10.0 / min(a, b),
    )


_FACTORIES = {
    "mp1": make_critically_damped_oscillator,
    "mp2": make_weakly_damped_oscillator,
    "mp4": make_nonlinear_oscillator,
    "jrnmm": make_jansen_rit,
}

MODEL_IDS = tuple(sorted(_FACTORIES))


def canonical_param_name(model_id: str, name: str) -> str:
    """Resolve accepted parameter-name aliases (jrnmm's A and B)."""
    if model_id == "jrnmm":
        return _JR_ALIASES.get(name, name)
    return name


def make_model(
    model_id: str, params: dict[str, float], free: tuple[str, ...] = ()
) -> HamiltonianModel:
    """Build a model by id, optionally marking free (inferred) parameters."""
    try:
        factory = _FACTORIES[model_id]
    except KeyError:
        raise ModelConstructionError(
            f"unknown model id {model_id!r}; known: {', '.join(MODEL_IDS)}"
        ) from None
    model = factory(params)
    if free:
        free_t = tuple(_JR_ALIASES.get(n, n) if model_id == "jrnmm" else n for n in free)
        unknown = set(free_t) - set(model.params)
        if unknown:
            raise ModelConstructionError(
                f"free parameter(s) {sorted(unknown)} not part of {model_id}"
            )
        model = replace(model, free_names=free_t)
    return model
