"""Ground-truth trajectory generation for the benchmark systems.

Continuous systems are integrated with fixed-step RK4 or adaptive RK45;
derivatives stored in a generated dataset come from the analytic
right-hand side at the sample points, never from numerical
differentiation.  The logistic map is iterated directly.  Parameterized
and forced systems are handled by state augmentation: a bifurcation
parameter becomes a constant extra state with zero derivative, time an
extra state with unit derivative.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .differentiation import NoiseSpec
from .errors import ConfigError, DataError, NumericalError
from .integrate import IntegratorConfig, dp45_adaptive, rk4_fixed
from .model import TimeSeriesDataset, default_state_names

__all__ = [
    "SystemSpec",
    "system_rhs",
    "simulate",
    "iterate_map",
    "augment_parameter",
    "augment_time",
    "augment_signal",
    "concatenate",
    "logistic_ensemble",
    "mean_field_surrogate",
]

KINDS = ("linear2d", "cubic2d", "linear3d", "lorenz", "meanfield3d", "logistic", "hopf")

_REQUIRED_PARAMS = {
    "linear2d": (),
    "cubic2d": (),
    "linear3d": (),
    "lorenz": ("sigma", "beta", "rho"),
    "meanfield3d": ("mu", "omega", "A", "lam"),
    "logistic": ("mu",),
    "hopf": ("mu", "omega", "A"),
}

_DAMPED_2D = np.array([[-0.1, 2.0], [-2.0, -0.1]])
_LINEAR_3D = np.array([[-0.1, 2.0, 0.0], [-2.0, -0.1, 0.0], [0.0, 0.0, -0.3]])


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    x0: tuple[float, ...]
    t_span: tuple[float, float] = (0.0, 10.0)
    dt: float = 0.01
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown system kind {self.kind!r}")
        missing = [p for p in _REQUIRED_PARAMS[self.kind] if p not in self.params]
        if missing:
            raise ConfigError(f"{self.kind} needs parameters {missing}")
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        t0, t1 = self.t_span
        if self.kind != "logistic" and t1 <= t0:
            raise ConfigError("t_span must satisfy t1 > t0")
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))


def system_rhs(spec: SystemSpec):
    """Analytic right-hand side of a continuous system."""
    p = spec.params
    if spec.kind == "linear2d":
        return lambda x: _DAMPED_2D @ x
    if spec.kind == "cubic2d":
        return lambda x: _DAMPED_2D @ x**3
    if spec.kind == "linear3d":
        return lambda x: _LINEAR_3D @ x
    if spec.kind == "lorenz":
        s, b, r = p["sigma"], p["beta"], p["rho"]

        def lorenz(x):
            return np.array([
                s * (x[1] - x[0]),
                x[0] * (r - x[2]) - x[1],
                x[0] * x[1] - b * x[2],
            ])

        return lorenz
    if spec.kind == "meanfield3d":
        mu, om, a, lam = p["mu"], p["omega"], p["A"], p["lam"]

        def mean_field(x):
            return np.array([
                mu * x[0] - om * x[1] + a * x[0] * x[2],
                om * x[0] + mu * x[1] + a * x[1] * x[2],
                -lam * (x[2] - x[0] ** 2 - x[1] ** 2),
            ])

        return mean_field
    if spec.kind == "hopf":
        mu, om, a = p["mu"], p["omega"], p["A"]

        def hopf(x):
            r2 = x[0] ** 2 + x[1] ** 2
            return np.array([
                mu * x[0] - om * x[1] - a * x[0] * r2,
                om * x[0] + mu * x[1] - a * x[1] * r2,
            ])

        return hopf
    raise ConfigError(f"{spec.kind} has no continuous right-hand side")


def simulate(spec: SystemSpec, integrator: IntegratorConfig = IntegratorConfig()) -> TimeSeriesDataset:
    """Integrate a continuous system on the requested sample grid.

    The stored derivatives are the analytic right-hand side evaluated at
    the sampled states.
    """
    f = system_rhs(spec)
    t0, t1 = spec.t_span
    n_steps = int(round((t1 - t0) / spec.dt))
    if n_steps < 1:
        raise ConfigError("t_span shorter than one step")
    times = t0 + spec.dt * np.arange(n_steps + 1)
    x0 = np.array(spec.x0, dtype=float)
    meta = {
        "system": spec.kind,
        "params": dict(spec.params),
        "x0": list(spec.x0),
        "dt": spec.dt,
        "integrator": integrator.method,
    }
    if integrator.method == "rk4":
        states = rk4_fixed(f, x0, times)
    else:
        states, steps = dp45_adaptive(
            f, x0, times, integrator.abs_tol, integrator.rel_tol,
            record_steps=integrator.record_step_size)
        if steps is not None:
            meta["step_sizes"] = [float(h) for h in steps]
    derivatives = np.array([f(x) for x in states])
    return TimeSeriesDataset(
        times=times,
        states=states,
        derivatives=derivatives,
        state_names=default_state_names(states.shape[1]),
        meta=meta,
    )


def iterate_map(
    spec: SystemSpec,
    n_steps: int,
    noise: NoiseSpec | None = None,
    parameter_name: str = "r",
) -> TimeSeriesDataset:
    """Iterate the stochastically forced logistic map.

    The parameter is stored as an appended constant state column (named
    ``parameter_name``) so ensembles over several parameter values can be
    concatenated and fit jointly.  Iterates escaping [-0.5, 1.5] truncate
    the trajectory with a warning, since the map diverges once outside
    [0, 1].
    """
    if spec.kind != "logistic":
        raise ConfigError("iterate_map expects a logistic system spec")
    mu = float(spec.params["mu"])
    x0 = spec.x0[0]
    if not 0.0 < x0 < 1.0:
        raise ConfigError("logistic map needs x0 in (0, 1)")
    if not 0.0 < mu <= 4.0:
        raise ConfigError("logistic map needs mu in (0, 4]")
    eta = noise.eta if noise is not None else 0.0
    rng = np.random.default_rng(noise.seed if noise is not None else 0)
    forcing = eta * rng.standard_normal(n_steps) if eta else np.zeros(n_steps)
    xs = [x0]
    x = x0
    for k in range(n_steps):
        x = mu * x * (1.0 - x) + forcing[k]
        if not -0.5 <= x <= 1.5:
            warnings.warn(
                f"logistic iterate escaped [-0.5, 1.5] at step {len(xs)} (mu={mu}); truncating")
            break
        xs.append(x)
    xcol = np.array(xs)
    states = np.column_stack([xcol, np.full(xcol.shape[0], mu)])
    return TimeSeriesDataset(
        times=np.arange(xcol.shape[0], dtype=float),
        states=states,
        state_names=("x", parameter_name),
        meta={"system": "logistic", "mu": mu, "eta": eta,
              "seed": (noise.seed if noise is not None else None), "x0": x0},
    )


def logistic_ensemble(
    mus,
    n_steps: int,
    eta: float,
    seed: int = 0,
    x0: float = 0.5,
    parameter_name: str = "r",
) -> TimeSeriesDataset:
    """Logistic-map training ensemble over several parameter values.

    Collects ``n_steps`` transitions per parameter value.  Trajectories
    that escape and truncate are continued by fresh seeded runs, each a
    new segment, so every parameter value contributes the requested
    amount of data regardless of where the noise drives the map.
    """
    runs = []
    for i, mu in enumerate(mus):
        collected, attempt = 0, 0
        while collected < n_steps:
            spec = SystemSpec("logistic", x0=(x0,), params={"mu": float(mu)})
            run = iterate_map(
                spec,
                n_steps - collected,
                noise=NoiseSpec(eta=eta, target="states", seed=seed + 1000 * i + attempt),
                parameter_name=parameter_name,
            )
            runs.append(run)
            collected += run.n_samples - 1
            attempt += 1
            if attempt > 10 * n_steps:
                raise NumericalError(f"logistic ensemble stalled at mu={mu}")
    return concatenate(runs)


def _append_column(ds: TimeSeriesDataset, name: str, col: np.ndarray,
                   dcol: np.ndarray | None) -> TimeSeriesDataset:
    if name in ds.state_names:
        raise DataError(f"state {name!r} already present")
    states = np.column_stack([ds.states, col])
    derivatives = ds.derivatives
    if derivatives is not None:
        if dcol is None:
            raise DataError(f"appending {name!r} needs a derivative column")
        derivatives = np.column_stack([derivatives, dcol])
    return ds.with_(states=states, derivatives=derivatives,
                    state_names=ds.state_names + (name,))


def augment_parameter(ds: TimeSeriesDataset, name: str, value: float) -> TimeSeriesDataset:
    """Append a bifurcation parameter as a constant state with zero derivative."""
    m = ds.n_samples
    return _append_column(ds, name, np.full(m, float(value)), np.zeros(m))


def augment_time(ds: TimeSeriesDataset, name: str = "t") -> TimeSeriesDataset:
    """Append time as a state with unit derivative."""
    return _append_column(ds, name, ds.times.copy(), np.ones(ds.n_samples))


def augment_signal(
    ds: TimeSeriesDataset,
    name: str,
    samples: np.ndarray,
    derivative_samples: np.ndarray | None = None,
) -> TimeSeriesDataset:
    """Append a known forcing/control signal sampled on the dataset grid."""
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.shape[0] != ds.n_samples:
        raise DataError("signal length must match the dataset")
    dcol = None
    if derivative_samples is not None:
        dcol = np.asarray(derivative_samples, dtype=float).ravel()
    return _append_column(ds, name, samples, dcol)


def concatenate(datasets: list[TimeSeriesDataset]) -> TimeSeriesDataset:
    """Stack several runs into one dataset with recorded segment starts.

    Later runs have their time stamps shifted to keep the global time
    vector strictly increasing; fits and differentiation treat segments
    independently.
    """
    if not datasets:
        raise DataError("nothing to concatenate")
    names = datasets[0].state_names
    has_deriv = datasets[0].derivatives is not None
    for ds in datasets[1:]:
        if ds.state_names != names:
            raise DataError("state names differ between datasets")
        if (ds.derivatives is not None) != has_deriv:
            raise DataError("derivative presence differs between datasets")
    times, segments, offset = [], [], 0.0
    row = 0
    for ds in datasets:
        t = ds.times
        gap = float(t[1] - t[0]) if t.shape[0] > 1 else 1.0
        shifted = t - t[0] + offset
        offset = shifted[-1] + gap
        times.append(shifted)
        segments.extend(row + s for s in ds.segments)
        row += ds.n_samples
    return TimeSeriesDataset(
        times=np.concatenate(times),
        states=np.vstack([ds.states for ds in datasets]),
        derivatives=np.vstack([ds.derivatives for ds in datasets]) if has_deriv else None,
        state_names=names,
        segments=tuple(segments),
        meta={"runs": [dict(ds.meta) for ds in datasets]},
    )


def mean_field_surrogate(
    params: dict,
    initial_conditions: list[tuple[float, float, float]],
    t_span: tuple[float, float] = (0.0, 50.0),
    dt: float = 0.01,
    integrator: IntegratorConfig = IntegratorConfig(),
) -> TimeSeriesDataset:
    """Mean-field cylinder-wake surrogate runs from several initial states.

    The on/off-manifold mix of initial conditions matters: without
    off-manifold transients the fast coordinate stays slaved to
    z = x^2 + y^2 and the regression problem degenerates.
    """
    if params["lam"] <= 0:
        raise ConfigError("mean-field relaxation rate lam must be positive")
    runs = [
        simulate(SystemSpec("meanfield3d", x0=ic, t_span=t_span, dt=dt, params=params), integrator)
        for ic in initial_conditions
    ]
    return concatenate(runs) if len(runs) > 1 else runs[0]
