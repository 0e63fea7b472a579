"""Ground-truth numerics: adaptive Runge-Kutta, method of lines, frequency.

The integrator is the Dormand-Prince 5(4) embedded pair with a PI step
controller and the standard quartic dense-output interpolant.  It is the
accuracy oracle for every solver comparison in the package.
"""

import time
from dataclasses import dataclass, field

import numpy as np

__all__ = ["IntegratorSettings", "Trajectory", "StiffnessError",
           "rk45_integrate", "MolSystem", "discretize_pde", "solve_pde",
           "measure_frequency", "InsufficientOscillationError"]

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920,
               -17253 / 339200, 22 / 525, -1 / 40])
# dense-output polynomial coefficients (theta^1..theta^4 per stage)
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_EXP_STEP = 0.7 / 5          # current-error exponent of the PI controller
_EXP_PREV = 0.4 / 5          # previous-error exponent
_FACTOR_MIN, _FACTOR_MAX = 0.2, 10.0
_MIN_STEP_FRACTION = 1e-14   # of the integration span


class StiffnessError(RuntimeError):
    """Raised when the controller drives the step below resolvable size."""


class InsufficientOscillationError(RuntimeError):
    """Raised when a trajectory has too few interior maxima to estimate a frequency."""


@dataclass(frozen=True)
class IntegratorSettings:
    rtol: float = 1e-10
    atol: float = 1e-10
    max_step: float = np.inf
    dense_output_grid: object = None

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")


class _DenseSegment:
    """Quartic interpolant over one accepted step."""

    __slots__ = ("t0", "h", "y0", "q")

    def __init__(self, t0, h, y0, k):
        self.t0 = t0
        self.h = h
        self.y0 = y0
        self.q = k.T @ _P          # (dim, 4)

    def __call__(self, t):
        theta = (t - self.t0) / self.h
        powers = np.vstack([theta ** (j + 1) for j in range(4)])
        return self.y0[:, None] + self.h * (self.q @ powers)

    def derivative(self, t):
        theta = (t - self.t0) / self.h
        powers = np.vstack([(j + 1) * theta ** j for j in range(4)])
        return self.q @ powers


class DenseOutput:
    """Piecewise interpolant assembled from the accepted steps."""

    def __init__(self, segments, t_end):
        self._segments = segments
        self._starts = np.array([s.t0 for s in segments])
        self._t_end = t_end

    def _locate(self, t):
        idx = np.searchsorted(self._starts, t, side="right") - 1
        return np.clip(idx, 0, len(self._segments) - 1)

    def _eval(self, t, deriv):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._locate(t)
        dim = self._segments[0].y0.size
        out = np.empty((dim, t.size))
        for seg_i in np.unique(idx):
            mask = idx == seg_i
            seg = self._segments[seg_i]
            out[:, mask] = seg.derivative(t[mask]) if deriv else seg(t[mask])
        return out

    def __call__(self, t):
        return self._eval(t, deriv=False)

    def derivative(self, t):
        return self._eval(t, deriv=True)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray           # (N, dim) on the evaluation grid
    step_times: np.ndarray       # accepted step endpoints
    accepted: int
    rejected: int
    wall_time: float
    dense: DenseOutput

    def component(self, i=0):
        return self.states[:, i]


def _initial_step(fun, t0, y0, f0, t_end, rtol, atol):
    scale = atol + np.abs(y0) * rtol
    d0 = np.linalg.norm(y0 / scale) / np.sqrt(y0.size)
    d1 = np.linalg.norm(f0 / scale) / np.sqrt(y0.size)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = fun(t0 + h0, y1)
    d2 = np.linalg.norm((f1 - f0) / scale) / np.sqrt(y0.size) / h0
    if d1 <= 1e-15 and d2 <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1, t_end - t0)


def rk45_integrate(rhs, y0, t_span, settings=None):
    """Integrate y' = rhs(t, y) with the Dormand-Prince 5(4) pair.

    Local error per step is kept below atol + rtol*|y| by a PI controller
    (safety 0.9, exponents 0.7/5 and 0.4/5, step-change factors in
    [0.2, 10]).  The solution is evaluated on ``settings.dense_output_grid``
    via the pair's quartic dense-output interpolant; when no grid is given
    the accepted step endpoints are used.
    """
    settings = settings or IntegratorSettings()
    t0, t_end = float(t_span[0]), float(t_span[1])
    span = t_end - t0
    if span <= 0:
        raise ValueError("t_span must be increasing")
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    dim = y.size

    start = time.perf_counter()
    t = t0
    f = np.atleast_1d(np.asarray(rhs(t, y), dtype=float))
    h = min(_initial_step(lambda tt, yy: np.atleast_1d(np.asarray(rhs(tt, yy), float)),
                          t0, y, f, t_end, settings.rtol, settings.atol),
            settings.max_step)
    segments = []
    step_times = [t0]
    accepted = rejected = 0
    err_prev = 1.0
    k = np.empty((7, dim))

    while t < t_end:
        h = min(h, t_end - t, settings.max_step)
        if h < _MIN_STEP_FRACTION * span:
            raise StiffnessError(
                f"step size {h:.3e} below {_MIN_STEP_FRACTION:.0e} of the span at t={t:.6g}; "
                "the problem is too stiff for an explicit pair")
        k[0] = f
        for s in range(1, 7):
            ys = y + h * (k[:s].T @ _A[s])
            k[s] = np.atleast_1d(np.asarray(rhs(t + _C[s] * h, ys), dtype=float))
        y_new = y + h * (k.T @ _B)
        err_vec = h * (k.T @ _E)
        scale = settings.atol + settings.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = np.linalg.norm(err_vec / scale) / np.sqrt(dim)

        if err <= 1.0:
            segments.append(_DenseSegment(t, h, y.copy(), k.copy()))
            t += h
            y = y_new
            f = k[6].copy()      # FSAL: stage 7 is the RHS at the new point
            step_times.append(t)
            accepted += 1
            if err == 0.0:
                factor = _FACTOR_MAX
            else:
                factor = _SAFETY * err ** -_EXP_STEP * err_prev ** _EXP_PREV
            err_prev = max(err, 1e-10)
            h *= min(max(factor, _FACTOR_MIN), _FACTOR_MAX)
        else:
            rejected += 1
            h *= min(max(_SAFETY * err ** -0.2, _FACTOR_MIN), 1.0)

    wall = time.perf_counter() - start
    dense = DenseOutput(segments, t_end)
    if settings.dense_output_grid is not None:
        grid = np.asarray(settings.dense_output_grid, dtype=float)
    else:
        grid = np.array(step_times)
    states = dense(grid).T
    return Trajectory(times=grid, states=states, step_times=np.array(step_times),
                      accepted=accepted, rejected=rejected, wall_time=wall, dense=dense)


@dataclass
class MolSystem:
    """Semidiscrete form of a 1D PDE on a uniform grid with Dirichlet data."""

    rhs: object
    y0: np.ndarray
    x: np.ndarray                # full grid including boundaries
    x_interior: np.ndarray
    kind: str
    bc: tuple

    def full_field(self, interior_states):
        """Attach boundary values to interior snapshots (rows are times)."""
        interior_states = np.atleast_2d(interior_states)
        n_t = interior_states.shape[0]
        full = np.empty((n_t, self.x.size))
        full[:, 0] = self.bc[0]
        full[:, -1] = self.bc[1]
        full[:, 1:-1] = interior_states
        return full


def discretize_pde(spec, nx, ic_fun, bc=(0.0, 0.0), space_domain=(0.0, 2.0),
                   reaction=None, forcing=None):
    """Method-of-lines semidiscretization with second-order central differences.

    ``nx`` counts grid points including both Dirichlet boundaries, leaving
    nx - 2 interior unknowns.  Heat-like problems yield a first-order system;
    wave problems double the state to (u, u_t).  ``reaction`` (pointwise in u)
    and ``forcing`` (pointwise in x, t) are added to the interior right-hand
    side.
    """
    if nx < 8:
        raise ValueError(f"nx must be >= 8, got {nx}")
    xa, xb = space_domain
    x = np.linspace(xa, xb, nx)
    xi = x[1:-1]
    dx = x[1] - x[0]
    bl, br = float(bc[0]), float(bc[1])

    def laplacian(u):
        um = np.concatenate(([bl], u[:-1]))
        up = np.concatenate((u[1:], [br]))
        return (um - 2.0 * u + up) / dx ** 2

    react = reaction if reaction is not None else (lambda u: 0.0)
    force = forcing if forcing is not None else (lambda xx, tt: 0.0)

    if spec.kind == "kpp_fisher":
        D = spec.diffusion

        def rhs(t, u):
            return D * laplacian(u) + react(u) + force(xi, t)

        y0 = np.asarray(ic_fun(xi), dtype=float)
    elif spec.kind == "wave":
        c2 = spec.speed ** 2
        m = xi.size

        def rhs(t, y):
            u, v = y[:m], y[m:]
            return np.concatenate((v, c2 * laplacian(u) + react(u) + force(xi, t)))

        y0 = np.concatenate((np.asarray(ic_fun(xi), dtype=float), np.zeros(m)))
    else:
        raise ValueError(f"unknown pde kind {spec.kind!r}")

    return MolSystem(rhs=rhs, y0=y0, x=x, x_interior=xi, kind=spec.kind, bc=(bl, br))


def solve_pde(mol, t_span, t_eval, settings=None):
    """Integrate a MolSystem and return the full field on (t_eval, x)."""
    settings = settings or IntegratorSettings()
    settings = IntegratorSettings(rtol=settings.rtol, atol=settings.atol,
                                  max_step=settings.max_step, dense_output_grid=t_eval)
    traj = rk45_integrate(mol.rhs, mol.y0, t_span, settings)
    states = traj.states
    if mol.kind == "wave":
        states = states[:, :mol.x_interior.size]
    return mol.full_field(states), traj


def measure_frequency(times, values):
    """Dominant angular frequency from the mean spacing of signal maxima.

    Sample maxima are refined by parabolic interpolation through their three
    neighboring samples.  Needs at least two interior maxima.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    peaks = []
    for i in range(1, len(values) - 1):
        if values[i] >= values[i - 1] and values[i] > values[i + 1]:
            denom = values[i - 1] - 2.0 * values[i] + values[i + 1]
            if denom != 0.0:
                delta = 0.5 * (values[i - 1] - values[i + 1]) / denom
            else:
                delta = 0.0
            dt = times[min(i + 1, len(times) - 1)] - times[i]
            peaks.append(times[i] + delta * dt)
    if len(peaks) < 2:
        raise InsufficientOscillationError(
            f"found {len(peaks)} interior maxima, need at least 2")
    spacings = np.diff(peaks)
    return 2.0 * np.pi / np.mean(spacings)
