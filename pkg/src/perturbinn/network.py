"""Multi-head physics-informed network with exact input-derivative propagation.

A shared dense backbone maps (Fourier-embedded) coordinates to a latent
matrix H whose columns are split across the state components; per-equation
linear heads W turn the latent into solutions u = H_s W_s.  First and second
input derivatives of H are propagated layer by layer with the closed-form
derivatives of the sine and tanh activations; nothing is ever finite
differenced.  Training minimizes the average physics loss across heads with
adaptive-moment gradient descent, with gradients backpropagated through the
derivative streams as well.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["NetworkConfig", "LatentEval", "LatentBundle", "TrainingHeadSpec",
           "LossWeights", "MultiHeadModel", "fourier_embed", "latent_forward",
           "head_loss", "train_multihead", "finetune_head", "TrainingError"]


class TrainingError(RuntimeError):
    """Raised when training diverges (non-finite loss)."""


@dataclass(frozen=True)
class LossWeights:
    w_pde: float = 1.0
    w_ic: float = 10.0
    w_bc: float = 10.0

    def __post_init__(self):
        if min(self.w_pde, self.w_ic, self.w_bc) < 0:
            raise ValueError("loss weights must be nonnegative")
        if max(self.w_pde, self.w_ic, self.w_bc) == 0:
            raise ValueError("at least one loss weight must be positive")


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture of the shared backbone.

    ``fourier_frequencies`` holds one frequency list per input coordinate;
    the embedding keeps the raw coordinates and appends sin/cos pairs.
    ``activations`` names one of {"sine", "tanh"} per layer, the last layer
    producing the latent of width state_components * latent_width.
    """

    input_dim: int = 1
    fourier_frequencies: tuple = ((1, 2, 3, 4, 5, 6, 7, 8),)
    hidden_layers: tuple = (64, 64, 64)
    activations: tuple = ("sine", "sine", "tanh", "tanh")
    latent_width: int = 32
    state_components: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.input_dim not in (1, 2):
            raise ValueError("input_dim must be 1 (time) or 2 (space, time)")
        if len(self.fourier_frequencies) != self.input_dim:
            raise ValueError("need one frequency list per input coordinate")
        if len(self.activations) != len(self.hidden_layers) + 1:
            raise ValueError("need one activation per layer incl. the latent layer")
        for a in self.activations:
            if a not in ("sine", "tanh"):
                raise ValueError(f"unknown activation {a!r}")

    @property
    def feature_dim(self):
        return self.input_dim + 2 * sum(len(f) for f in self.fourier_frequencies)

    @property
    def latent_total(self):
        return self.latent_width * self.state_components

    @property
    def layer_dims(self):
        dims = [self.feature_dim, *self.hidden_layers, self.latent_total]
        return list(zip(dims[:-1], dims[1:]))


@dataclass
class LatentEval:
    """Latent matrix and its exact input derivatives on one point set."""

    points: np.ndarray
    H: np.ndarray
    dH_dt: np.ndarray
    d2H_dt2: np.ndarray
    dH_dx: np.ndarray = None
    d2H_dx2: np.ndarray = None

    def component(self, s, width):
        return self.H[:, s * width:(s + 1) * width]


@dataclass
class LatentBundle:
    """Latent evaluations on the interior / initial / boundary partitions."""

    interior: LatentEval
    initial: LatentEval = None
    boundary: LatentEval = None


@dataclass
class TrainingHeadSpec:
    """One pretraining equation: operator, forcing samples, condition values."""

    operator: object                  # OperatorSpec
    forcing: object                   # callable(points) -> (r, N) or array
    ic: tuple = ()
    bc: tuple = ()
    label: str = ""


def fourier_embed(points, frequencies):
    """Raw coordinates concatenated with sin/cos features per frequency.

    Returns (features, d/dt streams, d2/dt2, d/dx, d2/dx2); the x streams are
    None for one-dimensional input.  ``points`` is (N,) for time-only input
    or (N, 2) with columns (x, t).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        coords = [pts]
    else:
        coords = [pts[:, 0], pts[:, 1]]
    if len(coords) != len(frequencies):
        raise ValueError("need one frequency list per coordinate")
    n = coords[0].size
    cols, d_t, d_tt, d_x, d_xx = [], [], [], [], []
    t_index = len(coords) - 1         # time is always the last coordinate
    for ci, (c, freqs) in enumerate(zip(coords, frequencies)):
        one = np.ones(n)
        zero = np.zeros(n)
        cols.append(c)
        d_t.append(one if ci == t_index else zero)
        d_tt.append(zero)
        d_x.append(one if (len(coords) == 2 and ci == 0) else zero)
        d_xx.append(zero)
        for nu in freqs:
            s, co = np.sin(nu * c), np.cos(nu * c)
            cols.extend([s, co])
            if ci == t_index:
                d_t.extend([nu * co, -nu * s])
                d_tt.extend([-nu ** 2 * s, -nu ** 2 * co])
            else:
                d_t.extend([zero, zero])
                d_tt.extend([zero, zero])
            if len(coords) == 2 and ci == 0:
                d_x.extend([nu * co, -nu * s])
                d_xx.extend([-nu ** 2 * s, -nu ** 2 * co])
            else:
                d_x.extend([zero, zero])
                d_xx.extend([zero, zero])
    stack = lambda lst: np.column_stack(lst)
    if len(coords) == 1:
        return stack(cols), stack(d_t), stack(d_tt), None, None
    return stack(cols), stack(d_t), stack(d_tt), stack(d_x), stack(d_xx)


def _act_tables(kind, z):
    if kind == "sine":
        s, c = np.sin(z), np.cos(z)
        return s, c, -s, -c
    u = np.tanh(z)
    p1 = 1.0 - u * u
    p2 = -2.0 * u * p1
    p3 = -2.0 * p1 * (1.0 - 3.0 * u * u)
    return u, p1, p2, p3


def init_parameters(config):
    """Seeded initialization: uniform bounds suited to each activation.

    Sine layers use symmetric uniform weights with bounds sqrt(6/fan_in);
    tanh layers use variance-preserving (Glorot) uniform bounds.
    """
    rng = np.random.default_rng(config.seed)
    layers = []
    for (d_in, d_out), act in zip(config.layer_dims, config.activations):
        if act == "sine":
            bound = np.sqrt(6.0 / d_in)
        else:
            bound = np.sqrt(6.0 / (d_in + d_out))
        W = rng.uniform(-bound, bound, size=(d_in, d_out))
        b = np.zeros(d_out)
        layers.append([W, b])
    return layers


def _forward(layers, config, points, tape=None):
    """Propagate values and derivative streams; optionally record a tape."""
    v, vt, vtt, vx, vxx = fourier_embed(points, config.fourier_frequencies)
    has_x = vx is not None
    for li, ((W, b), act) in enumerate(zip(layers, config.activations)):
        z = v @ W + b
        zt = vt @ W
        ztt = vtt @ W
        zx = vx @ W if has_x else None
        zxx = vxx @ W if has_x else None
        f0, f1, f2, f3 = _act_tables(act, z)
        h = f0
        ht = f1 * zt
        htt = f2 * zt * zt + f1 * ztt
        hx = f1 * zx if has_x else None
        hxx = f2 * zx * zx + f1 * zxx if has_x else None
        if tape is not None:
            tape.append(dict(a=(v, vt, vtt, vx, vxx), z=(z, zt, ztt, zx, zxx),
                             f=(f1, f2, f3)))
        v, vt, vtt, vx, vxx = h, ht, htt, hx, hxx
    return v, vt, vtt, vx, vxx


def _backward(layers, config, tape, gH, gHt=None, gHtt=None, gHx=None, gHxx=None):
    """Gradients of a scalar loss w.r.t. layer parameters.

    ``gH`` etc. are the loss gradients w.r.t. the latent value and derivative
    streams produced by :func:`_forward`.
    """
    n_out = tape[-1]["z"][0].shape
    zeros = lambda: np.zeros(n_out)
    gv = gH
    gvt = gHt if gHt is not None else zeros()
    gvtt = gHtt if gHtt is not None else zeros()
    has_x = tape[0]["a"][3] is not None
    gvx = gHx if (has_x and gHx is not None) else (np.zeros(n_out) if has_x else None)
    gvxx = gHxx if (has_x and gHxx is not None) else (np.zeros(n_out) if has_x else None)

    grads = [None] * len(layers)
    for li in range(len(layers) - 1, -1, -1):
        rec = tape[li]
        v, vt, vtt, vx, vxx = rec["a"]
        z, zt, ztt, zx, zxx = rec["z"]
        f1, f2, f3 = rec["f"]
        gz = gv * f1 + gvt * f2 * zt + gvtt * (f3 * zt * zt + f2 * ztt)
        gzt = gvt * f1 + 2.0 * gvtt * f2 * zt
        gztt = gvtt * f1
        if has_x:
            gz = gz + gvx * f2 * zx + gvxx * (f3 * zx * zx + f2 * zxx)
            gzx = gvx * f1 + 2.0 * gvxx * f2 * zx
            gzxx = gvxx * f1
        W, _ = layers[li]
        gW = v.T @ gz + vt.T @ gzt + vtt.T @ gztt
        if has_x:
            gW += vx.T @ gzx + vxx.T @ gzxx
        gb = gz.sum(axis=0)
        grads[li] = (gW, gb)
        if li:
            gv = gz @ W.T
            gvt = gzt @ W.T
            gvtt = gztt @ W.T
            if has_x:
                gvx = gzx @ W.T
                gvxx = gzxx @ W.T
    return grads


@dataclass
class MultiHeadModel:
    """Trained backbone plus the per-head weights found during pretraining."""

    config: NetworkConfig
    layers: list
    head_weights: list = field(default_factory=list)
    head_losses: list = field(default_factory=list)
    train_grid: object = None
    metadata: dict = field(default_factory=dict)

    def latent(self, points):
        H, Ht, Htt, Hx, Hxx = _forward(self.layers, self.config, points)
        return LatentEval(points=np.asarray(points, dtype=float), H=H,
                          dH_dt=Ht, d2H_dt2=Htt, dH_dx=Hx, d2H_dx2=Hxx)

    def bundle(self, interior, initial=None, boundary=None):
        return LatentBundle(
            interior=self.latent(interior),
            initial=self.latent(initial) if initial is not None else None,
            boundary=self.latent(boundary) if boundary is not None else None)


def latent_forward(model, points):
    """Latent matrix with exact chain-rule input derivatives."""
    return model.latent(points)


def _ode_residual(ev, A, B, W, forcing):
    """Residual rows of A u' + B u - F for a first-order system head."""
    r = W.shape[1]
    m = W.shape[0]
    comp_vals = [ev.component(s, m) @ W[:, s] for s in range(r)]
    comp_ders = [ev.dH_dt[:, s * m:(s + 1) * m] @ W[:, s] for s in range(r)]
    res = []
    for e in range(r):
        acc = -forcing[e]
        for s in range(r):
            if A[e, s]:
                acc = acc + A[e, s] * comp_ders[s]
            if B[e, s]:
                acc = acc + B[e, s] * comp_vals[s]
        res.append(acc)
    return res, comp_vals, comp_ders


def head_loss(bundle, W, head, weights):
    """Quadratic physics loss of one head: residual + condition sums."""
    op = head.operator
    m = W.shape[0]
    r = W.shape[1]
    forcing = head.forcing(bundle.interior.points) if callable(head.forcing) \
        else np.asarray(head.forcing, dtype=float)
    forcing = np.atleast_2d(forcing)
    loss = 0.0
    if op.kind == "ode_first_order_system":
        res, _, _ = _ode_residual(bundle.interior, op.A, op.B, W, forcing)
        loss += weights.w_pde * sum(float(rr @ rr) for rr in res)
        if bundle.initial is not None and len(head.ic):
            for s, val in enumerate(head.ic):
                u0 = bundle.initial.component(s, m) @ W[:, s]
                loss += weights.w_ic * float(((u0 - val) ** 2).sum())
        return loss
    # scalar PDE heads
    ev = bundle.interior
    if op.kind == "heat_like":
        Ru = (ev.dH_dt - op.D * ev.d2H_dx2) @ W[:, 0] - forcing[0]
    elif op.kind == "wave_like":
        Ru = (ev.d2H_dt2 - op.c ** 2 * ev.d2H_dx2) @ W[:, 0] - forcing[0]
    else:
        raise ValueError(f"unknown operator kind {op.kind!r}")
    loss += weights.w_pde * float(Ru @ Ru)
    if bundle.initial is not None and len(head.ic):
        u0 = bundle.initial.H @ W[:, 0] - np.asarray(head.ic[0], dtype=float)
        loss += weights.w_ic * float(u0 @ u0)
        if op.kind == "wave_like" and len(head.ic) > 1:
            v0 = bundle.initial.dH_dt @ W[:, 0] - np.asarray(head.ic[1], dtype=float)
            loss += weights.w_ic * float(v0 @ v0)
    if bundle.boundary is not None and len(head.bc):
        ub = bundle.boundary.H @ W[:, 0] - np.asarray(head.bc[0], dtype=float)
        loss += weights.w_bc * float(ub @ ub)
    return loss


class _Adam:
    def __init__(self, shapes, lr0=1e-3, lr1=1e-4, total=1, beta1=0.9,
                 beta2=0.999, eps=1e-8):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.lr0, self.lr1, self.total = lr0, lr1, max(total, 1)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.step_count = 0

    def lr(self):
        frac = min(self.step_count / self.total, 1.0)
        return self.lr0 * (self.lr1 / self.lr0) ** frac

    def step(self, params, grads):
        self.step_count += 1
        lr = self.lr()
        b1c = 1.0 - self.beta1 ** self.step_count
        b2c = 1.0 - self.beta2 ** self.step_count
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


def _head_loss_and_latent_grads(ev_int, ev_ic, ev_bc, W, head, weights):
    """Loss plus gradients w.r.t. the latent streams and the head weights."""
    op = head.operator
    m, r = W.shape
    forcing = np.atleast_2d(head.forcing)
    gH_int = np.zeros_like(ev_int.H)
    gHt_int = np.zeros_like(ev_int.H)
    gHtt_int = np.zeros_like(ev_int.H) if op.kind == "wave_like" else None
    gHxx_int = np.zeros_like(ev_int.H) if op.kind != "ode_first_order_system" else None
    gW = np.zeros_like(W)
    loss = 0.0

    if op.kind == "ode_first_order_system":
        A, B = op.A, op.B
        res, comp_vals, comp_ders = _ode_residual(ev_int, A, B, W, forcing)
        loss += weights.w_pde * sum(float(rr @ rr) for rr in res)
        for s in range(r):
            sl = slice(s * m, (s + 1) * m)
            pv = sum(2.0 * weights.w_pde * B[e, s] * res[e] for e in range(r))
            pd = sum(2.0 * weights.w_pde * A[e, s] * res[e] for e in range(r))
            gH_int[:, sl] += np.outer(pv, W[:, s])
            gHt_int[:, sl] += np.outer(pd, W[:, s])
            gW[:, s] += ev_int.H[:, sl].T @ pv + ev_int.dH_dt[:, sl].T @ pd
        gH_ic = np.zeros_like(ev_ic.H) if ev_ic is not None else None
        if ev_ic is not None and len(head.ic):
            for s, val in enumerate(head.ic):
                sl = slice(s * m, (s + 1) * m)
                d = ev_ic.H[:, sl] @ W[:, s] - val
                loss += weights.w_ic * float(d @ d)
                gH_ic[:, sl] += 2.0 * weights.w_ic * np.outer(d, W[:, s])
                gW[:, s] += 2.0 * weights.w_ic * ev_ic.H[:, sl].T @ d
        return loss, gW, (gH_int, gHt_int, None, None), (gH_ic, None), (None, None)

    # scalar PDE operators
    w = W[:, 0]
    if op.kind == "heat_like":
        G = ev_int.dH_dt - op.D * ev_int.d2H_dx2
    else:
        G = ev_int.d2H_dt2 - op.c ** 2 * ev_int.d2H_dx2
    res = G @ w - forcing[0]
    loss += weights.w_pde * float(res @ res)
    gG = 2.0 * weights.w_pde * np.outer(res, w)
    gW[:, 0] += 2.0 * weights.w_pde * G.T @ res
    if op.kind == "heat_like":
        gHt_int += gG
        gHxx_int -= op.D * gG
        gHtt = None
    else:
        gHtt_int += gG
        gHxx_int -= op.c ** 2 * gG
        gHtt = gHtt_int
    gH_ic = np.zeros_like(ev_ic.H) if ev_ic is not None else None
    gHt_ic = None
    if ev_ic is not None and len(head.ic):
        d = ev_ic.H @ w - np.asarray(head.ic[0], dtype=float)
        loss += weights.w_ic * float(d @ d)
        gH_ic += 2.0 * weights.w_ic * np.outer(d, w)
        gW[:, 0] += 2.0 * weights.w_ic * ev_ic.H.T @ d
        if op.kind == "wave_like" and len(head.ic) > 1:
            gHt_ic = np.zeros_like(ev_ic.H)
            dv = ev_ic.dH_dt @ w - np.asarray(head.ic[1], dtype=float)
            loss += weights.w_ic * float(dv @ dv)
            gHt_ic += 2.0 * weights.w_ic * np.outer(dv, w)
            gW[:, 0] += 2.0 * weights.w_ic * ev_ic.dH_dt.T @ dv
    gH_bc = np.zeros_like(ev_bc.H) if ev_bc is not None else None
    if ev_bc is not None and len(head.bc):
        d = ev_bc.H @ w - np.asarray(head.bc[0], dtype=float)
        loss += weights.w_bc * float(d @ d)
        gH_bc += 2.0 * weights.w_bc * np.outer(d, w)
        gW[:, 0] += 2.0 * weights.w_bc * ev_bc.H.T @ d
    return loss, gW, (gH_int, gHt_int, gHtt, gHxx_int), (gH_ic, gHt_ic), (gH_bc, None)


def train_multihead(config, heads, grids, epochs=20000, weights=None,
                    lr0=1e-3, lr1=1e-4, log_every=0, callback=None,
                    polish=True):
    """Pretrain a shared backbone on the average loss across heads.

    ``grids`` maps partition names ("interior", required; "initial",
    "boundary" optional) to point sets shared by all heads.  Head forcings
    must be sampled on the interior grid beforehand.  Training is full-batch
    and deterministic for a fixed config seed.  With ``polish`` the head
    weights are re-solved in closed form against the final latent, which is
    exactly how heads are obtained at inference time.
    """
    weights = weights or LossWeights()
    layers = init_parameters(config)
    rng = np.random.default_rng(config.seed + 1)
    m, r = config.latent_width, config.state_components
    head_W = [rng.normal(0.0, 0.05, size=(m, r)) for _ in heads]

    pts_int = np.asarray(grids["interior"], dtype=float)
    pts_ic = grids.get("initial")
    pts_bc = grids.get("boundary")
    counts = [len(pts_int)] + [len(p) for p in (pts_ic, pts_bc) if p is not None]
    union = np.concatenate([p for p in (pts_int, pts_ic, pts_bc) if p is not None],
                           axis=0)
    splits = np.cumsum(counts)[:-1]

    shapes = [w.shape for lay in layers for w in lay] + [w.shape for w in head_W]
    opt = _Adam(shapes, lr0=lr0, lr1=lr1, total=epochs)
    k = len(heads)
    history = []

    def partitions(H, Ht, Htt, Hx, Hxx):
        parts = np.split(np.arange(union.shape[0]), splits)
        evs = []
        for idx in parts:
            sl = (idx[0], idx[-1] + 1)
            evs.append(LatentEval(points=union[sl[0]:sl[1]], H=H[sl[0]:sl[1]],
                                  dH_dt=Ht[sl[0]:sl[1]], d2H_dt2=Htt[sl[0]:sl[1]],
                                  dH_dx=None if Hx is None else Hx[sl[0]:sl[1]],
                                  d2H_dx2=None if Hxx is None else Hxx[sl[0]:sl[1]]))
        while len(evs) < 3:
            evs.append(None)
        ev_int = evs[0]
        ev_ic = evs[1] if pts_ic is not None else None
        ev_bc = evs[2 if pts_ic is not None else 1] if pts_bc is not None else None
        return ev_int, ev_ic, ev_bc

    for step in range(epochs):
        tape = []
        H, Ht, Htt, Hx, Hxx = _forward(layers, config, union, tape=tape)
        ev_int, ev_ic, ev_bc = partitions(H, Ht, Htt, Hx, Hxx)
        gH = np.zeros_like(H)
        gHt = np.zeros_like(H)
        gHtt = np.zeros_like(H)
        gHxx = np.zeros_like(H) if Hx is not None else None
        gWs = []
        total = 0.0
        n_int = ev_int.H.shape[0]
        n_ic = 0 if ev_ic is None else ev_ic.H.shape[0]
        for hi, head in enumerate(heads):
            loss, gW, g_int, g_ic, g_bc = _head_loss_and_latent_grads(
                ev_int, ev_ic, ev_bc, head_W[hi], head, weights)
            total += loss
            gWs.append(gW / k)
            gH[:n_int] += g_int[0] / k
            gHt[:n_int] += g_int[1] / k
            if g_int[2] is not None:
                gHtt[:n_int] += g_int[2] / k
            if gHxx is not None and g_int[3] is not None:
                gHxx[:n_int] += g_int[3] / k
            if g_ic[0] is not None:
                gH[n_int:n_int + n_ic] += g_ic[0] / k
            if g_ic[1] is not None:
                gHt[n_int:n_int + n_ic] += g_ic[1] / k
            if g_bc[0] is not None:
                gH[n_int + n_ic:] += g_bc[0] / k
        total /= k
        if not np.isfinite(total):
            raise TrainingError(f"loss became non-finite at step {step}")
        grads = _backward(layers, config, tape, gH, gHt, gHtt, None, gHxx)
        flat_params = [w for lay in layers for w in lay] + head_W
        flat_grads = [g for gr in grads for g in gr] + gWs
        opt.step(flat_params, flat_grads)
        if log_every and step % log_every == 0:
            history.append((step, total))
            if callback:
                callback(step, total)

    model = MultiHeadModel(config=config, layers=layers, head_weights=head_W,
                           train_grid=grids, metadata={"epochs": epochs,
                                                       "lr0": lr0, "lr1": lr1})
    bundle = LatentBundle(
        interior=model.latent(pts_int),
        initial=model.latent(pts_ic) if pts_ic is not None else None,
        boundary=model.latent(pts_bc) if pts_bc is not None else None)
    if polish:
        from .oneshot import assemble_normal_system, one_shot_solve
        systems = {}
        for i, head in enumerate(heads):
            key = head.operator.cache_key()
            if key not in systems:
                systems[key] = assemble_normal_system(bundle, head.operator,
                                                      weights, m)
            ic_vals = np.concatenate([np.atleast_1d(v) for v in head.ic]) \
                if len(head.ic) else None
            bc_vals = np.concatenate([np.atleast_1d(v) for v in head.bc]) \
                if len(head.bc) else None
            head_W[i] = one_shot_solve(systems[key],
                                       np.asarray(head.forcing).ravel(),
                                       ic_vals, bc_vals)
    model.head_losses = [head_loss(bundle, head_W[i], heads[i], weights)
                         for i in range(k)]
    model.metadata["history"] = history
    return model


def finetune_head(model, objective, reference, tol=2.5e-2, max_iters=200_000,
                  lr=1e-3, check_every=250):
    """Gradient-descent baseline: optimize one head on a frozen backbone.

    ``objective(W, bundle) -> (loss, grad_W)`` defines the (possibly
    nonlinear) physics loss; ``reference(W, bundle) -> mae`` scores the
    candidate against the ground-truth trajectory.  Stops when the solution
    error reaches ``tol`` or the iteration cap; the cap being hit is reported
    as non-convergence rather than an error.
    """
    cfg = model.config
    rng = np.random.default_rng(cfg.seed + 97)
    W = rng.normal(0.0, 0.05, size=(cfg.latent_width, cfg.state_components))
    opt = _Adam([W.shape], lr0=lr, lr1=lr, total=max_iters)
    start = time.perf_counter()
    mae = np.inf
    iters = 0
    for it in range(1, max_iters + 1):
        loss, gW = objective(W)
        if not np.isfinite(loss):
            raise TrainingError(f"finetune loss became non-finite at iteration {it}")
        opt.step([W], [gW])
        iters = it
        if it % check_every == 0:
            mae = reference(W)
            if mae <= tol:
                break
    if iters % check_every != 0 or mae is np.inf:
        mae = reference(W)
    elapsed = time.perf_counter() - start
    return dict(W=W, wall_time=elapsed, mae=mae, converged=bool(mae <= tol),
                iterations=iters)
