"""Particle paths and the proof-level quantities tracked along them.

The flow map solves dq/dt = u(t, q) + lam from a recorded trajectory:
cubic Hermite interpolation in time (each record stores the instantaneous
time derivative of the fields) combined with trigonometric interpolation
in space, so the diagnostics keep spectral accuracy without re-running
the solver.  Along each path we evaluate the slope g = u_x(t, q), the
stretch q_x, the exponentially weighted pair (A, B) whose monotonicity
drives the Riccati slope collapse, their unweighted variants, and the
residuals of the momentum identity and of the two-component density
invariant.

The weighted pair grows like exp(t |k - lam| / alpha) and can overflow;
it is therefore carried in sign + log-magnitude form, and monotonicity
checks operate on that representation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Parameters
from .evolution import Trajectory

__all__ = [
    "PathPoint",
    "CharacteristicPath",
    "advect",
    "weighted_ab",
    "weighted_ab_log",
    "plain_ab",
    "collapse_rate",
    "momentum_residual",
    "rho_invariant_residual",
    "monotone_violation",
    "resolved_count",
]


@dataclass(frozen=True)
class PathPoint:
    """Everything evaluated at one recorded time along one path."""

    t: float
    q: float
    qx: float
    u: float
    ux: float
    m: float
    m0: float
    rho: float | None = None
    rho0: float | None = None


def weighted_ab(point: PathPoint, params: Parameters) -> tuple[float, float]:
    """Exponentially weighted monotone pair

        A = exp(q/alpha + (k-lam) t/alpha) * ((u+k)/alpha - u_x)
        B = exp(-q/alpha + (lam-k) t/alpha) * ((u+k)/alpha + u_x)

    A is nondecreasing and B nonincreasing in t along every path.  Values
    may overflow to +-inf for large t*|k-lam|/alpha; use weighted_ab_log
    for overflow-safe comparisons.
    """
    sa, la, sb, lb = weighted_ab_log(point, params)
    with np.errstate(over="ignore"):
        return float(sa * np.exp(la)), float(sb * np.exp(lb))


def weighted_ab_log(
    point: PathPoint, params: Parameters
) -> tuple[float, float, float, float]:
    """(sign_A, log|A|, sign_B, log|B|); log|.| is -inf for exact zeros."""
    a = params.alpha
    base_a = (point.u + params.k) / a - point.ux
    base_b = (point.u + params.k) / a + point.ux
    wa = (point.q + (params.k - params.lam) * point.t) / a
    wb = -wa
    with np.errstate(divide="ignore"):
        la = wa + np.log(abs(base_a)) if base_a != 0.0 else -np.inf
        lb = wb + np.log(abs(base_b)) if base_b != 0.0 else -np.inf
    return float(np.sign(base_a)), float(la), float(np.sign(base_b)), float(lb)


def plain_ab(point: PathPoint, params: Parameters) -> tuple[float, float]:
    """Unweighted variants A = (u+k)/alpha - u_x, B = (u+k)/alpha + u_x."""
    a = (point.u + params.k) / params.alpha - point.ux
    b = (point.u + params.k) / params.alpha + point.ux
    return float(a), float(b)


def collapse_rate(a: float, b: float) -> float | None:
    """h = sqrt(-A*B) for the unweighted pair; defined only when A*B < 0.
    Along criterion-satisfying paths h grows at least like h^2/2, which
    yields the explicit breaking-time bound 2/h(0)."""
    prod = a * b
    if prod >= 0.0:
        return None
    return float(np.sqrt(-prod))


def momentum_residual(point: PathPoint, params: Parameters) -> float:
    """LHS - RHS of the conserved momentum identity

        m0(x0) + k = (m(t, q) + k) * q_x^2,

    using c0/2 + gamma/(2 alpha^2) = k; zero along exact solutions."""
    return float((point.m0 + params.k) - (point.m + params.k) * point.qx**2)


def rho_invariant_residual(point: PathPoint) -> float:
    """(rho~(t,q) + 1) q_x - (rho~0(x0) + 1); zero along exact solutions
    of the two-component system."""
    if point.rho is None or point.rho0 is None:
        raise ValueError("density invariant needs a two-component path")
    return float((point.rho + 1.0) * point.qx - (point.rho0 + 1.0))


@dataclass(frozen=True, eq=False)
class CharacteristicPath:
    """Time series along one characteristic seeded at x0.

    All arrays share the trajectory's recorded times (possibly truncated
    at a domain-boundary exit).  ``n_pre_detection`` counts the leading
    entries recorded strictly before breaking detection.
    """

    x0: float
    t: np.ndarray
    q: np.ndarray
    qx: np.ndarray
    u: np.ndarray
    g: np.ndarray
    a_weighted: np.ndarray
    b_weighted: np.ndarray
    sign_a_w: np.ndarray
    log_abs_a_w: np.ndarray
    sign_b_w: np.ndarray
    log_abs_b_w: np.ndarray
    a_plain: np.ndarray
    b_plain: np.ndarray
    h_plain: np.ndarray
    momentum_res: np.ndarray
    rho_res: np.ndarray | None
    n_pre_detection: int
    truncated: bool
    weight_overflow: bool

    def points(self) -> list[PathPoint]:
        pts = []
        for i in range(self.t.size):
            pts.append(
                PathPoint(
                    t=float(self.t[i]),
                    q=float(self.q[i]),
                    qx=float(self.qx[i]),
                    u=float(self.u[i]),
                    ux=float(self.g[i]),
                    m=np.nan,
                    m0=np.nan,
                )
            )
        return pts


class _SpaceTimeField:
    """Hermite-in-time / trigonometric-in-space evaluator over records."""

    def __init__(self, traj: Trajectory, component: str):
        grid = traj.grid
        self.n = grid.n_points
        self.half_length = grid.half_length
        self.xi = grid.wavenumbers()
        self.ik = 1j * self.xi
        self.ik[-1] = 0.0
        self.weights = np.full(self.xi.size, 2.0)
        self.weights[0] = 1.0
        self.weights[-1] = 1.0
        self.times = traj.times()
        if component == "u":
            vals = [r.state.u.values for r in traj.records]
            dots = [r.du_dt.values for r in traj.records]
        elif component == "rho":
            vals = [r.state.rho_tilde.values for r in traj.records]
            dots = [r.drho_dt.values for r in traj.records]
        else:
            raise ValueError(component)
        self.coef = np.array([np.fft.rfft(v) for v in vals])
        self.coef_dot = np.array([np.fft.rfft(v) for v in dots])

    def coef_at(self, seg: int, s: float) -> np.ndarray:
        """Hermite blend of the rfft coefficients at fraction s of segment."""
        dt = self.times[seg + 1] - self.times[seg]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return (
            h00 * self.coef[seg]
            + h01 * self.coef[seg + 1]
            + dt * (h10 * self.coef_dot[seg] + h11 * self.coef_dot[seg + 1])
        )

    def eval_pair(self, coef: np.ndarray, x: float) -> tuple[float, float]:
        """(value, d/dx value) of the interpolant with coefficients coef."""
        phase = (x + self.half_length) * self.xi
        cosp = np.cos(phase)
        sinp = np.sin(phase)
        val = float(np.sum(self.weights * (cosp * coef.real - sinp * coef.imag)) / self.n)
        cx = self.ik * coef
        dval = float(np.sum(self.weights * (cosp * cx.real - sinp * cx.imag)) / self.n)
        return val, dval

    def eval_record(self, idx: int, x: float) -> tuple[float, float]:
        return self.eval_pair(self.coef[idx], x)


def advect(traj: Trajectory, x0: float, params: Parameters) -> CharacteristicPath:
    """Integrate the particle path seeded at x0 through a recorded
    trajectory and evaluate all path diagnostics at the recorded times.

    q and q_x are advanced with RK4 over each recorded interval (the
    stretch solves dq_x/dt = u_x(t, q) q_x).  If the path approaches the
    domain boundary closer than 2*alpha the series is truncated there and
    flagged, since the periodic box no longer approximates the line.
    """
    grid = traj.grid
    L = grid.half_length
    if not (-L <= x0 < L):
        raise ValueError(f"seed {x0} outside the domain [-{L}, {L})")
    safe_lo = -L + 2.0 * params.alpha
    safe_hi = L - 2.0 * params.alpha

    fu = _SpaceTimeField(traj, "u")
    two = traj.records[0].state.rho_tilde is not None
    frho = _SpaceTimeField(traj, "rho") if two else None
    times = fu.times
    lam = params.lam
    alpha2 = params.alpha**2

    # momentum coefficients at record times: m_hat = (1 + alpha^2 xi^2) u_hat
    helm = 1.0 + alpha2 * fu.xi**2
    m0 = float(
        fu.eval_pair(helm * fu.coef[0], x0)[0]
    )
    rho0 = float(frho.eval_record(0, x0)[0]) if two else None

    q = float(x0)
    qx = 1.0
    pts: list[PathPoint] = []
    truncated = False

    n_pre = 0
    for i, rec in enumerate(traj.records):
        u_val, ux_val = fu.eval_record(i, q)
        m_val = fu.eval_pair(helm * fu.coef[i], q)[0]
        rho_val = float(frho.eval_record(i, q)[0]) if two else None
        pts.append(
            PathPoint(
                t=float(times[i]),
                q=q,
                qx=qx,
                u=u_val,
                ux=ux_val,
                m=m_val,
                m0=m0,
                rho=rho_val,
                rho0=rho0,
            )
        )
        if not rec.at_detection:
            n_pre += 1
        if i == len(traj.records) - 1:
            break

        # one RK4 step across the recorded interval
        dt = times[i + 1] - times[i]
        c0 = fu.coef[i]
        cm = fu.coef_at(i, 0.5)
        c1 = fu.coef[i + 1]

        def rhs(coef, qq, qqx):
            uu, uux = fu.eval_pair(coef, qq)
            return uu + lam, uux * qqx

        k1 = rhs(c0, q, qx)
        k2 = rhs(cm, q + 0.5 * dt * k1[0], qx + 0.5 * dt * k1[1])
        k3 = rhs(cm, q + 0.5 * dt * k2[0], qx + 0.5 * dt * k2[1])
        k4 = rhs(c1, q + dt * k3[0], qx + dt * k3[1])
        q = q + (dt / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        qx = qx + (dt / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])

        if not (safe_lo <= q < safe_hi):
            truncated = True
            break

    return _assemble(x0, pts, params, truncated, n_pre)


def _assemble(
    x0: float,
    pts: list[PathPoint],
    params: Parameters,
    truncated: bool,
    n_pre: int,
) -> CharacteristicPath:
    n = len(pts)
    t = np.array([p.t for p in pts])
    q = np.array([p.q for p in pts])
    qx = np.array([p.qx for p in pts])
    u = np.array([p.u for p in pts])
    g = np.array([p.ux for p in pts])
    sa = np.empty(n)
    la = np.empty(n)
    sb = np.empty(n)
    lb = np.empty(n)
    ap = np.empty(n)
    bp = np.empty(n)
    mres = np.empty(n)
    rres = np.empty(n) if pts and pts[0].rho is not None else None
    for i, p in enumerate(pts):
        sa[i], la[i], sb[i], lb[i] = weighted_ab_log(p, params)
        ap[i], bp[i] = plain_ab(p, params)
        mres[i] = momentum_residual(p, params)
        if rres is not None:
            rres[i] = rho_invariant_residual(p)
    with np.errstate(over="ignore"):
        aw = sa * np.exp(la)
        bw = sb * np.exp(lb)
    prod = ap * bp
    h = np.where(prod < 0.0, np.sqrt(np.abs(prod)), np.nan)
    overflow = bool(np.any(np.isinf(aw)) or np.any(np.isinf(bw)))
    n_pre = min(n_pre, n)
    return CharacteristicPath(
        x0=x0,
        t=t,
        q=q,
        qx=qx,
        u=u,
        g=g,
        a_weighted=aw,
        b_weighted=bw,
        sign_a_w=sa,
        log_abs_a_w=la,
        sign_b_w=sb,
        log_abs_b_w=lb,
        a_plain=ap,
        b_plain=bp,
        h_plain=h,
        momentum_res=mres,
        rho_res=rres,
        n_pre_detection=n_pre,
        truncated=truncated,
        weight_overflow=overflow,
    )


def resolved_count(path: CharacteristicPath, qx_floor: float = 0.1) -> int:
    """Number of leading pre-detection records along which grid sampling
    at the path is still meaningful.

    Once the flow map compresses by more than ~1/qx_floor the solution
    develops sub-cell structure around the path (the breaking cusp), and
    interpolated pointwise values there read discretization artifacts
    rather than the continuum fields; checks of pointwise identities are
    restricted to this window.
    """
    n = path.n_pre_detection
    ok = path.qx[:n] >= qx_floor
    if bool(np.all(ok)):
        return n
    return int(np.argmin(ok))


def monotone_violation(
    signs: np.ndarray,
    logs: np.ndarray,
    direction: str,
    rel_tol: float = 0.0,
) -> float:
    """Largest normalized monotonicity violation of a signed log-magnitude
    series; <= tol means monotone within tolerance.

    For finite linear values the measure is (x_i - x_{i+1})/(1 + |x_i|)
    for direction='increasing' (mirrored for 'decreasing'); pairs beyond
    linear range are compared in the log domain, where monotonicity of the
    magnitude is equivalent as long as the sign agrees.
    """
    if direction not in ("increasing", "decreasing"):
        raise ValueError(direction)
    flip = 1.0 if direction == "increasing" else -1.0
    worst = -np.inf
    with np.errstate(over="ignore"):
        linear = signs * np.exp(logs)
    for i in range(len(logs) - 1):
        s0, s1 = flip * signs[i], flip * signs[i + 1]
        x0, x1 = flip * linear[i], flip * linear[i + 1]
        if np.isfinite(x0) and np.isfinite(x1):
            v = (x0 - x1) / (1.0 + abs(x0))
        elif s0 < s1:
            v = -np.inf  # sign stepped up: monotone regardless of magnitude
        elif s0 > s1:
            v = np.inf
        elif s0 > 0:  # both +inf territory: need log increase
            v = 1.0 - np.exp(min(logs[i + 1] - logs[i], 50.0))
        else:  # both large negative: need magnitude decrease
            v = np.exp(min(logs[i + 1] - logs[i], 50.0)) - 1.0
        worst = max(worst, v - rel_tol)
    return float(worst)
