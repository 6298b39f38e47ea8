"""Numerical experiment reports for the fractional-evolution machinery.

Each check turns one provable statement about the flow into a finite
computation with an explicit pass threshold: operator decompositions are
compared against their defining series, multiplier boundedness is scanned
on log-radial grids, smoothing estimates are tested as two-decade
boundedness of compensated norms, and solution-level structure
(self-similarity, decay rates, symmetry, Lipschitz stability, profile
collapse) is measured on solver trajectories.

Checks are pure: they return a `Report` and write nothing.  Upper-bound
statements ("<= C t^-power") are rendered as boundedness of the compensated
quantity over two decades rather than fitted slopes; slopes are fitted only
where the rate is actually attained (homogeneous-data decay).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mlf import DomainError, MLParams, ml_l, ml_neg_axis, ml_omega, \
    ml_series
from .norms import BallFamily, ExponentSet, NormSpec, exponent_report, \
    morrey_norm, sobolev_morrey_norm, xbeta_norm
from .solver import InitialData, PicardConfig, ProblemSpec, TimeGrid, \
    gaussian_bump, harmonic_homogeneous, homogeneous_radial, linear_part, \
    solve
from .spectral import Field, Grid, MultiplierSpec, apply_G, eval_at_points, \
    gradient, transform_forward

__all__ = [
    "InsufficientOverlap",
    "WindowTooShort",
    "Report",
    "SmoothingSpec",
    "build_run",
    "check_decomposition",
    "mikhlin_curve",
    "check_mikhlin",
    "smoothing_curve",
    "check_smoothing",
    "check_selfsimilarity",
    "check_decay",
    "check_symmetry",
    "check_stability",
    "extract_profile",
]


class InsufficientOverlap(ValueError):
    """Scaling factor pushes every probe outside the trusted region."""


class WindowTooShort(ValueError):
    """Too few usable time nodes between the mollification and box scales."""


@dataclass
class Report:
    """One named check: echoed inputs, measured metrics, verdict."""

    name: str
    inputs: dict
    metrics: dict
    passed: bool
    tolerance: float
    artifacts: list = field(default_factory=list)
    notes: str = ""

    def __post_init__(self):
        for key, val in self.metrics.items():
            if not math.isfinite(float(val)):
                raise ValueError(f"metric {key!r} is not finite: {val}")


@dataclass(frozen=True)
class SmoothingSpec:
    """Exponent tuple of one smoothing estimate for G_{alpha,j}.

    lam = (gamma2-gamma1) + (N-mu)/p1 - (N-mu)/p2 is the smoothing gap; the
    three estimates (j = one / two / alpha_alpha) are admissible iff
    lam < 2, lam + 2/alpha < 2, and 2-2/alpha < lam < 2 respectively.
    """

    alpha: float
    gamma1: float
    gamma2: float
    p1: float
    p2: float
    mu: float
    n_dim: int
    j: str = "one"

    def __post_init__(self):
        if self.gamma1 > self.gamma2 or self.p1 > self.p2:
            raise DomainError("need gamma1 <= gamma2 and p1 <= p2")
        if not 0.0 <= self.mu < self.n_dim:
            raise DomainError(f"mu must lie in [0, {self.n_dim})")
        if self.j not in ("one", "two", "alpha_alpha"):
            raise DomainError(f"unknown multiplier index {self.j!r}")

    @property
    def lam(self) -> float:
        nm = self.n_dim - self.mu
        return (self.gamma2 - self.gamma1) + nm / self.p1 - nm / self.p2

    @property
    def item(self) -> str:
        return {"one": "i", "two": "ii", "alpha_alpha": "iii"}[self.j]

    @property
    def admissible(self) -> bool:
        lam = self.lam
        if self.j == "one":
            return lam < 2.0
        if self.j == "two":
            return lam + 2.0 / self.alpha < 2.0
        return 2.0 - 2.0 / self.alpha < lam < 2.0

    @property
    def data_order(self) -> float:
        """Sobolev order of the data norm (shifted by -2/alpha for item ii)."""
        return self.gamma1 - (2.0 / self.alpha if self.j == "two" else 0.0)

    @property
    def critical_degree(self) -> float:
        """Homogeneity degree whose data norm is flat across dyadic scales.

        |x|^d has r-independent M^{s}_{p1,mu} window norms exactly at
        d = s - (N-mu)/p1; only such data can saturate the estimate over a
        whole time decade (smooth data makes Q(t) ~ t^{w} -> 0 instead).
        """
        return self.data_order - (self.n_dim - self.mu) / self.p1


def saturating_profile(grid: Grid, spec: SmoothingSpec,
                       amplitude: float = 1.0) -> Field:
    """Critical-homogeneity radial data for a smoothing scan on `grid`."""
    return homogeneous_radial(grid, spec.critical_degree, amplitude)


# ---------------------------------------------------------------------------
# operator-level checks


def check_decomposition(alphas, betas, z_grid,
                        tolerance: float = 1e-8) -> Report:
    """Series vs residue+integral split, max relative deviation on a grid.

    Pairs (alpha, beta) outside the split's validity region are skipped and
    listed in the notes.  Near alpha = 2 the poles squeeze the integration
    contour; callers document a looser tolerance there.
    """
    z_grid = np.asarray(z_grid, dtype=float)
    worst = 0.0
    worst_at = None
    skipped = []
    for a in alphas:
        for b in betas:
            params = MLParams(a, b)
            if not params.in_decomposition_range:
                skipped.append((a, b))
                continue
            for z in z_grid:
                s_val = ml_series(params, -float(z)).value
                w = ml_omega(params, z) + ml_l(params, z)
                dev = abs(s_val - w) / max(abs(s_val), 1e-30)
                if dev > worst:
                    worst, worst_at = dev, (a, b, float(z))
    notes = f"skipped pairs outside split domain: {skipped}" if skipped \
        else ""
    return Report(
        name="decomposition",
        inputs={"alphas": list(alphas), "betas": list(betas),
                "z_min": float(z_grid.min()), "z_max": float(z_grid.max()),
                "n_z": int(z_grid.size)},
        metrics={"max_rel_dev": worst},
        passed=worst <= tolerance,
        tolerance=tolerance,
        notes=notes or f"worst at (alpha, beta, z) = {worst_at}")


def _log_derivatives(values: np.ndarray, log_r: np.ndarray):
    """(m', m'') from samples on a log-spaced radial grid."""
    d1 = np.gradient(values, log_r)
    d2 = np.gradient(d1, log_r)
    r = np.exp(log_r)
    m1 = d1 / r
    m2 = (d2 - d1) / r ** 2
    return m1, m2


def mikhlin_curve(alpha: float, beta_ml: float, k: float, delta: float,
                  max_order: int, xi_grid=None, a_coef: float = None):
    """Scaled-derivative curves S_|g|(xi) of m(xi) = |xi|^delta E(-A|xi|^k).

    Returns (xi, {order: S_order}) with S = |xi|^{|g|} |d^g m|; derivatives
    are central differences on the log grid, and the order-2 entry includes
    the worst 2-d mixed derivative of the radial profile,
    |d1 d2 m| <= |m'' - m'/r| / 2 at |xi_1 xi_2| = r^2/2.
    """
    if max_order > 2 or max_order < 0:
        raise DomainError("max_order must be 0, 1 or 2")
    if xi_grid is None:
        xi_grid = np.geomspace(1e-2, 1e3, 241)
    r = np.asarray(xi_grid, dtype=float)
    log_r = np.log(r)
    a_coef = 4.0 * np.pi ** 2 if a_coef is None else a_coef

    m = r ** delta * ml_neg_axis(alpha, beta_ml, a_coef * r ** k)
    m1, m2 = _log_derivatives(m, log_r)
    s_of = {0: np.abs(m), 1: r * np.abs(m1)}
    if max_order >= 2:
        pure = r ** 2 * np.abs(m2)
        mixed = r ** 2 * np.abs(m2 - m1 / r) / 2.0
        s_of[2] = np.maximum(pure, mixed)
    return r, s_of


def check_mikhlin(alpha: float, beta_ml: float, k: float, delta: float,
                  max_order: int, xi_grid=None, a_coef: float = None,
                  tolerance: float = 0.1) -> Report:
    """Boundedness verdict over the scaled-derivative scan (mikhlin_curve).

    For each order |g| <= max_order reports the sup of S over the grid and
    the log-log slope of S on the largest decade; bounded symbols show
    slope <= tolerance.

    delta at or above k is allowed through on purpose: it is the negative
    control probing whether the scan notices an unbounded symbol.
    """
    r, s_of = mikhlin_curve(alpha, beta_ml, k, delta, max_order,
                            xi_grid, a_coef)
    log_r = np.log(r)

    lo = delta >= k * (beta_ml - 1.0) / alpha if beta_ml != 1.0 \
        else delta >= 0.0
    admissible = bool(lo and delta < k)

    metrics = {}
    worst_slope = -np.inf
    top = log_r >= log_r[-1] - np.log(10.0)
    for order in range(max_order + 1):
        s = np.maximum(s_of[order], 1e-300)
        sup = float(s.max())
        slope = float(np.polyfit(log_r[top], np.log(s[top]), 1)[0])
        metrics[f"sup_order{order}"] = sup
        metrics[f"slope_order{order}"] = slope
        worst_slope = max(worst_slope, slope)
    passed = all(math.isfinite(metrics[f"sup_order{o}"])
                 for o in range(max_order + 1)) and worst_slope <= tolerance
    return Report(
        name="mikhlin",
        inputs={"alpha": alpha, "beta_ml": beta_ml, "k": k, "delta": delta,
                "max_order": max_order, "admissible": admissible},
        metrics=metrics,
        passed=passed,
        tolerance=tolerance)


def smoothing_curve(spec: SmoothingSpec, f: Field, t_grid) -> np.ndarray:
    """Compensated smoothing quotients Q(t) for the tuple `spec` on data f.

    Q(t) = ||G_{alpha,j}(t) f||_{M^{gamma2}_{p2,mu}} * t^w / ||f||_{data},
    with w = alpha*lam/2 for items i and ii and w = 1 - alpha + alpha*lam/2
    for item iii; the data norm carries order gamma1 (gamma1 - 2/alpha for
    item ii).

    Item ii is measured on the mean-zero part of f: its data norm has
    negative order, and on the torus the constant mode (absent from the
    whole-space statement) would never decay.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= 0.0):
        raise DomainError("smoothing scan needs strictly positive times")
    grid = f.grid
    if grid.dim != spec.n_dim:
        raise DomainError("field dimension disagrees with SmoothingSpec")
    alpha, lam = spec.alpha, spec.lam

    if spec.j == "two":
        f = Field(grid, f.values - f.values.mean())

    balls = BallFamily(grid)
    data_norm = sobolev_morrey_norm(
        f, NormSpec(spec.p1, spec.mu, s=spec.data_order), balls)
    if data_norm == 0.0:
        raise DomainError("data norm vanishes; nothing to compare")

    w_exp = alpha * lam / 2.0 if spec.j != "alpha_alpha" \
        else 1.0 - alpha + alpha * lam / 2.0
    out_spec = NormSpec(spec.p2, spec.mu, s=spec.gamma2)
    q_vals = []
    for t in t_grid:
        g_f = apply_G(MultiplierSpec(alpha, spec.j, float(t)), f)
        q_vals.append(
            sobolev_morrey_norm(g_f, out_spec, balls) * t ** w_exp
            / data_norm)
    return np.asarray(q_vals)


def check_smoothing(spec: SmoothingSpec, f: Field, t_grid,
                    tolerance: float = 10.0) -> Report:
    """Boundedness of the compensated smoothing quotient over the grid.

    Pass iff max Q / min Q <= tolerance across t_grid (see smoothing_curve
    for Q): the estimate is an upper bound, so only boundedness is
    testable, not a rate.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    q_vals = smoothing_curve(spec, f, t_grid)
    note = "item ii measured on the mean-zero part of f" \
        if spec.j == "two" else ""
    q_max, q_min = float(q_vals.max()), float(q_vals.min())
    ratio = q_max / q_min if q_min > 0.0 else np.inf
    if not math.isfinite(ratio):
        ratio = 1e300  # keep the metric finite; the check fails loudly
    return Report(
        name="smoothing",
        inputs={"item": spec.item, "alpha": spec.alpha,
                "gamma1": spec.gamma1, "gamma2": spec.gamma2,
                "p1": spec.p1, "p2": spec.p2, "mu": spec.mu,
                "lambda": spec.lam, "admissible": spec.admissible,
                "t_min": float(t_grid.min()), "t_max": float(t_grid.max())},
        metrics={"q_max": q_max, "q_min": q_min, "ratio": ratio},
        passed=ratio <= tolerance,
        tolerance=tolerance,
        notes=note)


# ---------------------------------------------------------------------------
# trajectory-level checks


_RUN_DEFAULTS = {
    "dim": 2, "points": 64, "length": 1.0,
    "alpha": 1.5, "rho": 3.0, "q": None, "kappa1": 0.0, "kappa2": 0.0,
    "generator": "homogeneous_radial",
    "amp_phi": 0.05, "amp_psi": 0.0, "eps_m": None,
    "width": 0.1, "k1": 2,
    "t_end": 0.05 ** (4.0 / 3.0), "n_steps": 24, "grid_kind": "uniform",
    "max_sweeps": 25, "sweep_tol": 1e-10, "seed": 0,
    "p": 1.5, "r": 3.0,  # Morrey exponent pair feeding exponent_report
}


def build_run(config: dict):
    """Materialize (data, spec, timegrid, picard, grid) from a config dict.

    Missing keys take desk-scale defaults; the homogeneous generator uses
    the scaling-critical degrees -2/(rho-1) for phi and -2/(rho-1)-2/alpha
    for psi.  Unknown-key rejection is the CLI's job, not ours.
    """
    c = dict(_RUN_DEFAULTS)
    c.update(config)
    grid = Grid(c["dim"], c["points"], c["length"])
    alpha, rho = c["alpha"], c["rho"]
    gen = c["generator"]
    if gen == "homogeneous_radial":
        deg = -2.0 / (rho - 1.0)
        phi = homogeneous_radial(grid, deg, c["amp_phi"], c["eps_m"])
        psi = homogeneous_radial(grid, deg - 2.0 / alpha, c["amp_psi"],
                                 c["eps_m"]) if c["amp_psi"] != 0.0 \
            else Field(grid, np.zeros(grid.shape))
    elif gen == "harmonic_homogeneous":
        deg = -2.0 / (rho - 1.0)
        phi = harmonic_homogeneous(grid, deg, c["k1"], c["amp_phi"],
                                   c["eps_m"])
        psi = Field(grid, np.zeros(grid.shape))
    elif gen == "gaussian":
        phi = gaussian_bump(grid, c["amp_phi"], c["width"])
        psi = gaussian_bump(grid, c["amp_psi"], c["width"]) \
            if c["amp_psi"] != 0.0 else Field(grid, np.zeros(grid.shape))
    elif gen == "custom":
        phi = Field(grid, np.asarray(c["phi_values"], dtype=float))
        psi = Field(grid, np.asarray(c["psi_values"], dtype=float)) \
            if "psi_values" in c else Field(grid, np.zeros(grid.shape))
    else:
        raise DomainError(f"unknown generator {gen!r}")
    data = InitialData(phi, psi, generator=gen,
                       epsilon_m=grid.h if c["eps_m"] is None else c["eps_m"])
    spec = ProblemSpec(alpha=alpha, rho=rho, kappa1=c["kappa1"],
                       kappa2=c["kappa2"], q=c["q"])
    timegrid = TimeGrid(0.0, c["t_end"], c["n_steps"], kind=c["grid_kind"])
    picard = PicardConfig(max_sweeps=c["max_sweeps"],
                          sweep_tol=c["sweep_tol"])
    return data, spec, timegrid, picard, grid


def _interp_at_points(traj, t: float, spectra: dict, pts) -> np.ndarray:
    """u(t, pts) by linear interpolation between trajectory snapshots."""
    times = traj.times
    i = max(int(np.searchsorted(times, t)), 1)
    if i >= len(times):
        raise InsufficientOverlap(f"time {t} beyond the horizon")
    t0, t1 = times[i - 1], times[i]
    if i not in spectra:
        spectra[i] = transform_forward(traj.fields[i])
    if i - 1 not in spectra:
        spectra[i - 1] = transform_forward(traj.fields[i - 1])
    v0 = eval_at_points(spectra[i - 1], pts)
    v1 = eval_at_points(spectra[i], pts)
    w = 0.0 if t1 == t0 else (t - t0) / (t1 - t0)
    return (1.0 - w) * v0 + w * v1


def check_selfsimilarity(config: dict, gammas,
                         tolerance: float = 0.05) -> Report:
    """Scaling-invariance residual of a homogeneous-data run.

    Solves once, then for each gamma compares u(t, x) against
    gamma^{2/(rho-1)} u(gamma^{2/alpha} t, gamma x) on an annulus of probe
    rays and middle-third times, normalized per time by sup |u| over the
    probe set.  Fields at scaled arguments come from trigonometric
    interpolation in space and linear interpolation in time.
    """
    c = dict(_RUN_DEFAULTS)
    c.update(config)
    if c["generator"] not in ("homogeneous_radial", "harmonic_homogeneous"):
        raise DomainError("self-similarity needs homogeneous data")
    data, spec, timegrid, picard, grid = build_run(c)
    traj = solve(data, spec, timegrid, picard)

    alpha, rho = spec.alpha, spec.rho
    t_end = timegrid.t_end
    h, length = grid.h, grid.length
    r_lo, r_hi = 8.0 * h, 0.4 * (length / 2.0)
    n_angle = 16
    theta = np.linspace(0.0, 2.0 * np.pi, n_angle, endpoint=False)
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)

    times_all = traj.times
    mid = (times_all >= t_end / 3.0) & (times_all <= 2.0 * t_end / 3.0)
    spectra = {}
    metrics = {}
    worst = 0.0
    for gamma in gammas:
        t_ok = times_all[mid & (times_all * gamma ** (2.0 / alpha)
                                <= t_end + 1e-12)]
        if t_ok.size < 2:
            raise InsufficientOverlap(
                f"gamma={gamma}: scaled times leave the horizon")
        t_probe = t_ok[np.linspace(0, t_ok.size - 1, min(4, t_ok.size),
                                   dtype=int)]
        radii = np.geomspace(r_lo, r_hi, 8)
        radii = radii[(gamma * radii >= 6.0 * h)
                      & (gamma * radii <= 0.45 * length)]
        if radii.size == 0:
            raise InsufficientOverlap(
                f"gamma={gamma}: scaled radii leave the annulus")
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 2)

        r_gamma = 0.0
        for t in t_probe:
            idx = int(np.argmin(np.abs(times_all - t)))
            if idx not in spectra:
                spectra[idx] = transform_forward(traj.fields[idx])
            base = eval_at_points(spectra[idx], pts)
            scaled = _interp_at_points(
                traj, float(gamma ** (2.0 / alpha) * t), spectra,
                gamma * pts)
            scale = float(np.max(np.abs(base)))
            if scale == 0.0:
                raise DomainError("probe annulus reads identically zero")
            diff = np.abs(base - gamma ** (2.0 / (rho - 1.0)) * scaled)
            r_gamma = max(r_gamma, float(diff.max()) / scale)
        metrics[f"R_gamma_{gamma:g}"] = r_gamma
        worst = max(worst, r_gamma)
    metrics["R_max"] = worst
    return Report(
        name="selfsimilarity",
        inputs={"alpha": alpha, "rho": rho, "gammas": list(map(float,
                                                               gammas)),
                "points": grid.points_per_axis, "t_end": t_end,
                "kappa1": spec.kappa1, "kappa2": spec.kappa2},
        metrics=metrics,
        passed=worst <= tolerance,
        tolerance=tolerance)


def _gradient_magnitude(f: Field) -> Field:
    mag2 = np.zeros(f.grid.shape)
    for comp in gradient(f):
        mag2 += comp.values ** 2
    return Field(f.grid, np.sqrt(mag2))


# Fit-window bounds for check_decay in units of the diffusive length
# l(t) = t^{alpha/2}.  Measured on linear control runs (the compensated
# amplitude ||u(t)|| * l^{beta*2/alpha} plotted against l): the mollified
# core depresses the value norm until l ~ 13h and the gradient peak until
# l ~ 22h, and past l ~ 0.1L the box-scale background starts competing
# inside the norm's sup.  Between those the amplitude is flat to ~2%
# apart from the log-periodic wobble of the dyadic argmax radius, which a
# multi-period fit averages out.
_DECAY_RES_FLOOR_U = 13.0
_DECAY_RES_FLOOR_GRAD = 22.0
_DECAY_BOX_CAP = 0.10


def check_decay(config: dict, tolerance: float = 0.1) -> Report:
    """Fitted decay rates of ||u(t)|| and ||grad u(t)|| in M_{r,mu}.

    Homogeneous data attain the rates -beta and -(beta + alpha/2), with
    beta from the exponent arithmetic.  Each norm is fitted on its own
    window of diffusive lengths (see the module constants above) where
    neither the mollification scale nor the box contaminates the power
    law.  Fields are measured as-is: their box average is a separate,
    smaller competitor inside the norm's sup there, whereas subtracting
    it would bite into the core reading (the whole-space profile keeps
    its tail's mean).  Pass iff both fitted slopes sit within `tolerance`
    (relative) of their targets.  Non-homogeneous generators skip the
    fit: the rate statement simply does not apply, which the report
    records as a note.
    """
    c = dict(_RUN_DEFAULTS)
    c.update(config)
    if c["generator"] != "homogeneous_radial":
        return Report(
            name="decay",
            inputs={"generator": c["generator"]},
            metrics={},
            passed=True,
            tolerance=tolerance,
            notes="skipped: decay rates presume homogeneous data")
    p, r = c["p"], c["r"]
    data, spec, timegrid, picard, grid = build_run(c)
    exps = exponent_report(spec.alpha, spec.rho, p, r, grid.dim)
    beta = exps.beta_decay
    traj = solve(data, spec, timegrid, picard)

    alpha = spec.alpha
    times = traj.times
    balls = BallFamily(grid)
    nspec = NormSpec(exps.r, exps.mu)
    t_cap = (_DECAY_BOX_CAP * grid.length) ** (2.0 / alpha)

    def fit(res_floor, field_of):
        t_lo = (res_floor * grid.h) ** (2.0 / alpha)
        sel = np.nonzero((times >= t_lo) & (times <= t_cap))[0]
        if sel.size < 4:
            raise WindowTooShort(
                f"only {sel.size} nodes inside [{t_lo:.3g}, {t_cap:.3g}]; "
                "refine the time grid or enlarge the horizon")
        log_n = np.log([morrey_norm(field_of(i), nspec, balls) for i in sel])
        slope = float(np.polyfit(np.log(times[sel]), log_n, 1)[0])
        return slope, sel

    slope_u, sel_u = fit(_DECAY_RES_FLOOR_U, lambda i: traj.fields[i])
    slope_g, sel_g = fit(_DECAY_RES_FLOOR_GRAD,
                         lambda i: _gradient_magnitude(traj.fields[i]))
    tgt_u, tgt_g = -beta, -(beta + alpha / 2.0)
    dev_u = abs(slope_u - tgt_u) / abs(tgt_u)
    dev_g = abs(slope_g - tgt_g) / abs(tgt_g)
    return Report(
        name="decay",
        inputs={"alpha": alpha, "rho": spec.rho, "p": p, "r": r,
                "mu": exps.mu, "beta": beta,
                "n_window_u": int(sel_u.size), "n_window_grad": int(sel_g.size),
                "t_window_u": [float(times[sel_u[0]]), float(times[sel_u[-1]])],
                "t_window_grad": [float(times[sel_g[0]]),
                                  float(times[sel_g[-1]])],
                "kappa1": spec.kappa1, "kappa2": spec.kappa2},
        metrics={"slope_u": slope_u, "target_u": tgt_u, "rel_dev_u": dev_u,
                 "slope_grad": slope_g, "target_grad": tgt_g,
                 "rel_dev_grad": dev_g},
        passed=dev_u <= tolerance and dev_g <= tolerance,
        tolerance=tolerance)


def _lattice_map(grid: Grid, mat: np.ndarray):
    """Index gather realizing (T u)(x) = u(T x) exactly on the node lattice.

    T must be orthogonal with integer entries (signed permutation), so each
    output coordinate is +/- one input coordinate and nodes map to nodes:
    -x_i lands on index (M - i) mod M.
    """
    m_count = grid.points_per_axis
    mat = np.asarray(mat, dtype=int)
    if mat.shape != (grid.dim, grid.dim) or \
            np.abs(mat @ mat.T - np.eye(grid.dim, dtype=int)).max() != 0 or \
            not set(np.abs(mat).ravel()) <= {0, 1}:
        raise DomainError(f"{mat.tolist()} is not a signed permutation")
    base = np.arange(m_count)
    neg = (m_count - base) % m_count
    coords = np.meshgrid(*([base] * grid.dim), indexing="ij")
    gather = []
    for row in mat:
        axis = int(np.argmax(np.abs(row)))
        gather.append(coords[axis] if row[axis] > 0 else neg[coords[axis]])
    return tuple(gather)


def check_symmetry(config: dict, group, parity: int = 1,
                   tolerance: float = 1e-10) -> Report:
    """Invariance of the trajectory under exact lattice symmetries.

    group: orthogonal integer matrices (rotations by quarter turns, axis
    reflections).  Measures max_n max_T ||u(t_n, Tx) - parity*u(t_n, x)||_inf
    / ||u(t_n)||_inf; parity=-1 probes antisymmetry (which the gradient
    nonlinearity is expected to break -- |grad u|^q is even).

    The initial data are first projected onto the requested parity class
    (alternating averages (v + parity * v(T.))/2 over the group): the
    theorem assumes symmetric data, and the continuum generator prototypes
    are only approximately so on the seam rows x_i = +-L/2, which the
    torus identifies.
    """
    data, spec, timegrid, picard, grid = build_run(config)
    maps_pre = [_lattice_map(grid, mat) for mat in group]

    def project(values):
        v = values.copy()
        for _ in range(16):
            change = 0.0
            for gather in maps_pre:
                w = 0.5 * (v + parity * v[gather])
                change = max(change, float(np.max(np.abs(w - v))))
                v = w
            if change < 1e-15:
                break
        return v

    data = InitialData(Field(grid, project(data.phi.values)),
                       Field(grid, project(data.psi.values)),
                       generator=data.generator,
                       epsilon_m=data.epsilon_m)
    traj = solve(data, spec, timegrid, picard)
    maps = maps_pre
    worst = 0.0
    for f in traj.fields[1:]:
        sup = float(np.max(np.abs(f.values)))
        if sup == 0.0:
            continue
        for gather in maps:
            res = float(np.max(np.abs(
                f.values[gather] - parity * f.values))) / sup
            worst = max(worst, res)
    return Report(
        name="symmetry",
        inputs={"group_size": len(group), "parity": parity,
                "kappa1": spec.kappa1, "kappa2": spec.kappa2,
                "generator": data.generator},
        metrics={"max_residual": worst},
        passed=worst <= tolerance,
        tolerance=tolerance)


class _TrajView:
    """Positive-time slice of a trajectory (X_beta weights need t > 0)."""

    def __init__(self, times, fields):
        self.times = times
        self.fields = fields


def _xbeta_of_linear(data_field: Field, which: str, alpha: float,
                     exps: ExponentSet, times, balls) -> float:
    grid = data_field.grid
    zero = Field(grid, np.zeros(grid.shape))
    phi, psi = (data_field, zero) if which == "phi" else (zero, data_field)
    datum = InitialData(phi, psi, generator="custom")
    fields = [linear_part(datum, alpha, float(t)) for t in times]
    return xbeta_norm(_TrajView(times, fields), exps, balls)


def check_stability(config: dict, scales=(1e-2, 1e-3, 1e-4),
                    tolerance: float = 10.0) -> Report:
    """Discrete Lipschitz quotient of the data-to-solution map.

    For each perturbation scale the same seeded low-mode direction is added
    to phi and psi; the quotient compares the X_beta norm of the solution
    difference with the X_beta norms of the linear evolutions of the data
    increments (the natural data norm for this flow).  Pass iff every
    quotient is <= tolerance.  scale=0 is the exact-match guard.
    """
    c = dict(_RUN_DEFAULTS)
    c.update(config)
    p, r = c["p"], c["r"]
    data, spec, timegrid, picard, grid = build_run(c)
    exps = exponent_report(spec.alpha, spec.rho, p, r, grid.dim)
    balls = BallFamily(grid)
    base = solve(data, spec, timegrid, picard)
    times = base.times[1:]

    rng = np.random.default_rng(c["seed"])
    m_count = grid.points_per_axis
    coeffs = np.zeros(grid.shape, dtype=complex)
    ms = np.rint(np.fft.fftfreq(m_count) * m_count)
    low = np.abs(ms) <= 3
    pick = np.ix_(*([np.nonzero(low)[0]] * grid.dim))
    coeffs[pick] = rng.standard_normal(coeffs[pick].shape) \
        + 1j * rng.standard_normal(coeffs[pick].shape)
    direction = np.fft.ifftn(coeffs).real
    direction /= np.max(np.abs(direction))

    metrics = {}
    all_ok = True
    for scale in scales:
        if scale == 0.0:
            metrics["quotient_scale_0"] = 0.0
            continue
        d_phi = Field(grid, scale * c["amp_phi"] * direction)
        d_psi = Field(grid, 0.5 * scale * c["amp_phi"] * direction)
        pert = InitialData(Field(grid, data.phi.values + d_phi.values),
                           Field(grid, data.psi.values + d_psi.values),
                           generator="custom")
        other = solve(pert, spec, timegrid, picard)
        diff_fields = [Field(grid, a.values - b.values)
                       for a, b in zip(other.fields[1:], base.fields[1:])]
        num = xbeta_norm(_TrajView(times, diff_fields), exps, balls)
        den = _xbeta_of_linear(d_phi, "phi", spec.alpha, exps, times, balls) \
            + _xbeta_of_linear(d_psi, "psi", spec.alpha, exps, times, balls)
        quot = num / den
        metrics[f"quotient_scale_{scale:g}"] = quot
        all_ok = all_ok and quot <= tolerance
    return Report(
        name="stability",
        inputs={"alpha": spec.alpha, "rho": spec.rho, "p": p, "r": r,
                "scales": list(map(float, scales)), "seed": c["seed"]},
        metrics=metrics,
        passed=all_ok,
        tolerance=tolerance)


def extract_profile(traj, alpha: float, rho: float, n_times: int = 4,
                    n_eta: int = 48):
    """Rescaled radial profiles and their collapse residual.

    For each sampled time t the angular average of t^{alpha/(rho-1)} u(t, x)
    is tabulated against eta = |x| / t^{alpha/2}; curves from different
    times are interpolated onto the common eta window and the residual is
    the max pairwise sup-difference relative to the profile scale.  A
    self-similar solution collapses (small residual); generic data do not.

    Returns (eta_grid, {t: profile rows}, residual).
    """
    grid = traj.fields[0].grid
    if grid.dim != 2:
        raise DomainError("profile extraction is a 2-d diagnostic")
    times = np.asarray(traj.times, dtype=float)
    pos = np.nonzero(times > 0.0)[0]
    if pos.size == 0:
        raise DomainError("no positive-time snapshots")
    take = pos[np.linspace(pos.size // 2, pos.size - 1,
                           min(n_times, pos.size), dtype=int)]
    take = np.unique(take)

    h, length = grid.h, grid.length
    r_lo, r_hi = 8.0 * h, 0.4 * (length / 2.0)
    theta = np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False)
    dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)

    eta_lo = max(r_lo / t ** (alpha / 2.0) for t in times[take])
    eta_hi = min(r_hi / t ** (alpha / 2.0) for t in times[take])
    if not eta_lo < eta_hi:
        raise InsufficientOverlap(
            "sampled times share no common eta window")
    etas = np.geomspace(eta_lo, eta_hi, n_eta)

    curves = {}
    for idx in take:
        t = float(times[idx])
        radii = etas * t ** (alpha / 2.0)
        pts = (radii[:, None, None] * dirs[None, :, :]).reshape(-1, 2)
        vals = eval_at_points(transform_forward(traj.fields[idx]), pts)
        prof = vals.reshape(len(radii), -1).mean(axis=1)
        curves[t] = t ** (alpha / (rho - 1.0)) * prof

    keys = sorted(curves)
    scale = max(float(np.max(np.abs(curves[t]))) for t in keys)
    residual = 0.0
    for i, ta in enumerate(keys):
        for tb in keys[i + 1:]:
            residual = max(residual, float(
                np.max(np.abs(curves[ta] - curves[tb]))) / scale)
    return etas, curves, residual
