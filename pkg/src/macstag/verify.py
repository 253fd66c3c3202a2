"""Structural verification harness: operator identities, compactness
diagnostics, and manufactured-solution convergence studies.

The property suite checks the discrete identities the scheme's stability
rests on (gradient/divergence duality, diffusion symmetry and its exact
match with the W^{1,2} seminorm, convection skew-symmetry against
divergence-free advecting fields, projection idempotence and Pythagoras).
All checks run on randomized fields with a fixed seed and report the worst
relative residual.

The translate diagnostic evaluates time-translate integrals of the
predicted trajectory exactly (piecewise-constant fields make them finite
sums), in both the L2 norm and the weaker seminorm that measures only the
divergence-free part. Both shrink with the translate; the seminorm column
never exceeds the L2 column.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import (
    PressureField,
    Trajectory,
    VelocityField,
    coupling_norm,
    face_average,
    l2_norm,
    pressure_inner,
    velocity_inner,
    w1q_norm,
)
from .grid import MacGrid
from .mms import ManufacturedProblem, mms_problem
from .operators import Operators
from .projection import Projector
from .scheme import ProjectionScheme

__all__ = [
    "CheckResult",
    "PropertyReport",
    "property_suite",
    "random_pressure",
    "random_velocity",
    "TranslateRow",
    "translate_diagnostic",
    "summed_step_increments",
    "StudyLevel",
    "StudyReport",
    "convergence_study",
    "coupling_study",
]


# ---------------------------------------------------------------------------
# randomized operator identities

def random_pressure(grid: MacGrid, rng) -> PressureField:
    return PressureField(grid, rng.standard_normal(grid.shape))


def random_velocity(grid: MacGrid, rng, interior_only=True) -> VelocityField:
    v = VelocityField(grid, [rng.standard_normal(grid.face_shape(i)) for i in range(grid.dim)])
    if interior_only:
        v.zero_exterior()
    return v


@dataclass
class CheckResult:
    name: str
    worst: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance

    def line(self) -> str:
        verdict = "pass" if self.passed else "FAIL"
        return f"{verdict}  {self.name}: worst residual {self.worst:.3e} (tolerance {self.tolerance:.1e})"


@dataclass
class PropertyReport:
    grid: MacGrid
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        head = f"structural property suite on grid {self.grid.shape}, theta={self.grid.theta:.3g}"
        lines = [head] + ["  " + c.line() for c in self.checks]
        lines.append("overall: " + ("pass" if self.passed else "FAIL"))
        return "\n".join(lines)


def property_suite(grid: MacGrid, *, seed=0, pairs=20, tol=1e-12) -> PropertyReport:
    """Randomized structural checks of the assembled operators on one grid."""
    rng = np.random.default_rng(seed)
    ops = Operators(grid)
    proj = Projector(ops, method="direct")
    report = PropertyReport(grid)

    worst = 0.0
    for _ in range(pairs):
        p = random_pressure(grid, rng)
        v = random_velocity(grid, rng)
        lhs = velocity_inner(ops.grad(p), v) + pressure_inner(p, ops.div(v))
        worst = max(worst, abs(lhs) / (l2_norm(p) * l2_norm(v)))
    report.checks.append(CheckResult("gradient/divergence duality", worst, tol))

    worst = 0.0
    worst_id = 0.0
    for _ in range(pairs):
        u = random_velocity(grid, rng)
        v = random_velocity(grid, rng)
        su = w1q_norm(u, 2.0)
        sv = w1q_norm(v, 2.0)
        sym = velocity_inner(ops.neg_laplacian(u), v) - velocity_inner(u, ops.neg_laplacian(v))
        worst = max(worst, abs(sym) / (su * sv))
        ident = velocity_inner(ops.neg_laplacian(u), u) - su**2
        worst_id = max(worst_id, abs(ident) / su**2)
    report.checks.append(CheckResult("diffusion symmetry", worst, tol))
    report.checks.append(CheckResult("diffusion / W12 seminorm identity", worst_id, tol))

    worst = 0.0
    for _ in range(pairs):
        a = proj.project(random_velocity(grid, rng))
        w = random_velocity(grid, rng)
        b = ops.convection_form(a, w, w)
        worst = max(worst, abs(b) / (l2_norm(a) * l2_norm(w) ** 2))
    report.checks.append(CheckResult("convection skew-symmetry", worst, tol))

    worst_idem = 0.0
    worst_pyth = 0.0
    worst_div = 0.0
    worst_grad = 0.0
    for _ in range(pairs):
        w = random_velocity(grid, rng)
        v, psi, _ = proj.decompose(w)
        gpsi = ops.grad(psi)
        wn = l2_norm(w)
        pyth = wn**2 - l2_norm(v) ** 2 - l2_norm(gpsi) ** 2
        worst_pyth = max(worst_pyth, abs(pyth) / wn**2)
        v2 = proj.project(v)
        worst_idem = max(worst_idem, l2_norm(v2 - v) / wn)
        div_scale = wn / grid.h_min
        worst_div = max(worst_div, float(np.abs(ops.div(v).data).max()) / div_scale)
        q = random_pressure(grid, rng)
        gq = ops.grad(q)
        worst_grad = max(worst_grad, proj.divfree_seminorm(gq) / l2_norm(gq))
    report.checks.append(CheckResult("projection idempotence", worst_idem, tol))
    report.checks.append(CheckResult("decomposition Pythagoras", worst_pyth, tol))
    report.checks.append(CheckResult("projected divergence", worst_div, tol))
    report.checks.append(CheckResult("seminorm kills gradients", worst_grad, tol))

    return report


# ---------------------------------------------------------------------------
# translate compactness diagnostic

@dataclass
class TranslateRow:
    tau: float
    steps: int
    l2_sq: float
    star_sq: float


def translate_diagnostic(traj: Trajectory, taus, projector: Projector | None = None):
    """Exact time-translate integrals of the predicted trajectory.

    Each tau must be a positive multiple of the step size (the trajectory is
    piecewise constant, so only those translates have exact finite-sum
    integrals). Returns one row per tau with the integral of the squared L2
    norm and of the squared divergence-free seminorm of the difference.
    """
    dt = traj.dt
    n_steps = traj.steps
    if projector is None:
        projector = Projector(Operators(traj.grid), method="direct")
    rows = []
    for tau in taus:
        k = tau / dt
        k_int = int(round(k))
        if k_int < 1 or abs(k - k_int) > 1e-9 * max(1.0, abs(k)):
            raise ValueError(f"translate {tau} is not a positive multiple of dt={dt}")
        if k_int >= n_steps:
            raise ValueError(f"translate {tau} exceeds the trajectory span")
        l2_sq = 0.0
        star_sq = 0.0
        for n in range(n_steps - k_int):
            diff = traj.predicted[n + k_int] - traj.predicted[n]
            l2_sq += dt * velocity_inner(diff, diff)
            star_sq += dt * projector.divfree_seminorm(diff) ** 2
        rows.append(TranslateRow(tau=k_int * dt, steps=k_int, l2_sq=l2_sq, star_sq=star_sq))
    return rows


def summed_step_increments(traj: Trajectory) -> float:
    """sum_n dt ||utilde^{n+1} - utilde^n||^2, the exact tau = dt translate integral."""
    total = 0.0
    for n in range(traj.steps - 1):
        diff = traj.predicted[n + 1] - traj.predicted[n]
        total += traj.dt * velocity_inner(diff, diff)
    return total


# ---------------------------------------------------------------------------
# manufactured-solution studies

@dataclass
class StudyLevel:
    shape: tuple
    h_max: float
    dt: float
    theta: float
    err_l2l2: float
    err_final: float
    err_h1: float
    coupling: float
    min_energy_margin: float

    def line(self) -> str:
        return (
            f"cells={'x'.join(str(s) for s in self.shape)} dt={self.dt:.5g} "
            f"err_l2l2={self.err_l2l2:.5e} err_final={self.err_final:.5e} "
            f"err_h1={self.err_h1:.5e} coupling={self.coupling:.5e}"
        )


@dataclass
class StudyReport:
    problem: str
    levels: list = field(default_factory=list)

    @property
    def ratios(self):
        errs = [lv.err_l2l2 for lv in self.levels]
        return [errs[k + 1] / errs[k] for k in range(len(errs) - 1)]

    def passed(self, factor=0.8) -> bool:
        errs = [lv.err_l2l2 for lv in self.levels]
        if len(errs) < 2:
            return True
        return all(e1 < e0 and e1 <= factor * e0 for e0, e1 in zip(errs, errs[1:]))

    def summary(self, factor=0.8) -> str:
        lines = [f"convergence study for {self.problem}"]
        lines += ["  " + lv.line() for lv in self.levels]
        if self.ratios:
            lines.append("  ratios: " + ", ".join(f"{r:.3f}" for r in self.ratios))
        lines.append(
            "verdict: " + ("pass" if self.passed(factor) else "FAIL")
            + f" (strict decrease, factor <= {factor})"
        )
        return "\n".join(lines)


def _run_problem(problem: ManufacturedProblem, grid: MacGrid, steps, t_final, **scheme_kw):
    scheme = ProjectionScheme(grid, **scheme_kw)
    return scheme.run(problem.initial, problem.forcing, t_final, steps), scheme


def _trajectory_errors(traj: Trajectory, problem: ManufacturedProblem, quad_order=3):
    """Errors of the discrete trajectory against face-averaged exact fields.

    The piecewise-constant corrected trajectory carries u^n on (t^n, t^{n+1}],
    so the L2(0,T;L2) error sums dt ||u^n - interp u(t^n)||^2 over n < N; the
    predicted trajectory carries level n+1, measured in the W^{1,2} seminorm.
    """
    grid = traj.grid
    dt = traj.dt
    n_steps = traj.steps
    exact = [
        face_average(grid, problem.velocity_at(n * dt), order=quad_order)
        for n in range(n_steps + 1)
    ]
    for e in exact:
        e.zero_exterior()
    l2l2_sq = sum(
        dt * l2_norm(traj.velocities[n] - exact[n]) ** 2 for n in range(n_steps)
    )
    err_final = l2_norm(traj.velocities[n_steps] - exact[n_steps])
    h1_sq = sum(
        dt * w1q_norm(traj.predicted[n] - exact[n + 1], 2.0) ** 2 for n in range(n_steps)
    )
    return math.sqrt(l2l2_sq), err_final, math.sqrt(h1_sq)


def convergence_study(problem, levels, t_final, *, quad_order=3, **scheme_kw) -> StudyReport:
    """Run a refinement ladder; levels is a list of (grid, steps) pairs."""
    if isinstance(problem, str):
        problem = mms_problem(problem)
    report = StudyReport(problem.name)
    for grid, steps in levels:
        traj, _ = _run_problem(problem, grid, steps, t_final, quad_order=quad_order, **scheme_kw)
        err_l2l2, err_final, err_h1 = _trajectory_errors(traj, problem, quad_order)
        margin = min(
            (d.energy_residual / max(d.energy_scale, 1e-300) for d in traj.diagnostics),
            default=0.0,
        )
        report.levels.append(
            StudyLevel(
                shape=grid.shape,
                h_max=grid.h_max,
                dt=traj.dt,
                theta=grid.theta,
                err_l2l2=err_l2l2,
                err_final=err_final,
                err_h1=err_h1,
                coupling=coupling_norm(traj),
                min_energy_margin=margin,
            )
        )
    return report


def coupling_study(problem, grid: MacGrid, steps_list, t_final, **scheme_kw):
    """Coupling norm ||u_N - utilde_N||_{L2 L2} on one grid for several step counts.

    Returns (steps, coupling) pairs; the scheme's dt-coupling makes successive
    values shrink roughly linearly when the step count doubles.
    """
    if isinstance(problem, str):
        problem = mms_problem(problem)
    rows = []
    for steps in steps_list:
        traj, _ = _run_problem(problem, grid, steps, t_final, **scheme_kw)
        rows.append((int(steps), coupling_norm(traj)))
    return rows
