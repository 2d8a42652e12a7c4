"""Acceptance checks: each criterion compares solver output with an oracle.

``verify_scenario`` checks a single scenario (the ``verify`` CLI command);
``run_acceptance`` runs the numbered criteria with default scenarios.
"""

import csv
import itertools
import os
from dataclasses import dataclass, field, replace
from typing import List

import numpy as np
from scipy.interpolate import CubicSpline

from . import geometry as geo
from .materials import (Guccione2D, Guccione3D, LinearElastic, MooneyRivlin, condense_E33,
                        elastic_constants, material_tangent, pk2_stress, strain_energy)
from .oracles import (cylinder_curve, oracle_biaxial_point, oracle_cylinder_inflation,
                      oracle_elastica)
from .scenarios import LinearElastic_EI, MaterialSpec, build_experiment, run_case
from .tensor import (push_forward_stress, push_forward_tangent, tangent_to_full, voigt_to_sym,
                     rotation_matrix)

DEFAULT_SEED = 20240611


def seed():
    return int(os.environ.get("CBSHELL_SEED", DEFAULT_SEED))


@dataclass(frozen=True)
class ToleranceSpec:
    """Tolerance of one named check: ``|err| <= max(rel * scale, abs_floor)``."""

    name: str
    rel: float
    abs_floor: float = 0.0
    samples: int = 1

    def __post_init__(self):
        if not (self.rel > 0 and self.abs_floor >= 0 and self.samples >= 1):
            raise ValueError("tolerances must be positive and samples >= 1")

    def bound(self, scale=1.0):
        return max(self.rel * abs(scale), self.abs_floor)


TOLERANCES = {
    1: ToleranceSpec("fiber frame tracking (min dot product)", 0.9, samples=10),
    2: ToleranceSpec("elastica tip error / L", 0.05, samples=8),
    3: ToleranceSpec("Experiment 2 cross-technique displacement", 0.05, abs_floor=1e-4, samples=3),
    4: ToleranceSpec("biaxial tension vs oracle", 0.02, abs_floor=1e-9),
    5: ToleranceSpec("cylinder inner radius and axial stretch", 0.03),
    6: ToleranceSpec("constitutive finite differences", 1e-5, samples=100),
    7: ToleranceSpec("technique distinctness", 0.10),
}


@dataclass
class Check:
    criterion: int
    name: str
    passed: bool
    measured: float
    limit: float
    detail: str = ""

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.criterion}: {self.name}: measured {self.measured:.4g} (limit {self.limit:.4g}) {self.detail}".rstrip()


@dataclass
class Report:
    checks: List[Check] = field(default_factory=list)

    def add(self, criterion, name, measured, limit, passed=None, detail=""):
        measured = float(measured)
        if passed is None:
            passed = bool(np.isfinite(measured) and measured <= limit)
        self.checks.append(Check(criterion, name, bool(passed), measured, float(limit), detail))

    def extend(self, other):
        self.checks.extend(other.checks)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def criterion_passed(self, k):
        return all(c.passed for c in self.checks if c.criterion == k)

    def text(self):
        return "\n".join(c.line() for c in self.checks)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["criterion", "check", "passed", "measured", "limit", "detail"])
            for c in self.checks:
                w.writerow([c.criterion, c.name, int(c.passed), repr(c.measured), repr(c.limit), c.detail])


# ---------------------------------------------------------------------------
# criterion 1: fiber frame

def check_fiber_frame(step_deg=40.0, axis=(0.0, 1.0, 0.0)):
    tol = TOLERANCES[1]
    rep = Report()
    frame0 = np.eye(3)
    prev = frame0.copy()
    n = int(round(360.0 / step_deg))
    worst, worst_fixed = 1.0, 1.0
    for k in range(1, n + 1):
        Rk = rotation_matrix(np.radians(k * step_deg) * np.asarray(axis))
        target = Rk @ frame0
        prev = geo.update_fiber_frames(target[:, 2], prev)
        worst = min(worst, float(np.min(np.sum(prev[:, :2] * target[:, :2], axis=0))))
        fixed = geo.fixed_axis_fiber_frame(target[:, 2]).matrix
        worst_fixed = min(worst_fixed, float(np.min(np.sum(fixed[:, :2] * target[:, :2], axis=0))))
    rep.add(1, f"updated frame over 360 deg in {step_deg:g} deg steps, min dot", worst, tol.rel,
            passed=worst > tol.rel, detail="(must exceed the limit)")
    rep.add(1, "fixed-axis variant flips (negative control), min dot", worst_fixed, 0.0,
            passed=worst_fixed < 0.0, detail="(must be negative)")
    return rep


# ---------------------------------------------------------------------------
# criterion 2: elastica

def check_elastica(sc=None):
    sc = sc or build_experiment(1)
    tol = TOLERANCES[2]
    g = sc.geometry
    L = g.length_m
    EI = sc.material.build().E * LinearElastic_EI(g)
    res = run_case(sc, raise_on_failure=False)
    rep = Report()
    if "failure" in res.events:
        rep.add(2, "elastica run", np.inf, 0.0, passed=False, detail=res.events["failure"])
        return rep
    c = res.columns
    M, ax, tr = c["moment_Nm"], c["tip_axial_m"], c["tip_transverse_m"]
    for deg in range(45, 361, 45):
        target = 2 * np.pi * EI / L * deg / 360.0
        i = int(np.argmin(np.abs(M - target)))
        a, b = oracle_elastica(M[i], EI, L)
        err = max(abs(ax[i] - a), abs(tr[i] - b)) / L
        rep.add(2, f"tip error at {deg} deg", err, tol.rel,
                detail=f"(axial {ax[i]:.4f} vs {a:.4f}, transverse {tr[i]:.4f} vs {b:.4f} m)")
    # closure: the tip returns to the root after a full turn
    gap = np.hypot(L + ax[-1], tr[-1]) / L
    rep.add(2, "full-circle closure |tip - root| / L", gap, tol.rel)
    rep.add(2, "runtime s", res.wall_time_s, 120.0)
    return rep


# ---------------------------------------------------------------------------
# criterion 3: plate with hole

def _last(columns, key):
    v = columns.get(key)
    return float(v[-1]) if v is not None and len(v) else np.nan


def check_plate_hole(sc=None):
    sc = sc or build_experiment(2)
    tol = TOLERANCES[3]
    rep = Report()
    runs = {t: run_case(sc, technique=t, raise_on_failure=False) for t in (1, 2, 3)}
    peak = max(lc.schedule().peak for lc in sc.load_cases)
    for t, r in runs.items():
        if "failure" in r.events:
            rep.add(3, f"Technique {t} reaches max load", _last(r.columns, "pressure_Pa"), peak,
                    passed=False, detail=r.events["failure"])
    for a, b in itertools.combinations((1, 2, 3), 2):
        worst = 0.0
        for key in ("uA_x_m", "uB_y_m", "uC_x_m"):
            ua, ub = (_last(runs[t].columns, key) for t in (a, b))
            if "failure" in runs[a].events or "failure" in runs[b].events:
                ua = ub = np.nan
            err = abs(ua - ub) / tol.bound(max(abs(ua), abs(ub)))
            worst = max(worst, err) if np.isfinite(err) else np.inf
        rep.add(3, f"Techniques {a} vs {b} at A, B, C (error / allowed)", worst, 1.0)
    ref = runs[sc.technique]
    rep.add(3, f"max Green-Lagrange strain (Technique {sc.technique})",
            _last(ref.columns, "max_green_lagrange"), 4.0,
            passed=_last(ref.columns, "max_green_lagrange") >= 4.0, detail="(must reach 4.0)")
    for t, r in runs.items():
        dv = np.max(np.abs(r.columns["volume_change_pct"])) if len(r.columns.get("volume_change_pct", ())) else np.nan
        rep.add(3, f"|volume change| % (Technique {t})", dv, 1.0)
    rep.add(3, "runtime s", sum(r.wall_time_s for r in runs.values()), 300.0)
    return rep


# ---------------------------------------------------------------------------
# criterion 4: biaxial square

def _biaxial_fe(sc):
    tol = TOLERANCES[4]
    res = run_case(sc)
    c = res.columns
    model = sc.material.build()
    h0 = sc.geometry.thickness_m
    T1o, T2o = oracle_biaxial_point(model, c["stretch_1"], c["stretch_2"], h0)
    scale = max(np.max(np.abs(T1o)), np.max(np.abs(T2o)))
    err = max(np.max(np.abs(c["T11_N_per_m"] - T1o)), np.max(np.abs(c["T22_N_per_m"] - T2o)))
    # relative to the tension at the same point, with a floor near zero load
    rel = np.max(np.concatenate([np.abs(c["T11_N_per_m"] - T1o), np.abs(c["T22_N_per_m"] - T2o)])
                 / np.maximum(np.concatenate([np.abs(T1o), np.abs(T2o)]), 1e-3 * scale))
    return res, rel, err, tol


def check_biaxial(sc=None):
    sc = sc or build_experiment(3)
    rep = Report()
    res, rel, _, tol = _biaxial_fe(sc)
    rep.add(4, f"FE tensions vs material-point oracle ({sc.material.model})", rel, tol.rel)
    m = sc.material
    if m.model in ("guccione3d", "guccione2d"):
        other = replace(m, model="guccione2d" if m.model == "guccione3d" else "guccione3d")
        sc2 = replace(sc, material=other)
        _, rel2, _, _ = _biaxial_fe(sc2)
        rep.add(4, f"FE tensions vs material-point oracle ({other.model})", rel2, tol.rel)
        lam = np.linspace(1.0, 1.3, 31)[1:]
        a = np.array(oracle_biaxial_point(Guccione3D(m.C1_Pa, m.C2, m.C3, m.C4), lam, lam))
        b = np.array(oracle_biaxial_point(Guccione2D(m.C1_Pa, m.C2, m.C3, m.C4), lam, lam))
        rep.add(4, "2D vs 3D Guccione equibiaxial sweep, stretch 1 to 1.3", np.max(np.abs(a - b) / np.abs(a)), 0.05)
        if m.C2 > m.C3:
            c = res.columns
            load = c["tension_Pa"] > 0
            margin = np.min(c["T11_N_per_m"][load] - c["T22_N_per_m"][load])
            rep.add(4, "T11 - T22 under load (fiber direction stiffer)", margin, 0.0, passed=margin > 0,
                    detail="(must be positive)")
            rep.add(4, "T11 - T22 on the equibiaxial sweep", np.min(a[0] - a[1]), 0.0,
                    passed=np.min(a[0] - a[1]) > 0, detail="(must be positive)")
    rep.add(4, "runtime s", res.wall_time_s, 60.0)
    return rep


# ---------------------------------------------------------------------------
# criterion 5: cylinder inflation

def _oracle_spline(model, g, p_max, n=41):
    P = np.linspace(0.0, p_max, n)
    ri, lz = cylinder_curve(model, g.inner_radius_m, g.inner_radius_m + g.wall_m, P)
    return CubicSpline(P, ri), CubicSpline(P, lz)


def check_cylinder(sc=None):
    sc = sc or build_experiment(4)
    tol = TOLERANCES[5]
    rep = Report()
    g = sc.geometry
    model = sc.material.build()
    p_max = max(lc.schedule().peak for lc in sc.load_cases)
    ri_of, lz_of = _oracle_spline(model, g, p_max)
    swings = {}
    wall = 0.0
    for k, lc in enumerate(sc.load_cases):
        res = run_case(sc, k, raise_on_failure=False)
        wall += res.wall_time_s
        tag = f"[{lc.name}]"
        if "failure" in res.events:
            rep.add(5, f"{tag} run", np.inf, 0.0, passed=False, detail=res.events["failure"])
            continue
        c = res.columns
        P = c["pressure_Pa"]
        e_r = np.max(np.abs(c["inner_radius_m"] - ri_of(P)) / ri_of(P))
        e_l = np.max(np.abs(c["axial_stretch"] - lz_of(P)) / lz_of(P))
        rep.add(5, f"{tag} inner radius vs oracle, max relative error", e_r, tol.rel)
        rep.add(5, f"{tag} axial stretch vs oracle, max relative error", e_l, tol.rel)
        rep.add(5, f"{tag} |volume change| %", np.max(np.abs(c["volume_change_pct"])), 1.0)
        resid = c["inner_radius_m"] - ri_of(P)
        swings[lc.name] = float(np.ptp(resid[1:])) if len(resid) > 1 else 0.0
        dts = np.asarray(res.solver.dt_history, dtype=float)
        dts = dts[:, 1] if dts.ndim == 2 else dts
        if sc.solver.dt == "auto" and sc.experiment == 4:
            ok = dts.min() >= 1e-6 and dts.max() <= 1e-4
            rep.add(5, f"{tag} auto time step range [{dts.min():.3g}, {dts.max():.3g}] s in [1e-6, 1e-4]",
                    dts.max(), 1e-4, passed=bool(ok))
        prof = res.events.get("profile")
        if prof is None:
            rep.add(5, f"{tag} wall profile at {g.profile_pressure_Pa:g} Pa", np.nan, 0.0, passed=False,
                    detail="(pressure never reached)")
            continue
        s = prof["sigma"]
        inplane = np.max(np.abs(s[:, :2]))
        rep.add(5, f"{tag} |lamina normal stress| / max in-plane stress", np.max(np.abs(s[:, 2])) / inplane, 0.02)
        sol = oracle_cylinder_inflation(model, g.inner_radius_m, g.inner_radius_m + g.wall_m, prof["pressure_Pa"])
        span = max(abs(sol.sigma_rr[0] + sol.pressure), abs(sol.sigma_rr[-1])) / sol.pressure
        rep.add(5, f"{tag} oracle radial stress spans -P to 0 (relative misfit)", span, 1e-6)
        inner, outer = prof["zeta"] < 0, prof["zeta"] > 0
        for j, (name, o) in enumerate((("circumferential", sol.sigma_tt), ("longitudinal", sol.sigma_zz))):
            fe_order = np.mean(s[inner, j]) > np.mean(s[outer, j])
            or_order = o[0] > o[-1]
            rep.add(5, f"{tag} {name} stress ordering inner vs outer wall matches oracle",
                    float(fe_order != or_order), 0.0, passed=fe_order == or_order,
                    detail=f"(FE inner {np.mean(s[inner, j]):.4g} outer {np.mean(s[outer, j]):.4g} Pa;"
                           f" oracle {o[0]:.4g} / {o[-1]:.4g} Pa)")
    if len(swings) == 2:
        (slow, a), (fast, b) = sorted(swings.items(), key=lambda kv: -_ramp_time(sc, kv[0]))
        rep.add(5, f"oscillation of inner radius, {slow} ramp vs {fast} ramp (peak-to-peak m)", a, b,
                passed=a < b)
    rep.add(5, "runtime s", wall, 600.0)
    return rep


def _ramp_time(sc, name):
    return next(lc.schedule().duration for lc in sc.load_cases if lc.name == name)


# ---------------------------------------------------------------------------
# criterion 6: constitutive property suite

def _fd_stress(model, gamma, h, condensed):
    def energy(g):
        return strain_energy(model, condense_E33(g) if condensed else g)
    out = np.zeros(6)
    for J in range(6):
        if condensed and J == 2:
            continue
        d = np.zeros(6)
        d[J] = h
        out[J] = (energy(gamma + d) - energy(gamma - d)) / (2 * h)
    return out


def _fd_tangent(model, gamma, h, condensed):
    out = np.zeros((6, 6))
    for J in range(6):
        if condensed and J == 2:
            continue
        d = np.zeros(6)
        d[J] = h
        out[:, J] = (pk2_stress(model, gamma + d) - pk2_stress(model, gamma - d)) / (2 * h)
    return out


def random_strains(rng, n, amp=0.15):
    g = rng.uniform(-amp, amp, (n, 6))
    g[:, 2] = 0.0
    return g


def naive_push_forward_stress(F, ratio, S):
    s = voigt_to_sym(S)
    out = np.zeros((3, 3))
    for r in range(3):
        for q in range(3):
            for i in range(3):
                for j in range(3):
                    out[r, q] += ratio * F[r, i] * s[i, j] * F[q, j]
    return out


def naive_push_forward_tangent(F, ratio, C0):
    c = tangent_to_full(C0)
    out = np.zeros((3, 3, 3, 3))
    for idx in itertools.product(range(3), repeat=4):
        m, n, p, q = idx
        acc = 0.0
        for i, j, r, s in itertools.product(range(3), repeat=4):
            acc += F[m, i] * F[n, j] * c[i, j, r, s] * F[p, r] * F[q, s]
        out[idx] = ratio * acc
    return out


def check_constitutive(n=100, rng_seed=None):
    tol = TOLERANCES[6]
    rng = np.random.default_rng(seed() if rng_seed is None else rng_seed)
    rep = Report()
    models = [LinearElastic(2.0e5, 0.3), MooneyRivlin(0.1863e6, 0.00979e6),
              Guccione3D(2.0e3, 10.0, 5.0, 4.0), Guccione2D(2.0e3, 10.0, 5.0, 4.0)]
    for model in models:
        name = type(model).__name__
        condensed = model.incompressible
        e_s = e_t = e_33 = e_det = 0.0
        for gamma in random_strains(rng, n):
            S = pk2_stress(model, gamma)
            D = material_tangent(model, gamma)
            S_fd = _fd_stress(model, gamma, 1e-6, condensed)
            D_fd = _fd_tangent(model, gamma, 1e-6, condensed)
            free = [0, 1, 3, 4, 5] if condensed else list(range(6))
            e_s = max(e_s, np.max(np.abs(S[free] - S_fd[free])) / max(np.max(np.abs(S)), 1e-12))
            e_t = max(e_t, np.max(np.abs(D - D_fd)) / max(np.max(np.abs(D)), 1e-12))
            if condensed:
                cs = condense_E33(gamma)
                C = np.eye(3) + 2.0 * voigt_to_sym(cs.gamma * np.array([1, 1, 1, .5, .5, .5]))
                e_det = max(e_det, abs(np.linalg.det(C) - 1.0))
                e_33 = max(e_33, abs(S[2]), np.max(np.abs(D[2, :])), np.max(np.abs(D[:, 2])))
        rep.add(6, f"{name}: S vs FD of W (relative)", e_s, tol.rel)
        rep.add(6, f"{name}: tangent vs FD of S (relative)", e_t, 1e-4)
        if condensed:
            rep.add(6, f"{name}: S33 and tangent 33 row/column after condensation", e_33, 1e-12)
            rep.add(6, f"{name}: |det(2E + I) - 1| after condensation", e_det, 1e-10)
    e_pf = e_pt = 0.0
    for _ in range(n):
        F = np.eye(3) + rng.uniform(-0.3, 0.3, (3, 3))
        ratio = 1.0 / np.linalg.det(F)
        S = rng.normal(size=6)
        A = rng.normal(size=(6, 6))
        C0 = A + A.T
        e_pf = max(e_pf, np.max(np.abs(voigt_to_sym(push_forward_stress(F, ratio, S))
                                       - naive_push_forward_stress(F, ratio, S))))
        if _ < 10:   # the quadruple loop is slow; a handful of samples suffices
            e_pt = max(e_pt, np.max(np.abs(tangent_to_full(push_forward_tangent(F, ratio, C0))
                                           - naive_push_forward_tangent(F, ratio, C0))))
    rep.add(6, "Cauchy push-forward vs loop oracle", e_pf, 1e-10)
    rep.add(6, "tangent push-forward vs loop oracle", e_pt, 1e-10)
    return rep


# ---------------------------------------------------------------------------
# criterion 7: technique distinctness

def check_distinctness(sc=None):
    """Total hyperelastic transformations of a constant tensor vs Technique 2."""
    sc = sc or build_experiment(2)
    E_mod, nu = elastic_constants(sc.material.build(), sc.material.nu_constant)
    lin = MaterialSpec("linear_elastic", sc.material.density_kg_m3, E_Pa=E_mod, nu=nu)
    sc_lin = replace(sc, material=lin)
    r1 = run_case(sc_lin, technique=1, raise_on_failure=False)
    r2 = run_case(sc_lin, technique=2, raise_on_failure=False)
    rep = Report()
    tol = TOLERANCES[7]
    worst = 0.0
    for key in ("uA_x_m", "uC_x_m"):
        a, b = _last(r1.columns, key), _last(r2.columns, key)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    rep.add(7, "constant tensor under Technique 1 vs Technique 2, relative difference at A and C",
            worst, tol.rel, passed=worst > tol.rel, detail="(must exceed 0.10)")
    return rep


# ---------------------------------------------------------------------------
# drivers

def verify_scenario(sc):
    """Checks that apply to the scenario's experiment."""
    return {1: check_elastica, 2: check_plate_hole, 3: check_biaxial,
            4: check_cylinder, 5: check_cylinder}[sc.experiment](sc)


CRITERIA = {
    1: check_fiber_frame,
    2: check_elastica,
    3: check_plate_hole,
    4: check_biaxial,
    5: lambda: _both_cylinders(),
    6: check_constitutive,
    7: check_distinctness,
}


def _both_cylinders():
    rep = check_cylinder(build_experiment(4))
    rep.extend(check_cylinder(build_experiment(5)))
    return rep


def run_acceptance(suite="all"):
    """Run one criterion (1-7) or all of them; failures become report entries."""
    keys = sorted(CRITERIA) if suite == "all" else [int(suite)]
    rep = Report()
    for k in keys:
        try:
            rep.extend(CRITERIA[k]())
        except Exception as exc:   # a crash is a failed criterion, not a crashed suite
            rep.add(k, "criterion raised", np.nan, 0.0, passed=False, detail=f"{type(exc).__name__}: {exc}")
    return rep


def oracle_tables(sc):
    """Analytical reference curves for ``run --oracle-only``: {name: (header, rows)}."""
    m = sc.material.build()
    g = sc.geometry
    if sc.experiment == 1:
        EI = m.E * LinearElastic_EI(g)
        M = np.linspace(0.0, 2 * np.pi * EI / g.length_m, 41)
        rows = [(Mi, *oracle_elastica(Mi, EI, g.length_m)) for Mi in M]
        return {"elastica": (("moment_Nm", "tip_axial_m", "tip_transverse_m"), rows)}
    if sc.experiment == 3:
        lam = np.linspace(1.0, 1.3, 31)
        T1, T2 = oracle_biaxial_point(m, lam, lam, g.thickness_m)
        return {"biaxial": (("stretch", "T11_N_per_m", "T22_N_per_m"), list(zip(lam, T1, T2)))}
    if sc.experiment in (4, 5):
        p_max = max(lc.schedule().peak for lc in sc.load_cases)
        P = np.linspace(0.0, p_max, 21)
        ri, lz = cylinder_curve(m, g.inner_radius_m, g.inner_radius_m + g.wall_m, P)
        sol = oracle_cylinder_inflation(m, g.inner_radius_m, g.inner_radius_m + g.wall_m, g.profile_pressure_Pa)
        return {"inflation": (("pressure_Pa", "inner_radius_m", "axial_stretch"), list(zip(P, ri, lz))),
                "wall_profile": (("r_m", "sigma_rr_Pa", "sigma_tt_Pa", "sigma_zz_Pa"),
                                 list(zip(sol.r, sol.sigma_rr, sol.sigma_tt, sol.sigma_zz)))}
    raise ValueError("experiment 2 has no closed-form reference")
