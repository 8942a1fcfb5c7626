"""Run the configured checks on one scenario and serialise the verdicts."""

from __future__ import annotations

import csv
import json
import math
import os
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import groupoid as gp
from . import hamiltonian as hm
from .config import CHECKS, RunConfig, load_scenario
from .errors import CosymError
from .geometry import classify_structure, verify_closed
from .scenario import Scenario

REPORT_VERSION = 1
SIG_DIGITS = 12

# check -> checks whose result it needs
DEPENDS = {
    "moment": ("classify",),
    "clean": ("classify",),
    "morse": ("classify",),
    "orbit": ("quasi_iso",),
}

EXPLAIN = {
    "closed": "Central-difference exterior derivatives of omega and eta; passes when both residuals <= tol_closed.",
    "classify": "Rank of the Lichnerowicz matrix L = -Omega + eta eta^T over the grid; "
                "passes unless the verdict is Degenerate.",
    "action": "Pullback residuals |J^T Omega(g.x) J - Omega(x)| and |J^T eta(g.x) - eta(x)| "
              "for random torus elements g; passes when <= tol_action.",
    "moment": "eta(xi_M) = 0, d(mu^xi) = iota_{xi_M} omega and torus invariance of mu, "
              "for the generators complementary to the subtorus; passes when <= tol_action.",
    "clean": "T(N.x) == T(K.x) intersected with ker(flat) at sampled points, "
             "with the null ideal taken as the kernel of xi -> iota_{xi_M} omega.",
    "body": "Convex hull of the moment image inside the clip box, in vertex and halfspace form; "
            "passes when 1000 random sample midpoints satisfy every halfspace to 1e-7.",
    "morse": "Critical sets of mu^xi by grid adjacency, transverse Hessian index and nullity; "
             "passes when every component is nondegenerate with even index.",
    "reduce": "Pulls (omega, eta) back to a slice of the zero level and classifies it; "
              "passes when the reduced structure is cosymplectic.",
    "quasi_iso": "Anchor injective and ker(flat) == im(anchor) at 50 random points.",
    "basic": "Horizontality (iota_v omega = 0, eta(v) = 0) and invariance (d(iota_v omega) = 0, "
             "d(eta(v)) = 0) of the forms along the spanning fields; passes when <= tol_action.",
    "orbit": "The quasi-isomorphism condition along random 10-step leaf flows from sampled points.",
    "arrow": "On the arrow chart: s*omega == t*omega to 1e-9 and ker(flat~) == ker(ds) + ker(dt) at 50 points.",
    "holonomy": "Iterates the first-return map on a transversal: Trivial, CyclicFinite(q) or "
                "InfiniteCyclic(N_max); passes when computed (and matches expect_holonomy if set).",
}


def _requirement(S: Scenario, check: str) -> str | None:
    """Reason a check cannot apply to this scenario, or None."""
    if check in ("action", "clean"):
        return None if S.action is not None else "no torus action"
    if check in ("moment", "body", "morse"):
        return None if S.action is not None and S.action.moment_map is not None else "no moment map"
    if check == "reduce":
        if S.action is None or S.action.moment_map is None:
            return "no moment map"
        return None if S.slice_param is not None else "no slice of the zero level"
    if check in ("quasi_iso", "basic", "orbit"):
        return None if S.foliation is not None else "no foliation"
    if check == "arrow":
        return None if S.groupoid is not None else "no arrow chart"
    if check == "holonomy":
        return None if S.return_map is not None else "no return map"
    return None


@dataclass
class ScenarioReport:
    scenario: str
    checks: dict
    classification: dict | None = None
    moment_body: dict | None = None
    morse_bott: list | None = None
    holonomy: dict | None = None
    provenance: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)  # in-memory objects for CSV/figures, not serialised

    @property
    def passed(self) -> bool:
        return all(c["verdict"] == "pass" for c in self.checks.values() if c["verdict"] != "skipped")

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def to_dict(self) -> dict:
        out = {
            "report_version": REPORT_VERSION,
            "scenario": self.scenario,
            "passed": self.passed,
            "checks": self.checks,
            "classification": self.classification,
            "provenance": self.provenance,
        }
        if self.moment_body is not None:
            out["moment_body"] = self.moment_body
        if self.morse_bott is not None:
            out["morse_bott"] = self.morse_bott
        if self.holonomy is not None:
            out["holonomy"] = self.holonomy
        return out

    def to_json(self) -> str:
        return dumps(self.to_dict())


def canonical(obj):
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return str(x)
        x = float(f"{x:.{SIG_DIGITS}g}")
        return 0.0 if x == 0 else x
    return obj


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _verdict(ok: bool, residuals: dict | None = None, tol=None, **details) -> dict:
    out = {"verdict": "pass" if ok else "fail"}
    if residuals is not None:
        out["residuals"] = residuals
    if tol is not None:
        out["tol"] = tol
    if details:
        out["details"] = details
    return out


def _from_check_report(r: hm.CheckReport) -> dict:
    return _verdict(r.passed, dict(r.residuals), r.tol, **dict(r.details))


# ---------------------------------------------------------------------------
# individual checks; each returns (entry, extras) where extras feed the report


class _Runner:
    def __init__(self, S: Scenario, cfg: RunConfig):
        self.S = S
        self.cfg = cfg
        self.tol = cfg.tolerances
        self.results: dict = {}
        self.extras: dict = {}
        self.classification = None

    def rng(self, check: str) -> np.random.Generator:
        # independent stream per check so results do not depend on execution order
        return np.random.default_rng([self.cfg.seed, CHECKS.index(check)])

    def closed(self):
        res = verify_closed(self.S.manifold, self.S.forms)
        t = self.tol["tol_closed"]
        return _verdict(max(res.values()) <= t, res, t)

    def classify(self):
        c = classify_structure(self.S.manifold, self.S.forms, self.tol["tol_rank"], self.tol["tol_closed"])
        self.classification = c
        self.extras["classification"] = c.to_dict()
        return _verdict(not c.is_degenerate, dict(c.residuals), self.tol["tol_closed"], verdict=c.verdict)

    def action(self):
        A = self.S.action
        g = self.rng("action").uniform(0, 2 * math.pi, size=(20, A.torus_rank))
        return _from_check_report(hm.verify_precosymplectic_action(self.S, g, self.tol["tol_action"],
                                                                   seed=self.cfg.seed))

    def moment(self):
        return _from_check_report(hm.verify_moment_map(self.S, self.tol["tol_action"], seed=self.cfg.seed))

    def clean(self):
        S = self.S
        null = hm.null_ideal(S, seed=self.cfg.seed)
        pts = S.manifold.sample(self.rng("clean"), 20)
        failures = sum(not hm.clean_action_check(S, x, null_rows=null, classification=self.classification)
                       for x in pts)
        return _verdict(failures == 0, None, None, points=len(pts), failures=failures,
                        null_ideal=np.asarray(null).tolist())

    def body(self):
        S = self.S
        body = hm.moment_body(S, S.clip_box)
        ok, worst = hm.convexity_certificate(body, self.rng("body"), pairs=1000, tol=1e-7)
        self.extras["moment_body"] = body.to_dict()
        self.extras["body_object"] = body
        return _verdict(ok, {"midpoint_violation": worst}, 1e-7, vertices=len(body.vertices),
                        facets=len(body.facets), clipping_halfspaces=len(body.halfspaces) - len(body.facets))

    def _morse_generators(self):
        A = self.S.action
        if self.cfg.morse_generator is not None:
            g = np.asarray(self.cfg.morse_generator, float)
            if g.shape != (A.torus_rank,):
                raise ValueError(f"morse_generator needs {A.torus_rank} entries")
            return [g]
        return [np.asarray(row, float) for row in A.moment_generators]

    def morse(self):
        reports = [hm.morse_bott_analysis(self.S, xi, self.tol["tol_crit"], self.tol["tol_eig"])
                   for xi in self._morse_generators()]
        self.extras["morse_bott"] = [r.to_dict() for r in reports]
        self.extras["morse_objects"] = reports
        ok = all(r.all_nondegenerate and r.all_even for r in reports)
        indices = sorted({c.index for r in reports for c in r.components})
        return _verdict(ok, None, None, components=sum(len(r.components) for r in reports), indices=indices)

    def reduce(self):
        r = hm.reduce_at_zero(self.S, tol_rank=self.tol["tol_rank"])
        d = r.to_dict()
        ok = r.classification.kind == "Cosymplectic" and r.eta_min_norm > 1e-10
        return _verdict(ok, {"level": r.level_residual, **{f"closed_{k}": v
                                                             for k, v in r.classification.residuals.items()}},
                        None, verdict=r.classification.verdict, reduced_dim=d["reduced_dim"],
                        eta_min_norm=r.eta_min_norm)

    def quasi_iso(self):
        pts = self.S.manifold.sample(self.rng("quasi_iso"), 50)
        failures = sum(not gp.quasi_iso_check(self.S, x, 1e-8, self.tol["tol_rank"]) for x in pts)
        return _verdict(failures == 0, None, None, points=len(pts), failures=failures,
                        variant=self.S.foliation.variant)

    def basic(self):
        return _from_check_report(gp.basic_form_check(self.S, self.tol["tol_action"], seed=self.cfg.seed))

    def orbit(self):
        pts = self.S.manifold.sample(self.rng("orbit"), 5)
        failures = sum(not gp.orbit_invariance_check(self.S, x, 10, 1e-8, seed=self.cfg.seed + i)
                       for i, x in enumerate(pts))
        return _verdict(failures == 0, None, None, start_points=len(pts), steps=10, failures=failures)

    def arrow(self):
        return _from_check_report(gp.arrow_space_check(self.S, 1e-9, 50, seed=self.cfg.seed))

    def holonomy(self):
        S = self.S
        r = gp.mapping_torus_holonomy(S.return_map, S.holonomy_point, self.cfg.holonomy_n_max,
                                      self.tol["holonomy_tol"])
        self.extras["holonomy"] = r.to_dict()
        self.extras["holonomy_orbit"] = _orbit(S.return_map, S.holonomy_point, min(r.iterations_used, 400))
        expected = self.cfg.expect_holonomy
        ok = expected is None or expected.replace(" ", "") == r.label
        details = {"descriptor": r.label}
        if expected is not None:
            details["expected"] = expected
        return _verdict(ok, None, None, **details)


def _orbit(return_map, z0, n):
    pts = [np.asarray(z0, float)]
    for _ in range(n):
        pts.append(np.asarray(return_map(pts[-1]), float))
    return np.array(pts)


def _execute(runner: _Runner, check: str) -> dict:
    try:
        return getattr(runner, check)()
    except (CosymError, ValueError, np.linalg.LinAlgError) as exc:
        return {"verdict": "error", "error": f"{type(exc).__name__}: {exc}"}


def _threads() -> int:
    raw = os.environ.get("COSYM_THREADS")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run(cfg: RunConfig, timing: bool = False) -> ScenarioReport:
    """Execute the requested checks in dependency order.

    Prerequisites that were not requested still run (their result feeds the
    dependent check) but are reported as skipped.  A failed prerequisite turns
    its dependents into errors; independent checks are unaffected.
    """
    start = time.perf_counter()
    S = load_scenario(cfg)
    runner = _Runner(S, cfg)
    requested = set(cfg.checks)
    entries: dict = {}
    applicable = {}
    for c in CHECKS:
        reason = _requirement(S, c)
        if reason is not None and not cfg.explicit_checks:
            applicable[c] = reason
    needed = set(c for c in requested if c not in applicable)
    for c in list(needed):
        needed.update(DEPENDS.get(c, ()))

    waves = [[c for c in CHECKS if c in needed and c not in DEPENDS],
             [c for c in CHECKS if c in needed and c in DEPENDS]]
    results: dict = {}
    threads = _threads()
    for wave in waves:
        ready, blocked = [], {}
        for c in wave:
            bad = [d for d in DEPENDS.get(c, ()) if results.get(d, {}).get("verdict") != "pass"]
            if bad:
                blocked[c] = {"verdict": "error", "error": f"prerequisite {', '.join(bad)} did not pass"}
            else:
                ready.append(c)
        if threads > 1 and len(ready) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                done = dict(zip(ready, pool.map(lambda c: _execute(runner, c), ready)))
        else:
            done = {c: _execute(runner, c) for c in ready}
        results.update(done)
        results.update(blocked)

    for c in CHECKS:
        if c in requested and c in results:
            entries[c] = results[c]
        elif c in applicable and c in requested:
            entries[c] = {"verdict": "skipped", "reason": f"not applicable: {applicable[c]}"}
        else:
            entries[c] = {"verdict": "skipped"}

    ex = runner.extras
    provenance = {
        "tolerances": dict(cfg.tolerances),
        "seed": cfg.seed,
        "grid": S.manifold.describe(),
        "clip_box": [list(p) for p in S.clip_box] if S.clip_box else None,
        "checks_requested": [c for c in CHECKS if c in requested],
        "foliation_variant": S.foliation.variant if S.foliation is not None else None,
        "proper_declared": S.action.proper_declared if S.action is not None else None,
        "notes": {k: v for k, v in sorted(S.notes.items())},
    }
    if timing:
        provenance["wall_time_s"] = time.perf_counter() - start
    return ScenarioReport(
        scenario=S.name,
        checks=entries,
        classification=ex.get("classification") if "classify" in results else None,
        moment_body=ex.get("moment_body") if "body" in requested else None,
        morse_bott=ex.get("morse_bott") if "morse" in requested else None,
        holonomy=ex.get("holonomy") if "holonomy" in requested else None,
        provenance=provenance,
        artifacts={k: ex[k] for k in ("body_object", "morse_objects", "holonomy_orbit") if k in ex},
    )


# ---------------------------------------------------------------------------
# delimited outputs


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "_", name).strip("_")


def write_csvs(report: ScenarioReport, directory) -> list[Path]:
    """Moment-body vertices, critical components and a check summary as CSV files."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    base = slug(report.scenario)
    written = []

    p = d / f"{base}_checks.csv"
    with open(p, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["check", "verdict", "max_residual"])
        for name in CHECKS:
            entry = report.checks[name]
            res = entry.get("residuals") or {}
            worst = max((float(v) for v in res.values()), default=None)
            w.writerow([name, entry["verdict"], "" if worst is None else f"{worst:.12g}"])
    written.append(p)

    body = report.artifacts.get("body_object")
    if body is not None and report.moment_body is not None:
        p = d / f"{base}_moment_body.csv"
        body.write_csv(p)
        written.append(p)
        p = d / f"{base}_halfspaces.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"n_{i + 1}" for i in range(body.dim)] + ["offset", "kind"])
            for h in body.halfspaces:
                w.writerow([f"{float(c):.12g}" for c in h.normal] + [f"{h.offset:.12g}", h.kind])
        written.append(p)

    if report.morse_bott is not None:
        p = d / f"{base}_critical_components.csv"
        dim = max((len(c["representative"]) for r in report.morse_bott for c in r["components"]), default=0)
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["function", "component", "size", "tangent_dim", "index", "nullity", "nondegenerate"]
                       + [f"x_{i + 1}" for i in range(dim)])
            for r in report.morse_bott:
                for i, c in enumerate(r["components"]):
                    w.writerow([r["function_id"], i, c["size"], c["tangent_dim"], c["index"], c["nullity"],
                                int(c["nondegenerate"])] + [f"{v:.12g}" for v in c["representative"]])
        written.append(p)
    return written
