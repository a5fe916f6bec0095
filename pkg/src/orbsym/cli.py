"""Command-line front end: configuration ingestion, pipeline orchestration
and report emission.

    orbsym {reduce|symmetries|verify|orbit|full} --config cfg.json
           [--out report.json] [--csv orbit.csv] [--seed N] [--parallel]

Exit codes: 0 all checks pass, 1 a check failed, 2 configuration error.
Reports are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .expr import Expr, ExprError, ZERO, parse_expression, to_infix, to_prefix
from .problems import (
    Family,
    ProblemSpec,
    T,
    conserved_quantities,
    equations_of_motion,
)
from .reduction import ReducedSystem, ReductionError, nucci_reduce, reduce_direct
from .numverify import (
    OrbitState,
    T_END_DEFAULT,
    TOL_DEFAULT,
    VerifyError,
    conserved_drift,
    integrate_orbit,
    omega_candidate_verdict,
    oscillator_residual,
    estimate_frequency,
    pipeline_equivalence,
    symmetry_defect,
)
from .symmetry import (
    Generator,
    SymmetryError,
    back_transform,
    catalog_rank,
    determining_residual,
    micz_catalog_entries,
    reduced_catalog,
    residual_of_original,
)
from .problems import L, MU

SCHEMA_VERSION = "1"

SUBCOMMANDS = ("reduce", "symmetries", "verify", "orbit", "full")

_FAMILIES = {f.value: f for f in Family}


class ConfigError(Exception):
    """Configuration rejected; message carries a JSON-pointer-ish path."""


@dataclass(frozen=True)
class RunConfig:
    spec: ProblemSpec
    state: OrbitState
    tol: float
    t_end: float
    seed: int = 0
    parallel: bool = False


_TOP_KEYS = {
    "family",
    "mu",
    "alpha",
    "lambda",
    "nu",
    "g",
    "initial_state",
    "tol",
    "t_end",
}
_STATE_KEYS = {"t", "r", "r_dot", "angle", "angle_dot"}


def _expect_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def parse_problem_config(text: str) -> RunConfig:
    """Validate a JSON problem description, filling defaults."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"/: invalid JSON ({err})") from err
    if not isinstance(raw, dict):
        raise ConfigError("/: expected an object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"/{sorted(unknown)[0]}: unknown key")
    if "family" not in raw:
        raise ConfigError("/family: required")
    fam_name = raw["family"]
    if fam_name not in _FAMILIES:
        raise ConfigError(
            f"/family: unknown family {fam_name!r}; one of {sorted(_FAMILIES)}"
        )
    family = _FAMILIES[fam_name]
    mu = _expect_number(raw.get("mu", 1.0), "/mu")
    lam = _expect_number(raw.get("lambda", 0.0), "/lambda")
    nu = _expect_number(raw.get("nu", 0.0), "/nu")

    alpha: float | Fraction = 0
    if "alpha" in raw:
        if family == Family.POWER_LAW:
            v = raw["alpha"]
            try:
                alpha = Fraction(v) if isinstance(v, (int, str)) else Fraction(str(v))
            except (ValueError, ZeroDivisionError) as err:
                raise ConfigError(f"/alpha: not an exact rational: {v!r}") from err
        else:
            alpha = _expect_number(raw["alpha"], "/alpha")

    g: Expr | None = None
    if family == Family.CONE_DRAG:
        if "g" not in raw:
            raise ConfigError("/g: required for cone_drag")
        if not isinstance(raw["g"], str):
            raise ConfigError("/g: expected an expression string")
        try:
            g = parse_expression(raw["g"], {"t": T})
        except ExprError as err:
            raise ConfigError(f"/g: {err}") from err
    elif "g" in raw:
        raise ConfigError("/g: only valid for cone_drag")

    state_raw = raw.get("initial_state", {})
    if not isinstance(state_raw, dict):
        raise ConfigError("/initial_state: expected an object")
    unknown = set(state_raw) - _STATE_KEYS
    if unknown:
        raise ConfigError(f"/initial_state/{sorted(unknown)[0]}: unknown key")
    state_vals = {
        "t": _expect_number(state_raw.get("t", 0.0), "/initial_state/t"),
        "r": _expect_number(state_raw.get("r", 1.0), "/initial_state/r"),
        "r_dot": _expect_number(state_raw.get("r_dot", 0.0), "/initial_state/r_dot"),
        "angle": _expect_number(state_raw.get("angle", 0.0), "/initial_state/angle"),
        "angle_dot": _expect_number(
            state_raw.get("angle_dot", 1.2), "/initial_state/angle_dot"
        ),
    }
    tol = _expect_number(raw.get("tol", TOL_DEFAULT), "/tol")
    t_end = _expect_number(raw.get("t_end", T_END_DEFAULT), "/t_end")
    if tol <= 0:
        raise ConfigError("/tol: must be positive")
    if t_end <= 0:
        raise ConfigError("/t_end: must be positive")
    try:
        spec = ProblemSpec(family, mu=mu, alpha=alpha, lam=lam, nu=nu, g=g)
        state = OrbitState(**state_vals)
    except Exception as err:
        raise ConfigError(f"/: {err}") from err
    return RunConfig(spec=spec, state=state, tol=tol, t_end=t_end)


# ---------------------------------------------------------------------------
# report assembly


def _check(name: str, value, threshold: float | None, passed: bool) -> dict:
    return {
        "name": name,
        "value": value,
        "threshold": threshold,
        "pass": bool(passed),
    }


def _reduce_section(cfg: RunConfig, checks: list[dict]) -> dict:
    spec = cfg.spec
    out: dict = {"direct": reduce_direct(spec).to_json_dict()}
    rs = reduce_direct(spec)
    if spec.family in (Family.KEPLER, Family.KEPLER_DRAG):
        out["w_pipeline"] = nucci_reduce(spec).to_json_dict()
        states = _equivalence_states(cfg)
        eq = pipeline_equivalence(spec, states, t_end=min(cfg.t_end, 50.0), tol=cfg.tol)
        out["pipeline_equivalence"] = eq
        checks.append(
            _check("pipeline-same-frequency", eq["same_omega_sq"], None, eq["same_omega_sq"])
        )
        checks.append(
            _check(
                "pipeline-oscillator-residual",
                eq["max_residual"],
                1e-6,
                eq["max_residual"] < 1e-6,
            )
        )
    if not rs.linearizable:
        out["linearizable"] = False
        checks.append(
            _check("reduction-flagged-nonlinearizable", True, None, True)
        )
    return out


def _equivalence_states(cfg: RunConfig) -> list[OrbitState]:
    s = cfg.state
    return [
        s,
        OrbitState(s.t, s.r * 1.1, s.r_dot + 0.05, s.angle + 0.5, s.angle_dot * 0.85),
        OrbitState(s.t, s.r * 1.2, s.r_dot - 0.05, s.angle, s.angle_dot * 0.8),
    ]


def _symmetry_section(cfg: RunConfig, checks: list[dict], seed: int) -> dict:
    spec = cfg.spec
    rs = reduce_direct(spec)
    out: dict = {}
    if rs.linearizable:
        cat = reduced_catalog(rs)
        entries = []
        for g in cat:
            res = determining_residual(g, rs)
            entries.append(
                {
                    "name": g.name,
                    "xi": to_prefix(g.xi),
                    "etas": [to_prefix(e) for e in g.etas],
                    "nonlocal": g.is_nonlocal,
                    "residuals": [to_prefix(r) for r in res],
                    "residual_zero": all(r == ZERO for r in res),
                }
            )
        param_env = {MU: float(spec.mu), L: 1.3}
        rank = catalog_rank(cat, param_env, seed=seed)
        out["reduced_catalog"] = entries
        out["reduced_catalog_rank"] = rank
        n_zero = sum(1 for e in entries if e["residual_zero"])
        checks.append(_check("reduced-catalog-size", len(cat), 9, len(cat) == 9))
        checks.append(
            _check("reduced-catalog-residuals-zero", n_zero, 9, n_zero == 9)
        )
        checks.append(_check("reduced-catalog-rank", rank, 9, rank == 9))
    if spec.family == Family.KEPLER or (
        spec.family == Family.MICZ and spec.micz_special_case
    ):
        named = []
        all_ok = True
        for e in micz_catalog_entries(spec):
            named.append(
                {
                    "name": e.name,
                    "reading": e.reading,
                    "printed_form_verified": e.printed_verified,
                    "verified": e.verified,
                    **e.generator.to_json_dict(),
                }
            )
            all_ok = all_ok and e.verified
        out["named_catalog"] = named
        checks.append(
            _check("named-catalog-size", len(named), 9, len(named) == 9)
        )
        checks.append(
            _check(
                "named-catalog-verified",
                sum(1 for e in named if e["verified"]),
                9,
                all_ok,
            )
        )
        out["back_transform"] = _back_transform_spot(spec, rs, checks)
    return out


def _back_transform_spot(spec: ProblemSpec, rs_unused, checks: list[dict]) -> dict:
    from .problems import PHI, R as R_SYM
    from .expr import ONE

    rs = reduce_direct(
        spec
        if spec.family == Family.MICZ
        else ProblemSpec(Family.MICZ, mu=spec.mu, lam=0.0, nu=0.0)
    )
    rotation = Generator((T, R_SYM, PHI), ZERO, (ZERO, ONE), "rotation")
    w = back_transform(rotation, spec)
    rot_exact = w.xi == ONE and all(e == ZERO for e in w.etas)
    checks.append(_check("rotation-transforms-to-angle-shift", rot_exact, None, rot_exact))
    entries = {e.name: e.generator for e in micz_catalog_entries(spec)}
    out = {"rotation_image": w.to_json_dict(), "shift_pair_residuals": {}}
    ok_all = rot_exact
    for name in ("Lambda4+", "Lambda4-"):
        res = residual_of_original(entries[name], spec, rs)
        zero = all(r == ZERO for r in res)
        out["shift_pair_residuals"][name] = [to_prefix(r) for r in res]
        ok_all = ok_all and zero
        checks.append(_check(f"back-transform-residual-{name}", zero, None, zero))
    return out


def _verify_section(cfg: RunConfig, checks: list[dict]) -> dict:
    spec = cfg.spec
    out: dict = {}
    traj = integrate_orbit(spec, cfg.state, t_end=cfg.t_end, tol=cfg.tol)
    out["orbit"] = {
        "samples": len(traj.samples),
        "t_end": traj.t_end,
        "singular": traj.singular,
    }
    drifts = {}
    quantities = conserved_quantities(spec)
    if cfg.parallel and len(quantities) > 1:
        with ThreadPoolExecutor() as pool:
            vals = list(pool.map(lambda q: conserved_drift(traj, q), quantities))
    else:
        vals = [conserved_drift(traj, q) for q in quantities]
    for q, v in zip(quantities, vals):
        drifts[q.name] = v
        checks.append(_check(f"conserved-drift[{q.name}]", v, 1e-7, v < 1e-7))
    out["conserved_drift"] = drifts

    rs = reduce_direct(spec)
    degenerate = abs(cfg.state.r**2 * cfg.state.angle_dot) < 1e-9
    if degenerate:
        out["reduction_checks"] = "skipped: u2 = 0"
    elif rs.linearizable and rs.omega_candidates is None:
        resid = oscillator_residual(traj, rs)
        out["oscillator_residual"] = resid
        checks.append(
            _check("oscillator-residual", resid, 1e-5, resid < 1e-5)
        )
        freq = estimate_frequency(traj, rs)
        out["fitted_frequency"] = freq
        if spec.family == Family.MICZ and spec.micz_special_case:
            checks.append(
                _check(
                    "unit-frequency", freq, 1e-6, abs(freq - 1.0) < 1e-6
                )
            )
    elif rs.omega_candidates is not None:
        verdict = omega_candidate_verdict(traj, rs)
        out["frequency_verdict"] = verdict
        checks.append(
            _check(
                "frequency-candidate-selected",
                verdict["selected"],
                None,
                verdict["selected"] is not None,
            )
        )
    else:
        out["reduction_checks"] = "skipped: not linearizable"
    return out


def _defect_section(cfg: RunConfig, checks: list[dict]) -> dict:
    spec = cfg.spec
    rs = reduce_direct(spec)
    if not rs.linearizable or rs.omega_candidates is not None:
        return {}
    if abs(cfg.state.r**2 * cfg.state.angle_dot) < 1e-9:
        return {"defects": "skipped: u2 = 0"}
    rows = []
    ok = True
    for g in reduced_catalog(rs):
        d = symmetry_defect(spec, g, cfg.state, rs=rs, t_end=min(cfg.t_end, 30.0), n=30)
        rows.append(
            {
                "name": g.name,
                "defect": d.defect,
                "defect_half": d.defect_half,
                "floor": d.floor,
                "ratio": d.ratio,
                "informative": d.informative,
                "accepted": d.accepted,
            }
        )
        ok = ok and d.accepted
    checks.append(_check("symmetry-defect-scaling", ok, None, ok))
    return {"defects": rows}


def run(subcommand: str, cfg: RunConfig) -> tuple[dict, int]:
    """Execute a subcommand; returns (report, exit_code)."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    checks: list[dict] = []
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "family": cfg.spec.family.value,
        "seed": cfg.seed,
    }
    try:
        if subcommand in ("reduce", "full"):
            report["reduction"] = _reduce_section(cfg, checks)
        if subcommand in ("symmetries", "full"):
            report["symmetries"] = _symmetry_section(cfg, checks, cfg.seed)
        if subcommand in ("verify", "full"):
            report["numeric"] = _verify_section(cfg, checks)
        if subcommand == "full":
            report["numeric"]["flow"] = _defect_section(cfg, checks)
        if subcommand == "orbit":
            traj = integrate_orbit(
                cfg.spec, cfg.state, t_end=cfg.t_end, tol=cfg.tol
            )
            report["orbit"] = {
                "samples": len(traj.samples),
                "t_end": traj.t_end,
                "singular": traj.singular,
                "csv": traj.to_csv(),
            }
    except (ReductionError, SymmetryError, VerifyError, ExprError) as err:
        report["error"] = str(err)
        report["checks"] = checks
        return report, 1
    report["checks"] = checks
    failed = [c for c in checks if not c["pass"]]
    report["overall_pass"] = not failed
    return report, 0 if not failed else 1


def render_text(report: dict) -> str:
    lines = [f"family: {report.get('family')}"]
    red = report.get("reduction", {})
    if "direct" in red:
        pretty = red["direct"].get("pretty", {})
        lines.append("reduced system (direct pipeline):")
        for key in ("nonlinear", "u_equation", "u1_def", "u2_def", "oscillator"):
            if key in pretty:
                lines.append(f"  {pretty[key]}")
    for c in report.get("checks", []):
        status = "pass" if c["pass"] else "FAIL"
        val = c["value"]
        if isinstance(val, float):
            val = f"{val:.3e}"
        lines.append(f"  [{status}] {c['name']}: {val}")
    if "error" in report:
        lines.append(f"error: {report['error']}")
    if "overall_pass" in report:
        lines.append("overall: " + ("pass" if report["overall_pass"] else "FAIL"))
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="orbsym",
        description=(
            "Reduce central-force problems to a harmonic oscillator plus a "
            "conservation law, certify the symmetry catalogs, and verify "
            "everything against integrated orbits."
        ),
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, help="JSON problem config")
    parser.add_argument("--out", help="write the JSON report here")
    parser.add_argument("--csv", help="write the trajectory CSV here (orbit)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--parallel", action="store_true")
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_problem_config(fh.read())
        cfg = RunConfig(
            spec=cfg.spec,
            state=cfg.state,
            tol=cfg.tol,
            t_end=cfg.t_end,
            seed=args.seed,
            parallel=args.parallel,
        )
    except (OSError, ConfigError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2

    report, code = run(args.subcommand, cfg)

    if args.subcommand == "orbit":
        csv = report["orbit"].pop("csv")
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(csv)
        else:
            sys.stdout.write(csv)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.subcommand != "orbit" or args.out:
        sys.stdout.write(render_text(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
