"""Batch front door.

Each subcommand resolves a scenario (built-in defaults, then an optional
JSON scenario file, then command-line flags), runs one analysis and writes
``<subcommand>.json`` and ``<subcommand>.csv`` to the output directory.
Reports carry the scenario hash and the tool version; floats are rounded to
12 significant digits so that reports are byte-identical across runs and
thread counts.  Exit status: 0 clean, 1 invariant violation, 2 bad input.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from pathlib import Path
from typing import Any, Callable

from . import __version__

SUBCOMMANDS = (
    "verify-cocycle",
    "build-triple",
    "spectrum",
    "growth",
    "summability",
    "regularity-sweep",
    "covering-analyze",
    "torus-demo",
    "order-estimate",
)

DEFAULTS: dict[str, dict] = {
    "verify-cocycle": {"cocycle": {"kind": "clifford", "n": 3}, "samples": 10_000},
    "build-triple": {"triple": {"kind": "group", "radius": 5}, "group": {"kind": "free", "rank": 2}, "length": {"kind": "clifford"}},
    "spectrum": {"triple": {"kind": "group", "radius": 5}, "group": {"kind": "free", "rank": 2}, "length": {"kind": "clifford"}},
    "growth": {"group": {"kind": "free", "rank": 2}, "length": {"kind": "clifford"}, "radii": [5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60]},
    "summability": {
        "coefficient": {"kind": "group-triple", "group": {"kind": "free", "rank": 1}, "length": {"kind": "word"}},
        "group": {"kind": "free", "rank": 1},
        "length": {"kind": "scalar-clifford"},
        "ladder": [20, 30, 40],
        "slack": 0.25,
    },
    "regularity-sweep": {
        "group": {"kind": "free", "rank": 2},
        "length": {"kind": "clifford"},
        "ladder": [10, 20, 40],
        "kmax": 3,
        "sgrid": [-1, 0, 1],
        "closed_form_radius": 6,
        "lipschitz": {"dims": [1, 2], "trials": 2000},
    },
    "covering-analyze": {"covering": "m2", "samples": 20},
    "torus-demo": {"torus": {"theta": math.sqrt(2) - 1, "M": [[2, 0], [0, 2]], "cutoff": 3}, "emit": "rep-check", "kmax": 2, "sgrid": [-1, 0, 1]},
    "order-estimate": {"sequence": {"kind": "power", "d": 2, "N": 100_000}},
}

BUILTIN_SCENARIOS: dict[str, dict] = {
    "clifford-3": {"cocycle": {"kind": "clifford", "n": 3}},
    "theta-z2": {"cocycle": {"kind": "theta", "theta": math.sqrt(2) - 1}, "samples": 10_000},
    "z-clifford": {"group": {"kind": "free", "rank": 1}, "length": {"kind": "scalar-clifford"}},
    "z2-clifford": {"group": {"kind": "free", "rank": 2}, "length": {"kind": "clifford"}},
    "rotated-frame": {"group": {"kind": "free", "rank": 2}, "length": {"kind": "rotated-frame"}},
    "m2": {"covering": "m2"},
    "c3-swap": {"covering": "c3-swap"},
    "clock-shift": {"covering": "clock-shift"},
    "torus-2id": {"torus": {"theta": math.sqrt(2) - 1, "M": [[2, 0], [0, 2]], "cutoff": 3}},
    "torus-skew": {"torus": {"theta": math.sqrt(2) - 1, "M": [[2, 1], [0, 3]], "cutoff": 3}},
}


class ScenarioError(ValueError):
    """Unresolvable scenario or input."""


# output hygiene


def _round(x: float) -> float | str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == 0:
        return 0.0
    return float(f"{x:.12g}")


def clean(obj: Any) -> Any:
    """JSON-ready copy with numpy scalars unwrapped and floats rounded."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_round(obj.real), _round(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj: Any) -> str:
    return json.dumps(clean(obj), sort_keys=True, indent=2) + "\n"


def scenario_hash(subcommand: str, scenario: dict) -> str:
    text = json.dumps(clean({"subcommand": subcommand, "scenario": scenario}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([json.dumps(v) if isinstance(v, (list, dict)) else v for v in clean(r)])
    return buf.getvalue()


# scenario resolution


def _merge(base: dict, over: dict) -> dict:
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def load_scenario(ref: str | None) -> dict:
    if ref is None:
        return {}
    p = Path(ref)
    if p.is_file():
        try:
            data = json.loads(p.read_text())
        except json.JSONDecodeError as e:
            raise ScenarioError(f"{ref}: not valid JSON ({e})") from e
        if not isinstance(data, dict):
            raise ScenarioError(f"{ref}: scenario must be a JSON object")
        return data
    if ref in BUILTIN_SCENARIOS:
        return json.loads(json.dumps(BUILTIN_SCENARIOS[ref]))
    raise ScenarioError(f"scenario {ref!r} is neither a file nor a built-in ({', '.join(sorted(BUILTIN_SCENARIOS))})")


def _parse_M(text: str) -> list[list[int]]:
    try:
        if text.strip().startswith("["):
            M = json.loads(text)
        else:
            v = [int(x) for x in text.replace(";", ",").split(",")]
            M = [v[:2], v[2:]]
        M = [[int(a) for a in row] for row in M]
    except (ValueError, TypeError) as e:
        raise ScenarioError(f"cannot parse --M {text!r}") from e
    if len(M) != 2 or any(len(r) != 2 for r in M):
        raise ScenarioError("--M must be 2x2")
    return M


def _parse_grid(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise ScenarioError(f"cannot parse --sgrid {text!r}") from e


def resolve(args: argparse.Namespace) -> dict:
    sc = _merge(DEFAULTS[args.command], load_scenario(args.scenario))
    sc["seed"] = int(args.seed if args.seed is not None else sc.get("seed", 0))
    torus = dict(sc.get("torus", {}))
    if args.theta is not None:
        torus["theta"] = float(args.theta)
    if args.M is not None:
        torus["M"] = _parse_M(args.M)
    if args.cutoff is not None:
        torus["cutoff"] = int(args.cutoff)
    if torus:
        sc["torus"] = torus
    if args.emit is not None:
        sc["emit"] = args.emit
    if args.kmax is not None:
        sc["kmax"] = int(args.kmax)
    if args.sgrid is not None:
        sc["sgrid"] = _parse_grid(args.sgrid)
    if getattr(args, "input", None):
        sc["input"] = str(args.input)
    for key in ("ladder", "radii"):
        if key in sc and any(b <= a for a, b in zip(sc[key], sc[key][1:])):
            raise ScenarioError(f"{key} must be strictly increasing")
    return sc


def make_group(spec: dict):
    from .groups import FiniteAbelianGroup, free_abelian, quotient_group, z2n

    kind = spec.get("kind")
    if kind == "free":
        return free_abelian(int(spec["rank"]))
    if kind == "finite":
        return FiniteAbelianGroup(tuple(int(m) for m in spec["moduli"]))
    if kind == "z2n":
        return z2n(int(spec["n"]))
    if kind == "quotient":
        return quotient_group(spec["M"])
    raise ScenarioError(f"unknown group spec {spec}")


def make_length(spec: dict, group):
    from .length import WordLength, clifford_length, parabola_pullback, rotated_frame_length, scalar_clifford_length

    kind = spec.get("kind")
    if kind == "word":
        return WordLength(group)
    if kind == "clifford":
        return clifford_length(group.rank)
    if kind == "scalar-clifford":
        return scalar_clifford_length()
    if kind == "rotated-frame":
        return rotated_frame_length()
    if kind == "parabola":
        return parabola_pullback()
    raise ScenarioError(f"unknown length spec {spec}")


def make_torus(spec: dict):
    import warnings

    from .torus import TorusConfig

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            return TorusConfig(float(spec["theta"]), tuple(tuple(r) for r in spec["M"]), int(spec["cutoff"]))
        except (KeyError, ValueError) as e:
            raise ScenarioError(f"bad torus spec {spec}: {e}") from e


# subcommands; each returns (result, violations, csv header, csv rows)

Outcome = tuple[dict, list[str], list[str], list[list]]


def cmd_verify_cocycle(sc: dict, pool) -> Outcome:
    from .groups import free_abelian, z2n
    from .twist import clifford_cocycle, scalar_pair, theta_bicharacter, verify_cocycle, verify_twisting_pair

    spec = sc["cocycle"]
    if spec.get("kind") == "clifford":
        n = int(spec["n"])
        group, cocycle = z2n(n), clifford_cocycle(n)
    elif spec.get("kind") == "theta":
        group, cocycle = free_abelian(2), theta_bicharacter(float(spec["theta"]))
    else:
        raise ScenarioError(f"unknown cocycle spec {spec}")
    finite = group.is_finite and group.order <= 64
    pair = scalar_pair(group, cocycle)
    rep = verify_twisting_pair(pair, tol=0.0 if finite else 1e-12, exhaustive_limit=64, samples=int(sc["samples"]), seed=sc["seed"])
    bad = verify_cocycle(cocycle, group) if finite else []
    violations = [f"{v.axiom} at {v.elements}: {v.residual:.3g}" for v in rep.violations[:20]]
    violations += [f"cocycle identity at {tuple(e.coords for e in t)}" for t in bad[:20]]
    result = {
        "group": group.name,
        "cocycle": cocycle.kind,
        "mode": "exhaustive" if finite else "sampled",
        "checked": rep.checked,
        "tolerance": rep.tol,
        "worst": rep.worst,
        "exact_cocycle_violations": len(bad),
        "violation_count": len(rep.violations),
    }
    return result, violations, ["axiom", "worst_residual"], [[k, v] for k, v in sorted(rep.worst.items())]


def _triple(sc: dict):
    from .triple import build_group_triple

    spec = sc["triple"]
    kind = spec.get("kind")
    if kind == "group":
        group = make_group(sc["group"])
        return build_group_triple(make_length(sc["length"], group), float(spec["radius"]), group)
    if kind in ("torus-crossed", "torus-equivariant", "torus-coefficient"):
        from .torus import build_torus_coefficient_triple, build_torus_crossed_triple, build_torus_equivariant_triple

        cfg = make_torus(sc.get("torus", DEFAULTS["torus-demo"]["torus"]))
        return {"torus-crossed": build_torus_crossed_triple, "torus-equivariant": build_torus_equivariant_triple,
                "torus-coefficient": build_torus_coefficient_triple}[kind](cfg)
    raise ScenarioError(f"unknown triple spec {spec}")


def cmd_build_triple(sc: dict, pool) -> Outcome:
    t = _triple(sc)
    inv = t.invariants()
    violations = [f"{k} residual {v:.3g}" for k, v in inv.items() if v > 1e-10]
    result = {"dim": t.dim, "parity": t.parity, "invariants": inv, "kind": t.meta.get("kind")}
    return result, violations, ["invariant", "residual"], [[k, v] for k, v in sorted(inv.items())]


def _spectrum_summary(eigs) -> dict:
    import numpy as np

    from .order import estimate_all

    nz = np.abs(eigs[np.abs(eigs) > 1e-12])
    out = {"dim": int(eigs.size), "zeros": int(eigs.size - nz.size), "min": float(eigs.min()), "max": float(eigs.max())}
    if nz.size >= 2:
        s = estimate_all(np.sort(1.0 / nz)[::-1])
        out["abscissa"] = {"mu_slope": s.mu_slope.value, "lambda_slope": s.lambda_slope.value, "trace_scan": s.trace_scan.value}
    return out


def cmd_spectrum(sc: dict, pool) -> Outcome:
    t = _triple(sc)
    eigs = t.eigenvalues()
    return _spectrum_summary(eigs), [], ["index", "eigenvalue"], [[i, v] for i, v in enumerate(eigs)]


def cmd_growth(sc: dict, pool) -> Outcome:
    import numpy as np

    from .groups import enumerate_ball
    from .length import growth_estimate, properness_check
    from .order import estimate_all

    group = make_group(sc["group"])
    length = make_length(sc["length"], group)
    radii = [float(r) for r in sc["radii"]]
    rep = growth_estimate(length, group, radii)
    ball = enumerate_ball(group, length, radii[-1])
    prop = properness_check(length, ball)
    coords = np.array([g.coords for g in ball]).reshape(len(ball), -1)
    eigs = np.abs(np.linalg.eigvalsh(length.matrices_batch(coords)).ravel())
    kept = eigs[(eigs > 0) & (eigs <= radii[-1])]
    est = estimate_all(np.sort(1.0 / kept)[::-1])
    values = [v for v in (est.mu_slope.value, est.lambda_slope.value) if math.isfinite(v)]
    abscissa = float(np.mean(values)) if values else est.trace_scan.value
    violations = [f"length vanishes off the identity at {c}" for c in prop.zero_violations[:20]]
    result = {
        "growth": rep.slope,
        "window": rep.window,
        "residual": rep.residual,
        "flags": rep.flags,
        "m_ell_abscissa": abscissa,
        "estimators": {"mu_slope": est.mu_slope.value, "lambda_slope": est.lambda_slope.value, "trace_scan": est.trace_scan.value},
        "gap": abs(abscissa - rep.slope),
    }
    return result, violations, ["radius", "count"], [[r, c] for r, c in zip(rep.radii, rep.counts)]


def _summability_rung(sc: dict) -> tuple[Callable, bool, float]:
    """(rung builder, doubled, growth) for the scenario."""
    import numpy as np

    from .triple import group_crossed_rung, growth_exponent

    coeff = sc["coefficient"]
    if coeff.get("kind") == "group-triple":
        cg = make_group(coeff["group"])
        group = make_group(sc["group"])
        length = make_length(sc["length"], group)
        build = group_crossed_rung(make_length(coeff["length"], cg), cg, length, group)
        # an odd coefficient (group triple) gives the doubled even construction
        return build, True, growth_exponent(length, group, max(sc["ladder"]))
    if coeff.get("kind") == "torus":
        from .torus import build_torus_coefficient_triple, torus_length

        cfg = make_torus(sc["torus"])
        L = torus_length(cfg)
        le = np.concatenate([np.linalg.eigvalsh(L(k)) for k in cfg.dual.elements()])

        def build(R: float):
            t = build_torus_coefficient_triple(cfg, int(R))
            return t.eigenvalues(), le, 2 * math.pi * float(R)

        return build, False, 0.0
    raise ScenarioError(f"unknown coefficient spec {coeff}")


def _summability(sc: dict, pool) -> Outcome:
    from .triple import summability_report

    build, doubled, growth = _summability_rung(sc)
    ladder = [float(r) for r in sc["ladder"]]
    cache = dict(zip(ladder, pool(build, ladder)))
    rep = summability_report(lambda R: cache[R], ladder, doubled, growth, float(sc.get("slack", 0.25)))
    violations = [f"counting sandwich fails at R={r.radius}" for r in rep.rungs if not r.sandwich.holds]
    if not rep.bound_holds:
        violations.append(f"abscissa {rep.product_abscissa:.4g} exceeds bound {rep.bound:.4g} + slack")
    rows = [[r.radius, r.kept, r.abscissa, r.coefficient_abscissa, r.estimate.mu_slope.value, r.estimate.lambda_slope.value,
             r.estimate.trace_scan.value, r.sandwich.holds] for r in rep.rungs]
    result = {
        "coefficient_abscissa": rep.coefficient_abscissa,
        "product_abscissa": rep.product_abscissa,
        "growth": rep.growth,
        "bound": rep.bound,
        "bound_holds": rep.bound_holds,
        "route": rep.route,
        "sandwich_holds": all(r.sandwich.holds for r in rep.rungs),
    }
    header = ["radius", "kept", "abscissa", "coefficient_abscissa", "mu_slope", "lambda_slope", "trace_scan", "sandwich"]
    return result, violations, header, rows


def cmd_summability(sc: dict, pool) -> Outcome:
    return _summability(sc, pool)


def cmd_regularity_sweep(sc: dict, pool) -> Outcome:
    from .regularity import (
        DeltaFactor,
        closed_form_check,
        group_regularity_sweep,
        lipschitz_abs_check,
        sobolev_order_probe,
    )
    from .triple import build_group_triple

    group = make_group(sc["group"])
    length = make_length(sc["length"], group)
    gens = group.generators()
    kmax = int(sc["kmax"])
    if not 1 <= kmax <= 3:
        raise ScenarioError("kmax must be between 1 and 3")
    ladder = [float(r) for r in sc["ladder"]]
    sweeps = list(pool(lambda g: group_regularity_sweep(length, group, [g], kmax, ladder), gens))
    rows = [row for s in sweeps for row in s.rows]
    tech = sweeps[0].tech
    t = build_group_triple(length, float(sc["closed_form_radius"]), group)
    closed = closed_form_check(t, gens, kmax) if tech.holds else None
    probe = sobolev_order_probe(t.dirac, DeltaFactor.from_dirac(t.dirac), 1, sc["sgrid"])
    lip = [lipschitz_abs_check(int(d), int(sc["lipschitz"]["trials"]), sc["seed"]) for d in sc["lipschitz"]["dims"]]
    ratio = max(s.max_ratio() for s in sweeps)
    violations = []
    if tech.holds and ratio >= 1.05:
        violations.append(f"commutation condition holds but sweep ratio is {ratio:.4g}")
    if closed is not None and not closed["exact"]:
        violations.append(f"closed form mismatch {closed['max_deviation']:.3g}")
    if probe.max_norm > 1:
        violations.append(f"bounded transform probe {probe.max_norm:.6g} > 1")
    for r in lip:
        if r.dim == 1 and r.max_ratio > 1:
            violations.append(f"dim-1 Lipschitz ratio {r.max_ratio:.6g} > 1")
    result = {
        "tech_condition": {"max_commutator": tech.max_commutator, "holds": tech.holds, "worst": tech.worst},
        "flags": sweeps[0].flags,
        "max_ratio": ratio,
        "plateau": ratio < 1.05,
        "closed_form": closed,
        "bounded_transform_probe": {"s_grid": probe.s_grid, "norms": probe.norms},
        "lipschitz": [{"dim": r.dim, "trials": r.trials, "max_ratio": r.max_ratio, "per_log_dim": r.per_log_dim} for r in lip],
        "ladder": ladder,
        "kmax": kmax,
    }
    header = ["generator", "k", "radius", "delta_k_lambda", "delta_k_commutator"]
    return result, violations, header, [[list(r.generator), r.k, r.radius, r.lam, r.commutator] for r in rows]


def cmd_covering_analyze(sc: dict, pool) -> Outcome:
    from .coverings import (
        EXAMPLES,
        covering_covariant_pair,
        elwood_freeness_check,
        phi_report_for_action,
        rank1_regular_check,
        spectral_decompose,
        subspace_product_audit,
    )
    from .triple import intertwining_check
    from .twist import frame_to_pair

    name = sc["covering"]
    if name not in EXAMPLES:
        raise ScenarioError(f"unknown covering {name!r} ({', '.join(sorted(EXAMPLES))})")
    action = EXAMPLES[name]()
    subspaces = spectral_decompose(action)
    audit = subspace_product_audit(action, subspaces)
    elwood = elwood_freeness_check(action)
    rank1 = rank1_regular_check(action, subspaces, seed=sc["seed"])
    violations = [] if audit.ok() else ["spectral subspaces do not multiply by characters"]
    result: dict = {
        "covering": action.name,
        "dim": action.dim,
        "subspace_dims": {str(s.character.coords): s.dim for s in subspaces},
        "elwood": {"free": elwood.free, "rank": elwood.rank, "target": elwood.target},
        "rank1_regular": rank1.regular,
        "verdict": "rank-1 regular" if rank1.regular else "not rank-1 regular",
    }
    if rank1.regular:
        frame = rank1.frame
        phi = phi_report_for_action(action, frame, int(sc["samples"]), sc["seed"])
        pair = frame_to_pair(frame)
        cov = covering_covariant_pair(action, frame)
        els = frame.group.elements()
        w = intertwining_check(cov, pair, els, pair.algebra.test_elements(), els)
        result["phi"] = {"multiplicativity": phi.multiplicativity, "involution": phi.involution, "equivariance": phi.equivariance,
                         "dimension_ok": phi.dimension_ok, "rank": phi.rank, "ok": phi.ok()}
        result["intertwining"] = {"unitarity": w.unitarity, "coefficient": w.coefficient, "translation": w.translation, "ok": w.ok()}
        if not phi.ok():
            violations.append("Phi fails to be an equivariant *-isomorphism")
        if not w.ok():
            violations.append("W fails to intertwine")
    rows = [[list(v.character), v.dim, v.invertible, v.common_kernel] for v in rank1.characters]
    return result, violations, ["character", "dim", "invertible", "common_kernel"], rows


def cmd_torus_demo(sc: dict, pool) -> Outcome:
    from .torus import (
        build_torus_crossed_triple,
        compare_crossed,
        compare_equivariant,
        torus_covariance,
        torus_intertwining,
        torus_phi,
    )

    cfg = make_torus(sc["torus"])
    emit = sc["emit"]
    if emit == "spectrum":
        eigs = build_torus_crossed_triple(cfg).eigenvalues()
        return _spectrum_summary(eigs), [], ["index", "eigenvalue"], [[i, v] for i, v in enumerate(eigs)]
    if emit == "rep-check":
        crossed, equiv = compare_crossed(cfg), compare_equivariant(cfg)
        w, cov, phi = torus_intertwining(cfg), torus_covariance(cfg), torus_phi(cfg, seed=sc["seed"])
        checks = {
            "crossed_dirac": crossed.dirac,
            "crossed_representation": crossed.representation,
            "equivariant_dirac": equiv.dirac,
            "equivariant_representation": equiv.representation,
            "w_unitarity": w.unitarity,
            "w_coefficient": w.coefficient,
            "w_translation": w.translation,
            "phi_multiplicativity": phi.multiplicativity,
            "phi_involution": phi.involution,
            "phi_equivariance": phi.equivariance,
        }
        violations = [f"{k} {v:.3g} > 1e-11" for k, v in checks.items() if v > 1e-11]
        if not cov.ok:
            violations.append("covariant pair relations fail on the interior")
        if not phi.dimension_ok:
            violations.append("Phi is not bijective on the index lattice")
        result = {"checks": checks, "covariance_ok": cov.ok, "phi_bijective": phi.dimension_ok,
                  "crossed_dim": crossed.dim, "equivariant_dim": equiv.dim}
        return result, violations, ["check", "value"], [[k, v] for k, v in checks.items()]
    if emit == "regularity":
        from .regularity import group_action_order_check, torus_action_ladder

        R = cfg.cutoff
        ladder = [R, R + 2, R + 4]
        rep = group_action_order_check(torus_action_ladder(cfg, ladder, coefficients=True), int(sc["kmax"]), sc["sgrid"])
        rows = [[c.name, *c.evidence.values, c.evidence.slope, c.evidence.passed] for c in rep.checks]
        result = {"passed": rep.passed, "ladder": ladder, "kmax": sc["kmax"], "s_grid": sc["sgrid"]}
        violations = [f"order evidence fails for {n}" for n in rep.failures()]
        return result, violations, ["operator", "R1", "R2", "R3", "slope", "passed"], rows
    if emit == "summability":
        R = cfg.cutoff
        sub = {"coefficient": {"kind": "torus"}, "torus": sc["torus"], "ladder": [2 * R, 3 * R, 4 * R], "slack": 0.25}
        return _summability(sub, pool)
    raise ScenarioError(f"unknown --emit {emit!r}")


def _read_sequence(path: str) -> tuple[list[float], int, str]:
    """Values from a file: one float per line, or a CSV spectrum dump with an eigenvalue column."""
    p = Path(path)
    if not p.is_file():
        raise ScenarioError(f"input {path!r} not found")
    text = p.read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines and "," in lines[0]:
        reader = csv.reader(lines)
        header = next(reader)
        col = header.index("eigenvalue") if "eigenvalue" in header else len(header) - 1
        vals = [abs(float(r[col])) for r in reader]
        nz = [v for v in vals if v > 0]
        return [1.0 / v for v in nz], len(vals) - len(nz), "spectrum"
    try:
        vals = [float(ln) for ln in lines]
    except ValueError as e:
        raise ScenarioError(f"{path}: {e}") from e
    return vals, 0, "sequence"


def cmd_order_estimate(sc: dict, pool) -> Outcome:
    import numpy as np

    from .order import estimate_all

    dropped, source = 0, "generated"
    if "input" in sc:
        vals, dropped, source = _read_sequence(sc["input"])
        seq = np.sort(np.asarray(vals, dtype=float))[::-1]
    else:
        spec = sc["sequence"]
        if spec.get("kind") != "power":
            raise ScenarioError(f"unknown sequence spec {spec}")
        n = np.arange(int(spec["N"]), dtype=float)
        seq = (n + 1.0) ** (-1.0 / float(spec["d"]))
    try:
        s = estimate_all(seq)
    except ValueError as e:
        raise ScenarioError(str(e)) from e
    ests = {"mu_slope": s.mu_slope, "lambda_slope": s.lambda_slope, "trace_scan": s.trace_scan}
    result = {
        "source": source,
        "terms": s.terms,
        "dropped_zeros": dropped,
        "estimates": {k: e.value for k, e in ests.items()},
        "spread": s.spread,
        "consensus": s.consensus,
    }
    rows = [[k, e.value, e.window[0], e.window[1], e.residual, ";".join(e.flags)] for k, e in ests.items()]
    return result, [], ["estimator", "value", "window_lo", "window_hi", "residual", "flags"], rows


COMMANDS: dict[str, Callable[[dict, Callable], Outcome]] = {
    "verify-cocycle": cmd_verify_cocycle,
    "build-triple": cmd_build_triple,
    "spectrum": cmd_spectrum,
    "growth": cmd_growth,
    "summability": cmd_summability,
    "regularity-sweep": cmd_regularity_sweep,
    "covering-analyze": cmd_covering_analyze,
    "torus-demo": cmd_torus_demo,
    "order-estimate": cmd_order_estimate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twistedtriples", description="Spectral triples on twisted crossed products.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", help="JSON scenario file or built-in scenario name")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, help="random seed (u64)")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        p.add_argument("--theta", type=float)
        p.add_argument("--M", help="2x2 integer matrix: 'a,b,c,d' or JSON")
        p.add_argument("--cutoff", type=int)
        p.add_argument("--emit", choices=("spectrum", "rep-check", "regularity", "summability"))
        p.add_argument("--kmax", type=int)
        p.add_argument("--sgrid", help="comma-separated s values")
        if name == "order-estimate":
            p.add_argument("--input", help="sequence file (one float per line) or CSV spectrum dump")
    return parser


def _limit_threads(n: int):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def run(args: argparse.Namespace) -> int:
    from concurrent.futures import ThreadPoolExecutor

    from .triple import SizeError

    try:
        sc = resolve(args)
        with ThreadPoolExecutor(max_workers=max(1, args.threads)) as ex:
            result, violations, header, rows = COMMANDS[args.command](sc, lambda f, xs: list(ex.map(f, xs)))
    except (ScenarioError, SizeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    report = {
        "tool": "twistedtriples",
        "version": __version__,
        "subcommand": args.command,
        "scenario_hash": scenario_hash(args.command, sc),
        "scenario": sc,
        "result": result,
        "violations": violations,
        "status": "violation" if violations else "ok",
    }
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{args.command}.json").write_text(dumps(report))
    (out / f"{args.command}.csv").write_text(_csv_text(header, rows))
    print(f"{args.command}: {report['status']} ({out / (args.command + '.json')})")
    for v in violations:
        print(f"  violation: {v}")
    return 1 if violations else 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    _limit_threads(max(1, args.threads))
    return run(args)
