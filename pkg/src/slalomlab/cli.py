"""Batch front door: load family specs, dispatch one operation, emit a
deterministic JSON report, a CSV of tabular rows, and figures.

Exit codes: 0 on success, 2 when a checked property fails (a verified
finding), 1 on input errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Callable, Optional

from . import chaincond, construct, forcing, measure, omega, plots
from .families import (
    ConfigData,
    ConfigError,
    family_digest,
    parse_config,
    serialize_slalom,
)
from .omega import OmegaPoint, SetGen
from .report import build_report, frac_str, report_json, write_csv
from .slaloms import Slalom, SlalomError, classify

USAGE_ERROR = 1
FINDING_ERROR = 2


class RunOutput:
    def __init__(self, results, rows=None, row_header=None, figures=None, findings=None):
        self.results = results
        self.rows = rows or []
        self.row_header = row_header or []
        self.figures = figures or []  # (suffix, render callable taking a path)
        self.findings = findings or []


def _opt(config: ConfigData, args, key: str, default=None):
    cli_val = getattr(args, key.replace("-", "_"), None)
    if cli_val is not None:
        return str(cli_val)
    return config.run.get(key, default)


def _require(config: ConfigData, args, key: str) -> str:
    v = _opt(config, args, key)
    if v is None:
        raise ConfigError(f"missing required option {key!r}")
    return v


def _int_opt(config, args, key, default):
    v = _opt(config, args, key, None)
    return int(v) if v is not None else default


def _members_of(config: ConfigData, ref: str) -> list[tuple[str, Slalom]]:
    spec = config.family(ref)
    return [(f"{spec.name}.{m.name}", m.slalom) for m in spec.members]


def _window_from(config: ConfigData, spec: str) -> OmegaPoint:
    """Window spec 'ref:level' takes the member's trace below the level;
    'empty:level' is the empty trace."""
    if ":" not in spec:
        raise ConfigError(f"window spec {spec!r} needs 'ref:level'")
    ref, lvl = spec.rsplit(":", 1)
    level = int(lvl)
    if ref == "empty":
        return OmegaPoint((0,) * level)
    return OmegaPoint(config.resolve_member(ref).prefix_masks(level))


def _condition_from(config: ConfigData, args) -> forcing.QCondition:
    ref = _require(config, args, "set")
    n = int(_require(config, args, "window-level"))
    s = config.resolve_member(ref)
    if s.horizon < n:
        s = s.padded(n)
    return forcing.QCondition(s, OmegaPoint(s.prefix_masks(n)))


# -- handlers ------------------------------------------------------------------


def run_classify(config, args):
    members = _members_of(config, _require(config, args, "family"))
    results = {}
    rows = []
    for name, s in members:
        verdicts = classify(s)
        results[name] = [
            {"ideal": v.ideal, "status": v.status.value, "certificate": v.certificate}
            for v in verdicts]
        for v in verdicts:
            rows.append([name, v.ideal, v.status.value,
                         frac_str(s.partial_sum())])
    return RunOutput(results, rows, ["member", "ideal", "status", "partial_sum"],
                     figures=[("density", lambda p, m=members: plots.density_figure(m, p))])


def run_localize(config, args):
    s = config.resolve_member(_require(config, args, "slalom"))
    pref = _require(config, args, "paths")
    if pref not in config.paths:
        raise ConfigError(f"no path family {pref!r}")
    from .slaloms import localizes
    verdicts = localizes(s, config.paths[pref])
    rows = [[i, v.status.value, v.witness_level, " ".join(map(str, v.violations))]
            for i, v in enumerate(verdicts)]
    return RunOutput({"verdicts": [v.status.value for v in verdicts]},
                     rows, ["path", "status", "witness_level", "violations"])


def run_omega_enum(config, args):
    depth = _int_opt(config, args, "depth", 3)
    points = omega.enum_omega(depth)
    rows = [[n, omega.traces_at_level(n)] for n in range(depth + 1)]
    ok = len(points) == omega.omega_count(depth)
    return RunOutput({"depth": depth, "count": len(points),
                      "formula_count": omega.omega_count(depth)},
                     rows, ["level", "points"],
                     findings=[] if ok else ["materialized count disagrees with formula"])


def run_fact_check(config, args):
    depth = _int_opt(config, args, "depth", 6)
    trials = _int_opt(config, args, "trials", 25)
    seed = _int_opt(config, args, "seed", 2016)
    rep = omega.fact_check(depth=depth, trials=trials, seed=seed)
    return RunOutput(rep, findings=list(rep["failures"]))


def run_meet(config, args):
    positives = [config.resolve_member(r) for r in _require(config, args, "positives").split()]
    negatives = [SetGen(config.resolve_member(r))
                 for r in _opt(config, args, "negatives", "").split()]
    wspec = _opt(config, args, "window")
    window = _window_from(config, wspec) if wspec else None
    depth = _int_opt(config, args, "depth", 10)
    verdict = omega.meet_infinitude(positives, window, negatives)
    counts = [(d, omega.count_meet_points(positives, window, negatives, d))
              for d in range(max(2, depth - 4), depth + 1)]
    findings = []
    if verdict.kind == "infinite":
        if not all(a[1] < b[1] for a, b in zip(counts, counts[1:])):
            findings.append("infinite verdict but the point count stalls")
    elif verdict.kind == "finite":
        top = omega.count_meet_points(positives, window, negatives, verdict.bound)
        if any(c != top for d, c in counts if d >= verdict.bound):
            findings.append("finite verdict but points appear above the bound")
    else:
        if any(c != 0 for _, c in counts):
            findings.append("empty verdict but points exist")
    results = {"verdict": verdict.kind,
               "detail": getattr(verdict, "reason", ""),
               "bound": getattr(verdict, "bound", None),
               "counts": {str(d): str(c) for d, c in counts}}
    return RunOutput(results, [[d, str(c)] for d, c in counts],
                     ["depth", "points"], findings=findings)


def run_pibase(config, args):
    members = [s for _, s in _members_of(config, _require(config, args, "family"))]
    depth = _int_opt(config, args, "depth", 3)
    elements = omega.pibase_enum(members, depth)
    rows = [[i, el.window.level, serialize_slalom(el.set_part)]
            for i, el in enumerate(elements)]
    return RunOutput({"count": len(elements)}, rows,
                     ["index", "window_level", "set_part"])


def run_measure(config, args):
    mode = _opt(config, args, "mode", "containment")
    nspec = _opt(config, args, "name", "generic")
    name = measure.SlalomName.generic() if nspec == "generic" \
        else measure.SlalomName.windowed(_window_from(config, nspec))
    if mode == "containment":
        w = config.resolve_member(_require(config, args, "w"))
        mv = measure.containment_measure(w, name)
    elif mode == "term":
        positives = [config.resolve_member(r)
                     for r in _opt(config, args, "positives", "").split()]
        negatives = [config.resolve_member(r)
                     for r in _opt(config, args, "negatives", "").split()]
        mv = measure.term_measure(positives, negatives, name)
    elif mode == "nu":
        w = config.resolve_member(_require(config, args, "w"))
        point = _window_from(config, _require(config, args, "window"))
        (_, diff, bound) = measure.delta_compare(w, [point])[0]
        val = measure.containment_measure(w, measure.SlalomName.windowed(point))
        return RunOutput({"value": frac_str(val.value),
                          "nu_minus_delta": frac_str(diff),
                          "tail_bound": frac_str(bound)})
    elif mode == "mu":
        positives = [config.resolve_member(r)
                     for r in _opt(config, args, "positives", "").split()]
        negatives = [config.resolve_member(r)
                     for r in _opt(config, args, "negatives", "").split()]
        k = _int_opt(config, args, "series-length", 64)
        res = measure.mu(positives, negatives, k)
        return RunOutput({"value": frac_str(res.value.value),
                          "lo": frac_str(res.value.lo),
                          "hi": frac_str(res.value.hi),
                          "strictly_positive": res.strictly_positive})
    else:
        raise ConfigError(f"unknown measure mode {mode!r}")
    return RunOutput({"value": frac_str(mv.value), "lo": frac_str(mv.lo),
                      "hi": frac_str(mv.hi)})


def run_converge(config, args):
    w = config.resolve_member(_require(config, args, "w"))
    depth = _int_opt(config, args, "depth", 8)
    rows = []
    findings = []
    fig_rows = []
    for m in range(depth + 1):
        prefix = OmegaPoint(w.prefix_masks(m))
        variants = [("minimal", prefix)]
        for j in range(m):
            free = (~w.masks[j]) & ((1 << (1 << j)) - 1)
            if free & (free - 1):  # superset stays proper
                masks = list(prefix.masks)
                masks[j] |= free & -free
                variants.append((f"superset@{j}", OmegaPoint(tuple(masks))))
            if w.masks[j]:
                masks = list(prefix.masks)
                masks[j] &= w.masks[j] - 1  # drop the lowest column: breaks the gate
                variants.append((f"broken@{j}", OmegaPoint(tuple(masks))))
                break
        for kind, point in variants:
            (pt, diff, bound) = measure.delta_compare(w, [point])[0]
            on = all(w.mask(j) & ~pt.masks[j] == 0 for j in range(pt.level))
            rows.append([m, kind, int(on), frac_str(diff), frac_str(bound)])
            fig_rows.append((m, int(on), diff))
            if on and -diff > bound:
                findings.append(f"defect at level {m} exceeds the tail bound")
            if not on and diff != 0:
                findings.append(f"nonzero measure off the generator at level {m}")
    return RunOutput({"windows": depth + 1, "checked": len(rows)},
                     rows, ["level", "trace", "on_generator", "nu_minus_delta", "tail_bound"],
                     figures=[("convergence", lambda p, r=fig_rows: plots.convergence_figure(r, p))],
                     findings=findings)


def run_destruct_cert(config, args):
    w = config.resolve_member(_require(config, args, "w"))
    eps_list = [Fraction(e) for e in _require(config, args, "eps").split()]
    rows = []
    findings = []
    for eps in eps_list:
        cert = measure.destructibility_certificate(w, eps)
        rows.append([frac_str(eps), cert.level, frac_str(cert.bound)])
        if not cert.bound < eps:
            findings.append(f"certificate bound fails for eps={eps}")
    return RunOutput({"certificates": len(rows)}, rows,
                     ["eps", "level", "bound"], findings=findings)


def run_borel_cantelli(config, args):
    w = config.resolve_member(_require(config, args, "w"))
    top = _int_opt(config, args, "levels", w.horizon)
    pairs = [(m, measure.borel_cantelli_bound(w, m)) for m in range(top + 1)]
    findings = []
    if any(a[1] < b[1] for a, b in zip(pairs, pairs[1:])):
        findings.append("tail bounds are not monotone decreasing")
    return RunOutput({"bounds": {str(m): frac_str(b) for m, b in pairs}},
                     [[m, frac_str(b)] for m, b in pairs], ["level", "bound"],
                     figures=[("decay", lambda p, d=pairs: plots.decay_figure(d, p))],
                     findings=findings)


def _terms_from(config: ConfigData, spec: str) -> list[omega.AlgebraTerm]:
    terms = []
    for token in spec.split():
        if token.startswith("^"):
            base = omega.AlgebraTerm.of_slalom(config.resolve_member(token[1:]))
            terms.append(base.complement_of_meet())
        else:
            terms.append(omega.AlgebraTerm.of_slalom(config.resolve_member(token)))
    return terms


def run_kelley(config, args):
    terms = _terms_from(config, _require(config, args, "terms"))
    max_len = _int_opt(config, args, "max-len", 4)
    value = chaincond.kelley_number(terms, max_len)
    return RunOutput({"intersection_number": frac_str(value), "max_len": max_len})


def run_linked_partition(config, args):
    members = [s for _, s in _members_of(config, _require(config, args, "family"))]
    arity = _int_opt(config, args, "arity", 2)
    part = chaincond.linked_partition(members, arity)
    findings = []
    rows = []
    for key, idx in part.buckets().items():
        bad = chaincond.verify_linked_bucket([members[i] for i in idx], key, arity)
        rows.append([key.cutoff, len(idx), len(bad)])
        for combo in bad:
            findings.append(f"bucket at cutoff {key.cutoff}: union of {combo} saturates")
    return RunOutput({"buckets": len(part.buckets())}, rows,
                     ["cutoff", "members", "violations"], findings=findings)


def run_star_refine(config, args):
    members = [s for _, s in _members_of(config, _require(config, args, "family"))]
    cutoff = _int_opt(config, args, "cutoff", 1)
    horizon = _int_opt(config, args, "horizon", members[0].horizon if members else 8)
    result = chaincond.star_refine(members, cutoff, horizon)
    findings = chaincond.verify_star_trace(members, result, horizon)
    if result.union.first_saturated() is not None:
        findings.append("refined union saturates a level")
    rows = [[st.n, st.k, st.k_end, " ".join(map(str, st.q_next))]
            for st in result.trace.steps]
    return RunOutput({"indices": list(result.indices),
                      "union": serialize_slalom(result.union)},
                     rows, ["n_i", "k_i", "k_end", "survivors"], findings=findings)


def run_diagonal(config, args):
    members = [s for _, s in _members_of(config, _require(config, args, "family"))]
    rep = chaincond.diagonal_witness(members)
    return RunOutput({"path": list(rep.path.values),
                      "escapes": [list(e) for e in rep.escapes]})


def run_centered_decomp(config, args):
    bound = config.resolve_member(_require(config, args, "bound"))
    members = [s for _, s in _members_of(config, _require(config, args, "family"))]
    depth = _int_opt(config, args, "depth", 3)
    windows = omega.enum_omega(depth)
    findings = []
    try:
        dec = chaincond.centered_decomposition(bound, members, windows)
        results = {"classes": len(dec.classes), "checked_subsets": dec.checked_subsets}
    except chaincond.CentrednessFailure as e:
        findings.append(str(e))
        results = {"classes": 0}
    return RunOutput(results, findings=findings)


def run_chain_step(config, args):
    fam_ref = _opt(config, args, "family")
    members = [s for _, s in _members_of(config, fam_ref)] if fam_ref else []
    pref = _require(config, args, "path")
    if pref not in config.paths:
        raise ConfigError(f"no path family {pref!r}")
    f_beta = config.paths[pref][0]
    horizon = _int_opt(config, args, "horizon", f_beta.horizon)
    report = construct.chain_step(members, f_beta, horizon)
    findings = construct.verify_chain_report(members, f_beta, report)
    rows = [[w, frac_str(s), frac_str(Fraction(w, 1 << w))]
            for w, s in enumerate(report.window_sums)]
    fig_rows = [(w, s, Fraction(w, 1 << w)) for w, s in enumerate(report.window_sums)]
    return RunOutput({"cutoff": report.cutoff,
                      "windows": report.windows,
                      "merged": serialize_slalom(report.merged),
                      "extended": serialize_slalom(report.extended)},
                     rows, ["window", "sum", "bound"],
                     figures=[("windows", lambda p, r=fig_rows: plots.window_figure(r, p))],
                     findings=findings)


def run_independent(config, args):
    count = _int_opt(config, args, "count", 3)
    universe = _int_opt(config, args, "universe", 8 << count)
    witnesses = _int_opt(config, args, "witnesses", 1)
    sets = construct.independent_subsets(count, universe, witnesses)
    findings = []
    for pattern in range(1 << count):
        hits = sum(1 for x in range(universe)
                   if all(((x in sets[i]) == bool(pattern >> i & 1)) for i in range(count)))
        if hits < witnesses:
            findings.append(f"pattern {pattern:0{count}b} has only {hits} witnesses")
    return RunOutput({"sets": [list(s) for s in sets]}, findings=findings)


def run_s_alpha(config, args):
    horizon = _int_opt(config, args, "horizon", 8)
    sel_spec = _opt(config, args, "selector", "evens")
    if sel_spec == "evens":
        selector = [n for n in range(horizon) if n % 2 == 0]
    elif sel_spec == "odds":
        selector = [n for n in range(horizon) if n % 2 == 1]
    else:
        selector = [int(v) for v in sel_spec.split()]
    bp = construct.halved_block_pair(horizon)
    s = construct.build_S_alpha(bp, selector)
    findings = []
    from .slaloms import table_subset
    if not table_subset(s, bp.base):
        findings.append("selection left the base slalom")
    return RunOutput({"slalom": serialize_slalom(s)}, findings=findings)


def run_independence_check(config, args):
    horizon = _int_opt(config, args, "horizon", 16)
    count = _int_opt(config, args, "count", 3)
    positives = [int(v) for v in _opt(config, args, "pos-indices", "").split()]
    negatives = [int(v) for v in _opt(config, args, "neg-indices", "").split()]
    bp = construct.halved_block_pair(horizon)
    cycle = 1 << count
    selectors = [tuple(n for n in range(2, horizon) if ((n - 2) % cycle) >> i & 1)
                 for i in range(count)]
    alphas = [construct.build_S_alpha(bp, sel) for sel in selectors]
    wit = construct.independence_check(bp, alphas, selectors, positives, negatives,
                                       horizon)
    return RunOutput({"witnesses": len(wit.points),
                      "common": list(wit.common)})


def run_bounding_search(config, args):
    members = [s for _, s in _members_of(config, _require(config, args, "family"))]
    res = construct.bounding_search(members)
    if res.bound is not None:
        return RunOutput({"bound": serialize_slalom(res.bound)})
    return RunOutput({"bound": None,
                      "saturation_level": res.witness.level,
                      "indices": list(res.witness.indices)})


def run_cohen_project(config, args):
    p = _condition_from(config, args)
    findings = []
    try:
        sigma = forcing.cohen_project(p, validate=True)
        results = {"entries": {str(m): i for m, i in sigma.entries}}
    except forcing.ProjectionDisagreement as e:
        findings.append(str(e))
        results = {"entries": None}
    return RunOutput(results, findings=findings)


def run_verify_projection(config, args):
    rep = forcing.verify_projection(
        window_max=_int_opt(config, args, "window-max", 4),
        cohen_top=_int_opt(config, args, "cohen-top", 5),
        support_end=_int_opt(config, args, "support-end", 5))
    return RunOutput({"conditions": rep.conditions, "pairs": rep.pairs_checked,
                      "lifts": rep.lifts_checked},
                     findings=list(rep.findings))


def run_mathias_embed(config, args):
    p = _condition_from(config, args)
    mc = forcing.mathias_embed(p)
    rows = [[j, bin(mc.side_mask(j))] for j in range(mc.base_exponent,
                                                     max(mc.excluded.horizon,
                                                         mc.base_exponent + 1))]
    findings = []
    if not forcing.mathias_range_check(mc):
        findings.append("image misses the range characterization")
    findings.extend(mc.poset_violations(mc.excluded.horizon))
    return RunOutput({"stem": list(mc.stem), "base": mc.base},
                     rows, ["level", "side_mask"], findings=findings)


def run_mathias_order_check(config, args):
    rep = forcing.mathias_order_check(
        window_max=_int_opt(config, args, "window-max", 3),
        support_end=_int_opt(config, args, "support-end", 4))
    return RunOutput({"conditions": rep.conditions, "pairs": rep.pairs_checked},
                     findings=list(rep.findings))


HANDLERS: dict[str, Callable] = {
    "classify": run_classify,
    "localize": run_localize,
    "omega-enum": run_omega_enum,
    "fact-check": run_fact_check,
    "meet": run_meet,
    "pibase": run_pibase,
    "measure": run_measure,
    "converge": run_converge,
    "destruct-cert": run_destruct_cert,
    "borel-cantelli": run_borel_cantelli,
    "kelley": run_kelley,
    "linked-partition": run_linked_partition,
    "star-refine": run_star_refine,
    "diagonal": run_diagonal,
    "centered-decomp": run_centered_decomp,
    "chain-step": run_chain_step,
    "independent": run_independent,
    "s-alpha": run_s_alpha,
    "independence-check": run_independence_check,
    "bounding-search": run_bounding_search,
    "cohen-project": run_cohen_project,
    "verify-projection": run_verify_projection,
    "mathias-embed": run_mathias_embed,
    "mathias-order-check": run_mathias_order_check,
}

INPUT_ERRORS = (ConfigError, SlalomError, omega.OmegaError, measure.MeasureError,
                chaincond.ChainError, construct.ConstructError, forcing.ForcingError,
                ValueError, KeyError, OSError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slalomlab",
        description="Exact finite-horizon slalom combinatorics, batch mode.")
    parser.add_argument("subcommand", choices=sorted(HANDLERS))
    parser.add_argument("--config", required=True, help="sectioned key/value config file")
    parser.add_argument("--depth", type=int, default=None)
    parser.add_argument("--horizon", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="report JSON path; CSV and "
                        "figures are written alongside it")
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    started = time.perf_counter()
    try:
        config = parse_config(Path(args.config).read_text())
        out = HANDLERS[args.subcommand](config, args)
    except forcing.ProjectionDisagreement as e:
        print(f"finding: {e}", file=sys.stderr)
        return FINDING_ERROR
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR
    runtime = time.perf_counter() - started
    digests = {name: family_digest(spec) for name, spec in config.families.items()}
    report = build_report(args.subcommand,
                          {"config_digests": digests,
                           "seed": args.seed,
                           "options": dict(config.run)},
                          out.results, out.findings, runtime)
    text = report_json(report)
    if args.out:
        out_path = Path(args.out)
        out_path.write_text(text + "\n")
        written = [str(out_path)]
        if out.rows:
            csv_path = out_path.with_suffix(".csv")
            write_csv(str(csv_path), out.row_header, out.rows)
            written.append(str(csv_path))
        for suffix, render in out.figures:
            fig_path = out_path.with_name(f"{out_path.stem}_{suffix}.png")
            written.append(render(str(fig_path)))
        print("\n".join(written))
    else:
        print(text)
    for f in out.findings:
        print(f"finding: {f}", file=sys.stderr)
    return FINDING_ERROR if out.findings else 0


if __name__ == "__main__":
    sys.exit(main())
