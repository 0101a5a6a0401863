"""Command-line interface: ``seqbell {state,protocol,sweep,lhv-check,loophole}``.

Exit codes: 0 success, 2 malformed input, 3 domain error, 4 degenerate protocol.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import bell, lhv, optics, qcore
from .errors import DegenerateProtocol, SeqBellError
from .fileio import (
    ConfigError,
    dump_config,
    get_bool,
    get_float,
    get_int,
    load_config,
    parse_config,
    read_matrix,
    read_table,
    to_json,
)

EXIT_OK, EXIT_PARSE, EXIT_DOMAIN, EXIT_DEGENERATE = 0, 2, 3, 4
CSV_VERSION_LINE = "# seqbell-csv v1"
CSV_COLUMNS = ("alpha_sq", "p1", "constraint_ok", "pre_chsh", "pass_prob", "post_chsh", "lhv_pre", "lhv_post")

DEFAULT_ALPHA_SQ = 0.8
DEFAULT_P1 = 0.7


# --- building inputs ---------------------------------------------------------------


def _params(cfg) -> optics.ExampleStateParams:
    alpha_sq = get_float(cfg, "state.alpha_sq", DEFAULT_ALPHA_SQ)
    p1 = get_float(cfg, "state.p1", DEFAULT_P1)
    if not 0.0 < alpha_sq < 1.0:
        raise SeqBellError(f"state.alpha_sq = {alpha_sq!r} must lie in (0, 1)")
    if not 0.0 < p1 < 1.0:
        raise SeqBellError(f"state.p1 = {p1!r} must lie in (0, 1)")
    return optics.ExampleStateParams(alpha_sq, p1)


def build_state(cfg) -> tuple[np.ndarray, optics.ExampleStateParams | None]:
    kind = cfg.get("state.kind", "example")
    if kind == "example":
        params = _params(cfg)
        return optics.build_example_state(params)[0], params
    if kind == "optics":
        params = _params(cfg)
        return optics.stochastic_mz_mix(optics.pdc_pair_state(params.alpha_sq), params.p1, params.p2), params
    if kind == "matrix":
        if "state.matrix_file" not in cfg:
            raise ConfigError("state.kind = matrix needs state.matrix_file")
        return qcore.density_matrix(read_matrix(cfg["state.matrix_file"])), None
    raise ConfigError(f"state.kind = {kind!r}; expected example, optics or matrix")


def build_settings(cfg) -> bell.ChshSettings | str:
    mode = cfg.get("protocol.settings", "optimal")
    if mode == "optimal":
        return "optimal"
    if mode != "custom":
        raise ConfigError(f"protocol.settings = {mode!r}; expected optimal or custom")
    obs = [
        bell.BlochObservable.from_angles(
            get_float(cfg, f"observable.{name}.theta"), get_float(cfg, f"observable.{name}.phi", 0.0)
        )
        for name in ("a", "a_prime", "b", "b_prime")
    ]
    return bell.ChshSettings(*obs)


def _filter(cfg, key):
    value = cfg.get(key, "identity")
    return np.eye(2) if value == "identity" else read_matrix(value)


# --- report formatting ---------------------------------------------------------------


def _complex_rows(m) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def _settings_dict(s: bell.ChshSettings) -> dict:
    return {name: list(getattr(s, name).direction) for name in ("a", "a_prime", "b", "b_prime")}


def _lhv_dict(res: lhv.LhvResult) -> dict:
    out: dict = {"feasible": res.feasible}
    if res.feasible:
        out["residual"] = res.residual
        out["model"] = [
            {"response_a": list(s.response_a), "response_b": list(s.response_b), "weight": float(w)}
            for s, w in zip(res.model.strategies, res.model.weights)
        ]
    else:
        c = res.certificate
        out["certificate"] = {
            "local_bound": c.local_bound,
            "value": c.value,
            "violation": c.violation,
            "coefficients": c.coefficients,
        }
    return out


def state_report(cfg) -> dict:
    rho, params = build_state(cfg)
    w, _ = qcore.hermitian_eig(rho)
    out: dict = {"kind": cfg.get("state.kind", "example"), "dim": rho.shape[0]}
    if params is not None:
        out["alpha_sq"] = params.alpha_sq
        out["p1"] = params.p1
        out["constraint_satisfied"] = params.constraint_satisfied
        out["constraint_margin"] = params.constraint_margin
    out["rho"] = _complex_rows(rho)
    out["eigenvalues"] = w
    if rho.shape == (4, 4):
        t = bell.correlation_matrix(rho)
        out["correlation_matrix"] = t
        out["max_chsh"] = bell.chsh_bound(t)
    return out


def protocol_report(cfg, seed: int, tol: float) -> dict:
    kind = cfg.get("protocol.kind", "fig3")
    settings = build_settings(cfg)
    if kind == "fig3":
        if cfg.get("state.kind", "example") == "matrix":
            raise ConfigError("protocol.kind = fig3 needs state.kind = example or optics")
        params = _params(cfg)
        r = optics.fig3_pipeline(
            params, settings, strict=True, allow_swap=get_bool(cfg, "protocol.allow_swap", True), tol=tol, seed=seed
        )
    elif kind == "filter":
        rho, _ = build_state(cfg)
        r = optics.run_filter_protocol(rho, _filter(cfg, "protocol.filter_a"), _filter(cfg, "protocol.filter_b"),
                                       settings, tol=tol, seed=seed)
    else:
        raise ConfigError(f"protocol.kind = {kind!r}; expected fig3 or filter")
    return {
        "config": dict(sorted(cfg.items())),
        "protocol": kind,
        "constraint_satisfied": r.constraint_satisfied,
        "pre_chsh_max": r.pre_chsh_max,
        "pre_chsh_at_settings": r.pre_chsh_at_settings,
        "pre_settings": _settings_dict(r.pre_settings),
        "pass_probability": r.pass_probability,
        "pass_probability_closed_form": r.pass_probability_closed_form,
        "filter_swapped": r.filter_swapped,
        "rho_prime": _complex_rows(r.rho_prime),
        "rho_prime_closed_form_error": r.rho_prime_closed_form_error,
        "beamsplitter_route_error": r.beamsplitter_route_error,
        "filter_route_error": r.filter_route_error,
        "post_chsh_max": r.post_chsh_max,
        "post_chsh_at_settings": r.post_chsh_at_settings,
        "post_settings": _settings_dict(r.post_settings),
        "lhv_pre": _lhv_dict(r.pre_lhv),
        "lhv_post": _lhv_dict(r.post_lhv),
        "verdict": r.verdict,
    }


def sweep_rows(cfg, seed: int, tol: float) -> list[dict]:
    n = get_int(cfg, "sweep.resolution", 5)
    bounds = [get_float(cfg, key, default) for key, default in (
        ("sweep.alpha_sq_min", 0.1), ("sweep.alpha_sq_max", 0.9), ("sweep.p1_min", 0.1), ("sweep.p1_max", 0.9))]
    if n < 1:
        raise ConfigError("sweep.resolution must be positive")
    if not all(0.0 < b < 1.0 for b in bounds):
        raise SeqBellError(f"sweep bounds {bounds} must lie in (0, 1)")
    rows = []
    for alpha_sq in np.linspace(bounds[0], bounds[1], n):
        for p1 in np.linspace(bounds[2], bounds[3], n):
            r = optics.fig3_pipeline(optics.ExampleStateParams(float(alpha_sq), float(p1)), strict=False,
                                     tol=tol, seed=seed)
            rows.append({
                "alpha_sq": float(alpha_sq),
                "p1": float(p1),
                "constraint_ok": r.constraint_satisfied,
                "pre_chsh": r.pre_chsh_max,
                "pass_prob": r.pass_probability,
                "post_chsh": r.post_chsh_max,
                "lhv_pre": r.pre_lhv.feasible,
                "lhv_post": r.post_lhv.feasible,
            })
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    def cell(v):
        if isinstance(v, (bool, np.bool_)):
            return "true" if v else "false"
        return f"{v:.17g}"

    lines = [CSV_VERSION_LINE, ",".join(CSV_COLUMNS)]
    lines += [",".join(cell(row[c]) for c in CSV_COLUMNS) for row in rows]
    return "\n".join(lines) + "\n"


def lhv_check_report(path, tol: float, warn=None) -> dict:
    table = lhv.BehaviorTable(read_table(path))
    ns, dev = lhv.is_no_signalling(table, 1e-10)
    if not ns and warn is not None:
        warn(f"warning: table is signalling (marginal deviation {dev:.3g}); running the LP anyway")
    res = lhv.lhv_feasible(table, tol)
    out: dict = {
        "shape": list(table.shape),
        "no_signalling": ns,
        "signalling_deviation": dev,
    }
    if table.shape == (2, 2, 2, 2):
        out["chsh"] = lhv.chsh_of_behavior(table)
    out.update(_lhv_dict(res))
    return out


LOOPHOLE_TEXT = (
    "Each hidden state targets one setting pair and lets both particles register only "
    "when that pair is chosen. Conditioning on coincidences after the settings are chosen "
    "keeps a different hidden state for every pair, so the post-selected correlations reach "
    "CHSH = 4 although every hidden state is local. If the selection were made before the "
    "settings were chosen, as with a pre-selecting filter, it could not depend on them and "
    "the selected subensemble would still obey CHSH <= 2 (run config: {config})."
)


def loophole_report() -> dict:
    demo = lhv.loophole_demo()

    def show(r):
        return ["nd" if v is None else ("+1", "-1")[v] for v in r]

    config = "4 strategies, weight 0.25 each, outcome labels +1/-1/nd"
    return {
        "strategies": [
            {"response_a": show(s.response_a), "response_b": show(s.response_b), "weight": float(w)}
            for s, w in zip(demo.strategies, demo.weights)
        ],
        "coincidence_rate": demo.coincidence_rate,
        "post_selected_chsh": demo.post_selected_chsh,
        "full_behavior_lhv_feasible": demo.full_lhv.feasible,
        "forced_outcome_chsh": demo.forced_chsh,
        "explanation": LOOPHOLE_TEXT.format(config=config),
    }


# --- output -----------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.10g}"
    if isinstance(v, np.ndarray):
        return np.array2string(v, precision=10, suppress_small=True)
    return str(v)


def human(report: dict, keys=None) -> str:
    keys = keys or [k for k, v in report.items() if not isinstance(v, (dict, list))]
    width = max(len(k) for k in keys)
    return "\n".join(f"{k:<{width}}  {_fmt(report[k])}" for k in keys) + "\n"


def _state_table(rep: dict) -> str:
    lines = [human(rep, [k for k in ("kind", "dim", "alpha_sq", "p1", "constraint_satisfied", "constraint_margin",
                                    "max_chsh") if k in rep])]
    lines.append("rho:\n")
    for row in rep["rho"]:
        lines.append("  " + "  ".join(f"{re:+.6f}{im:+.6f}i" for re, im in row) + "\n")
    lines.append("eigenvalues: " + " ".join(f"{w:.10g}" for w in rep["eigenvalues"]) + "\n")
    if "correlation_matrix" in rep:
        lines.append("correlation matrix:\n")
        for row in np.asarray(rep["correlation_matrix"]):
            lines.append("  " + "  ".join(f"{v:+.10f}" for v in row) + "\n")
    return "".join(lines)


def _protocol_table(rep: dict) -> str:
    keys = ["protocol", "constraint_satisfied", "pre_chsh_max", "pre_chsh_at_settings", "pass_probability",
            "filter_swapped", "post_chsh_max", "post_chsh_at_settings", "rho_prime_closed_form_error",
            "filter_route_error"]
    text = human(rep, [k for k in keys if rep.get(k) is not None])
    text += f"lhv_pre   feasible={_fmt(rep['lhv_pre']['feasible'])}\n"
    post = rep["lhv_post"]
    text += f"lhv_post  feasible={_fmt(post['feasible'])}"
    if not post["feasible"]:
        c = post["certificate"]
        text += f"  certificate value {c['value']:.10g} > local bound {c['local_bound']:.10g}"
    text += f"\nverdict: {rep['verdict']}\n"
    return text


def _lhv_table(rep: dict) -> str:
    text = human(rep, [k for k in ("no_signalling", "signalling_deviation", "chsh", "feasible", "residual")
                       if k in rep])
    if rep["feasible"]:
        text += "weights:\n"
        for entry in rep["model"]:
            text += f"  a={entry['response_a']} b={entry['response_b']}  {entry['weight']:.10g}\n"
    else:
        c = rep["certificate"]
        text += f"certificate: value {c['value']:.10g}, local bound {c['local_bound']:.10g}, " \
                f"violation {c['violation']:.10g}\n"
        text += "coefficients c[x,y,a,b]:\n" + np.array2string(np.asarray(c["coefficients"]), precision=6) + "\n"
    return text


def _loophole_table(rep: dict) -> str:
    text = "strategy  A(x=0,1)   B(y=0,1)   weight\n"
    for k, s in enumerate(rep["strategies"]):
        text += f"{k:<9} {' '.join(s['response_a']):<10} {' '.join(s['response_b']):<10} {s['weight']:g}\n"
    text += human(rep, ["post_selected_chsh", "full_behavior_lhv_feasible", "forced_outcome_chsh"])
    text += "coincidence_rate per (x, y): " + " ".join(f"{v:g}" for v in np.ravel(rep["coincidence_rate"])) + "\n"
    text += "\n" + rep["explanation"] + "\n"
    return text


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --- entry point ----------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value scenario file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("table", "json", "csv"))
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)

    parser = argparse.ArgumentParser(prog="seqbell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("state", parents=[common], help="build a state and report its CHSH data")
    sub.add_parser("protocol", parents=[common], help="filter-then-CHSH protocol with LHV verdicts")
    sub.add_parser("sweep", parents=[common], help="protocol over an (alpha^2, p1) grid as CSV")
    lc = sub.add_parser("lhv-check", parents=[common], help="LHV feasibility of a behavior table file")
    lc.add_argument("table", nargs="?", help="behavior table file")
    sub.add_parser("loophole", parents=[common], help="detection-loophole demonstration")
    return parser


def _load(args) -> dict[str, str]:
    cfg = load_config(args.config) if args.config else {}
    overrides = parse_config("\n".join(args.set))
    cfg.update(overrides)
    if args.format:
        cfg["output.format"] = args.format
    if args.out:
        cfg["output.path"] = args.out
    if args.seed is not None:
        cfg["output.seed"] = str(args.seed)
    if args.tol is not None:
        cfg["output.tol"] = repr(args.tol)
    return cfg


def run(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load(args)
        fmt = cfg.get("output.format")
        out = cfg.get("output.path")
        seed = get_int(cfg, "output.seed", 0)
        tol = get_float(cfg, "output.tol", lhv.FEASIBILITY_TOL)
        if args.command == "state":
            rep = state_report(cfg)
            _emit(to_json(rep) + "\n" if fmt == "json" else _state_table(rep), out)
        elif args.command == "protocol":
            rep = protocol_report(cfg, seed, tol)
            _emit(to_json(rep) + "\n" if fmt == "json" else _protocol_table(rep), out)
        elif args.command == "sweep":
            rows = sweep_rows(cfg, seed, tol)
            _emit(to_json(rows) + "\n" if fmt == "json" else rows_to_csv(rows), out)
        elif args.command == "lhv-check":
            path = args.table or cfg.get("lhv.table_file")
            if not path:
                raise ConfigError("lhv-check needs a table file")
            rep = lhv_check_report(path, tol, warn=lambda msg: print(msg, file=sys.stderr))
            _emit(to_json(rep) + "\n" if fmt == "json" else _lhv_table(rep), out)
        elif args.command == "loophole":
            rep = loophole_report()
            _emit(to_json(rep) + "\n" if fmt == "json" else _loophole_table(rep), out)
    except ConfigError as exc:
        print(f"seqbell: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DegenerateProtocol as exc:
        print(f"seqbell: degenerate protocol: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except SeqBellError as exc:
        print(f"seqbell: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def main() -> None:
    sys.exit(run())


__all__ = ["run", "main", "make_parser", "dump_config"]
