"""Command-line front end: character construction, Gauss-sum tables, sign-identity
sweeps, and mu-invariant reports.

All outputs are exact: JSON numbers are rational strings ("a/b" or "inf") and
cyclotomic values serialize as {conductor, coefficients, sqrt_scale}.  Output
files are written atomically and JSON keys are sorted, so runs diff cleanly.

Exit codes: 0 success / all checks passed, 1 property violation, 2 bad
configuration, 3 budget or precision ceiling.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import tempfile
from fractions import Fraction

from .characters import ArithChar, enumerate_self_dual
from .cyclo_exact import PrimeAbovePChoice, ScaledCyclotomic
from .errors import BudgetError, ConfigError, PrecisionError
from .local_constants import (
    dichotomy_check,
    partial_gauss_sum,
    partial_gauss_sum_closed_form,
    root_number,
    tau_quadratic,
)
from .local_field import LocalQuadExt
from .mu_engine import GlobalSetup, find_global_witness, mu_invariant_sweep

CSV_COLUMNS = [
    "ell",
    "kind",
    "conductor",
    "chi_id",
    "v_beta",
    "beta_unit",
    "A_value_repr",
    "A_valuation",
    "tau",
    "W_repr",
    "dichotomy_pass",
]


def scaled_repr(x: ScaledCyclotomic) -> str:
    payload = {
        "conductor": x.base.conductor,
        "coefficients": [str(c) for c in x.base.coeffs],
        "sqrt_scale": x.scale,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, payload) -> None:
    _atomic_write(path, json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _write_csv(path: str, columns: list[str], rows: list[list]) -> None:
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(columns)
    writer.writerows(rows)
    _atomic_write(path, buf.getvalue())


def _check_keys(data: dict, allowed: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _load_config(path: str) -> dict:
    try:
        with open(path) as handle:
            return json.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _extension(entry: dict) -> LocalQuadExt:
    _check_keys(entry, {"prime", "kind", "theta_square", "max_conductor"}, "grid entry")
    ell = entry["prime"]
    kind = entry["kind"]
    theta_sq = entry.get("theta_square")
    if theta_sq is None:
        return LocalQuadExt.inert(ell) if kind == "inert" else LocalQuadExt.ramified(ell)
    return LocalQuadExt(ell, kind, theta_sq)


def _chi_id(ext: LocalQuadExt, conductor: int, index: int) -> str:
    return f"l{ext.ell}{ext.kind[0]}c{conductor}n{index}"


def cmd_char(config: dict, out_dir: str, budget: int) -> int:
    _check_keys(config, {"action", "prime", "kind", "theta_square", "max_conductor", "character", "input", "output"}, "char config")
    action = config.get("action")
    if action == "enumerate":
        ext = _extension({k: config[k] for k in ("prime", "kind", "theta_square", "max_conductor") if k in config})
        max_cond = config.get("max_conductor", 1)
        chars = enumerate_self_dual(ext, max_cond, budget)
        payload = [dict(c.to_json(), norm_exponent="1/2") for c in chars]
        _write_json(os.path.join(out_dir, config.get("output", "characters.json")), payload)
        return 0
    if action == "make":
        if "character" not in config:
            raise ConfigError("make needs a 'character' block")
        chi = ArithChar.from_json(config["character"], budget)
        _write_json(os.path.join(out_dir, config.get("output", "character.json")), chi.to_json())
        return 0
    if action == "list":
        path = config.get("input")
        if not path:
            raise ConfigError("list needs an 'input' file")
        with open(path) as handle:
            entries = json.load(handle)
        rows = []
        for i, entry in enumerate(entries):
            chi = ArithChar.from_json(entry, budget)
            ext = chi.ext
            cond = chi.finite_part.conductor()
            rows.append([ext.ell, ext.kind, cond, _chi_id(ext, cond, i), "", "", "", "", "", "", ""])
        _write_csv(os.path.join(out_dir, config.get("output", "characters.csv")), CSV_COLUMNS, rows)
        return 0
    raise ConfigError(f"unknown char action {action!r}")


def _beta_sweep(config: dict, ell: int):
    vals = config.get("beta_valuations", list(range(-2, 3)))
    units = config.get("beta_units")
    if units is None:
        units = [u for u in range(1, ell) if u % ell]
    for v in vals:
        for u in units:
            if u % ell == 0:
                raise ConfigError("beta units must be coprime to the residue prime")
            yield v, u, Fraction(u) * Fraction(ell) ** v


def cmd_gauss(config: dict, out_dir: str, psi_sign: int, budget: int, precision: int) -> int:
    _check_keys(
        config,
        {"character", "p", "beta_valuations", "beta_units", "output"},
        "gauss config",
    )
    if "character" not in config:
        raise ConfigError("gauss needs a 'character' block")
    chi = ArithChar.from_json(config["character"], budget)
    ext = chi.ext
    cond = chi.finite_part.conductor()
    chi_id = _chi_id(ext, cond, 0)
    choice = None
    if "p" in config:
        choice = PrimeAbovePChoice(config["p"], max_precision=precision)
    from .characters import is_self_dual

    closed_ok = ext.kind == "inert" and cond == 1 and is_self_dual(chi.finite_part)
    columns = CSV_COLUMNS + ["A_closed_repr", "methods_agree"]
    rows = []
    mismatch = False
    w = root_number(chi.finite_part, psi_sign)
    rhs = ScaledCyclotomic(chi.finite_part(ext.delta()))
    for v, u, beta in _beta_sweep(config, ext.ell):
        res = partial_gauss_sum(chi, beta, psi_sign=psi_sign, budget=budget)
        val = str(choice.valuation(res.value)) if choice else ""
        tau = tau_quadratic(ext, beta)
        passed = res.value.is_zero() or (w * tau == rhs)
        closed_repr, agree = "", ""
        if closed_ok:
            closed = partial_gauss_sum_closed_form(chi, beta, psi_sign)
            agree = res.value == closed.value
            closed_repr = scaled_repr(closed.value)
            if not agree:
                mismatch = True
        rows.append(
            [ext.ell, ext.kind, cond, chi_id, v, u, scaled_repr(res.value), val, tau, scaled_repr(w), passed, closed_repr, agree]
        )
    _write_csv(os.path.join(out_dir, config.get("output", "gauss.csv")), columns, rows)
    return 1 if mismatch else 0


def cmd_dichotomy(config: dict, out_dir: str, psi_signs: list[int], budget: int) -> int:
    _check_keys(
        config,
        {"grid", "beta_valuations", "beta_units", "output", "inject_sign_flip"},
        "dichotomy config",
    )
    grid = config.get("grid")
    if not grid:
        raise ConfigError("dichotomy needs a nonempty 'grid'")
    inject = bool(config.get("inject_sign_flip", False))
    rows = []
    all_pass = True
    for entry in grid:
        ext = _extension(entry)
        max_cond = entry.get("max_conductor", 1)
        chars = [c for c in enumerate_self_dual(ext, max_cond, budget) if c.conductor() >= 1]
        for idx, chi in enumerate(chars):
            cond = chi.conductor()
            chi_id = _chi_id(ext, cond, idx)
            for sign in psi_signs:
                w = root_number(chi, sign)
                if inject:
                    w = -w  # fault injection for exit-code tests
                for v, u, beta in _beta_sweep(config, ext.ell):
                    verdict = dichotomy_check(chi, beta, sign, w=w)
                    all_pass = all_pass and verdict.passed
                    rows.append(
                        [
                            ext.ell,
                            ext.kind,
                            cond,
                            chi_id,
                            v,
                            u,
                            scaled_repr(verdict.gauss.value),
                            "",
                            verdict.tau,
                            scaled_repr(verdict.w),
                            verdict.passed,
                        ]
                    )
    _write_csv(os.path.join(out_dir, config.get("output", "dichotomy.csv")), CSV_COLUMNS, rows)
    return 0 if all_pass else 1


def cmd_mu(config: dict, out_dir: str, psi_sign: int, budget: int, precision: int, jobs: int) -> int:
    _check_keys(
        config,
        {
            "prime",
            "weight",
            "nonsplit_places",
            "split_places",
            "unramified_places",
            "output_report",
            "output_csv",
        },
        "mu config",
    )
    setup_data = {k: v for k, v in config.items() if not k.startswith("output")}
    setup = GlobalSetup.from_json(setup_data)
    choice = PrimeAbovePChoice(setup.prime, max_precision=precision)
    report = mu_invariant_sweep(setup, psi_sign, choice, jobs=jobs)
    payload = report.to_json()
    if report.verdict == "matches_theorem_A" and report.witness_beta is not None:
        witness = find_global_witness(setup, psi_sign=psi_sign, choice=choice)
        payload["recomputed_global_witness"] = str(witness)
    _write_json(os.path.join(out_dir, config.get("output_report", "mu_report.json")), payload)
    rows = []
    for place in setup.nonsplit:
        ext = place.chi.ext
        cond = place.chi.finite_part.conductor()
        chi_id = _chi_id(ext, cond, 0)
        w = root_number(place.chi.finite_part, psi_sign)
        lo, hi = place.sweep_valuation_range
        mod = ext.ell**place.sweep_unit_level
        for v in range(lo, hi + 1):
            for c in range(1, mod):
                if c % ext.ell == 0:
                    continue
                beta = Fraction(c) * Fraction(ext.ell) ** v
                res = partial_gauss_sum(place.chi, beta, psi_sign=psi_sign, budget=budget)
                verdict = dichotomy_check(place.chi.finite_part, beta, psi_sign, w=w)
                rows.append(
                    [
                        ext.ell,
                        ext.kind,
                        cond,
                        chi_id,
                        v,
                        c,
                        scaled_repr(res.value),
                        str(choice.valuation(res.value)),
                        verdict.tau,
                        scaled_repr(w),
                        verdict.passed,
                    ]
                )
    _write_csv(os.path.join(out_dir, config.get("output_csv", "mu_sweep.csv")), CSV_COLUMNS, rows)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="mulocal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("char", "gauss", "dichotomy", "mu"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON run configuration")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--precision", type=int, default=4096, help="p-adic precision ceiling")
        sp.add_argument("--budget", type=int, default=10**7, help="enumeration size budget")
        sp.add_argument("--jobs", type=int, default=1, help="sweep worker count")
        sp.add_argument("--psi-sign", choices=["plus", "minus", "both"], default="minus")
    args = parser.parse_args(argv)
    sign = {"plus": 1, "minus": -1}.get(args.psi_sign, -1)
    signs = [1, -1] if args.psi_sign == "both" else [sign]
    try:
        if args.psi_sign == "both" and args.command != "dichotomy":
            raise ConfigError("--psi-sign both is only meaningful for dichotomy sweeps")
        config = _load_config(args.config)
        if not isinstance(config, dict):
            raise ConfigError("config root must be a JSON object")
        if args.command == "char":
            return cmd_char(config, args.out, args.budget)
        if args.command == "gauss":
            return cmd_gauss(config, args.out, sign, args.budget, args.precision)
        if args.command == "dichotomy":
            return cmd_dichotomy(config, args.out, signs, args.budget)
        return cmd_mu(config, args.out, sign, args.budget, args.precision, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (BudgetError, PrecisionError) as exc:
        print(f"resource ceiling: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
