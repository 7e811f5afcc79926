#!/usr/bin/env python3
"""
CLI tool for the multi-bubble Hartree toolkit
Usage:
    python manage_bubbles.py constants [--config run.json]
    python manage_bubbles.py verify <riesz|hls|invariance|lemmas|pohozaev>
    python manage_bubbles.py expansion [--out results/]
    python manage_bubbles.py solve
    python manage_bubbles.py pohozaev
    python manage_bubbles.py norms
    python manage_bubbles.py lemma-check [B1 B3 B4]
    python manage_bubbles.py --print-config
"""

import os
import sys
import json
import argparse
import logging
from dataclasses import replace
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from bubbles import AnsatzField, ansatz_eval, ansatz_laplacian, make_ansatz
from config import (build_ansatz_config, build_potential, build_problem, build_quadrature,
                    dump_config, load_config)
from energy import ExpansionFit, fit_dj_samples, fit_expansion, fit_for_m
from errors import USAGE_ERRORS, BubbleToolkitError, MTooSmall
from geometry import interaction_sum
from reduction import (STABILITY_GROWTH, lemma_check, make_norm_spec, pohozaev_scan, solve_reduced,
                       weighted_norm_star, weighted_norm_starstar)
from riesz import riesz_ansatz_closed
from special import bubble_coefficient_closed, sharp_constants, sobolev_constant_closed
from suites_manager import ROW_FIELDS, get_suite_manager, make_context

logger = logging.getLogger(__name__)

COMMANDS = ['constants', 'verify', 'expansion', 'solve', 'pohozaev', 'norms', 'lemma-check']
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
FLOAT_FORMAT = '%.17g'


# ================= OUTPUT =================

def emit_json(record: Dict[str, Any], out_dir: Optional[str], name: str):
    text = json.dumps(record, indent=2, sort_keys=True) + '\n'
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{name}.json")
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        logger.info(f"Wrote {path}")
    else:
        sys.stdout.write(text)


def emit_csv(rows: List[Dict[str, Any]], columns: List[str], out_dir: Optional[str], name: str):
    frame = pd.DataFrame(rows, columns=columns)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{name}.csv")
        frame.to_csv(path, index=False, lineterminator='\n', float_format=FLOAT_FORMAT, encoding='utf-8')
        logger.info(f"Wrote {path} ({len(frame)} rows)")
    else:
        sys.stdout.write(frame.to_csv(index=False, lineterminator='\n', float_format=FLOAT_FORMAT))


def _ansatz(config, p, coeff, m=None, lam=None):
    cfg = build_ansatz_config(config, m=m, lam=lam)
    pot = config["potential"]
    return make_ansatz(p, coeff, cfg, pot["r0"], pot["x0_pp"], use_cutoff=bool(config["ansatz"]["use_cutoff"]))


# ================= COMMANDS =================

def cmd_constants(config, args) -> int:
    """Sharp constants with their provenance"""
    p = build_problem(config)
    consts = sharp_constants(p)
    record = {
        "problem": p.as_dict(),
        "constants": {
            "hls_c": {"value": consts.hls_c, "provenance": "closed form in Gamma", "tol": 0.0},
            "sobolev_s": {"value": consts.sobolev_s, "provenance": "Rayleigh quotient of the extremal, radial quadrature",
                          "tol": 1e-8},
            "sobolev_s_closed": {"value": sobolev_constant_closed(p), "provenance": "closed form in Gamma",
                                 "tol": 0.0},
            "shl": {"value": consts.shl, "provenance": "S / C^(1/2*)", "tol": 1e-8},
            "bubble_coeff": {"value": consts.bubble_coeff, "provenance": "from S and C", "tol": 1e-8},
            "bubble_coeff_closed": {"value": bubble_coefficient_closed(p),
                                    "provenance": "closed form from the bubble equation", "tol": 0.0},
            "i_half_alpha": {"value": consts.i_half_alpha, "provenance": "closed form in Gamma", "tol": 0.0},
        },
    }
    emit_json(record, args.out, "constants")
    return EXIT_OK


def cmd_verify(config, args) -> int:
    """Run one verification suite and emit its check rows"""
    manager = get_suite_manager()
    if not args.args:
        logger.error(f"verify needs a suite name. Available: {', '.join(manager.available())}")
        return EXIT_USAGE
    suite = args.args[0]
    result = manager.execute_suite(suite, make_context(config))
    if result['status'] != 'success':
        logger.error(f"Suite {suite} failed to run: {result['error']}")
        return EXIT_USAGE if result.get('usage') else EXIT_FAIL
    emit_csv(result['rows'], ROW_FIELDS, args.out, f"verify_{suite}")
    return EXIT_OK if result['passed'] else EXIT_FAIL


def synthetic_samples(config, p) -> ExpansionFit:
    """dJ/dlambda generated from given (A1, A2) and fitted back"""
    exp = config["expansion"]
    synthetic = exp["synthetic"]
    m = int(exp["m"])
    lambdas = np.asarray(exp["lambda_grid"], dtype=float)
    A1 = float(synthetic["A1"])
    A2 = synthetic.get("A2")
    B = interaction_sum(m, config["ansatz"]["r_bar"], p.N - 2.0) if A2 is not None else None
    values = -m * A1 / lambdas ** 3
    if A2 is not None:
        values = values + m * float(A2) * B / lambdas ** (p.N - 1.0)
    return replace(fit_dj_samples(m, p.N, lambdas, values, B), sample_errors=[0.0] * len(lambdas))


def cmd_expansion(config, args) -> int:
    """dJ/dlambda over the lambda grid with the fitted model"""
    p = build_problem(config)
    exp = config["expansion"]
    m = int(exp["m"])
    if exp["synthetic"] is not None:
        fit = synthetic_samples(config, p)
    else:
        consts = sharp_constants(p)
        K = build_potential(config, p)
        ans = config["ansatz"]
        fit = fit_expansion(p, consts, m, K, ans["r_bar"], ans["x_bar_pp"], exp["lambda_grid"],
                            build_quadrature(config), exp["method"], ans["delta"])

    prediction = fit.predict(m, p.N, fit.lambda_grid)
    columns = ["lambda", "dj_dlambda", "est_error", "model_prediction", "A1"]
    if fit.A2 is not None:
        columns += ["A2", "A3"]
    rows = []
    for i, lam in enumerate(fit.lambda_grid):
        row = {"lambda": lam, "dj_dlambda": fit.samples[i], "est_error": fit.sample_errors[i],
               "model_prediction": float(prediction[i]), "A1": fit.A1}
        if fit.A2 is not None:
            row.update({"A2": fit.A2, "A3": fit.A3})
        rows.append(row)
    emit_csv(rows, columns, args.out, "expansion")

    limit = float(exp["max_relative_residual"])
    if fit.relative_residual > limit:
        logger.error(f"Fit residual {fit.relative_residual:.3g} exceeds {limit}")
        return EXIT_FAIL
    logger.info(f"Fit A1={fit.A1:.6g} A2={fit.A2} relative residual {fit.relative_residual:.3g}")
    return EXIT_OK


def cmd_solve(config, args) -> int:
    """Fit the coefficients, then solve the reduced system for m bubbles"""
    p = build_problem(config)
    sol = config["solve"]
    m = int(sol["m"])
    if m < 2:
        raise MTooSmall(f"the interaction is undefined for m={m}; solve needs m >= 2")
    K = build_potential(config, p)
    ans = config["ansatz"]

    if sol["A1"] is not None and sol["A3"] is not None:
        fit = ExpansionFit(A1=float(sol["A1"]), A2=None, A3=float(sol["A3"]), residuals=[], lambda_grid=[])
        logger.info(f"Using forced coefficients A1={fit.A1} A3={fit.A3}")
    else:
        consts = sharp_constants(p)
        base = fit_expansion(p, consts, int(sol["fit_m"]), K, ans["r_bar"], ans["x_bar_pp"], sol["lambda_grid"],
                             build_quadrature(config), config["expansion"]["method"], ans["delta"])
        fit = fit_for_m(base, m, ans["r_bar"], p.N)

    window = ans["window"]
    solution = solve_reduced(K, m, fit, p, tol=float(sol["tol"]), window=(window[0], window[1]),
                             theta=float(ans["theta"]), require_window=bool(sol["require_window"]))
    scale = m ** p.scaling_exponent
    record = {
        "m": m,
        "solution": solution.as_dict(),
        "fit": {"A1": fit.A1, "A2": fit.A2, "A3": fit.A3, "relative_residual": fit.relative_residual},
        "lambda_window": [window[0] * scale, window[1] * scale],
        "proximity_bound": solution.lambda_m ** (-(1.0 - float(ans["theta"]))),
        "tol": float(sol["tol"]),
    }
    emit_json(record, args.out, "solve")
    return EXIT_OK


def cmd_pohozaev(config, args) -> int:
    """Pohozaev residuals of the configured ansatz over the tube radii"""
    p = build_problem(config)
    consts = sharp_constants(p)
    K = build_potential(config, p)
    a = _ansatz(config, p, consts.bubble_coeff)
    poh = config["pohozaev"]
    rows = []
    for kind, result in pohozaev_scan(AnsatzField(a), K, a, poh["rho_factors"], poh["translation"],
                                      build_quadrature(config)):
        rows.append({"kind": kind, "rho": result.rho, "value": result.value, "est_error": result.est_error,
                     "laplacian_part": result.laplacian_part, "nonlocal_part": result.nonlocal_part,
                     "nodes_used": result.nodes_used})
    emit_csv(rows, ["kind", "rho", "value", "est_error", "laplacian_part", "nonlocal_part", "nodes_used"],
             args.out, "pohozaev")
    return EXIT_OK


def cmd_norms(config, args) -> int:
    """Weighted norms of the ansatz, its Laplacian and its equation error"""
    p = build_problem(config)
    consts = sharp_constants(p)
    K = build_potential(config, p)
    norms = config["norms"]
    T = p.two_star_alpha
    rows = []
    for lam in norms["lambdas"]:
        a = _ansatz(config, p, consts.bubble_coeff, lam=lam)
        spec = make_norm_spec(p, a.placement, float(lam), int(norms["samples"]), int(norms["seed"]))

        def error(x, a=a):
            z = ansatz_eval(a, x)
            return -ansatz_laplacian(a, x) - K.value(x) * riesz_ansatz_closed(a, x) * np.abs(z) ** (T - 2.0) * z

        results = {
            "ansatz_star": weighted_norm_star(AnsatzField(a), spec),
            "laplacian_starstar": weighted_norm_starstar(lambda x, a=a: ansatz_laplacian(a, x), spec),
            "error_starstar": weighted_norm_starstar(error, spec),
        }
        for name, result in results.items():
            rows.append({"lambda": float(lam), "norm": name, "value": result.value, "est_error": result.est_error,
                         "tol": STABILITY_GROWTH * result.value, "samples": result.samples})
    emit_csv(rows, ["lambda", "norm", "value", "est_error", "tol", "samples"], args.out, "norms")
    return EXIT_OK


def cmd_lemma_check(config, args) -> int:
    """Worst ratios of the decay estimates and their stability under budget doubling"""
    p = build_problem(config)
    spec = build_quadrature(config)
    budget = int(config["lemmas"]["budget"])
    which_list = args.args or config["verify"]["lemmas"]
    rows = []
    for which in which_list:
        params = config["lemmas"].get(which, {})
        check = lemma_check(which, params, budget, p, spec)
        rows.append({"which": check.which, "holds": check.holds, "worst_ratio": check.worst_ratio,
                     "worst_ratio_doubled": check.worst_ratio_doubled, "growth": check.growth,
                     "tol": STABILITY_GROWTH, "witness": json.dumps(check.witness)})
    emit_csv(rows, ["which", "holds", "worst_ratio", "worst_ratio_doubled", "growth", "tol", "witness"],
             args.out, "lemma_check")
    return EXIT_OK if all(row["holds"] for row in rows) else EXIT_FAIL


HANDLERS = {
    'constants': cmd_constants,
    'verify': cmd_verify,
    'expansion': cmd_expansion,
    'solve': cmd_solve,
    'pohozaev': cmd_pohozaev,
    'norms': cmd_norms,
    'lemma-check': cmd_lemma_check,
}


# ================= ENTRY POINT =================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Multi-bubble critical Hartree toolkit")
    parser.add_argument('command', nargs='?', choices=COMMANDS, help='Command to execute')
    parser.add_argument('args', nargs='*', help='Suite name for verify, lemma names for lemma-check')
    parser.add_argument('--config', help='JSON run configuration merged over the defaults')
    parser.add_argument('--seed', type=int, help='Override quadrature.seed')
    parser.add_argument('--threads', type=int, help='Override quadrature.threads')
    parser.add_argument('--out', help='Directory for CSV/JSON output (default: stdout)')
    parser.add_argument('--print-config', action='store_true', help='Print the merged config and exit')
    parser.add_argument('--verbose', action='store_true', help='Debug logging')
    return parser


def run_cli(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    overrides: Dict[str, Any] = {}
    if args.seed is not None:
        overrides.setdefault("quadrature", {})["seed"] = args.seed
    if args.threads is not None:
        overrides.setdefault("quadrature", {})["threads"] = args.threads

    try:
        config = load_config(args.config, overrides)
        if args.print_config:
            sys.stdout.write(dump_config(config) + '\n')
            return EXIT_OK
        if args.command is None:
            logger.error(f"No command given. Choose one of: {', '.join(COMMANDS)}")
            return EXIT_USAGE
        return HANDLERS[args.command](config, args)
    except USAGE_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE
    except BubbleToolkitError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_FAIL


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
