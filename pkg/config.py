"""
Run configuration
Defaults, JSON loading with key validation, and builders for the typed objects
"""

import copy
import importlib
import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np

from errors import ConfigError
from problem import AnsatzConfig, ProblemParams, QuadratureSpec, make_problem
from geometry import CutoffSpec
from potential import (CallablePotential, ConstantPotential, PotentialModel, make_quadratic_model,
                       validate_against_cutoff)

logger = logging.getLogger(__name__)

# ================= CONFIG =================
DEFAULT_N = 6
DEFAULT_ALPHA = 4.0
DEFAULT_R0 = 1.0
DEFAULT_RHO_T = 0.5
DEFAULT_DELTA_FRACTION = 0.1      # delta = 0.1 r0
DEFAULT_WINDOW = [1e-3, 1e3]
DEFAULT_THETA = 0.1
DEFAULT_NODES = 2 ** 18
DEFAULT_SHIFTS = 8
DEFAULT_REL_TOL = 1e-8
DEFAULT_ABS_TOL = 1e-12
DEFAULT_SEED = 20240101

POTENTIAL_KINDS = ("quadratic", "constant", "callable")

# None marks a value derived from other keys when the config is resolved
DEFAULT_CONFIG: Dict[str, Any] = {
    "problem": {
        "N": DEFAULT_N,
        "alpha": DEFAULT_ALPHA,
    },
    "potential": {
        "kind": "quadratic",
        "r0": DEFAULT_R0,
        "x0_pp": None,
        "a": None,
        "rho_t": DEFAULT_RHO_T,
        "callable": None,                 # "module:function" computing K(r, x'') for kind "callable"
    },
    "ansatz": {
        "m": 2,
        "r_bar": None,
        "x_bar_pp": None,
        "lam": 40.0,
        "delta": None,
        "window": DEFAULT_WINDOW,
        "theta": DEFAULT_THETA,
        "use_cutoff": False,
    },
    "quadrature": {
        "scheme": "qmcnd",
        "nodes": DEFAULT_NODES,
        "seed": DEFAULT_SEED,
        "rel_tol": DEFAULT_REL_TOL,
        "abs_tol": DEFAULT_ABS_TOL,
        "domain_radius": 50.0,
        "shifts": DEFAULT_SHIFTS,
        "threads": None,
    },
    "expansion": {
        "m": 1,
        "lambda_grid": [10.0, 20.0, 40.0, 80.0],
        "method": "analytic",
        "max_relative_residual": 0.05,
        "synthetic": None,
    },
    "solve": {
        "m": 16,
        "fit_m": 2,
        "lambda_grid": [20.0, 40.0, 80.0, 160.0],
        "A1": None,
        "A3": None,
        "tol": 1e-12,
        "require_window": True,
    },
    "pohozaev": {
        "lam": 20.0,
        "rho_factors": [2.5, 3.5, 4.5],
        "translation": [3],
        "perturbation_eps": 0.01,         # bump height relative to the bubble peak
        "perturbation_width": None,
    },
    "norms": {
        "samples": 10 ** 4,
        "seed": 0,
        "lambdas": [10.0, 20.0, 40.0, 80.0],
    },
    "lemmas": {
        "budget": 64,
        "B1": {"a": 2.0, "b": 2.0, "delta": 1.0, "m": 4, "r_bar": 1.0, "seed": 0},
        "B3": {"delta": 2.0},
        "B4": {"eta": 0.5},
    },
    "verify": {
        "tol": 1e-3,
        "nodes": 2 ** 16,
        "radii": [0.0, 0.5, 1.0, 2.0, 4.0],
        "identity_s": 2.0,
        "identity_points": [0.0, 1.0, 2.0],
        "lambdas": [0.5, 1.0, 2.0],
        "coefficient_scale": 1.0,
        "lemmas": ["B1", "B3", "B4"],
    },
}

# Keys whose value is an open dict rather than a fixed schema
FREE_FORM = {("expansion", "synthetic")}


# ================= LOADING =================

def _type_ok(default: Any, value: Any) -> bool:
    if default is None or value is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, (int, float)):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    return isinstance(value, type(default))


def _merge(base: Dict[str, Any], override: Dict[str, Any], path: tuple = ()) -> Dict[str, Any]:
    """Recursively merge override into base, rejecting unknown keys and mismatched types"""
    if not isinstance(override, dict):
        raise ConfigError(f"'{'.'.join(path) or '<root>'}' must be an object")
    out = copy.deepcopy(base)
    for key, value in override.items():
        key_path = path + (key,)
        name = ".".join(key_path)
        if key not in base:
            raise ConfigError(f"Unknown config key '{name}'")
        default = base[key]
        if key_path in FREE_FORM:
            out[key] = copy.deepcopy(value)
        elif isinstance(default, dict):
            out[key] = _merge(default, value, key_path)
        elif not _type_ok(default, value):
            raise ConfigError(f"Config key '{name}' expects {type(default).__name__}, got {type(value).__name__}")
        else:
            out[key] = copy.deepcopy(value)
    return out


def resolve(config: Dict[str, Any]) -> Dict[str, Any]:
    """Fill the derived defaults so every value is explicit"""
    cfg = copy.deepcopy(config)
    N = int(cfg["problem"]["N"])
    pot = cfg["potential"]
    if pot["x0_pp"] is None:
        pot["x0_pp"] = [0.0] * (N - 2)
    if pot["a"] is None:
        pot["a"] = 1.0 / (2.0 * (N - 1))
    ans = cfg["ansatz"]
    if ans["r_bar"] is None:
        ans["r_bar"] = pot["r0"]
    if ans["x_bar_pp"] is None:
        ans["x_bar_pp"] = list(pot["x0_pp"])
    if ans["delta"] is None:
        ans["delta"] = DEFAULT_DELTA_FRACTION * pot["r0"]
    poh = cfg["pohozaev"]
    if poh["perturbation_width"] is None:
        poh["perturbation_width"] = 0.5 * ans["delta"]
    return cfg


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Defaults, merged with a JSON file and then with overrides, then resolved

    Raises:
        ConfigError: unreadable file, unknown key or wrong value type
    """
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        if not os.path.exists(path):
            raise ConfigError(f"Config file not found: {path}")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Invalid JSON in {path}: {e}")
        config = _merge(config, data)
        logger.info(f"Loaded config from {path}")
    if overrides:
        config = _merge(config, overrides)
    return resolve(config)


def dump_config(config: Dict[str, Any]) -> str:
    return json.dumps(config, indent=2, sort_keys=True)


# ================= BUILDERS =================

def build_problem(config: Dict[str, Any]) -> ProblemParams:
    return make_problem(config["problem"]["N"], config["problem"]["alpha"])


def _x0_pp(config: Dict[str, Any], p: ProblemParams) -> np.ndarray:
    x0_pp = np.asarray(config["potential"]["x0_pp"], dtype=float)
    if x0_pp.shape != (p.N - 2,):
        raise ConfigError(f"potential.x0_pp must have N-2 = {p.N - 2} components, got {x0_pp.size}")
    return x0_pp


def _load_callable(target: Optional[str]):
    """Import "module:function" for a callable potential"""
    if not target or ":" not in target:
        raise ConfigError(f"potential.callable must read 'module:function', got {target!r}")
    module_name, attr = target.split(":", 1)
    try:
        module = importlib.import_module(module_name)
        func = getattr(module, attr)
    except (ImportError, AttributeError) as e:
        raise ConfigError(f"Cannot load potential callable '{target}': {e}")
    if not callable(func):
        raise ConfigError(f"potential.callable '{target}' is not callable")
    return func


def build_potential(config: Dict[str, Any], p: ProblemParams) -> PotentialModel:
    """
    The configured K, checked to stay positive on the 10 delta ball of the cutoff

    Raises:
        CurvatureTooLarge: K reaches zero near the critical point
    """
    pot = config["potential"]
    kind = pot["kind"]
    if kind not in POTENTIAL_KINDS:
        raise ConfigError(f"Unknown potential kind '{kind}'. Available: {list(POTENTIAL_KINDS)}")
    x0_pp = _x0_pp(config, p)
    if kind == "constant":
        model = ConstantPotential(pot["r0"], x0_pp)
    elif kind == "callable":
        model = CallablePotential(_load_callable(pot["callable"]), pot["r0"], x0_pp)
    else:
        model = make_quadratic_model(pot["r0"], x0_pp, float(pot["a"]), float(pot["rho_t"]))
    cutoff = CutoffSpec(r0=float(pot["r0"]), x0_pp=tuple(x0_pp), delta=float(config["ansatz"]["delta"]))
    lowest = validate_against_cutoff(model, cutoff)
    logger.debug(f"{kind} potential: min K on the {cutoff.delta:g}-cutoff positivity ball = {lowest:.6g}")
    return model


def build_quadrature(config: Dict[str, Any]) -> QuadratureSpec:
    q = config["quadrature"]
    threads = q["threads"]
    return QuadratureSpec(
        scheme=q["scheme"],
        nodes=int(q["nodes"]),
        seed=int(q["seed"]),
        rel_tol=float(q["rel_tol"]),
        abs_tol=float(q["abs_tol"]),
        domain_radius=float(q["domain_radius"]),
        shifts=int(q["shifts"]),
        threads=None if threads is None else int(threads),
    )


def build_ansatz_config(config: Dict[str, Any], m: Optional[int] = None,
                        lam: Optional[float] = None) -> AnsatzConfig:
    ans = config["ansatz"]
    window = ans["window"]
    if len(window) != 2:
        raise ConfigError(f"ansatz.window must have two entries, got {window}")
    return AnsatzConfig(
        m=int(ans["m"] if m is None else m),
        r_bar=float(ans["r_bar"]),
        x_bar_pp=tuple(float(v) for v in ans["x_bar_pp"]),
        lam=float(ans["lam"] if lam is None else lam),
        delta=float(ans["delta"]),
        window=(float(window[0]), float(window[1])),
        theta=float(ans["theta"]),
    )
