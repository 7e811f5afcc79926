"""
Verification Suite Loading and Management
Discovers the suites/ plugins, builds their shared context and runs them
"""

import os
import importlib.util
import inspect
import logging
import math
import threading
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional

from config import build_potential, build_problem, build_quadrature
from errors import USAGE_ERRORS
from potential import PotentialModel
from problem import ProblemParams, QuadratureSpec
from special import SharpConstants, sharp_constants

logger = logging.getLogger(__name__)

SUITES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "suites")
ROW_FIELDS = ["check_id", "expected", "actual", "tol", "pass"]


@dataclass
class SuiteContext:
    """Everything a suite needs: the resolved config and the objects built from it"""
    config: Dict[str, Any]
    problem: ProblemParams
    spec: QuadratureSpec
    extra: Dict[str, Any] = field(default_factory=dict)

    @cached_property
    def constants(self) -> SharpConstants:
        return sharp_constants(self.problem)

    @cached_property
    def potential(self) -> PotentialModel:
        return build_potential(self.config, self.problem)

    @property
    def verify(self) -> Dict[str, Any]:
        return self.config["verify"]


def make_context(config: Dict[str, Any]) -> SuiteContext:
    return SuiteContext(config=config, problem=build_problem(config), spec=build_quadrature(config))


def check_row(check_id: str, expected: float, actual: float, tol: float, relative: bool = True,
              bound: bool = False) -> Dict[str, Any]:
    """
    One result row

    relative compares |actual - expected| to tol |expected|; bound checks
    |actual| <= tol and ignores expected.
    """
    if bound:
        passed = math.isfinite(actual) and abs(actual) <= tol
    else:
        scale = abs(expected) if relative and expected != 0 else 1.0
        passed = math.isfinite(actual) and abs(actual - expected) <= tol * scale
    return {"check_id": check_id, "expected": float(expected), "actual": float(actual),
            "tol": float(tol), "pass": bool(passed)}


class SuiteManager:
    """Manages verification suite discovery and execution"""

    def __init__(self, suites_dir: str = SUITES_DIR):
        self.suites_dir = suites_dir
        self.suite_registry: Dict[str, Dict[str, Any]] = {}
        self.lock = threading.Lock()
        logger.debug(f"Suite manager initialized with directory: {self.suites_dir}")

    def scan_and_load(self) -> int:
        """
        Scan the suites directory and register every module exposing run(context)
        Returns: Number of suites loaded
        """
        with self.lock:
            self.suite_registry.clear()
            if not os.path.isdir(self.suites_dir):
                logger.error(f"Suites directory not found: {self.suites_dir}")
                return 0
            for filename in sorted(os.listdir(self.suites_dir)):
                if not filename.endswith('.py') or filename.startswith('_'):
                    continue
                self._load_module(os.path.join(self.suites_dir, filename))
            logger.debug(f"Suite registry: {sorted(self.suite_registry)}")
            return len(self.suite_registry)

    def _load_module(self, filepath: str):
        """Load a single suite module"""
        name = os.path.splitext(os.path.basename(filepath))[0]
        try:
            spec = importlib.util.spec_from_file_location(f"suites.{name}", filepath)
            if spec is None or spec.loader is None:
                logger.warning(f"Could not load spec for {filepath}")
                return
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            run = getattr(module, "run", None)
            if not inspect.isfunction(run):
                logger.warning(f"Suite {name} has no run(context); skipped")
                return
            doc = inspect.getdoc(module) or "No description available"
            self.suite_registry[name] = {"run": run, "path": filepath, "doc": doc.split('\n')[0]}
        except Exception as e:
            logger.error(f"Error loading suite {filepath}: {e}")

    def available(self) -> List[str]:
        return sorted(self.suite_registry)

    def get_suite_info(self, name: str) -> Optional[Dict[str, Any]]:
        if name in self.suite_registry:
            data = self.suite_registry[name]
            return {"name": name, "doc": data["doc"], "path": data["path"]}
        return None

    def execute_suite(self, name: str, context: SuiteContext) -> Dict[str, Any]:
        """
        Run a suite by name

        Returns:
            Dict with status and rows, or status error with the message. A
            suite that runs but has failing checks is a success with
            passed = False.
        """
        if name not in self.suite_registry:
            return {
                "status": "error",
                "error": f"Suite '{name}' not found",
                "available": self.available(),
                "usage": True,
            }
        try:
            logger.info(f"Running suite: {name}")
            rows = list(self.suite_registry[name]["run"](context))
            passed = all(row["pass"] for row in rows)
            failed = [row["check_id"] for row in rows if not row["pass"]]
            if failed:
                logger.warning(f"Suite {name}: {len(failed)} failing check(s): {failed}")
            else:
                logger.info(f"Suite {name}: all {len(rows)} checks passed")
            return {"status": "success", "suite": name, "rows": rows, "passed": passed}
        except Exception as e:
            logger.error(f"Error running suite {name}: {e}")
            return {
                "status": "error",
                "suite": name,
                "error": f"{type(e).__name__}: {e}",
                "usage": isinstance(e, USAGE_ERRORS),
            }


# Singleton instance
_suite_manager = None


def get_suite_manager(suites_dir: str = SUITES_DIR) -> SuiteManager:
    """Get or create suite manager singleton"""
    global _suite_manager
    if _suite_manager is None:
        _suite_manager = SuiteManager(suites_dir)
        _suite_manager.scan_and_load()
    return _suite_manager
