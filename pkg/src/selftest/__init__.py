from src.selftest.checks import CHECKS, CheckResult, run_selftest

__all__ = ["CHECKS", "CheckResult", "run_selftest"]
