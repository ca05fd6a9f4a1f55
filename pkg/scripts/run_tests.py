#!/usr/bin/env python3
"""Comprehensive test runner for the ishikawa-ep package."""

import shutil
import subprocess
import sys
from pathlib import Path


def run_command(cmd, description):
    """Run a command and display results."""
    print(f"\n🔧 {description}")
    print("=" * 60)

    try:
        result = subprocess.run(cmd, shell=True, check=False)
        if result.returncode == 0:
            print(f"✅ {description} - PASSED")
            return True
        print(f"❌ {description} - FAILED (exit code: {result.returncode})")
        return False
    except Exception as e:
        print(f"❌ {description} - ERROR: {e}")
        return False


def main():
    """Run the full local check suite."""
    print("🧪 ishikawa-ep - Test Suite")
    print("=" * 60)

    if not Path("pyproject.toml").exists():
        print("❌ Please run this script from the project root directory")
        sys.exit(1)

    has_uv = shutil.which("uv") is not None
    py = sys.executable or "python3"
    prefix = "uv run " if has_uv else f"{py} -m "

    if has_uv:
        install = ("uv sync --extra dev", "Install dev dependencies")
    else:
        print("\n⚠️  'uv' not found. Installing dev extras with pip...")
        install = (f"{py} -m pip install -e .[dev]", "Install dev dependencies via pip")

    steps = [
        install,
        (f"{prefix}black --check ishikawa_ep tests", "Code formatting (black)"),
        (f"{prefix}isort --check-only ishikawa_ep tests", "Import sorting (isort)"),
        (f"{prefix}ruff check ishikawa_ep tests", "Code linting (ruff)"),
        (f"{prefix}mypy ishikawa_ep", "Type checking (mypy)"),
        (f"{prefix}pytest -m unit tests/ -v", "Unit tests"),
        (f"{prefix}pytest -m integration tests/ -v", "CLI integration tests"),
        (
            f"{prefix}pytest tests/ --cov=ishikawa_ep --cov-report=term-missing --cov-report=html",
            "Coverage analysis",
        ),
        (f"{py} scripts/check_build.py", "Package build validation"),
    ]
    results = [(description, run_command(cmd, description)) for cmd, description in steps]

    print("\n" + "=" * 60)
    print("📊 TEST SUMMARY")
    print("=" * 60)
    for description, passed_step in results:
        mark = "✅" if passed_step else "❌"
        print(f"{mark} {description} - {'PASSED' if passed_step else 'FAILED'}")

    passed = sum(ok for _, ok in results)
    print(f"\nResult: {passed}/{len(results)} steps passed")
    if passed == len(results):
        print("🎉 All checks passed!")
        sys.exit(0)
    print("⚠️  Some checks failed.")
    sys.exit(1)


if __name__ == "__main__":
    main()
