"""Fixtures that talk to the planner package only through its CLI and files."""

from __future__ import annotations

import json
import subprocess
import sys

import pytest

PLANNER = [sys.executable, "-m", "asmplan"]


def planner_cli(*args: str) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        [*PLANNER, *args], capture_output=True, text=True, check=False
    )
    assert proc.returncode == 0, f"asmplan {' '.join(args)}\n{proc.stderr}"
    return proc


def add_carry_limits(structure_path, max_subassemblies=4, max_new_size=3) -> None:
    doc = json.loads(structure_path.read_text())
    doc.setdefault("constraints", {})["upc"] = {
        "max_subassemblies": max_subassemblies,
        "max_new_size": max_new_size,
    }
    structure_path.write_text(json.dumps(doc))


def export_spec(tmp_path, preset: str, reward: str = "cubesat_fuel",
                upc: tuple[int, int] | None = (4, 3), seed: int = 0,
                curriculum: tuple[int, int, int] = (2, 1, 50),
                eps_decay: float = 0.999) -> str:
    structure = tmp_path / f"{preset}.json"
    planner_cli("gen", "--preset", preset, "--seed", "0", "--out", str(structure))
    if upc is not None:
        add_carry_limits(structure, *upc)
    spec = tmp_path / f"{preset}_env.json"
    k_start, k_step, per_level = curriculum
    planner_cli(
        "export-env", "--structure", str(structure), "--reward", reward,
        "--seed", str(seed), "--k-start", str(k_start), "--k-step", str(k_step),
        "--episodes-per-level", str(per_level), "--eps-decay", str(eps_decay),
        "--out", str(spec),
    )
    return str(spec)


def validate_sequence_via_planner(tmp_path, structure_path, sequence_path, reward):
    report_path = tmp_path / "report.json"
    planner_cli(
        "validate", "--structure", str(structure_path), "--sequence",
        str(sequence_path), "--reward", reward, "--out", str(report_path),
    )
    return json.loads(report_path.read_text())


@pytest.fixture
def fourbrick_spec(tmp_path):
    return export_spec(tmp_path, "4brick", upc=None)
