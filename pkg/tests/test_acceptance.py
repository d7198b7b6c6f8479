"""Acceptance criteria, one test each, at their stated tolerances and time budgets.

Every test prints a single ``PASS``/``FAIL`` line, visible with ``pytest -s``
or in the verbose log, before asserting.
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import EXTERIOR_PAIRS, INTERIOR_POINTS, OMEGA, RADIUS, lossy_material
from mlnf_verify.cli import main
from mlnf_verify.green import Homogeneous, SphereInVacuum, Vacuum
from mlnf_verify.identities import (
    CheckConfig,
    run_check,
    verify_commutator_kernel,
    verify_fundamental_relation,
    verify_vacuum_closed_form,
)
from mlnf_verify.numerics import CONSTANTS

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
K0 = OMEGA / CONSTANTS.c
DIELECTRIC = lossy_material(2 + 1j, 1.0)
MAGNETIC = lossy_material(2 + 1j, 1.5 + 0.3j)
SUITE_START = time.perf_counter()


def announce(capsys, number: int, ok: bool, text: str) -> None:
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}: {text}")


def sphere(material) -> SphereInVacuum:
    return SphereInVacuum(RADIUS, material)


def config(geometry, **kw) -> CheckConfig:
    interior = INTERIOR_POINTS if isinstance(geometry, SphereInVacuum) else ()
    return CheckConfig(geometry, (OMEGA,), kw.pop("pairs", EXTERIOR_PAIRS), kw.pop("interior", interior), **kw)


def timed(fn, *args, **kw):
    t = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t


def test_01_vacuum_surface_relation(capsys):
    t = time.perf_counter()
    worst = 0.0
    r = np.array([0.3, -0.2, 0.4]) / K0
    d = np.array([0.48, 0.6, -0.64])
    for s in (0.5, 1.0, 5.0):
        rep = verify_vacuum_closed_form(OMEGA, r, r + s / K0 * d)
        worst = max(worst, rep.details["quad_vs_closed"], rep.details["quad_vs_img"],
                    rep.details["closed_vs_img"])
    elapsed = time.perf_counter() - t
    ok = worst <= 1e-10 and elapsed < 1.0
    announce(capsys, 1, ok, f"vacuum surface relation, max pairwise residual {worst:.2e} (<= 1e-10), {elapsed:.2f} s")
    assert ok


def test_02_reciprocity(capsys):
    t = time.perf_counter()
    unbounded = max(run_check("reciprocity", config(g)).residual
                    for g in (Vacuum(), Homogeneous(MAGNETIC)))
    rep = run_check("reciprocity", config(sphere(MAGNETIC)))
    elapsed = time.perf_counter() - t
    ok = unbounded <= 1e-13 and rep.residual <= 1e-10 and rep.passed and elapsed < 10
    announce(capsys, 2, ok, f"reciprocity, unbounded {unbounded:.2e} (<= 1e-13), sphere {rep.residual:.2e} "
             f"(<= 1e-10) over {rep.details['pairs']} pairs, {elapsed:.1f} s")
    assert ok


def test_03_fundamental_relation(capsys):
    t = time.perf_counter()
    diel = verify_fundamental_relation(config(sphere(DIELECTRIC)))
    mag = verify_fundamental_relation(config(sphere(MAGNETIC)))
    dropped = verify_fundamental_relation(config(sphere(DIELECTRIC)), include_volume=False)
    elapsed = time.perf_counter() - t
    ok = (diel.passed and diel.residual <= 1e-6 and mag.passed and mag.residual <= 1e-5
          and dropped.residual >= 1e-2 and elapsed < 300)
    announce(capsys, 3, ok, f"fundamental relation, mu = 1: {diel.residual:.2e} (<= 1e-6), "
             f"mu != 1: {mag.residual:.2e} (<= 1e-5), volume dropped: {dropped.residual:.2e} (>= 1e-2), "
             f"{elapsed:.0f} s")
    assert ok


def test_04_mode_farfield_link(capsys):
    rng = np.random.default_rng(7)
    outer = rng.normal(size=(12, 3))
    outer *= (rng.uniform(1.2, 3.0, 12) / np.linalg.norm(outer, axis=1))[:, None]
    inner = rng.normal(size=(10, 3))
    inner *= (rng.uniform(0.05, 0.9, 10) / np.linalg.norm(inner, axis=1))[:, None]
    pairs = tuple((tuple(outer[2 * i]), tuple(outer[2 * i + 1])) for i in range(6))
    cfg = config(sphere(MAGNETIC), pairs=pairs, interior=tuple(map(tuple, inner)))
    rep, elapsed = timed(run_check, "mode_farfield_link", cfg)
    points = rep.details["points"]
    ok = rep.passed and rep.residual <= 1e-8 and points >= 20 and elapsed < 30
    announce(capsys, 4, ok, f"mode / far-field link, residual {rep.residual:.2e} (<= 1e-8) at {points} points, "
             f"{elapsed:.1f} s")
    assert ok


def test_05_mode_completeness(capsys):
    t = time.perf_counter()
    sph = run_check("mode_completeness", config(sphere(DIELECTRIC)))
    vac = run_check("mode_completeness", config(Vacuum()))
    elapsed = time.perf_counter() - t
    ok = sph.passed and sph.residual <= 1e-7 and vac.passed and vac.residual <= 1e-10 and elapsed < 120
    announce(capsys, 5, ok, f"mode completeness, sphere {sph.residual:.2e} (<= 1e-7), vacuum {vac.residual:.2e} "
             f"(<= 1e-10), {elapsed:.0f} s")
    assert ok


def test_06_commutator_kernel(capsys):
    rep, elapsed = timed(verify_commutator_kernel, config(sphere(DIELECTRIC)))
    dropped = rep.details["volume_dropped_residual"]
    ok = rep.passed and rep.residual <= 1e-6 and dropped > 1e-2 and elapsed < 300
    announce(capsys, 6, ok, f"commutator kernel, full {rep.residual:.2e} (<= 1e-6), volume dropped "
             f"{dropped:.2e} (> 1e-2), {elapsed:.0f} s")
    assert ok


def test_07_frequency_integrals(capsys):
    rep, elapsed = timed(run_check, "frequency_integrals", config(Vacuum()))
    parts = ", ".join(f"{k} {v:.2e}" for k, v in sorted(rep.details.get("residuals", {}).items()))
    ok = rep.passed and rep.residual <= 1e-3 and elapsed < 120
    announce(capsys, 7, ok, f"frequency integrals I1-I4, residuals {parts} (<= 1e-3), {elapsed:.0f} s")
    assert ok


def test_08_kramers_kronig_and_coupling(capsys):
    t = time.perf_counter()
    cfg = config(sphere(MAGNETIC))
    kk = run_check("kramers_kronig", cfg)
    cp = run_check("coupling_identity", cfg)
    elapsed = time.perf_counter() - t
    ok = kk.passed and kk.residual <= 1e-5 and cp.passed and cp.residual <= 1e-4 and elapsed < 60
    announce(capsys, 8, ok, f"Kramers-Kronig {kk.residual:.2e} (<= 1e-5), coupling identity {cp.residual:.2e} "
             f"(<= 1e-4), {elapsed:.1f} s")
    assert ok


def test_09_jones_lemma(capsys):
    rep, elapsed = timed(run_check, "jones_lemma", config(Vacuum(), jones_xi=50.0))
    ratio = rep.details["ratio_R_xi_over_R_2xi"]
    ok = 3.2 <= ratio <= 4.8 and elapsed < 10
    announce(capsys, 9, ok, f"Jones lemma, R(xi)/R(2 xi) = {ratio:.3f} at xi = 50 (in [3.2, 4.8]), "
             f"{elapsed:.1f} s")
    assert ok


def test_10_transversality(capsys):
    t = time.perf_counter()
    vac = run_check("transversality", config(Vacuum()))
    sph = run_check("transversality", config(sphere(MAGNETIC)))
    elapsed = time.perf_counter() - t
    ok = vac.residual <= 1e-12 and sph.residual <= 1e-12 and sph.details["directions"] > 0 and elapsed < 5
    announce(capsys, 10, ok, f"transversality, vacuum {vac.residual:.2e}, sphere {sph.residual:.2e} (<= 1e-12), "
             f"{elapsed:.1f} s")
    assert ok


def test_11_cli_contract(capsys, tmp_path):
    t = time.perf_counter()
    vac = str(CONFIGS / "vacuum.json")
    codes = [main(["run", vac, "--out", str(tmp_path / "a"), "--reproducible"]),
             main(["run", vac, "--out", str(tmp_path / "b"), "--reproducible", "--jobs", "2"])]
    identical = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
                    for f in ["manifest.json"] + [p.name for p in (tmp_path / "a").glob("*.csv")])
    data = json.loads((CONFIGS / "sphere.json").read_text())
    data["tolerances"] = {name: 1e-30 for name in data["checks"]}
    strict = tmp_path / "strict.json"
    strict.write_text(json.dumps(data))
    codes.append(main(["run", str(strict), "--out", str(tmp_path / "c")]))
    broken = tmp_path / "broken.json"
    broken.write_text(json.dumps({"schema_version": 1, "checks": ["foo"]}))
    codes.append(main(["run", str(broken)]))
    capsys.readouterr()
    elapsed = time.perf_counter() - t
    total = time.perf_counter() - SUITE_START
    ok = codes == [0, 0, 1, 2] and identical and total < 15 * 60
    announce(capsys, 11, ok, f"CLI exit codes {codes} (want [0, 0, 1, 2]), byte-identical manifests: {identical}, "
             f"{elapsed:.1f} s; acceptance suite total {total / 60:.1f} min (< 15)")
    assert ok
