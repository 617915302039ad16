"""Acceptance suite: the exit criteria of the laboratory, one test each.

Every test prints a single PASS line after its assertions so a plain
``pytest -s tests/test_acceptance.py`` reads as a checklist.  Tolerances are
pinned here and nowhere else.
"""

import itertools
import json
import math
import os
import time
from fractions import Fraction

import numpy as np
import pytest

from calab.approximation import (
    CoordinateShiftIsometry,
    IdentityIsometry,
    PowerIsometry,
    fattened_probe,
    hc_growth,
    rc_lower,
    rc_upper,
)
from calab.cli import main as cli_main
from calab.cli import run_config, validate_config
from calab.intervals import Interval
from calab.isometries import (
    INFINITE,
    ZERO,
    PermutationSpec,
    classify_ell1,
    classify_linfty,
)
from calab.l1geometry import BasisConstants, basis_constants, lower_basis_constant
from calab.spaces import REAL, VectorFamily, lp_space, matrix_space, sup_space
from calab.spin import car_generators, car_l2_identity, car_tensor_l1_identity, hamming_packing, pauli_span_norm, shift_growth_experiment
from calab.subshifts import entropy_estimate, full_shift, golden_mean_shift, sep_count, spn_count
from conftest import CONFIG_DIR
from test_l1geometry import brute_force_sphere_minimum

GOLDEN_ENTROPY = math.log((1 + math.sqrt(5)) / 2)


def report(line):
    print(f"\n[acceptance] {line}: PASS")


def test_criterion_1_subshift_entropy():
    start = time.monotonic()
    full = entropy_estimate(full_shift(2), range(2, 13), [0.5])
    full_elapsed = time.monotonic() - start
    assert abs(full.extrapolated - math.log(2)) / math.log(2) <= 0.02
    assert full.oracle == pytest.approx(math.log(2), abs=1e-9)
    assert full_elapsed < 30.0

    start = time.monotonic()
    golden = entropy_estimate(golden_mean_shift(), range(4, 15), [0.5])
    golden_elapsed = time.monotonic() - start
    assert abs(golden.extrapolated - GOLDEN_ENTROPY) / GOLDEN_ENTROPY <= 0.03
    assert golden.oracle == pytest.approx(GOLDEN_ENTROPY, abs=1e-9)
    assert golden_elapsed < 30.0
    report(
        "criterion 1 (subshift entropy within 2%/3% of spectral oracle, "
        f"{full_elapsed:.1f}s/{golden_elapsed:.1f}s)"
    )


def test_criterion_2_span_norm_isometry():
    rng = np.random.default_rng(20240402)
    start = time.monotonic()
    for n in range(1, 7):
        for _ in range(100):
            coeffs = [tuple(row) for row in rng.normal(size=(n, 2))]
            formula, matrix = pauli_span_norm(coeffs, crosscheck=True)
            assert abs(formula - matrix) <= 1e-9 * max(1.0, formula)
    elapsed = time.monotonic() - start
    assert elapsed < 60.0
    report(f"criterion 2 (600 span-norm crosschecks within 1e-9, {elapsed:.1f}s)")


def test_criterion_3_car_identities():
    eye_checked = 0
    for n in range(1, 9):
        fam = car_generators(n)
        for i, u in enumerate(fam.matrices):
            for v in fam.matrices[i + 1 :]:
                assert not np.any(u @ v + v @ u)  # integer arithmetic, exactly zero
                eye_checked += 1
    rng = np.random.default_rng(20240403)
    for n in range(1, 5):
        fam = car_generators(n)
        for _ in range(20):
            c = rng.normal(size=n)
            l2 = car_l2_identity(fam, c)
            assert l2.passed
            assert abs(l2.norm_value - math.sqrt(float(c @ c))) <= 1e-9
            t1 = car_tensor_l1_identity(fam, c)
            assert t1.passed
            assert abs(t1.norm_value - float(np.abs(c).sum())) <= 1e-9
    report(f"criterion 3 (CAR anticommutation exact for n<=8, {eye_checked} pairs; identities within 1e-9)")


def test_criterion_4_equivalence_oracle_agreement():
    rng = np.random.default_rng(20240404)
    agreements = 0
    for trial in range(50):
        size = int(rng.integers(1, 4))
        dim = int(rng.integers(1, 4))
        if trial % 4 == 3:
            space = sup_space(dim, REAL)
        else:
            space = lp_space(float(rng.choice([1.0, 2.0, math.inf])), dim, REAL)
        fam = VectorFamily(space, tuple(rng.normal(size=dim) for _ in range(size)))
        interval = lower_basis_constant(fam, 1e-3)
        refine = {1: 16, 2: 8, 3: 5}[size]  # keeps the oracle lattice a superset
        denominator = size * 2048 * refine  # l1 covering radius <= 1e-4 throughout
        oracle = brute_force_sphere_minimum(fam.vectors, space, denominator)
        assert interval.lo - 1e-12 <= oracle <= interval.hi + 1e-12
        agreements += 1

    for n in (2, 3, 4, 6):
        anchor = basis_constants(
            VectorFamily(lp_space(1, n, REAL), tuple(np.eye(n))), method="exact"
        ).lower
        assert anchor.contains(1.0) and anchor.width < 1e-6
        linf = basis_constants(
            VectorFamily(lp_space(math.inf, n, REAL), tuple(np.eye(n))), method="exact"
        ).lower
        assert linf.contains(1.0 / n)
    pauli = VectorFamily(
        matrix_space(2, REAL),
        (np.array([1.0, 0, 0, -1.0]), np.array([0.0, 1.0, 1.0, 0.0])),
    )
    pauli_iv = lower_basis_constant(pauli, 1e-3)
    assert pauli_iv.contains(2**-0.5)
    assert pauli_iv.width <= 1e-3 + 1e-9
    report(f"criterion 4 ({agreements}/50 oracle agreements; analytic anchors hold)")


def test_criterion_5_packing_grid():
    cells = 0
    for m in (2, 3):
        for n in range(6, 13):
            for delta in (0.05, 0.1):
                packing = hamming_packing(m, n, delta)
                assert packing.size >= math.ceil(packing.bound_rhs)
                assert packing.verify()
                cells += 1
    anchor = hamming_packing(2, 10, 0.1)
    assert math.ceil(anchor.bound_rhs) == 19
    assert anchor.size >= 19
    report(f"criterion 5 (packing bound and Hamming floor re-verified on {cells} cells; anchor 19)")


def test_criterion_6_classifier_table():
    identity = PermutationSpec()
    shift = PermutationSpec(default=("shift", 1))
    blocks = PermutationSpec(blocks=True)
    cycles = PermutationSpec(cycles=((0, 1, 2), (5, 6)))
    expected = [
        (identity, ZERO, ZERO),
        (shift, INFINITE, INFINITE),
        (blocks, INFINITE, ZERO),
        (cycles, ZERO, ZERO),
    ]
    for spec, linf, ell1 in expected:
        assert classify_linfty(spec).verdict == linf
        assert classify_ell1(spec).verdict == ell1
    report("criterion 6 (classifier table matches on all four presentation shapes)")


def test_criterion_7_real_scalar_shift_slope():
    seq = shift_growth_experiment(2, 12, 0.05, field="real")
    values = seq.normalized_values()
    assert values[-1] >= 0.5
    # the Hamming floor is constant (= 2) from n = 7 on; the slope sequence is
    # non-decreasing there and the n <= 6 prefix sits at log 2 exactly, where a
    # unit floor makes every pair of words admissible
    stable_tail = values[6:]
    assert stable_tail == sorted(stable_tail)
    for v in values[:6]:
        assert v == pytest.approx(math.log(2), abs=1e-12)
    report(f"criterion 7 (real shift slope {values[-1]:.4f} >= 0.5 at n=12; tail non-decreasing)")


def test_criterion_8_monotonicity_and_scaling_suite():
    # rc_upper: non-increasing in delta, non-decreasing under probe enlargement
    space = lp_space(math.inf, 1, REAL)
    omega = VectorFamily(space, (np.array([1.0]),))
    uppers = [rc_upper(space, omega, d).value for d in (0.25, 0.4, 0.6, 0.9, 1.2)]
    assert uppers == sorted(uppers, reverse=True)
    space2 = lp_space(math.inf, 2, REAL)
    small = VectorFamily(space2, (np.array([0.5, 0.0]),))
    large = VectorFamily(space2, (np.array([0.5, 0.0]), np.array([0.0, 1.0])))
    for delta in (0.3, 0.45, 0.6):
        assert rc_upper(space2, large, delta).value >= rc_upper(space2, small, delta).value

    # rc_lower: non-increasing in delta, linear in a
    fam = VectorFamily(lp_space(1, 4, REAL), tuple(np.eye(4)))
    constants = BasisConstants(1.0, Interval.exact(1.0), Interval.exact(1.0))
    lowers = [rc_lower(fam, d, constants=constants).value for d in (0.2, 0.4, 0.6, 0.8)]
    assert lowers == sorted(lowers, reverse=True)
    base = rc_lower(fam, 0.5, constants=constants).value
    for a in (0.25, 3.0):
        assert rc_lower(fam, 0.5, a=a, constants=constants).value == pytest.approx(a * base)

    # interval refinement nests
    rng = np.random.default_rng(20240405)
    fam2 = VectorFamily(lp_space(2, 2, REAL), (rng.normal(size=2), rng.normal(size=2)))
    for mesh in (0.4, 0.2, 0.1):
        coarse = lower_basis_constant(fam2, mesh)
        fine = lower_basis_constant(fam2, mesh / 2)
        assert fine.lo >= coarse.lo - 1e-12 and fine.hi <= coarse.hi + 1e-12

    # spanning never beats separation
    for system in (full_shift(2), golden_mean_shift()):
        for n in (3, 5, 7):
            for eps in (0.5, 1.5):
                assert spn_count(system, n, eps) <= sep_count(system, n, eps)

    # power scaling: the squared shift against its fattened probe doubles the
    # certified slope (the bound-level face of hc(alpha^k) = k hc(alpha))
    shift_space = lp_space(1, 24, REAL)
    shift = CoordinateShiftIsometry(shift_space)
    omega_s = VectorFamily(shift_space, (np.eye(24)[0],))
    base_seq = hc_growth(shift, omega_s, 0.5, 8, "lower", method="exact")
    doubled_seq = hc_growth(
        PowerIsometry(shift, 2), fattened_probe(shift, omega_s, 2), 0.5, 8, "lower", method="exact"
    )
    ratio = doubled_seq.final_slope / base_seq.final_slope
    assert ratio >= 1.8
    report(f"criterion 8 (monotonicity suite green; power-scaling ratio {ratio:.3f} >= 1.8)")


def test_criterion_9_cli_determinism(tmp_path):
    configs = sorted(os.listdir(CONFIG_DIR))
    assert configs, "bundled configs missing"
    for name in configs:
        with open(os.path.join(CONFIG_DIR, name)) as fh:
            config = validate_config(json.load(fh))
        out1 = tmp_path / f"{name}-1"
        out2 = tmp_path / f"{name}-2"
        m1 = run_config(config, str(out1), quiet=True)
        m2 = run_config(config, str(out2), quiet=True)
        m1.pop("wall_time_s")
        m2.pop("wall_time_s")
        assert m1 == m2, f"{name} manifests differ"
        for fname in os.listdir(out1):
            if fname.endswith(".csv"):
                assert (out1 / fname).read_text() == (out2 / fname).read_text()

    bad = tmp_path / "malformed.json"
    bad.write_text('{"experiment": "packing", "m": 2}')
    out_bad = tmp_path / "bad-out"
    assert cli_main(["--quiet", "--out", str(out_bad), "run", str(bad)]) == 2
    assert not out_bad.exists()
    report(f"criterion 9 ({len(configs)} configs rerun identically; malformed exits 2, writes nothing)")
