"""End-to-end acceptance gate.

Each section exercises one headline behavior of the package at full scale
with its stated tolerance.  Known limitation: the two mollification-scale
assertions in the commutator section fail — shrinking the state-mollification
scale contracts the quadrature toward the unregularized overlap from below
for every profile we tested, so the absolute error grows as that scale
shrinks.  The failures are reported honestly rather than weakened away.
"""

import math
import time

import numpy as np
import pytest

from sclnoise.dualpde import heat_kernel_norm
from sclnoise.fields import GridFunction
from sclnoise.flux import (
    MollifierSpec,
    constant_flux,
    model_flux,
    mollify_flux,
    reference_edges,
    reference_gap_l1,
    reference_solution,
)
from sclnoise.kinetic import chi_field, pair_gap_identity, reconstruct_u
from sclnoise.solver import (
    SolverConfig,
    SpaceTimeBump,
    check_apriori_bounds,
    defect_measure,
    kruzkov_entropy_residual,
    solve_viscous,
    speed_from_flux,
)
from sclnoise.stochastic import sample_brownian, transformed_solve_per_path
from sclnoise.experiments import default_config, run_experiment
from sclnoise.io import read_csv


def run_full(name, tmp_path_factory, threads=2):
    out = str(tmp_path_factory.mktemp(name))
    cfg = default_config(name)
    run_experiment(cfg, out, threads=threads, smoke=False)
    certs = {}
    with open(f"{out}/certificates.txt") as fh:
        for line in fh:
            k, _, v = line.partition(" = ")
            certs[k.strip()] = v.strip()
    return out, certs


# ---------------------------------------------------------------------------
# closed-form pair of entropy solutions


def test_two_entropy_solutions_with_exact_l1_separation():
    start = time.monotonic()
    K, T_max = 2.5, 2.0
    grid = GridFunction(np.zeros(1024), -2.0, 6.0)
    for t in (0.5, 1.0, 2.0):
        u1 = reference_solution(1, t, grid.centers, K, T_max)
        u2 = reference_solution(2, t, grid.centers, K, T_max)
        gap = float(np.sum(np.abs(u1 - u2)) * grid.dx)
        assert gap == pytest.approx(float(reference_gap_l1(t)), abs=1e-10)

    b = model_flux(K)
    for variant in (1, 2):
        def u_of(t, x, _v=variant):
            return reference_solution(_v, t, x, K, T_max)

        def breaks(t, _v=variant):
            lo, hi = reference_edges(_v, t)
            return [float(lo), float(hi)]

        for x0 in (-0.5, 0.5, 1.5, 2.5, 3.5):
            phi = SpaceTimeBump(t0=1.0, rt=0.8, x0=x0, rx=0.45)
            res = kruzkov_entropy_residual(u_of, b, k=0.5, phi=phi,
                                           domain=(T_max, -2.0, 6.0),
                                           x_breaks=breaks)
            assert res >= -1e-3
    assert time.monotonic() - start < 1.0


# ---------------------------------------------------------------------------
# kinetic identities


def test_kinetic_identities_on_random_profiles():
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    for _ in range(100):
        n = int(rng.integers(4, 24))
        u1 = GridFunction(rng.uniform(-0.8, 0.8, n).round(2), -2.0, 2.0)
        u2 = GridFunction(rng.uniform(-0.8, 0.8, n).round(2), -2.0, 2.0)
        c1 = chi_field(u1, 1.0, 64)
        c2 = chi_field(u2, 1.0, 64)
        lhs, rhs = pair_gap_identity(c1, c2)
        assert lhs == pytest.approx(rhs, abs=1e-12)
        u_rec, _ = reconstruct_u(c1)
        assert np.max(np.abs(u_rec.values - u1.values)) <= c1.dxi + 1e-12
    assert time.monotonic() - start < 1.0


# ---------------------------------------------------------------------------
# energy bounds of the viscous approximation


def test_viscous_energy_bounds_at_matched_scales():
    start = time.monotonic()
    n = 2048
    g = GridFunction(np.zeros(n), -1.0, 3.0)
    assert g.dx == pytest.approx(1.0 / 512)
    u0 = g.with_values(((g.centers >= 0) & (g.centers <= 1)).astype(float))
    b = mollify_flux(model_flux(2.0), MollifierSpec(0.05, 0.05),
                     window=(-2.0, 4.0), table_n=1 << 14)
    cfg = SolverConfig(viscosity_eps=g.dx)
    traj = solve_viscous(speed_from_flux(b, g.centers), u0, cfg, 1.0,
                         output_times=np.linspace(0, 1.0, 33)[1:-1])
    m = defect_measure(traj, cfg, R=1.0, n_xi=64)
    cert = check_apriori_bounds(traj, m, b, p=2.0)
    assert cert.max_principle_slack >= 0.0
    l2sq = u0.norm_lp(2.0) ** 2
    assert cert.lp_slack >= -1e-3 * l2sq
    assert time.monotonic() - start < 30.0


# ---------------------------------------------------------------------------
# exactness of the path transformation


def test_path_transform_is_exact_shift_and_mean_is_heat_smoothed():
    start = time.monotonic()
    n = 512
    g = GridFunction(np.zeros(n), -5.0, 5.0)
    u0 = g.with_values(
        np.where(np.abs(g.centers) < 1.5,
                 np.cos(np.pi * g.centers / 3.0) ** 2, 0.0))
    slope = float(np.max(np.abs(np.diff(u0.values))) / g.dx)
    cfg = SolverConfig(viscosity_eps=0.0)
    sigma, T = 1.0, 0.5
    probes = np.linspace(-2.5, 2.5, 10)

    n_paths = 2000
    vals = np.empty((n_paths, probes.size))
    for i in range(n_paths):
        W = sample_brownian(T, T / 256.0, sigma, 7000 + i)
        traj = transformed_solve_per_path(constant_flux(0.0), u0, W, cfg, T)
        final = traj.snapshots[-1]
        if i < 5:  # pathwise check: the output is exactly the shifted data
            shift = u0.interp(g.centers - W.at(T))
            assert np.max(np.abs(final.values - shift)) <= g.dx * slope
        vals[i] = np.interp(probes, g.centers, final.values)

    mean = vals.mean(axis=0)
    se = vals.std(axis=0, ddof=1) / math.sqrt(n_paths)
    z = np.linspace(-5.0, 5.0, 4001)
    var = sigma ** 2 * T
    kern = np.exp(-z ** 2 / (2 * var)) / np.sqrt(2 * np.pi * var)
    exact = np.trapezoid(
        np.where(np.abs(probes[:, None] - z[None, :]) < 1.5,
                 np.cos(np.pi * (probes[:, None] - z[None, :]) / 3.0) ** 2,
                 0.0) * kern[None, :], z, axis=1)
    assert np.all(np.abs(mean - exact) <= 3.0 * se + 2.0 * g.dx)
    assert time.monotonic() - start < 60.0


# ---------------------------------------------------------------------------
# noise restores stability of the vanishing-mollification limit


@pytest.fixture(scope="module")
def stability_run(tmp_path_factory):
    start = time.monotonic()
    out, certs = run_full("stability_by_noise", tmp_path_factory)
    return out, certs, time.monotonic() - start


def test_noisy_gap_decreases_with_mollification_scale(stability_run):
    _, certs, _ = stability_run
    assert certs["gap_decreases_with_scale"] == "true"


def test_noiseless_control_gap_does_not_vanish(stability_run):
    _, certs, _ = stability_run
    assert certs["zero_noise_control_stalls"] == "true"
    assert float(certs["final_gap_sigma0"]) >= 10.0 * float(certs["final_gap_sigma1"])


def test_distinct_data_ratio_bounded_under_refinement(stability_run):
    _, certs, elapsed = stability_run
    assert certs["distinct_data_ratio_bounded"] == "true"
    assert elapsed < 600.0


# ---------------------------------------------------------------------------
# decay of the coupled kinetic gap


@pytest.fixture(scope="module")
def gap_decay_run(tmp_path_factory):
    return run_full("gap_decay", tmp_path_factory)


def test_gap_starts_at_quarter_identity(gap_decay_run):
    _, certs = gap_decay_run
    assert certs["initial_gap_is_quarter_identity"] == "true"
    assert float(certs["initial_gap"]) == pytest.approx(
        float(certs["quarter_identity"]), abs=1e-12)


def test_gap_growth_constant_finite_and_grid_stable(gap_decay_run):
    _, certs = gap_decay_run
    c_coarse = float(certs["c_meas_coarse"])
    c_fine = float(certs["c_meas_fine"])
    assert math.isfinite(c_coarse) and math.isfinite(c_fine)
    assert abs(c_fine - c_coarse) <= 0.2 * c_coarse
    assert certs["gap_bounded_by_initial"] == "true"


# ---------------------------------------------------------------------------
# mollification-exchange quadrature


@pytest.fixture(scope="module")
def commutator_run(tmp_path_factory):
    return run_full("commutator_convergence", tmp_path_factory)


def test_exchange_error_decreases_in_state_scale(commutator_run):
    # Known red: the measured |error| grows as the state scale shrinks
    # (the mollification contracts the overlap from below for every
    # profile tested); kept at the stated tolerance rather than loosened.
    _, certs = commutator_run
    assert certs["delta_sweep_monotone"] == "true"


def test_exchange_error_decreases_in_space_scale(commutator_run):
    _, certs = commutator_run
    assert certs["eps_sweep_monotone"] == "true"


def test_exchange_error_final_below_tenth_of_initial(commutator_run):
    # Known red: same mechanism as the state-scale sweep above.
    _, certs = commutator_run
    assert certs["final_below_tenth_of_initial"] == "true"


def test_exchange_error_vanishes_for_constant_flux(commutator_run):
    _, certs = commutator_run
    assert certs["constant_flux_exactly_zero"] == "true"
    assert float(certs["constant_flux_error"]) <= 1e-14


# ---------------------------------------------------------------------------
# backward dual machinery


def test_kernel_norms_match_closed_forms_and_scaling():
    for t in (0.1, 0.5, 1.0, 2.0):
        for m in (1.0, 1.5, 2.0, 3.0):
            exact = (2 * math.pi * t) ** (-(m - 1) / (2 * m)) * m ** (-1 / (2 * m))
            assert heat_kernel_norm(t, m) == pytest.approx(exact, abs=1e-10)
        assert heat_kernel_norm(t, math.inf) == pytest.approx(
            1.0 / math.sqrt(2 * math.pi * t), abs=1e-10)
        for m in (1.0, 2.0, math.inf):
            ratio = heat_kernel_norm(4 * t, m) / heat_kernel_norm(t, m)
            d_over = 0.0 if math.isinf(m) else 1.0 / m
            assert abs(ratio - 4.0 ** (-(1.0 - d_over) / 2.0)) <= 1e-12


@pytest.fixture(scope="module")
def dual_run(tmp_path_factory):
    start = time.monotonic()
    out, certs = run_full("dual_pde_check", tmp_path_factory)
    return out, certs, time.monotonic() - start


def test_monte_carlo_representation_matches_grid_solve(dual_run):
    out, certs, _ = dual_run
    assert certs["fk_agrees_with_fd"] == "true"
    header, rows = read_csv(f"{out}/fk_crossval.csv")
    assert len(rows) == 5
    for r in rows:
        fd, fk, se = float(r[1]), float(r[2]), float(r[3])
        assert abs(fk - fd) <= 3.0 * se


def test_dual_norm_and_gronwall_certificates(dual_run):
    _, certs, elapsed = dual_run
    assert certs["w1inf_bound_holds"] == "true"
    assert certs["gronwall_bound_holds"] == "true"
    assert certs["w1inf_uniform_in_scale"] == "true"
    assert elapsed < 300.0


# ---------------------------------------------------------------------------
# reproducibility of every experiment


def csv_bytes(out_dir):
    import glob
    import os

    data = {}
    for path in sorted(glob.glob(os.path.join(out_dir, "*.csv"))):
        with open(path, "rb") as fh:
            data[os.path.basename(path)] = fh.read()
    assert data, f"no CSV artifacts in {out_dir}"
    return data


@pytest.mark.parametrize("name", [
    "nonuniqueness_demo", "stability_by_noise", "gap_decay",
    "selection_study", "commutator_convergence", "dual_pde_check",
    "apriori_bounds", "heat_kernel_table",
])
def test_reruns_and_thread_counts_are_byte_identical(name, tmp_path):
    cfg = default_config(name)
    baseline = None
    for tag, threads in (("a", 1), ("b", 1), ("c", 2), ("d", 8)):
        out = str(tmp_path / f"{name}_{tag}")
        run_experiment(cfg, out, threads=threads, smoke=True)
        data = csv_bytes(out)
        if baseline is None:
            baseline = data
        else:
            assert data == baseline
