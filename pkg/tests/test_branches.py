import numpy as np
import pytest
from scipy.integrate import quad

from spinbath import (
    Branch,
    BranchEnsemble,
    DistSpec,
    TimeGrid,
    apply_h,
    assemble_state,
    branch_state,
    build_params,
    ensemble_state0,
    evolve_diagonal,
    fidelity,
    lambda_nu,
    make_ensemble,
    offdiag_elements,
    propagate,
    sample_params,
    scaling_stats,
    system_amps,
)
from spinbath.branches import cumulative_simpson, _apply_env_rotation


def zurek_params(seed, M, g=0.5):
    return sample_params(seed, M, DistSpec(g=g, E=0.0, omega_low=0.0, omega_high=0.0))


class TestSystemAmps:
    def test_identity_at_t0(self):
        c1, c2 = 0.6, 0.8j
        a1, a2 = system_amps(0.0, 1.3, c1, c2)
        assert a1 == c1 and a2 == c2

    def test_quarter_period(self):
        a1, a2 = system_amps(np.pi / 2, 1.0, 1.0, 0.0)
        assert abs(a1) < 1e-15 and abs(a2 + 1j) < 1e-15

    def test_norm_preserved(self, rng):
        for _ in range(20):
            u = rng.uniform(-1, 1)
            phi = rng.uniform(0, 2 * np.pi)
            c1 = np.sqrt((1 + u) / 2)
            c2 = np.sqrt((1 - u) / 2) * np.exp(1j * phi)
            a1, a2 = system_amps(rng.uniform(0, 10), rng.uniform(-2, 2), c1, c2)
            assert abs(abs(a1) ** 2 + abs(a2) ** 2 - 1.0) < 1e-14


class TestEnsembles:
    def test_full_and_sampled(self):
        full = make_ensemble(4, "bloch-random", seed=0)
        assert full.n == 16 and not full.sampled
        sub = make_ensemble(6, "bloch-random", seed=0, k=10)
        assert sub.n == 10 and sub.sampled
        assert len(np.unique(sub.nus)) == 10

    def test_modes(self):
        prod = make_ensemble(3, "product", seed=1)
        assert np.allclose(prod.c, prod.c[0])
        pol = make_ensemble(3, "polarized", seed=1)
        assert np.all((np.abs(pol.c[:, 0]) ** 2 == 1.0) | (np.abs(pol.c[:, 1]) ** 2 == 1.0))

    def test_weight_normalization(self):
        e = make_ensemble(5, "bloch-random", seed=2)
        assert abs(np.sum(np.abs(e.alpha0) ** 2) - 1.0) < 1e-12

    def test_full_ensemble_guard(self):
        with pytest.raises(ValueError, match="k for larger M"):
            make_ensemble(15, "bloch-random", seed=0)

    def test_duplicate_nus_rejected(self):
        with pytest.raises(ValueError, match="distinct"):
            BranchEnsemble(
                M=2,
                nus=np.array([1, 1]),
                c=np.array([[1.0, 0.0], [1.0, 0.0]], dtype=complex),
                alpha0=np.array([1.0, 1.0], dtype=complex) / np.sqrt(2),
            )


class TestLambdaNu:
    def test_t0_all_up(self):
        p = sample_params(4, 3, DistSpec(g=0.5))
        br = Branch(nu=0, c1=1.0, c2=0.0)
        assert lambda_nu(p, br, 0.0) == pytest.approx(np.sum(p.v[:, 0, 0]), abs=1e-14)

    def test_constant_in_zurek_limit(self):
        p = zurek_params(1, 4)
        br = Branch(nu=5, c1=0.6, c2=0.8)
        vals = [lambda_nu(p, br, t) for t in (0.0, 0.7, 2.3, 9.1)]
        assert np.ptp(vals) < 1e-14

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_sandwich_oracle(self, seed):
        p = sample_params(seed, 4, DistSpec(g=0.4, E=0.7))
        ens = make_ensemble(4, "bloch-random", seed=seed)
        br = ens.branch(seed + 3)
        t = 1.37
        state = branch_state(p, br, t)
        oracle = np.vdot(state, apply_h(p, state, "interaction_only")).real
        assert lambda_nu(p, br, t) == pytest.approx(oracle, abs=1e-12)


class TestOffdiagElements:
    def test_zero_at_t0(self):
        p = sample_params(2, 4, DistSpec(g=0.5))
        br = Branch(nu=3, c1=0.6, c2=0.8)
        assert np.max(np.abs(offdiag_elements(p, br, 0.0))) == 0.0

    def test_zero_at_quarter_site_period(self):
        p = build_params(M=2, E=0.0, omega=[1.0, 2.0], v=np.ones((2, 2, 2)))
        br = Branch(nu=0, c1=1.0, c2=0.0)
        t = np.pi / 2  # omega_1 t = pi/2: sin cos vanishes on site 1
        assert abs(offdiag_elements(p, br, t)[0]) < 1e-15

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_sandwich_oracle_with_sign(self, seed):
        # pins the (v_down - v_up) combination against the explicit overlap
        p = sample_params(seed, 4, DistSpec(g=0.4, E=0.7))
        ens = make_ensemble(4, "bloch-random", seed=seed + 10)
        br = ens.branch(2 * seed + 1)
        t = 0.9 + 0.2 * seed
        bra = branch_state(p, br, t)
        entries = offdiag_elements(p, br, t)
        for l in range(4):
            flipped = Branch(nu=br.nu ^ (1 << l), c1=br.c1, c2=br.c2)
            ket = branch_state(p, flipped, t)
            oracle = np.vdot(bra, apply_h(p, ket, "interaction_only"))
            assert abs(entries[l] - oracle) < 1e-12


class TestScalingStats:
    def test_constant_couplings_slope_one(self):
        # g ~ 0 with a common shift c: diagonal = M c exactly
        s = scaling_stats([8, 32, 128], seed=0, t=1.0, samples=20, g=1e-12, diag_shift=0.5)
        assert s.diag_slope == pytest.approx(1.0, abs=1e-9)
        for i, m in enumerate(s.m_list):
            assert s.diag_mean[i] == pytest.approx(0.5 * m, rel=1e-9)

    def test_phasor_sum_std(self, rng):
        # independent oracle for the sqrt(M/8) claim behind the O(sqrt M) law
        M, n = 800, 4000
        theta = rng.uniform(0, 2 * np.pi, size=(n, M))
        sums = np.sum(np.sin(theta) * np.cos(theta), axis=1)
        assert np.std(sums) == pytest.approx(np.sqrt(M / 8), rel=0.05)

    def test_offdiag_slope_half(self):
        s = scaling_stats([64, 256, 1024, 4096], seed=3, t=1.0, samples=200)
        assert abs(s.offdiag_slope - 0.5) < 0.15

    def test_input_validation(self):
        with pytest.raises(ValueError, match="3 bath sizes"):
            scaling_stats([8, 16], seed=0, t=1.0, samples=10)
        with pytest.raises(ValueError, match="below 8"):
            scaling_stats([4, 8, 16], seed=0, t=1.0, samples=10)


class TestCumulativeSimpson:
    def test_linear_integrand_exact(self):
        t = np.linspace(0, 2, 11)
        out = cumulative_simpson(3.0 * np.ones_like(t), t[1] - t[0])
        assert np.max(np.abs(out - 3.0 * t)) < 1e-13

    def test_fourth_order_on_smooth_integrand(self):
        for n in (20, 40):
            t = np.linspace(0, 3, n + 1)
            out = cumulative_simpson(np.sin(4 * t) * np.exp(-0.3 * t), t[1] - t[0])
            ref = quad(lambda x: np.sin(4 * x) * np.exp(-0.3 * x), 0, 3)[0]
            err_n = abs(out[-1] - ref)
            if n == 20:
                coarse = err_n
        assert err_n < coarse / 10  # ~16x for a 4th-order rule

    def test_rejects_odd_interval_count(self):
        with pytest.raises(ValueError):
            cumulative_simpson(np.zeros(4), 0.1)


class TestEvolveDiagonal:
    def test_no_interaction(self):
        p = build_params(M=3, E=1.0, omega=[1.0, 2.0, 0.5], v=np.zeros((3, 2, 2)))
        ens = make_ensemble(3, "bloch-random", seed=0)
        ph = evolve_diagonal(p, ens, TimeGrid(0, 5, 20))
        assert np.max(np.abs(ph.Lambda)) == 0.0
        assert np.max(np.abs(ph.alpha - ens.alpha0[:, None])) == 0.0

    def test_zurek_linear_growth(self):
        p = zurek_params(5, 4)
        ens = make_ensemble(4, "bloch-random", seed=5)
        grid = TimeGrid(0, 5, 20)
        ph = evolve_diagonal(p, ens, grid)
        expect = ph.lam[:, :1] * grid.times[None, :]
        assert np.max(np.abs(ph.Lambda - expect)) < 1e-13

    def test_fourth_order_convergence(self):
        p = sample_params(8, 4, DistSpec(g=0.4, E=0.9))
        ens = make_ensemble(4, "bloch-random", seed=8)
        ref = evolve_diagonal(p, ens, TimeGrid(0, 4, 640)).Lambda[:, -1]
        err = []
        for n in (40, 80):
            got = evolve_diagonal(p, ens, TimeGrid(0, 4, n)).Lambda[:, -1]
            err.append(np.max(np.abs(got - ref)))
        assert err[1] < err[0] / 10  # ~16x for Simpson

    def test_phase_magnitude_constant(self):
        p = sample_params(9, 5, DistSpec(g=0.6))
        ens = make_ensemble(5, "bloch-random", seed=9)
        ph = evolve_diagonal(p, ens, TimeGrid(0, 6, 30))
        assert np.max(np.abs(np.abs(ph.alpha) - np.abs(ens.alpha0)[:, None])) < 1e-12
        assert np.all(np.isreal(ph.lam))


class TestEnvOrthogonality:
    def test_self_evolution_preserves_orthonormality(self):
        p = sample_params(10, 6, DistSpec(g=0.3))
        t = 1.7
        n = p.n_env
        W = np.eye(n, dtype=complex)  # rows = basis environment states
        _apply_env_rotation(p.omega, t, W)
        gram = W.conj() @ W.T
        assert np.max(np.abs(gram - np.eye(n))) < 1e-12


class TestAssembleState:
    def test_t0_is_initial_state(self):
        p = sample_params(11, 5, DistSpec(g=0.4))
        ens = make_ensemble(5, "bloch-random", seed=11)
        ph = evolve_diagonal(p, ens, TimeGrid(0, 2, 10))
        assert np.max(np.abs(assemble_state(p, ens, ph, 0.0) - ensemble_state0(p, ens))) < 1e-15

    def test_single_branch_free_evolution(self):
        p = build_params(M=4, E=0.9, omega=[1.0, 0.7, 1.3, 0.4], v=np.zeros((4, 2, 2)))
        ens = make_ensemble(4, "bloch-random", seed=12, k=1)
        grid = TimeGrid(0, 5, 20)
        ph = evolve_diagonal(p, ens, grid)
        traj = propagate(ensemble_state0(p, ens), p, grid, store_states=True)
        for k, t in enumerate(grid.times):
            assert np.max(np.abs(assemble_state(p, ens, ph, t) - traj.states[k])) < 1e-8

    def test_zurek_polarized_exactness(self):
        p = zurek_params(13, 8)
        ens = make_ensemble(8, "polarized", seed=13)
        grid = TimeGrid(0, 5, 20)
        ph = evolve_diagonal(p, ens, grid)
        traj = propagate(ensemble_state0(p, ens), p, grid, store_states=True)
        for k, t in enumerate(grid.times):
            assert np.max(np.abs(assemble_state(p, ens, ph, t) - traj.states[k])) < 1e-8

    def test_weak_coupling_fidelity(self):
        p = sample_params(20, 8, DistSpec(g=0.05, E=2.0))
        ens = make_ensemble(8, "bloch-random", seed=20)
        grid = TimeGrid(0, 5, 20)
        ph = evolve_diagonal(p, ens, grid)
        traj = propagate(ensemble_state0(p, ens), p, grid, store_states=True)
        fids = [
            fidelity(assemble_state(p, ens, ph, t), traj.states[k])
            for k, t in enumerate(grid.times)
        ]
        assert min(fids) >= 0.99

    def test_normalized_for_complete_ensemble(self):
        p = sample_params(14, 6, DistSpec(g=0.5))
        ens = make_ensemble(6, "bloch-random", seed=14)
        ph = evolve_diagonal(p, ens, TimeGrid(0, 3, 12))
        psi = assemble_state(p, ens, ph, 3.0)
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-12

    def test_off_grid_time_rejected(self):
        p = sample_params(15, 3, DistSpec(g=0.2))
        ens = make_ensemble(3, "bloch-random", seed=15)
        ph = evolve_diagonal(p, ens, TimeGrid(0, 2, 10))
        with pytest.raises(ValueError, match="grid"):
            assemble_state(p, ens, ph, 0.33)
