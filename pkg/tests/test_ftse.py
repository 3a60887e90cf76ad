import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from fracomb.errors import InvalidInputError, UnsupportedOrderError
from fracomb.fraccalc import mittag_leffler
from fracomb.ftse import (FtseState, FtseStepper, ftse_solve, ftse_spectral_solution, ftse_step,
                          principal_power, project)
from fracomb.grids import XGrid
from fracomb.hamiltonians import (EigenPair, HamiltonianSpec, MatrixOperator, ScaledOperator,
                                  build_hamiltonian, eigenpairs)


def free_gaussian(x, t, sigma, hbar=1.0):
    # exp(-x^2/(4 sigma^2)) at t = 0, so sigma is the width of |psi|^2
    a = 2 * sigma ** 2 + 1j * hbar * t
    return np.sqrt(2 * sigma ** 2 / a) * np.exp(-x ** 2 / (2 * a))


def small_system(n=64, length=12.0, kind="harmonic"):
    spec = HamiltonianSpec(kind, XGrid.centered(n, length))
    return spec, build_hamiltonian(spec)


def test_alpha_one_free_gaussian():
    spec = HamiltonianSpec("free", XGrid.centered(256, 20.0))
    H = build_hamiltonian(spec)
    x = spec.x_grid.points
    tr = ftse_solve(free_gaussian(x, 0, 1.5), H, 1.0, 1e-3, 1000, save_stride=1000)
    ref = free_gaussian(x, 1.0, 1.5)
    assert tr.times[-1] == pytest.approx(1.0)
    assert np.linalg.norm(tr.psi[-1] - ref) / np.linalg.norm(ref) <= 1e-4


def test_alpha_one_step_is_crank_nicolson():
    spec, H = small_system()
    psi = np.exp(-spec.x_grid.points ** 2).astype(complex)
    dt = 0.01
    M = H.matrix().toarray()
    I = np.eye(H.n)
    cn = np.linalg.solve(1j * I / dt - 0.5 * M, (1j * I / dt + 0.5 * M) @ psi)
    st = ftse_step(FtseState(psi, alpha=1.0, dt=dt), H)
    np.testing.assert_allclose(st.psi, cn, atol=1e-12)
    assert st.step_index == 1 and len(st.history) == 1


def test_zero_generator_leaves_state_unchanged():
    Z = MatrixOperator(sp.csc_matrix((32, 32), dtype=complex))
    psi = np.linspace(0, 1, 32) + 0.5j
    tr = ftse_solve(psi, Z, 0.5, 0.01, 50)
    np.testing.assert_allclose(tr.psi, np.broadcast_to(psi, tr.psi.shape), atol=1e-14)


def test_n_steps_must_be_positive():
    _, H = small_system()
    with pytest.raises(InvalidInputError):
        ftse_solve(np.ones(64), H, 0.5, 0.01, 0)


def test_order_above_one_rejected():
    _, H = small_system()
    with pytest.raises(UnsupportedOrderError):
        FtseStepper(H, 1.5, 0.01, np.ones(64))
    with pytest.raises(UnsupportedOrderError):
        FtseState(np.ones(3), alpha=2.0)


def test_state_history_invariant():
    with pytest.raises(InvalidInputError):
        FtseState(np.ones(3), history=(np.ones(3),), step_index=0)


def test_alpha_one_is_unitary():
    spec, H = small_system(128, 16.0)
    psi = np.exp(-(spec.x_grid.points - 1) ** 2).astype(complex)
    tr = ftse_solve(psi, H, 1.0, 1e-3, 1000, save_stride=100)
    n = np.linalg.norm(tr.psi, axis=1)
    assert np.max(np.abs(n - n[0])) <= 1e-8 * n[0]


def test_half_order_is_not_unitary():
    spec, H = small_system()
    psi = np.exp(-spec.x_grid.points ** 2).astype(complex)
    tr = ftse_solve(psi, ScaledOperator(H, -1j / math.sqrt(2)), 0.5, 1e-2, 100, save_stride=100)
    assert abs(np.linalg.norm(tr.psi[-1]) / np.linalg.norm(psi) - 1) > 1e-3


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), a=st.complex_numbers(max_magnitude=5), alpha=st.sampled_from([0.5, 0.8, 1.0]))
def test_solve_is_linear_in_initial_data(seed, a, alpha):
    rng = np.random.default_rng(seed)
    _, H = small_system(32, 8.0)
    u = rng.normal(size=32) + 1j * rng.normal(size=32)
    v = rng.normal(size=32) + 1j * rng.normal(size=32)
    Hs = ScaledOperator(H, -1j / math.sqrt(2))
    run = lambda p: ftse_solve(p, Hs, alpha, 0.01, 30).psi
    lhs = run(a * u + v)
    rhs = a * run(u) + run(v)
    assert np.linalg.norm(lhs - rhs) <= 1e-10 * np.linalg.norm(rhs)


def test_step_api_matches_solver():
    spec, H = small_system()
    Hs = ScaledOperator(H, -1j / math.sqrt(2))
    psi = np.exp(-spec.x_grid.points ** 2).astype(complex)
    state = FtseState(psi, alpha=0.5, dt=0.01)
    for _ in range(7):
        state = ftse_step(state, Hs)
    tr = ftse_solve(psi, Hs, 0.5, 0.01, 7)
    np.testing.assert_allclose(state.psi, tr.psi[-1], atol=1e-13)
    assert state.t == pytest.approx(0.07)


# spectral solution ------------------------------------------------------------------

def test_spectral_alpha_one_is_exponential():
    spec, _ = small_system()
    pairs = eigenpairs(spec, 8)
    c = np.arange(1, 9) / 10
    got = ftse_spectral_solution(pairs, c, 1.0, 1.0, 0.7)
    ref = sum(ck * np.exp(-1j * p.lam * 0.7) * p.psi for ck, p in zip(c, pairs))
    np.testing.assert_allclose(got, ref, atol=1e-12)


def test_spectral_zero_eigenvalue_is_constant():
    pair = EigenPair(0.0, np.ones(4, complex) / 2)
    for t in (0.1, 1.0, 9.0):
        np.testing.assert_allclose(ftse_spectral_solution([pair], [1.0], 0.5, 1.0, t), pair.psi)


def test_spectral_needs_matching_coefficients():
    pair = EigenPair(1.0, np.ones(4, complex) / 2)
    with pytest.raises(InvalidInputError):
        ftse_spectral_solution([pair], [1.0, 2.0], 0.5, 1.0, 1.0)


def test_stepper_converges_to_spectral_solution():
    spec, H = small_system(64, 12.0)
    pairs = eigenpairs(spec, 64)
    psi0 = np.exp(-(spec.x_grid.points - 0.5) ** 2).astype(complex)
    scale = -1j / math.sqrt(2)
    ref = ftse_spectral_solution(pairs, project(pairs, psi0), 0.5, 1.0, 1.0, scale)
    errs = []
    for k in range(4):
        dt = 0.02 / 2 ** k
        tr = ftse_solve(psi0, ScaledOperator(H, scale), 0.5, dt, round(1 / dt), save_stride=round(1 / dt))
        errs.append(np.linalg.norm(tr.psi[-1] - ref) / np.linalg.norm(ref))
    order = np.polyfit(np.log(0.02 / 2 ** np.arange(4)), np.log(errs), 1)[0]
    assert abs(order - 1.5) <= 0.3
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_single_mode_amplitude_tracks_mittag_leffler():
    spec, H = small_system(48, 10.0)
    pair = eigenpairs(spec, 3)[2]
    scale = -1j / math.sqrt(2)
    tr = ftse_solve(pair.psi, ScaledOperator(H, scale), 0.5, 1e-3, 1000, save_stride=250)
    lam_eff = scale * pair.lam / principal_power(1j, 0.5)
    amp = tr.psi @ pair.psi.conj()
    ref = mittag_leffler(0.5, lam_eff * np.sqrt(tr.times))
    np.testing.assert_allclose(amp, ref, atol=2e-4)


def test_non_unitarity_witness():
    # lambda = hbar = t = 1, H_eff = -i H / sqrt 2
    lam_eff = (-1j / math.sqrt(2)) / principal_power(1j, 0.5)
    assert lam_eff == pytest.approx((-1 - 1j) / 2)
    assert abs(abs(mittag_leffler(0.5, lam_eff)) - 1) > 1e-3


def test_principal_branch():
    assert principal_power(1j, 0.5) == pytest.approx(complex(math.cos(math.pi / 4), math.sin(math.pi / 4)))
    assert principal_power(2j, 0.5) == pytest.approx(1 + 1j)
