import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracomb.errors import InvalidInputError
from fracomb.fraccalc import SampledFunction
from fracomb.grids import XGrid
from fracomb.hamiltonians import (HamiltonianSpec, MatrixOperator, ScaledOperator, apply_hamiltonian,
                                  build_hamiltonian, eigenpairs, load_potential_csv)


def free(n=64, length=10.0, hbar=1.0, boundary="periodic"):
    return HamiltonianSpec("free", XGrid.centered(n, length), hbar, boundary)


def test_plane_wave_dispersion():
    spec = free(64, 10.0, hbar=0.7)
    H = build_hamiltonian(spec)
    x, dx = spec.x_grid.points, spec.x_grid.step
    for m in (0, 1, 5, 17):
        k = 2 * math.pi * m / spec.x_grid.length
        psi = np.exp(1j * k * x)
        lam = 0.7 ** 2 * (1 - math.cos(k * dx)) / dx ** 2
        np.testing.assert_allclose(H.apply(psi), lam * psi, atol=1e-10)


def test_trivial_applications():
    H = build_hamiltonian(free())
    assert np.all(apply_hamiltonian(H, np.zeros(64)) == 0)
    np.testing.assert_allclose(apply_hamiltonian(H, np.full(64, 2.5 + 1j)), 0, atol=1e-12)


def test_harmonic_matches_dense():
    spec = HamiltonianSpec("harmonic", XGrid.centered(128, 16.0))
    H = build_hamiltonian(spec)
    psi = np.exp(-spec.x_grid.points ** 2 / 2).astype(complex)
    np.testing.assert_allclose(H.apply(psi), H.dense() @ psi, atol=1e-12)


def test_apply_rejects_wrong_length():
    with pytest.raises(InvalidInputError):
        build_hamiltonian(free()).apply(np.zeros(10))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 31 - 1), a=st.complex_numbers(max_magnitude=10), boundary=st.sampled_from(["periodic", "dirichlet"]))
def test_linearity(seed, a, boundary):
    rng = np.random.default_rng(seed)
    H = build_hamiltonian(HamiltonianSpec("harmonic", XGrid.centered(48, 8.0), 1.3, boundary))
    u = rng.normal(size=48) + 1j * rng.normal(size=48)
    v = rng.normal(size=48) + 1j * rng.normal(size=48)
    scale = np.linalg.norm(H.apply(u)) + np.linalg.norm(H.apply(v))
    assert np.linalg.norm(H.apply(u + v) - H.apply(u) - H.apply(v)) <= 1e-13 * scale
    assert np.linalg.norm(H.apply(a * u) - a * H.apply(u)) <= 1e-13 * (1 + abs(a)) * scale


def test_harmonic_spectrum():
    spec = HamiltonianSpec("harmonic", XGrid.centered(2048, 24.0))
    pairs = eigenpairs(spec, 6)
    for n, p in enumerate(pairs):
        assert p.lam == pytest.approx(n + 0.5, abs=1e-3)


def test_free_periodic_spectrum_matches_stencil():
    spec = free(40, 7.0)
    pairs = eigenpairs(spec, 40)
    dx, L = spec.x_grid.step, spec.x_grid.length
    m = np.arange(40) - 20
    exact = np.sort((1 - np.cos(2 * np.pi * m / L * dx)) / dx ** 2)
    np.testing.assert_allclose([p.lam for p in pairs], exact, atol=1e-10)
    assert min(p.lam for p in pairs) >= -1e-12


@pytest.mark.parametrize("kind", ["free", "harmonic"])
@pytest.mark.parametrize("boundary", ["periodic", "dirichlet"])
def test_eigenpairs_residual_and_orthonormality(kind, boundary):
    spec = HamiltonianSpec(kind, XGrid.centered(96, 12.0), 0.8, boundary)
    H = build_hamiltonian(spec)
    pairs = eigenpairs(spec, 12)
    lams = [p.lam for p in pairs]
    assert lams == sorted(lams)
    for p in pairs:
        assert np.linalg.norm(H.apply(p.psi) - p.lam * p.psi) <= 1e-10
    V = np.array([p.psi for p in pairs])
    np.testing.assert_allclose(V.conj() @ V.T, np.eye(12), atol=1e-10)


def test_eigenpairs_count_checked():
    with pytest.raises(InvalidInputError):
        eigenpairs(free(32), 33)


def test_tabulated_potential(tmp_path):
    g = XGrid.centered(32, 4.0)
    p = tmp_path / "v.csv"
    p.write_text("x,V\n" + "".join(f"{float(x)!r},{float(x * x)!r}\n" for x in g.points))
    pot = load_potential_csv(p)
    H = build_hamiltonian(HamiltonianSpec("tabulated", g, potential=pot))
    np.testing.assert_allclose(H.V, g.points ** 2)
    with pytest.raises(InvalidInputError):
        HamiltonianSpec("tabulated", XGrid.centered(33, 4.0), potential=pot)
    with pytest.raises(InvalidInputError):
        HamiltonianSpec("tabulated", g)


def test_csv_must_be_monotone(tmp_path):
    p = tmp_path / "v.csv"
    p.write_text("0,1\n1,2\n0.5,3\n")
    with pytest.raises(InvalidInputError, match="strictly increasing"):
        load_potential_csv(p)


def test_complex_potential_rejected():
    g = XGrid.centered(32, 4.0)
    with pytest.raises(InvalidInputError):
        HamiltonianSpec("tabulated", g, potential=SampledFunction(g.start, g.step, 1j * np.ones(32)))


def test_scaled_and_matrix_operators():
    H = build_hamiltonian(free(32))
    S = ScaledOperator(H, 0.5j)
    M = MatrixOperator(H.matrix())
    psi = np.exp(-XGrid.centered(32, 10.0).points ** 2).astype(complex)
    np.testing.assert_allclose(S.apply(psi), 0.5j * H.apply(psi), atol=1e-14)
    np.testing.assert_allclose(S.matrix() @ psi, S.apply(psi), atol=1e-13)
    np.testing.assert_allclose(M.apply(psi), H.apply(psi), atol=1e-13)


def test_spec_validation():
    with pytest.raises(InvalidInputError):
        HamiltonianSpec("quartic", XGrid.centered(32, 4.0))
    with pytest.raises(InvalidInputError):
        HamiltonianSpec("free", XGrid.centered(8, 4.0))
    with pytest.raises(InvalidInputError):
        HamiltonianSpec("free", XGrid.centered(32, 4.0), hbar=0.0)
