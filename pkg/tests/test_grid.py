import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from deformalg.errors import (
    InvalidParameterError,
    NumericalConsistencyError,
    PreconditionError,
    UnsupportedCaseError,
)
from deformalg.grid import (
    ANTIPERIODIC,
    DIRICHLET,
    PERIODIC,
    DeformationSpec,
    analytic_eigenfunction,
    build_grid,
    casimir_k,
    default_states,
    derivative_matrix,
    dirichlet_min_uncertainty,
    fourier_derivative,
    fourier_second_derivative,
    iso_generators,
    minimal_length_quadrature,
    position_operator,
    position_spectrum,
    shifted_variance_floor,
    verify_iso_relations,
)
from deformalg.operators import HERMITIAN, SKEW


def test_four_point_derivative_of_sine():
    x = 2 * np.pi * np.arange(4) / 4
    d = fourier_derivative(4, 2 * np.pi)
    np.testing.assert_allclose(d @ np.sin(x), np.cos(x), atol=1e-15)
    np.testing.assert_allclose(d, -d.T)


@given(N=st.sampled_from([8, 16, 32, 64]), length=st.floats(0.5, 20.0),
       seed=st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_periodic_derivative_matches_fft(N, length, seed):
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(N, dtype=complex)
    k = np.fft.fftfreq(N, 1.0 / N)
    band = np.abs(k) < N // 2
    coeffs[band] = rng.normal(size=band.sum()) + 1j * rng.normal(size=band.sum())
    v = np.fft.ifft(coeffs)
    oracle = np.fft.ifft(1j * k * (2 * np.pi / length) * coeffs)
    d = fourier_derivative(N, length)
    np.testing.assert_allclose(d @ v, oracle, atol=1e-10 * np.abs(oracle).max())


@pytest.mark.parametrize("N", [8, 16, 64])
def test_antiperiodic_derivative_on_half_integer_modes(N):
    length = 3.0
    x = length * np.arange(N) / N
    d = fourier_derivative(N, length, ANTIPERIODIC)
    np.testing.assert_allclose(d, -d.T)
    for m in range(-N // 2, N // 2):
        q = 2 * np.pi * (m + 0.5) / length
        v = np.exp(1j * q * x)
        np.testing.assert_allclose(d @ v, 1j * q * v, atol=1e-10 * max(1.0, abs(q)))


def test_second_derivative_agrees_below_nyquist():
    N, length = 32, 5.0
    d, d2 = fourier_derivative(N, length), fourier_second_derivative(N, length)
    x = length * np.arange(N) / N
    for m in range(1, N // 2):
        v = np.cos(2 * np.pi * m * x / length)
        np.testing.assert_allclose(d2 @ v, d @ (d @ v), atol=1e-9 * m * m)


def test_grid_validation():
    spec = DeformationSpec.trig(1.0)
    with pytest.raises(InvalidParameterError):
        build_grid(spec, 7)
    with pytest.raises(InvalidParameterError):
        build_grid(spec, 4)
    with pytest.raises(InvalidParameterError):
        build_grid(DeformationSpec.hyper(1.0), 16)
    with pytest.raises(InvalidParameterError):
        build_grid(spec, 16, bc="robin")
    with pytest.raises(UnsupportedCaseError):
        derivative_matrix(build_grid(spec, 16, bc=DIRICHLET))


def test_position_operator_flags():
    g = build_grid(DeformationSpec.trig(0.5), 16)
    assert derivative_matrix(g).symmetry == SKEW
    assert position_operator(g).symmetry == HERMITIAN


@pytest.mark.parametrize("lam", [0.1, 0.25, 1.0, 2.0])
@pytest.mark.parametrize("N", [32, 64, 128])
def test_position_spectrum_periodic_and_antiperiodic(lam, N):
    for bc, shift in ((PERIODIC, 0.0), (ANTIPERIODIC, 1.0)):
        rep = position_spectrum(build_grid(DeformationSpec.trig(lam), N, bc=bc))
        expected = [(2 * n + shift) * lam for n in rep.labels]
        np.testing.assert_allclose(rep.reference, expected, rtol=1e-14, atol=1e-14)
        assert rep.max_dev <= 1e-10
        assert rep.context["min_overlap"] >= 1 - 1e-10


def test_position_rows_start_at_zero():
    rep = position_spectrum(build_grid(DeformationSpec.trig(0.5), 32))
    assert rep.labels[:3] == [0, 1, -1]
    assert rep.reference[:3] == pytest.approx([0.0, 1.0, -1.0])


@pytest.mark.parametrize("lam", [0.5, 1.0, 3.0])
def test_flat_theta_norm_matches_weighted_p_integral(lam):
    # ||phi||^2 = int_{-a}^{a} |phi(p)|^2 dp / f(p) for phi(p) = 1 + p^2, with
    # 1/f = (1 - lam p)^(-1/2) (1 + lam p)^(-1/2) handled by quad's algebraic weight
    a = 1.0 / lam
    oracle, _ = integrate.quad(lambda p: (1 + p * p) ** 2 / lam, -a, a,
                               weight="alg", wvar=(-0.5, -0.5))
    g = build_grid(DeformationSpec.trig(lam), 64)
    phi = 1 + g.p_nodes ** 2
    assert np.sum(g.weights * phi ** 2) == pytest.approx(oracle, rel=1e-12)


def test_analytic_eigenfunctions_are_normalized():
    g = build_grid(DeformationSpec.trig(0.5), 64)
    for level in (0.0, 1.0, -3.0):
        phi = analytic_eigenfunction(g, level)
        assert np.sum(g.weights * np.abs(phi) ** 2) == pytest.approx(1.0, rel=1e-12)


def test_minimal_length_quadrature():
    assert minimal_length_quadrature(DeformationSpec.trig(0.25)) == pytest.approx(0.25, abs=1e-10)
    assert minimal_length_quadrature(DeformationSpec.trig(2.0, c=3.0)) == pytest.approx(2.0, abs=1e-10)
    assert minimal_length_quadrature(DeformationSpec.hyper(0.25)) == 0.0
    assert minimal_length_quadrature(DeformationSpec.flat()) == 0.0
    # finite cut-offs: closed forms of the integral of dp / f
    assert minimal_length_quadrature(DeformationSpec.flat(a=2.0)) == pytest.approx(math.pi / 4)
    hyper = DeformationSpec.hyper(0.25, a=3.0)
    assert minimal_length_quadrature(hyper) == pytest.approx(
        (math.pi / 2) * 0.5 / math.asinh(1.5), rel=1e-12)


def test_minimal_length_tabulated():
    p = np.linspace(-2, 2, 2001)
    spec = DeformationSpec.tabulated(p, np.ones_like(p))
    assert minimal_length_quadrature(spec) == pytest.approx(math.pi / 4, rel=1e-12)
    with pytest.raises(NumericalConsistencyError):
        minimal_length_quadrature(DeformationSpec.tabulated(p, 1 - p ** 2))


def test_tabulated_file_round_trip(tmp_path):
    path = tmp_path / "f.txt"
    p = np.linspace(-1, 1, 11)
    path.write_text("# p f\n" + "\n".join(f"{a} {b}" for a, b in zip(p, 1 + p ** 2)),
                    encoding="utf-8")
    spec = DeformationSpec.from_file(path)
    np.testing.assert_allclose(spec.f_samples, 1 + p ** 2)
    assert spec.check_even()
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n0 2\n1 3\n2 4\n3 5\n", encoding="utf-8")
    with pytest.raises(InvalidParameterError):
        DeformationSpec.from_file(bad)


@pytest.mark.parametrize("N", [40, 100, 400])
def test_dirichlet_floor_closed_form(N):
    lam = 0.7
    g = build_grid(DeformationSpec.trig(lam), N, bc=DIRICHLET)
    h = g.nodes[1] - g.nodes[0]
    assert shifted_variance_floor(g, 0.0) == pytest.approx(4 / h ** 2 * math.sin(lam * h / 2) ** 2,
                                                           rel=1e-10)


def test_dirichlet_min_uncertainty_second_order():
    spec = DeformationSpec.trig(1.0)
    coarse, fine = dirichlet_min_uncertainty(spec, 400), dirichlet_min_uncertainty(spec, 800)
    assert coarse.error <= 1e-3
    assert coarse.min_uncertainty < 1.0
    assert 0.2 <= fine.error / coarse.error <= 0.3
    assert coarse.optimizer_state["x0"] == 0.0
    with pytest.raises(UnsupportedCaseError):
        dirichlet_min_uncertainty(DeformationSpec.hyper(1.0), 400)


def test_iso_generators_need_full_theta_span():
    with pytest.raises(PreconditionError):
        iso_generators(build_grid(DeformationSpec.trig(1.0), 64))


@pytest.mark.parametrize("lam", [0.5, 1.0])
def test_theta_a3_spectrum_is_angular_momentum(lam):
    # on the full circle A3 = (i/lam) d/dtheta has the spectrum of -L_z: the integers
    g = build_grid(DeformationSpec.trig(lam), 32, span="full")
    a3, _, _ = iso_generators(g)
    w = np.sort(np.linalg.eigvalsh(a3.matrix))
    np.testing.assert_allclose(w[1:], np.sort(np.r_[np.arange(-15, 16), 0])[1:], atol=1e-10)


@pytest.mark.parametrize("spec,L,N", [
    (DeformationSpec.trig(1.0), None, 128),
    (DeformationSpec.trig(0.5), None, 128),
    (DeformationSpec.hyper(0.25), 20.0, 512),
])
def test_iso_relations(spec, L, N):
    g = build_grid(spec, N, L=L, span="full" if L is None else "half")
    rep = verify_iso_relations(g)
    assert rep.max_residual <= 1e-10
    # K = p^2 - (c + beta p^2)/beta = -c/beta, up to cancellation between the two terms
    scale = np.max(g.p_nodes ** 2) + spec.c / abs(spec.beta)
    np.testing.assert_allclose(casimir_k(g), -spec.c / spec.beta, rtol=0, atol=4e-16 * scale)


def test_states_are_checked():
    g = build_grid(DeformationSpec.hyper(0.25), 64, L=2.0)
    with pytest.raises(PreconditionError):
        verify_iso_relations(g, {"wide": np.ones(64, dtype=complex)})
    g = build_grid(DeformationSpec.trig(1.0), 64, span="full")
    noisy = default_states(g)["constant"].copy()
    noisy[3] += 1e-3
    with pytest.raises(PreconditionError):
        verify_iso_relations(g, {"noisy": noisy})
