import numpy as np
import pytest

from bswkb.oracle import (OracleError, discretize, oracle_spectrum,
                          well_minimum)
from bswkb.symbols import make_model

HARMONIC = make_model("harmonic")


def test_matrix_symmetric():
    A = discretize(HARMONIC, 0.1, (-3, 3), 256)
    assert A.dtype == np.float64
    assert np.abs(A - A.T).max() == 0.0


def test_matrix_hermitian_with_degree1_term():
    m = make_model("harmonic", p1=[[1.0, 0, 1]])  # p1 = xi
    A = discretize(m, 0.1, (-3, 3), 256)
    assert np.iscomplexobj(A)
    assert np.abs(A - A.conj().T).max() == 0.0


def test_p1_multiplication_is_diagonal_shift():
    m = make_model("harmonic", p1=[[1.0, 1, 0]])
    h = 0.1
    base = discretize(HARMONIC, h, (-3, 3), 128)
    pert = discretize(m, h, (-3, 3), 128)
    x = np.linspace(-3, 3, 130)[1:-1]
    assert np.abs(pert - base - h * np.diag(x)).max() < 1e-14


def test_harmonic_spectrum():
    spec = oracle_spectrum(HARMONIC, 0.1, 3)
    want = 0.1 * (2 * np.arange(3) + 1)
    assert np.abs(spec.eigenvalues - want).max() < 1e-8
    assert np.all(np.diff(spec.eigenvalues) > 0)
    assert np.all(np.isfinite(spec.error_estimates))


def test_shifted_harmonic_p1():
    m = make_model("harmonic", p1=[[1.0, 1, 0]])
    spec = oracle_spectrum(m, 0.1, 1)
    assert spec.eigenvalues[0] == pytest.approx(0.1 - 0.1 ** 2 / 4, abs=1e-8)


def test_constant_p2():
    m = make_model("harmonic", p2=[[1.0, 0, 0]])
    spec = oracle_spectrum(m, 0.1, 1)
    assert spec.eigenvalues[0] == pytest.approx(0.11, abs=1e-8)


def test_domain_and_grid_invariance():
    """Eigenvalues move < 1e-8 under domain +25% and N -> 2N."""
    spec = oracle_spectrum(HARMONIC, 0.1, 4)
    lo, hi = spec.domain
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    wide = (mid - 1.25 * half, mid + 1.25 * half)
    spec_wide = oracle_spectrum(HARMONIC, 0.1, 4, domain=wide, N=spec.grid_size)
    assert np.abs(spec.eigenvalues - spec_wide.eigenvalues).max() < 1e-8
    spec_fine = oracle_spectrum(HARMONIC, 0.1, 4, domain=spec.domain,
                                N=2 * spec.grid_size, check_boundary=False)
    assert np.abs(spec.eigenvalues - spec_fine.eigenvalues).max() < 1e-8


def test_xi_degree_gate():
    m = make_model("harmonic", p1=[[1.0, 0, 3]])
    with pytest.raises(OracleError):
        discretize(m, 0.1, (-3, 3), 128)


def test_small_N_rejected():
    with pytest.raises(OracleError):
        discretize(HARMONIC, 0.1, (-3, 3), 32)


def test_free_particle_box_floor():
    """p0 = xi^2 + c: box modes sit above c and approach it as the box grows."""
    m = make_model("polynomial", p0=[[1.0, 0, 2], [0.7, 0, 0]])
    h = 0.1
    prev_gap = None
    for L in (4.0, 8.0, 16.0):
        A = discretize(m, h, (-L, L), 512)
        e0 = float(np.sort(np.linalg.eigvalsh(A))[0])
        gap = e0 - 0.7
        assert gap > 0
        if prev_gap is not None:
            assert gap < prev_gap / 2
        prev_gap = gap


def test_well_minimum():
    assert well_minimum(HARMONIC) == pytest.approx(0.0, abs=1e-10)
    m = make_model("morse", params={"A": 4.0, "a": 1.0})
    assert well_minimum(m) == pytest.approx(-4.0, abs=1e-9)


def test_morse_oracle_vs_closed_form():
    """Morse eigenvalues: E_n = -A (1 - a h (n + 1/2)/sqrt(A))^2."""
    A, a, h = 4.0, 1.0, 0.1
    m = make_model("morse", params={"A": A, "a": a})
    spec = oracle_spectrum(m, h, 3, domain=(-2.0, 14.0), N=2048)
    n = np.arange(3)
    want = -A * (1.0 - a * h * (n + 0.5) / np.sqrt(A)) ** 2
    assert np.abs(spec.eigenvalues - want).max() < 1e-7
