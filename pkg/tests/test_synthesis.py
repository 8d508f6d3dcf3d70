import math
from decimal import Decimal
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings

from design_checks import partition_of_unity
from test_design import root_designs
from wavereg.design import DesignParams, daubechies, solve_by_roots
from wavereg.synthesis import (
    CascadeError,
    FactorizationError,
    autocorrelation,
    format_coefficients,
    integer_values,
    parse_coefficients,
    phi_samples,
    phihat_product,
    shift_residual,
    spectral_factorize,
    table_csv,
    wavelet_filter,
)

DATA = Path(__file__).parent / "data"
S2 = math.sqrt(2)


def test_haar():
    f = spectral_factorize(daubechies(1))
    np.testing.assert_allclose(f.c, [1 / S2, 1 / S2], atol=1e-15)
    np.testing.assert_allclose(wavelet_filter(f), [1 / S2, -1 / S2], atol=1e-15)


def test_four_tap_closed_form():
    s3 = math.sqrt(3)
    expected = np.array([1 + s3, 3 + s3, 3 - s3, 1 - s3]) / (4 * S2)
    f = spectral_factorize(daubechies(2))
    np.testing.assert_allclose(f.c, expected, atol=1e-15)
    assert f.c.sum() == pytest.approx(S2, abs=1e-15)


def test_ladder_agreement_and_metadata():
    f = spectral_factorize(solve_by_roots(DesignParams(5, 1, (2.6450,))))
    assert f.ladder_discrepancy <= 1e-15
    assert f.precision_digits >= 60
    assert f.M == 3 and f.N == 5 and len(f) == 10
    assert f.ortho_residual <= 1e-12
    single = spectral_factorize(daubechies(4), ladder=False)
    assert single.ladder_discrepancy is None


def test_infeasible_design_rejected():
    with pytest.raises(FactorizationError):
        spectral_factorize(solve_by_roots(DesignParams(5, 1, (1.7,))))


def test_autocorrelation_round_trip():
    for sq in (daubechies(7), solve_by_roots(DesignParams(10, 2, (2.279, 2.711)))):
        f = spectral_factorize(sq)
        back = autocorrelation(f.c).a
        np.testing.assert_allclose(back, sq.a[: back.size], atol=1e-12)


def test_autocorrelation_needs_even_length():
    with pytest.raises(ValueError):
        autocorrelation([1.0, 0.0, 0.0])


@settings(max_examples=20, deadline=None)
@given(root_designs(max_nz=2, max_N=15))
def test_filter_invariants(params):
    sq = solve_by_roots(params)
    if not sq.feasible:
        return
    f = spectral_factorize(sq)
    c = f.c
    assert c.sum() == pytest.approx(S2, abs=1e-10)
    assert shift_residual(c) <= 1e-10
    k = np.arange(len(c))
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    for j in range(params.M):
        assert abs(np.sum(sign * k.astype(float) ** j * c)) <= 1e-8 * max(1.0, (len(c) - 1.0) ** j)
    d = wavelet_filter(f)
    assert abs(d.sum()) <= 1e-12
    n = len(c)
    for m in range(-(n // 2) + 1, n // 2):
        cross = sum(d[i] * c[i + 2 * m] for i in range(n) if 0 <= i + 2 * m < n)
        assert abs(cross) <= 1e-10


def test_wavelet_cross_correlation_example():
    f = spectral_factorize(solve_by_roots(DesignParams(5, 1, (2.6450,))))
    d, c = wavelet_filter(f), f.c
    assert abs(sum(d[k] * c[k + 2] for k in range(len(c) - 2))) <= 1e-10


# -- cascade --------------------------------------------------------------


def test_haar_phi_is_box():
    x, phi = phi_samples(spectral_factorize(daubechies(1)), 3)
    assert x.size == 9
    np.testing.assert_allclose(phi, np.where(x < 1, 1.0, 0.0), atol=1e-15)


def test_phi_partition_of_unity_and_integral():
    f = spectral_factorize(solve_by_roots(DesignParams(5, 1, (2.6450,))))
    x, phi = phi_samples(f, 10)
    assert partition_of_unity(f.c, levels=10) <= 1e-8
    assert phi.sum() * (x[1] - x[0]) == pytest.approx(1.0, abs=1e-6)
    assert 1.0 <= np.abs(phi).max() <= 1.5
    assert x[-1] == 9.0


def test_phi_levels_validated():
    with pytest.raises(ValueError):
        phi_samples(daubechies(1), 0)
    with pytest.raises(ValueError):
        phi_samples(daubechies(1), 21)


def test_degenerate_transition_matrix():
    # taps (1, 0, 0, 1) / sqrt2 give the stretched box on [0, 3]; padded to six
    # taps the integer-point eigenvalue 1 is repeated
    with pytest.raises(CascadeError):
        integer_values(np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0]) / S2)


# -- infinite product -----------------------------------------------------


def test_phihat_examples():
    haar = spectral_factorize(daubechies(1))
    xi = np.array([0.0, 1.0, 2 * math.pi])
    np.testing.assert_allclose(phihat_product(haar, xi), [1.0, abs(math.sin(0.5) / 0.5), 0.0], atol=1e-10)
    f = spectral_factorize(daubechies(5))
    assert phihat_product(f, 0.0) == pytest.approx(1.0, abs=1e-13)


def test_phihat_vanishes_at_dyadic_points():
    f = spectral_factorize(solve_by_roots(DesignParams(8, 2, (2.35347, 2.83307))))
    assert np.abs(phihat_product(f, 2 * math.pi * np.arange(1, 6))).max() <= 1e-8


def test_phihat_truncation():
    f = spectral_factorize(daubechies(5))
    xi = np.linspace(-8 * math.pi, 8 * math.pi, 401)
    assert np.abs(phihat_product(f, xi, 30) - phihat_product(f, xi, 35)).max() < 1e-10
    with pytest.raises(ValueError):
        phihat_product(f, xi, 9)


def test_optimized_design_decays_faster():
    xi = np.linspace(4 * math.pi, 8 * math.pi, 801)
    opt = phihat_product(spectral_factorize(solve_by_roots(DesignParams(5, 1, (2.6450,)))), xi)
    dau = phihat_product(spectral_factorize(daubechies(5)), xi)
    assert opt.max() < dau.max()


# -- coefficient files ----------------------------------------------------


@pytest.mark.parametrize("name", ["golden_10_1.txt", "golden_20_2.txt", "golden_30_3.txt"])
def test_golden_files_are_in_emitted_format(name):
    text = (DATA / name).read_text()
    values = [Decimal(line) for line in text.split()]
    assert format_coefficients(values) == text
    assert parse_coefficients(text).size == len(values)


def test_format_round_trip():
    c = spectral_factorize(daubechies(4)).c
    text = format_coefficients(c)
    assert all(len(line.split("e")[0].replace("-", "").replace(".", "")) == 16 for line in text.splitlines())
    np.testing.assert_allclose(parse_coefficients(text), c, rtol=1e-15)


def test_parse_errors():
    assert parse_coefficients("# taps\n1.0\n\n-2.5e-01  # last\n").tolist() == [1.0, -0.25]
    with pytest.raises(ValueError, match="line 2"):
        parse_coefficients("1.0\nabc\n")
    with pytest.raises(ValueError):
        parse_coefficients("# nothing\n")


def test_table_csv():
    assert table_csv(["x", "phi"], [(0.5, 1.0), (1.0, 0.0)]) == "x,phi\n0.5,1.0\n1.0,0.0\n"
