import numpy as np
import pytest

from bbw.basis import build_basis
from bbw.checks import normalized_jumps, two_scale_residual
from bbw.errors import SizeError
from bbw.knots import KnotHierarchy
from bbw.refinement import RefinementMatrix, band_rows, jump_matrix, refinement_matrix, row_sum_check
from bbw.smooth import SmoothFamily

from conftest import FIG_KNOTS, trig_family


def pair(fam, hier, j=0):
    c, f = build_basis(fam, hier[j]), build_basis(fam, hier[j + 1])
    return c, f, refinement_matrix(c, f)


def sample_fit(coarse, fine):
    """Oracle: least-squares fit of Phi_coarse by Phi_fine on dense samples."""
    x = np.linspace(0, 1, 2000)
    H, *_ = np.linalg.lstsq(fine.evaluate(x), coarse.evaluate(x), rcond=None)
    return H


def global_solve(fine, m, n_coarse):
    """Oracle: one dense least-squares solve of all jump and row-sum equations on the band."""
    D = jump_matrix(fine)
    D /= np.abs(D).max(axis=1, keepdims=True)
    N, M = fine.size, n_coarse + m - 2
    cols = [np.arange(*np.add(band_rows(k, m, n_coarse), (0, 1))) for k in range(M)]
    idx = {(l, k): i for k, rows in enumerate(cols) for i, l in enumerate(rows, start=sum(len(c) for c in cols[:k]))}
    nu = len(idx)
    A, b = [], []
    for k, rows in enumerate(cols):
        for r in range(D.shape[0]):
            row = np.zeros(nu)
            for l in rows:
                row[idx[l, k]] = D[r, l]
            A.append(row)
            b.append(0.0)
    for l in range(N):
        row = np.zeros(nu)
        for (ll, k), i in idx.items():
            if ll == l:
                row[i] = 1.0
        A.append(row)
        b.append(1.0)
    sol, *_ = np.linalg.lstsq(np.array(A), np.array(b), rcond=None)
    H = np.zeros((N, M))
    for (l, k), i in idx.items():
        H[l, k] = sol[i]
    return H


def test_equispaced_hats():
    _, _, H = pair(SmoothFamily.powers(2), KnotHierarchy.from_coarse(np.linspace(0, 1, 5), 1))
    np.testing.assert_allclose(H.column(2)[3:6], [0.5, 1.0, 0.5], atol=1e-10)
    assert H.column(0)[0] == 1.0


def test_equispaced_cubic_mask():
    _, _, H = pair(SmoothFamily.powers(4), KnotHierarchy.from_coarse(np.linspace(0, 1, 9), 1))
    k = 5
    lo, hi = band_rows(k, 4, 9)
    np.testing.assert_allclose(H.column(k)[lo : hi + 1], [1 / 8, 1 / 2, 3 / 4, 1 / 2, 1 / 8], atol=1e-9)


@pytest.mark.parametrize("m", [2, 3, 4, 5])
def test_column_solver_agrees_with_both_oracles(m, rng):
    hier = KnotHierarchy.random(rng, 6, 1)
    c, f, H = pair(SmoothFamily.powers(m), hier)
    np.testing.assert_allclose(H.toarray(), sample_fit(c, f), atol=1e-9)
    np.testing.assert_allclose(H.toarray(), global_solve(f, m, hier[0].count), atol=1e-9)


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6, 7])
def test_structure_and_identities(m, rng):
    hier = KnotHierarchy.random(rng, m + 3, 1)
    c, f, H = pair(SmoothFamily.powers(m), hier)
    Hd = H.toarray()
    assert row_sum_check(H) < 1e-10
    assert normalized_jumps(f, H) < 1e-8
    np.testing.assert_array_equal(Hd[0], np.eye(1, H.cols)[0])
    assert np.all(np.triu(Hd, 1) == 0)
    n = hier[0].count
    for k in range(H.cols):
        nz = np.nonzero(Hd[:, k])[0]
        lo, hi = band_rows(k, m, n)
        assert nz.min() >= lo and nz.max() <= hi
        if k <= m - 1 and 2 * k + 1 <= k + n - 1:
            assert hi - lo + 1 == min(k + 2, m + 1)
    assert two_scale_residual(c, f, H) < 1e-8


def test_trig_family_figure_knots():
    hier = KnotHierarchy.from_coarse(FIG_KNOTS, 1)
    c, f, H = pair(trig_family(), hier)
    assert two_scale_residual(c, f, H) < 1e-8
    assert row_sum_check(H) < 1e-10


def test_same_grid_gives_identity():
    b = build_basis(SmoothFamily.powers(3), FIG_KNOTS)
    H = refinement_matrix(b, b)
    np.testing.assert_array_equal(H.toarray(), np.eye(b.size))


def test_non_nested_grids_rejected():
    fam = SmoothFamily.powers(2)
    c = build_basis(fam, [0, 0.5, 1])
    f = build_basis(fam, [0, 0.2, 0.4, 0.7, 1])
    with pytest.raises(SizeError):
        refinement_matrix(c, f)


def test_serialization_round_trip(rng):
    _, _, H = pair(SmoothFamily.powers(3), KnotHierarchy.random(rng, 5, 1))
    again = RefinementMatrix.from_dict(H.to_dict(), 3)
    np.testing.assert_array_equal(again.toarray(), H.toarray())
    assert H.n_left == 1 and H.n_right == 0


def test_hat_jump_value():
    f = build_basis(SmoothFamily.powers(2), [0, 0.25, 0.5, 0.75, 1])
    D = jump_matrix(f)
    assert D[0, 1] == pytest.approx(-8.0)
