import math

import numpy as np
import pytest

from wishart_edge import LogSignedValue, cholesky, log_det, pfaffian, smallest_eigenvalue

from _oracles import bisect_smallest_eigenvalue


def lsv(x):
    return LogSignedValue.from_float(float(x))


def lsv_matrix(a):
    return [[lsv(v) for v in row] for row in np.asarray(a, dtype=float)]


class TestLogDet:
    def test_one_by_one(self):
        out = log_det([[lsv(3.0)]])
        assert out.sign == 1
        assert out.log_abs == pytest.approx(math.log(3.0), abs=1e-15)

    def test_identity(self):
        out = log_det(lsv_matrix(np.eye(2)))
        assert out.sign == 1
        assert out.log_abs == pytest.approx(0.0, abs=1e-15)

    def test_two_by_two_cofactor(self):
        out = log_det(lsv_matrix([[1, 2], [3, 4]]))
        assert out.sign == -1
        assert out.log_abs == pytest.approx(math.log(2.0), abs=1e-12)

    def test_product_rule(self, rng):
        a = rng.standard_normal((5, 5))
        b = rng.standard_normal((5, 5))
        da, db = log_det(lsv_matrix(a)), log_det(lsv_matrix(b))
        dab = log_det(lsv_matrix(a @ b))
        assert dab.sign == da.sign * db.sign
        assert dab.log_abs == pytest.approx(da.log_abs + db.log_abs, rel=1e-9, abs=1e-9)

    def test_wide_magnitudes(self):
        # rows spanning e^+-600: det = exp(0) - exp(1) = 1 - e
        mat = [
            [LogSignedValue(1, 600.0), LogSignedValue(1, 2.0)],
            [LogSignedValue(1, -1.0), LogSignedValue(1, -600.0)],
        ]
        out = log_det(mat)
        assert out.sign == -1
        assert out.log_abs == pytest.approx(math.log(math.e - 1.0), abs=1e-12)

    def test_exactly_singular(self):
        out = log_det(lsv_matrix([[1, 2], [2, 4]]))
        assert out.sign == 0

    def test_zero_dimension(self):
        out = log_det([])
        assert out.sign == 1 and out.log_abs == 0.0

    def test_rejects_ragged(self):
        with pytest.raises(ValueError):
            log_det([[lsv(1), lsv(2)], [lsv(3)]])


class TestPfaffian:
    def test_two_by_two(self):
        a = 5.0
        out = pfaffian(lsv_matrix([[0, a], [-a, 0]]))
        assert out.sign == 1
        assert out.log_abs == pytest.approx(math.log(a), abs=1e-15)

    def test_block_diagonal(self):
        a, b = 2.0, 3.0
        mat = np.zeros((4, 4))
        mat[0, 1], mat[1, 0] = a, -a
        mat[2, 3], mat[3, 2] = b, -b
        out = pfaffian(lsv_matrix(mat))
        assert out.sign == 1
        assert out.log_abs == pytest.approx(math.log(a * b), abs=1e-12)

    @pytest.mark.parametrize("dim", range(2, 13, 2))
    def test_square_is_determinant(self, dim, rng):
        raw = rng.standard_normal((dim, dim))
        anti = raw - raw.T
        pf = pfaffian(lsv_matrix(anti))
        det = log_det(lsv_matrix(anti))
        assert det.sign == 1
        assert 2 * pf.log_abs == pytest.approx(det.log_abs, rel=1e-9, abs=1e-9)

    def test_swap_flips_sign(self, rng):
        raw = rng.standard_normal((6, 6))
        anti = raw - raw.T
        swapped = anti.copy()
        swapped[[0, 3], :] = swapped[[3, 0], :]
        swapped[:, [0, 3]] = swapped[:, [3, 0]]
        p0, p1 = pfaffian(lsv_matrix(anti)), pfaffian(lsv_matrix(swapped))
        assert p1.sign == -p0.sign
        assert p1.log_abs == pytest.approx(p0.log_abs, rel=1e-10)

    def test_singular_gives_zero(self):
        out = pfaffian(lsv_matrix(np.zeros((4, 4))))
        assert out.sign == 0

    def test_odd_dimension_rejected(self):
        with pytest.raises(ValueError, match="even"):
            pfaffian(lsv_matrix(np.zeros((3, 3))))

    def test_asymmetry_rejected(self, rng):
        raw = rng.standard_normal((4, 4))
        anti = raw - raw.T
        anti[0, 1] *= 1.0 + 1e-6
        with pytest.raises(ValueError, match="antisymmetric"):
            pfaffian(lsv_matrix(anti))


class TestEigenAndCholesky:
    def test_diagonal(self):
        assert smallest_eigenvalue(np.diag([1.0, 2.0, 3.0])) == pytest.approx(1.0, abs=1e-12)

    def test_two_by_two(self):
        assert smallest_eigenvalue(np.array([[2.0, 1.0], [1.0, 2.0]])) == pytest.approx(1.0, abs=1e-12)

    def test_wishart_vs_bisection_oracle(self, rng):
        for _ in range(4):
            w = rng.standard_normal((8, 12))
            m = w @ w.T
            got = smallest_eigenvalue(m)
            want = bisect_smallest_eigenvalue(m)
            assert got == pytest.approx(want, abs=1e-10 * np.abs(m).max())

    def test_similarity_invariance(self, rng):
        q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
        diag = np.sort(rng.uniform(0.1, 9.0, size=7))
        assert smallest_eigenvalue(q @ np.diag(diag) @ q.T) == pytest.approx(diag[0], abs=1e-9)

    def test_hermitian_complex(self):
        m = np.array([[2.0, 1j], [-1j, 2.0]])
        assert smallest_eigenvalue(m) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            smallest_eigenvalue(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_cholesky_identity(self):
        assert np.allclose(cholesky(np.eye(4)), np.eye(4))

    def test_cholesky_diagonal(self):
        lam = np.array([0.25, 1.0, 9.0])
        assert np.allclose(cholesky(np.diag(lam)), np.diag(np.sqrt(lam)))

    def test_cholesky_reconstruction(self):
        c = np.full((3, 3), 0.5) + 0.5 * np.eye(3)
        low = cholesky(c)
        assert np.linalg.norm(low @ low.T - c) <= 1e-12 * np.linalg.norm(c)

    def test_cholesky_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive definite"):
            cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))
