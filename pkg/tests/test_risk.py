import math
import sys
from pathlib import Path

import numpy as np
import pytest

from sigmaspace import FiniteSpace, RandomVector, ValidationError, bound_chain, lipschitz_check, rho_assignment, rho_scalar
from sigmaspace.risk import norm_constant

sys.path.insert(0, str(Path(__file__).parent))
import _draws as draw  # noqa: E402


class TestRhoScalar:
    def test_examples(self):
        assert rho_scalar(RandomVector.scalar([1.0, 2.0]), RandomVector.scalar([3.0, 4.0])) == 5.5
        assert rho_scalar(RandomVector.scalar([1.0, 2.0]), RandomVector.scalar([0.0, 0.0])) == 0.0
        Z = RandomVector.scalar([1.0, 3.0])
        assert rho_scalar(Z, Z) == 5.0

    def test_signed_values(self):
        # comonotone pairing of signed values
        Z = RandomVector.scalar([-1.0, 2.0])
        Y = RandomVector.scalar([5.0, -3.0])
        assert rho_scalar(Z, Y) == pytest.approx(0.5 * (-1 * -3 + 2 * 5))

    def test_unequal_weights(self):
        Z = RandomVector.scalar([1.0, 2.0], [0.25, 0.75])
        Y = RandomVector.scalar([0.0, 4.0], [0.5, 0.5])
        # quantile product: (0,.25] 1*0, (.25,.5] 2*0, (.5,1] 2*4
        assert rho_scalar(Z, Y) == pytest.approx(4.0, abs=1e-15)

    def test_needs_scalar(self):
        sp = FiniteSpace.uniform(1)
        with pytest.raises(ValidationError):
            rho_scalar(RandomVector(sp, np.ones((1, 2))), RandomVector(sp, np.ones((1, 2))))


class TestAssignment:
    def test_identity_example(self):
        sp = FiniteSpace.uniform(2)
        eye = RandomVector(sp, np.eye(2))
        val, perm = rho_assignment(eye, eye)
        assert val == 1.0 and perm.tolist() == [0, 1]

    def test_single_atom(self):
        sp = FiniteSpace.uniform(1)
        val, _ = rho_assignment(RandomVector(sp, np.array([[1.0, 2.0]])), RandomVector(sp, np.array([[3.0, -1.0]])))
        assert val == 1.0

    def test_rejects_unequal_weights(self):
        Z = RandomVector.scalar([1.0, 2.0], [0.3, 0.7])
        with pytest.raises(ValidationError, match="equal atom weights"):
            rho_assignment(Z, Z)

    def test_properties(self):
        rng = np.random.default_rng(41)
        for _ in range(300):
            n, d = int(rng.integers(1, 10)), int(rng.integers(1, 4))
            Z, Y1, Y2 = (draw.vector(rng, n, d, uniform=True) for _ in range(3))
            base, _ = rho_assignment(Z, Y1)
            # law invariance
            assert rho_assignment(Z, Y1.permuted(rng.permutation(n)))[0] == base
            # positive homogeneity with an exact power-of-two factor
            assert rho_assignment(Z, Y1.with_values(4.0 * Y1.values))[0] == 4.0 * base
            # subadditivity
            both = rho_assignment(Z, Y1.with_values(Y1.values + Y2.values))[0]
            assert both <= base + rho_assignment(Z, Y2)[0] + 1e-9 * max(1.0, abs(both))
            if d == 1:
                assert base == rho_scalar(Z, Y1)


class TestLipschitz:
    def test_equal_portfolios(self):
        Z = RandomVector.scalar([1.0, 3.0])
        res = lipschitz_check(Z, Z, Z)
        assert res.lhs == 0.0 and res.rhs == 0.0 and res.holds

    def test_zero_portfolio_and_scale(self):
        rng = np.random.default_rng(42)
        for _ in range(300):
            n, d = int(rng.integers(1, 9)), int(rng.integers(1, 4))
            Z = draw.vector(rng, n, d, uniform=True)
            if not np.any(Z.values):
                continue
            Y = draw.vector(rng, n, d, uniform=True)
            zero = Y.with_values(np.zeros_like(Y.values))
            res = lipschitz_check(Z, Y, zero, 1.0)
            assert res.holds
            scaled = lipschitz_check(Z.with_values(8.0 * Z.values), Y, zero, 1.0)
            assert scaled.holds and scaled.scale == pytest.approx(8.0 * res.scale, rel=1e-12)
            assert scaled.lhs == pytest.approx(res.lhs, rel=1e-9, abs=1e-12)


class TestBoundChain:
    def test_comonotone_equality(self):
        Z = RandomVector.scalar([1.0, 2.0, 5.0])
        Y = RandomVector.scalar([0.5, 3.0, 4.0])
        rep = bound_chain(Z, Y, 2.0)
        t = rep.bound_chain
        assert t[0] == pytest.approx(t[1]) == pytest.approx(t[2]) == pytest.approx(t[3])
        assert rep.holds and rep.rho == pytest.approx(t[3])

    def test_zero(self):
        Z = RandomVector.scalar([1.0, 2.0])
        rep = bound_chain(Z, Z.with_values(np.zeros((2, 1))))
        assert rep.bound_chain == (0.0, 0.0, 0.0, 0.0)

    @pytest.mark.parametrize("r", [1.0, 2.0, 3.0, math.inf])
    def test_norm_constant(self, r):
        assert norm_constant(r, 3) == 1.0

    def test_random_d3(self):
        rng = np.random.default_rng(43)
        for _ in range(300):
            n = int(rng.integers(1, 10))
            sp = draw.space(rng, n)
            Z, Y = RandomVector(sp, draw.values(rng, n, 3)), RandomVector(sp, draw.values(rng, n, 3))
            rep = bound_chain(Z, Y, (1.0, 2.0, math.inf)[int(rng.integers(3))])
            assert rep.holds
            assert (rep.rho is None) == (not sp.is_uniform())

    def test_mismatched_spaces(self):
        with pytest.raises(ValidationError):
            bound_chain(RandomVector.scalar([1.0, 2.0]), RandomVector.scalar([1.0, 2.0], [0.4, 0.6]))
