import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from heisfrac.errors import ContractError, SingularityError
from heisfrac.group import GroupPoint, zygmund_dilate
from heisfrac.kernels import (FSParams, KernelParams, RieszParams, bracket, check_delta_chain,
                              check_separable_bound, delta_chain_terms, delta_to_alphabeta, eval_Omega,
                              eval_riesz, eval_separable, eval_V, folland_stein_kernel_array, log_bracket,
                              rho, separable_kernel_array, zygmund_kernel_array)

P = lambda *x: GroupPoint.from_flat(x)  # noqa: E731

PAIRS = [(1, 0), (0.5, 0.5), (1.2, 0.3), (0.8, 0.1), (1.5, 0.2), (0.3, 0.6), (1, 0.25), (0.9, 0.45),
         (1.4, 0.05), (0.6, 0.3)]


@pytest.mark.parametrize("args, expected", [((1, 0, 1), 0.5), ((2, 1, 2), 0.0), ((5, 1, 2), 1.0)])
def test_rho(args, expected):
    assert rho(*args) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("p, expected", [
    ((1, 1, 1), 2 ** -0.5),
    ((1, 2, 2), 0.5 * 2 ** -0.5),
    ((2, 3, 6), 2 ** -0.5 / 6),
])
def test_eval_V_examples(p, expected):
    assert eval_V(P(*p), KernelParams(1, 0, 1, 0.5)) == pytest.approx(expected, rel=1e-14)


def test_eval_V_direct_formula_n2():
    # independent evaluation of the defining formula with Euclidean norms
    k = KernelParams(1.3, 0.4, 2, 0.7)
    u, v, t = np.array([0.3, -1.1]), np.array([2.0, 0.5]), -0.8
    a, b = np.linalg.norm(u), np.linalg.norm(v)
    x = a * b / abs(t)
    want = a ** (1.3 - 2) * b ** (1.3 - 2) * abs(t) ** (0.4 - 1) * (x + 1 / x) ** -0.7
    assert eval_V(GroupPoint(u, v, t), k) == pytest.approx(want, rel=1e-13)


@pytest.mark.parametrize("p, delta, expected", [((1, 1, 1), 1.0, 1 / 3), ((0, 0, 1), 1.0, 1.0),
                                                ((1, 0, 0), 0.5, 1.0)])
def test_eval_Omega_examples(p, delta, expected):
    assert eval_Omega(P(*p), FSParams(delta, 1)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("x, a, N, expected", [(4.0, 0.5, 1, 0.5), ([1.0, 0.0], 1.0, 2, 1.0),
                                               (0.25, 0.5, 1, 2.0), ([0.6, 0.8], 1.0, 2, 1.0)])
def test_eval_riesz_examples(x, a, N, expected):
    assert eval_riesz(x, RieszParams(a, N)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize("delta, n, expected", [(1.0, 1, (0.5, 0.5)), (1.0, 2, (1.0, 0.0)),
                                                (1.9, 1, (0.95, 0.95))])
def test_delta_to_alphabeta(delta, n, expected):
    a, b = delta_to_alphabeta(delta, n)
    assert (a, b) == pytest.approx(expected, abs=1e-15)
    assert a + b == pytest.approx(delta, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 4), st.floats(0.01, 0.999))
def test_delta_to_alphabeta_consequences(n, frac):
    delta = frac * (n + 1)
    a, b = delta_to_alphabeta(delta, n)
    assert a >= n * b - 1e-12
    if n > 1:
        assert a > n * b
    assert (a - n * b) / (n + 1) < (n + 1) / 2 - delta / 2


@pytest.mark.parametrize("bad", [
    lambda: RieszParams(1.0, 1), lambda: RieszParams(0.0, 2), lambda: FSParams(2.0, 1),
    lambda: FSParams(0.0, 1), lambda: KernelParams(1, 0, 1, -0.1), lambda: KernelParams(1, 0, 0),
    lambda: delta_to_alphabeta(3.0, 1),
])
def test_parameter_contracts(bad):
    with pytest.raises(ContractError):
        bad()


@pytest.mark.parametrize("p", [(0, 1, 1), (1, 0, 1), (1, 1, 0)])
def test_singular_planes_raise(p):
    with pytest.raises(SingularityError):
        eval_V(P(*p), KernelParams(1, 0))
    with pytest.raises(SingularityError):
        eval_separable(P(*p), KernelParams(1, 0))


def test_other_singularities():
    with pytest.raises(SingularityError):
        eval_Omega(P(0, 0, 0), FSParams(1.0))
    with pytest.raises(SingularityError):
        eval_riesz(0.0, RieszParams(0.5))


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(PAIRS), st.floats(-4, 4), st.floats(-4, 4), st.floats(-4, 4),
       st.floats(-2, 2), st.floats(-2, 2))
def test_zygmund_homogeneity(pair, lu, lv, lt, lr, ls):
    k = KernelParams(*pair)
    p = P(np.exp(lu), -np.exp(lv), np.exp(lt))
    r, s = np.exp(lr), np.exp(ls)
    e = k.alpha + k.beta - k.n - 1
    assert eval_V(zygmund_dilate(p, r, s), k) == pytest.approx(r ** e * s ** e * eval_V(p, k), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e6), st.floats(0, 3))
def test_bracket_symmetry(x, theta):
    assert bracket(x, theta) == pytest.approx(bracket(1 / x, theta), rel=1e-13)
    assert log_bracket(x) == pytest.approx(np.log(x + 1 / x), rel=1e-13)


@pytest.mark.parametrize("pair", PAIRS)
def test_separable_bound_random(pair):
    rng = np.random.default_rng(7)
    k = KernelParams(*pair)
    a, b, c = np.exp(rng.uniform(-4, 4, (3, 10_000)))
    v = zygmund_kernel_array(a, b, c, k)
    bound = separable_kernel_array(a, b, c, k)
    assert np.all(v <= bound * (1 + 1e-12))


def test_separable_bound_examples():
    assert check_separable_bound(P(1, 1, 1), KernelParams(1, 0))
    # equality locus with rho = 0
    k = KernelParams(1, 1)
    assert k.rho == 0
    p = P(2.0, 0.5, 1.0)
    assert check_separable_bound(p, k)
    assert eval_V(p, k) == pytest.approx(eval_separable(p, k), rel=1e-14)


def test_separable_bound_needs_sharp_theta():
    with pytest.raises(ContractError):
        check_separable_bound(P(1, 1, 1), KernelParams(1, 0, 1, 0.3))


@pytest.mark.parametrize("delta, n", [(0.5, 1), (1.0, 1), (1.7, 1), (1.0, 2), (2.5, 3)])
def test_delta_chain_random(delta, n):
    rng = np.random.default_rng(11)
    fs = FSParams(delta, n)
    for _ in range(200):
        p = GroupPoint(rng.normal(size=n) * np.exp(rng.uniform(-3, 3)),
                       rng.normal(size=n) * np.exp(rng.uniform(-3, 3)), rng.normal() * np.exp(rng.uniform(-3, 3)))
        assert check_delta_chain(p, fs)


def test_delta_chain_vectorised_matches_scalar():
    fs = FSParams(1.0, 1)
    omega, mixed, product = delta_chain_terms(P(0.5, 2.0, 0.25), fs)
    assert omega == pytest.approx(folland_stein_kernel_array(0.5, 2.0, 0.25, fs))
    assert mixed == pytest.approx(1 / 1.25)
    assert product == pytest.approx((1 + 0.0625) ** -0.5)
