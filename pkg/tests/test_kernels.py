import numpy as np
import pytest

from ncbench.errors import DimensionError, ParameterError
from ncbench.kernels import NU_VALUES, KernelSpec, cross, grad_x, gram, value


def test_closed_form_values():
    # frozen from the closed forms evaluated by hand at u = r/l = 1
    assert value(KernelSpec(1.5, 0.2, 1.0), [0.0], [0.2]) == pytest.approx(
        0.4833577245965077, abs=1e-12
    )
    assert value(KernelSpec(0.5, 0.2, 1.0), [0.0], [0.2]) == pytest.approx(
        0.36787944117144233, abs=1e-12
    )
    assert value(KernelSpec(2.5, 0.2, 1.0), [0.0], [0.2]) == pytest.approx(
        0.5239941088318203, abs=1e-12
    )
    # scale multiplies, r = 0 gives exactly s
    assert value(KernelSpec(2.5, 0.2, 3.0), [0.1, 0.4], [0.1, 0.4]) == 3.0


def test_value_symmetric_and_decaying():
    rng = np.random.default_rng(0)
    for nu in NU_VALUES:
        spec = KernelSpec(nu, 0.3, 2.0)
        for _ in range(20):
            x, y = rng.random(3), rng.random(3)
            assert value(spec, x, y) == pytest.approx(value(spec, y, x), abs=1e-15)
        # monotone decay in distance along a ray
        rs = np.linspace(0, 2, 50)
        vals = [value(spec, [0.0], [r]) for r in rs]
        assert all(a >= b for a, b in zip(vals, vals[1:]))
        assert vals[0] == 2.0


@pytest.mark.parametrize("nu", NU_VALUES)
def test_gram_psd_and_matches_cross(nu):
    rng = np.random.default_rng(1)
    X = rng.random((12, 2))
    spec = KernelSpec(nu, 0.25, 1.5)
    K = gram(spec, X)
    assert np.allclose(K, K.T)
    assert np.allclose(K, cross(spec, X, X), atol=1e-12)
    w = np.linalg.eigvalsh(K)
    assert w.min() > -1e-9
    assert np.allclose(np.diag(K), 1.5)


@pytest.mark.parametrize("nu", NU_VALUES)
def test_grad_matches_finite_differences(nu):
    rng = np.random.default_rng(2)
    spec = KernelSpec(nu, 0.3, 1.7)
    C = rng.random((6, 3))
    h = 1e-6
    for _ in range(10):
        x = rng.random(3)
        g = grad_x(spec, x, C)
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            fd = (cross(spec, [x + e], C) - cross(spec, [x - e], C)).ravel() / (2 * h)
            assert np.allclose(g[:, j], fd, atol=5e-6)


def test_grad_zero_at_coincident_point():
    for nu in NU_VALUES:
        spec = KernelSpec(nu, 0.2, 1.0)
        x = np.array([0.3, 0.7])
        g = grad_x(spec, x, np.array([[0.3, 0.7], [0.1, 0.1]]))
        assert np.all(g[0] == 0.0)
        assert np.all(np.isfinite(g))


def test_parameter_validation():
    with pytest.raises(ParameterError):
        KernelSpec(2.0, 0.2, 1.0)
    with pytest.raises(ParameterError):
        KernelSpec(1.5, 0.0, 1.0)
    with pytest.raises(ParameterError):
        KernelSpec(1.5, 0.2, -1.0)
    with pytest.raises(DimensionError):
        value(KernelSpec(1.5, 0.2, 1.0), [0.0], [0.0, 0.0])
    with pytest.raises(DimensionError):
        cross(KernelSpec(1.5, 0.2, 1.0), np.zeros((3, 2)), np.zeros((3, 3)))
