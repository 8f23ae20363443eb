import numpy as np
import pytest

from itoreorder.core import ONE, KConst, Separable, since_start
from itoreorder.quadrature import simplex_quadrature, triangle_trapezoid

IV = (0.0, 1.0)
FIRST = Separable((since_start(1),))  # first argument minus t
SECOND = Separable((ONE, since_start(1)))


def test_triangle_area():
    assert simplex_quadrature((KConst(1.0), KConst(1.0)), IV, 3) == pytest.approx(0.5, abs=1e-14)


def test_second_argument_integrates_to_one_sixth():
    val = simplex_quadrature((SECOND, KConst(1.0)), IV, 2049)
    assert val == pytest.approx(1 / 6, abs=1e-7)


def test_nonlinear_integrand_converges_quadratically():
    g = lambda x, y: np.exp(x) * np.cos(y)
    exact = 0.5 * (np.e * (np.sin(1) - np.cos(1)) + 1)
    errs = [abs(triangle_trapezoid(g, IV, n) - exact) for n in (33, 65, 129)]
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.1)
    assert errs[1] / errs[2] == pytest.approx(4, rel=0.1)


def test_order_replacement_riemann():
    # int_0^1 x int_0^x dy dx against int_0^1 int_y^1 x dx dy
    f = lambda x, y: x + 0 * y
    upper = triangle_trapezoid(f, IV, 129, outer="upper")
    lower = triangle_trapezoid(f, IV, 129, outer="lower")
    assert upper == pytest.approx(1 / 3, abs=1e-4)
    assert lower == pytest.approx(1 / 3, abs=1e-4)


def test_shifted_interval():
    assert simplex_quadrature((KConst(1.0), KConst(2.0)), (1.0, 3.0), 5) == pytest.approx(4.0)


@pytest.mark.parametrize("interval,nodes", [((1.0, 0.0), 5), ((0.0, np.inf), 5), ((0.0, 1.0), 1)])
def test_rejects(interval, nodes):
    with pytest.raises(ValueError):
        simplex_quadrature((KConst(1.0), KConst(1.0)), interval, nodes)
    with pytest.raises(ValueError):
        triangle_trapezoid(lambda x, y: x, (0, 1), 5, outer="middle")
