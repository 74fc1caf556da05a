import numpy as np
import pytest

from wavebem.errors import ValidationError
from wavebem.oracle import (
    DAlembert1D,
    PlaneWave,
    PointSourcePulse3D,
    Profile,
    RadialBump,
    SphericalPulse3D,
    StandingWave1D,
    gaussian_velocity_2d,
    poisson_2d_bruteforce,
    wave_residual,
)


@pytest.mark.parametrize("prof", [Profile("pulse", width=1.3, amplitude=2.0), Profile("power", power=3.0)])
def test_profile_derivatives(prof):
    s = np.linspace(0.05, 1.2, 9)
    h = 1e-5
    d1 = (prof(s + h) - prof(s - h)) / (2 * h)
    d2 = (prof(s + h) - 2 * prof(s) + prof(s - h)) / h**2
    assert np.allclose(prof.derivative(s, 1), d1, rtol=1e-6, atol=1e-8)
    assert np.allclose(prof.derivative(s, 2), d2, rtol=1e-4, atol=1e-4)
    assert np.all(prof(np.array([-1.0, 0.0])) == 0.0)


def test_profile_validation():
    with pytest.raises(ValidationError):
        Profile("triangle")
    with pytest.raises(ValidationError):
        Profile("pulse", width=0.0)
    with pytest.raises(ValidationError):
        PlaneWave((1.0, 1.0))
    with pytest.raises(ValidationError):
        RadialBump((0, 0), radius=-1.0)


@pytest.mark.parametrize("oracle,x,t", [
    (PlaneWave((0.6, 0.8), 1.5, Profile("pulse", width=2.0), offset=0.2), [[0.1, 0.3], [-0.4, 0.2]], 1.1),
    (PlaneWave((0.0, 0.0, 1.0), 1.0, Profile("pulse", width=2.0)), [[0.1, 0.3, 0.2]], 1.3),
    (StandingWave1D(c=2.0), [[0.3], [0.71]], 0.4),
    (PointSourcePulse3D((2.5, 0.0, 0.0), 1.0, Profile("pulse", width=2.0)), [[0.1, 0.2, 0.0]], 3.2),
    (SphericalPulse3D(velocity=RadialBump((0, 0, 0), 0.6, 4)), [[0.3, 0.1, 0.0]], 0.5),
])
def test_oracles_solve_the_wave_equation(oracle, x, t):
    res = np.asarray(wave_residual(oracle, np.array(x, dtype=float), t, h=1e-3))
    u = np.abs(oracle.eval(np.array(x, dtype=float), t)[0]).max()
    assert np.abs(res).max() < 1e-3 * max(1.0, u)


def test_oracle_time_derivative_and_gradient():
    pw = PlaneWave((0.6, 0.8), 1.5, Profile("pulse", width=2.0), offset=0.2)
    x = np.array([[0.1, 0.3]])
    t, h = 1.1, 1e-6
    u, ut, g = pw.eval(x, t)
    assert ut[0] == pytest.approx((pw.eval(x, t + h)[0][0] - pw.eval(x, t - h)[0][0]) / (2 * h), rel=1e-6)
    e = np.array([[h, 0.0]])
    assert g[0, 0] == pytest.approx((pw.eval(x + e, t)[0][0] - pw.eval(x - e, t)[0][0]) / (2 * h), rel=1e-6)


def test_dalembert_hat_initial_state():
    hat = DAlembert1D.hat(0.5, 0.1, 2.0)
    x = np.array([[0.5], [0.55], [0.7]])
    u, ut, _ = hat.eval(x, 0.0)
    assert u.tolist() == pytest.approx([2.0, 1.0, 0.0])
    assert np.all(ut == 0.0)
    # two half-height hats travel apart
    u, _, _ = hat.eval(np.array([[0.2], [0.8]]), 0.3)
    assert u.tolist() == pytest.approx([1.0, 1.0])


def test_poisson_bruteforce_against_hankel_solution():
    w = 0.3
    init = (None, lambda p: np.exp(-np.sum(np.asarray(p) ** 2, axis=1) / w**2))
    for rho, t in ((0.0, 0.4), (0.5, 0.8)):
        ref = gaussian_velocity_2d(w, rho, t)
        val = poisson_2d_bruteforce(init, (rho, 0.0), t, 1.0)
        # independent routes: disk quadrature versus a Hankel transform
        assert val == pytest.approx(ref, rel=1e-6, abs=1e-10)


def test_point_source_rejects_its_source():
    with pytest.raises(ValidationError):
        PointSourcePulse3D((0.0, 0.0, 0.0)).eval(np.zeros((1, 3)), 1.0)
