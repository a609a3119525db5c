import numpy as np
import pytest

from mechconvert import CavityParams, ConverterParams, MechanicalParams, derive_rates, drive_for_cooperativity, reference_device


@pytest.fixture
def device():
    return reference_device()


def rates_for(params, C1, C2):
    return derive_rates(params, drive_for_cooperativity(params, C1, C2))


def random_device(rng, strong=False):
    """A random resolved-sideband device. ``strong`` allows Gamma_i comparable to or above kappa_i."""
    f_m = 10 ** rng.uniform(6.5, 7.5)
    k1, k2 = 10 ** rng.uniform(4, 6, size=2)
    p = ConverterParams(
        CavityParams(f_c=5e9, kappa=k1, eta=rng.uniform(0.05, 1.0), g0=10 ** rng.uniform(1, 3)),
        CavityParams(f_c=7e9, kappa=k2, eta=rng.uniform(0.05, 1.0), g0=10 ** rng.uniform(1, 3)),
        MechanicalParams(f_m=f_m, gamma_m=10 ** rng.uniform(-1, 2), n_th=rng.uniform(0, 200)),
    )
    if strong:
        g1, g2 = 10 ** rng.uniform(-1, 1, size=2)
        C1, C2 = g1 * k1 / p.mech.gamma_m, g2 * k2 / p.mech.gamma_m
    else:
        C1, C2 = 10 ** rng.uniform(-2, 3.5, size=2)
    return p, rates_for(p, C1, C2)


def weak_device(rng):
    """Random device with Gamma_i <= kappa_i / 1000."""
    p, _ = random_device(rng)
    C1 = rng.uniform(0, 1e-3) * p.cavity1.kappa / p.mech.gamma_m
    C2 = rng.uniform(0, 1e-3) * p.cavity2.kappa / p.mech.gamma_m
    return p, rates_for(p, C1, C2)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


_acceptance = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not report.failed:
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    n = dict(report.user_properties).get("criterion")
    if n is not None:
        prev = _acceptance.get(n, "PASS")
        _acceptance[n] = "FAIL" if report.failed or prev == "FAIL" else "PASS"


@pytest.fixture(autouse=True)
def _record_criterion(request):
    m = request.node.get_closest_marker("criterion")
    if m is not None:
        request.node.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        terminalreporter.write_line(f"criterion {n:2d}: {_acceptance[n]}")
