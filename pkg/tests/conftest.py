import numpy as np
import pytest


def random_unitary(d, rng):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(d, rng, rank=None):
    rank = d if rank is None else rank
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_kraus_pair(d, rng):
    """Generic (non-commuting, non-normal) B, C with B^+B + C^+C = I."""
    v = random_unitary(2 * d, rng)[:, :d]
    return v[:d], v[d:]


def random_spectrum(d, rng, distinct=True):
    """Eigenvalue pairs with |lam|^2 + |phi|^2 = 1 and random phases."""
    while True:
        angles = rng.uniform(0.05, np.pi / 2 - 0.05, size=d)
        if not distinct or d == 1 or np.min(np.diff(np.sort(np.cos(angles)))) > 1e-3:
            break
    lam = np.cos(angles) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=d))
    phi = np.sin(angles) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=d))
    return lam, phi


def commuting_pair(lam, phi, U):
    Uh = U.conj().T
    return (U * lam) @ Uh, (U * phi) @ Uh


def random_commuting_pair(d, rng):
    lam, phi = random_spectrum(d, rng)
    U = random_unitary(d, rng)
    B, C = commuting_pair(lam, phi, U)
    return B, C, lam, phi, U


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def report(criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
