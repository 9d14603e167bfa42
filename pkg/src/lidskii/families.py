"""Seeded operator families used by the verification suite and the demos."""
import numpy as np

from .operators import OperatorSpec

__all__ = ["random_unitary", "random_sectorial", "sectorial_structured",
           "random_structured", "diagonal_family", "normal_sectorial"]


def random_unitary(n, rng):
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))[None, :]


def random_sectorial(n, theta, seed, spread=(1.0, 4.0)):
    """Dense ``H^{1/2} (I + i s S) H^{1/2}`` with ``s = tan(theta)``.

    ``H`` is positive definite and ``S`` Hermitian with unit norm, so the
    numerical range lies in the sector of semi-angle ``theta`` about the
    positive axis.
    """
    rng = np.random.default_rng(seed)
    Q = random_unitary(n, rng)
    d = rng.uniform(*spread, size=n)
    Hh = (Q * np.sqrt(d)[None, :]) @ Q.conj().T
    S = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    S = S + S.conj().T
    S /= np.linalg.norm(S, 2)
    B = Hh @ (np.eye(n) + 1j * np.tan(theta) * S) @ Hh
    return OperatorSpec.from_dense(B, label=f"sectorial-{n}-{seed}")


def sectorial_structured(blocks, seed, eta=0.1):
    """``Q (Lambda + eta N) Q^H`` with exact Jordan data.

    The basis is ``Q diag(eta^{-j})``, so a small ``eta`` keeps the
    numerical range close to the eigenvalues.
    """
    rng = np.random.default_rng(seed)
    n = sum(k for _, k in blocks)
    Q = random_unitary(n, rng)
    D = eta ** -np.concatenate([np.arange(k) for _, k in blocks]).astype(float)
    return OperatorSpec.from_jordan(blocks, Q * D[None, :],
                                    label=f"sectorial-jordan-{n}-{seed}")


def random_blocks(n, rng, max_chain=3, argument=0.3, moduli=(0.15, 1.0)):
    blocks = []
    left = n
    used = []
    while left:
        k = int(rng.integers(1, min(max_chain, left) + 1))
        while True:
            mu = rng.uniform(*moduli) * np.exp(1j * rng.uniform(-argument, argument))
            if all(abs(mu - u) > 0.05 for u in used):
                break
        used.append(mu)
        blocks.append((complex(mu), k))
        left -= k
    return blocks


def random_structured(n, seed, max_chain=3, eta=None):
    """Random Jordan data with a well-conditioned random basis.

    With ``eta`` the basis is the sectorial one of
    :func:`sectorial_structured`.
    """
    rng = np.random.default_rng(seed)
    blocks = random_blocks(n, rng, max_chain)
    if eta is not None:
        return sectorial_structured(blocks, int(rng.integers(2**31)), eta)
    P = np.eye(n) + 0.3 * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(n)
    return OperatorSpec.from_jordan(blocks, P, label=f"structured-{n}-{seed}")


def diagonal_family(n, seed, low=0.5, high=3.0):
    """Real positive diagonal operator."""
    rng = np.random.default_rng(seed)
    d = np.sort(rng.uniform(low, high, size=n))
    return OperatorSpec.from_dense(np.diag(d), label=f"diagonal-{n}-{seed}")


def normal_sectorial(n, theta, seed, low=0.5, high=3.0):
    """Normal operator ``U diag(d) U^H`` with ``|arg d| <= theta``."""
    rng = np.random.default_rng(seed)
    U = random_unitary(n, rng)
    d = rng.uniform(low, high, size=n) * np.exp(1j * rng.uniform(-theta, theta, size=n))
    return OperatorSpec.from_dense((U * d[None, :]) @ U.conj().T,
                                   label=f"normal-{n}-{seed}")
