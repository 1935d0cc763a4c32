import numpy as np
import pytest


def random_state(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def permute_env_bits(psi: np.ndarray, perm, M: int) -> np.ndarray:
    """Relabel environment sites: bit l of nu moves to position perm[l]."""
    n_env = 1 << M
    nu = np.arange(n_env)
    target = np.zeros(n_env, dtype=np.int64)
    for l in range(M):
        target |= ((nu >> l) & 1) << perm[l]
    out = np.empty_like(psi)
    p2 = psi.reshape(2, n_env)
    o2 = out.reshape(2, n_env)
    o2[:, target] = p2[:, nu]
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
