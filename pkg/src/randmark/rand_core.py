"""Deterministic random streams with labeled substreams.

A counter-style splitmix64 generator backs every simulation in this
package.  Streams are identified by (origin_seed, label_path); deriving a
substream never advances the parent, so the same labels always reproduce
the same draws no matter how much the parent has been consumed.  Block
draws are bitwise-identical to the equivalent sequence of scalar draws,
which lets hot loops vectorize without changing any output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_LABEL_SALT = 0xD1B54A32D192ED03
_INV_2_53 = 2.0 ** -53


def _mix64(z: int) -> int:
    """splitmix64 finalizer (python ints, explicit 64-bit wrap)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _mix64_vec(z: np.ndarray) -> np.ndarray:
    """Vector form of _mix64 on uint64 arrays (wrapping is silent)."""
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@dataclass
class RngStream:
    """One deterministic stream.

    state advances by the splitmix increment on every draw; the i-th
    output after creation is mix(initial_state + i * gamma), so a block
    of n draws can be produced in one vectorized pass.
    """

    origin_seed: int
    label_path: tuple[int, ...]
    state: int
    _base: int = field(repr=False, default=0)


def make_rng(seed: int) -> RngStream:
    """Root stream for a 64-bit seed (larger ints are wrapped)."""
    if not isinstance(seed, int):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    base = _mix64((seed + _GAMMA) & _MASK64)
    return RngStream(origin_seed=seed & _MASK64, label_path=(), state=base, _base=base)


def substream(rng: RngStream, label: int) -> RngStream:
    """Child stream for an integer label.

    Derivation avalanche-mixes the parent's initial state with the mixed
    label, so children are a pure function of (origin_seed, label_path):
    the parent's draw position is irrelevant and is not advanced.
    """
    if not isinstance(label, int):
        raise ValueError(f"label must be an integer, got {type(label).__name__}")
    base = _mix64(rng._base ^ _mix64((label ^ _LABEL_SALT) & _MASK64))
    return RngStream(
        origin_seed=rng.origin_seed,
        label_path=rng.label_path + (label & _MASK64,),
        state=base,
        _base=base,
    )


def uniform_block(rng: RngStream, n: int) -> np.ndarray:
    """n uniforms on the open interval (0,1), advancing the stream by n.

    The mixed 64-bit word keeps its top 53 bits; the +0.5 offset keeps
    both endpoints strictly excluded, so log(u) and 1/u are always finite.
    """
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    ks = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA)
    words = _mix64_vec(ks + np.uint64(rng.state))
    rng.state = (rng.state + n * _GAMMA) & _MASK64
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def uniform01(rng: RngStream) -> float:
    """One uniform draw in (0,1)."""
    return float(uniform_block(rng, 1)[0])


def gaussian_block(rng: RngStream, n: int) -> np.ndarray:
    """n standard normal draws via Box-Muller (consumes 2n uniforms)."""
    us = uniform_block(rng, 2 * n)
    return np.sqrt(-2.0 * np.log(us[:n])) * np.cos(2.0 * math.pi * us[n:])


def sample_gaussian(rng: RngStream, mu: float = 0.0, sigma: float = 1.0) -> float:
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    return mu + sigma * float(gaussian_block(rng, 1)[0])


def _gamma_block(rng: RngStream, a: float, n: int) -> np.ndarray:
    """n Gamma(a,1) draws, Marsaglia-Tsang squeeze with vectorized retry.

    Rejected candidates are redrawn in further passes, so the number of
    uniforms consumed varies with the data; determinism is per-stream,
    not per-count.  a < 1 is boosted through Gamma(a+1) * U^(1/a).
    """
    if a <= 0:
        raise ValueError(f"gamma shape must be positive, got {a}")
    if a < 1.0:
        g = _gamma_block(rng, a + 1.0, n)
        u = uniform_block(rng, n)
        return g * u ** (1.0 / a)
    d = a - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = np.empty(n, dtype=np.float64)
    filled = 0
    while filled < n:
        m = n - filled
        z = gaussian_block(rng, m)
        u = uniform_block(rng, m)
        v = (1.0 + c * z) ** 3
        logv = np.full_like(v, -np.inf)
        pos = v > 0
        logv[pos] = np.log(v[pos])
        ok = pos & (np.log(u) < 0.5 * z * z + d - d * v + d * logv)
        k = int(np.count_nonzero(ok))
        out[filled : filled + k] = d * v[ok]
        filled += k
    return out


def beta_block(rng: RngStream, a: float, b: float, n: int) -> np.ndarray:
    """n Beta(a,b) draws as G_a / (G_a + G_b); G_a is drawn first."""
    g1 = _gamma_block(rng, a, n)
    g2 = _gamma_block(rng, b, n)
    return g1 / (g1 + g2)


def sample_beta(rng: RngStream, a: float, b: float) -> float:
    return float(beta_block(rng, a, b, 1)[0])


def sample_ar1_toeplitz(rng: RngStream, k: int, rho: float, mu: float = 0.0) -> np.ndarray:
    """Gaussian vector with unit variance and Cov(X_i, X_j) = rho^|i-j|.

    Built by the stationary AR(1) recursion X_1 = Z_1,
    X_i = rho * X_{i-1} + sqrt(1 - rho^2) * Z_i, then shifted by mu.
    rho = 1 gives the completely dependent constant vector.
    """
    if k < 1:
        raise ValueError(f"dimension must be at least 1, got {k}")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    z = gaussian_block(rng, k)
    x = np.empty(k, dtype=np.float64)
    x[0] = z[0]
    w = math.sqrt(1.0 - rho * rho)
    for i in range(1, k):
        x[i] = rho * x[i - 1] + w * z[i]
    return mu + x


def random_permutation(rng: RngStream, n: int) -> np.ndarray:
    """Uniformly random permutation of 0..n-1.

    Sorts fresh uniform keys; a stable argsort makes the result a pure
    function of the drawn block.
    """
    if n < 1:
        raise ValueError(f"permutation length must be at least 1, got {n}")
    return np.argsort(uniform_block(rng, n), kind="stable")


def is_permutation(pi: np.ndarray, n: int) -> bool:
    """True when pi is a bijection on {0, ..., n-1}."""
    if pi.shape != (n,):
        return False
    seen = np.zeros(n, dtype=bool)
    seen[pi] = True
    return bool(seen.all())


def rank_randomizer(x_last: float, bag: np.ndarray) -> float:
    """Normalized rank of x_last within bag: #{b_i <= x_last} / |bag|.

    For continuous exchangeable data the rank of the last entry is
    uniform on {1/n, ..., 1}, hence stochastically no smaller than a
    Unif(0,1) draw, and can stand in for one anywhere a randomizer only
    needs to dominate the uniform.
    """
    bag = np.asarray(bag, dtype=np.float64)
    if bag.size == 0:
        raise ValueError("bag must be nonempty")
    if not np.any(bag == x_last):
        raise ValueError("x_last must be an element of bag")
    return float(np.count_nonzero(bag <= x_last)) / bag.size
