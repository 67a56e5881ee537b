"""Synchronous symbol-rate multibeam channel ``y[i] = H x[i] + z[i]``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class ChannelMatrix:
    """Coupling matrix; ``h[k, i]`` is the gain of user i's signal in beam k.

    ``noise_mixer`` is the beamformer V when the matrix came from array
    geometry; sensor noise is then mixed into the beams as ``V n``.
    """

    h: np.ndarray
    noise_mixer: np.ndarray | None = None

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.complex128)
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
            raise ParameterError(f"channel matrix must be square and non-empty, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ParameterError("channel matrix has non-finite entries")
        object.__setattr__(self, "h", h)
        if self.noise_mixer is not None:
            v = np.asarray(self.noise_mixer, dtype=np.complex128)
            if v.ndim != 2 or v.shape[0] != h.shape[0]:
                raise ParameterError(f"noise mixer shape {v.shape} incompatible with K={h.shape[0]}")
            object.__setattr__(self, "noise_mixer", v)

    @property
    def n_users(self) -> int:
        return self.h.shape[0]


@dataclass(frozen=True)
class Geometry:
    steering: np.ndarray  # D, (L, K)
    beamformer: np.ndarray  # V, (K, L)
    amplitudes: np.ndarray  # complex a_k e^{j phi_k}, (K,)


def uniform_cci_matrix(n_users: int, zeta: float, amplitudes=None, phases=None) -> ChannelMatrix:
    """``h[k, i] = (1 if k == i else zeta) * a_i * exp(j phi_i)``."""
    if n_users < 1:
        raise ParameterError("n_users must be >= 1")
    if not 0 <= zeta < 1:
        raise ParameterError(f"zeta must lie in [0, 1), got {zeta}")
    a = np.ones(n_users) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    phi = np.zeros(n_users) if phases is None else np.asarray(phases, dtype=float)
    if a.shape != (n_users,) or phi.shape != (n_users,):
        raise ParameterError("amplitudes and phases need one entry per user")
    if np.any(a <= 0):
        raise ParameterError("amplitudes must be positive")
    w = np.full((n_users, n_users), zeta, dtype=float)
    np.fill_diagonal(w, 1.0)
    return ChannelMatrix(w * (a * np.exp(1j * phi))[None, :])


def geometry_channel(g: Geometry) -> ChannelMatrix:
    """``H = V D diag(A)``, keeping V to colour the sensor noise."""
    d = np.asarray(g.steering, dtype=np.complex128)
    v = np.asarray(g.beamformer, dtype=np.complex128)
    a = np.asarray(g.amplitudes, dtype=np.complex128).ravel()
    if d.ndim != 2 or v.ndim != 2:
        raise ParameterError("steering and beamformer must be matrices")
    L, K = d.shape
    if v.shape != (K, L) or a.shape != (K,):
        raise ParameterError(f"inconsistent geometry: D {d.shape}, V {v.shape}, A {a.shape}")
    return ChannelMatrix(v @ d * a[None, :], noise_mixer=v)


def complex_noise(rng: np.random.Generator, shape, n0: float) -> np.ndarray:
    """Circular complex Gaussian samples with ``E|z|^2 = n0``."""
    z = rng.standard_normal((2,) + tuple(shape))
    return np.sqrt(n0 / 2) * (z[0] + 1j * z[1])


def transmit(H: ChannelMatrix, X, n0: float, rng: np.random.Generator) -> np.ndarray:
    if n0 < 0:
        raise ParameterError(f"noise power must be >= 0, got {n0}")
    X = np.asarray(X, dtype=np.complex128)
    if X.ndim != 2 or X.shape[0] != H.n_users:
        raise ParameterError(f"symbol matrix shape {X.shape} does not match K={H.n_users}")
    Y = H.h @ X
    if n0 == 0:
        return Y
    if H.noise_mixer is None:
        return Y + complex_noise(rng, X.shape, n0)
    n = complex_noise(rng, (H.noise_mixer.shape[1], X.shape[1]), n0)
    return Y + H.noise_mixer @ n


def ebno_to_n0(ebno_db: float, code_rate: float = 0.5, bits_per_symbol: int = 2,
               symbol_energy: float = 2.0) -> float:
    """Noise power for a target Eb/N0; ``+inf`` dB maps to 0 (noiseless)."""
    if not 0 < code_rate <= 1:
        raise ParameterError(f"code_rate must lie in (0, 1], got {code_rate}")
    if np.isnan(ebno_db):
        raise ParameterError("Eb/N0 is NaN")
    eb = symbol_energy / (bits_per_symbol * code_rate)
    if ebno_db == np.inf:
        return 0.0
    return eb / 10 ** (ebno_db / 10)
