"""Seeded synthetic datasets with planted outliers.

All generators draw from :func:`numpy.random.default_rng` (PCG64) seeded
with the ``seed`` of the :class:`NoiseSpec`, so identical arguments give
identical series. Planted index sets are 0-based.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .data import RawSeries

__all__ = [
    "NoiseSpec",
    "gen_profile",
    "gen_spiral",
    "gen_helix",
    "spiral_points",
    "helix_points",
    "two_bump_profile",
]


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian perturbation with optional rejection box.

    Attributes
    ----------
    variance : float
        Variance of each coordinate of the perturbation.
    box : tuple of (lower, upper) pairs, optional
        Perturbed points are redrawn until they fall inside this box.
    seed : int
    """

    variance: float
    box: Optional[Tuple[Tuple[float, float], ...]] = None
    seed: int = 0

    def __post_init__(self):
        if not self.variance >= 0:
            raise ValueError("variance must be nonnegative")
        if self.box is not None:
            for lo, hi in self.box:
                if not lo < hi:
                    raise ValueError(f"empty box side ({lo}, {hi})")

    def rng(self):
        return np.random.default_rng(self.seed)


def _perturb_into_box(rng, clean, sigma, box, max_tries=100_000):
    if box is None:
        return clean + sigma * rng.standard_normal(clean.shape)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    for _ in range(max_tries):
        cand = clean + sigma * rng.standard_normal(clean.shape)
        if np.all(cand >= lo) and np.all(cand <= hi):
            return cand
    # The box contains the clean point, so this is only hit for absurd variances.
    return np.clip(clean, lo, hi)


def spiral_points(t, a=1.0, b=4.0):
    """Arithmetic spiral ``((a + b t) cos t, (a + b t) sin t)``."""
    t = np.asarray(t, dtype=float)
    rad = a + b * t
    return np.column_stack([rad * np.cos(t), rad * np.sin(t)])


def helix_points(t, radius=2.0, pitch=1.0):
    """Circular helix ``(R cos 2πt, R sin 2πt, c t)``."""
    t = np.asarray(t, dtype=float)
    return np.column_stack(
        [radius * np.cos(2 * np.pi * t), radius * np.sin(2 * np.pi * t), pitch * t]
    )


def gen_spiral(n_points=200, a=1.0, b=4.0, noise=None):
    """Spiral samples with every other point perturbed.

    Parameters are sampled at ``t_i = i h`` for ``i = 0..N-1`` with
    ``h = 4π / (N - 1)``. Points with even 0-based index (the first, third,
    ... sample) are perturbed by Gaussian noise, redrawn until the point
    falls in ``noise.box`` (default ``[-60, 60]^2``).

    Returns
    -------
    RawSeries, ndarray of planted indices
    """
    if n_points < 2:
        raise ValueError("need at least two points")
    noise = noise or NoiseSpec(30.0, ((-60.0, 60.0), (-60.0, 60.0)))
    box = noise.box if noise.box is not None else ((-60.0, 60.0), (-60.0, 60.0))
    rng = noise.rng()
    h = 4 * np.pi / (n_points - 1)
    t = np.arange(n_points) * h
    clean = spiral_points(t, a, b)
    y = clean.copy()
    planted = np.arange(0, n_points, 2)
    sigma = np.sqrt(noise.variance)
    if sigma > 0:
        for i in planted:
            y[i] = _perturb_into_box(rng, clean[i], sigma, box)
    return RawSeries(t, y), planted


def gen_helix(n_points=400, radius=2.0, pitch=1.0, n_corrupted=100, noise=None):
    """Helix samples with a random subset of points perturbed.

    Parameters run over ``t_i = -4 + i h`` with ``h = 8 / (N - 1)``. A
    uniformly random ``n_corrupted``-subset of indices is perturbed by
    Gaussian noise, redrawn until inside ``noise.box`` (default
    ``[-4, 4]^3``).

    Returns
    -------
    RawSeries, ndarray of planted indices (sorted)
    """
    if not 0 <= n_corrupted <= n_points:
        raise ValueError("n_corrupted must be between 0 and n_points")
    if n_points < 2:
        raise ValueError("need at least two points")
    cube = ((-4.0, 4.0),) * 3
    noise = noise or NoiseSpec(20.0, cube)
    box = noise.box if noise.box is not None else cube
    rng = noise.rng()
    h = 8.0 / (n_points - 1)
    t = -4.0 + np.arange(n_points) * h
    clean = helix_points(t, radius, pitch)
    planted = np.sort(rng.choice(n_points, size=n_corrupted, replace=False))
    y = clean.copy()
    sigma = np.sqrt(noise.variance)
    if sigma > 0:
        for i in planted:
            y[i] = _perturb_into_box(rng, clean[i], sigma, box)
    return RawSeries(t, y), planted


def two_bump_profile(x):
    """Default smooth profile on [0, 1]: a sum of two Gaussian bumps."""
    x = np.asarray(x, dtype=float)
    return (
        0.25
        + 0.4 * np.exp(-((x - 0.3) / 0.18) ** 2)
        + 0.3 * np.exp(-((x - 0.75) / 0.15) ** 2)
    )


def gen_profile(
    n_inliers=32,
    n_outliers=12,
    profile=None,
    jitter=0.01,
    displacement=0.2,
    seed=0,
    margin=0.05,
):
    """Points on a smooth profile plus points that deviate from it.

    Inliers sit on the grid ``linspace(0, 1, n_inliers)`` with Gaussian
    jitter of standard deviation ``jitter`` added to the profile value.
    The interval ``[margin, 1 - margin]`` is cut into ``n_outliers`` equal
    strata and one outlier parameter is drawn uniformly from the middle 60%
    of each stratum, so outliers are spread along the curve, never pile
    up, and stay off the clamped end points. Each outlier is moved off the
    profile by ``displacement`` (a number, or a ``(low, high)`` range drawn
    uniformly), upwards or downwards at random among the directions that
    keep it inside [0, 1]. Points are returned sorted by parameter.

    Parameters
    ----------
    n_inliers, n_outliers : int
    profile : callable, optional
        Vectorized map [0, 1] -> [0, 1]; default :func:`two_bump_profile`.
    jitter : float
    displacement : float or (float, float)
        Must be at least five jitter standard deviations.
    seed : int
    margin : float
        Outlier-free band at each end of [0, 1].

    Returns
    -------
    RawSeries, ndarray of planted indices (sorted)
    """
    if n_inliers < 0 or n_outliers < 0 or n_inliers + n_outliers < 1:
        raise ValueError("counts must be nonnegative with at least one point")
    lo_disp, hi_disp = (
        (float(displacement),) * 2 if np.ndim(displacement) == 0 else map(float, displacement)
    )
    if not 5 * jitter <= lo_disp <= hi_disp:
        raise ValueError("outlier displacement must be at least 5 jitter standard deviations")
    if not 0 <= margin < 0.5:
        raise ValueError("margin must lie in [0, 0.5)")
    profile = profile or two_bump_profile
    rng = np.random.default_rng(seed)

    t_in = np.linspace(0.0, 1.0, n_inliers) if n_inliers > 1 else np.full(n_inliers, 0.5)
    width = (1.0 - 2.0 * margin) / max(n_outliers, 1)
    t_out = margin + (np.arange(n_outliers) + rng.uniform(0.2, 0.8, n_outliers)) * width
    t = np.concatenate([t_in, t_out])
    is_out = np.r_[np.zeros(n_inliers, dtype=bool), np.ones(n_outliers, dtype=bool)]
    order = np.argsort(t, kind="stable")
    t, is_out = t[order], is_out[order]

    base = np.asarray(profile(t), dtype=float)
    y = base + jitter * rng.standard_normal(t.size)
    planted = np.flatnonzero(is_out)
    mag = rng.uniform(lo_disp, hi_disp, n_outliers)
    up = base[planted] + mag <= 1.0
    down = base[planted] - mag >= 0.0
    sign = np.where(up & down, rng.choice([-1.0, 1.0], n_outliers), np.where(up, 1.0, -1.0))
    y[planted] = base[planted] + sign * mag
    return RawSeries(t, y[:, None]), planted
