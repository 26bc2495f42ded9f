"""Mass-Volume and Excess-Mass curves of a scoring function.

These criteria use the "lower is more abnormal" convention, so anomaly scores
are min-max normalised and flipped into normality scores ``v = 1 - s_norm``
before any level set is taken.

Two estimates of the Lebesgue measure ``Leb(v >= u)`` are available:

* ``univariate`` (default): the length ``v_max - u`` of the score interval;
* ``monte-carlo``: the fraction of uniform draws from the data bounding box
  whose normality is at least ``u``, times the box volume. The caller passes
  the normality of those draws, see :func:`uniform_normality`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_ALPHAS = np.linspace(0.9, 0.999, 1000)
EM_LEVEL = 0.9
N_T = 1000


@dataclass
class LevelSetResult:
    area: float
    curve: np.ndarray
    grid: np.ndarray
    degenerate: bool = False
    mode: str = "univariate"


def normality(scores, ref=None):
    """Map anomaly scores to ``[0, 1]`` normality using ``ref``'s range."""
    scores = np.asarray(scores, dtype=float)
    ref = scores if ref is None else np.asarray(ref, dtype=float)
    lo, span = ref.min(), np.ptp(ref)
    if span == 0:
        return np.zeros_like(scores)
    return 1.0 - (scores - lo) / span


class _Leb:
    def __init__(self, v, uniform_v=None, volume=1.0):
        self.vmax = v.max()
        self.uniform = None if uniform_v is None else np.sort(np.asarray(uniform_v, dtype=float))
        self.volume = volume

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.uniform is None:
            return np.abs(self.vmax - u)
        above = len(self.uniform) - np.searchsorted(self.uniform, u, side="left")
        return above / len(self.uniform) * self.volume


def mass_volume(scores, alphas=None, uniform_scores=None, volume=1.0) -> LevelSetResult:
    """Area under the empirical MV curve (lower is better).

    For each mass level ``alpha`` the threshold ``u`` is the largest
    normality value whose upper level set holds at least ``alpha`` of the
    samples; the curve value is ``Leb(v >= u)``. The area is the plain sum
    of curve values over the ``alphas`` grid.
    """
    alphas = DEFAULT_ALPHAS if alphas is None else np.asarray(alphas, dtype=float)
    scores = np.asarray(scores, dtype=float)
    mode = "univariate" if uniform_scores is None else "monte-carlo"
    if np.ptp(scores) == 0:
        return LevelSetResult(0.0, np.zeros_like(alphas), alphas, degenerate=True, mode=mode)
    v = normality(scores)
    uv = None if uniform_scores is None else normality(uniform_scores, ref=scores)
    leb = _Leb(v, uv, volume)
    n = len(v)
    desc = np.sort(v)[::-1]
    # smallest count c with c / n >= alpha; u is the c-th largest normality
    counts = np.clip(np.ceil(alphas * n - 1e-9).astype(int), 1, n)
    u = desc[counts - 1]
    curve = leb(u)
    return LevelSetResult(float(curve.sum()), curve, alphas, mode=mode)


def _em_lines(v, leb):
    """Mass and volume of every candidate upper level set ``{v >= u}``."""
    u = np.unique(v)
    sorted_v = np.sort(v)
    mass = (len(v) - np.searchsorted(sorted_v, u, side="left")) / len(v)
    return mass, leb(u)


def em_curve(scores, t, uniform_scores=None, volume=1.0):
    """``EM(t) = max_u P_n(v >= u) - t Leb(v >= u)`` for each ``t``."""
    scores = np.asarray(scores, dtype=float)
    v = normality(scores)
    uv = None if uniform_scores is None else normality(uniform_scores, ref=scores)
    mass, vol = _em_lines(v, _Leb(v, uv, volume))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return (mass[None, :] - t[:, None] * vol[None, :]).max(axis=1)


def em_inverse(scores, level=EM_LEVEL, uniform_scores=None, volume=1.0):
    """``inf {t >= 0 : EM(t) <= level}``, or ``(t, False)`` when it does not exist.

    EM is the upper envelope of lines ``mass - t * vol``; only lines with
    ``mass > level`` can keep it above the level, each until
    ``(mass - level) / vol``. Lines with zero volume never cross, in which
    case the largest finite crossing is returned with ``False``.
    """
    scores = np.asarray(scores, dtype=float)
    v = normality(scores)
    uv = None if uniform_scores is None else normality(uniform_scores, ref=scores)
    mass, vol = _em_lines(v, _Leb(v, uv, volume))
    high = mass > level
    finite = high & (vol > 0)
    crossings = (mass[finite] - level) / vol[finite]
    bounded = not np.any(high & (vol <= 0))
    t_star = float(crossings.max()) if crossings.size else 0.0
    return t_star, bounded


def excess_mass(scores, t_grid=None, uniform_scores=None, volume=1.0, n_t=N_T) -> LevelSetResult:
    """Mean of the EM curve over ``[0, EM^-1(0.9)]`` (higher is better)."""
    scores = np.asarray(scores, dtype=float)
    mode = "univariate" if uniform_scores is None else "monte-carlo"
    if np.ptp(scores) == 0:
        grid = np.zeros(1) if t_grid is None else np.asarray(t_grid, dtype=float)
        return LevelSetResult(0.0, np.zeros_like(grid), grid, degenerate=True, mode=mode)
    if t_grid is None:
        t_star, bounded = em_inverse(scores, uniform_scores=uniform_scores, volume=volume)
        t_grid = np.linspace(0.0, t_star, n_t)
    else:
        bounded = True
    curve = em_curve(scores, t_grid, uniform_scores, volume)
    return LevelSetResult(float(curve.mean()), curve, np.asarray(t_grid), degenerate=not bounded, mode=mode)


def uniform_draws(X, n_generated=10_000, seed=0):
    """Uniform points in the bounding box of ``X`` and the box volume."""
    X = np.asarray(X, dtype=float)
    lo, hi = X.min(axis=0), X.max(axis=0)
    rng = np.random.default_rng(seed)
    U = rng.uniform(lo, hi, size=(n_generated, X.shape[1]))
    return U, float(np.prod(hi - lo))


def uniform_normality(detector, X, n_generated=10_000, seed=0):
    """Fit ``detector`` on ``X`` and score uniform draws from its bounding box.

    Returns ``(data_scores, uniform_scores, volume)`` ready for the
    Monte-Carlo mode of :func:`mass_volume` and :func:`excess_mass`.
    """
    detector.fit(X)
    U, volume = uniform_draws(X, n_generated, seed)
    return np.asarray(detector.decision_scores_, float), detector.score_samples(U), volume
