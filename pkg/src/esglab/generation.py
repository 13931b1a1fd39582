"""Scenario generation engines.

Pure sampling (iid Gaussian returns and exact GBM steps, optionally
antithetic), correlation through a PSD-tolerant triangular factor,
bootstrap of historical cross-sections, exact two-moment affine matching
and principal-component reduction. Every seeded routine is a pure function
of its arguments.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rng import make_rng
from .exceptions import ESGLabError, ValidationError
from .types import AssetModel, ScenarioSet
from .validation import check_correlation, check_finite, check_returns_matrix, frozen_array, psd_cholesky

MAX_RESAMPLE = 100


@dataclass(frozen=True)
class NoiseBlock:
    """Standard-normal draws indexed ``[path, period, asset]``."""

    eps: np.ndarray
    seed: Optional[int] = None

    def __post_init__(self):
        eps = np.asarray(self.eps, dtype=float)
        if eps.ndim != 3:
            raise ValidationError(f"noise must be 3-dimensional, got shape {eps.shape}")
        check_finite(eps, "noise")
        object.__setattr__(self, "eps", frozen_array(eps))


@dataclass(frozen=True)
class PcaBasis:
    """Leading eigenpairs of a covariance matrix.

    ``components`` has shape ``(k, n)`` with orthonormal rows; eigenvalues
    are sorted in descending order.
    """

    components: np.ndarray
    eigenvalues: np.ndarray
    mean: np.ndarray
    total_variance: float

    def __post_init__(self):
        for name in ("components", "eigenvalues", "mean"):
            object.__setattr__(self, name, frozen_array(np.asarray(getattr(self, name), dtype=float)))
        k, n = self.components.shape
        if self.eigenvalues.shape != (k,) or self.mean.shape != (n,):
            raise ValidationError("inconsistent PCA basis shapes")
        if np.any(np.diff(self.eigenvalues) > 0) or np.any(self.eigenvalues < 0):
            raise ValidationError("eigenvalues must be non-negative and sorted descending")

    @property
    def n_components(self):
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self):
        if self.total_variance <= 0:
            return 1.0
        return float(self.eigenvalues.sum() / self.total_variance)


def _standard_normals(rng, n_paths, n_periods, n_assets, antithetic):
    if not antithetic:
        return rng.standard_normal((n_paths, n_periods, n_assets))
    half = rng.standard_normal((n_paths // 2, n_periods, n_assets))
    eps = np.empty((n_paths, n_periods, n_assets))
    eps[0::2] = half
    eps[1::2] = -half
    return eps


def draw_noise(n_paths, n_periods, n_assets, seed=None, antithetic=False):
    """Draw iid standard normals; antithetic blocks pair each path with its negation.

    With ``antithetic=True`` the paths at 0-based indices ``2m`` and ``2m + 1``
    are exact negatives of each other, so ``n_paths`` must be even.
    """
    if n_paths < 1 or n_periods < 1 or n_assets < 1:
        raise ValidationError("noise dimensions must be positive")
    if antithetic and n_paths % 2:
        raise ValidationError(f"antithetic sampling needs an even number of paths, got {n_paths}")
    rng = make_rng(seed)
    return NoiseBlock(_standard_normals(rng, n_paths, n_periods, n_assets, antithetic), seed=seed)


def correlation_factor(corr):
    """Lower-triangular factor of a (validated, possibly singular) correlation matrix."""
    try:
        return psd_cholesky(check_correlation(corr))
    except ValidationError as exc:
        raise ValidationError(f"correlation factorization failed: {exc}") from exc


def correlate(noise, corr):
    """Impose ``corr`` on each asset vector of ``noise`` via ``L @ eps``."""
    eps = noise.eps if isinstance(noise, NoiseBlock) else np.asarray(noise, dtype=float)
    L = correlation_factor(corr)
    if eps.shape[-1] != L.shape[0]:
        raise ValidationError(f"noise has {eps.shape[-1]} assets, corr has {L.shape[0]}")
    out = eps @ L.T
    if isinstance(noise, NoiseBlock):
        return NoiseBlock(out, seed=noise.seed)
    return out


def _linear_returns(model, n_paths, n_periods, dt, rng, antithetic=False):
    """Gaussian one-period returns; slots at or below -100% are redrawn.

    Returns the return array and the number of redrawn (path, period) slots.
    """
    L = correlation_factor(model.corr)
    drift = model.mu * dt
    vol = model.sigma * np.sqrt(dt)
    z = _standard_normals(rng, n_paths, n_periods, model.n_assets, antithetic) @ L.T
    r = drift + vol * z

    return _redraw_below_floor(r, lambda: drift + vol * (L @ rng.standard_normal(model.n_assets)))


def _redraw_below_floor(r, draw_slot):
    """Redraw every (path, period) slot with a return at or below -100% in place.

    Returns ``(r, number of redraws)``.
    """
    resampled = 0
    for s, t in np.argwhere(np.any(r <= -1.0, axis=2)):
        for _ in range(MAX_RESAMPLE):
            resampled += 1
            r[s, t] = draw_slot()
            if np.all(r[s, t] > -1.0):
                break
        else:
            raise ESGLabError(
                f"slot (path {s}, period {t}) still at or below -100% after {MAX_RESAMPLE} "
                "redraws; check the model parameters"
            )
    return r, resampled


def generate_linear(model, n_paths, n_periods=1, dt=1.0, seed=None, antithetic=False):
    """Linear-structure scenarios ``mu*dt + sigma*sqrt(dt)*eps`` with correlated ``eps``.

    Parameters
    ----------
    model : AssetModel
    n_paths, n_periods : int
    dt : float
        Period length in years.
    seed : int or None
    antithetic : bool
        Pair each draw with its negation (``n_paths`` must be even).

    Returns
    -------
    ScenarioSet
        ``resampled`` counts redrawn slots (non-zero only for extreme
        parameters; redraws break antithetic pairing for those slots).
    """
    if not isinstance(model, AssetModel):
        raise ValidationError("model must be an AssetModel")
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if n_paths < 1 or n_periods < 1:
        raise ValidationError("n_paths and n_periods must be positive")
    if antithetic and n_paths % 2:
        raise ValidationError(f"antithetic sampling needs an even number of paths, got {n_paths}")
    rng = make_rng(seed)
    r, resampled = _linear_returns(model, n_paths, n_periods, dt, rng, antithetic)
    return ScenarioSet(
        r, dt=dt, method="gaussian", seed=seed, names=model.names, resampled=resampled
    )


def gbm_paths(s0, model, n_paths, n_periods, dt=1.0, seed=None, antithetic=False):
    """Correlated geometric Brownian motion levels, shape ``(n_paths, n_periods + 1, n)``.

    Uses the exact log-normal step
    ``S[t+1] = S[t] * exp((mu - sigma**2 / 2) * dt + sigma * sqrt(dt) * eps)``.
    Column 0 holds ``s0``.
    """
    s0 = np.broadcast_to(np.asarray(s0, dtype=float), (model.n_assets,))
    if np.any(~(s0 > 0)):
        raise ValidationError("initial levels must be positive")
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if n_paths < 1 or n_periods < 1:
        raise ValidationError("n_paths and n_periods must be positive")
    if antithetic and n_paths % 2:
        raise ValidationError(f"antithetic sampling needs an even number of paths, got {n_paths}")
    rng = make_rng(seed)
    L = correlation_factor(model.corr)
    z = _standard_normals(rng, n_paths, n_periods, model.n_assets, antithetic) @ L.T
    log_step = (model.mu - 0.5 * model.sigma ** 2) * dt + model.sigma * np.sqrt(dt) * z
    levels = np.empty((n_paths, n_periods + 1, model.n_assets))
    levels[:, 0] = s0
    levels[:, 1:] = s0 * np.exp(np.cumsum(log_step, axis=1))
    return levels


def gbm_scenarios(model, n_paths, n_periods=1, dt=1.0, seed=None, antithetic=False):
    """GBM period returns packed as a :class:`ScenarioSet`."""
    levels = gbm_paths(np.ones(model.n_assets), model, n_paths, n_periods, dt, seed, antithetic)
    r = np.expm1(np.diff(np.log(levels), axis=1))
    return ScenarioSet(r, dt=dt, method="gbm", seed=seed, names=model.names)


def bootstrap(hist_returns, n_paths, n_periods=1, seed=None, names=None, dt=1.0):
    """Resample whole historical rows with replacement.

    Every (path, period) slot receives all assets' returns from one
    uniformly drawn historical date, which keeps the observed cross-asset
    dependence.
    """
    H = np.asarray(hist_returns, dtype=float)
    if H.size == 0:
        raise ValidationError("bootstrap needs a non-empty history")
    H = check_returns_matrix(H, "hist_returns")
    if n_paths < 1 or n_periods < 1:
        raise ValidationError("n_paths and n_periods must be positive")
    rng = make_rng(seed)
    idx = rng.integers(0, H.shape[0], size=(n_paths, n_periods))
    return ScenarioSet(H[idx], dt=dt, method="bootstrap", seed=seed, names=names)


def compound_periods(scenarios, k):
    """Merge each run of ``k`` consecutive periods into one compounded period."""
    if k < 1 or scenarios.n_periods % k:
        raise ValidationError(f"cannot group {scenarios.n_periods} periods by {k}")
    if k == 1:
        return scenarios
    N, T, n = scenarios.returns.shape
    grouped = scenarios.returns.reshape(N, T // k, k, n)
    r = np.prod(1.0 + grouped, axis=2) - 1.0
    return ScenarioSet(
        r,
        dt=scenarios.dt * k,
        method=scenarios.method,
        seed=scenarios.seed,
        names=scenarios.names,
        resampled=scenarios.resampled,
    )


def _matrix_root(cov):
    """Any ``B`` with ``B @ B.T == cov`` for PSD ``cov`` (Cholesky when definite)."""
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        return psd_cholesky(cov)


def moment_match_affine(scenarios, target_mean, target_cov):
    """Shift and rotate each period so its sample mean and covariance hit the targets.

    Per period the map is ``Y = (X - m) @ A.T + target_mean`` with
    ``A = B @ inv(L)``, where ``L`` is the Cholesky factor of the sample
    covariance (ddof=1) and ``B @ B.T == target_cov``.

    Parameters
    ----------
    scenarios : ScenarioSet
    target_mean : array-like of shape (n,) or (T, n)
    target_cov : array-like of shape (n, n) or (T, n, n)

    Raises
    ------
    ValidationError
        If a period's sample covariance is singular, a target is invalid, or
        the matched returns would fall to -100% or below.
    """
    X = scenarios.returns
    N, T, n = X.shape
    means = np.broadcast_to(np.asarray(target_mean, dtype=float), (T, n))
    covs = np.broadcast_to(np.asarray(target_cov, dtype=float), (T, n, n))
    check_finite(means, "target_mean")
    check_finite(covs, "target_cov")
    if N <= n:
        raise ValidationError(
            f"sample covariance is singular with {N} paths for {n} assets"
        )

    out = np.empty_like(X)
    for t in range(T):
        x = X[:, t, :]
        m = x.mean(axis=0)
        c = x - m
        S = c.T @ c / (N - 1)
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise ValidationError(f"sample covariance of period {t} is singular") from None
        target = covs[t]
        if np.abs(target - target.T).max() > 1e-12 * max(1.0, np.abs(target).max()):
            raise ValidationError("target covariance must be symmetric")
        B = _matrix_root(0.5 * (target + target.T))
        A = np.linalg.solve(L.T, B.T).T
        out[:, t, :] = c @ A.T + means[t]
    if np.any(out <= -1.0):
        raise ValidationError(
            "moment matching maps some returns to -100% or below; the targets are too wide for these scenarios"
        )
    return scenarios.replace_returns(out)


def pca_fit(cov, mean, k):
    """Top-``k`` eigenpairs of ``cov`` with a deterministic sign convention.

    Each component is oriented so its largest-magnitude entry is positive.
    """
    cov = np.asarray(cov, dtype=float)
    mean = np.asarray(mean, dtype=float).reshape(-1)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] != mean.shape[0]:
        raise ValidationError("cov must be square and match the length of mean")
    n = cov.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"number of components must lie in [1, {n}], got {k}")
    check_finite(cov, "cov")
    if np.abs(cov - cov.T).max() > 1e-10 * max(1.0, np.abs(cov).max()):
        raise ValidationError("cov must be symmetric")
    eigval, eigvec = np.linalg.eigh(0.5 * (cov + cov.T))
    order = np.argsort(eigval, kind="stable")[::-1]
    eigval, eigvec = eigval[order], eigvec[:, order]
    if eigval[-1] < -1e-12 * max(1.0, eigval[0]):
        raise ValidationError(f"cov is not positive semidefinite (eigenvalue {eigval[-1]:.3e})")
    eigval = np.clip(eigval, 0.0, None)
    comps = eigvec[:, :k].T.copy()
    lead = np.argmax(np.abs(comps), axis=1)
    comps *= np.where(comps[np.arange(k), lead] < 0, -1.0, 1.0)[:, None]
    return PcaBasis(comps, eigval[:k], mean, float(np.trace(cov)))


def pca_reconstruct(basis):
    """Rank-``k`` covariance ``V_k diag(lambda_k) V_k^T`` implied by the basis."""
    return (basis.components.T * basis.eigenvalues) @ basis.components


def pca_generate(basis, n_paths, n_periods=1, dt=1.0, seed=None, names=None):
    """Simulate independent Gaussian factors and map them back to asset returns."""
    if not dt > 0:
        raise ValidationError("dt must be positive")
    if n_paths < 1 or n_periods < 1:
        raise ValidationError("n_paths and n_periods must be positive")
    rng = make_rng(seed)
    scale = np.sqrt(basis.eigenvalues) * np.sqrt(dt)
    drift = basis.mean * dt
    z = rng.standard_normal((n_paths, n_periods, basis.n_components))
    r = drift + (z * scale) @ basis.components
    r, resampled = _redraw_below_floor(
        r, lambda: drift + (rng.standard_normal(basis.n_components) * scale) @ basis.components
    )
    return ScenarioSet(r, dt=dt, method="pca", seed=seed, names=names, resampled=resampled)
