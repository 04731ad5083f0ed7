"""Best linear unbiased estimation of the population mean beta_0.

Within group i every unit is observed at the same exact design
x_i1, ..., x_im (repeats allowed). The group estimate is least squares on
the whitened mean response; the groups are pooled with the weights
n_i ((F~_i^T F~_i)^{-1} + D_i)^{-1}.
"""

import csv
from dataclasses import dataclass

import numpy as np

from . import matrixkit as mk
from .errors import NotPositiveDefinite, RankDeficient, ShapeMismatch


@dataclass(frozen=True)
class GroupObservations:
    settings: np.ndarray  # (m,) grid indices, one per observation
    responses: np.ndarray  # (n, m, l)

    def __post_init__(self):
        settings = np.asarray(self.settings, dtype=int).ravel()
        y = np.asarray(self.responses, dtype=float)
        if y.ndim == 2:
            y = y[:, :, None]
        if y.ndim != 3 or y.shape[1] != settings.size:
            raise ShapeMismatch(
                f"responses must be (units, {settings.size}, l), got {np.shape(self.responses)}"
            )
        object.__setattr__(self, "settings", settings)
        object.__setattr__(self, "responses", y)

    @property
    def n(self):
        return self.responses.shape[0]

    @property
    def m(self):
        return self.settings.size


@dataclass(frozen=True)
class EstimateResult:
    beta0_hat: np.ndarray
    per_group_estimates: list
    covariance: np.ndarray
    weight_factors: list


def settings_from_counts(counts):
    """Expand replication counts into the per-observation list of grid indices."""
    counts = np.asarray(counts, dtype=int)
    return np.repeat(np.arange(counts.size), counts)


def _design_matrix(group, settings):
    if np.any(settings < 0) or np.any(settings >= group.k):
        raise ShapeMismatch("setting index outside the group's grid")
    # rows of F~ are Sigma^{-1/2} G(x_h), stacked over observations
    return group.gtilde[settings].reshape(-1, group.p)


def _group_factors(group, settings):
    ft = _design_matrix(group, settings)
    info = ft.T @ ft
    try:
        inv = mk.spd_inverse(info)
    except NotPositiveDefinite:
        raise RankDeficient("design matrix is not of full column rank") from None
    hat = inv @ ft.T  # maps whitened mean response to the group estimate
    pool = group.n * mk.spd_inverse(inv + group.dmat)
    return hat, pool


def _whiten(group, y):
    if group.l == 1 and group.sigma[0, 0] == 1.0:
        return y
    s = mk.spd_sqrt_inverse(group.sigma)
    return np.einsum("ab,...b->...a", s, y)


def blue_covariance(groups, settings):
    """[sum_i n_i ((F~_i^T F~_i)^{-1} + D_i)^{-1}]^{-1} for exact designs."""
    pools = [_group_factors(g, np.asarray(s, dtype=int))[1] for g, s in zip(groups, settings)]
    return mk.spd_inverse(sum(pools))


def blue(groups, data):
    """Pooled BLUE of beta_0 from one ObservationSet (a list of GroupObservations)."""
    if len(groups) != len(data):
        raise ShapeMismatch(f"{len(data)} data groups for {len(groups)} model groups")
    estimates, pools = [], []
    for g, obs in zip(groups, data):
        if obs.n != g.n:
            raise ShapeMismatch(f"group has {obs.n} units, model expects {g.n}")
        if obs.responses.shape[2] != g.l:
            raise ShapeMismatch(f"responses have dimension {obs.responses.shape[2]}, expected {g.l}")
        hat, pool = _group_factors(g, obs.settings)
        ybar = _whiten(g, obs.responses.mean(axis=0)).ravel()
        estimates.append(hat @ ybar)
        pools.append(pool)
    cov = mk.spd_inverse(sum(pools))
    factors = [cov @ p for p in pools]
    beta = sum(f @ b for f, b in zip(factors, estimates))
    return EstimateResult(beta, estimates, cov, factors)


def _sqrt_psd(a):
    vals, vecs = np.linalg.eigh(a)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def simulate_estimates(groups, counts, replications, seed=0, beta0=None, chunk=10_000):
    """Draw BLUE estimates from the model with Gaussian effects and errors.

    Replication r always uses the stream of chunk r // chunk, so results do
    not depend on how chunks are scheduled.
    """
    if replications < 1:
        raise ValueError("replications must be positive")
    p = groups[0].p
    beta0 = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float)
    settings = [settings_from_counts(c) for c in counts]
    factors = [_group_factors(g, s) for g, s in zip(groups, settings)]
    cov = mk.spd_inverse(sum(pool for _, pool in factors))
    weights = [cov @ pool for _, pool in factors]
    # the estimator is linear in the whitened mean response
    maps = [w @ hat for w, (hat, _) in zip(weights, factors)]
    effect_roots = [_sqrt_psd(g.dmat) for g in groups]
    noise_roots = [mk.cholesky(g.sigma) for g in groups]
    n_chunks = -(-replications // chunk)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty((replications, p))
    for c, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        lo = c * chunk
        size = min(chunk, replications - lo)
        est = np.zeros((size, p))
        for g, s, lin, eroot, nroot in zip(groups, settings, maps, effect_roots, noise_roots):
            beta = beta0 + rng.standard_normal((size, g.n, p)) @ eroot.T
            eps = rng.standard_normal((size, g.n, s.size, g.l)) @ nroot.T
            y = np.einsum("map,rnp->rnma", g.gmats[s], beta) + eps
            ybar = _whiten(g, y.mean(axis=1)).reshape(size, -1)
            est += ybar @ lin.T
        out[lo:lo + size] = est
    return out


def simulate_covariance(groups, counts, replications, seed=0, beta0=None):
    """Empirical covariance of the BLUE over Monte Carlo replications."""
    est = simulate_estimates(groups, counts, replications, seed, beta0)
    return np.cov(est, rowvar=False, ddof=1)


@dataclass(frozen=True)
class CovarianceCheck:
    replications: int
    empirical: np.ndarray
    analytic: np.ndarray
    standard_errors: np.ndarray
    z_scores: np.ndarray
    mean: np.ndarray
    mean_z_scores: np.ndarray

    def as_dict(self):
        return {
            "replications": self.replications,
            "empirical_covariance": self.empirical.tolist(),
            "analytic_covariance": self.analytic.tolist(),
            "standard_errors": self.standard_errors.tolist(),
            "z_scores": self.z_scores.tolist(),
            "mean": self.mean.tolist(),
            "mean_z_scores": self.mean_z_scores.tolist(),
        }


def covariance_check(groups, counts, replications, seed=0, beta0=None):
    """Compare the simulated BLUE covariance with the analytic one, entrywise."""
    p = groups[0].p
    beta0 = np.zeros(p) if beta0 is None else np.asarray(beta0, dtype=float)
    est = simulate_estimates(groups, counts, replications, seed, beta0)
    analytic = blue_covariance(groups, [settings_from_counts(c) for c in counts])
    centred = est - est.mean(axis=0)
    prods = centred[:, :, None] * centred[:, None, :]
    empirical = prods.sum(axis=0) / (replications - 1)
    se = prods.std(axis=0, ddof=1) / np.sqrt(replications)
    mean = est.mean(axis=0)
    mean_se = est.std(axis=0, ddof=1) / np.sqrt(replications)
    return CovarianceCheck(
        replications,
        empirical,
        analytic,
        se,
        (empirical - analytic) / se,
        mean,
        (mean - beta0) / mean_se,
    )


def read_group_csv(path, group=None):
    """Load one group's observations.

    Columns: unit_id, obs_index, setting_index, then one column per response
    component. Every unit must use the same settings in the same order.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if [h.strip() for h in header[:3]] != ["unit_id", "obs_index", "setting_index"]:
            raise ShapeMismatch("CSV must start with unit_id, obs_index, setting_index")
        units = {}
        for row in reader:
            if not row:
                continue
            uid, obs, setting = row[0].strip(), int(row[1]), int(row[2])
            units.setdefault(uid, {})[obs] = (setting, [float(v) for v in row[3:]])
    if not units:
        raise ShapeMismatch(f"no observations in {path}")
    ordered = [units[u] for u in sorted(units)]
    obs_ids = sorted(ordered[0])
    settings = [ordered[0][o][0] for o in obs_ids]
    responses = []
    for unit in ordered:
        if sorted(unit) != obs_ids or [unit[o][0] for o in obs_ids] != settings:
            raise ShapeMismatch("all units in a group must share the same exact design")
        responses.append([unit[o][1] for o in obs_ids])
    obs = GroupObservations(np.array(settings), np.array(responses))
    if group is not None and obs.responses.shape[2] != group.l:
        raise ShapeMismatch("response dimension does not match the group's G")
    return obs


def write_group_csv(path, obs):
    l = obs.responses.shape[2]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["unit_id", "obs_index", "setting_index"] + [f"y{a}" for a in range(l)])
        for j in range(obs.n):
            for h, s in enumerate(obs.settings):
                w.writerow([j, h, int(s)] + [repr(float(v)) for v in obs.responses[j, h]])
