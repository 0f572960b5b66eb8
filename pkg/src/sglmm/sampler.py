"""MCMC engines for all four parameterizations and three families.

Kernel schedule, following the update order beta, effects, tau, sigma2:

* Bernoulli / Poisson: multivariate random-walk Metropolis for beta with
  proposal covariance s^2 * V-hat (V-hat from the classical GLM fit);
  random effects by a single-block spherical normal random walk (rhz,
  sparse) or a univariate normal random-walk sweep over sites
  (traditional); Gibbs for tau.
* Gaussian: Gibbs updates for every parameter.

Proposal step sizes adapt by Robbins-Monro scaling toward acceptance 0.234
(multivariate blocks) or 0.44 (univariate sweeps) during burn-in, then
freeze, so post-burn-in kernels satisfy detailed balance.

Randomness comes from a PCG64 generator seeded through
``numpy.random.SeedSequence``; parallel chains split the stream by spawning
child sequences, so a (seed, config) pair reproduces draws bit for bit.

The univariate site sweep visits every vertex once per iteration, grouped
into mutually non-adjacent color classes so each class updates as one
vectorized step. Sites in a class share no edge and the likelihood is
conditionally independent across sites given eta, so the grouped sweep
draws from exactly the same kernel as a site-by-site loop. Prior work per
sweep is proportional to the edge count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .glm import GlmFit, irls_fit
from .graph import Graph
from .model import (
    Dataset,
    ModelSpec,
    ParameterState,
    car_exponent_dimension,
    car_precision,
    effect_dimension,
    linear_predictor,
    log_likelihood,
    log_prior,
)

__all__ = [
    "McmcConfig",
    "Chain",
    "fit",
    "fit_chains",
    "update_beta_rw",
    "update_delta_rw",
    "update_w_univariate",
    "gibbs_tau",
    "gibbs_gaussian",
    "color_classes",
]

_STEP_FLOOR = 1e-8
_STEP_CAP = 1e8


@dataclass(frozen=True)
class McmcConfig:
    """Chain length, seed, and adaptation settings.

    ``initial_step_sizes`` maps block names ('beta', 'effects', 'site') to
    starting proposal scales; missing blocks get defaults.
    """

    iterations: int = 100_000
    burn_in: int = 10_000
    thin: int = 10
    seed: int = 0
    adapt: bool = True
    target_accept_multivariate: float = 0.234
    target_accept_univariate: float = 0.44
    initial_step_sizes: dict | None = None

    def __post_init__(self):
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.burn_in >= self.iterations:
            raise ValueError("burn_in must be smaller than iterations")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")

    def step_size(self, block: str) -> float:
        defaults = {"beta": 1.0, "effects": 0.1, "site": 1.0}
        sizes = self.initial_step_sizes or {}
        return max(float(sizes.get(block, defaults[block])), _STEP_FLOOR)


@dataclass
class Chain:
    """Thinned post-burn-in MCMC output.

    ``draws`` holds arrays keyed by 'beta' (d, p), 'effects' (d, k), 'tau'
    (d,), and 'sigma2' (d,) where applicable; ``names`` are the flat column
    labels in CSV order.
    """

    draws: dict
    names: tuple
    acceptance_rates: dict
    wall_time: float
    seed: int
    spec: ModelSpec
    config: McmcConfig
    step_sizes: dict = field(default_factory=dict)

    @property
    def n_draws(self) -> int:
        return next(iter(self.draws.values())).shape[0]

    def matrix(self) -> np.ndarray:
        """Draws as one (n_draws, n_params) array in ``names`` order."""
        cols = []
        for key in ("beta", "effects", "tau", "sigma2"):
            if key in self.draws:
                arr = self.draws[key]
                cols.append(arr[:, None] if arr.ndim == 1 else arr)
        return np.hstack(cols)

    def column(self, name: str) -> np.ndarray:
        idx = self.names.index(name)
        return self.matrix()[:, idx]


def color_classes(g: Graph) -> list:
    """Greedy coloring: classes of mutually non-adjacent vertex indices."""
    adj = [[] for _ in range(g.n)]
    for i, j in g.edges:
        adj[i].append(j)
        adj[j].append(i)
    return _greedy_classes(adj, g.n)


def _greedy_classes(adj: list, n: int) -> list:
    color = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        used = {color[u] for u in adj[v] if color[u] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return [np.nonzero(color == c)[0] for c in range(int(color.max()) + 1)]


# ---------------------------------------------------------------------------
# Update kernels. Pure given the generator; log-target callables let them
# run against any posterior, and the chain driver reuses the same logic.
# ---------------------------------------------------------------------------


def update_beta_rw(rng, beta, log_target, chol_cov, step):
    """Multivariate normal random-walk Metropolis step.

    Proposal: beta + step * chol_cov @ z with z standard normal. Returns
    (value, log-target at value, acceptance probability, accepted flag).
    """
    prop = beta + step * (chol_cov @ rng.standard_normal(beta.shape[0]))
    current = log_target(beta)
    proposed = log_target(prop)
    log_alpha = proposed - current
    alpha = 1.0 if log_alpha >= 0 else float(np.exp(log_alpha))
    if np.log(rng.random()) < log_alpha:
        return prop, proposed, alpha, True
    return beta, current, alpha, False


def update_delta_rw(rng, delta, log_target, step):
    """Single-block spherical normal random-walk step for reduced effects."""
    prop = delta + step * rng.standard_normal(delta.shape[0])
    current = log_target(delta)
    proposed = log_target(prop)
    log_alpha = proposed - current
    alpha = 1.0 if log_alpha >= 0 else float(np.exp(log_alpha))
    if np.log(rng.random()) < log_alpha:
        return prop, proposed, alpha, True
    return delta, current, alpha, False


def car_local_log_ratio(tau, degrees, neighbor_sums, w_old, w_new):
    """CAR prior log ratio for changing single sites from w_old to w_new.

    Equals -tau/2 * [d_i (w'^2 - w^2) - 2 (w' - w) S_i] with S_i the sum of
    neighboring effects; matches the full quadratic-form difference because
    only site i changes. A degree-0 site has a flat conditional.
    """
    return -0.5 * tau * (
        degrees * (w_new**2 - w_old**2) - 2.0 * (w_new - w_old) * neighbor_sums
    )


def update_w_univariate(rng, W, eta, step, *, tau, adjacency, degrees, classes, site_loglik):
    """One sweep of univariate normal random-walk updates over all sites.

    Each site's Metropolis ratio uses only its own likelihood term plus the
    CAR prior's local conditional. ``site_loglik(idx, eta_i)`` returns the
    per-site log-likelihood contributions; W and eta are modified in place.
    Returns the mean acceptance probability over the sweep.
    """
    alpha_sum = 0.0
    n = W.shape[0]
    for idx in classes:
        neighbor_sum = adjacency @ W
        w_old = W[idx]
        w_new = w_old + step * rng.standard_normal(idx.shape[0])
        log_alpha = car_local_log_ratio(tau, degrees[idx], neighbor_sum[idx], w_old, w_new)
        eta_old = eta[idx]
        eta_new = eta_old + (w_new - w_old)
        log_alpha = log_alpha + site_loglik(idx, eta_new) - site_loglik(idx, eta_old)
        alpha_sum += float(np.sum(np.exp(np.minimum(log_alpha, 0.0))))
        accept = np.log(rng.random(idx.shape[0])) < log_alpha
        sel = idx[accept]
        W[sel] = w_new[accept]
        eta[sel] = eta_new[accept]
    return alpha_sum / n


def gibbs_tau(rng, priors, k, quad):
    """Conjugate draw tau ~ Gamma(tau_shape + k/2, rate 1/tau_scale + quad/2).

    With k = 0 the conditional is the Gamma(shape, scale) prior itself.
    """
    shape = priors.tau_shape + 0.5 * k
    rate = 1.0 / priors.tau_scale + 0.5 * quad
    return float(rng.gamma(shape, 1.0 / rate))


def _chol_mvn_from_precision(rng, precision, rhs):
    """Draw from N(P^{-1} rhs, P^{-1}) given the precision P."""
    try:
        cho = scipy.linalg.cho_factor(precision, lower=True)
    except scipy.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(precision))
        raise RuntimeError(
            f"conditional precision is not positive definite "
            f"(condition number ~ {cond:.3e})"
        ) from exc
    mean = scipy.linalg.cho_solve(cho, rhs)
    z = rng.standard_normal(precision.shape[0])
    return mean + scipy.linalg.solve_triangular(cho[0].T, z, lower=False)


def gibbs_gaussian(
    rng,
    state,
    *,
    X,
    B,
    BtB,
    Q_B_dense,
    Q_B,
    car_k,
    Z,
    priors,
    prior_only=False,
    fixed_tau=None,
    fixed_sigma2=None,
):
    """Full-conditional Gibbs sweep for the Gaussian family.

    Updates beta, effects, tau, sigma2 in order. ``B`` is the effect
    loading (None means the identity, i.e. the traditional model), ``BtB``
    its Gram matrix, ``Q_B``/``Q_B_dense`` the (reduced) CAR precision, and
    ``car_k`` the tau exponent dimension. ``prior_only`` drops the data
    terms from every conditional.
    """
    Xa = X.X
    n, p = Xa.shape
    pr = priors
    k = state.effects.shape[0]

    def expanded_effects():
        return state.effects if B is None else B @ state.effects

    # beta | rest
    if prior_only:
        state.beta = np.sqrt(pr.beta_variance) * rng.standard_normal(p)
    else:
        prec = Xa.T @ Xa / state.sigma2 + np.eye(p) / pr.beta_variance
        rhs = Xa.T @ (Z - (expanded_effects() if k else 0.0)) / state.sigma2
        state.beta = _chol_mvn_from_precision(rng, prec, rhs)

    # effects | rest
    if k:
        if prior_only:
            state.effects = _chol_mvn_from_precision(
                rng, state.tau * Q_B_dense, np.zeros(k)
            )
        else:
            prec = BtB / state.sigma2 + state.tau * Q_B_dense
            resid = Z - Xa @ state.beta
            rhs = (resid if B is None else B.T @ resid) / state.sigma2
            state.effects = _chol_mvn_from_precision(rng, prec, rhs)

    # tau | rest
    if car_k and fixed_tau is None:
        quad = float(state.effects @ (Q_B @ state.effects))
        state.tau = gibbs_tau(rng, pr, car_k, quad)

    # sigma2 | rest
    if fixed_sigma2 is None:
        if prior_only:
            # gamma draws with shape << 1 underflow to 0; floor before inverting
            draw = max(rng.gamma(pr.sigma2_shape, 1.0 / pr.sigma2_rate), np.finfo(float).tiny)
            state.sigma2 = float(1.0 / draw)
        else:
            resid = Z - Xa @ state.beta - (expanded_effects() if k else 0.0)
            shape = pr.sigma2_shape + 0.5 * n
            rate = pr.sigma2_rate + 0.5 * float(resid @ resid)
            state.sigma2 = float(1.0 / rng.gamma(shape, 1.0 / rate))
    return state


# ---------------------------------------------------------------------------
# Chain driver
# ---------------------------------------------------------------------------


def _proposal_chol(glm_fit: GlmFit | None, p: int) -> np.ndarray:
    if glm_fit is None or not np.all(np.isfinite(glm_fit.cov_hat)):
        return np.eye(p)
    try:
        return np.linalg.cholesky(glm_fit.cov_hat)
    except np.linalg.LinAlgError:
        return np.diag(np.sqrt(np.clip(np.diag(glm_fit.cov_hat), 1e-12, None)))


def _site_loglik_fn(spec: ModelSpec, Z: np.ndarray, prior_only: bool):
    if prior_only:
        return lambda idx, eta: 0.0
    if spec.family == "bernoulli":
        return lambda idx, eta: Z[idx] * eta - np.logaddexp(0.0, eta)
    if spec.family == "poisson":
        return lambda idx, eta: Z[idx] * eta - np.exp(eta)
    raise ValueError("univariate site sweep applies to bernoulli/poisson kernels")


def _loglik_core(spec: ModelSpec, Z: np.ndarray, prior_only: bool):
    """Log likelihood as a function of eta, up to data-only constants."""
    if prior_only:
        return lambda eta: 0.0
    if spec.family == "bernoulli":
        return lambda eta: float(np.sum(Z * eta - np.logaddexp(0.0, eta)))
    if spec.family == "poisson":

        def poisson_core(eta):
            # overflow to -inf just means certain rejection of the proposal
            with np.errstate(over="ignore"):
                return float(np.sum(Z * eta - np.exp(eta)))

        return poisson_core
    raise ValueError("gaussian likelihood is handled by Gibbs updates")


def fit(
    spec: ModelSpec,
    data: Dataset,
    basis,
    cfg: McmcConfig,
    *,
    glm_fit: GlmFit | None = None,
    prior_only: bool = False,
    fixed_tau: float | None = None,
    fixed_sigma2: float | None = None,
    stream=None,
) -> Chain:
    """Run one MCMC chain and return the thinned post-burn-in draws.

    ``basis`` is a PrecisionMatrix (traditional), RhzBasis (rhz), MoranBasis
    (sparse), or None (nonspatial). ``prior_only`` disables the likelihood,
    targeting the joint prior. ``fixed_tau`` / ``fixed_sigma2`` hold those
    parameters at the given values. ``stream`` is an optional callable
    receiving (names, row) for every retained draw, used to write chains to
    disk incrementally and bound memory.
    """
    t_start = time.perf_counter()
    X, Z = data.X, data.Z
    n, p = X.n, X.p
    k = effect_dimension(spec, X, basis)
    car_k = car_exponent_dimension(spec, X, basis)
    Q_B = car_precision(spec, basis)
    gaussian = spec.family == "gaussian"
    traditional = spec.parameterization == "traditional"
    spatial = spec.parameterization != "nonspatial"

    if prior_only and gaussian and traditional:
        raise ValueError(
            "prior-only mode is unavailable for the traditional Gaussian model: "
            "the intrinsic CAR prior is improper, so the effects have no "
            "proper prior conditional to Gibbs-sample"
        )

    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))

    # effect loading and cached matrix products
    B = None
    if spec.parameterization == "rhz":
        B = basis.L
    elif spec.parameterization == "sparse":
        if basis.q != spec.q:
            raise ValueError(f"basis has q={basis.q}, model wants q={spec.q}")
        B = basis.M
    BtB = Q_B_dense = None
    if k and gaussian:
        BtB = B.T @ B if B is not None else np.eye(n)
        Q_B_dense = Q_B.toarray() if sp.issparse(Q_B) else np.asarray(Q_B, dtype=float)

    degrees = classes = A_csr = None
    if traditional and not gaussian:
        degrees = np.asarray(Q_B.diagonal(), dtype=float)
        A_csr = sp.csr_array(sp.diags_array(degrees) - Q_B)
        adj_lists = [[] for _ in range(n)]
        coo = A_csr.tocoo()
        for i, j in zip(coo.coords[0], coo.coords[1]):
            if i < j:
                adj_lists[i].append(int(j))
                adj_lists[j].append(int(i))
        classes = _greedy_classes(adj_lists, n)

    # initialization: IRLS estimate for MH families, zero otherwise
    if gaussian or prior_only:
        beta = np.zeros(p)
        chol_prop = np.eye(p)
    else:
        if glm_fit is None:
            glm_fit = irls_fit(spec.family, X, Z, offset=spec.offset)
        beta = glm_fit.beta_hat.copy()
        chol_prop = _proposal_chol(glm_fit, p)
    state = ParameterState(
        beta=beta,
        effects=np.zeros(k),
        tau=fixed_tau if fixed_tau is not None else 1.0,
        sigma2=(
            fixed_sigma2
            if fixed_sigma2 is not None
            else (max(float(np.var(Z)), 1e-8) if gaussian else None)
        ),
    )

    eta = linear_predictor(spec, X, basis, state)
    if not prior_only:
        ll0 = log_likelihood(spec, Z, eta, state.sigma2)
        lp0 = log_prior(spec, X, basis, state)
        if not np.isfinite(ll0 + lp0):
            raise ValueError(
                f"non-finite log posterior at initialization "
                f"(log-likelihood {ll0}, log-prior {lp0}); check data scaling"
            )

    loglik = None if gaussian else _loglik_core(spec, Z, prior_only)
    site_ll = (
        _site_loglik_fn(spec, Z, prior_only)
        if (traditional and not gaussian)
        else None
    )

    quad = float(state.effects @ (Q_B @ state.effects)) if k else 0.0
    pr = spec.priors
    beta_var = pr.beta_variance

    steps = {name: cfg.step_size(name) for name in ("beta", "effects", "site")}
    log_steps = {name: float(np.log(s)) for name, s in steps.items()}
    target_mv = cfg.target_accept_multivariate
    target_uv = cfg.target_accept_univariate

    n_keep = (cfg.iterations - cfg.burn_in) // cfg.thin
    draws = {"beta": np.empty((n_keep, p))}
    if k:
        draws["effects"] = np.empty((n_keep, k))
    if spatial:
        draws["tau"] = np.empty(n_keep)
    if gaussian:
        draws["sigma2"] = np.empty(n_keep)
    names = tuple(
        [f"beta.{nm}" for nm in X.names]
        + [f"effect.{i}" for i in range(k)]
        + (["tau"] if spatial else [])
        + (["sigma2"] if gaussian else [])
    )

    accepted = {"beta": 0.0, "effects": 0.0}
    proposed = {"beta": 0, "effects": 0}

    kept = 0
    for t in range(1, cfg.iterations + 1):
        adapting = cfg.adapt and t <= cfg.burn_in
        gamma = t**-0.6 if adapting else 0.0

        if gaussian:
            state = gibbs_gaussian(
                rng,
                state,
                X=X,
                B=B,
                BtB=BtB,
                Q_B_dense=Q_B_dense,
                Q_B=Q_B,
                car_k=car_k,
                Z=Z,
                priors=pr,
                prior_only=prior_only,
                fixed_tau=fixed_tau,
                fixed_sigma2=fixed_sigma2,
            )
        else:
            # beta block
            prop = state.beta + steps["beta"] * (chol_prop @ rng.standard_normal(p))
            eta_prop = eta + X.X @ (prop - state.beta)
            log_alpha = (
                loglik(eta_prop)
                - loglik(eta)
                - 0.5 * (float(prop @ prop) - float(state.beta @ state.beta)) / beta_var
            )
            alpha = 1.0 if log_alpha >= 0 else float(np.exp(log_alpha))
            if np.log(rng.random()) < log_alpha:
                state.beta = prop
                eta = eta_prop
                if t > cfg.burn_in:
                    accepted["beta"] += 1
            if t > cfg.burn_in:
                proposed["beta"] += 1
            if adapting:
                log_steps["beta"] += gamma * (alpha - target_mv)
                steps["beta"] = float(np.clip(np.exp(log_steps["beta"]), _STEP_FLOOR, _STEP_CAP))

            # effects block
            if k and traditional:
                mean_alpha = update_w_univariate(
                    rng,
                    state.effects,
                    eta,
                    steps["site"],
                    tau=state.tau,
                    adjacency=A_csr,
                    degrees=degrees,
                    classes=classes,
                    site_loglik=site_ll,
                )
                if t > cfg.burn_in:
                    accepted["effects"] += mean_alpha
                    proposed["effects"] += 1
                if adapting:
                    log_steps["site"] += gamma * (mean_alpha - target_uv)
                    steps["site"] = float(np.clip(np.exp(log_steps["site"]), _STEP_FLOOR, _STEP_CAP))
                quad = float(state.effects @ (Q_B @ state.effects))
            elif k:
                d_prop = state.effects + steps["effects"] * rng.standard_normal(k)
                eta_prop = eta + B @ (d_prop - state.effects)
                quad_prop = float(d_prop @ (Q_B @ d_prop))
                log_alpha = (
                    loglik(eta_prop) - loglik(eta) - 0.5 * state.tau * (quad_prop - quad)
                )
                alpha = 1.0 if log_alpha >= 0 else float(np.exp(log_alpha))
                if np.log(rng.random()) < log_alpha:
                    state.effects = d_prop
                    eta = eta_prop
                    quad = quad_prop
                    if t > cfg.burn_in:
                        accepted["effects"] += 1
                if t > cfg.burn_in:
                    proposed["effects"] += 1
                if adapting:
                    log_steps["effects"] += gamma * (alpha - target_mv)
                    steps["effects"] = float(
                        np.clip(np.exp(log_steps["effects"]), _STEP_FLOOR, _STEP_CAP)
                    )

            # tau block
            if spatial and fixed_tau is None:
                state.tau = gibbs_tau(rng, pr, car_k, quad)

        if t > cfg.burn_in and (t - cfg.burn_in) % cfg.thin == 0:
            draws["beta"][kept] = state.beta
            if k:
                draws["effects"][kept] = state.effects
            if spatial:
                draws["tau"][kept] = state.tau
            if gaussian:
                draws["sigma2"][kept] = state.sigma2
            if stream is not None:
                row = np.concatenate(
                    [
                        state.beta,
                        state.effects,
                        [state.tau] if spatial else [],
                        [state.sigma2] if gaussian else [],
                    ]
                )
                stream(names, row)
            kept += 1

    rates = {}
    if not gaussian:
        if proposed["beta"]:
            rates["beta"] = accepted["beta"] / proposed["beta"]
        if k and proposed["effects"]:
            rates["effects"] = accepted["effects"] / proposed["effects"]

    return Chain(
        draws=draws,
        names=names,
        acceptance_rates=rates,
        wall_time=time.perf_counter() - t_start,
        seed=cfg.seed,
        spec=spec,
        config=cfg,
        step_sizes=dict(steps),
    )


def fit_chains(spec, data, basis, cfg, n_chains, **kwargs):
    """Run independent chains concurrently with split RNG streams.

    Chain i is seeded from SeedSequence(cfg.seed).spawn(n_chains)[i], so the
    set of chains is reproducible and the streams never overlap. Immutable
    inputs are shared; each chain owns its own state.
    """
    from concurrent.futures import ThreadPoolExecutor

    children = np.random.SeedSequence(cfg.seed).spawn(n_chains)
    seeds = [int(child.generate_state(1)[0]) for child in children]
    configs = [replace(cfg, seed=s) for s in seeds]
    streams = kwargs.pop("streams", None)

    def run(i):
        extra = dict(kwargs)
        if streams is not None:
            extra["stream"] = streams[i]
        return fit(spec, data, basis, configs[i], **extra)

    with ThreadPoolExecutor(max_workers=n_chains) as pool:
        return list(pool.map(run, range(n_chains)))
