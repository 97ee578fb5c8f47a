"""Piecewise-affine regression between realified DP-RTF features and directions.

A mixture of local affine models in the style of Gaussian locally-linear
mapping: component ``k`` places the direction ``y ~ N(c_k, G_k)`` and
explains the feature as ``x = A_k y + b_k + e`` with diagonal noise
``e ~ N(0, S_k)``. Its posterior mean ``E[y | x, k]`` is affine in ``x``, so
the forward prediction is a responsibility-weighted sum of affine maps.
Conditioning on the observed coordinates only is exact and cheap, which is
how masked feature entries are disregarded.

Training is hard-assignment alternating optimisation: assign each point to
the component with the highest joint likelihood, refit the components, stop
when the total squared direction error of the forward prediction settles.
"""

from __future__ import annotations

import json
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.special import logsumexp

from .estimator import DpRtfFeature

__all__ = [
    "TrainingSet",
    "MappingModel",
    "Prediction",
    "train",
    "predict",
    "predict_batch",
    "predict_nn",
]

log = logging.getLogger(__name__)

MODEL_VERSION = 1
_ARRAYS = ("weights", "y_centers", "y_covs", "loadings", "x_offsets", "x_noise")


@dataclass
class TrainingSet:
    """Complex features ``(n, M*K)`` with masks, and direction labels ``(n, O)``."""

    features: np.ndarray
    masks: np.ndarray
    directions: np.ndarray
    bins: tuple = ()
    pairs: tuple = ()
    method: str = "dp-rtf"

    def __post_init__(self):
        self.features = np.atleast_2d(np.asarray(self.features, complex))
        self.masks = np.atleast_2d(np.asarray(self.masks, bool))
        self.directions = np.atleast_2d(np.asarray(self.directions, float))
        if self.features.shape != self.masks.shape:
            raise ValueError("features and masks differ in shape")
        if len(self.features) != len(self.directions):
            raise ValueError("features and directions differ in count")

    def __len__(self):
        return len(self.features)

    def realified(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.empty((len(self), 2 * self.features.shape[1]))
        x[:, 0::2] = self.features.real
        x[:, 1::2] = self.features.imag
        m = np.repeat(self.masks, 2, axis=1)
        return np.where(m, x, 0.0), m

    @classmethod
    def from_features(cls, features, directions) -> TrainingSet:
        features = list(features)
        f0 = features[0]
        return cls(np.array([f.values for f in features]), np.array([f.mask for f in features]),
                   directions, tuple(f0.bins), tuple(f0.pairs), f0.method)

    def save(self, path) -> None:
        np.savez(path, features=self.features, masks=self.masks,
                 directions=self.directions, bins=np.asarray(self.bins, int),
                 pairs=np.asarray(self.pairs, int).reshape(-1, 2),
                 method=np.array(self.method))

    @classmethod
    def load(cls, path) -> TrainingSet:
        z = np.load(path)
        return cls(z["features"], z["masks"], z["directions"], tuple(z["bins"].tolist()),
                   tuple(map(tuple, z["pairs"].tolist())), str(z["method"]))


@dataclass
class MappingModel:
    """Component parameters of the local affine mixture.

    ``weights`` (C,), ``y_centers`` (C, O), ``y_covs`` (C, O, O),
    ``loadings`` (C, D, O), ``x_offsets`` (C, D) and diagonal feature noise
    ``x_noise`` (C, D).
    """

    weights: np.ndarray
    y_centers: np.ndarray
    y_covs: np.ndarray
    loadings: np.ndarray
    x_offsets: np.ndarray
    x_noise: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def n_components(self) -> int:
        return len(self.weights)

    @property
    def feature_dim(self) -> int:
        return self.loadings.shape[1]

    @property
    def direction_dim(self) -> int:
        return self.loadings.shape[2]

    @property
    def gate_centers(self) -> np.ndarray:
        """Feature-space centre ``A_k c_k + b_k`` of each component."""
        return np.einsum("kdo,ko->kd", self.loadings, self.y_centers) + self.x_offsets

    @property
    def gate_spreads(self) -> np.ndarray:
        """Diagonal of the feature-space covariance ``S_k + A_k G_k A_k^T``."""
        ag = np.einsum("kdo,kop->kdp", self.loadings, self.y_covs)
        return self.x_noise + np.einsum("kdp,kdp->kd", ag, self.loadings)

    def forward_maps(self) -> tuple[np.ndarray, np.ndarray]:
        """Full-observation affine maps ``E[y | x, k] = M_k x + m_k``: (C, O, D), (C, O)."""
        mats, offs = [], []
        for k in range(self.n_components):
            a, s = self.loadings[k], self.x_noise[k]
            gi = np.linalg.inv(self.y_covs[k])
            post = np.linalg.inv(gi + a.T @ (a / s[:, None]))
            mats.append(post @ (a / s[:, None]).T)
            offs.append(post @ (gi @ self.y_centers[k] - a.T @ (self.x_offsets[k] / s)))
        return np.array(mats), np.array(offs)

    def to_json(self) -> str:
        doc = {"format": "dprtf-mapping-model", "version": MODEL_VERSION, "meta": self.meta}
        for name in _ARRAYS:
            arr = getattr(self, name)
            doc[name] = {"shape": list(arr.shape), "data": [float(v) for v in arr.ravel()]}
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> MappingModel:
        doc = json.loads(text)
        if doc.get("format") != "dprtf-mapping-model":
            raise ValueError("not a mapping model document")
        if doc.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')}")
        arrs = {name: np.array(doc[name]["data"], float).reshape(doc[name]["shape"])
                for name in _ARRAYS}
        return cls(**arrs, meta=doc.get("meta", {}))


@dataclass
class Prediction:
    direction: np.ndarray | None
    responsibilities: np.ndarray | None
    used_dims: int
    index: int | None = None

    @property
    def ok(self) -> bool:
        return self.direction is not None


def _canonical_order(x, y):
    """Sort rows by label then feature so training is order independent."""
    keys = [x[:, j] for j in range(x.shape[1] - 1, -1, -1)]
    keys += [y[:, j] for j in range(y.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


def _fit_component(x, y, ridge, y_floor):
    """Affine model of ``x`` given ``y`` for one cluster; ``ridge`` loads the noise diagonal."""
    n, o = y.shape
    c = y.mean(axis=0)
    yc = y - c
    g = yc.T @ yc / n + y_floor * np.eye(o)
    design = np.column_stack([yc, np.ones(n)])
    coef, *_ = np.linalg.lstsq(design, x, rcond=None)
    a = coef[:o].T
    b = coef[o] - a @ c
    resid = x - design @ coef
    s = np.mean(resid ** 2, axis=0) + ridge
    return c, g, a, b, s


def _posterior(model: MappingModel, x, mask=None):
    """Per-component log marginal likelihood of ``x`` (n, C) and posterior means (n, C, O).

    With ``mask`` (n, D) only the observed coordinates enter.
    """
    n = x.shape[0]
    kc, o = model.n_components, model.direction_dim
    ll = np.empty((n, kc))
    means = np.empty((n, kc, o))
    obs = np.ones_like(x, bool) if mask is None else mask
    for k in range(kc):
        a, b, s = model.loadings[k], model.x_offsets[k], model.x_noise[k]
        g, c = model.y_covs[k], model.y_centers[k]
        gi = np.linalg.inv(g)
        w = obs / s[None, :]                                  # (n, D) precision, 0 if unobserved
        r = np.where(obs, x - b[None, :], 0.0)                # (n, D)
        at_w_r = (r * w) @ a                                  # (n, O)
        at_w_a = np.einsum("nd,do,dp->nop", w, a, a)          # (n, O, O)
        prec = gi[None] + at_w_a
        post = np.linalg.inv(prec)
        means[:, k] = np.einsum("nop,np->no", post, (gi @ c)[None] + at_w_r)
        # marginal N(x_o; A_o c + b_o, S_o + A_o G A_o^T) via the Woodbury identity
        rc = r - np.where(obs, (a @ c)[None, :], 0.0)
        u = (rc * w) @ a
        quad = np.sum(rc ** 2 * w, axis=1) - np.einsum("no,nop,np->n", u, post, u)
        logdet = (np.sum(np.where(obs, np.log(s)[None, :], 0.0), axis=1)
                  + np.linalg.slogdet(g)[1] + np.linalg.slogdet(prec)[1])
        ll[:, k] = -0.5 * (quad + logdet + obs.sum(axis=1) * math.log(2 * math.pi))
    return ll, means


def train(dataset: TrainingSet, n_components: int = 25, seed: int = 0,
          ridge_scale: float = 1e-3, max_iter: int = 100, tol: float = 1e-8) -> MappingModel:
    """Fit the mixture by hard-assignment alternating optimisation.

    Clusters are initialised by seeded k-means++ on the (standardised)
    direction labels after sorting the data into a canonical order.
    """
    x, m = dataset.realified()
    y = dataset.directions
    n, d = x.shape
    o = y.shape[1]
    if not m.all():
        raise ValueError("training features must be complete (full masks)")
    if n_components < 1:
        raise ValueError("n_components must be positive")
    if n_components >= n or n < n_components * d / 10:
        raise ValueError(f"{n} training points are too few for {n_components} components "
                         f"in {d} dimensions (need at least {math.ceil(n_components * d / 10)})")
    order = _canonical_order(x, y)
    x, y = x[order], y[order]
    ridge = ridge_scale * float(np.mean(x.var(axis=0)))
    y_floor = 1e-6 * float(np.mean(y.var(axis=0))) + 1e-12

    ys = (y - y.mean(axis=0)) / np.maximum(y.std(axis=0), 1e-12)
    _, labels = kmeans2(ys, n_components, minit="++", seed=seed)

    prev = math.inf
    model = None
    for it in range(max_iter):
        comps, weights = [], []
        for k in range(labels.max() + 1):
            idx = np.flatnonzero(labels == k)
            if idx.size < o + 1:
                if idx.size:
                    warnings.warn(f"pruning component with {idx.size} members", RuntimeWarning)
                continue
            comps.append(_fit_component(x[idx], y[idx], ridge, y_floor))
            weights.append(idx.size / n)
        if not comps:
            raise ValueError("all components degenerate")
        cand = MappingModel(np.array(weights) / sum(weights),
                            *(np.array([c[i] for c in comps]) for i in range(5)),
                            meta={"n_train": n, "ridge": ridge, "seed": seed})
        ll, means = _posterior(cand, x)
        logw = np.log(cand.weights)[None]
        resp = np.exp(ll + logw - logsumexp(ll + logw, axis=1, keepdims=True))
        err = float(np.sum((y - np.einsum("nk,nko->no", resp, means)) ** 2))
        model = cand
        if math.isfinite(prev) and abs(prev - err) <= tol * max(prev, 1e-300):
            break
        prev = err
        # joint likelihood: p(x | y, k) p(y | k) for the hard assignment
        joint = logw.copy().repeat(n, axis=0)
        for k in range(cand.n_components):
            a, b, s = cand.loadings[k], cand.x_offsets[k], cand.x_noise[k]
            r = x - y @ a.T - b
            dy = y - cand.y_centers[k]
            gi = np.linalg.inv(cand.y_covs[k])
            joint[:, k] += -0.5 * (np.sum(r ** 2 / s, axis=1) + np.sum(np.log(s))
                                   + np.einsum("no,op,np->n", dy, gi, dy)
                                   + np.linalg.slogdet(cand.y_covs[k])[1])
        labels = np.argmax(joint, axis=1)
    model.meta["iterations"] = it + 1
    model.meta["train_sse"] = err
    log.debug("training stopped after %d iterations", it + 1)
    return model


def _as_observation(feature, mask=None):
    if isinstance(feature, DpRtfFeature):
        return feature.realified()
    x = np.asarray(feature, float)
    m = np.ones(x.shape, bool) if mask is None else np.asarray(mask, bool)
    return np.where(m, x, 0.0), m


def predict(model: MappingModel, feature, mask=None) -> Prediction:
    """Direction for one feature; unobserved dimensions are disregarded."""
    x, m = _as_observation(feature, mask)
    if x.shape[-1] != model.feature_dim:
        raise ValueError(f"feature dimension {x.shape[-1]} does not match model "
                         f"({model.feature_dim})")
    used = int(m.sum())
    if used == 0:
        return Prediction(None, None, 0)
    ll, means = _posterior(model, x[None], m[None])
    ll = ll[0] + np.log(model.weights)
    resp = np.exp(ll - logsumexp(ll))
    return Prediction(resp @ means[0], resp, used)


def predict_batch(model: MappingModel, features, masks=None) -> list[Prediction]:
    if masks is None:
        return [predict(model, f) for f in features]
    return [predict(model, f, mk) for f, mk in zip(features, masks)]


def predict_nn(trainset: TrainingSet, feature, mask=None) -> Prediction:
    """Label of the masked-Euclidean nearest training feature (lowest index on ties)."""
    x, m = _as_observation(feature, mask)
    xt, _ = trainset.realified()
    used = int(m.sum())
    if used == 0:
        return Prediction(None, None, 0)
    dist = np.sum(np.where(m[None], (xt - x[None]) ** 2, 0.0), axis=1)
    idx = int(np.argmin(dist))
    return Prediction(trainset.directions[idx].copy(), None, used, idx)
