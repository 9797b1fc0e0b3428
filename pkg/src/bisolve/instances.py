"""Synthetic problem generators, CSV ingestion, and scaling.

Generators are pure given their parameters and seed, so identical calls
reproduce identical matrices.  Every generated instance serializes to a JSON
descriptor (kind, parameters, seed) from which :func:`build_instance`
rebuilds it exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from .problems import (
    BilevelInstance,
    CompositeObjective,
    CompositeOuter,
    ProxFriendlyFn,
    Reference,
    SmoothConvexFn,
    SubgradientOuter,
)
from .prox import elastic_net_fn, sq_l2_fn, sq_l2_smooth_fn, zero_fn, zero_smooth_fn
from .quasi_lipschitz import (
    QLConstants,
    ql_from_global_lipschitz,
    ql_from_lipschitz_map,
    ql_sum,
)

__all__ = [
    "DatasetMatrix",
    "min_max_scale",
    "append_ones",
    "load_csv",
    "least_squares_objective",
    "logistic_objective",
    "make_colinear_ls",
    "make_logistic",
    "elastic_net_outer",
    "elastic_net_ql",
    "make_analytic",
    "colinear_ls_bilevel",
    "logistic_bilevel",
    "build_instance",
    "instance_descriptor",
    "PRESETS",
]


@dataclass(frozen=True)
class DatasetMatrix:
    """Feature matrix with aligned targets and generation provenance.

    ``targets`` holds regression values or 0/1 labels.  ``has_intercept``
    marks a trailing all-ones column, which scaling leaves untouched.
    """

    features: np.ndarray
    targets: np.ndarray
    provenance: dict = field(default_factory=dict)
    has_intercept: bool = False

    def __post_init__(self):
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValueError(
                f"row mismatch: {self.features.shape[0]} feature rows, "
                f"{self.targets.shape[0]} targets"
            )

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_cols(self) -> int:
        return int(self.features.shape[1])


def min_max_scale(dm: DatasetMatrix) -> DatasetMatrix:
    """Map every feature column affinely onto [0, 1].

    Constant columns map to 0 (degenerate range convention).  A trailing
    intercept column is exempt.  Idempotent: scaling twice equals scaling
    once.
    """
    A = dm.features.astype(float).copy()
    ncols = A.shape[1] - 1 if dm.has_intercept else A.shape[1]
    block = A[:, :ncols]
    lo = block.min(axis=0)
    span = block.max(axis=0) - lo
    nonconst = span > 0
    block[:, nonconst] = (block[:, nonconst] - lo[nonconst]) / span[nonconst]
    block[:, ~nonconst] = 0.0
    A[:, :ncols] = block
    prov = dict(dm.provenance)
    prov["scaled"] = True
    return replace(dm, features=A, provenance=prov)


def append_ones(dm: DatasetMatrix) -> DatasetMatrix:
    """Append a trailing all-ones column (intercept), exempt from scaling."""
    if dm.has_intercept:
        raise ValueError("dataset already carries an intercept column")
    A = np.hstack([dm.features, np.ones((dm.n_rows, 1))])
    return replace(dm, features=A, has_intercept=True)


def load_csv(path: str, target_column: str) -> DatasetMatrix:
    """Read a numeric CSV (comma separated, period decimals, header required).

    Raises ``ValueError`` with the offending file line and column on ragged
    rows or non-numeric cells.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise ValueError(f"{path}: no column named {target_column !r} in header {header}")
        t_idx = header.index(target_column)
        feat_idx = [i for i in range(len(header)) if i != t_idx]

        rows, targets = [], []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: line {line_no} has {len(row)} fields, expected {len(header)}"
                )
            vals = []
            for i, cell in enumerate(row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ValueError(
                        f"{path}: line {line_no}, column {header[i]!r}: "
                        f"could not parse {cell!r} as a number"
                    ) from None
            rows.append([vals[i] for i in feat_idx])
            targets.append(vals[t_idx])

    if not rows:
        raise ValueError(f"{path}: no data rows")
    return DatasetMatrix(
        features=np.asarray(rows, dtype=float),
        targets=np.asarray(targets, dtype=float),
        provenance={"source": path, "target_column": target_column},
    )


# ---------------------------------------------------------------------------
# loss objectives
# ---------------------------------------------------------------------------

def least_squares_objective(A: np.ndarray, b: np.ndarray) -> CompositeObjective:
    """Mean squared residual ``(1/N) * (1/2) ||Ax - b||^2`` with a zero nonsmooth part."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n_rows = A.shape[0]
    L = float(np.linalg.eigvalsh(A.T @ A)[-1]) / n_rows

    def value(x):
        r = A @ x - b
        return 0.5 * float(r @ r) / n_rows

    def grad(x):
        return A.T @ (A @ x - b) / n_rows

    smooth = SmoothConvexFn(value, grad, lipschitz_grad=L, name="least_squares")
    return CompositeObjective(smooth, zero_fn())


def logistic_objective(A: np.ndarray, z: np.ndarray) -> CompositeObjective:
    """Mean logistic loss for 0/1 labels, with a zero nonsmooth part.

    The per-row loss is the negated log-likelihood of the sigmoid model, so
    the objective is convex and minimized; evaluation goes through
    ``logaddexp`` for stability.
    """
    A = np.asarray(A, dtype=float)
    z = np.asarray(z, dtype=float)
    n_rows = A.shape[0]
    L = float(np.linalg.eigvalsh(A.T @ A)[-1]) / (4.0 * n_rows)

    def value(x):
        m = A @ x
        # -log sigmoid(m) = logaddexp(0, -m);  -log(1 - sigmoid(m)) = logaddexp(0, m)
        return float(np.sum(z * np.logaddexp(0.0, -m) + (1.0 - z) * np.logaddexp(0.0, m))) / n_rows

    def grad(x):
        m = A @ x
        p = 1.0 / (1.0 + np.exp(-m))
        return A.T @ (p - z) / n_rows

    smooth = SmoothConvexFn(value, grad, lipschitz_grad=L, name="logistic")
    return CompositeObjective(smooth, zero_fn())


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def make_colinear_ls(
    n_rows: int,
    n_base_cols: int,
    n_colinear: int,
    combo_size: int,
    seed: int = 0,
) -> Tuple[DatasetMatrix, CompositeObjective]:
    """Least-squares instance whose Gram matrix is singular by construction.

    The base block is standard normal, min-max scaled; each extra column is a
    random combination ``A_sub @ v`` of ``combo_size`` scaled base columns
    with ``v`` uniform on [-1, 1]; a ones column is appended last.  With
    ``n_colinear >= 1`` the solution set of the least-squares problem is a
    nontrivial affine subspace, which is what makes the instance interesting
    for bi-level runs.
    """
    if n_rows < 2 or n_base_cols < 1:
        raise ValueError("need at least 2 rows and 1 base column")
    if n_colinear < 0:
        raise ValueError("n_colinear must be nonnegative")
    if combo_size < 1 or combo_size > n_base_cols:
        raise ValueError("combo_size must lie in [1, n_base_cols]")

    rng = np.random.default_rng(seed)
    base = rng.standard_normal((n_rows, n_base_cols))
    dm = DatasetMatrix(
        features=base,
        targets=np.zeros(n_rows),
        provenance={
            "kind": "colinear_ls",
            "n_rows": n_rows,
            "n_base_cols": n_base_cols,
            "n_colinear": n_colinear,
            "combo_size": combo_size,
            "seed": seed,
        },
    )
    dm = min_max_scale(dm)
    scaled = dm.features

    extras = []
    for _ in range(n_colinear):
        cols = rng.choice(n_base_cols, size=combo_size, replace=False)
        v = rng.uniform(-1.0, 1.0, size=combo_size)
        extras.append(scaled[:, cols] @ v)
    if extras:
        A = np.hstack([scaled, np.column_stack(extras)])
    else:
        A = scaled

    w_true = rng.standard_normal(n_base_cols)
    b = scaled @ w_true + 0.1 * rng.standard_normal(n_rows)

    dm = DatasetMatrix(features=A, targets=b, provenance=dm.provenance)
    dm = append_ones(dm)
    return dm, least_squares_objective(dm.features, dm.targets)


def make_logistic(
    n_rows: int,
    n_cols: int,
    sparsity: float,
    seed: int = 0,
) -> Tuple[DatasetMatrix, CompositeObjective]:
    """Sparse count-feature classification instance with planted labels.

    Features mimic term-count vectors: each entry is present with
    probability ``sparsity`` and then holds a count ``1 + Poisson(1)``.
    Labels are Bernoulli draws through the sigmoid of centered planted
    logits.
    """
    if n_rows < 2 or n_cols < 1:
        raise ValueError("need at least 2 rows and 1 column")
    if not 0.0 < sparsity <= 1.0:
        raise ValueError("sparsity must lie in (0, 1]")

    rng = np.random.default_rng(seed)
    mask = rng.random((n_rows, n_cols)) < sparsity
    counts = (1 + rng.poisson(1.0, size=(n_rows, n_cols))) * mask
    A = counts.astype(float)

    support = rng.choice(n_cols, size=max(1, n_cols // 10), replace=False)
    x_true = np.zeros(n_cols)
    x_true[support] = rng.standard_normal(support.size)
    logits = A @ x_true
    logits = logits - logits.mean()
    scale = logits.std()
    if scale > 0:
        logits = 2.0 * logits / scale
    z = (rng.random(n_rows) < 1.0 / (1.0 + np.exp(-logits))).astype(float)

    dm = DatasetMatrix(
        features=A,
        targets=z,
        provenance={
            "kind": "logistic",
            "n_rows": n_rows,
            "n_cols": n_cols,
            "sparsity": sparsity,
            "seed": seed,
        },
    )
    return dm, logistic_objective(A, z)


# ---------------------------------------------------------------------------
# outer objectives and full bi-level instances
# ---------------------------------------------------------------------------

def elastic_net_outer() -> ProxFriendlyFn:
    """The sparsity-promoting outer ``||x||_1 + 0.05 ||x||_2^2`` (0.1-strongly convex)."""
    return elastic_net_fn(l1=1.0, mu=0.05)


def elastic_net_ql(dim: int) -> QLConstants:
    """Growth constants for the elastic-net sub-gradient selector, via the calculus."""
    l1_part = ql_from_global_lipschitz(math.sqrt(dim))
    quad_part = ql_from_lipschitz_map(L=0.1, norm_at_zero=0.0)
    return ql_sum(l1_part, quad_part)


def make_analytic(outer_mode: str = "composite") -> BilevelInstance:
    """Two-dimensional instance with a closed-form bi-level solution.

    Inner: ``0.5 * (x1 + x2 - 1)^2`` (solution set: the line x1 + x2 = 1).
    Outer: ``0.5 * ||x||^2``, so the bi-level optimum is the projection of
    the origin onto the line, (0.5, 0.5), with outer value 0.25.

    ``outer_mode`` selects ``"composite"`` (smooth quadratic sigma, zero
    psi) or ``"subgradient"`` (the same quadratic through its gradient
    selector, growth constants (0, 2)).
    """

    def inner_value(x):
        s = x[0] + x[1] - 1.0
        return 0.5 * s * s

    def inner_grad(x):
        s = x[0] + x[1] - 1.0
        return np.array([s, s])

    smooth = SmoothConvexFn(inner_value, inner_grad, lipschitz_grad=2.0, name="hyperplane_ls")
    inner = CompositeObjective(smooth, zero_fn())

    quad_ql = ql_from_lipschitz_map(L=1.0, norm_at_zero=0.0)  # gradient of 0.5||x||^2
    if outer_mode == "composite":
        outer = CompositeOuter(sigma=sq_l2_smooth_fn(0.5), psi=zero_fn(), ql=quad_ql)
    elif outer_mode == "subgradient":
        outer = SubgradientOuter(omega=sq_l2_fn(0.5), ql=quad_ql)
    else:
        raise ValueError(f"unknown outer_mode {outer_mode!r}")

    return BilevelInstance(
        inner=inner,
        outer=outer,
        dim=2,
        reference=Reference(x_prime=np.array([0.5, 0.5]), phi_star=0.0, omega_star=0.25),
        name=f"analytic-{outer_mode}",
    )


def colinear_ls_bilevel(
    n_rows: int = 200,
    n_base_cols: int = 50,
    n_colinear: int = 10,
    combo_size: int = 10,
    seed: int = 0,
    outer_mode: str = "composite",
) -> BilevelInstance:
    """Colinear least-squares inner with the elastic-net outer.

    Default sizes are desk scale: cheap enough for the tens of thousands of
    iterations the rate checks need.  ``"composite"`` mode carries the
    elastic net as the prox term with a zero smooth part, which is the
    configuration the benchmark comparisons use.
    """
    dm, obj = make_colinear_ls(n_rows, n_base_cols, n_colinear, combo_size, seed)
    dim = dm.n_cols
    omega = elastic_net_outer()
    ql = elastic_net_ql(dim)
    if outer_mode == "composite":
        outer = CompositeOuter(sigma=zero_smooth_fn(), psi=omega, ql=ql)
    elif outer_mode == "subgradient":
        outer = SubgradientOuter(omega=omega, ql=ql)
    else:
        raise ValueError(f"unknown outer_mode {outer_mode!r}")
    name = f"colinear-ls(N={n_rows},base={n_base_cols},extra={n_colinear},seed={seed})"
    return BilevelInstance(inner=obj, outer=outer, dim=dim, name=name)


def logistic_bilevel(
    n_rows: int = 400,
    n_cols: int = 100,
    sparsity: float = 0.05,
    seed: int = 0,
    outer_mode: str = "composite",
) -> BilevelInstance:
    """Logistic inner with the elastic-net outer."""
    dm, obj = make_logistic(n_rows, n_cols, sparsity, seed)
    dim = dm.n_cols
    omega = elastic_net_outer()
    ql = elastic_net_ql(dim)
    if outer_mode == "composite":
        outer = CompositeOuter(sigma=zero_smooth_fn(), psi=omega, ql=ql)
    elif outer_mode == "subgradient":
        outer = SubgradientOuter(omega=omega, ql=ql)
    else:
        raise ValueError(f"unknown outer_mode {outer_mode!r}")
    name = f"logistic(N={n_rows},m={n_cols},p={sparsity},seed={seed})"
    return BilevelInstance(inner=obj, outer=outer, dim=dim, name=name)


# ---------------------------------------------------------------------------
# descriptors
# ---------------------------------------------------------------------------

PRESETS = {
    "analytic": lambda **kw: make_analytic(**kw),
    "analytic-v1": lambda **kw: make_analytic(outer_mode="subgradient", **kw),
    "colinear-ls": colinear_ls_bilevel,
    "logistic": logistic_bilevel,
}


def instance_descriptor(kind: str, **params) -> dict:
    """JSON-serializable descriptor; ``build_instance`` reverses it exactly."""
    if kind not in PRESETS:
        raise ValueError(f"unknown instance kind {kind!r}; known: {sorted(PRESETS)}")
    return {"kind": kind, "params": params}


def build_instance(descriptor: dict) -> BilevelInstance:
    """Rebuild a bi-level instance from its descriptor."""
    kind = descriptor.get("kind")
    if kind not in PRESETS:
        raise ValueError(f"unknown instance kind {kind!r}; known: {sorted(PRESETS)}")
    return PRESETS[kind](**descriptor.get("params", {}))
