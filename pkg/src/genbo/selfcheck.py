"""Finite-difference gradient and normalization checks, run by ``genbo selfcheck``.

Every check goes through module attributes (``proposal.grad_log_prob`` and
friends), so a patched-in bug is caught the same way a real one would be.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass

import numpy as np

from genbo import losses, proposal
from genbo.core import rng_stream

FD_STEP = 1e-6
FD_RTOL = 1e-5


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def central_difference(f, x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    """Numerical gradient of scalar ``f`` at ``x`` (any shape)."""
    g = np.zeros_like(x, dtype=float)
    for idx in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[idx] += h
        xm[idx] -= h
        g[idx] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_error(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return float(np.abs(a - b).max() / scale)


def _instance(rng, M=4, V=3, n=12):
    params = proposal.MeanFieldParams(rng.normal(size=(M, V)))
    X = rng.integers(V, size=(n, M))
    u = rng.exponential(size=n)
    sampled = proposal.log_prob_batch(proposal.MeanFieldParams(rng.normal(size=(M, V))), X)
    prior = proposal.CategoricalPrior(rng.dirichlet(np.ones(V), size=M))
    return params, X, u, sampled, prior


def _loss_cases(rng):
    params, X, u, sampled, prior = _instance(rng)
    pairs = losses.make_pairs(X, u, rng)
    tau = float(rng.uniform(0.5, 2.0))
    p = float(rng.uniform(0.0, 0.45))
    return params, {
        "PL": lambda P: losses.pl_loss(P, prior, pairs, tau),
        "rPL": lambda P: losses.rpl_loss(P, prior, pairs, tau, p),
        "fKL": lambda P: losses.fkl_loss(P, X, u, sampled, prior),
        "fKL+iw": lambda P: losses.fkl_loss(P, X, u, sampled, prior, True),
        "bfKL": lambda P: losses.bfkl_loss(P, X, u, sampled, prior),
        "bfKL+iw": lambda P: losses.bfkl_loss(P, X, u, sampled, prior, True),
    }


def check_grad_log_prob(n_instances: int = 20) -> list[CheckResult]:
    worst_fd = worst_rowsum = 0.0
    for i in range(n_instances):
        rng = rng_stream(i, "selfcheck/glp")
        params, X, *_ = _instance(rng)
        seq = X[0]
        g = proposal.grad_log_prob(params, seq)
        fd = central_difference(lambda L: float(proposal.log_prob(proposal.MeanFieldParams(L), seq)), params.logits)
        worst_fd = max(worst_fd, rel_error(g, fd))
        worst_rowsum = max(worst_rowsum, float(np.abs(g.sum(axis=1)).max()))
    return [
        CheckResult("grad_log_prob vs FD", worst_fd < FD_RTOL, f"max rel err {worst_fd:.2e}"),
        CheckResult("grad_log_prob row sums", worst_rowsum <= 1e-12, f"max |row sum| {worst_rowsum:.2e}"),
    ]


def check_loss_gradients(n_instances: int = 20) -> list[CheckResult]:
    worst: dict[str, float] = {}
    for i in range(n_instances):
        params, cases = _loss_cases(rng_stream(i, "selfcheck/loss"))
        for name, fn in cases.items():
            _, g = fn(params)
            fd = central_difference(lambda L: fn(proposal.MeanFieldParams(L))[0], params.logits)
            worst[name] = max(worst.get(name, 0.0), rel_error(g, fd))
    return [CheckResult(f"{k} gradient vs FD", v < FD_RTOL, f"max rel err {v:.2e}") for k, v in worst.items()]


def check_regularizers(n_instances: int = 20) -> list[CheckResult]:
    out = []
    for kind in losses.RegularizerKind:
        worst = 0.0
        for i in range(n_instances):
            rng = rng_stream(i, "selfcheck/reg")
            theta0 = rng.normal(size=(3, 4))
            # keep ||d||^2 small so exp() stays well conditioned
            theta = theta0 + 0.3 * rng.normal(size=(3, 4))
            n = int(rng.integers(2, 500))
            _, g = losses.regularizer(theta, theta0, n, 0.1, kind)
            fd = central_difference(lambda T: losses.regularizer(T, theta0, n, 0.1, kind)[0], theta)
            worst = max(worst, rel_error(g, fd))
        out.append(CheckResult(f"{kind.value} regularizer vs FD", worst < FD_RTOL, f"max rel err {worst:.2e}"))
    return out


def check_normalization() -> list[CheckResult]:
    worst = 0.0
    for i, (M, V) in enumerate([(2, 2), (3, 4), (4, 3), (5, 2)]):
        rng = rng_stream(i, "selfcheck/norm")
        params = proposal.MeanFieldParams(3.0 * rng.normal(size=(M, V)))
        X = np.array(list(itertools.product(range(V), repeat=M)))
        worst = max(worst, abs(float(np.exp(proposal.log_prob_batch(params, X)).sum()) - 1.0))
    return [CheckResult("proposal sums to 1", worst <= 1e-8, f"max |sum - 1| {worst:.2e}")]


def check_identities(n_instances: int = 100) -> list[CheckResult]:
    worst_rpl = worst_bfkl = 0.0
    for i in range(n_instances):
        rng = rng_stream(i, "selfcheck/ident")
        params, X, u, sampled, prior = _instance(rng)
        pairs = losses.make_pairs(X, u, rng)
        tau = float(rng.uniform(0.5, 2.0))
        pl = losses.pl_loss(params, prior, pairs, tau)[0]
        rpl = losses.rpl_loss(params, prior, pairs, tau, 0.0)[0]
        worst_rpl = max(worst_rpl, abs(pl - rpl))
        diff = (losses.bfkl_loss(params, X, u, sampled, prior, True)[0]
                - losses.fkl_loss(params, X, u, sampled, prior, True)[0])
        expect = float(np.exp(proposal.log_prob_batch(params, X) - sampled).sum())
        worst_bfkl = max(worst_bfkl, abs(diff - expect))
    return [
        CheckResult("rPL(p=0) == PL", worst_rpl <= 1e-12, f"max abs diff {worst_rpl:.2e}"),
        CheckResult("bfKL - fKL == penalty", worst_bfkl <= 1e-10, f"max abs diff {worst_bfkl:.2e}"),
    ]


def run_all() -> list[CheckResult]:
    results = []
    for fn in (check_grad_log_prob, check_loss_gradients, check_regularizers, check_normalization,
               check_identities):
        try:
            results.extend(fn())
        except Exception as exc:  # a crash counts as a failed check, not a traceback
            results.append(CheckResult(fn.__name__, False, f"raised {type(exc).__name__}: {exc}"))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  detail", "-" * (width + 30)]
    for r in results:
        lines.append(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
    return "\n".join(lines)


def main() -> int:
    start = time.perf_counter()
    results = run_all()
    print(format_table(results))
    ok = all(r.passed for r in results)
    print(f"\n{sum(r.passed for r in results)}/{len(results)} checks passed in {time.perf_counter() - start:.1f}s")
    return 0 if ok else 1
