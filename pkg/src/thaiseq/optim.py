"""Limited-memory quasi-Newton minimization with an optional L1 term.

``minimize_owlqn`` minimizes ``f(x) + l1 * sum(|x_i|, i in mask)`` where
``f`` is smooth.  With ``l1 == 0`` it is plain L-BFGS with a backtracking
line search; otherwise it follows the orthant-wise scheme of Andrew and
Gao, which keeps exact zeros in the iterates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

SmoothFn = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


@dataclass
class OptimResult:
    x: np.ndarray
    fun: float
    converged: bool
    n_iter: int
    stop_reason: str
    pg_norm: float
    history: list[float] = field(default_factory=list, repr=False)


def pseudo_gradient(x: np.ndarray, g: np.ndarray, l1: np.ndarray) -> np.ndarray:
    """Minimum-norm subgradient of ``f + sum(l1 * |x|)``; ``l1`` is per-coordinate."""
    pg = g + l1 * np.sign(x)
    at_zero = x == 0
    right = g + l1
    left = g - l1
    pg_zero = np.where(right < 0, right, np.where(left > 0, left, 0.0))
    return np.where(at_zero, pg_zero, pg)


def _two_loop(pg: np.ndarray, s_hist, y_hist) -> np.ndarray:
    q = pg.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / np.dot(y, s)
        a = rho * np.dot(s, q)
        alphas.append((rho, a))
        q -= a * y
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= np.dot(s, y) / np.dot(y, y)
    for (s, y), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def minimize_owlqn(
    fun: SmoothFn,
    x0: np.ndarray,
    l1: float = 0.0,
    l1_mask: np.ndarray | None = None,
    max_iter: int = 1000,
    tol: float = 1e-6,
    memory: int = 10,
    max_linesearch: int = 60,
    callback: Callable[[np.ndarray, float], None] | None = None,
) -> OptimResult:
    x = np.array(x0, dtype=float)
    l1_vec = np.zeros_like(x)
    if l1 > 0:
        l1_vec[:] = l1 if l1_mask is None else l1 * np.asarray(l1_mask, dtype=float)

    def total(xv, fv):
        return fv + float(np.dot(l1_vec, np.abs(xv)))

    f, g = fun(x)
    F = total(x, f)
    history = [F]
    s_hist: deque = deque(maxlen=memory)
    y_hist: deque = deque(maxlen=memory)

    for it in range(max_iter):
        pg = pseudo_gradient(x, g, l1_vec)
        pg_norm = float(np.max(np.abs(pg))) if pg.size else 0.0
        if pg_norm < tol:
            return OptimResult(x, F, True, it, "gradient tolerance", pg_norm, history)

        d = _two_loop(pg, s_hist, y_hist)
        if l1 > 0:
            d = np.where(d * pg < 0, d, 0.0)
        slope = float(np.dot(pg, d))
        if slope >= 0:
            # lost descent; restart from steepest descent
            s_hist.clear()
            y_hist.clear()
            d = -pg
            slope = float(np.dot(pg, d))
        orthant = np.where(x != 0, np.sign(x), -np.sign(pg))

        step = 1.0 if s_hist else min(1.0, 1.0 / max(np.linalg.norm(pg), 1e-12))
        accepted = False
        for _ in range(max_linesearch):
            x_new = x + step * d
            if l1 > 0:
                x_new = np.where(np.sign(x_new) == orthant, x_new, 0.0)
                x_new = np.where(l1_vec > 0, x_new, x + step * d)
            f_new, g_new = fun(x_new)
            F_new = total(x_new, f_new)
            if F_new <= F + 1e-4 * float(np.dot(pg, x_new - x)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return OptimResult(x, F, False, it, "line search failed", pg_norm, history)

        s = x_new - x
        y = g_new - g
        if np.dot(s, y) > 1e-12 * np.dot(y, y):
            s_hist.append(s)
            y_hist.append(y)
        x, f, g, F = x_new, f_new, g_new, F_new
        history.append(F)
        if callback is not None:
            callback(x, F)

    pg = pseudo_gradient(x, g, l1_vec)
    pg_norm = float(np.max(np.abs(pg))) if pg.size else 0.0
    converged = pg_norm < tol
    return OptimResult(x, F, converged, max_iter, "gradient tolerance" if converged else "max_iter", pg_norm, history)
