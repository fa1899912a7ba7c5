"""Relaxed minimum-BER transmit vector search for one QPSK input and one channel block.

For a block ``H`` (M x K) and QPSK target ``s`` the per-user metric is
``p_m = Re{(r_m conj(s_m))^2}`` with ``r = H x``; the solver maximizes
``det(P) = prod_m p_m`` over the box ``|Re x_n|, |Im x_n| <= 1/√2`` by projected
gradient ascent with Armijo backtracking. The result is a local maximizer only.

det(P) does not change when one user's receive point flips from near ``s_m`` to
near ``-s_m``, so the QPSK corner that ends up in a table is ranked first by how
many users it serves in the right decision region and only then by det(P).
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from onebitmiso.errors import ConfigurationError
from onebitmiso.modulation.constellation import INV_SQRT2, QPSK_POINTS, is_qpsk, quantize_1bit

logger = logging.getLogger(__name__)

_POLISH_RTOL = 1e-12


class SolverConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iters: int = Field(200, ge=1)
    # Step length in units of the box half width (the ascent direction is
    # normalized to unit box norm before scaling)
    step_init: float = Field(0.25, gt=0)
    armijo_shrink: float = Field(0.5, gt=0, lt=1)
    stall_tol: float = Field(1e-5, ge=0)
    max_halvings: int = Field(30, ge=0)
    # Ascend from the zero-forcing point as well as the matched filter
    multi_start: bool = True
    # QPSK moves on the quantized point after the ascent
    polish: bool = True
    pair_moves: bool = True
    # Blocks this small get an exhaustive corner search instead (4^K candidates)
    exhaustive_antennas: int = Field(4, ge=0, le=8)


@dataclass(frozen=True)
class MberProblem:
    channel_block: np.ndarray
    target: np.ndarray

    def __post_init__(self):
        block = np.atleast_2d(np.asarray(self.channel_block, dtype=complex))
        target = np.atleast_1d(np.asarray(self.target, dtype=complex))
        m, k = block.shape
        if m < 1 or k < m:
            raise ConfigurationError(f"channel block must satisfy K >= M >= 1, got M={m}, K={k}")
        if target.shape != (m,):
            raise ConfigurationError(f"target length {target.shape} does not match M={m}")
        if not np.all(is_qpsk(target)):
            raise ConfigurationError("target entries must be QPSK points")
        object.__setattr__(self, "channel_block", block)
        object.__setattr__(self, "target", target)

    @property
    def n_users(self) -> int:
        return self.channel_block.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.channel_block.shape[1]


@dataclass(frozen=True)
class SolverResult:
    x_relaxed: np.ndarray
    x_quantized: np.ndarray
    # QPSK vector after the corner search; equals x_quantized with polish off
    x_corner: np.ndarray
    objective: float
    corner_objective: float
    iterations_used: int
    # Accepted det(P) per ascent iteration, starting with the initial point
    objective_trace: np.ndarray


def per_user_metric(r, s):
    """Re{(r conj(s))^2}, elementwise."""
    z = np.asarray(r) * np.conj(s)
    return np.real(z * z)


def objective(problem: MberProblem, x: np.ndarray) -> float:
    r = problem.channel_block @ x
    return float(np.prod(per_user_metric(r, problem.target)))


def _products_of_others(p: np.ndarray) -> np.ndarray:
    # prod_{k != m} p_k without dividing, so zero metrics are safe
    prefix = np.concatenate(([1.0], np.cumprod(p[:-1])))
    suffix = np.concatenate((np.cumprod(p[::-1][:-1])[::-1], [1.0]))
    return prefix * suffix


def gradient(problem: MberProblem, x: np.ndarray) -> np.ndarray:
    """Ascent direction of det(P): the Wirtinger derivative w.r.t. conj(x).

    The directional derivative of ``objective`` along ``dx`` equals
    ``2 * Re(vdot(gradient, dx))``.
    """
    h, s = problem.channel_block, problem.target
    r = h @ x
    p = per_user_metric(r, s)
    coeff = _products_of_others(p) * np.conj(r) * s * s
    return h.conj().T @ coeff


def project_box(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    return np.clip(np.real(x), -INV_SQRT2, INV_SQRT2) + 1j * np.clip(np.imag(x), -INV_SQRT2, INV_SQRT2)


def _box_norm(v: np.ndarray) -> float:
    if v.size == 0:
        return 0.0
    return float(max(np.max(np.abs(v.real)), np.max(np.abs(v.imag))))


def initial_point(problem: MberProblem) -> np.ndarray:
    """Matched filter H^H s, scaled so its largest component touches the box."""
    mf = problem.channel_block.conj().T @ problem.target
    peak = _box_norm(mf)
    if peak == 0.0:
        return np.zeros(problem.n_antennas, dtype=complex)
    return project_box(mf * (INV_SQRT2 / peak))


def correct_user_count(problem: MberProblem, x: np.ndarray) -> int:
    """Users whose noiseless receive point lies in the decision region of their target."""
    z = (problem.channel_block @ x) * np.conj(problem.target)
    return int(np.count_nonzero(z.real > np.abs(z.imag)))


def _move_scores(r_alt: np.ndarray, s: np.ndarray):
    # r_alt has the user axis first; s is already broadcast against it
    z = r_alt * np.conj(s)
    correct = np.count_nonzero(z.real > np.abs(z.imag), axis=0)
    return correct, np.prod(np.real(z * z), axis=0)


def _best_move(correct: np.ndarray, f: np.ndarray):
    top = correct.max()
    score = np.where(correct == top, f, -np.inf)
    idx = np.unravel_index(np.argmax(score), score.shape)
    return idx, int(top), float(score[idx])


def _improves(c_new: int, f_new: float, c: int, f: float) -> bool:
    return c_new > c or (c_new == c and f_new > f + _POLISH_RTOL * abs(f))


def _polish(problem: MberProblem, x: np.ndarray, pairs: bool):
    """Best-improvement search over one- and two-antenna QPSK moves from a corner.

    Moves are ranked by (correct users, det(P)); pair moves are only tried once
    no single move improves.
    """
    h, s = problem.channel_block, problem.target
    k = problem.n_antennas
    upper = np.triu(np.ones((k, k), dtype=bool), k=1)
    moves = 0
    while True:
        r = h @ x
        c, f = correct_user_count(problem, x), float(np.prod(per_user_metric(r, s)))
        delta = QPSK_POINTS[None, :] - x[:, None]
        step = h[:, :, None] * delta[None, :, :]

        correct, cand = _move_scores(r[:, None, None] + step, s[:, None, None])
        correct[np.abs(delta) < 1e-12] = -1
        (n, q), c1, f1 = _best_move(correct, cand)
        if _improves(c1, f1, c, f):
            x = x.copy()
            x[n] = QPSK_POINTS[q]
            moves += 1
            continue

        if not pairs or k < 2:
            return x, moves
        r_pair = r[:, None, None, None, None] + step[:, :, None, :, None] + step[:, None, :, None, :]
        correct, cand = _move_scores(r_pair, s[:, None, None, None, None])
        correct[~upper] = -1
        (n1, n2, q1, q2), c2, f2 = _best_move(correct, cand)
        if not _improves(c2, f2, c, f):
            return x, moves
        x = x.copy()
        x[n1], x[n2] = QPSK_POINTS[q1], QPSK_POINTS[q2]
        moves += 1


def _all_corners(k: int) -> np.ndarray:
    idx = np.arange(4 ** k)
    return QPSK_POINTS[(idx[:, None] // (4 ** np.arange(k))[None, :]) % 4]


def _best_corner(problem: MberProblem) -> np.ndarray:
    corners = _all_corners(problem.n_antennas)
    r = corners @ problem.channel_block.T
    correct, f = _move_scores(r.T, problem.target[:, None])
    (i,), _, _ = _best_move(correct, f)
    return corners[i]


def _zero_forcing_point(problem: MberProblem) -> Optional[np.ndarray]:
    """H^H (H H^H)^-1 s scaled into the box, or None for a rank-deficient block."""
    h = problem.channel_block
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            y = scipy.linalg.solve(h @ h.conj().T, problem.target, assume_a="her")
    except (scipy.linalg.LinAlgError, ValueError):
        return None
    x = h.conj().T @ y
    peak = _box_norm(x)
    if peak == 0.0 or not np.isfinite(peak):
        return None
    return project_box(x * (INV_SQRT2 / peak))


def _starting_points(problem: MberProblem, config: SolverConfig) -> List[np.ndarray]:
    starts = [initial_point(problem)]
    if config.multi_start:
        zf = _zero_forcing_point(problem)
        if zf is not None and not np.array_equal(zf, starts[0]):
            starts.append(zf)
    return starts


def _ascend(problem: MberProblem, x: np.ndarray, config: SolverConfig):
    f = objective(problem, x)
    trace = [f]
    iterations = 0

    for _ in range(config.max_iters):
        g = gradient(problem, x)
        scale = _box_norm(g)
        if scale == 0.0 or not np.isfinite(scale):
            break
        direction = g / scale

        mu = config.step_init
        accepted = False
        for _ in range(config.max_halvings + 1):
            x_new = project_box(x + mu * direction)
            f_new = objective(problem, x_new)
            if f_new >= f:
                accepted = True
                break
            mu *= config.armijo_shrink
        if not accepted:
            break

        step = _box_norm(x_new - x)
        x, f = x_new, f_new
        trace.append(f)
        iterations += 1
        if step < config.stall_tol:
            break

    return x, f, trace, iterations


def solve(problem: MberProblem, config: SolverConfig = SolverConfig()) -> SolverResult:
    """Projected ascent from each starting point, then a corner search on its quantized iterate.

    The start whose corner ranks best by (correct users, det(P)) wins; ties keep
    the matched-filter start.
    """
    best = None
    for start in _starting_points(problem, config):
        x, f, trace, iterations = _ascend(problem, start, config)
        corner = quantize_1bit(x)
        moves = 0
        if config.polish:
            corner, moves = _polish(problem, corner, config.pair_moves)
        key = (correct_user_count(problem, corner), objective(problem, corner))
        logger.debug("Ascent stopped after %d iterations; polish made %d moves", iterations, moves)
        if best is None or key > best[0]:
            best = (key, x, f, trace, iterations, corner)

    key, x, f, trace, iterations, corner = best
    if config.polish and problem.n_antennas <= config.exhaustive_antennas:
        exact = _best_corner(problem)
        if (correct_user_count(problem, exact), objective(problem, exact)) > key:
            corner = exact

    return SolverResult(
        x_relaxed=x,
        x_quantized=quantize_1bit(x),
        x_corner=corner,
        objective=f,
        corner_objective=objective(problem, corner),
        iterations_used=iterations,
        objective_trace=np.asarray(trace),
    )
