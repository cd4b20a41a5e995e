"""Design-point (most probable failure point) search in standard normal space.

Improved HL-RF: the classic HL-RF update direction stabilized by a
backtracking line search on the merit function 0.5 ||x||^2 + c |g(x)|,
with c kept above ||x|| / ||grad g|| so the merit decreases along the
HL-RF direction. Gradients are central finite differences, evaluated in
one batched call per iteration.

The returned beta = ||x*|| is the reliability index; the ball of radius
beta contains no failure only if x* is the global minimum-norm point on
the limit state, which a multi-start search makes more plausible but
cannot guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import RngStream

__all__ = ["DesignPointResult", "find_design_point", "multi_start_design_point"]


@dataclass(frozen=True)
class DesignPointResult:
    x_star: np.ndarray
    beta: float
    converged: bool
    iterations: int
    g_evals: int
    g_value: float
    flags: tuple[str, ...] = ()


class _CountedG:
    """Wraps a vectorized g with evaluation counting and NaN policing."""

    def __init__(self, g):
        self._g = g
        self.evals = 0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(x)
        vals = np.asarray(self._g(x), dtype=float).reshape(-1)
        if np.any(np.isnan(vals)):
            raise ValueError("performance function returned NaN during the "
                             "design-point search")
        self.evals += len(vals)
        return vals


def find_design_point(g, d: int, x0=None, *, tol_g: float = 1e-8,
                      tol_step: float = 1e-8, max_iter: int = 1000,
                      fd_step: float = 1e-5) -> DesignPointResult:
    """Search for the minimum-norm point on {g = 0} from one start.

    ``g`` must accept an (n, d) batch and return n values. Convergence
    requires both |g(x)| below tol_g (relative to the starting magnitude)
    and an HL-RF update step below tol_step. Non-convergence returns the
    best iterate with ``converged=False`` rather than raising; if that
    iterate lies on the limit surface anyway (common when boundary
    curvature keeps the damped update orbiting the solution), the result
    carries a ``stalled_on_surface`` flag.
    """
    counted = _CountedG(g)
    x = np.zeros(d) if x0 is None else np.asarray(x0, dtype=float).copy()
    if x.shape != (d,):
        raise ValueError(f"x0 must have shape ({d},)")

    eye = np.eye(d)
    g_scale = None
    gx = math.nan
    flags: list[str] = []
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        probe = np.vstack([x[None, :], x + fd_step * eye, x - fd_step * eye])
        vals = counted(probe)
        gx = vals[0]
        grad = (vals[1:d + 1] - vals[d + 1:]) / (2.0 * fd_step)
        if g_scale is None:
            g_scale = max(abs(gx), 1.0)
        gnorm = float(np.linalg.norm(grad))
        if gnorm < 1e-14:
            flags.append("zero_gradient")
            break

        x_target = ((grad @ x - gx) / gnorm**2) * grad
        step = x_target - x
        step_norm = float(np.linalg.norm(step))
        if abs(gx) <= tol_g * g_scale and step_norm <= tol_step * max(1.0, np.linalg.norm(x)):
            converged = True
            break

        # Trust cap: a near-flat g linearizes to an absurdly distant
        # target, so limit how far one iteration may move.
        cap = 2.0 * max(1.0, float(np.linalg.norm(x)))
        if step_norm > cap:
            step *= cap / step_norm
            step_norm = cap

        # Armijo line search on the merit 0.5||x||^2 + c|g| along the
        # (capped) HL-RF direction; c > ||x||/||grad|| makes the
        # direction a descent direction for the merit.
        c = 2.0 * float(np.linalg.norm(x)) / gnorm + 10.0
        merit_here = 0.5 * float(x @ x) + c * abs(gx)
        slope = float(x @ step) + c * math.copysign(1.0, gx) * float(grad @ step)
        if slope >= 0.0:
            flags.append("not_a_descent_direction")
            break
        lam = 1.0
        accepted = None
        for _ in range(18):
            cand = x + lam * step
            merit_cand = 0.5 * float(cand @ cand) + c * abs(float(counted(cand)[0]))
            if merit_cand <= merit_here + 1e-4 * lam * slope:
                accepted = cand
                break
            lam *= 0.5
        if accepted is None:
            # No merit progress at any backtracked step: stalled, most
            # likely on a kink or in an oscillatory region. Stop here
            # rather than drift along an unvetted direction.
            flags.append("line_search_stalled")
            break
        x = accepted

    if not converged and abs(gx) <= 1e-5 * (g_scale or 1.0):
        # The iterate sits on the limit surface but the update never met
        # the strict tolerances (high-curvature orbit, kink). The point
        # is still a valid surface location, just not a certified
        # stationary one.
        flags.append("stalled_on_surface")

    beta = float(np.linalg.norm(x))
    return DesignPointResult(
        x_star=x, beta=beta, converged=converged, iterations=iterations,
        g_evals=counted.evals, g_value=float(gx), flags=tuple(flags),
    )


_RADIUS_LADDER = (1.0, 2.0, 4.0, 8.0)


def multi_start_design_point(g, d: int, rng: RngStream, n_starts: int = 16,
                             radius: float = 1.0, **kwargs) -> DesignPointResult:
    """Run the design-point search from many starts, keep the smallest
    usable beta.

    ``n_starts`` directions are drawn uniformly and each is tried at the
    base radius and at 2x, 4x, and 8x that radius: a limit surface whose
    nearest branch hides behind a local density ridge (so every
    small-radius start drains into a farther branch) is still reached
    from the wider rings. An attempt counts as usable when it converged,
    or when it stalled on the limit surface itself (``stalled_on_surface``,
    |g| below a loose tolerance); the smallest usable beta wins.

    If nothing is usable, the smallest-beta attempt is returned flagged
    ``no_start_converged`` so callers can refuse to trust it.
    """
    if n_starts < 1:
        raise ValueError("n_starts must be positive")
    gen = rng.generator()
    dirs = gen.standard_normal((n_starts, d))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0.0] = 1.0
    dirs /= norms[:, None]

    best: DesignPointResult | None = None
    fallback: DesignPointResult | None = None
    total_evals = 0
    for scale in _RADIUS_LADDER:
        for direction in dirs:
            res = find_design_point(g, d, direction * (radius * scale),
                                    **kwargs)
            total_evals += res.g_evals
            usable = res.converged or "stalled_on_surface" in res.flags
            if usable:
                if best is None or res.beta < best.beta:
                    best = res
            elif fallback is None or res.beta < fallback.beta:
                fallback = res

    if best is not None:
        return DesignPointResult(
            x_star=best.x_star, beta=best.beta, converged=best.converged,
            iterations=best.iterations, g_evals=total_evals,
            g_value=best.g_value, flags=best.flags,
        )
    return DesignPointResult(
        x_star=fallback.x_star, beta=fallback.beta, converged=False,
        iterations=fallback.iterations, g_evals=total_evals,
        g_value=fallback.g_value, flags=fallback.flags + ("no_start_converged",),
    )
