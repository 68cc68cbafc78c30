"""Monte Carlo reference paths and small exhaustive-search utilities.

Everything here exists to check the closed forms, not to be fast at scale:
fresh interference fields per trial, exact SINR (no quantization), and
brute-force partition enumeration for oracle comparisons.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .effcap import RadioParams
from .errors import ParameterError
from .geometry import DEFAULT_SIM_RADIUS, STREAM_FADING, NetworkRealization, substream

# Sentinel SINR when the denominator vanishes (no interferers, no noise).
SINR_CAP = 1e12

MIN_TRIALS = 100


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo point estimate with its standard error."""

    value: float
    std_error: float
    trials: int
    capped_trials: int = 0


def sample_sinr_batch(d_m: float, lambda_rrh: float, params: RadioParams,
                      trials: int, rng: np.random.Generator,
                      sim_radius: float = DEFAULT_SIM_RADIUS) -> np.ndarray:
    """SINR draws for a user served from distance d_m.

    Each trial gets a fresh Poisson interference field on the simulation
    disk and fresh unit-mean exponential fading on every link; the serving
    RRH sits at exactly d_m and never interferes.  Draw order is fixed
    (counts, interferer radii, interferer fading, serving fading) so a
    given generator state always yields the same sample.
    """
    if d_m <= 0:
        raise ParameterError("serving distance must be positive")
    if lambda_rrh <= 0 or trials < 1 or sim_radius <= 0:
        raise ParameterError("need positive intensity, radius and trial count")
    beta = params.pathloss_exponent
    counts = rng.poisson(lambda_rrh * np.pi * sim_radius ** 2, size=trials)
    total = int(counts.sum())
    radii = sim_radius * np.sqrt(rng.uniform(size=total))
    h_int = rng.standard_exponential(total)
    h_srv = rng.standard_exponential(trials)

    # per-trial segment sums; a running cumsum-and-difference is unusable here
    # because terms span ~beta*13 orders of magnitude and small trials cancel
    terms = params.snr * radii ** (-beta) * h_int
    ends = np.cumsum(counts)
    starts = ends - counts
    interference = np.zeros(trials)
    if total:
        seg = np.add.reduceat(terms, np.minimum(starts, total - 1))
        interference = np.where(counts > 0, seg, 0.0)

    signal = params.snr * d_m ** (-beta) * h_srv
    denom = interference + params.noise
    with np.errstate(divide="ignore"):
        sinr = np.where(denom > 0.0, signal / np.maximum(denom, 1e-300), np.inf)
    n_capped = int(np.count_nonzero(sinr > SINR_CAP))
    if np.any(denom == 0.0):
        warnings.warn("trial with empty interference field and zero noise; "
                      f"SINR capped at {SINR_CAP:g}", stacklevel=2)
    return np.minimum(sinr, SINR_CAP)


def simulate_sinr(realization: NetworkRealization, user_index: int,
                  serving_index: int, params: RadioParams,
                  fading_seed: int = 0) -> float:
    """One SINR draw on a fixed realization with fresh fading.

    All RRHs except the serving one interfere; fading comes from the
    realization's master seed via the fading sub-stream, indexed by
    ``fading_seed`` so repeated draws are independent yet replayable.
    """
    if not 0 <= user_index < realization.n_user:
        raise ParameterError("user index out of range")
    if not 0 <= serving_index < realization.n_rrh:
        raise ParameterError("serving RRH index out of range")
    beta = params.pathloss_exponent
    rng = substream(realization.seed, STREAM_FADING, fading_seed)
    h = rng.standard_exponential(realization.n_rrh)
    ux, uy = realization.user_xy[user_index]
    d = np.hypot(realization.rrh_xy[:, 0] - ux, realization.rrh_xy[:, 1] - uy)
    power = params.snr * d ** (-beta) * h
    signal = power[serving_index]
    interference = power.sum() - signal
    denom = interference + params.noise
    if denom <= 0.0:
        warnings.warn(f"no interference and zero noise; SINR capped at {SINR_CAP:g}",
                      stacklevel=2)
        return SINR_CAP
    return float(min(signal / denom, SINR_CAP))


def mc_eff_cap(theta: float, d_m: float, lambda_rrh: float, params: RadioParams,
               trials: int, seed: int,
               sim_radius: float = DEFAULT_SIM_RADIUS) -> McEstimate:
    """Monte Carlo effective capacity of a user served from distance d_m.

    Estimates the log-moment Z = (1+SINR)^(-mu*theta*W*Tbar) by plain
    averaging and maps through -ln(mean)/(theta*W*T); the standard error
    propagates through the log by the delta method.  theta enters only in
    post-processing, so estimates at different theta from the same seed
    share their SINR draws and are exactly monotone in theta.
    """
    if theta <= 0:
        raise ParameterError("delay exponent must be strictly positive")
    if trials < MIN_TRIALS:
        raise ParameterError(f"at least {MIN_TRIALS} trials required, got {trials}")
    rng = substream(seed, STREAM_FADING)
    sinr = sample_sinr_batch(d_m, lambda_rrh, params, trials, rng, sim_radius)
    a = params.spectral_efficiency * theta * params.bandwidth_hz * params.tbar
    z = np.exp(-a * np.log1p(sinr))
    z_mean = float(z.mean())
    z_se = float(z.std(ddof=1) / math.sqrt(trials))
    denom = theta * params.bandwidth_hz * params.slot_s
    value = -math.log(z_mean) / denom
    std_error = z_se / (z_mean * denom)
    return McEstimate(value=value, std_error=std_error, trials=trials,
                      capped_trials=int(np.count_nonzero(sinr >= SINR_CAP)))


def enumerate_partitions(items, max_items: int = 12) -> Iterator[list[frozenset]]:
    """All set partitions of ``items``, in a deterministic order.

    Counts follow the Bell numbers, so the size is capped; use the games
    module's local-search routines beyond that.
    """
    elems = list(items)
    if len(elems) > max_items:
        raise ParameterError(f"partition enumeration capped at {max_items} items")
    if not elems:
        yield []
        return

    def rec(rest: list, blocks: list[list]):
        if not rest:
            yield [frozenset(b) for b in blocks]
            return
        head, tail = rest[0], rest[1:]
        for i in range(len(blocks)):
            blocks[i].append(head)
            yield from rec(tail, blocks)
            blocks[i].pop()
        blocks.append([head])
        yield from rec(tail, blocks)
        blocks.pop()

    yield from rec(elems, [])
