"""Spatial model: Poisson fields of RRHs and users on a disk.

RRHs and users are drawn as independent homogeneous Poisson point
processes.  Independent thinning splits the RRH field into per-content
sub-processes (intensity lambda_l, sum lambda_l = lambda_R), so "the
nearest RRH holding content l" is a nearest-neighbor query against one
thinned class.

All randomness flows from a single 64-bit master seed.  Sub-streams are
derived as ``default_rng(SeedSequence(master, spawn_key=path))`` where
``path`` is a tuple of small integers naming the consumer (see the
``STREAM_*`` constants); the same (seed, path) pair always reproduces the
same draws, independent of call order.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import CoverageError, ParameterError

# Sub-stream names for the documented seed-derivation scheme.
STREAM_RRH_POS = 0
STREAM_RRH_MARK = 1
STREAM_USER_POS = 2
STREAM_USER_MARK = 3
STREAM_FADING = 4
STREAM_GAME = 5

# Simulation window, meters.  Interference beyond this radius is dropped;
# at 2000 m it is several orders of magnitude below the serving signal for
# every supported pathloss exponent.
DEFAULT_SIM_RADIUS = 2000.0

_FMT = "{:.9g}"  # canonical float formatting for realization files


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Derive an independent generator from the master seed and a stream path."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=tuple(path)))


@dataclass(frozen=True)
class SpatialPoint:
    """A planar location, meters from the cluster center."""

    x: float
    y: float

    def distance_to(self, other: "SpatialPoint") -> float:
        return float(np.hypot(self.x - other.x, self.y - other.y))


@dataclass(frozen=True)
class DensityConfig:
    """Intensities of the RRH and user fields (points per square meter).

    ``lambda_split`` holds the per-content RRH intensities; it is
    renormalized on construction so the entries sum to ``lambda_rrh``
    exactly.
    """

    lambda_rrh: float
    lambda_user: float
    lambda_split: np.ndarray

    def __post_init__(self):
        if self.lambda_rrh <= 0 or self.lambda_user < 0:
            raise ParameterError("densities must be positive (lambda_rrh) / non-negative (lambda_user)")
        split = np.asarray(self.lambda_split, dtype=float)
        if split.ndim != 1 or split.size == 0 or np.any(split < 0):
            raise ParameterError("lambda_split must be a non-empty vector of non-negative intensities")
        total = split.sum()
        if total <= 0:
            raise ParameterError("lambda_split must have positive total intensity")
        object.__setattr__(self, "lambda_split", split * (self.lambda_rrh / total))

    @classmethod
    def from_popularity(cls, lambda_rrh: float, lambda_user: float,
                        popularity: np.ndarray) -> "DensityConfig":
        """Split the RRH field proportionally to content popularity."""
        return cls(lambda_rrh, lambda_user, lambda_rrh * np.asarray(popularity, dtype=float))


@dataclass(frozen=True)
class NetworkRealization:
    """One sampled drop: RRH and user positions plus content marks.

    ``rrh_content[i]`` is the content class (0-based) RRH ``i`` holds after
    thinning; ``user_content[j]`` is the object user ``j`` requests.
    """

    cluster_radius: float
    rrh_xy: np.ndarray          # (n_rrh, 2)
    rrh_content: np.ndarray     # (n_rrh,) int
    user_xy: np.ndarray         # (n_user, 2)
    user_content: np.ndarray    # (n_user,) int
    seed: int

    def __post_init__(self):
        if self.cluster_radius <= 0:
            raise ParameterError("cluster_radius must be positive")
        for xy in (self.rrh_xy, self.user_xy):
            if xy.size and np.hypot(xy[:, 0], xy[:, 1]).max() > self.cluster_radius * (1 + 1e-12):
                raise ParameterError("point outside the cluster disk")
        if len(self.rrh_content) != len(self.rrh_xy) or len(self.user_content) != len(self.user_xy):
            raise ParameterError("content marks must align with point arrays")

    @property
    def n_rrh(self) -> int:
        return len(self.rrh_xy)

    @property
    def n_user(self) -> int:
        return len(self.user_xy)


def sample_ppp(intensity: float, radius: float, rng: np.random.Generator) -> np.ndarray:
    """Draw a homogeneous PPP on a disk; returns an (n, 2) coordinate array.

    The count is Poisson(intensity * pi * radius^2); positions are uniform
    on the disk (radius via sqrt of a uniform draw).
    """
    if intensity <= 0:
        raise ParameterError("PPP intensity must be strictly positive")
    if radius <= 0:
        raise ParameterError("disk radius must be strictly positive")
    n = rng.poisson(intensity * np.pi * radius ** 2)
    r = radius * np.sqrt(rng.uniform(size=n))
    phi = rng.uniform(0.0, 2 * np.pi, size=n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def thin_by_content(points: np.ndarray, probabilities: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """Assign each point an independent content class.

    ``probabilities`` must sum to 1 within 1e-12; class l is drawn with
    probability lambda_l / lambda_R.  Thinning a PPP this way yields
    independent PPPs per class, which the analysis relies on.
    """
    p = np.asarray(probabilities, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0):
        raise ParameterError("probabilities must be a non-negative vector")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ParameterError(f"probabilities must sum to 1 (got {p.sum()!r})")
    p = p / p.sum()
    return rng.choice(p.size, size=len(points), p=p)


def nearest_serving_rrh(user_xy, realization: NetworkRealization,
                        content: int) -> tuple[int, float]:
    """Index and distance of the nearest RRH holding ``content``.

    Ties break toward the lowest RRH index.  Raises CoverageError when no
    RRH in the realization holds the content; the caller decides whether
    that is a coverage miss to count or a hard failure.
    """
    candidates = np.flatnonzero(realization.rrh_content == content)
    if candidates.size == 0:
        raise CoverageError(f"no RRH holds content {content}")
    ux, uy = float(user_xy[0]), float(user_xy[1])
    d = np.hypot(realization.rrh_xy[candidates, 0] - ux,
                 realization.rrh_xy[candidates, 1] - uy)
    k = int(np.argmin(d))  # first minimum = lowest index among candidates
    return int(candidates[k]), float(d[k])


def sample_network(density: DensityConfig, radius: float, seed: int,
                   user_popularity: np.ndarray | None = None) -> NetworkRealization:
    """Sample a full drop from the master seed using the documented streams.

    RRH marks follow ``density.lambda_split``; user request marks follow
    ``user_popularity`` when given, else the same split fractions.
    """
    split_frac = density.lambda_split / density.lambda_rrh
    rrh_xy = sample_ppp(density.lambda_rrh, radius, substream(seed, STREAM_RRH_POS))
    rrh_content = thin_by_content(rrh_xy, split_frac, substream(seed, STREAM_RRH_MARK))
    user_xy = sample_ppp(density.lambda_user, radius, substream(seed, STREAM_USER_POS))
    pop = split_frac if user_popularity is None else np.asarray(user_popularity, dtype=float)
    user_content = thin_by_content(user_xy, pop, substream(seed, STREAM_USER_MARK))
    return NetworkRealization(radius, rrh_xy, rrh_content, user_xy, user_content, seed)


def save_realization(realization: NetworkRealization, path: str) -> None:
    """Write a realization as line-oriented text (9 significant digits)."""
    buf = io.StringIO()
    buf.write("# network realization v1\n")
    buf.write(f"radius {_FMT.format(realization.cluster_radius)}\n")
    buf.write(f"seed {realization.seed}\n")
    buf.write(f"rrh {realization.n_rrh}\n")
    for (x, y), c in zip(realization.rrh_xy, realization.rrh_content):
        buf.write(f"{_FMT.format(x)} {_FMT.format(y)} {int(c)}\n")
    buf.write(f"user {realization.n_user}\n")
    for (x, y), c in zip(realization.user_xy, realization.user_content):
        buf.write(f"{_FMT.format(x)} {_FMT.format(y)} {int(c)}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_realization(path: str) -> NetworkRealization:
    """Parse a file written by :func:`save_realization`."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    it = iter(lines)

    def expect(tag: str) -> str:
        ln = next(it)
        if not ln.startswith(tag + " "):
            raise ParameterError(f"malformed realization file: expected {tag!r}, got {ln!r}")
        return ln.split(None, 1)[1]

    radius = float(expect("radius"))
    seed = int(expect("seed"))

    def read_block(tag: str):
        n = int(expect(tag))
        xy = np.empty((n, 2))
        marks = np.empty(n, dtype=int)
        for i in range(n):
            fx, fy, fc = next(it).split()
            xy[i] = (float(fx), float(fy))
            marks[i] = int(fc)
        return xy, marks

    rrh_xy, rrh_content = read_block("rrh")
    user_xy, user_content = read_block("user")
    return NetworkRealization(radius, rrh_xy, rrh_content, user_xy, user_content, seed)
