"""Witness-based homotopy checks in upper semifinite hyperspaces.

Every homotopy this machinery certifies has the same three-step shape: stay
at f, pass through the union f ∪ g at the midpoint, end at g.  The union of
two continuous maps into a hyperspace is continuous, and two maps contained
in a common third are homotopic through it, so the whole claim reduces to one
number: the largest diameter of f(x) ∪ g(x) over the domain.  The homotopy
exists inside the scale-bound neighborhood exactly when that number is
strictly below the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .construction import AdjustedSequence, gamma as net_gamma
from .hyperspace import MultiMap, map_diameter, nearest_sets, set_diameter, singleton_bonding_chain
from .metric import MetricGround


@dataclass(frozen=True)
class HomotopyWitness:
    """Union-map homotopy certificate for a pair of multivalued maps."""

    name: str
    bound: float
    max_union_diameter: float
    worst_item: int
    verdict: bool

    @property
    def slack(self) -> float:
        return self.bound - self.max_union_diameter


def check_homotopic_in_U(
    f: MultiMap,
    g: MultiMap,
    bound: float,
    dist: np.ndarray,
    name: str = "union_homotopy",
) -> HomotopyWitness:
    """Certify f ~ g inside the bound via the three-step union homotopy.

    Passes iff max over the common domain of diam(f(x) ∪ g(x)) < bound,
    strictly.  The worst domain item is recorded either way.
    """
    if f.domain_kind != g.domain_kind or len(f.images) != len(g.images):
        raise ValueError("maps must share a domain")
    worst = -1.0
    worst_item = 0
    for i, (fi, gi) in enumerate(zip(f.images, g.images)):
        d = set_diameter(dist, set(fi) | set(gi))
        if d > worst:
            worst = d
            worst_item = i
    return HomotopyWitness(
        name=name, bound=float(bound), max_union_diameter=float(worst),
        worst_item=worst_item, verdict=worst < bound,
    )


@dataclass(frozen=True)
class ApproximativeMap:
    """Finite prefix of a multivalued map sequence with shrinking images.

    ``maps[k]`` sends each source ground point to a subset of the target
    ground; ``diameters[k]`` is its largest image diameter, non-increasing
    over the stored prefix.
    """

    source: MetricGround
    target: MetricGround
    maps: tuple[MultiMap, ...]
    diameters: tuple[float, ...]

    def __post_init__(self):
        if len(self.maps) != len(self.diameters):
            raise ValueError("one diameter per map required")
        for k, (mm, d) in enumerate(zip(self.maps, self.diameters)):
            if len(mm.images) != self.source.n:
                raise ValueError(f"map {k} does not cover the source ground")
            if d != mm.diameter:
                raise ValueError(f"map {k}: recorded diameter {d!r} != map diameter {mm.diameter!r}")
        for a, b in zip(self.diameters, self.diameters[1:]):
            if b > a:
                raise ValueError(f"diameters must be non-increasing, got {a!r} then {b!r}")

    @staticmethod
    def from_images(source: MetricGround, target: MetricGround, image_seq) -> "ApproximativeMap":
        maps = []
        for images in image_seq:
            images = tuple(tuple(sorted(img)) for img in images)
            d = max((set_diameter(target.dist, img) for img in images), default=0.0)
            maps.append(MultiMap(domain_kind="ground", images=images, diameter=d))
        return ApproximativeMap(
            source=source, target=target, maps=tuple(maps),
            diameters=tuple(m.diameter for m in maps),
        )


def ball_map_prefix(ground: MetricGround, radii) -> ApproximativeMap:
    """Self-map prefix sending x to the closed metric ball of a given radius."""
    images_per_index = []
    for r in radii:
        images = []
        for x in range(ground.n):
            images.append(tuple(int(i) for i in np.flatnonzero(ground.dist[x] <= r)))
        images_per_index.append(images)
    return ApproximativeMap.from_images(ground, ground, images_per_index)


@dataclass
class FiniteTypeReport:
    betas: tuple[float, ...]
    input_diameters: tuple[float, ...]
    output_diameters: tuple[float, ...]
    bounds: tuple[float, ...]  # 2*beta_n + D_n per index
    slacks: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return all(s > 0 for s in self.slacks)


def finite_type_convert(
    am: ApproximativeMap,
    betas,
    nets,
    tie_tol: float = 1e-9,
) -> tuple[ApproximativeMap, FiniteTypeReport]:
    """Push every image through the nearest-point map of a target net.

    ``nets[k]`` must cover the target ground within ``betas[k]`` (checked up
    front), and the betas must decrease.  The converted map has images inside
    the finite nets and diameter strictly below ``2 * beta_k + D_k``, which is
    asserted per index and reported with its slack.
    """
    betas = tuple(float(b) for b in betas)
    nets = [tuple(net) for net in nets]
    if not (len(betas) == len(nets) == len(am.maps)):
        raise ValueError("need one beta and one net per stored index")
    if any(b <= 0 for b in betas):
        raise ValueError("betas must be positive")
    for a, b in zip(betas, betas[1:]):
        if not b < a:
            raise ValueError(f"betas must strictly decrease, got {a!r} then {b!r}")
    for k, (beta, net) in enumerate(zip(betas, nets)):
        cov = net_gamma(am.target, net)
        if not cov < beta:
            raise ValueError(
                f"net {k} is not a beta-approximation: coverage {cov!r} >= beta {beta!r}"
            )

    dist = am.target.dist
    out_images = []
    for mm, net in zip(am.maps, nets):
        q = nearest_sets(dist[:, list(net)], net, tie_tol)
        images = []
        for img in mm.images:
            pushed = sorted(set().union(*(q[y] for y in img)))
            images.append(tuple(pushed))
        out_images.append(images)

    converted = ApproximativeMap.from_images(am.source, am.target, out_images)
    bounds = tuple(2.0 * b + d for b, d in zip(betas, am.diameters))
    slacks = tuple(bound - d for bound, d in zip(bounds, converted.diameters))
    report = FiniteTypeReport(
        betas=betas,
        input_diameters=am.diameters,
        output_diameters=converted.diameters,
        bounds=bounds,
        slacks=slacks,
    )
    if not report.ok:
        k = min(range(len(slacks)), key=lambda i: slacks[i])
        raise AssertionError(
            f"converted map diameter {converted.diameters[k]!r} not < 2*beta+D = {bounds[k]!r} at index {k}"
        )
    return converted, report


@dataclass
class BoundConvergence:
    bound: float
    n0_consecutive: int | None  # least level from which all stored pairs pass
    n0_inclusion: int | None    # least level from which the point-inclusion passes
    vacuous_consecutive: bool   # no stored pair remains at or after n0


@dataclass
class IdentityConvergenceReport:
    """Convergence of the nearest-point maps toward the singleton inclusion.

    ``pair_diameters[m]`` is the worst diameter of q_m(x) ∪ q_{m+1}(x) over
    the ground; ``inclusion_diameters[n]`` the worst of q_n(x) ∪ {x}.  Both
    must beat 2 * epsilon at their own level (violations signal a broken
    tower, not insufficient depth).  Per requested bound the report gives the
    least usable start level, or None when the stored prefix is too short.
    """

    levels: tuple[int, ...]
    epsilons: tuple[float, ...]
    pair_diameters: tuple[float, ...]
    inclusion_diameters: tuple[float, ...]
    per_bound: list[BoundConvergence]
    own_level_violations: list

    @property
    def ok(self) -> bool:
        if self.own_level_violations:
            return False
        return all(b.n0_consecutive is not None and b.n0_inclusion is not None for b in self.per_bound)


def check_identity_convergence(
    seq: AdjustedSequence,
    extra_bounds=(),
    tie_tol: float = 1e-9,
) -> IdentityConvergenceReport:
    """Verify the nearest-point tower represents the identity on the sample.

    Tested on the neighborhood basis given by the level scales: the bound
    schedule is {2 epsilon_n} plus any extras.  For each bound b the report
    carries the least n0 such that every stored consecutive pair from n0 on is
    homotopic inside b (union diameter < b), and the least n0 from which
    q_n ~ (x -> {x}) inside b.
    """
    ground = seq.ground
    dist = ground.dist
    levels = list(seq.levels)
    qs = [nearest_sets(dist[:, list(lv.net)], lv.net, tie_tol) for lv in levels]

    pair_diams = []
    for k in range(len(levels) - 1):
        worst = 0.0
        for x in range(ground.n):
            d = set_diameter(dist, set(qs[k][x]) | set(qs[k + 1][x]))
            if d > worst:
                worst = d
        pair_diams.append(worst)

    incl_diams = []
    for k in range(len(levels)):
        worst = 0.0
        for x in range(ground.n):
            d = set_diameter(dist, set(qs[k][x]) | {x})
            if d > worst:
                worst = d
        incl_diams.append(worst)

    violations = []
    for k, lv in enumerate(levels):
        if k < len(pair_diams) and not pair_diams[k] < 2.0 * lv.epsilon:
            violations.append({"kind": "consecutive", "level": lv.index, "diameter": pair_diams[k], "bound": 2.0 * lv.epsilon})
        if not incl_diams[k] < 2.0 * lv.epsilon:
            violations.append({"kind": "inclusion", "level": lv.index, "diameter": incl_diams[k], "bound": 2.0 * lv.epsilon})

    # suffix maxima over levels; an empty pair suffix passes vacuously (the
    # stored prefix has nothing left to check from that level on)
    sfx_pairs = [-math.inf] * len(levels)
    for i in range(len(pair_diams) - 1, -1, -1):
        sfx_pairs[i] = max(pair_diams[i], sfx_pairs[i + 1])
    sfx_incl = list(incl_diams)
    for i in range(len(sfx_incl) - 2, -1, -1):
        sfx_incl[i] = max(sfx_incl[i], sfx_incl[i + 1])

    bounds = [2.0 * lv.epsilon for lv in levels] + [float(b) for b in extra_bounds]
    per_bound = []
    for b in bounds:
        n0_pair = None
        vac = False
        for idx, v in enumerate(sfx_pairs):
            if v < b:
                n0_pair = levels[idx].index
                vac = idx >= len(pair_diams)
                break
        n0_incl = None
        for idx, v in enumerate(sfx_incl):
            if v < b:
                n0_incl = levels[idx].index
                break
        per_bound.append(BoundConvergence(bound=b, n0_consecutive=n0_pair, n0_inclusion=n0_incl, vacuous_consecutive=vac))

    return IdentityConvergenceReport(
        levels=tuple(lv.index for lv in levels),
        epsilons=tuple(lv.epsilon for lv in levels),
        pair_diameters=tuple(pair_diams),
        inclusion_diameters=tuple(incl_diams),
        per_bound=per_bound,
        own_level_violations=violations,
    )


def check_diagram_commutes(seq: AdjustedSequence, n: int, tie_tol: float = 1e-9) -> HomotopyWitness:
    """Square at level n: nearest map vs bonding after the finer nearest map.

    Builds the witness for f = q_n and g = p(n, n+1) . q_{n+1} with bound
    2 * epsilon_n; a pass certifies the square commutes up to homotopy inside
    the level-n hyperspace.
    """
    if not (1 <= n < seq.depth):
        raise ValueError(f"need levels {n} and {n + 1} in a depth-{seq.depth} tower")
    ground = seq.ground
    dist = ground.dist
    lv_n, lv_m = seq.level(n), seq.level(n + 1)
    q_n = nearest_sets(dist[:, list(lv_n.net)], lv_n.net, tie_tol)
    q_m = nearest_sets(dist[:, list(lv_m.net)], lv_m.net, tie_tol)
    step = singleton_bonding_chain(ground, [lv_n, lv_m], tie_tol)

    f_images = tuple(tuple(img) for img in q_n)
    g_images = tuple(tuple(sorted(set().union(*(step[a] for a in img)))) for img in q_m)
    f = MultiMap("ground", f_images, map_diameter(dist, f_images))
    g = MultiMap("ground", g_images, map_diameter(dist, g_images))
    return check_homotopic_in_U(f, g, 2.0 * lv_n.epsilon, dist, name=f"diagram_level_{n}")
