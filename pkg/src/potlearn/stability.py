"""Exhaustive analysis of the perturbed chain induced by partial-synchronous
binary log-linear learning on small games.

The chain's states are joint actions.  Noise enters through a perturbation
index ``eps`` in (0, 1), related to the learning temperature by
``eps = exp(-1 / temperature)``.  Each feasible transition has a resistance:
the exponential order at which its probability vanishes as eps -> 0.  States
that keep non-vanishing stationary mass in that limit are the stochastically
stable states.

Resistances and per-transition probabilities follow the independent-wake
product structure of the learner; the full kernel built here additionally
marginalizes over unobservable wake events (players that wake and re-select
their current action), which is the ground truth the diagnostics are checked
against.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .dynamics import (
    ConstrainedActionMap,
    WakeModel,
    binary_logit_weights,
    resolve_wake_probability,
    validate_constraints,
)
from .games import GameDefinition, JointAction

DENSE_SOLVE_LIMIT = 2000


class InfeasibleTransitionError(ValueError):
    """A deviating player's target action is outside its constrained set."""


class StationaryConvergenceError(RuntimeError):
    """Power iteration failed to reach the requested residual."""


class SeparabilityError(ValueError):
    """A player's payoff depends on other players' actions."""

    def __init__(self, player: int, profile_a: JointAction, profile_b: JointAction):
        self.player = player
        self.profile_a = profile_a
        self.profile_b = profile_b
        super().__init__(
            f"player {player} payoff differs between {profile_a} and {profile_b}, "
            "which share that player's action"
        )


class UnreachableRootError(ValueError):
    """No spanning in-tree toward the requested root exists."""


def temperature_from_noise(eps: float) -> float:
    """Temperature whose induced perturbation index equals eps."""
    if not 0 < eps < 1:
        raise ValueError("noise level must lie in (0, 1)")
    return -1.0 / math.log(eps)


def deviating_set(source: JointAction, target: JointAction) -> tuple[int, ...]:
    return tuple(i for i, (a, b) in enumerate(zip(source, target)) if a != b)


def check_feasible(
    constraints: ConstrainedActionMap, source: JointAction, target: JointAction
) -> tuple[int, ...]:
    """Deviating players of a feasible transition; raises when infeasible."""
    deviators = deviating_set(source, target)
    for i in deviators:
        if target[i] not in constraints.allowed(i, source[i]):
            raise InfeasibleTransitionError(
                f"player {i}: action {target[i]} not reachable from {source[i]}"
            )
    return deviators


@dataclass(frozen=True)
class TransitionResistance:
    source: JointAction
    target: JointAction
    deviators: tuple[int, ...]
    resistance: float


def resistance(
    game: GameDefinition,
    source: JointAction,
    target: JointAction,
    constraints: ConstrainedActionMap | None = None,
) -> TransitionResistance:
    """Resistance of a feasible transition.

    Each deviating player contributes the shortfall of its target payoff
    against the better of its two payoffs, so improving moves are free and
    the total is always non-negative.
    """
    if constraints is None:
        deviators = deviating_set(source, target)
    else:
        deviators = check_feasible(constraints, source, target)
    total = 0.0
    for i in deviators:
        u1 = game.utility(i, source)
        u2 = game.utility(i, target)
        total += max(u1, u2) - u2
    return TransitionResistance(source, target, deviators, total)


def _log_switch(u_keep: float, u_switch: float, temperature: float) -> float:
    """log of the binary-logit switch probability, stable for any payoff gap."""
    y = (u_keep - u_switch) / temperature
    if y > 30:
        return -y - math.log1p(math.exp(-y))
    return -math.log1p(math.exp(y))


def log_transition_probability(
    game: GameDefinition,
    source: JointAction,
    target: JointAction,
    wake: WakeModel,
    constraints: ConstrainedActionMap,
    eps: float,
) -> float:
    """log of the single-path transition probability (deviators wake, rest sleep).

    The path probability is the product of the deviators' wake-and-draw
    terms, the sleepers' stay-asleep terms, and each deviator's binary logit
    switch weight between the source and target profiles.  Computed in log
    space so that no payoff normalization can overflow.
    """
    deviators = check_feasible(constraints, source, target)
    tau = temperature_from_noise(eps)
    total = 0.0
    for i in range(game.n_players):
        p = resolve_wake_probability(wake, i, source)
        if i in deviators:
            if p == 0.0:
                return -math.inf
            total += math.log(p) - math.log(len(constraints.allowed(i, source[i])))
            total += _log_switch(
                game.utility(i, source), game.utility(i, target), tau
            )
        else:
            if p == 1.0:
                return -math.inf
            total += math.log1p(-p)
    return total


def transition_probability(
    game: GameDefinition,
    source: JointAction,
    target: JointAction,
    wake: WakeModel,
    constraints: ConstrainedActionMap,
    eps: float,
) -> float:
    return math.exp(
        log_transition_probability(game, source, target, wake, constraints, eps)
    )


def scaled_transition_probability(
    game: GameDefinition,
    source: JointAction,
    target: JointAction,
    wake: WakeModel,
    constraints: ConstrainedActionMap,
    eps: float,
) -> float:
    """Transition probability divided by eps ** resistance.

    Stays bounded and positive as eps -> 0; evaluated in log space so the
    ratio is accurate even when the probability itself underflows.
    """
    log_p = log_transition_probability(game, source, target, wake, constraints, eps)
    r = resistance(game, source, target, constraints).resistance
    return math.exp(log_p - r * math.log(eps))


@dataclass
class PerturbedChain:
    """Markov chain over joint actions at a fixed noise level."""

    states: tuple[JointAction, ...]
    index: dict[JointAction, int]
    kernel: np.ndarray | sp.csr_matrix
    noise: float

    @property
    def n_states(self) -> int:
        return len(self.states)

    def row_sums(self) -> np.ndarray:
        if sp.issparse(self.kernel):
            return np.asarray(self.kernel.sum(axis=1)).ravel()
        return self.kernel.sum(axis=1)


def build_chain(
    game: GameDefinition,
    wake: WakeModel,
    constraints: ConstrainedActionMap,
    eps: float,
    max_states: int = 20_000,
) -> PerturbedChain:
    """Construct the full one-step kernel of the partial-synchronous learner.

    For every source profile the builder enumerates all wake subsets, all
    trial draws of the awake players, and all accept/keep outcomes, so paths
    on which a player wakes but ends up re-selecting its current action are
    aggregated with genuine sleep events.  Rows sum to one; any floating
    residual is absorbed into the self-loop.
    """
    tau = temperature_from_noise(eps)
    states = tuple(game.joint_actions())
    n = len(states)
    if n > max_states:
        raise ValueError(f"joint-action space has {n} states, cap is {max_states}")
    index = {a: k for k, a in enumerate(states)}
    utils = {a: game.utilities(a) for a in states}
    n_players = game.n_players
    dense = n <= DENSE_SOLVE_LIMIT
    kernel = np.zeros((n, n)) if dense else sp.lil_matrix((n, n))

    for si, source in enumerate(states):
        rp = [resolve_wake_probability(wake, i, source) for i in range(n_players)]
        allowed = [constraints.allowed(i, source[i]) for i in range(n_players)]
        u_source = utils[source]
        row: dict[int, float] = {}
        for mask in range(1 << n_players):
            awake = [i for i in range(n_players) if mask >> i & 1]
            p_wake = 1.0
            for i in range(n_players):
                p_wake *= rp[i] if i in awake else 1.0 - rp[i]
            if p_wake == 0.0:
                continue
            if not awake:
                row[si] = row.get(si, 0.0) + p_wake
                continue
            p_draw = p_wake
            for i in awake:
                p_draw /= len(allowed[i])
            for trial_vec in itertools.product(*(allowed[i] for i in awake)):
                profile = list(source)
                for i, t in zip(awake, trial_vec):
                    profile[i] = t
                u_trial = utils[tuple(profile)]
                keeps = [
                    binary_logit_weights(u_source[i], u_trial[i], tau)[0]
                    for i in awake
                ]
                for accept in range(1 << len(awake)):
                    p = p_draw
                    out = list(source)
                    for bit, i in enumerate(awake):
                        if accept >> bit & 1:
                            p *= 1.0 - keeps[bit]
                            out[i] = trial_vec[bit]
                        else:
                            p *= keeps[bit]
                    ti = index[tuple(out)]
                    row[ti] = row.get(ti, 0.0) + p
        total = 0.0
        for ti, p in row.items():
            kernel[si, ti] += p
            total += p
        kernel[si, si] += 1.0 - total
    if not dense:
        kernel = kernel.tocsr()
    return PerturbedChain(states=states, index=index, kernel=kernel, noise=eps)


def _gth_stationary(kernel: np.ndarray) -> np.ndarray:
    """Stationary vector of a row-stochastic matrix by GTH elimination.

    The Grassmann-Taksar-Heyman recursion avoids subtractions, so it stays
    accurate even when off-diagonal entries span hundreds of orders of
    magnitude, as they do for small noise levels.
    """
    p = np.array(kernel, dtype=float)
    n = p.shape[0]
    for k in range(n - 1, 0, -1):
        s = p[k, :k].sum()
        if s <= 0.0:
            raise StationaryConvergenceError(
                "chain is reducible: no escape mass from a trapped block"
            )
        p[:k, k] /= s
        p[:k, :k] += np.outer(p[:k, k], p[k, :k])
    pi = np.zeros(n)
    pi[0] = 1.0
    for k in range(1, n):
        pi[k] = pi[:k] @ p[:k, k]
    return pi / pi.sum()


def stationary_distribution(
    chain: PerturbedChain, tol: float = 1e-10, max_iter: int = 200_000
) -> np.ndarray:
    """Stationary probabilities of the chain.

    Small chains are solved exactly by GTH elimination; larger (sparse)
    chains fall back to power iteration, raising if the residual does not
    reach `tol` within `max_iter` sweeps.
    """
    kernel = chain.kernel
    n = chain.n_states
    if n <= DENSE_SOLVE_LIMIT:
        dense = kernel.toarray() if sp.issparse(kernel) else kernel
        pi = _gth_stationary(dense)
        residual = np.abs(pi @ dense - pi).sum()
        if residual > max(tol, 1e-12 * n):
            raise StationaryConvergenceError(f"GTH residual {residual:.3e} > {tol}")
        return pi
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = np.asarray(pi @ kernel).ravel()
        nxt /= nxt.sum()
        if np.abs(nxt - pi).sum() <= tol:
            return nxt
        pi = nxt
    raise StationaryConvergenceError(
        f"power iteration did not converge within {max_iter} sweeps"
    )


@dataclass
class StableSetReport:
    """Stationary masses across a decreasing noise schedule."""

    noise_levels: tuple[float, ...]
    states: tuple[JointAction, ...]
    masses: np.ndarray  # (n_levels, n_states)
    stable: tuple[JointAction, ...]
    mass_threshold: float


def stochastically_stable_states(
    game: GameDefinition,
    wake: WakeModel,
    constraints: ConstrainedActionMap,
    noise_levels: Sequence[float] = (1e-1, 1e-2, 1e-3),
    mass_threshold: float = 0.05,
    trend_slack: float = 1e-9,
) -> StableSetReport:
    """States whose stationary mass survives as the noise level shrinks.

    A state qualifies when its mass is at least `mass_threshold` at the
    smallest noise level and non-decreasing (within `trend_slack`) along the
    whole schedule.
    """
    levels = tuple(float(e) for e in noise_levels)
    if any(not 0 < e < 1 for e in levels):
        raise ValueError("noise levels must lie in (0, 1)")
    if any(b >= a for a, b in zip(levels, levels[1:])):
        raise ValueError("noise levels must be strictly decreasing")
    chains = [build_chain(game, wake, constraints, e) for e in levels]
    states = chains[0].states
    masses = np.vstack([stationary_distribution(c) for c in chains])
    stable = []
    for k, state in enumerate(states):
        column = masses[:, k]
        if column[-1] < mass_threshold:
            continue
        if all(b >= a - trend_slack for a, b in zip(column, column[1:])):
            stable.append(state)
    return StableSetReport(
        noise_levels=levels,
        states=states,
        masses=masses,
        stable=tuple(stable),
        mass_threshold=mass_threshold,
    )


def separable_own_values(game: GameDefinition) -> list[np.ndarray]:
    """Per-player own-action payoffs of a separable game.

    Raises SeparabilityError naming the offending player and a witnessing
    pair of profiles if any player's payoff varies with the others' actions.
    """
    values: list[np.ndarray] = []
    for i in range(game.n_players):
        own = np.zeros(game.n_actions(i))
        base_profile: dict[int, JointAction] = {}
        for a in game.joint_actions():
            u = game.utility(i, a)
            if a[i] not in base_profile:
                base_profile[a[i]] = a
                own[a[i]] = u
            elif u != own[a[i]]:
                raise SeparabilityError(i, base_profile[a[i]], a)
        values.append(own)
    return values


@dataclass
class ResistanceIdentityReport:
    """Forward-minus-backward resistance residuals against potential drops."""

    pairs_checked: int
    max_residual: float
    violations: tuple[tuple[JointAction, JointAction, float], ...]
    tol: float

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_resistance_identity(
    game: GameDefinition,
    constraints: ConstrainedActionMap,
    tol: float = 1e-12,
) -> ResistanceIdentityReport:
    """Check R(a->b) - R(b->a) == potential(a) - potential(b) exhaustively.

    Requires a separable game (checked, with a witness on failure) and a
    symmetric constraint map; the potential is the sum of own-action values.
    Every feasible ordered pair, including multi-deviator and self
    transitions, is checked.
    """
    report = validate_constraints(constraints)
    if not report.symmetric:
        raise ValueError(
            f"constraint map must be symmetric; offending edges {report.asymmetric_pairs[:3]}"
        )
    values = separable_own_values(game)
    states = list(game.joint_actions())

    def potential(a: JointAction) -> float:
        return float(sum(values[i][a[i]] for i in range(game.n_players)))

    violations: list[tuple[JointAction, JointAction, float]] = []
    worst = 0.0
    checked = 0
    for a, b in itertools.product(states, states):
        try:
            forward = resistance(game, a, b, constraints).resistance
        except InfeasibleTransitionError:
            continue
        backward = resistance(game, b, a, constraints).resistance
        residual = abs((forward - backward) - (potential(a) - potential(b)))
        checked += 1
        worst = max(worst, residual)
        if residual > tol:
            violations.append((a, b, residual))
    return ResistanceIdentityReport(
        pairs_checked=checked,
        max_residual=worst,
        violations=tuple(violations),
        tol=tol,
    )


@dataclass
class MinResistanceTree:
    root: JointAction
    edges: tuple[tuple[JointAction, JointAction, float], ...]
    total_resistance: float


def min_resistance_tree(
    game: GameDefinition,
    constraints: ConstrainedActionMap,
    root: JointAction,
    max_states: int = 12,
) -> MinResistanceTree:
    """Minimum-total-resistance spanning in-tree toward `root`.

    Edges are all feasible transitions (single- and multi-deviator).  The
    optimum is found by Edmonds' arborescence algorithm on the edge-reversed
    graph with the root's parent edges removed; the total resistance of the
    tree is the root's stochastic potential.
    """
    states = list(game.joint_actions())
    if len(states) > max_states:
        raise ValueError(
            f"{len(states)} states exceed the exhaustive-search cap {max_states}"
        )
    if root not in set(states):
        raise ValueError(f"root {root} is not a joint action of the game")
    reversed_graph = nx.DiGraph()
    reversed_graph.add_nodes_from(states)
    for a, b in itertools.permutations(states, 2):
        if a == root:
            # the root keeps no outgoing tree edge
            continue
        try:
            r = resistance(game, a, b, constraints).resistance
        except InfeasibleTransitionError:
            continue
        reversed_graph.add_edge(b, a, weight=r)
    try:
        tree = nx.minimum_spanning_arborescence(reversed_graph, attr="weight")
    except nx.NetworkXException as exc:
        raise UnreachableRootError(
            f"no spanning in-tree toward {root} under the given constraints"
        ) from exc
    edges = tuple(
        (u, v, reversed_graph[v][u]["weight"]) for v, u in tree.edges()
    )
    total = float(sum(w for _, _, w in edges))
    return MinResistanceTree(root=root, edges=edges, total_resistance=total)


def stochastic_potential(
    game: GameDefinition,
    constraints: ConstrainedActionMap,
    root: JointAction,
    max_states: int = 12,
) -> float:
    return min_resistance_tree(game, constraints, root, max_states).total_resistance
