"""
Monte Carlo trajectories of time-ordered Kraus products.

Records are sampled from the ostensible, state-independent measure (Wiener
increments or Bernoulli clicks) and each trajectory's Kraus product is built
step by step, later steps multiplying on the left. Physical weights
``tr(rho0 K^dagger K)`` are attached afterwards.

Ensembles are split into fixed-size chunks, each drawing from its own child of
the run's ``SeedSequence``. Chunks may run on several threads; their partial
sums are merged by a pairwise tree in chunk order, so an ensemble is
bit-identical for a given seed whatever the thread count.

Wiener ensembles may be sampled antithetically: each chunk draws half of its
records and appends their negations, and the moments are taken over the
pair averages.
"""

from __future__ import annotations

import itertools
import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
import numpy.typing as npt

from .exceptions import DimensionMismatchError, InvalidInputError
from .instrument import DEFAULT_NODES, check_state, dmncos_weak, total_operation
from .operators import (
    Operator,
    SeedLike,
    as_operator,
    check_same_dim,
    dagger,
    make_rng,
    mat_exp,
    mat_exp_batch,
    spawn_seeds,
)
from .superop import SuperOperator, apply, channel_exp, lindblad_dissipator, sandwich

logger = logging.getLogger(__name__)

# Trajectories per chunk; fixed so results do not depend on the worker count
CHUNK_SIZE = 500

MIN_TRAJECTORIES = 100

# Product norms outside [1/RENORM_BOUND, RENORM_BOUND] are rescaled into the log weight
RENORM_BOUND = 1e30
RENORM_INTERVAL = 32


class RecordKind(str, Enum):
    WIENER = "wiener"
    POISSON = "poisson"

    @classmethod
    def coerce(cls, kind: str | RecordKind) -> RecordKind:
        """Accept the record names and the instrument names ``diffusive``/``jump``."""
        if isinstance(kind, RecordKind):
            return kind
        aliases = {"diffusive": cls.WIENER, "jump": cls.POISSON}
        try:
            return aliases.get(kind, None) or cls(kind)
        except ValueError:
            raise InvalidInputError(
                f"unknown record kind '{kind}' (use wiener, poisson, diffusive or jump)"
            ) from None


@dataclass(frozen=True)
class MeasurementRecord:
    """
    Time-ordered increments of one trajectory.

    Attributes:
        kind: Wiener increments or Poisson clicks.
        dt: Time step.
        kappa: Measurement rate.
        increments: Array of shape ``(n_steps, n_channels)``; Wiener entries are
            reals with variance ``dt``, Poisson entries are 0 or 1.
    """

    kind: RecordKind
    dt: float
    kappa: float
    increments: npt.NDArray[np.float64]

    @property
    def n_steps(self) -> int:
        return int(self.increments.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.increments.shape[1])

    @property
    def duration(self) -> float:
        return self.n_steps * self.dt

    def reversed(self) -> MeasurementRecord:
        """The same increments registered in the opposite time order."""
        return MeasurementRecord(self.kind, self.dt, self.kappa, self.increments[::-1].copy())

    def negated(self) -> MeasurementRecord:
        """
        The antithetic partner of a Wiener record.

        Raises:
            InvalidInputError: For Poisson records, which have no sign symmetry.
        """
        if self.kind is not RecordKind.WIENER:
            raise InvalidInputError("only Wiener records can be negated")
        return MeasurementRecord(self.kind, self.dt, self.kappa, -self.increments)


@dataclass(frozen=True)
class TrajectoryResult:
    """
    Kraus product of one record.

    The instrument element of the trajectory is
    ``exp(log_ostensible_weight) * kraus . kraus^dagger``; the weight absorbs
    rescalings of the product and the Poisson reweighting of quiet steps.
    """

    kraus: Operator
    log_ostensible_weight: float
    record: MeasurementRecord

    def full_kraus(self) -> Operator:
        """Kraus operator with the ostensible weight folded back in."""
        return np.exp(0.5 * self.log_ostensible_weight) * self.kraus


@dataclass(frozen=True)
class EnsembleEstimate:
    """Monte Carlo estimate of the channel at one time."""

    time: float
    channel: SuperOperator
    stderr: float
    mean_weight: float
    weight_stderr: float
    n_trajectories: int


def sample_record(
    kind: str | RecordKind,
    n_steps: int,
    n_channels: int,
    dt: float,
    kappa: float,
    rng: np.random.Generator,
) -> MeasurementRecord:
    """
    Sample a record from the ostensible measure.

    Wiener increments are i.i.d. N(0, dt); Poisson clicks are i.i.d.
    Bernoulli(kappa dt).

    Raises:
        InvalidInputError: For negative sizes, non-positive ``dt``/``kappa``, or
            ``kappa dt > 1`` with Poisson clicks.
    """
    record_kind = RecordKind.coerce(kind)
    if n_steps < 0 or n_channels < 1:
        raise InvalidInputError(
            f"need n_steps >= 0 and n_channels >= 1, got {n_steps}, {n_channels}"
        )
    _check_step(record_kind, dt, kappa)
    increments = _draw_increments(record_kind, rng, (n_steps, n_channels), dt, kappa)
    return MeasurementRecord(record_kind, dt, kappa, increments)


def _check_step(kind: RecordKind, dt: float, kappa: float) -> None:
    if not (dt > 0 and kappa > 0):
        raise InvalidInputError(f"dt and kappa must be positive, got {dt}, {kappa}")
    if kind is RecordKind.POISSON and kappa * dt > 1:
        raise InvalidInputError(f"Poisson clicks need kappa*dt <= 1, got {kappa * dt}")


def _draw_increments(
    kind: RecordKind,
    rng: np.random.Generator,
    shape: tuple[int, ...],
    dt: float,
    kappa: float,
    antithetic: bool = False,
) -> npt.NDArray[np.float64]:
    """Increments of ``shape``; antithetic batches stack ``[z, -z]`` along the first axis."""
    if kind is RecordKind.WIENER:
        if antithetic:
            half = np.sqrt(dt) * rng.standard_normal((shape[0] // 2, *shape[1:]))
            return np.concatenate([half, -half])
        return np.sqrt(dt) * rng.standard_normal(shape)
    return (rng.random(shape) < kappa * dt).astype(float)


class _KrausStepper:
    """Advances a batch of Kraus products through a stack of records."""

    def __init__(
        self, lindblads: Sequence[Operator], kind: RecordKind, kappa: float, dt: float
    ) -> None:
        self.ops = np.stack(lindblads)
        self.kind = kind
        self.kappa = kappa
        self.dt = dt
        self.dim = self.ops.shape[1]
        decay = np.einsum("kba,kbc->ac", self.ops.conj(), self.ops)
        if kind is RecordKind.WIENER:
            squares = np.einsum("kab,kbc->ac", self.ops, self.ops)
            self.base = -0.5 * kappa * dt * (decay + squares)
            self.scaled_ops = np.sqrt(kappa) * self.ops
        else:
            self.no_click = mat_exp_batch(-0.5 * kappa * dt * decay)
            # ostensible reweighting of a quiet step: instrument weight 1 over probability 1-kdt
            self.quiet_log_weight = -np.log1p(-kappa * dt)

    def run(
        self, increments: npt.NDArray[np.float64], checkpoints: Sequence[int]
    ) -> list[tuple[npt.NDArray[np.complex128], npt.NDArray[np.float64]]]:
        """
        Evolve ``increments`` of shape ``(batch, n_steps, n_channels)``.

        Returns the products and log weights after each step count listed in
        ``checkpoints`` (0 means before any step).
        """
        batch, n_steps, _ = increments.shape
        products = np.broadcast_to(np.eye(self.dim, dtype=complex), (batch, self.dim, self.dim))
        products = products.copy()
        log_weights = np.zeros(batch)
        wanted = set(checkpoints)
        snapshots = {}
        if 0 in wanted:
            snapshots[0] = (products.copy(), log_weights.copy())
        for t in range(n_steps):
            step = increments[:, t, :]
            if self.kind is RecordKind.WIENER:
                gen = self.base + np.einsum("nk,kab->nab", step, self.scaled_ops)
                products = mat_exp_batch(gen) @ products
            else:
                products = self.no_click @ products
                for k in range(self.ops.shape[0]):
                    fired = step[:, k] > 0
                    if fired.any():
                        products[fired] = self.ops[k] @ products[fired]
                    log_weights += np.where(fired, 0.0, self.quiet_log_weight)
            if (t + 1) % RENORM_INTERVAL == 0 or (t + 1) in wanted:
                _renormalize(products, log_weights)
            if (t + 1) in wanted:
                snapshots[t + 1] = (products.copy(), log_weights.copy())
        return [snapshots[c] for c in checkpoints]


def _renormalize(
    products: npt.NDArray[np.complex128], log_weights: npt.NDArray[np.float64]
) -> None:
    norms = np.linalg.norm(products, axis=(1, 2))
    mask = (norms > RENORM_BOUND) | ((norms > 0) & (norms < 1.0 / RENORM_BOUND))
    if mask.any():
        logger.debug("Renormalizing %d Kraus products", int(mask.sum()))
        products[mask] /= norms[mask, None, None]
        log_weights[mask] += 2.0 * np.log(norms[mask])


def _as_ops(lindblads: Sequence[npt.ArrayLike]) -> list[Operator]:
    ops = [as_operator(op, "Lindblad operator") for op in lindblads]
    if not ops:
        raise InvalidInputError("at least one Lindblad operator is required")
    check_same_dim(*ops)
    return ops


def kraus_of_record(
    lindblads: Sequence[npt.ArrayLike], record: MeasurementRecord
) -> TrajectoryResult:
    """
    Time-ordered Kraus product of ``record``.

    Wiener steps multiply by ``exp(-1/2 sum (L^dagger L + L^2) kappa dt + sum L sqrt(kappa) dW)``;
    Poisson steps by ``exp(-1/2 sum L^dagger L kappa dt)`` followed by ``L_k``
    for every channel ``k`` that clicked.

    Raises:
        DimensionMismatchError: If the record has a different channel count
            than there are Lindblad operators.
    """
    ops = _as_ops(lindblads)
    if record.n_channels != len(ops):
        raise DimensionMismatchError(len(ops), record.n_channels, "record channels")
    stepper = _KrausStepper(ops, record.kind, record.kappa, record.dt)
    ((products, log_weights),) = stepper.run(record.increments[None], [record.n_steps])
    return TrajectoryResult(products[0], float(log_weights[0]), record)


def physical_weight(rho0: npt.ArrayLike, result: TrajectoryResult) -> float:
    """Born factor ``tr(rho0 K^dagger K)`` including the ostensible weight."""
    r = check_state(rho0, result.kraus.shape[0])
    k = result.kraus
    return float(np.exp(result.log_ostensible_weight) * np.trace(r @ dagger(k) @ k).real)


def evolve_lindblad(
    rho0: npt.ArrayLike, lindblads: Sequence[npt.ArrayLike], kappa: float, duration: float
) -> Operator:
    """Solve the Lindblad master equation by ``exp(kappa * T * D)`` applied to ``rho0``."""
    ops = _as_ops(lindblads)
    r = check_state(rho0, ops[0].shape[0])
    return apply(channel_exp(lindblad_dissipator(ops), kappa * duration), r)


def record_step_expectation(
    lindblads: Sequence[npt.ArrayLike],
    kind: str | RecordKind,
    kappa: float,
    dt: float,
    n_nodes: int = DEFAULT_NODES,
) -> SuperOperator:
    """
    Ostensible expectation of one trajectory step's instrument element.

    Wiener steps are the diffusive weak instrument, integrated by Gauss-Hermite
    quadrature. Poisson steps sum over the subsets of channels that fire: each
    subset contributes ``(kappa dt)^|S|`` times the sandwich of its Kraus
    operator, the quiet channels' ``1 - kappa dt`` cancelling the reweighting.
    """
    ops = _as_ops(lindblads)
    record_kind = RecordKind.coerce(kind)
    _check_step(record_kind, dt, kappa)
    if record_kind is RecordKind.WIENER:
        return total_operation(dmncos_weak(ops, kappa, dt, n_nodes))
    d = ops[0].shape[0]
    decay = sum((dagger(op) @ op for op in ops), np.zeros((d, d), dtype=complex))
    no_click = mat_exp(-0.5 * kappa * dt * decay)
    total = np.zeros((d * d, d * d), dtype=complex)
    for fired in itertools.product((False, True), repeat=len(ops)):
        kraus = no_click
        for op, clicked in zip(ops, fired):
            if clicked:
                kraus = op @ kraus
        total += (kappa * dt) ** sum(fired) * sandwich(kraus, kraus)
    return total


def ensemble_bias(
    lindblads: Sequence[npt.ArrayLike],
    kind: str | RecordKind,
    kappa: float,
    duration: float,
    dt: float,
    n_nodes: int = DEFAULT_NODES,
) -> float:
    """
    Frobenius distance between the infinite-ensemble channel and ``exp(kappa T D)``.

    The ensemble mean over ``n`` steps converges to the ``n``-th power of the
    one-step expectation, so this is the time-step bias of the estimator with
    no sampling noise.
    """
    ops = _as_ops(lindblads)
    n_steps = int(round(duration / dt))
    step = record_step_expectation(ops, kind, kappa, dt, n_nodes)
    propagated = np.linalg.matrix_power(step, n_steps)
    exact = channel_exp(lindblad_dissipator(ops), kappa * n_steps * dt)
    return float(np.linalg.norm(propagated - exact))


@dataclass
class _Moments:
    count: int
    channel_sum: npt.NDArray[np.complex128]
    square_sum: float
    weight_sum: float
    weight_square_sum: float

    def merge(self, other: _Moments) -> _Moments:
        return _Moments(
            self.count + other.count,
            self.channel_sum + other.channel_sum,
            self.square_sum + other.square_sum,
            self.weight_sum + other.weight_sum,
            self.weight_square_sum + other.weight_square_sum,
        )


def _moments(
    products: npt.NDArray[np.complex128],
    log_weights: npt.NDArray[np.float64],
    rho0: Operator,
    paired: bool = False,
) -> _Moments:
    """Sums over trajectories, or over the averages of trajectories ``i`` and ``i + n/2``."""
    n, d, _ = products.shape
    scale = np.exp(log_weights)
    elements = np.einsum("nab,nce->nacbe", products.conj(), products).reshape(n, d * d, d * d)
    elements *= scale[:, None, None]
    weights = scale * np.einsum("nab,bc,nac->n", products, rho0, products.conj()).real
    if paired:
        n //= 2
        elements = 0.5 * (elements[:n] + elements[n:])
        weights = 0.5 * (weights[:n] + weights[n:])
    return _Moments(
        n,
        elements.sum(axis=0),
        float(np.sum(np.abs(elements) ** 2)),
        float(weights.sum()),
        float(np.sum(weights**2)),
    )


def _tree_reduce(parts: list[_Moments]) -> _Moments:
    while len(parts) > 1:
        merged = [a.merge(b) for a, b in zip(parts[::2], parts[1::2])]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def _estimate(moments: _Moments, time: float, per_sample: int = 1) -> EnsembleEstimate:
    # an antithetic sample is one pair of trajectories
    n = moments.count
    mean = moments.channel_sum / n
    spread = (moments.square_sum - n * float(np.sum(np.abs(mean) ** 2))) / (n - 1)
    mean_weight = moments.weight_sum / n
    weight_spread = (moments.weight_square_sum - n * mean_weight**2) / (n - 1)
    return EnsembleEstimate(
        time=time,
        channel=mean,
        stderr=float(np.sqrt(max(spread, 0.0) / n)),
        mean_weight=mean_weight,
        weight_stderr=float(np.sqrt(max(weight_spread, 0.0) / n)),
        n_trajectories=n * per_sample,
    )


def ensemble_checkpoints(
    lindblads: Sequence[npt.ArrayLike],
    kind: str | RecordKind,
    kappa: float,
    duration: float,
    dt: float,
    n_trajectories: int,
    seed: SeedLike = None,
    n_checkpoints: int = 1,
    threads: int = 1,
    rho0: npt.ArrayLike | None = None,
    antithetic: bool = False,
) -> list[EnsembleEstimate]:
    """
    Channel estimates at ``n_checkpoints`` evenly spaced times up to ``duration``.

    Each estimate is the mean of ``exp(log w_i) sandwich(K_i, K_i)`` with a
    Frobenius standard error from the per-trajectory spread, plus the mean
    physical weight for ``rho0`` (maximally mixed by default).

    With ``antithetic`` every Wiener record is paired with its negation; the
    standard errors then come from the spread of the pair averages.

    Raises:
        InvalidInputError: For fewer than 100 trajectories or bad step sizes,
            and for antithetic sampling of Poisson records or of an odd count.
    """
    ops = _as_ops(lindblads)
    record_kind = RecordKind.coerce(kind)
    _check_step(record_kind, dt, kappa)
    if n_trajectories < MIN_TRAJECTORIES:
        raise InvalidInputError(
            f"need at least {MIN_TRAJECTORIES} trajectories, got {n_trajectories}"
        )
    if duration < 0 or n_checkpoints < 1:
        raise InvalidInputError("duration must be >= 0 and n_checkpoints >= 1")
    if antithetic and record_kind is not RecordKind.WIENER:
        raise InvalidInputError("antithetic sampling needs Wiener records")
    if antithetic and n_trajectories % 2:
        raise InvalidInputError(
            f"antithetic sampling needs an even number of trajectories, got {n_trajectories}"
        )
    d = ops[0].shape[0]
    state = np.eye(d, dtype=complex) / d if rho0 is None else check_state(rho0, d)
    state = state / np.trace(state).real

    n_steps = int(round(duration / dt))
    checkpoints = sorted(
        {int(round(n_steps * (i + 1) / n_checkpoints)) for i in range(n_checkpoints)}
    )
    sizes = [CHUNK_SIZE] * (n_trajectories // CHUNK_SIZE)
    if n_trajectories % CHUNK_SIZE:
        sizes.append(n_trajectories % CHUNK_SIZE)
    seeds = spawn_seeds(seed, len(sizes))
    stepper = _KrausStepper(ops, record_kind, kappa, dt)

    def run_chunk(job: tuple[int, np.random.SeedSequence]) -> list[_Moments]:
        size, child = job
        rng = make_rng(child)
        increments = _draw_increments(
            record_kind, rng, (size, n_steps, len(ops)), dt, kappa, antithetic
        )
        snapshots = stepper.run(increments, checkpoints)
        return [_moments(p, w, state, antithetic) for p, w in snapshots]

    jobs = list(zip(sizes, seeds))
    logger.info(
        "Sampling %d %s trajectories of %d steps in %d chunks on %d thread(s)",
        n_trajectories, record_kind.value, n_steps, len(jobs), threads,
    )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_chunk = list(pool.map(run_chunk, jobs))
    else:
        per_chunk = [run_chunk(job) for job in jobs]

    return [
        _estimate(
            _tree_reduce([chunk[i] for chunk in per_chunk]), step * dt, 2 if antithetic else 1
        )
        for i, step in enumerate(checkpoints)
    ]


def ensemble_channel(
    lindblads: Sequence[npt.ArrayLike],
    kind: str | RecordKind,
    kappa: float,
    duration: float,
    dt: float,
    n_trajectories: int,
    seed: SeedLike = None,
    threads: int = 1,
    antithetic: bool = False,
) -> EnsembleEstimate:
    """Monte Carlo estimate of ``exp(kappa * T * D)`` at the final time."""
    return ensemble_checkpoints(
        lindblads, kind, kappa, duration, dt, n_trajectories, seed, 1, threads,
        antithetic=antithetic,
    )[-1]


def ensemble_state(rho0: npt.ArrayLike, estimate: EnsembleEstimate) -> Operator:
    """Ensemble average of ``exp(log w) K rho0 K^dagger``."""
    return apply(estimate.channel, check_state(rho0))
