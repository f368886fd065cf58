"""
The command-line suites.

Each suite takes a resolved ``RunConfig`` and returns the ``CheckRow`` list
the writer stores. A row is one measured residual, order or witness next to
the bound it is judged against; suites never raise on a failed bound.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np

from .affine import (
    CONJUGATOR,
    DELTA_TEST_FN,
    AffineElement,
    DeltaIdentity,
    Side,
    derive_haar_exponent,
    delta_identity_order,
    haar_density,
    haar_invariance_check,
    modular_function,
    unimodularity_witness,
)
from .commutative import (
    characteristic_eigenvalue,
    characteristic_eigenvalue_exact,
    default_grid,
    eigenfunction_residual,
    exact_kod,
    fpk_convergence_ratio,
    fpk_evolve,
    fpk_x_marginal_l1,
    heat_semigroup_residual,
    mollified_delta_grid,
    normalized_total,
    tp_integral,
)
from .config import RunConfig
from .dilation import (
    MeterModel,
    dilated_jump_instrument,
    interaction_unitary,
    jump_kraus_extract,
    local_oscillator_phase,
    make_q_grid,
    povm_marginal,
    quadrature_kraus_extract,
    quadrature_split_form_check,
    reference_quadrature_kraus,
    unitarity_defect,
    weighted_l2,
)
from .exceptions import ConfigError, GroupTableError
from .finite_groups import (
    BUILTIN_GROUPS,
    FiniteGroup,
    builtin_group,
    defining_representation,
    finite_identity_report,
    regular_representation,
)
from .group_analysis import (
    RepPoint,
    abelian_coordinates,
    abelian_kraus,
    adjoint_intertwining_check,
    differential_intertwining_check,
    generator_intertwining_check,
    kod_histogram,
    kod_l1_to_gaussian,
    kod_splice_l1,
    lie_bracket_residual,
    right_translation_generator,
    sample_abelian_coordinates,
    total_operation_intertwining_check,
    translation_intertwining_check,
    weak_commutator_ensemble,
    weak_commutator_residual,
)
from .instrument import (
    WeakKind,
    WeakSpec,
    convolve,
    jump_weak,
    random_instrument,
    repeat,
    total_operation,
)
from .operators import (
    SIGMA_MINUS,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    Operator,
    dagger,
    make_rng,
    mat_exp,
    random_ginibre,
    random_invertible,
    spawn_seeds,
)
from .records import CheckRow
from .superop import (
    SuperOperator,
    channel_exp,
    choi_involution,
    hs_adjoint,
    is_cp,
    is_tp,
    lindblad_dissipator,
    sandwich,
)
from .trajectory import ensemble_bias, ensemble_checkpoints, kraus_of_record, sample_record
from .utils import fit_order, format_float, parse_lindblads

logger = logging.getLogger(__name__)

Suite = Callable[[RunConfig], list[CheckRow]]

# Residuals at or below this are exact; they carry no convergence order
EXACT_FLOOR = 1e-13

EXACT_TOL = 1e-12
FINITE_GROUP_TOL = 1e-13

UNRAVEL_SIGMAS = 5.0
UNRAVEL_BIAS = 10.0
# kappa*dt values for the exact one-step propagation at fixed kappa*T
DT_BIAS_STEPS = (1e-2, 5e-3, 2.5e-3)
DT_BIAS_ORDER = 0.9

WEAK_ORDER = 1.8
JUMP_N1_ORDER = 1.4
SPLIT_FORM_ORDER = 1.4
BCH_ORDER = 1.4
REPEAT_TOL = 1e-11
RANDOM_CP_MAPS = 100
CHOI_EIG_FLOOR = -1e-10
TP_TOL = 1e-10
TP_TIMES = (0.5, 1.0, 2.0, 5.0)

UNITARITY_TOL = 1e-9
QUADRATURE_L2_TOL = 1e-3
POVM_TOL = 1e-8
LOCAL_OSCILLATOR_TOL = 1e-8
DILATION_CONSISTENCY = 10.0

FD_ORDER, FD_ORDER_SPREAD = 2.0, 0.2
LIE_BRACKET_H = 1e-3
LIE_BRACKET_TOL = 1e-4

EIGENVALUE_TOL = 1e-10
EIGENFUNCTION_TOL = 1e-6
EIGENFUNCTION_ELLS = (-1.0, -0.5, 0.0, 0.5, 1.0)
TP_INTEGRAL_TOL = 1e-8
HEAT_SEMIGROUP_TOL = 1e-8
FPK_L1_TOL = 1e-2
FPK_ORDER = 1.7
FPK_MASS_TOL = 1e-8
FPK_MEAN_TOL = 1e-6

MODULAR_TOL = 1e-14
HAAR_TOL = 1e-6
DELTA_ORDER = 1.0
CONJUGATION_REL_TOL = 1e-2
WITNESS_FLOOR = 0.1
WITNESS_TOL = 1e-6
RANDOM_AFFINE_SPREAD = 2.0

ENSEMBLE_SIGMAS = 5.0
KOD_L1_TOL = 0.02
KOD_SPLICE_TOL = 0.03
KOD_KRAUS_TOL = 1e-10


def _steps(values: Sequence[float]) -> str:
    return "/".join(format_float(float(v)) for v in values)


def _order_row(
    check: str, steps: Sequence[float], errors: Sequence[float], minimum: float, **params: Any
) -> CheckRow:
    """Fitted order of ``errors`` in ``steps``; infinite when every error is at rounding level."""
    pairs = [(s, e) for s, e in zip(steps, errors) if e > EXACT_FLOOR]
    if len(pairs) < 2:
        logger.info("%s: residuals at rounding level, reporting exact", check)
        order = math.inf
    else:
        order = fit_order([s for s, _ in pairs], [e for _, e in pairs])
    logger.info("%s: errors %s -> order %.3f", check, _steps(errors), order)
    return CheckRow.at_least(check, order, minimum, steps=_steps(steps), **params)


def _lindblads(config: RunConfig, minimum: int = 1) -> tuple[Operator, ...]:
    ops = parse_lindblads(config.params["preset"])
    if len(ops) < minimum:
        raise ConfigError("preset", f"needs at least {minimum} Lindblad operators")
    return ops


def _relative(diff: np.ndarray, reference: np.ndarray) -> float:
    return float(np.linalg.norm(diff) / max(1.0, float(np.linalg.norm(reference))))


def run_unravel(config: RunConfig) -> list[CheckRow]:
    """Trajectory ensemble against the Lindblad channel at each checkpoint."""
    p = config.params
    ops = _lindblads(config)
    kappa, dt, n, kind = p["kappa"], p["dt"], p["N"], p["kind"]
    duration = p["kappaT"] / kappa
    estimates = ensemble_checkpoints(
        ops,
        kind,
        kappa,
        duration,
        dt,
        n,
        seed=config.seed,
        n_checkpoints=p["checkpoints"],
        threads=config.threads,
        antithetic=p["antithetic"],
    )
    generator = lindblad_dissipator(ops)
    tolerance = UNRAVEL_SIGMAS / math.sqrt(n) + UNRAVEL_BIAS * kappa * dt
    rows = []
    for est in estimates:
        exact = channel_exp(generator, kappa * est.time)
        distance = float(np.linalg.norm(est.channel - exact))
        rows.append(
            CheckRow.at_most(
                "channel_distance", distance, tolerance, time=est.time, stderr=est.stderr
            )
        )
        rows.append(
            CheckRow.at_most(
                "mean_weight_defect",
                abs(est.mean_weight - 1.0),
                tolerance,
                time=est.time,
                weight_stderr=est.weight_stderr,
            )
        )
    biases = [ensemble_bias(ops, kind, kappa, duration, h / kappa) for h in DT_BIAS_STEPS]
    rows.append(_order_row("dt_bias_order", DT_BIAS_STEPS, biases, DT_BIAS_ORDER, kind=kind))
    return rows


def _random_cp_map(dim: int, rng: np.random.Generator, n_kraus: int = 3) -> SuperOperator:
    return sum(
        (sandwich(k, k) for k in (random_ginibre(dim, rng) for _ in range(n_kraus))),
        np.zeros((dim * dim, dim * dim), dtype=complex),
    )


def _superop_calculus_rows(
    generator: SuperOperator, kappa: float, rng: np.random.Generator
) -> list[CheckRow]:
    dim = int(round(math.sqrt(generator.shape[0])))
    maps = [_random_cp_map(dim, rng) for _ in range(RANDOM_CP_MAPS)]
    min_eig = min(is_cp(s).value for s in maps)
    involution = max(
        _relative(choi_involution(choi_involution(s)) - s, s) for s in maps
    )
    reversal = max(
        _relative(hs_adjoint(y @ x) - hs_adjoint(x) @ hs_adjoint(y), y @ x)
        for x, y in zip(maps[::2], maps[1::2])
    )
    tp_defect = max(is_tp(channel_exp(generator, kappa_t)).value for kappa_t in TP_TIMES)
    return [
        CheckRow.at_least("superop_choi_min_eigenvalue", min_eig, CHOI_EIG_FLOOR),
        CheckRow.at_most("superop_choi_involution", involution, EXACT_TOL),
        CheckRow.at_most("superop_adjoint_reversal", reversal, EXACT_TOL),
        CheckRow.at_most("superop_channel_tp_defect", tp_defect, TP_TOL),
    ]


def run_semigroup(config: RunConfig) -> list[CheckRow]:
    """Weak instruments against the channel, and the convolution group property."""
    p = config.params
    ops = _lindblads(config)
    kappa, dts = p["kappa"], p["dts"]
    kind = WeakKind(p["kind"])
    generator = lindblad_dissipator(ops)
    rows = []

    residuals = []
    for dt in dts:
        inst = WeakSpec(tuple(ops), kappa, dt, kind, p["nodes"]).build()
        residual = float(np.linalg.norm(total_operation(inst) - channel_exp(generator, kappa * dt)))
        residuals.append(residual)
        rows.append(CheckRow.at_most("weak_channel_residual", residual, kappa * dt, dt=dt))
    rows.append(_order_row("weak_channel_order", dts, residuals, WEAK_ORDER, kind=kind.value))

    pair_seed, cp_seed = spawn_seeds(config.seed, 2)
    rng = make_rng(pair_seed)
    dim = ops[0].shape[0]
    group_property = 0.0
    for _ in range(p["pairs"]):
        earlier, later = random_instrument(dim, rng), random_instrument(dim, rng)
        expected = total_operation(later) @ total_operation(earlier)
        combined = total_operation(convolve(later, earlier))
        group_property = max(group_property, _relative(combined - expected, expected))
    rows.append(
        CheckRow.at_most("convolution_group_property", group_property, EXACT_TOL, pairs=p["pairs"])
    )

    step = jump_weak(list(ops), kappa, dts[0])
    step_total = total_operation(step)
    repeat_residual = 0.0
    for n in range(1, p["repeats"] + 1):
        powered = np.linalg.matrix_power(step_total, n)
        repeated = total_operation(repeat(step, n))
        repeat_residual = max(repeat_residual, _relative(repeated - powered, powered))
    rows.append(
        CheckRow.at_most("repeat_vs_compose", repeat_residual, REPEAT_TOL, repeats=p["repeats"])
    )

    s, t = 0.3 / kappa, 0.5 / kappa
    combined = channel_exp(generator, kappa * (s + t))
    split = channel_exp(generator, kappa * s) @ channel_exp(generator, kappa * t)
    residual = _relative(split - combined, combined)
    rows.append(CheckRow.at_most("channel_semigroup", residual, EXACT_TOL))

    rows.extend(_superop_calculus_rows(generator, kappa, make_rng(cp_seed)))
    return rows


def run_dilate(config: RunConfig) -> list[CheckRow]:
    """Meter dilation of the weak instruments."""
    p = config.params
    kappa, dts, dt, cutoff = p["kappa"], p["dts"], p["dt"], p["cutoff"]
    decay = dagger(SIGMA_MINUS) @ SIGMA_MINUS
    rows = []

    no_click, click = [], []
    for step in dts:
        meter = MeterModel(kappa, step, cutoff)
        kdt = kappa * step
        k0 = jump_kraus_extract(SIGMA_MINUS, meter, 0)
        k1 = jump_kraus_extract(SIGMA_MINUS, meter, 1)
        k2 = jump_kraus_extract(SIGMA_MINUS, meter, 2)
        no_click.append(float(np.linalg.norm(k0 - mat_exp(-0.5 * kdt * decay))))
        click.append(float(np.linalg.norm(k1 - math.sqrt(kdt) * SIGMA_MINUS)))
        rows.append(CheckRow.at_most("jump_n2_norm", float(np.linalg.norm(k2)), kdt, dt=step))
    rows.append(_order_row("jump_n0_order", dts, no_click, WEAK_ORDER))
    rows.append(_order_row("jump_n1_order", dts, click, JUMP_N1_ORDER))

    meter = MeterModel(kappa, dt, cutoff)
    kdt = kappa * dt
    rows.append(
        CheckRow.at_most(
            "unitarity_defect",
            unitarity_defect(interaction_unitary(SIGMA_MINUS, meter), meter),
            UNITARITY_TOL,
            dt=dt,
        )
    )

    q = make_q_grid(meter)
    quadrature = quadrature_kraus_extract(0.5 * SIGMA_Z, meter, q)
    reference = reference_quadrature_kraus(0.5 * SIGMA_Z, meter, q)
    rows.append(
        CheckRow.at_most(
            "quadrature_weighted_l2",
            weighted_l2(quadrature, reference, q),
            QUADRATURE_L2_TOL,
            dt=dt,
        )
    )
    marginal = float(np.linalg.norm(povm_marginal(quadrature, q) - np.eye(2)))
    rows.append(CheckRow.at_most("quadrature_povm_marginal", marginal, POVM_TOL, dt=dt))

    oscillator = local_oscillator_phase(SIGMA_MINUS, p["phi"], meter)
    rows.append(
        CheckRow.at_most(
            "local_oscillator_phase", oscillator.residual, LOCAL_OSCILLATOR_TOL, phi=p["phi"]
        )
    )

    split = [
        quadrature_split_form_check(0.5 * SIGMA_X, 0.5 * SIGMA_Y, MeterModel(kappa, s, cutoff))
        for s in dts
    ]
    logger.info("split-form pointwise residuals %s", _steps([r.pointwise for r in split]))
    operation = [r.operation for r in split]
    rows.append(_order_row("split_form_operation_order", dts, operation, SPLIT_FORM_ORDER))

    dilated = total_operation(dilated_jump_instrument(SIGMA_MINUS, meter))
    weak = total_operation(jump_weak(SIGMA_MINUS, kappa, dt))
    rows.append(
        CheckRow.at_most(
            "dilation_consistency",
            float(np.linalg.norm(dilated - weak)),
            DILATION_CONSISTENCY * kdt**1.5,
            dt=dt,
        )
    )
    return rows


def run_intertwine(config: RunConfig) -> list[CheckRow]:
    """Intertwining relations between the group and its superoperator representation."""
    p = config.params
    ops = _lindblads(config)
    dim = ops[0].shape[0]
    rng = make_rng(config.seed)
    points = [RepPoint(random_invertible(dim, rng)) for _ in range(p["samples"] + 1)]
    rows = []

    translation = max(translation_intertwining_check(g, x) for g, x in zip(points, points[1:]))
    rows.append(CheckRow.at_most("translation_intertwining", translation, EXACT_TOL))
    adjoint = max(adjoint_intertwining_check(x) for x in points)
    rows.append(CheckRow.at_most("adjoint_intertwining", adjoint, EXACT_TOL))
    total = max(
        total_operation_intertwining_check(random_instrument(dim, rng), random_instrument(dim, rng))
        for _ in range(p["samples"])
    )
    rows.append(CheckRow.at_most("total_operation_intertwining", total, EXACT_TOL))

    differential = 0.0
    for op in ops:
        for x in points:
            expected = sandwich(op @ x.kraus, x.kraus) + sandwich(x.kraus, op @ x.kraus)
            differential = max(
                differential,
                float(np.linalg.norm(right_translation_generator(op) @ x.superop - expected)),
            )
    rows.append(CheckRow.at_most("differential_intertwining", differential, EXACT_TOL))

    hs = p["hs"]
    fd_errors = [
        max(differential_intertwining_check(op, x, h) for op in ops for x in points) for h in hs
    ]
    order = _order_row("finite_difference_order", hs, fd_errors, FD_ORDER - FD_ORDER_SPREAD)
    rows.append(order)
    rows.append(
        CheckRow.at_most(
            "finite_difference_order_ceiling",
            order.value,
            FD_ORDER + FD_ORDER_SPREAD,
            steps=_steps(hs),
        )
    )

    other = ops[1] if len(ops) > 1 else dagger(ops[0])
    bracket = max(lie_bracket_residual(ops[0], other, x, LIE_BRACKET_H) for x in points)
    rows.append(CheckRow.at_most("lie_bracket", bracket, LIE_BRACKET_TOL, h=LIE_BRACKET_H))

    for kind in ("jump", "diffusive"):
        generator = max(generator_intertwining_check(list(ops), x, kind) for x in points)
        rows.append(CheckRow.at_most("generator_intertwining", generator, EXACT_TOL, kind=kind))
    return rows


def run_commutative(config: RunConfig) -> list[CheckRow]:
    """The one-dimensional commutative analog: Markov operator, exact KOD and grid solve."""
    p = config.params
    ell, kappa, dt = p["ell"], p["kappa"], p["dt"]
    duration = p["kappaT"] / kappa
    rows = [
        CheckRow.at_most(
            "characteristic_eigenvalue",
            abs(
                characteristic_eigenvalue(ell, dt, kappa)
                - characteristic_eigenvalue_exact(ell, dt, kappa)
            ),
            EIGENVALUE_TOL,
            ell=ell,
        ),
        CheckRow.at_most(
            "normalized_total", abs(normalized_total(ell, dt, kappa) - 1.0), EIGENVALUE_TOL, ell=ell
        ),
        CheckRow.at_most(
            "tp_integral", abs(tp_integral(ell, duration, kappa) - 1.0), TP_INTEGRAL_TOL, ell=ell
        ),
        CheckRow.at_most(
            "heat_semigroup",
            heat_semigroup_residual(0.4 * duration, 0.6 * duration),
            HEAT_SEMIGROUP_TOL,
        ),
    ]
    points = np.linspace(-2.0, 2.0, 9)
    for label in sorted({ell, *EIGENFUNCTION_ELLS}):
        rows.append(
            CheckRow.at_most(
                "eigenfunction_residual",
                eigenfunction_residual(label, dt, kappa, points),
                EIGENFUNCTION_TOL,
                ell=label,
            )
        )

    half = exact_kod(0.5 * duration, kappa)
    composed = half.compose(half)
    whole = exact_kod(duration, kappa)
    rows.append(
        CheckRow.at_most(
            "kod_chapman_kolmogorov",
            max(abs(composed.r_support - whole.r_support), abs(composed.variance - whole.variance)),
            EXACT_TOL,
        )
    )

    t_fpk, width = p["fpk_kappaT"] / kappa, p["x_width"]
    r, x = default_grid(kappa, t_fpk)
    result = fpk_evolve(mollified_delta_grid(r, x, width), kappa, t_fpk)
    rows.append(
        CheckRow.at_most(
            "fpk_x_marginal_l1",
            fpk_x_marginal_l1(result, kappa * t_fpk + width**2),
            FPK_L1_TOL,
            x_width=width,
        )
    )
    rows.append(CheckRow.at_most("fpk_mass", abs(result.mass - 1.0), FPK_MASS_TOL))
    rows.append(CheckRow.at_most("fpk_r_mean", abs(result.r_mean() - kappa * t_fpk), FPK_MEAN_TOL))
    coarse, fine = fpk_convergence_ratio(kappa, t_fpk, width)
    order = math.log2(coarse / fine)
    rows.append(CheckRow.at_least("fpk_convergence_order", order, FPK_ORDER, x_width=width))
    return rows


def _groups(config: RunConfig) -> list[FiniteGroup]:
    table = config.params["table"]
    if table:
        try:
            return [FiniteGroup.load(table)]
        except (OSError, GroupTableError) as e:
            raise ConfigError("table", str(e)) from e
    name = config.params["group"]
    names = sorted(BUILTIN_GROUPS) if name == "all" else [name]
    return [builtin_group(n) for n in names]


def run_iga(config: RunConfig) -> list[CheckRow]:
    """Group-algebra identities on finite groups, in the defining and regular representations."""
    rows = []
    for group in _groups(config):
        reps = {"regular": regular_representation(group)}
        defining = defining_representation(group)
        if defining[0].shape[0] != group.order:
            reps = {"defining": defining, **reps}
        for rep_name, rep in reps.items():
            report = finite_identity_report(group, config.seed, rep)
            logger.info("%s, %s representation: %d identities", group.name, rep_name, len(report))
            for item in report:
                rows.append(
                    CheckRow.at_most(
                        item.name, item.residual, FINITE_GROUP_TOL, group=group.name, rep=rep_name
                    )
                )
    return rows


def _random_affine(rng: np.random.Generator) -> AffineElement:
    u, b = rng.uniform(-RANDOM_AFFINE_SPREAD, RANDOM_AFFINE_SPREAD, size=2)
    return AffineElement(float(np.exp(u)), float(b))


def run_haar(config: RunConfig) -> list[CheckRow]:
    """Haar measures, modular function and delta identities on the affine group."""
    p = config.params
    rng = make_rng(config.seed)
    g0 = AffineElement(p["a"], p["b"])
    pairs = [(_random_affine(rng), _random_affine(rng)) for _ in range(p["pairs"])]
    rows = []

    multiplicativity = max(
        abs(modular_function(x @ y) - modular_function(x) * modular_function(y))
        / modular_function(x @ y)
        for x, y in pairs
    )
    rows.append(CheckRow.at_most("modular_multiplicativity", multiplicativity, MODULAR_TOL))
    b_independence = max(
        abs(modular_function(x) - modular_function(AffineElement(x.a))) / x.a for x, _ in pairs
    )
    rows.append(CheckRow.at_most("modular_b_independence", b_independence, MODULAR_TOL))
    rows.append(
        CheckRow.at_most(
            "modular_identity", abs(modular_function(AffineElement.identity()) - 1.0), MODULAR_TOL
        )
    )
    ratio = max(
        abs(
            float(haar_density("right")(np.array(x.a)) / haar_density("left")(np.array(x.a)))
            - modular_function(x)
        )
        / modular_function(x)
        for x, _ in pairs
    )
    rows.append(CheckRow.at_most("density_ratio_is_modular", ratio, MODULAR_TOL))

    sides: tuple[tuple[Side, float], ...] = (("left", 2.0), ("right", 1.0))
    for side, expected in sides:
        exponent, _ = derive_haar_exponent(side)
        deviation = abs(exponent - expected)
        rows.append(CheckRow.at_most(f"{side}_haar_exponent", deviation, EXACT_TOL, p=exponent))
        residual = haar_invariance_check(side, g0)
        rows.append(
            CheckRow.at_most(
                f"{side}_haar_invariance", residual.invariance, HAAR_TOL, a=g0.a, b=g0.b
            )
        )
        rows.append(
            CheckRow.at_most(
                f"{side}_haar_quasi_invariance", residual.quasi_invariance, HAAR_TOL, a=g0.a, b=g0.b
            )
        )

    f_e = abs(complex(np.asarray(DELTA_TEST_FN(np.array(1.0), np.array(0.0)))))
    identities: tuple[DeltaIdentity, ...] = ("inversion", "conjugation", "translation", "trikernel")
    for which in identities:
        report = delta_identity_order(which)
        rows.append(
            CheckRow.at_least(
                f"delta_{which}_order", report.order, DELTA_ORDER, widths=_steps(report.widths)
            )
        )
        if which == "conjugation":
            expected = f_e / modular_function(CONJUGATOR)
            rows.append(
                CheckRow.at_most(
                    "delta_conjugation_factor",
                    report.residuals[-1] / expected,
                    CONJUGATION_REL_TOL,
                    width=report.widths[-1],
                )
            )

    witness = unimodularity_witness()
    rows.append(CheckRow.at_least("gelfand_witness_naive", witness.naive, WITNESS_FLOOR))
    rows.append(CheckRow.at_most("gelfand_witness_corrected", witness.corrected, WITNESS_TOL))
    rows.append(
        CheckRow.at_most("gelfand_antihomomorphism", witness.antihomomorphism, WITNESS_TOL)
    )
    return rows


def run_weakcomm(config: RunConfig) -> list[CheckRow]:
    """Weak commutativity of two diffusive Kraus operators."""
    p = config.params
    ops = _lindblads(config, minimum=2)
    kappa, dts = p["kappa"], p["dts"]
    bch = []
    for dt in dts:
        residual, size = weak_commutator_residual(
            ops[0], ops[1], math.sqrt(dt), math.sqrt(dt), kappa, dt
        )
        logger.debug("dt=%g: BCH residual %.3e, |C - 1| %.3e", dt, residual, size)
        bch.append(residual)
    rows = [_order_row("bch_order", dts, bch, BCH_ORDER)]
    ensemble = weak_commutator_ensemble(ops[0], ops[1], kappa, p["dt"], p["N"], config.seed)
    rows.append(
        CheckRow.at_most(
            "commutator_mean",
            ensemble.mean_norm,
            ENSEMBLE_SIGMAS * ensemble.stderr,
            dt=p["dt"],
            N=ensemble.n_samples,
        )
    )
    return rows


def run_kod(config: RunConfig) -> list[CheckRow]:
    """Abelian Kraus-operator density from sampled records."""
    p = config.params
    kappa, dt, n, bins = p["kappa"], p["dt"], p["N"], p["bins"]
    duration = p["kappaT"] / kappa
    scale = kappa * duration
    sample_seed, record_seed = spawn_seeds(config.seed, 2)
    first, second = sample_abelian_coordinates(kappa, duration, dt, n, sample_seed)

    full = kod_histogram(first + second, scale, scale, bins)
    l1 = kod_l1_to_gaussian(full, scale)
    rows = [CheckRow.at_most("kod_l1_to_gaussian", l1, KOD_L1_TOL, N=n, bins=bins)]
    halves = [kod_histogram(xs, 0.5 * scale, scale, bins) for xs in (first, second)]
    splice = kod_splice_l1(full, *halves)
    rows.append(CheckRow.at_most("kod_splice_l1", splice, KOD_SPLICE_TOL, N=n))

    lindblad = 0.5 * SIGMA_Z
    record = sample_record("wiener", int(round(duration / dt)), 1, dt, kappa, make_rng(record_seed))
    direct = kraus_of_record([lindblad], record).full_kraus()
    closed = abelian_kraus(lindblad, abelian_coordinates(record, kappa, lindblad))
    residual = _relative(direct - closed, closed)
    rows.append(CheckRow.at_most("abelian_kraus", residual, KOD_KRAUS_TOL))
    return rows


SUITES: dict[str, Suite] = {
    "unravel": run_unravel,
    "semigroup": run_semigroup,
    "dilate": run_dilate,
    "intertwine": run_intertwine,
    "commutative": run_commutative,
    "iga": run_iga,
    "haar": run_haar,
    "weakcomm": run_weakcomm,
    "kod": run_kod,
}


def run_suite(config: RunConfig) -> list[CheckRow]:
    rows = SUITES[config.subcommand](config)
    failed = sum(not row.passed for row in rows)
    logger.info("%s: %d checks, %d failed", config.subcommand, len(rows), failed)
    return rows
