"""
Finite groups and their group algebras.

On a finite group the counting measure is both left and right invariant, so
every identity of the instrumental-group algebra that assumes unimodularity
holds exactly here: convolution, left translations, left-convolution
ultraoperators, the Gelfand and Cartan involutions, and the superoperator
representation ``Z_f = sum_x conj(f(x)) O_x``.

Elements are integer indices into the multiplication table,
``table[x, y] = index of x*y``.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Hashable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
import numpy.typing as npt

from .exceptions import GroupTableError, InvalidInputError, RepresentationError
from .operators import SIGMA_X, SIGMA_Y, SIGMA_Z, Operator, SeedLike, make_rng
from .superop import SuperOperator, compose, hs_adjoint, identity_superop, sandwich

IndexArray = npt.NDArray[np.int64]
ComplexArray = npt.NDArray[np.complex128]

# Residual allowed when verifying that a map into matrices is a homomorphism
REP_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """
    Group given by its multiplication table, verified exhaustively on construction.

    Attributes:
        name: Display name.
        table: ``n x n`` array, ``table[x, y]`` is the index of ``x*y``.
        labels: Optional element names.
    """

    name: str
    table: IndexArray
    labels: tuple[str, ...] = ()
    identity: int = field(init=False)
    inverses: IndexArray = field(init=False)

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.int64)
        n = table.shape[0] if table.ndim == 2 else 0
        if n == 0 or table.shape != (n, n):
            raise GroupTableError(
                f"multiplication table must be a non-empty square array, got {table.shape}"
            )
        if table.min() < 0 or table.max() >= n:
            raise GroupTableError("multiplication table is not closed")
        # associativity: (xy)z == x(yz) for all triples
        if not np.array_equal(table[table, :], table[:, table]):
            raise GroupTableError("multiplication table is not associative")
        identities = [e for e in range(n) if np.array_equal(table[e], np.arange(n))]
        if not identities or not np.array_equal(table[:, identities[0]], np.arange(n)):
            raise GroupTableError("multiplication table has no identity")
        e = identities[0]
        inverses = np.argmax(table == e, axis=1)
        if not np.all(table[np.arange(n), inverses] == e) or not np.all(
            table[inverses, np.arange(n)] == e
        ):
            raise GroupTableError("some element has no inverse")
        if self.labels and len(self.labels) != n:
            raise GroupTableError(f"expected {n} labels, got {len(self.labels)}")
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "identity", e)
        object.__setattr__(self, "inverses", inverses.astype(np.int64))

    @property
    def order(self) -> int:
        return int(self.table.shape[0])

    def mul(self, x: int, y: int) -> int:
        return int(self.table[x, y])

    def inv(self, x: int) -> int:
        return int(self.inverses[x])

    def index(self, label: str) -> int:
        """Index of the element named ``label``."""
        try:
            return self.labels.index(label)
        except ValueError:
            raise InvalidInputError(f"{self.name} has no element '{label}'") from None

    @classmethod
    def from_function(
        cls,
        name: str,
        elements: Sequence[Hashable],
        mul: Callable[[Hashable, Hashable], Hashable],
        labels: Sequence[str] | None = None,
    ) -> FiniteGroup:
        """Build the table from a product on explicit elements."""
        position = {el: i for i, el in enumerate(elements)}
        n = len(elements)
        table = np.empty((n, n), dtype=np.int64)
        for (i, x), (j, y) in itertools.product(enumerate(elements), repeat=2):
            try:
                table[i, j] = position[mul(x, y)]
            except KeyError:
                raise GroupTableError(f"product of {x!r} and {y!r} is not an element") from None
        names = tuple(labels) if labels is not None else tuple(str(el) for el in elements)
        return cls(name, table, names)

    @classmethod
    def from_text(cls, text: str, name: str = "table") -> FiniteGroup:
        """
        Parse the plain-text format: first line ``n``, then ``n`` lines of ``n`` indices.

        Raises:
            GroupTableError: If the text is malformed or not a group.
        """
        lines = [line.split() for line in text.strip().splitlines() if line.strip()]
        try:
            n = int(lines[0][0])
            rows = [[int(v) for v in row] for row in lines[1:]]
        except (IndexError, ValueError) as e:
            raise GroupTableError(f"malformed group table text: {e}") from e
        if len(lines[0]) != 1 or len(rows) != n or any(len(row) != n for row in rows):
            raise GroupTableError(f"expected {n} rows of {n} indices after the order line")
        return cls(name, np.array(rows, dtype=np.int64))

    @classmethod
    def load(cls, path: str | Path) -> FiniteGroup:
        p = Path(path)
        return cls.from_text(p.read_text(), name=p.stem)

    def to_text(self) -> str:
        rows = "\n".join(" ".join(str(v) for v in row) for row in self.table)
        return f"{self.order}\n{rows}\n"


def cyclic_group(n: int) -> FiniteGroup:
    elements = list(range(n))
    return FiniteGroup.from_function(
        f"Z{n}", elements, lambda x, y: (x + y) % n  # type: ignore[operator]
    )


def symmetric_group_s3() -> FiniteGroup:
    """Permutations of (0, 1, 2), labelled by their images, composed as functions."""
    perms = list(itertools.permutations(range(3)))
    return FiniteGroup.from_function(
        "S3",
        perms,
        lambda p, q: tuple(p[q[i]] for i in range(3)),  # type: ignore[index]
        labels=["".join(map(str, p)) for p in perms],
    )


# Quaternion units: product table of 1, i, j, k without sign
_UNIT_PRODUCTS = {
    ("1", "1"): (1, "1"), ("1", "i"): (1, "i"), ("1", "j"): (1, "j"), ("1", "k"): (1, "k"),
    ("i", "1"): (1, "i"), ("i", "i"): (-1, "1"), ("i", "j"): (1, "k"), ("i", "k"): (-1, "j"),
    ("j", "1"): (1, "j"), ("j", "i"): (-1, "k"), ("j", "j"): (-1, "1"), ("j", "k"): (1, "i"),
    ("k", "1"): (1, "k"), ("k", "i"): (1, "j"), ("k", "j"): (-1, "i"), ("k", "k"): (-1, "1"),
}  # fmt: skip


def quaternion_group() -> FiniteGroup:
    """Q8 with elements ``(sign, unit)``, labelled ``1, -1, i, -i, j, -j, k, -k``."""
    elements = [(s, u) for u in "1ijk" for s in (1, -1)]

    def mul(x: Hashable, y: Hashable) -> Hashable:
        (sx, ux), (sy, uy) = x, y  # type: ignore[misc]
        sign, unit = _UNIT_PRODUCTS[(ux, uy)]
        return (sx * sy * sign, unit)

    labels = [("" if s > 0 else "-") + u for s, u in elements]
    return FiniteGroup.from_function("Q8", elements, mul, labels)


BUILTIN_GROUPS: dict[str, Callable[[], FiniteGroup]] = {
    "z2": lambda: cyclic_group(2),
    "s3": symmetric_group_s3,
    "q8": quaternion_group,
}


def builtin_group(name: str) -> FiniteGroup:
    try:
        return BUILTIN_GROUPS[name.lower()]()
    except KeyError:
        raise InvalidInputError(
            f"Unknown group '{name}'. Choose from {', '.join(sorted(BUILTIN_GROUPS))}"
        ) from None


@dataclass(frozen=True, eq=False)
class GroupAlgebraElement:
    """Complex function on a finite group, stored densely by element index."""

    group: FiniteGroup
    coefficients: ComplexArray

    def __post_init__(self) -> None:
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.shape != (self.group.order,):
            raise InvalidInputError(
                f"expected {self.group.order} coefficients, got shape {coeffs.shape}"
            )
        object.__setattr__(self, "coefficients", coeffs)

    def __add__(self, other: GroupAlgebraElement) -> GroupAlgebraElement:
        _check_same_group(self, other)
        return GroupAlgebraElement(self.group, self.coefficients + other.coefficients)

    def __mul__(self, scalar: complex) -> GroupAlgebraElement:
        return GroupAlgebraElement(self.group, scalar * self.coefficients)

    __rmul__ = __mul__

    def __matmul__(self, other: GroupAlgebraElement) -> GroupAlgebraElement:
        """``g @ f`` is the convolution ``g * f``."""
        return convolve_fg(self, other)

    def distance(self, other: GroupAlgebraElement) -> float:
        return float(np.max(np.abs(self.coefficients - other.coefficients), initial=0.0))


def _check_same_group(*elements: GroupAlgebraElement) -> None:
    first = elements[0].group
    for el in elements[1:]:
        if el.group is not first and not np.array_equal(el.group.table, first.table):
            raise InvalidInputError(f"group mismatch: {first.name} vs {el.group.name}")


def delta(group: FiniteGroup, x: int | None = None) -> GroupAlgebraElement:
    """Indicator of ``x`` (the identity by default)."""
    coeffs = np.zeros(group.order, dtype=complex)
    coeffs[group.identity if x is None else x] = 1.0
    return GroupAlgebraElement(group, coeffs)


def uniform(group: FiniteGroup) -> GroupAlgebraElement:
    return GroupAlgebraElement(group, np.full(group.order, 1.0 / group.order, dtype=complex))


def random_element(group: FiniteGroup, rng: np.random.Generator) -> GroupAlgebraElement:
    coeffs = rng.standard_normal(group.order) + 1j * rng.standard_normal(group.order)
    return GroupAlgebraElement(group, coeffs)


def convolve_fg(g: GroupAlgebraElement, f: GroupAlgebraElement) -> GroupAlgebraElement:
    """``(g*f)(z) = sum_y g(y) f(y^-1 z)``."""
    _check_same_group(g, f)
    grp = g.group
    # shifted[y, z] = index of y^-1 z
    shifted = grp.table[grp.inverses, :]
    return GroupAlgebraElement(grp, g.coefficients @ f.coefficients[shifted])


def left_translation_matrix(group: FiniteGroup, a: int) -> npt.NDArray[np.float64]:
    """Matrix of ``f -> f(a^-1 .)``, a permutation matrix."""
    n = group.order
    m = np.zeros((n, n))
    m[np.arange(n), group.table[group.inv(a), :]] = 1.0
    return m


def kolmogorov_adjoint(matrix: npt.ArrayLike) -> npt.NDArray[np.complex128]:
    """Adjoint with respect to the counting-measure inner product."""
    return np.conj(np.asarray(matrix, dtype=complex)).T


def left_convolution_ultraop(f: GroupAlgebraElement) -> npt.NDArray[np.complex128]:
    """``sum_y f(y) L_y``; its action on ``h`` is ``f * h``."""
    grp = f.group
    return sum(
        (f.coefficients[y] * left_translation_matrix(grp, y) for y in range(grp.order)),
        np.zeros((grp.order, grp.order), dtype=complex),
    )


def gelfand(f: GroupAlgebraElement) -> GroupAlgebraElement:
    """``f^(x) = conj(f(x^-1))``."""
    return GroupAlgebraElement(f.group, np.conj(f.coefficients[f.group.inverses]))


def check_dagger_map(group: FiniteGroup, dagger_map: npt.ArrayLike) -> IndexArray:
    """
    Validate a dagger map: an involutive anti-automorphism ``(xy)^dagger = y^dagger x^dagger``.

    Raises:
        InvalidInputError: If the map is not a permutation, not involutive, or
            does not reverse products.
    """
    dm = np.asarray(dagger_map, dtype=np.int64)
    n = group.order
    if dm.shape != (n,) or sorted(dm.tolist()) != list(range(n)):
        raise InvalidInputError("dagger map must be a permutation of the group elements")
    if not np.array_equal(dm[dm], np.arange(n)):
        raise InvalidInputError("dagger map is not involutive")
    if not np.array_equal(dm[group.table], group.table[dm[:, None], dm[None, :]].T):
        raise InvalidInputError("dagger map does not reverse products")
    return dm


def cartan(f: GroupAlgebraElement, dagger_map: npt.ArrayLike | None = None) -> GroupAlgebraElement:
    """
    ``f^dagger(x) = conj(f(x^dagger))``.

    With no ``dagger_map`` the inverse is used, which is what ``x^dagger`` is
    for every unitary representation; the two involutions then coincide.
    """
    grp = f.group
    dm = grp.inverses if dagger_map is None else check_dagger_map(grp, dagger_map)
    return GroupAlgebraElement(grp, np.conj(f.coefficients[dm]))


Representation = Sequence[Operator]


def check_representation(group: FiniteGroup, rep: Representation) -> float:
    """
    Largest ``||K_x K_y - K_xy||`` over the whole table.

    Raises:
        RepresentationError: If it exceeds 1e-10.
    """
    if len(rep) != group.order:
        raise InvalidInputError(f"representation needs {group.order} matrices, got {len(rep)}")
    mats = np.stack([np.asarray(k, dtype=complex) for k in rep])
    products = np.einsum("xab,ybc->xyac", mats, mats)
    residual = float(np.max(np.abs(products - mats[group.table])))
    if residual > REP_TOL:
        raise RepresentationError(residual)
    return residual


def dagger_map_from_rep(group: FiniteGroup, rep: Representation) -> IndexArray:
    """Index of ``K_x^dagger`` among the representation matrices, for every ``x``."""
    mats = np.stack([np.asarray(k, dtype=complex) for k in rep])
    daggers = np.conj(mats).transpose(0, 2, 1)
    dist = np.abs(daggers[:, None] - mats[None, :]).max(axis=(2, 3))
    dm = np.argmin(dist, axis=1)
    if np.any(dist[np.arange(group.order), dm] > REP_TOL):
        raise RepresentationError(float(dist[np.arange(group.order), dm].max()))
    return check_dagger_map(group, dm)


def iga_superop_rep(f: GroupAlgebraElement, rep: Representation) -> SuperOperator:
    """
    ``Z_f = sum_x conj(f(x)) sandwich(K_x, K_x)``.

    Raises:
        RepresentationError: If ``rep`` is not a homomorphism.
    """
    check_representation(f.group, rep)
    d = np.asarray(rep[0]).shape[0]
    return sum(
        (np.conj(c) * sandwich(k, k) for c, k in zip(f.coefficients, rep)),
        np.zeros((d * d, d * d), dtype=complex),
    )


def regular_representation(group: FiniteGroup) -> list[Operator]:
    """Left translations as unitary matrices."""
    return [left_translation_matrix(group, x).astype(complex) for x in range(group.order)]


def sign_representation(group: FiniteGroup) -> list[Operator]:
    """One-dimensional sign character of S3."""
    if group.name != "S3":
        raise InvalidInputError("the sign representation is provided for S3 only")
    signs = []
    for label in group.labels:
        perm = [int(c) for c in label]
        inversions = sum(perm[i] > perm[j] for i in range(3) for j in range(i + 1, 3))
        signs.append(np.array([[(-1.0) ** inversions]], dtype=complex))
    return signs


def s3_standard_representation(group: FiniteGroup) -> list[Operator]:
    """Two-dimensional irreducible representation of S3 on the plane orthogonal to (1, 1, 1)."""
    if group.name != "S3":
        raise InvalidInputError("the standard representation is provided for S3 only")
    basis = np.array([[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]]).T
    basis /= np.linalg.norm(basis, axis=0)
    mats = []
    for label in group.labels:
        perm = [int(c) for c in label]
        p = np.zeros((3, 3))
        p[perm, np.arange(3)] = 1.0
        mats.append((basis.T @ p @ basis).astype(complex))
    return mats


def q8_spin_representation(group: FiniteGroup) -> list[Operator]:
    """Q8 inside SU(2): ``i -> -i sigma_x``, ``j -> -i sigma_y``, ``k -> -i sigma_z``."""
    if group.name != "Q8":
        raise InvalidInputError("the spin representation is provided for Q8 only")
    units = {
        "1": np.eye(2, dtype=complex),
        "i": -1j * SIGMA_X,
        "j": -1j * SIGMA_Y,
        "k": -1j * SIGMA_Z,
    }
    return [
        (-1 if label.startswith("-") else 1) * units[label.lstrip("-")] for label in group.labels
    ]


def defining_representation(group: FiniteGroup) -> list[Operator]:
    """A faithful unitary representation of each built-in group."""
    if group.name == "S3":
        return s3_standard_representation(group)
    if group.name == "Q8":
        return q8_spin_representation(group)
    if group.name == "Z2":
        return [np.array([[1.0]], dtype=complex), np.array([[-1.0]], dtype=complex)]
    return regular_representation(group)


def finite_delta_identity_check(
    group: FiniteGroup, which: str, rng: np.random.Generator
) -> float:
    """
    Largest residual of a delta identity with ``delta`` the indicator of the identity.

    ``which`` is one of ``inversion``, ``conjugation``, ``translation``,
    ``trikernel``; each is checked at every group element.
    """
    n = group.order
    d = delta(group).coefficients
    f = random_element(group, rng).coefficients
    g = random_element(group, rng).coefficients
    table, inv = group.table, group.inverses
    if which == "inversion":
        return float(np.max(np.abs(d[inv] - d)))
    if which == "conjugation":
        # delta(a x a^-1) = delta(x) / Delta(a), and Delta = 1
        conj_idx = table[table, inv[:, None]]
        return float(np.max(np.abs(d[conj_idx] - d[None, :])))
    if which == "translation":
        # sum_x delta(x0^-1 x) f(x) = f(x0)
        sums = d[table[inv, :]] @ f
        return float(np.max(np.abs(sums - f)))
    if which == "trikernel":
        # sum_{y,x} delta((y x)^-1 z) g(y) f(x) = (g*f)(z)
        yx_inv = inv[table]
        kernel = d[table[yx_inv[:, :, None], np.arange(n)[None, None, :]]]
        lhs = np.einsum("yxz,y,x->z", kernel, g, f)
        rhs = g @ f[table[inv, :]]
        return float(np.max(np.abs(lhs - rhs)))
    raise InvalidInputError(
        f"unknown identity '{which}' (use inversion, conjugation, translation or trikernel)"
    )


class IdentityResidual(NamedTuple):
    """Largest absolute deviation of one group-algebra identity."""

    name: str
    residual: float


DELTA_IDENTITIES = ("inversion", "conjugation", "translation", "trikernel")


def finite_identity_report(
    group: FiniteGroup,
    seed: SeedLike = None,
    rep: Representation | None = None,
) -> list[IdentityResidual]:
    """
    Evaluate the full group-algebra identity suite on random elements.

    Every residual is exact up to rounding on a finite group.
    """
    rng = make_rng(seed)
    rep = defining_representation(group) if rep is None else rep
    check_representation(group, rep)
    n = group.order
    f, g, h = (random_element(group, rng) for _ in range(3))
    e = delta(group)
    rows: list[IdentityResidual] = []

    def add(name: str, value: float) -> None:
        rows.append(IdentityResidual(name, float(value)))

    add("convolution_unit", max((e @ f).distance(f), (f @ e).distance(f)))
    add("convolution_associativity", ((h @ g) @ f).distance(h @ (g @ f)))

    translations = np.stack([left_translation_matrix(group, a) for a in range(n)])
    products = np.einsum("aij,bjk->abik", translations, translations)
    add("translation_homomorphism", np.max(np.abs(products - translations[group.table])))
    add("translation_stochastic", np.max(np.abs(translations.sum(axis=1) - 1.0)))
    add(
        "translation_kolmogorov_adjoint",
        np.max(np.abs(translations.transpose(0, 2, 1) - translations[group.inverses])),
    )

    zf, zg = left_convolution_ultraop(f), left_convolution_ultraop(g)
    add("ultraop_homomorphism", np.max(np.abs(zg @ zf - left_convolution_ultraop(g @ f))))
    add("ultraop_action", np.max(np.abs(zf @ h.coefficients - (f @ h).coefficients)))
    add(
        "ultraop_gelfand_representation",
        np.max(np.abs(kolmogorov_adjoint(zf) - left_convolution_ultraop(gelfand(f)))),
    )

    dagger_map = dagger_map_from_rep(group, rep)
    add("gelfand_involutive", gelfand(gelfand(f)).distance(f))
    add("gelfand_antihomomorphism", gelfand(g @ f).distance(gelfand(f) @ gelfand(g)))
    add(
        "cartan_antihomomorphism",
        cartan(g @ f, dagger_map).distance(cartan(f, dagger_map) @ cartan(g, dagger_map)),
    )
    add("cartan_equals_gelfand", cartan(f, dagger_map).distance(gelfand(f)))

    sf, sg = iga_superop_rep(f, rep), iga_superop_rep(g, rep)
    add("superop_homomorphism", np.max(np.abs(compose(sg, sf) - iga_superop_rep(g @ f, rep))))
    add(
        "superop_cartan_representation",
        np.max(np.abs(hs_adjoint(sf) - iga_superop_rep(cartan(f, dagger_map), rep))),
    )
    d = np.asarray(rep[0]).shape[0]
    add("superop_unit", np.max(np.abs(iga_superop_rep(e, rep) - identity_superop(d))))

    for which in DELTA_IDENTITIES:
        add(f"delta_{which}", finite_delta_identity_check(group, which, rng))
    return rows
