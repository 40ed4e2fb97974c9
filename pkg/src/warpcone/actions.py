"""Finitely generated group actions on the base spaces.

Generators are concrete maps (circle rotations, orthogonal matrices,
integer torus matrices, translations, permutations).  Words are free
words over the generator alphabet: letters are signed generator slots,
+(i+1) for generator i and -(i+1) for its inverse, and equality is
equality of freely reduced letter sequences.  Group-level coincidences
(a rotation of finite order, say) live in the action, not in the word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError
from .spaces import TWO_PI, SpaceSpec, validate_points

ORTHO_TOL = 1e-12
BALL_CAP = 200_000


def reduce_letters(letters) -> tuple[int, ...]:
    """Freely reduce a letter sequence (cancel adjacent inverse pairs)."""
    out: list[int] = []
    for a in letters:
        if a == 0:
            raise DomainError("0 is not a letter")
        if out and out[-1] == -a:
            out.pop()
        else:
            out.append(int(a))
    return tuple(out)


@dataclass(frozen=True)
class Word:
    """A freely reduced word; length is the reduced letter count."""

    letters: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "letters", reduce_letters(self.letters))

    def __len__(self):
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return not self.letters

    def inverse(self) -> "Word":
        return Word(tuple(-a for a in reversed(self.letters)))

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)

    def sort_key(self):
        return (len(self.letters), tuple((abs(a), a < 0) for a in self.letters))

    def __str__(self):
        if not self.letters:
            return "e"
        return ".".join(f"g{abs(a) - 1}" + ("'" if a < 0 else "") for a in self.letters)


IDENTITY = Word(())


class Generator:
    """One generator map; subclasses implement the concrete geometry."""

    is_isometry = False

    def apply(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inverse(self) -> "Generator":
        raise NotImplementedError

    def lipschitz(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class CircleRotation(Generator):
    angle: float
    is_isometry = True

    def apply(self, pts):
        return np.mod(pts + self.angle, TWO_PI)

    def inverse(self):
        return CircleRotation(-self.angle)

    def lipschitz(self):
        return 1.0


@dataclass(frozen=True)
class SphereRotation(Generator):
    """Rotation of S^2 given by an orthogonal 3x3 matrix."""

    matrix: tuple
    is_isometry = True

    def __post_init__(self):
        m = self._m()
        if m.shape != (3, 3) or np.abs(m @ m.T - np.eye(3)).max() > ORTHO_TOL:
            raise DomainError("sphere generator matrix is not orthogonal")

    def _m(self):
        return np.asarray(self.matrix, dtype=float)

    def apply(self, pts):
        return pts @ self._m().T

    def inverse(self):
        return SphereRotation(tuple(map(tuple, self._m().T)))

    def lipschitz(self):
        return 1.0


@dataclass(frozen=True)
class TorusLinear(Generator):
    """Integer unimodular matrix acting on the flat torus."""

    matrix: tuple

    def __post_init__(self):
        m = self._m()
        if m.shape != (2, 2) or abs(abs(round(float(np.linalg.det(m)))) - 1) > 0:
            raise DomainError("torus generator matrix must be unimodular")
        if np.any(m != np.round(m)):
            raise DomainError("torus generator matrix must be integer")

    def _m(self):
        return np.asarray(self.matrix, dtype=float)

    def apply(self, pts):
        return np.mod(pts @ self._m().T, 1.0)

    def inverse(self):
        m = self._m()
        det = round(float(np.linalg.det(m)))
        inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) * det
        return TorusLinear(tuple(map(tuple, inv)))

    def lipschitz(self):
        return float(np.linalg.norm(self._m(), 2))


@dataclass(frozen=True)
class TorusTranslation(Generator):
    vector: tuple
    is_isometry = True

    def apply(self, pts):
        return np.mod(pts + np.asarray(self.vector, dtype=float), 1.0)

    def inverse(self):
        return TorusTranslation(tuple(-v for v in self.vector))

    def lipschitz(self):
        return 1.0


@dataclass(frozen=True)
class FinitePermutation(Generator):
    perm: tuple
    is_isometry = True

    def __post_init__(self):
        p = np.asarray(self.perm, dtype=np.int64)
        if sorted(p.tolist()) != list(range(len(p))):
            raise DomainError("permutation must be a bijection of 0..n-1")

    def apply(self, pts):
        return np.asarray(self.perm, dtype=np.int64)[pts]

    def inverse(self):
        return FinitePermutation(tuple(int(i) for i in np.argsort(np.asarray(self.perm))))

    def lipschitz(self):
        return 1.0


@dataclass(frozen=True)
class GroupAction:
    """A finitely generated group acting on a base space.

    The effective generating set is always symmetric: wormholes and word
    alphabets range over the generators and their inverses.
    """

    space: SpaceSpec
    generators: tuple
    name: str = ""

    def __post_init__(self):
        for g in self.generators:
            if not isinstance(g, Generator):
                raise DomainError(f"not a generator: {g!r}")

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    def letters(self) -> list[int]:
        """The symmetric alphabet: +(i+1), -(i+1) per generator i."""
        out = []
        for i in range(len(self.generators)):
            out.extend([i + 1, -(i + 1)])
        return out

    def generator_for_letter(self, letter: int) -> Generator:
        g = self.generators[abs(letter) - 1]
        return g if letter > 0 else g.inverse()

    def apply_letter(self, letter: int, pts: np.ndarray) -> np.ndarray:
        return self.generator_for_letter(letter).apply(pts)


def apply(action: GroupAction, word: Word, p):
    """Apply a word to a point (or point batch), rightmost letter first."""
    space = action.space
    single = space.kind in ("circle", "finite-set") and np.ndim(p) == 0 \
        or space.kind in ("torus2", "sphere2") and np.ndim(p) == 1
    pts = validate_points(space, [p] if single and space.kind in ("circle", "finite-set") else p)
    for letter in reversed(word.letters):
        if not 1 <= abs(letter) <= len(action.generators):
            raise DomainError(f"letter {letter} indexes no generator")
        pts = action.apply_letter(letter, pts)
    pts = validate_points(space, pts)
    if single:
        return pts[0] if space.kind in ("circle", "finite-set") else pts[0]
    return pts


def enumerate_ball(action: GroupAction, max_length: int, cap: int = BALL_CAP) -> list[Word]:
    """All distinct freely reduced words of length <= max_length.

    Deterministic order: by length, then lexicographically by letters
    (generator slot first, plain before inverse).
    """
    if max_length < 0:
        raise DomainError("ball radius must be >= 0")
    alphabet = sorted(action.letters(), key=lambda a: (abs(a), a < 0))
    words = [IDENTITY]
    frontier = [()]
    for _ in range(max_length):
        nxt = []
        for w in frontier:
            for a in alphabet:
                if w and w[-1] == -a:
                    continue
                nxt.append(w + (a,))
        if len(words) + len(nxt) > cap:
            raise ResourceError(f"word ball exceeds cap {cap}")
        frontier = nxt
        words.extend(Word(w) for w in frontier)
    return words


def lipschitz_estimate(action: GroupAction, gen_index: int) -> float:
    """Lipschitz constant of one generator: exactly 1 for isometries,
    the largest singular value for linear torus maps."""
    if not 0 <= gen_index < len(action.generators):
        raise DomainError(f"no generator {gen_index}")
    g = action.generators[gen_index]
    if g.is_isometry:
        return 1.0
    return g.lipschitz()


def max_lipschitz(action: GroupAction) -> float:
    """Largest Lipschitz constant over the symmetric generating set."""
    best = 1.0
    for i in range(len(action.generators)):
        best = max(best, lipschitz_estimate(action, i),
                   action.generators[i].inverse().lipschitz())
    return best


# The two rotations by arccos(3/5) about the x- and z-axes generate a free
# subgroup of SO(3).  Entries are multiples of 1/5, so a reduced word of
# length k is exactly the integer matrix product below divided by 5^k;
# freeness checks compare those integer products with 5^k * identity.
FREE_SO3_X = ((5, 0, 0), (0, 3, -4), (0, 4, 3))
FREE_SO3_Z = ((3, -4, 0), (4, 3, 0), (0, 0, 5))


def free_so3_word_matrix(word: Word):
    """Exact integer matrix of a word in the free SO(3) pair.

    Returns (M, k) with the word's rotation equal to M / 5**k.
    """
    mats = {
        1: np.array(FREE_SO3_X, dtype=object),
        2: np.array(FREE_SO3_Z, dtype=object),
    }
    mats[-1] = mats[1].T
    mats[-2] = mats[2].T
    out = np.eye(3, dtype=object)
    for letter in word.letters:
        if abs(letter) not in (1, 2):
            raise DomainError("word does not live in the free SO(3) pair")
        out = out @ mats[letter]
    return out, len(word.letters)
