"""Canned scenario actions spanning the hypothesis combinations:
trivial group, transitive cyclic on a finite set, irrational isometric
rotation, hyperbolic toral automorphism (Lipschitz non-isometric), and
the free rotation pair on the sphere."""

from __future__ import annotations

import math

import numpy as np

from .actions import (CircleRotation, FinitePermutation, GroupAction,
                      SphereRotation, TorusLinear, TorusTranslation,
                      FREE_SO3_X, FREE_SO3_Z)
from .errors import DomainError
from .spaces import SpaceSpec

IRRATIONAL_ANGLE = 2.0 * math.pi * (math.sqrt(2.0) - 1.0)
CAT_MATRIX = ((2, 1), (1, 1))


def trivial_circle():
    return SpaceSpec("circle"), GroupAction(SpaceSpec("circle"), (), name="trivial-circle")


def cyclic_finite(n: int = 5):
    space = SpaceSpec("finite-set", size=n)
    perm = tuple((i + 1) % n for i in range(n))
    return space, GroupAction(space, (FinitePermutation(perm),), name=f"cyclic-{n}")


def cyclic8_circle():
    """Z acting on the circle by the order-8 rotation; on the 8-node net
    every wormhole lands exactly on a node."""
    space = SpaceSpec("circle")
    return space, GroupAction(space, (CircleRotation(2.0 * math.pi / 8.0),), name="cyclic8")


def irrational_rotation():
    space = SpaceSpec("circle")
    return space, GroupAction(space, (CircleRotation(IRRATIONAL_ANGLE),),
                              name="irrational-rotation")


def cat_map():
    space = SpaceSpec("torus2")
    return space, GroupAction(space, (TorusLinear(CAT_MATRIX),), name="cat-map")


def free_so3():
    space = SpaceSpec("sphere2")
    gx = SphereRotation(tuple(tuple(x / 5.0 for x in row) for row in FREE_SO3_X))
    gz = SphereRotation(tuple(tuple(x / 5.0 for x in row) for row in FREE_SO3_Z))
    return space, GroupAction(space, (gx, gz), name="free-so3")


BUILDERS = {
    "trivial-circle": trivial_circle,
    "cyclic8": cyclic8_circle,
    "irrational-rotation": irrational_rotation,
    "cat-map": cat_map,
    "free-so3": free_so3,
}


def build_scenario(name: str, **params):
    """Look up a canned scenario by name; returns (space, action)."""
    if name.startswith("cyclic-finite"):
        return cyclic_finite(int(params.get("n", 5)))
    if name not in BUILDERS:
        known = ", ".join(sorted(BUILDERS) + ["cyclic-finite"])
        raise DomainError(f"unknown scenario {name!r} (known: {known})")
    return BUILDERS[name]()


def parse_action(space: SpaceSpec, spec: dict) -> GroupAction:
    """Build an action from a config dict: a canned name or inline
    generator descriptions (matrices/angles/permutations as arrays)."""
    if "name" in spec and spec["name"] in BUILDERS:
        sp, action = BUILDERS[spec["name"]]()
        if sp.kind != space.kind:
            raise DomainError(
                f"action {spec['name']!r} lives on {sp.kind}, config space is {space.kind}")
        return action
    if spec.get("name") == "trivial":
        return GroupAction(space, (), name="trivial")
    gens = []
    for i, g in enumerate(spec.get("generators", [])):
        kind = g.get("kind")
        if kind == "circle-rotation":
            gens.append(CircleRotation(float(g["angle"])))
        elif kind == "sphere-matrix":
            gens.append(SphereRotation(tuple(map(tuple, np.asarray(g["matrix"], dtype=float)))))
        elif kind == "torus-matrix":
            gens.append(TorusLinear(tuple(map(tuple, np.asarray(g["matrix"])))))
        elif kind == "torus-translation":
            gens.append(TorusTranslation(tuple(float(x) for x in g["vector"])))
        elif kind == "permutation":
            gens.append(FinitePermutation(tuple(int(x) for x in g["perm"])))
        else:
            raise DomainError(f"action.generators[{i}].kind: unknown kind {kind!r}")
    return GroupAction(space, tuple(gens), name=spec.get("name", "custom"))
