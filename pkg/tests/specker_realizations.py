"""Orthogonal realizations of the Specker bug in R^3.

The center context {4, 13, 10} is taken as the standard basis; atoms 3, 5
rotate by ``a`` in the plane orthogonal to 4, atoms 9, 11 by ``b`` in the plane
orthogonal to 10. Every other vector is then forced by cross products. Up to
a global rotation and signs this covers all real realizations.
"""

import numpy as np
from scipy.optimize import least_squares

from qck.cloud import QuantumCloud


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def realization(a: float, b: float) -> dict[str, np.ndarray]:
    ca, sa, cb, sb = np.cos(a), np.sin(a), np.cos(b), np.sin(b)
    v = {
        "4": np.array([1.0, 0, 0]),
        "13": np.array([0, 1.0, 0]),
        "10": np.array([0, 0, 1.0]),
        "3": np.array([0, ca, sa]),
        "5": np.array([0, -sa, ca]),
        "11": np.array([cb, sb, 0]),
        "9": np.array([-sb, cb, 0]),
    }
    v["1"] = unit(np.cross(v["3"], v["11"]))
    v["7"] = unit(np.cross(v["5"], v["9"]))
    v["2"] = unit(np.cross(v["1"], v["3"]))
    v["12"] = unit(np.cross(v["1"], v["11"]))
    v["6"] = unit(np.cross(v["5"], v["7"]))
    v["8"] = unit(np.cross(v["7"], v["9"]))
    return v


def search(cloud: QuantumCloud, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Independent route: least-squares on orthogonality and unit-norm residuals from a random start."""
    ids = cloud.atom_ids
    pairs = [(ids.index(u), ids.index(w)) for c in cloud.contexts for i, u in enumerate(c.atoms) for w in c.atoms[i + 1 :]]

    def residuals(x):
        m = x.reshape(len(ids), 3)
        ortho = [m[i] @ m[j] for i, j in pairs]
        norms = [m[i] @ m[i] - 1 for i in range(len(ids))]
        return np.array(ortho + norms)

    sol = least_squares(residuals, rng.normal(size=3 * len(ids)), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    m = sol.x.reshape(len(ids), 3)
    return {a: unit(m[i]) for i, a in enumerate(ids)}
