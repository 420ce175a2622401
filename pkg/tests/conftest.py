"""Shared model specs for the test suite.

The three families below match the shipped config files; tests build
them directly so they do not depend on the working directory.
"""

import numpy as np
import pytest

from resokam.model import build_model


def iso_spec(radius=1.0, center=(0.0, 0.0), r=0.25):
    return {
        "family": "isotropic_quadratic",
        "s": [1.0] * len(center),
        "r": r,
        "domain": {"kind": "ball", "bounds": list(center) + [radius]},
    }


def aniso_spec():
    return {
        "family": "anisotropic_quadratic",
        "Q": [[2.0, 0.5], [0.5, 1.0]],
        "s": [1.0, 1.0],
        "r": 0.25,
        "domain": {"kind": "ball", "bounds": [0.0, 0.0, 1.0]},
    }


def quartic_spec(c=0.1):
    return {
        "family": "quartic",
        "c": c,
        "s": [1.0, 1.0],
        "r": 0.25,
        "domain": {"kind": "ball", "bounds": [0.0, 0.0, 1.0]},
    }


@pytest.fixture(scope="session")
def iso_model():
    return build_model(iso_spec())


@pytest.fixture(scope="session")
def aniso_model():
    return build_model(aniso_spec())


@pytest.fixture(scope="session")
def quartic_model():
    return build_model(quartic_spec())


def as_array(rows):
    return np.asarray(rows, dtype=float)
