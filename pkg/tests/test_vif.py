"""Variance inflation factors and iterative pruning.

Closed-form oracle: with two standardized predictors of sample
correlation rho, both VIFs equal 1 / (1 - rho^2).
"""

import numpy as np
import pytest

from forkgarden.stats import DesignMatrix, vif_prune, vif_values


def two_predictor_design(rho, n=400, seed=0):
    rng = np.random.default_rng(seed)
    z1 = rng.normal(size=n)
    z2 = rho * z1 + np.sqrt(1.0 - rho * rho) * rng.normal(size=n)
    # Force the sample correlation to be exactly rho on centered data.
    z1 = (z1 - z1.mean()) / z1.std()
    z2 = z2 - z2.mean()
    z2 -= (z2 @ z1) / n * z1  # orthogonalize
    z2 = z2 / z2.std()
    x2 = rho * z1 + np.sqrt(1.0 - rho * rho) * z2
    return DesignMatrix(
        ["const", "x1", "x2"], np.column_stack([np.ones(n), z1, x2])
    ), rho


@pytest.mark.parametrize("rho", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
def test_two_predictor_closed_form(rho):
    X, r = two_predictor_design(rho)
    expected = 1.0 / (1.0 - r * r)
    vifs = vif_values(X)
    assert set(vifs) == {"x1", "x2"}
    for name in ("x1", "x2"):
        assert abs(vifs[name] - expected) <= 1e-8 * expected


def test_orthogonal_predictors_have_unit_vif():
    X, _ = two_predictor_design(0.0)
    vifs = vif_values(X)
    for v in vifs.values():
        assert v == pytest.approx(1.0, abs=1e-10)


def test_duplicate_column_is_infinite():
    x = np.random.default_rng(1).normal(size=50)
    X = DesignMatrix(
        ["const", "a", "b"], np.column_stack([np.ones(50), x, x.copy()])
    )
    vifs = vif_values(X)
    assert vifs["a"] == np.inf
    assert vifs["b"] == np.inf


def test_const_never_scored():
    X, _ = two_predictor_design(0.5)
    assert "const" not in vif_values(X)


def test_prune_removes_worst_first():
    # x3 is built from x1 + x2 plus slack, so it carries the highest VIF;
    # it must be the (only) column removed.
    rng = np.random.default_rng(7)
    n = 300
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    x3 = x1 + x2 + 0.05 * rng.normal(size=n)
    X = DesignMatrix(
        ["const", "x1", "x2", "x3"],
        np.column_stack([np.ones(n), x1, x2, x3]),
    )
    pruned, dropped = vif_prune(X, threshold=5.0)
    assert dropped == ("x3",)
    assert pruned.names == ("const", "x1", "x2")
    assert all(v < 5.0 for v in vif_values(pruned).values())


def test_prune_tie_breaks_toward_later_column():
    # Exact duplicates give identical (infinite) VIFs: the later column goes.
    x = np.random.default_rng(2).normal(size=80)
    z = np.random.default_rng(3).normal(size=80)
    X = DesignMatrix(
        ["const", "a", "b", "z"],
        np.column_stack([np.ones(80), x, x.copy(), z]),
    )
    pruned, dropped = vif_prune(X, threshold=5.0)
    assert dropped == ("b",)
    assert pruned.names == ("const", "a", "z")


def test_prune_respects_protected_columns():
    x = np.random.default_rng(4).normal(size=60)
    X = DesignMatrix(
        ["const", "keep", "dup"],
        np.column_stack([np.ones(60), x, x.copy()]),
    )
    pruned, dropped = vif_prune(X, threshold=5.0, protected=("keep",))
    assert dropped == ("dup",)
    # With both columns protected nothing can be removed even though the
    # collinearity persists.
    pruned2, dropped2 = vif_prune(X, threshold=5.0, protected=("keep", "dup"))
    assert dropped2 == ()
    assert pruned2.names == X.names


def test_prune_below_threshold_is_identity():
    X, _ = two_predictor_design(0.3)
    pruned, dropped = vif_prune(X, threshold=2.5)
    assert dropped == ()
    assert pruned is X


def test_prune_iterates():
    # Two independent collinear clusters need two removal rounds.
    rng = np.random.default_rng(9)
    n = 200
    a = rng.normal(size=n)
    b = rng.normal(size=n)
    X = DesignMatrix(
        ["const", "a", "a2", "b", "b2"],
        np.column_stack([np.ones(n), a, a + 0.01 * rng.normal(size=n),
                         b, b + 0.01 * rng.normal(size=n)]),
    )
    pruned, dropped = vif_prune(X, threshold=5.0)
    # One column from each collinear pair goes; which of the near-twins
    # scores higher is noise-determined.
    assert len(dropped) == 2
    assert len(set(dropped) & {"a", "a2"}) == 1
    assert len(set(dropped) & {"b", "b2"}) == 1
    assert all(v < 5.0 for v in vif_values(pruned).values())


def test_threshold_validation():
    X, _ = two_predictor_design(0.2)
    with pytest.raises(ValueError):
        vif_prune(X, threshold=1.0)
