import numpy as np
import pytest

from horobary.hyperboloid import (
    BoundaryDirection,
    boundary_endpoint,
    dist,
    geodesic_flow,
    origin,
)
from horobary.measures import (
    DiscreteMeasure,
    coalesce,
    flow_project,
    load_measure,
    measure_from_dict,
    pushforward_conjugacy,
    pushforward_map,
    pushforward_qx,
    save_measure,
    uniform_boundary_grid,
)
from horobary.sampling import random_boundary_direction, random_space_point


def test_measure_validation():
    o = origin(2)
    with pytest.raises(ValueError):
        DiscreteMeasure("space", np.empty((0, 3)), np.empty(0))
    with pytest.raises(ValueError):
        DiscreteMeasure("space", [o.coords], [0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure("space", [o.coords, o.coords], [1.5, -0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure("nonsense", [o.coords], [1.0])
    with pytest.raises(ValueError):
        DiscreteMeasure("tangent", [o.coords], [1.0])  # missing dirs


def test_from_atoms_uniform_weights():
    rng = np.random.default_rng(0)
    pts = [random_space_point(rng) for _ in range(5)]
    mu = DiscreteMeasure.from_atoms(pts)
    assert mu.kind == "space"
    assert len(mu) == 5
    np.testing.assert_allclose(mu.weights, 0.2)
    with pytest.raises(ValueError):
        DiscreteMeasure.from_atoms([pts[0], random_boundary_direction(rng)])


def test_uniform_grid_square():
    mu = uniform_boundary_grid(4, origin(2))
    assert mu.kind == "boundary"
    expected = np.array(
        [[1, 1, 0], [1, 0, 1], [1, -1, 0], [1, 0, -1]], float
    )
    np.testing.assert_allclose(mu.coords, expected, atol=1e-15)
    np.testing.assert_allclose(mu.weights, 0.25)
    assert abs(mu.weights.sum() - 1.0) < 1e-15


def test_uniform_grid_balance_even_n():
    x = random_space_point(np.random.default_rng(1))
    for n in (2, 4, 8, 30):
        nu = pushforward_qx(uniform_boundary_grid(n, x), x)
        resultant = (nu.weights[:, None] * nu.dirs).sum(axis=0)
        np.testing.assert_allclose(resultant, 0.0, atol=1e-13)


def test_uniform_grid_rejects_small_n():
    with pytest.raises(ValueError):
        uniform_boundary_grid(1, origin(2))


def test_uniform_grid_higher_dim():
    rng = np.random.default_rng(2)
    for dim in (3, 4):
        x = random_space_point(rng, dim=dim)
        mu = uniform_boundary_grid(64, x)
        assert len(mu) == 64
        # deterministic
        again = uniform_boundary_grid(64, x)
        np.testing.assert_array_equal(mu.coords, again.coords)
        # evenly spread: the tangent directions nearly average out
        nu = pushforward_qx(mu, x)
        resultant = (nu.weights[:, None] * nu.dirs).sum(axis=0)
        assert np.linalg.norm(resultant) < 0.1


def test_pushforward_qx_round_trip():
    rng = np.random.default_rng(3)
    x = random_space_point(rng)
    mu = uniform_boundary_grid(7, x)
    nu = pushforward_qx(mu, x)
    assert nu.kind == "tangent"
    np.testing.assert_array_equal(nu.weights, mu.weights)
    for i in range(len(nu)):
        u = nu.atom(i)
        np.testing.assert_allclose(u.base.coords, x.coords)
        np.testing.assert_allclose(
            boundary_endpoint(u).coords, mu.atom(i).coords, atol=1e-10
        )


def test_flow_project_cases():
    rng = np.random.default_rng(4)
    x = random_space_point(rng)
    nu = pushforward_qx(uniform_boundary_grid(5, x), x)
    at0 = flow_project(nu, 0.0)
    np.testing.assert_allclose(at0.coords, nu.coords, atol=1e-15)
    for t in (0.7, -1.3, 2.0):
        mt = flow_project(nu, t)
        assert mt.kind == "space"
        np.testing.assert_array_equal(mt.weights, nu.weights)
        for i in range(len(mt)):
            assert abs(dist(mt.atom(i), at0.atom(i)) - abs(t)) < 1e-12


def test_flow_project_semigroup():
    rng = np.random.default_rng(5)
    x = random_space_point(rng)
    nu = pushforward_qx(uniform_boundary_grid(6, x), x)
    s, t = 0.9, -0.4
    flowed = pushforward_conjugacy(nu, lambda u: geodesic_flow(u, t))
    a = flow_project(flowed, s)
    b = flow_project(nu, s + t)
    np.testing.assert_allclose(a.coords, b.coords, atol=1e-9)


def test_pushforward_map_identity_and_rotation():
    mu = uniform_boundary_grid(4, origin(2))
    same = pushforward_map(mu, lambda xi: xi)
    np.testing.assert_array_equal(same.coords, mu.coords)
    np.testing.assert_array_equal(same.weights, mu.weights)

    def quarter_turn(xi):
        c = xi.coords
        return BoundaryDirection([c[0], -c[2], c[1]])

    rotated = pushforward_map(mu, quarter_turn)
    orig = {tuple(np.round(c, 12)) for c in mu.coords}
    img = {tuple(np.round(c, 12)) for c in rotated.coords}
    assert orig == img


def test_coalesce_merges_duplicates():
    o = origin(2)
    xi = BoundaryDirection([1.0, 1.0, 0.0])
    eta = BoundaryDirection([1.0, 0.0, 1.0])
    mu = DiscreteMeasure(
        "boundary",
        [xi.coords, eta.coords, xi.coords],
        [0.25, 0.5, 0.25],
    )
    merged = coalesce(mu)
    assert len(merged) == 2
    assert abs(merged.weights.sum() - 1.0) < 1e-15
    idx = [tuple(c) for c in merged.coords].index(tuple(xi.coords))
    assert abs(merged.weights[idx] - 0.5) < 1e-15
    assert coalesce(merged) is merged


def test_json_round_trip_exact(tmp_path):
    rng = np.random.default_rng(6)
    x = random_space_point(rng)
    nu = pushforward_qx(uniform_boundary_grid(9, x), x)
    path = tmp_path / "nu.json"
    save_measure(nu, path)
    back = load_measure(path)
    assert back.kind == nu.kind
    np.testing.assert_array_equal(back.coords, nu.coords)
    np.testing.assert_array_equal(back.dirs, nu.dirs)
    np.testing.assert_array_equal(back.weights, nu.weights)


def test_measure_dict_rejects_garbage():
    with pytest.raises(ValueError):
        measure_from_dict({"kind": "boundary"})
    with pytest.raises(ValueError):
        measure_from_dict({"kind": "tangent", "atoms": [{"coords": [1, 1, 0], "weight": 1.0}]})


def test_measure_immutable():
    mu = uniform_boundary_grid(3, origin(2))
    with pytest.raises(ValueError):
        mu.coords[0, 0] = 2.0
    with pytest.raises(ValueError):
        mu.weights[0] = 0.9
