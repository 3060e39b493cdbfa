import numpy as np
import pytest

from centroidal_kit.kinematics import (
    com,
    com_in_base,
    convert_velocity,
    forward_kinematics,
    link_jacobian,
)
from centroidal_kit.model import ModelError, State, three_link
from centroidal_kit.spatial import Transform, motion_transform, vee6
from util import (
    axisymmetric_star,
    collinear_chain,
    prismatic_gantry,
    random_one_joint_model,
    random_state,
    random_transform,
    random_velocity,
)

ALL_MODELS = [three_link(1.0), three_link(0.0), collinear_chain(3, seed=2), axisymmetric_star(3, seed=3), random_one_joint_model(4), prismatic_gantry(5)]


def test_fk_hand_values_three_link():
    m = three_link(1.0)
    st = State(Transform.identity(), [0.0, 0.0])
    poses = forward_kinematics(m, st)
    assert np.allclose(poses["link1"].apply(m.link("link1").inertia.com), [2.0, 0.0, 0.0])
    assert np.allclose(poses["link2"].apply(m.link("link2").inertia.com), [0.0, 0.0, 0.0])
    assert np.allclose(poses["base"].homogeneous(), np.eye(4))


def test_fk_zero_shape_composes_origins():
    m = collinear_chain(3, seed=5)
    st = State(Transform.identity(), np.zeros(3))
    poses = forward_kinematics(m, st)
    H = Transform.identity()
    for k, joint in enumerate(m.joints):
        H = H @ joint.origin
        assert np.allclose(poses[joint.child].homogeneous(), H.homogeneous(), atol=1e-14)


def test_fk_translation_equivariance():
    m = three_link(1.0)
    rng = np.random.default_rng(0)
    s = rng.uniform(-np.pi, np.pi, 2)
    shift = np.array([0.0, 0.0, 5.0])
    a = forward_kinematics(m, State(Transform.identity(), s))
    b = forward_kinematics(m, State(Transform(np.eye(3), shift), s))
    for name in a:
        assert np.allclose(b[name].origin, a[name].origin + shift)
        assert np.allclose(b[name].rotation, a[name].rotation)


def test_fk_unknown_link_query():
    m = three_link(1.0)
    with pytest.raises(ModelError, match="unknown link"):
        link_jacobian(m, State(Transform.identity(), [0.0, 0.0]), "nope")


def test_base_jacobian_left():
    m = three_link(1.0)
    rng = np.random.default_rng(1)
    J = link_jacobian(m, random_state(m, rng), "base", "left")
    assert np.array_equal(J.base_block, np.eye(6))
    assert np.array_equal(J.shape_block, np.zeros((6, 2)))


def test_distal_shape_column_is_joint_axis():
    m = three_link(1.0)
    J = link_jacobian(m, State(Transform.identity(), [0.0, 0.0]), "link1", "left")
    assert np.allclose(J.shape_block[3:, 0], [0.0, 0.0, 1.0])
    assert np.allclose(J.shape_block[:, 1], 0.0)


def test_off_path_columns_zero():
    m = collinear_chain(3, seed=6)
    rng = np.random.default_rng(2)
    st = random_state(m, rng)
    J1 = link_jacobian(m, st, "link1", "left")
    assert np.allclose(J1.shape_block[:, 1:], 0.0)
    J2 = link_jacobian(m, st, "link2", "left")
    assert np.allclose(J2.shape_block[:, 2:], 0.0)
    assert not np.allclose(J2.shape_block[:, :2], 0.0)


@pytest.mark.parametrize("model", ALL_MODELS, ids=["d1", "d0", "chain3", "star3", "one-joint", "gantry"])
def test_jacobian_finite_difference(model):
    # Right-trivialised FD of the world pose against the right-representation
    # Jacobian columns, h = 1e-6, tolerance 1e-5.
    rng = np.random.default_rng(7)
    h = 1e-6
    for _ in range(20):
        st = random_state(model, rng)
        for link in model.links:
            J = link_jacobian(model, st, link.name, "right")
            H0 = forward_kinematics(model, st)[link.name].homogeneous()
            H0_inv = np.linalg.inv(H0)
            for j in range(model.n_j):
                sp = st.s.copy()
                sp[j] += h
                sm = st.s.copy()
                sm[j] -= h
                Hp = forward_kinematics(model, State(st.H, sp))[link.name].homogeneous()
                Hm = forward_kinematics(model, State(st.H, sm))[link.name].homogeneous()
                fd = vee6((Hp - Hm) @ H0_inv / (2.0 * h), tol=np.inf)
                assert np.max(np.abs(fd - J.shape_block[:, j])) <= 1e-5


def test_representation_coherence():
    rng = np.random.default_rng(8)
    m = three_link(1.0)
    for _ in range(10):
        st = random_state(m, rng)
        for link in ("base", "link1", "link2"):
            left = link_jacobian(m, st, link, "left")
            right = link_jacobian(m, st, link, "right")
            mixed = link_jacobian(m, st, link, "mixed")
            world = forward_kinematics(m, st)[link]
            X = motion_transform(world)
            assert np.max(np.abs(right.matrix() - X @ left.matrix())) <= 1e-10
            Xm = motion_transform(Transform(world.rotation, np.zeros(3)))
            assert np.max(np.abs(mixed.matrix() - Xm @ left.matrix())) <= 1e-10
            assert np.max(np.abs(mixed.base_block - Xm @ left.base_block)) <= 1e-10


def test_jacobian_reproduces_velocity():
    rng = np.random.default_rng(9)
    m = collinear_chain(3, seed=10)
    st, nu = random_state(m, rng), random_velocity(m, rng)
    for link in m.links:
        for repr_tag in ("left", "right", "mixed"):
            J = link_jacobian(m, st, link.name, repr_tag)
            v = J.base_block @ nu.v + J.shape_block @ nu.sdot
            assert np.all(np.isfinite(v))
            assert J.matrix().shape == (6, 6 + m.n_j)


def test_com_three_link_zero_offset():
    m = three_link(0.0)
    rng = np.random.default_rng(10)
    for _ in range(5):
        s = rng.uniform(-np.pi, np.pi, 2)
        assert np.allclose(com_in_base(m, s), [0.0, 0.0, 0.0], atol=1e-14)


def test_com_single_link_and_equivariance():
    from centroidal_kit.model import LinkSpec, Model
    from centroidal_kit.spatial import SpatialInertia

    body = Model("b", [LinkSpec("b", SpatialInertia(2.0, [0.3, -0.1, 0.5], 2.0 * np.eye(3)))], [])
    rng = np.random.default_rng(11)
    st = State(random_transform(rng), np.zeros(0))
    assert np.allclose(com(body, st), st.H.apply([0.3, -0.1, 0.5]), atol=1e-14)

    m = random_one_joint_model(11)
    st = random_state(m, rng)
    t = np.array([0.1, -2.0, 0.7])
    shifted = State(Transform(st.H.rotation, st.H.origin + t), st.s)
    assert np.allclose(com(m, shifted), com(m, st) + t, atol=1e-12)


def test_com_mass_scaling_invariance():
    from centroidal_kit.model import LinkSpec, Model
    from centroidal_kit.spatial import SpatialInertia

    m = three_link(1.0)
    doubled = Model(
        m.base_link,
        [
            LinkSpec(l.name, SpatialInertia(2.0 * l.inertia.mass, l.inertia.com, 2.0 * l.inertia.rot_inertia))
            for l in m.links
        ],
        m.joints,
        m.gravity,
    )
    s = np.array([0.6, -1.3])
    assert np.allclose(com_in_base(m, s), com_in_base(doubled, s), atol=1e-14)


def test_convert_velocity_identity_pose():
    rng = np.random.default_rng(12)
    v = rng.normal(size=6)
    H = Transform.identity()
    for src in ("left", "right", "mixed"):
        for dst in ("left", "right", "mixed"):
            assert np.allclose(convert_velocity(v, src, dst, H), v, atol=1e-14)


def test_convert_velocity_pure_rotation():
    rng = np.random.default_rng(13)
    H = Transform(random_transform(rng).rotation, np.zeros(3))
    v = rng.normal(size=6)
    mixed = convert_velocity(v, "left", "mixed", H)
    assert np.allclose(mixed[:3], H.rotation @ v[:3], atol=1e-14)
    assert np.allclose(mixed[3:], H.rotation @ v[3:], atol=1e-14)


def test_convert_velocity_roundtrips():
    rng = np.random.default_rng(14)
    for _ in range(20):
        H = random_transform(rng)
        v = rng.normal(size=6)
        for mid in ("right", "mixed"):
            back = convert_velocity(convert_velocity(v, "left", mid, H), mid, "left", H)
            assert np.max(np.abs(back - v)) <= 1e-12
