import numpy as np
import pytest

from centroidal_kit.dynamics import (
    ExternalWrench,
    SimulationError,
    bias_and_gravity,
    forward_dynamics,
    inverse_dynamics,
    mass_matrix_via_jacobians,
    mass_partition,
    save_trajectory,
    simulate,
)
from centroidal_kit.kinematics import com_in_base, link_jacobian
from centroidal_kit.model import LinkSpec, Model, State, VelocityState, three_link
from centroidal_kit.spatial import SpatialInertia, Transform, crossdual6, exp_se3
from util import (
    axisymmetric_star,
    collinear_chain,
    prismatic_gantry,
    random_spd_inertia,
    random_state,
    random_transform,
    random_velocity,
)

MODELS = [three_link(1.0), three_link(0.0), collinear_chain(3, seed=2), axisymmetric_star(3, seed=3), prismatic_gantry(5)]
IDS = ["d1", "d0", "chain3", "star3", "gantry"]


def single_body_model(seed=0, gravity=(0.0, 0.0, 0.0)) -> Model:
    rng = np.random.default_rng(seed)
    return Model("b", [LinkSpec("b", random_spd_inertia(rng, 2.0, [0.1, -0.2, 0.3]))], [], gravity)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_crba_matches_jacobian_route(model):
    rng = np.random.default_rng(0)
    for _ in range(10):
        s = rng.uniform(-np.pi, np.pi, model.n_j)
        assert np.max(np.abs(mass_partition(model, s).full - mass_matrix_via_jacobians(model, s))) <= 1e-12


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_mass_matrix_symmetric_spd(model):
    rng = np.random.default_rng(1)
    for _ in range(100):
        s = rng.uniform(-np.pi, np.pi, model.n_j)
        parts = mass_partition(model, s)
        assert np.max(np.abs(parts.full - parts.full.T)) <= 1e-12
        np.linalg.cholesky(parts.full)
        np.linalg.cholesky(parts.locked)


def test_mass_matrix_depends_on_shape_only():
    # Assemble J^T M J from link Jacobians evaluated at several random base
    # poses: the left-representation blocks ignore H, so every assembly must
    # agree exactly with the pose-free partition.
    m = three_link(1.0)
    rng = np.random.default_rng(2)
    s = rng.uniform(-np.pi, np.pi, 2)
    ref = mass_partition(m, s).full
    assemblies = []
    for _ in range(3):
        st = State(random_transform(rng), s)
        M = np.zeros_like(ref)
        for link in m.links:
            J = link_jacobian(m, st, link.name, "left").matrix()
            M += J.T @ link.inertia.matrix() @ J
        assemblies.append(M)
        assert np.max(np.abs(M - ref)) <= 1e-12
    assert np.array_equal(assemblies[0], assemblies[1])
    assert np.array_equal(assemblies[1], assemblies[2])


def test_single_body_partition_is_its_inertia():
    m = single_body_model()
    parts = mass_partition(m, np.zeros(0))
    assert parts.full.shape == (6, 6)
    assert np.max(np.abs(parts.full - m.links[0].inertia.matrix())) <= 1e-14
    assert parts.coupling.shape == (6, 0)


def test_three_link_zero_offset_coupling():
    m = three_link(0.0)
    rng = np.random.default_rng(3)
    ref = mass_partition(m, np.zeros(2)).coupling
    assert np.allclose(ref[:3, :], 0.0, atol=1e-14)
    assert np.allclose(ref[3:, 0], [0.0, 0.0, 1.0], atol=1e-14)
    for _ in range(5):
        s = rng.uniform(-np.pi, np.pi, 2)
        assert np.max(np.abs(mass_partition(m, s).coupling - ref)) <= 1e-13


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_kinetic_energy_matches_per_body_sum(model):
    # nu^T M nu vs the sum of per-link kinetic energies through the link
    # Jacobians (independent assembly route).
    rng = np.random.default_rng(4)
    for _ in range(20):
        st, nu = random_state(model, rng), random_velocity(model, rng)
        nu_full = np.concatenate((nu.v, nu.sdot))
        ke = 0.5 * nu_full @ mass_partition(model, st.s).full @ nu_full
        acc = 0.0
        for link in model.links:
            J = link_jacobian(model, st, link.name, "left")
            v_l = J.base_block @ nu.v + J.shape_block @ nu.sdot
            acc += 0.5 * v_l @ link.inertia.matrix() @ v_l
        assert abs(ke - acc) <= 1e-10 * max(1.0, abs(ke))


def test_bias_zero_without_motion_or_gravity():
    m = three_link(1.0, gravity=(0.0, 0.0, 0.0))
    st = State(Transform.identity(), [0.4, -0.9])
    assert np.allclose(bias_and_gravity(m, st, VelocityState.zero(2)), 0.0, atol=1e-14)


def test_bias_gravity_block_matches_hand_assembly():
    m = three_link(1.0)
    rng = np.random.default_rng(5)
    st = random_state(m, rng)
    out = bias_and_gravity(m, st, VelocityState.zero(2))
    f = m.total_mass * (st.H.rotation.T @ m.gravity)
    wrench_b = np.concatenate((f, np.cross(com_in_base(m, st.s), f)))
    assert np.max(np.abs(out[:6] + wrench_b)) <= 1e-12


def test_power_balance_along_controlled_trajectory():
    # d/dt (kinetic energy) equals the actuation power nu^T [0; tau] in the
    # absence of gravity; checked by central differences on a rollout.
    m = three_link(1.0, gravity=(0.0, 0.0, 0.0))
    rng = np.random.default_rng(6)
    st0, nu0 = random_state(m, rng), random_velocity(m, rng, 0.3)

    def controls(t, state, nu):
        return np.array([0.4 * np.sin(3.0 * t), -0.2 * np.cos(2.0 * t)])

    dt = 1e-3
    traj = simulate(m, st0, nu0, t_end=1.0, dt=dt, controls=controls)
    ke = []
    for st, nu in zip(traj.states, traj.velocities):
        nu_full = np.concatenate((nu.v, nu.sdot))
        ke.append(0.5 * nu_full @ mass_partition(m, st.s).full @ nu_full)
    ke = np.asarray(ke)
    fd = (ke[2:] - ke[:-2]) / (2.0 * dt)
    worst = 0.0
    for k in range(1, len(traj) - 1):
        tau = controls(traj.times[k], None, None)
        power = traj.velocities[k].sdot @ tau
        worst = max(worst, abs(fd[k - 1] - power))
    assert worst <= 1e-6 * max(1.0, np.max(np.abs(ke)))


def test_forward_dynamics_rest_equilibrium():
    m = three_link(1.0, gravity=(0.0, 0.0, 0.0))
    st = State(Transform.identity(), [0.3, 0.3])
    nd = forward_dynamics(m, st, VelocityState.zero(2))
    assert np.allclose(nd, 0.0, atol=1e-13)


def test_single_body_forward_dynamics_closed_form():
    m = single_body_model()
    rng = np.random.default_rng(7)
    st = State(random_transform(rng), np.zeros(0))
    nu = VelocityState(rng.normal(size=6), np.zeros(0))
    f_mixed = rng.normal(size=6)
    w = ExternalWrench("b", Transform.identity(), f_mixed)
    nd = forward_dynamics(m, st, nu, None, [w])
    M6 = m.links[0].inertia.matrix()
    R = st.H.rotation
    f_body = np.concatenate((R.T @ f_mixed[:3], R.T @ f_mixed[3:]))
    ref = np.linalg.solve(M6, f_body - crossdual6(nu.v, M6 @ nu.v))
    assert np.max(np.abs(nd - ref)) <= 1e-12


def test_free_fall_acceleration():
    m = single_body_model(gravity=(0.0, 0.0, -9.81))
    rng = np.random.default_rng(8)
    st = State(random_transform(rng), np.zeros(0))
    nd = forward_dynamics(m, st, VelocityState.zero(0))
    assert np.allclose(nd[:3], st.H.rotation.T @ m.gravity, atol=1e-12)
    assert np.allclose(nd[3:6], 0.0, atol=1e-12)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_forward_inverse_roundtrip(model):
    rng = np.random.default_rng(9)
    for _ in range(10):
        st, nu = random_state(model, rng), random_velocity(model, rng)
        tau = rng.normal(size=model.n_j)
        nd = forward_dynamics(model, st, nu, tau)
        gen = inverse_dynamics(model, st, nu, nd)
        target = np.concatenate((np.zeros(6), tau))
        assert np.max(np.abs(gen - target)) <= 1e-10


def test_simulate_rest_stays_at_rest():
    m = three_link(1.0, gravity=(0.0, 0.0, 0.0))
    st0 = State(Transform.identity(), [0.2, -0.4])
    traj = simulate(m, st0, VelocityState.zero(2), t_end=0.5, dt=1e-2)
    last = traj.states[-1]
    assert np.max(np.abs(last.H.homogeneous() - np.eye(4))) <= 1e-14
    assert np.max(np.abs(last.s - st0.s)) <= 1e-14


def test_spinning_body_about_principal_axis():
    rng = np.random.default_rng(10)
    body = Model(
        "b", [LinkSpec("b", SpatialInertia(1.5, np.zeros(3), np.diag([1.0, 2.0, 3.0])))], [], (0.0, 0.0, 0.0)
    )
    w = 0.7
    nu0 = VelocityState([0.0, 0.0, 0.0, 0.0, 0.0, w], np.zeros(0))
    st0 = State(random_transform(rng), np.zeros(0))
    traj = simulate(body, st0, nu0, t_end=2.0, dt=1e-3)
    assert np.max(np.abs(traj.velocities[-1].v - nu0.v)) <= 1e-12
    expected = st0.H @ exp_se3(np.array([0.0, 0.0, 0.0, 0.0, 0.0, w]), 2.0)
    assert np.max(np.abs(traj.states[-1].H.homogeneous() - expected.homogeneous())) <= 1e-10


def test_tumble_conserves_energy_and_stays_orthonormal():
    m = three_link(1.0, gravity=(0.0, 0.0, 0.0))
    rng = np.random.default_rng(11)
    st0, nu0 = random_state(m, rng), random_velocity(m, rng, 0.5)
    traj = simulate(m, st0, nu0, t_end=10.0, dt=1e-3)

    def energy(st, nu):
        nu_full = np.concatenate((nu.v, nu.sdot))
        return 0.5 * nu_full @ mass_partition(m, st.s).full @ nu_full

    e0 = energy(traj.states[0], traj.velocities[0])
    eT = energy(traj.states[-1], traj.velocities[-1])
    assert abs(eT - e0) / e0 <= 1e-6
    R = traj.states[-1].H.rotation
    assert np.max(np.abs(R.T @ R - np.eye(3))) <= 1e-9


def test_simulation_error_carries_time():
    m = three_link(1.0, gravity=(0.0, 0.0, 0.0))
    st0 = State(Transform.identity(), [0.0, 0.0])
    # Misaligned huge angular rate: the gyroscopic term overflows immediately.
    nu0 = VelocityState([0.0, 0.0, 0.0, 1e200, 0.0, 1e200], [0.0, 0.0])
    with pytest.raises(SimulationError) as err:
        simulate(m, st0, nu0, t_end=0.1, dt=1e-3)
    assert err.value.t >= 0.0
    assert "t =" in str(err.value)


def test_save_trajectory_is_deterministic(tmp_path):
    m = three_link(1.0, gravity=(0.0, 0.0, 0.0))
    rng = np.random.default_rng(12)
    st0, nu0 = random_state(m, rng), random_velocity(m, rng, 0.3)
    traj = simulate(m, st0, nu0, t_end=0.05, dt=1e-2)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    save_trajectory(traj, p1)
    save_trajectory(traj, p2)
    assert p1.read_bytes() == p2.read_bytes()
    rows = p1.read_text().strip().split("\n")
    assert len(rows) == len(traj)
    assert len(rows[0].split(",")) == 1 + 9 + 3 + m.n_j + 6 + m.n_j
