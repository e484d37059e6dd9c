import numpy as np
import pytest

from collodyn import build_chart, check_integrability, transform_force
from collodyn.models import GvsRod, TendonRouting

from conftest import sample_states


def straight_rod(**overrides):
    """Uniform-radius rod with one straight parallel tendon."""
    L = overrides.pop("length", 0.4)
    tendons = overrides.pop(
        "tendons",
        (TendonRouting("parallel", 0.0, 0.006, L),),
    )
    return GvsRod(
        length=L,
        base_radius=overrides.pop("base_radius", 0.012),
        tip_radius=overrides.pop("tip_radius", 0.012),
        tendons=tendons,
        legendre_counts=overrides.pop("legendre_counts", (1, 1, 1)),
        **overrides,
    )


def brute_force_cable_length(rod, routing, q, nodes=100_000):
    """Independent geometric oracle: dense quadrature of the tendon speed."""
    xs = np.linspace(0.0, routing.x_end, nodes)
    w = np.full(nodes, xs[1] - xs[0])
    w[0] = w[-1] = 0.5 * (xs[1] - xs[0])
    phi = rod.strain_basis(xs)
    xi = phi @ q + rod.rest_strain
    d, dp = routing.path(xs)
    v = np.cross(xi[:, :3], d) + xi[:, 3:] + dp
    return float(w @ np.linalg.norm(v, axis=1))


class TestCableLength:
    def test_straight_parallel_routing_has_rod_length(self):
        rod = straight_rod()
        assert rod.cable_length(0, np.zeros(rod.dof)) == pytest.approx(0.4, abs=1e-12)

    def test_pure_elongation_adds_delta_l(self):
        # three symmetric parallel tendons pulled equally: the bending
        # moments cancel and the strain is pure elongation, so every cable
        # length is L + delta L
        L = 0.4
        tendons = tuple(
            TendonRouting("parallel", az, 0.004, L)
            for az in np.deg2rad([0.0, 120.0, 240.0])
        )
        rod = straight_rod(legendre_counts=(0, 0, 0), tendons=tendons)
        phi = rod.strain_basis(np.array([0.2]))[0]
        axial_per_unit = phi[5, :] @ np.ones(3)
        eps = 0.05
        q = np.full(3, eps / axial_per_unit)
        xi = phi @ q
        assert np.abs(xi[:5]).max() < 1e-14  # no bending, torsion, or shear
        for i in range(3):
            assert rod.cable_length(i, q) == pytest.approx(L * (1 + eps), rel=1e-12)

    @pytest.mark.parametrize("kind", ["oblique", "helical", "midterm"])
    def test_derivative_identity(self, kind):
        # dL_c/dq_j = A_ji at 50 random q, eps = 1e-6 (the thread-actuator
        # integrability identity)
        L = 0.4
        if kind == "oblique":
            routing = TendonRouting("oblique", 0.7, 0.005, L, taper=0.4)
        elif kind == "helical":
            routing = TendonRouting("helical", 0.3, 0.006, L, pitch=L / (2 * np.pi))
        else:
            routing = TendonRouting("oblique", 2.1, 0.005, L / 2, taper=0.7)
        rod = GvsRod(tendons=(routing,), legendre_counts=(2, 2, 1))
        rng = np.random.default_rng(17)
        eps = 1e-6
        for _ in range(50):
            q = rng.standard_normal(rod.dof) * 0.8
            A = rod.actuation_matrix(q)
            for j in range(rod.dof):
                qp, qm = q.copy(), q.copy()
                qp[j] += eps
                qm[j] -= eps
                fd = (rod.cable_length(0, qp) - rod.cable_length(0, qm)) / (2 * eps)
                assert abs(fd - A[j, 0]) < 1e-6

    def test_brute_force_oracle(self, rod):
        rng = np.random.default_rng(23)
        q = rng.standard_normal(rod.dof) * np.array([2.0] * 4 + [0.2] * 5)
        for i, routing in enumerate(rod.tendons):
            oracle = brute_force_cable_length(rod, routing, q)
            assert rod.cable_length(i, q) == pytest.approx(oracle, abs=5e-9)

    def test_positive_lengths(self, rod):
        qs, _ = sample_states(rod.default_box(), 50, seed=3)
        for q in qs:
            assert np.all(rod.cable_lengths(q) > 0.0)


class TestActuationMatrix:
    def test_zero_offset_rejected(self):
        with pytest.raises(ValueError, match="degenerate routing"):
            TendonRouting("parallel", 0.0, 0.0, 0.4)

    def test_helical_column_against_dense_quadrature(self):
        L = 0.4
        routing = TendonRouting("helical", 0.0, 0.006, L, pitch=L / (2 * np.pi))
        rod = GvsRod(tendons=(routing,), legendre_counts=(2, 2, 1))
        q = np.zeros(rod.dof)
        # dense independent quadrature of the same spatial pairing
        nodes = 100_000
        xs = np.linspace(0.0, L, nodes)
        w = np.full(nodes, xs[1] - xs[0])
        w[0] = w[-1] = 0.5 * (xs[1] - xs[0])
        phi = rod.strain_basis(xs)
        xi = phi @ q + rod.rest_strain
        d, dp = routing.path(xs)
        v = np.cross(xi[:, :3], d) + xi[:, 3:] + dp
        t = v / np.linalg.norm(v, axis=1, keepdims=True)
        spatial = np.concatenate([np.cross(d, t), t], axis=1)
        oracle = np.einsum("k,kai,ka->i", w, phi, spatial)
        assert np.abs(rod.actuation_matrix(q)[:, 0] - oracle).max() < 1e-8

    def test_quadrature_convergence(self):
        base = GvsRod.reduced()
        fine = GvsRod.reduced(quad_order=32)
        rng = np.random.default_rng(29)
        for _ in range(5):
            q = rng.standard_normal(9) * np.array([2.0] * 4 + [0.2] * 5)
            assert np.abs(
                base.actuation_matrix(q) - fine.actuation_matrix(q)
            ).max() < 1e-8

    def test_constant_curvature_limit_matches_arc_geometry(self):
        # constant-bending basis + parallel tendon: the cable length is the
        # offset arc length L (1 + eps - kappa_y * r), linear in q, so the
        # actuation column is constant and matches the arc formula
        L = 0.4
        r = 0.006
        rod = straight_rod(
            legendre_counts=(1, 1, 0),
            tendons=(TendonRouting("parallel", 0.0, r, L),),
        )
        # coordinates: (tendon-adapted, kx-const, ky-const)
        rng = np.random.default_rng(31)
        for _ in range(10):
            q = 0.4 * rng.standard_normal(rod.dof)
            xi = rod.strain_basis(np.array([0.13]))[0] @ q + rod.rest_strain
            ky, ez = xi[1], xi[5]
            # straight-line check of the integrand: |v| = ez - ky r exactly
            expected = L * (ez - ky * r)
            assert rod.cable_length(0, q) == pytest.approx(expected, rel=1e-10)


class TestRodChart:
    def test_integrability(self, rod):
        report = check_integrability(rod.actuation, rod.default_box(), tol=1e-4)
        assert report.all_integrable
        assert max(report.worst_residuals) < 1e-4

    def test_decoupling(self, rod):
        chart = build_chart(rod.actuation, q0=np.zeros(9), rows=(0, 1, 2, 3))
        qs, _ = sample_states(rod.default_box(), 100, seed=5)
        rng = np.random.default_rng(6)
        for q in qs:
            u = rng.standard_normal(4)
            tau = transform_force(chart, rod.actuation, q, u)
            assert np.allclose(tau[:4], u, atol=1e-9)
            assert np.linalg.norm(tau[4:]) < 1e-9

    def test_paper_scale_configuration(self):
        rod = GvsRod.paper_default()
        assert rod.dof == 15
        assert rod.m == 8
        ends = sorted(t.x_end for t in rod.tendons)
        assert ends[:3] == [0.2, 0.2, 0.2]
        A = rod.actuation_matrix(np.zeros(15))
        assert A.shape == (15, 8)
        assert np.linalg.matrix_rank(A) == 8


class TestRodMechanics:
    def test_elastic_matrix_positive_definite(self, rod):
        assert np.linalg.eigvalsh(rod.elastic_matrix)[0] > 0.0
        assert rod.strictly_damped

    def test_velocity_forces_match_christoffel(self, rod):
        from collodyn import numdiff

        rng = np.random.default_rng(19)
        for _ in range(3):
            q = rng.standard_normal(9) * 0.5
            qd = rng.standard_normal(9)
            dM = numdiff.jacobian(rod.inertia, q, h=1e-6)
            c_oracle = 0.5 * (
                np.einsum("ijk,j,k->i", dM, qd, qd)
                + np.einsum("ikj,j,k->i", dM, qd, qd)
                - np.einsum("jki,j,k->i", dM, qd, qd)
            )
            c = rod.velocity_forces(q, qd)
            assert np.linalg.norm(c - c_oracle) < 1e-6 * (
                1.0 + np.linalg.norm(c_oracle)
            )

    def test_gravity_gradient_matches_potential(self, rod):
        from collodyn import numdiff

        rng = np.random.default_rng(20)
        q = rng.standard_normal(9) * 0.4
        g_fd = numdiff.gradient(rod.potential, q, h=1e-6)
        assert np.abs(rod.potential_gradient(q) - g_fd).max() < 1e-8

    def test_tendon_beyond_tip_rejected(self):
        with pytest.raises(ValueError):
            GvsRod(tendons=(TendonRouting("parallel", 0.0, 0.005, 0.5),))
