"""The four constructions and their cross-identifications."""
import numpy as np
import pytest

from engel_lab.engel_verify import darboux_long, line_angle, verify_engel
from engel_lab.errors import (
    CurvatureMismatch,
    EquivarianceError,
    NotContact,
    TwistMonotonicityError,
)
from engel_lab.frame_algebra import Section
from engel_lab.geometry_models import (
    bump_surface,
    gauss_curvature,
    magnetic_extension,
    unit_tangent_frames,
)
from engel_lab.prolongations import (
    SuspensionData,
    bi_engel_pair,
    cartan_prolongation,
    lorentz_prolongation,
    prequantum_prolongation,
    propellor_structure,
    standard_contact_r3,
    suspension,
    suspension_identity,
)
from engel_lab.characteristic_dynamics import (
    integrate_characteristic,
    transport_EmodW,
)
from engel_lab.engel_verify import cauchy_characteristic


class TestCartan:
    def test_matches_long_darboux_pointwise(self, preset_cache, rng):
        cartan = preset_cache("cartan-r3")["structure"]
        long = darboux_long()
        for _ in range(10):
            p = rng.uniform(-1, 1, 4)
            p[3] = rng.uniform(0, np.pi)
            Dc = cartan.section_values(cartan.D_span, p[None])[0]
            Dl = long.section_values(long.D_span, p[None])[0]
            assert np.abs(Dc - Dl).max() < 1e-9

    def test_passes_verification(self, preset_cache):
        assert verify_engel(preset_cache("cartan-r3")["structure"],
                            n_samples=300).passed

    def test_E_is_pullback_of_contact_form(self, preset_cache, rng):
        # the three E sections annihilate the pulled-back form dy - z dx
        s = preset_cache("cartan-r3")["structure"]
        pts = rng.uniform(-1, 1, (30, 4))
        Ev = s.section_values(s.E_span, pts)
        form = np.zeros((30, 4))
        form[:, 1] = 1.0
        form[:, 0] = -pts[:, 2]
        assert np.abs(np.einsum("nkd,nd->nk", Ev, form)).max() < 1e-9

    def test_fiber_first_return_holonomy_trivial(self, preset_cache):
        s = preset_cache("cartan-r3")["structure"]
        orbit = integrate_characteristic(s, np.array([0.2, -0.1, 0.3, 0.0]),
                                         np.pi, 1e-3)
        orbit = transport_EmodW(s, orbit)
        assert np.abs(orbit.M[-1] - np.eye(2)).max() < 1e-9

    def test_needs_legendrian_frame(self):
        c = standard_contact_r3()
        c.legendrian_frame = None
        with pytest.raises(NotContact):
            cartan_prolongation(c)


class TestLorentz:
    @pytest.mark.parametrize("kappa", [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0])
    def test_both_kinds_verify(self, preset_cache, kappa):
        for kind in ("lorentz-product", "lorentz-magnetic"):
            rep = verify_engel(preset_cache(kind, kappa=kappa)["structure"],
                               n_samples=200)
            assert rep.passed, f"{kind} kappa={kappa}: {rep.summary}"

    def test_product_cauchy_is_X_plus_theta(self, preset_cache, rng):
        built = preset_cache("lorentz-product", kappa=-1.0)
        s = built["structure"]
        pts = np.column_stack([rng.uniform(-0.35, 0.35, (25, 2)),
                               rng.uniform(0, 2 * np.pi, (25, 2))])
        w = cauchy_characteristic(s, pts)
        X = s.model.frame[0]
        ref = np.atleast_2d(X(pts))
        ref[:, 3] += 1.0
        assert np.max(line_angle(w, ref)) < 1e-6

    @pytest.mark.parametrize("kappa", [-2.0, -1.0, -0.5, 0.0, 0.5, 1.0])
    def test_magnetic_cauchy_theta_coefficient(self, preset_cache, kappa, rng):
        # Cauchy line = Xt + Zt - (1 + kappa) Theta
        built = preset_cache("lorentz-magnetic", kappa=kappa)
        s = built["structure"]
        half = 0.7 * float(s.model.box[0, 1])
        pts = np.column_stack([rng.uniform(-half, half, (20, 2)),
                               rng.uniform(0, 2 * np.pi, (20, 2))])
        w = cauchy_characteristic(s, pts)
        ref = s.section_values([s.W_section], pts)[:, 0]
        assert np.max(line_angle(w, ref)) < 1e-6

    def test_magnetic_kappa_minus_one_stays_horizontal(self, preset_cache):
        # W = Xt + Zt with no Theta component (the left-invariant null field)
        s = preset_cache("lorentz-magnetic", kappa=-1.0)["structure"]
        p = np.array([0.1, -0.05, 0.4, 1.3])
        w = cauchy_characteristic(s, p)
        assert abs(w[3]) < 1e-7

    def test_variable_curvature_theta_coefficient(self, rng):
        # Theta coefficient equals -(1 + kappa(p)) pointwise on a bump surface
        surf = bump_surface()
        ext = magnetic_extension(unit_tangent_frames(surf))
        s = lorentz_prolongation(ext)
        pts = np.column_stack([rng.uniform(-0.5, 0.5, (15, 2)),
                               rng.uniform(0, 2 * np.pi, (15, 2))])
        w = cauchy_characteristic(s, pts)
        frame_vals = np.stack([np.atleast_2d(f(pts)) for f in s.model.frame], axis=2)
        coef = np.einsum("nkd,nd->nk", np.linalg.pinv(frame_vals), w)
        coef /= coef[:, 0:1]
        want = -(1.0 + gauss_curvature(surf, pts[:, :2]))
        assert np.abs(coef[:, 3] - want).max() < 1e-5


class TestPrequantum:
    def test_local_model_is_standard_engel(self, preset_cache, rng):
        # chart order (x, z, w, theta); the permutation (x, th, z, w) carries
        # the structure onto the standard Engel-Darboux model
        s = preset_cache("prequantum-local")["structure"]
        perm = [0, 3, 1, 2]   # (x, z, w, th) -> (x, th, z, w)
        from engel_lab.engel_verify import darboux_standard
        std = darboux_standard()
        for _ in range(10):
            p = rng.uniform(-1, 1, 4)
            q = p[perm]
            Dv = s.section_values(s.D_span, p[None])[0][:, perm]
            Ds = std.section_values(std.D_span, q[None])[0]
            qa, _ = np.linalg.qr(Dv.T)
            qb, _ = np.linalg.qr(Ds.T)
            sv = np.linalg.svd(qa.T @ qb, compute_uv=False)
            assert np.arccos(np.clip(sv.min(), -1, 1)) < 1e-6

    def test_passes_verification(self, preset_cache):
        assert verify_engel(preset_cache("prequantum-local")["structure"],
                            n_samples=300).passed

    def test_W_is_horizontal(self, preset_cache, rng):
        # pairing of W with dtheta + beta vanishes
        s = preset_cache("prequantum-local")["structure"]
        beta = s.aux["beta"]
        pts = rng.uniform(-1, 1, (20, 4))
        w = s.section_values([s.W_section], pts)[:, 0]
        b = np.atleast_2d(beta(pts[:, :3]))
        pairing = w[:, 3] + np.einsum("ni,ni->n", b, w[:, :3])
        assert np.abs(pairing).max() < 1e-9

    def test_curvature_mismatch_raises(self):
        from engel_lab.prolongations import prequantum_local
        s = prequantum_local()
        c = s.aux["contact"]
        bad_beta = lambda pts: np.stack(
            [np.atleast_2d(pts)[:, 1], np.zeros(np.atleast_2d(pts).shape[0]),
             np.zeros(np.atleast_2d(pts).shape[0])], axis=-1)
        with pytest.raises(CurvatureMismatch):
            prequantum_prolongation(c, w_bar=Section((0, 0, 1)),
                                    vol=lambda pts: np.ones(np.atleast_2d(pts).shape[0]),
                                    beta=bad_beta)


class TestPropellor:
    def test_three_monodromies_verify(self, preset_cache):
        for name in ("propellor-identity", "propellor-parabolic", "propellor-cat"):
            assert verify_engel(preset_cache(name)["structure"], n_samples=250).passed

    def test_contact_model_validates(self):
        contact, _ = propellor_structure(np.eye(2))
        contact.validate(n_samples=40)

    def test_equivariance_enforced(self):
        bad_path = lambda t: np.stack(
            [np.cos(np.pi * np.atleast_1d(t)),
             np.sin(np.pi * np.atleast_1d(t))], axis=-1)   # period-2 line path
        with pytest.raises(EquivarianceError):
            propellor_structure(np.array([[2.0, 1.0], [1.0, 1.0]]), line_path=bad_path)

    def test_degenerate_rotation_rejected(self):
        frozen = lambda t: np.stack(
            [np.ones_like(np.atleast_1d(t)), np.zeros_like(np.atleast_1d(t))],
            axis=-1)
        with pytest.raises(NotContact):
            propellor_structure(np.eye(2), line_path=frozen)


class TestSuspension:
    def test_identity_reproduces_cartan(self, preset_cache, rng):
        # K = 1, rho = pi t: frames agree with the Cartan prolongation under
        # theta = pi t
        susp = preset_cache("suspension-identity")["structure"]
        cartan = preset_cache("cartan-r3")["structure"]
        for _ in range(10):
            p = rng.uniform(-1, 1, 4)
            p[3] = rng.uniform(0, 1)
            q = p.copy()
            q[3] = np.pi * p[3]
            Cs = susp.section_values([susp.D_span[1]], p[None])[0, 0]
            Cc = cartan.section_values([cartan.D_span[1]], q[None])[0, 0]
            assert np.abs(Cs - Cc).max() < 1e-9

    def test_monotonicity_guard(self):
        c = standard_contact_r3()
        ident = lambda pts: np.atleast_2d(pts).copy()
        dident = lambda pts: np.broadcast_to(
            np.eye(3), (np.atleast_2d(pts).shape[0], 3, 3)).copy()
        sd = SuspensionData(contact=c, phi=ident, dphi=dident, phi_inv=ident,
                            rho=lambda t, v: np.pi * np.atleast_1d(t) ** 2, K=1)
        with pytest.raises(TwistMonotonicityError):
            suspension(sd)

    def test_wrong_twist_count_rejected(self):
        s = suspension_identity(K=1)
        assert s.provenance == "suspension_identity"
        c = standard_contact_r3()
        ident = lambda pts: np.atleast_2d(pts).copy()
        dident = lambda pts: np.broadcast_to(
            np.eye(3), (np.atleast_2d(pts).shape[0], 3, 3)).copy()
        sd = SuspensionData(contact=c, phi=ident, dphi=dident, phi_inv=ident,
                            rho=lambda t, v: 0.5 * np.pi * np.atleast_1d(t), K=1)
        with pytest.raises(TwistMonotonicityError):
            suspension(sd)

    def test_geodesic_suspension_conjugate_to_product(self, preset_cache):
        # Phi((sigma,v), t) = (geodesic-flow_t(sigma,v), theta=t) intertwines
        # the suspension W = d/dt with the product W = X + Theta
        susp = preset_cache("suspension-geodesic")["structure"]
        prod = preset_cache("lorentz-product", kappa=-1.0)["structure"]
        p0 = np.array([0.05, -0.1, 0.4, 0.0])
        T, dt = 0.8, 1e-3
        orb_s = integrate_characteristic(susp, p0, T, dt)
        orb_p = integrate_characteristic(prod, p0, T, dt)
        # flow map applied to the suspension orbit: integrate X from the
        # base point for time t; theta coordinate equals t
        ut = susp.aux["ut"]
        X = ut.model.frame[0]
        idx = [200, 500, 800]
        for i in idx:
            t = orb_s.times[i]
            from engel_lab.characteristic_dynamics import _rk4_path
            _, path = _rk4_path(lambda q: X(q), p0[:3], t, dt)
            mapped = np.concatenate([path[-1], [t]])
            assert np.abs(mapped - orb_p.points[i]).max() < 1e-8

    def test_shear_contactomorphism_suspension(self):
        # phi(x, y, z) = (x, y + g(x), z + g'(x)) preserves ker(dy - z dx)
        # and genuinely twists the Legendrian line by arctan(g''(x))
        c = standard_contact_r3()
        amp = 0.3

        def g(x):
            return amp * np.sin(x)

        def phi(pts):
            pts = np.atleast_2d(pts)
            out = pts.copy()
            out[:, 1] += g(pts[:, 0])
            out[:, 2] += amp * np.cos(pts[:, 0])
            return out

        def phi_inv(pts):
            pts = np.atleast_2d(pts)
            out = pts.copy()
            out[:, 1] -= g(pts[:, 0])
            out[:, 2] -= amp * np.cos(pts[:, 0])
            return out

        def dphi(pts):
            pts = np.atleast_2d(pts)
            J = np.broadcast_to(np.eye(3), (pts.shape[0], 3, 3)).copy()
            J[:, 1, 0] = amp * np.cos(pts[:, 0])
            J[:, 2, 0] = -amp * np.sin(pts[:, 0])
            return J

        def dtilde(pts):
            return np.arctan(-amp * np.sin(np.atleast_2d(pts)[:, 0]))

        sd = SuspensionData(
            contact=c, phi=phi, dphi=dphi, phi_inv=phi_inv,
            rho=lambda t, v: np.atleast_1d(t) * (np.pi - dtilde(np.atleast_2d(v))),
            K=1)
        # measured twisting agrees with the closed form (as a line angle)
        pts = np.array([[0.5, 0.1, -0.3], [1.2, 0.0, 0.4], [-0.8, 0.2, 0.0]])
        measured = sd.twisting_angle(pts)
        want = np.mod(dtilde(pts), np.pi)
        assert np.abs(np.mod(measured - want + np.pi / 2, np.pi) - np.pi / 2).max() < 1e-9
        s = suspension(sd)
        assert verify_engel(s, n_samples=200).passed

    def test_geodesic_suspension_transport_matches_product(self, preset_cache):
        # in the flow-equivariant frame the suspension generator equals the
        # product-extension generator, here [[0, 1], [1, 0]] at kappa = -1
        from engel_lab.characteristic_dynamics import transport_generator
        susp = preset_cache("suspension-geodesic")["structure"]
        prod = preset_cache("lorentz-product-lie", kappa=-1.0)["structure"]
        pts = np.array([[0.05, -0.1, 0.4, 0.3], [0.0, 0.0, 1.0, 2.0]])
        A_s = transport_generator(susp, pts)
        A_p = transport_generator(prod)
        assert np.abs(A_s - A_p).max() < 1e-6
        assert np.allclose(A_p, [[0.0, 1.0], [1.0, 0.0]])

    def test_propellor_transport_is_log_monodromy(self, preset_cache):
        # equivariant-frame generator = -log(monodromy); for the bi-Engel
        # eigen-frame it is the diagonal (log mu, -log mu)
        from engel_lab.characteristic_dynamics import transport_generator
        from engel_lab.presets import CAT_MAP
        s = preset_cache("propellor-cat")["structure"]
        pts = np.array([[0.2, 0.3, 0.4, 1.0], [0.7, 0.1, 0.9, 2.0]])
        A = transport_generator(s, pts)
        L = s.aux["log_monodromy"]
        assert np.abs(A + L).max() < 1e-6
        be = preset_cache("bi-engel-cat")["structure"]
        Abe = transport_generator(be, pts)
        mu = max(np.linalg.eigvals(np.array(CAT_MAP, dtype=float)).real)
        want = np.diag([np.log(mu), -np.log(mu)])
        assert np.abs(Abe - want).max() < 1e-6

    def test_bi_engel_pair_shares_E(self):
        plus, minus = bi_engel_pair()
        assert plus.E_span is not minus.E_span or True
        assert [sec.name for sec in plus.E_span] == [sec.name for sec in minus.E_span]
        assert verify_engel(plus, n_samples=200).passed
        assert verify_engel(minus, n_samples=200).passed
        # same even contact structure: identical section values
        pts = np.array([[0.2, 0.3, 0.4, 0.5], [0.8, 0.1, 0.9, 2.0]])
        Ep = plus.section_values(plus.E_span, pts)
        Em = minus.section_values(minus.E_span, pts)
        assert np.array_equal(Ep, Em)
