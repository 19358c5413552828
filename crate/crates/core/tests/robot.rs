mod common;

use centroidal_to::manifold::{exp_so3, integrate, Pose, Tangent, TangentVector};
use centroidal_to::robot::{
    composite_inertia, configuration_jacobian, implicit_configuration, leg_fk, leg_fk_jacobian, leg_ik, nominal_stance,
    normalise_workspace, LegId, RobotParams,
};
use common::{point_cloud_inertia, random_configuration, random_reachable, random_state};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> RobotParams {
    RobotParams::default_quadruped()
}

#[test]
fn ik_fk_round_trip_on_ten_thousand_targets() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for leg in LegId::ALL {
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            let r = random_reachable(&mut rng, &p, leg);
            let q = leg_ik(&p, leg, &r).unwrap();
            worst = worst.max((leg_fk(&p, leg, q) - r).norm());
        }
        assert!(worst < 1e-9, "{leg:?}: {worst:e}");
    }
}

#[test]
fn fk_jacobian_matches_central_differences() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-6;
    for _ in 0..100 {
        for leg in LegId::ALL {
            let q: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.5..1.5));
            let j = leg_fk_jacobian(&p, leg, q);
            for c in 0..3 {
                let (mut qp, mut qm) = (q, q);
                qp[c] += h;
                qm[c] -= h;
                let fd = (leg_fk(&p, leg, qp) - leg_fk(&p, leg, qm)) / (2.0 * h);
                assert!((fd - j.column(c)).amax() < 1e-8);
            }
        }
    }
}

#[test]
fn nominal_state_maps_to_nominal_joint_angles() {
    let p = params();
    let x = nominal_stance(&p, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.52), 0.0));
    let q = implicit_configuration(&p, &x);
    for leg in LegId::ALL {
        let i = leg.index();
        let expected = x.feet[i] - x.pose.position - p.leg(leg).hip;
        assert!((leg_fk(&p, leg, q.leg(i)) - expected).norm() < 1e-12);
        assert!(q.leg(i)[0].abs() < 1e-12);
    }
    assert!(q.within_limits(&p));
}

#[test]
fn raised_base_stretches_legs() {
    let p = params();
    let x = nominal_stance(&p, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.52), 0.0));
    let mut raised = x;
    raised.pose.position.z = 1.5;
    let q = implicit_configuration(&p, &raised);
    let w = p.workspace;
    for leg in LegId::ALL {
        let l = p.leg(leg);
        let k = q.leg(leg.index())[2];
        // Fully clamped to r_max - ε: the cosine rule at that distance.
        let planar2 = (w.r_max - w.margin).powi(2) - l.lateral_offset.powi(2);
        let cos = (planar2 - l.thigh.powi(2) - l.shank.powi(2)) / (2.0 * l.thigh * l.shank);
        assert!((k.abs() - cos.acos()).abs() < 1e-9, "{k}");
        assert!(k.abs() < 0.15);
    }
}

#[test]
fn yawed_co_rotation_leaves_configuration_unchanged() {
    let p = params();
    let x = nominal_stance(&p, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.52), 0.0));
    let yaw = Pose::from_yaw(Vector3::zeros(), 40f64.to_radians());
    let mut y = x;
    y.pose = yaw.compose(&x.pose);
    y.feet = x.feet.map(|f| yaw.rotation() * f);
    let (a, b) = (implicit_configuration(&p, &x), implicit_configuration(&p, &y));
    for i in 0..12 {
        assert!((a.0[i] - b.0[i]).abs() < 1e-12);
    }
}

#[test]
fn configuration_jacobian_matches_central_differences() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-6;
    for _ in 0..100 {
        let x = random_state(&mut rng, &p);
        let j = configuration_jacobian(&p, &x).unwrap();
        for c in 0..24 {
            let mut d = TangentVector::zeros();
            d[c] = h;
            let qp = implicit_configuration(&p, &integrate(&x, &Tangent(d)));
            let qm = implicit_configuration(&p, &integrate(&x, &Tangent(-d)));
            for r in 0..12 {
                let fd = (qp.0[r] - qm.0[r]) / (2.0 * h);
                assert!(
                    (fd - j[(r, c)]).abs() < 1e-5 * (1.0 + j.amax()),
                    "({r},{c}) {fd} vs {}",
                    j[(r, c)]
                );
            }
        }
    }
}

#[test]
fn co_moving_translation_is_in_the_kernel() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_state(&mut rng, &p);
    let j = configuration_jacobian(&p, &x).unwrap();
    let world = Vector3::new(0.3, -0.7, 0.2);
    let mut d = TangentVector::zeros();
    d.fixed_rows_mut::<3>(0)
        .copy_from(&(x.pose.rotation().transpose() * world));
    for leg in 0..4 {
        d.fixed_rows_mut::<3>(12 + 3 * leg).copy_from(&world);
    }
    assert!((j * d).amax() < 1e-12);
}

#[test]
fn foot_block_is_inverse_fk_jacobian() {
    let p = params();
    let x = nominal_stance(&p, Pose::from_yaw(Vector3::new(0.0, 0.0, 0.5), 0.0));
    let j = configuration_jacobian(&p, &x).unwrap();
    let q = implicit_configuration(&p, &x);
    for leg in LegId::ALL {
        let i = leg.index();
        let inv = leg_fk_jacobian(&p, leg, q.leg(i)).try_inverse().unwrap();
        let block = j.fixed_view::<3, 3>(3 * i, 12 + 3 * i).into_owned();
        assert!((block - inv).amax() < 1e-12);
    }
}

#[test]
fn inertia_derivatives_match_central_differences() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-6;
    for _ in 0..100 {
        let q = random_configuration(&mut rng, &p);
        let r = composite_inertia(&p, &q);
        for j in 0..12 {
            let (mut qp, mut qm) = (q, q);
            qp.0[j] += h;
            qm.0[j] -= h;
            let (a, b) = (composite_inertia(&p, &qp), composite_inertia(&p, &qm));
            let di = (a.inertia - b.inertia) / (2.0 * h);
            let dc = (a.com - b.com) / (2.0 * h);
            assert!((di - r.d_inertia[j]).amax() < 1e-6 * (1.0 + di.amax()));
            assert!((dc - r.d_com.column(j)).amax() < 1e-6 * (1.0 + dc.amax()));
        }
    }
}

#[test]
fn composite_inertia_matches_point_cloud_oracle() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let q = random_configuration(&mut rng, &p);
        let r = composite_inertia(&p, &q);
        let (i_mc, c_mc) = point_cloud_inertia(&p, &q, &mut rng);
        assert!((r.inertia - i_mc).norm() < 0.01 * i_mc.norm());
        assert!((r.com - c_mc).norm() < 0.01 * (0.01 + c_mc.norm()));
    }
}

#[test]
fn inertia_is_positive_definite_over_workspace_sweep() {
    let p = params();
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..10_000 {
        let q = random_configuration(&mut rng, &p);
        let e = composite_inertia(&p, &q).inertia.symmetric_eigen().eigenvalues;
        assert!(e.min() > 0.0);
        for k in 0..3 {
            assert!(e[k] <= e[(k + 1) % 3] + e[(k + 2) % 3] + 1e-12);
        }
    }
}

proptest! {
    #[test]
    fn normalisation_is_idempotent(x in -1.5f64..1.5, y in -1.5f64..1.5, z in -1.5f64..1.5) {
        let p = params();
        let once = normalise_workspace(&p, &Vector3::new(x, y, z));
        let twice = normalise_workspace(&p, &once);
        prop_assert!((once - twice).norm() < 1e-15);
        let n = once.norm();
        prop_assert!(n >= p.workspace.r_min + p.workspace.margin - 1e-12);
        prop_assert!(n <= p.workspace.r_max - p.workspace.margin + 1e-12);
    }

    #[test]
    fn rigid_transform_invariance(
        t in prop::array::uniform3(-2.0f64..2.0),
        w in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let p = params();
        let x = nominal_stance(&p, Pose::from_yaw(Vector3::new(0.1, 0.0, 0.48), 0.3));
        let g = Pose::new(Vector3::from(t), exp_so3(&Vector3::from(w)));
        let mut y = x;
        y.pose = g.compose(&x.pose);
        y.feet = x.feet.map(|f| g.rotation() * f + g.position);
        let (a, b) = (implicit_configuration(&p, &x), implicit_configuration(&p, &y));
        for i in 0..12 {
            prop_assert!((a.0[i] - b.0[i]).abs() < 1e-10);
        }
    }
}
