//! Property tests: algebraic identities of the kernels that must hold for
//! arbitrary admissible states, not just the benchmark configurations.

use lbm::bc::{assemble_bc_pass, BcKind, BcRule, BoundaryEdge};
use lbm::field::{DistributionField, ScalarField, VectorField};
use lbm::kernel::{
    apply_reaction_source, collide_bgk, equilibrium_fluid, equilibrium_scalar, moments_fluid,
    moments_scalar, stream, ReactionTerm, RelaxationParam,
};
use lbm::lattice::{LatticeD2Q9, Q};
use proptest::prelude::*;

fn lat() -> LatticeD2Q9 {
    LatticeD2Q9::standard()
}

/// Scalar field with values in [lo, hi].
fn scalar_field(
    nx: usize,
    ny: usize,
    lo: f64,
    hi: f64,
) -> impl Strategy<Value = ScalarField> {
    proptest::collection::vec(lo..=hi, nx * ny).prop_map(move |data| {
        let mut f = ScalarField::new(nx, ny);
        f.data_mut().copy_from_slice(&data);
        f
    })
}

fn vector_field(nx: usize, ny: usize, cap: f64) -> impl Strategy<Value = VectorField> {
    proptest::collection::vec((-cap..=cap, -cap..=cap), nx * ny).prop_map(move |data| {
        let mut f = VectorField::new(nx, ny);
        for (j, (ux, uy)) in data.into_iter().enumerate() {
            let (x, y) = (j % nx, j / nx);
            f.set(x, y, ux, uy);
        }
        f
    })
}

fn distribution_field(nx: usize, ny: usize) -> impl Strategy<Value = DistributionField> {
    proptest::collection::vec(0.01..=1.0f64, Q * nx * ny).prop_map(move |data| {
        let mut f = DistributionField::new(nx, ny);
        f.data_mut().copy_from_slice(&data);
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scalar_equilibrium_reproduces_its_moments(
        phi in scalar_field(6, 5, 0.0, 1.0),
        u in vector_field(6, 5, 0.2),
    ) {
        let feq = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        // zeroth moment: sum_i feq_i = phi
        let back = moments_scalar(&feq);
        prop_assert!(back.max_abs_diff(&phi) < 1e-14);
        // first moment: sum_i e_i feq_i = phi u
        for y in 0..5 {
            for x in 0..6 {
                let mut mx = 0.0;
                let mut my = 0.0;
                for i in 0..Q {
                    let v = feq.get(x, y, i);
                    mx += lat().ex(i) * v;
                    my += lat().ey(i) * v;
                }
                let p = phi.get(x, y);
                let (ux, uy) = u.get(x, y);
                prop_assert!((mx - p * ux).abs() < 1e-14, "mx {mx} vs {}", p * ux);
                prop_assert!((my - p * uy).abs() < 1e-14, "my {my} vs {}", p * uy);
            }
        }
    }

    #[test]
    fn fluid_equilibrium_reproduces_density_momentum_and_stress(
        rho in scalar_field(4, 4, 0.5, 2.0),
        u in vector_field(4, 4, 0.2),
    ) {
        let feq = equilibrium_fluid(&rho, &u, &lat()).unwrap();
        let (r_back, u_back) = moments_fluid(&feq).unwrap();
        prop_assert!(r_back.max_abs_diff(&rho) < 1e-13);
        for y in 0..4 {
            for x in 0..4 {
                let (ax, ay) = u_back.get(x, y);
                let (bx, by) = u.get(x, y);
                prop_assert!((ax - bx).abs() < 1e-13);
                prop_assert!((ay - by).abs() < 1e-13);
                // second moment: sum_i e_a e_b feq_i = rho (delta_ab / 3 + u_a u_b)
                let r = rho.get(x, y);
                let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
                for i in 0..Q {
                    let v = feq.get(x, y, i);
                    sxx += lat().ex(i) * lat().ex(i) * v;
                    syy += lat().ey(i) * lat().ey(i) * v;
                    sxy += lat().ex(i) * lat().ey(i) * v;
                }
                prop_assert!((sxx - r * (1.0 / 3.0 + bx * bx)).abs() < 1e-13);
                prop_assert!((syy - r * (1.0 / 3.0 + by * by)).abs() < 1e-13);
                prop_assert!((sxy - r * bx * by).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn collision_conserves_the_scalar_moment(
        f in distribution_field(5, 4),
        u in vector_field(5, 4, 0.15),
        freq in 0.1..=1.9f64,
    ) {
        let phi = moments_scalar(&f);
        let feq = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let out = collide_bgk(&f, &feq, RelaxationParam::new(freq).unwrap()).unwrap();
        let after = moments_scalar(&out);
        prop_assert!(after.max_abs_diff(&phi) < 1e-13);
    }

    #[test]
    fn collision_conserves_density_and_momentum(
        f in distribution_field(4, 4),
        freq in 0.1..=1.9f64,
    ) {
        let (rho, u) = moments_fluid(&f).unwrap();
        let feq = equilibrium_fluid(&rho, &u, &lat()).unwrap();
        let out = collide_bgk(&f, &feq, RelaxationParam::new(freq).unwrap()).unwrap();
        let (rho2, u2) = moments_fluid(&out).unwrap();
        prop_assert!(rho2.max_abs_diff(&rho) < 1e-12);
        prop_assert!(u2.max_abs_diff(&u) < 1e-12);
    }

    #[test]
    fn reaction_source_adds_exactly_the_reaction_rate(
        phi in scalar_field(5, 5, 0.0, 1.0),
        rate in 0.01..=0.5f64,
    ) {
        let u = VectorField::new(5, 5);
        let f = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let reaction = ReactionTerm::logistic(rate).unwrap();
        let out = apply_reaction_source(&f, &phi, &reaction, &lat()).unwrap();
        let after = moments_scalar(&out);
        for y in 0..5 {
            for x in 0..5 {
                let p = phi.get(x, y);
                let expected = p + rate * p * (1.0 - p);
                prop_assert!((after.get(x, y) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn streaming_conserves_every_direction_total(f in distribution_field(6, 4)) {
        let out = stream(&f);
        for i in 0..Q {
            let mut sa: Vec<u64> = f.plane(i).iter().map(|v| v.to_bits()).collect();
            let mut sb: Vec<u64> = out.plane(i).iter().map(|v| v.to_bits()).collect();
            sa.sort_unstable();
            sb.sort_unstable();
            prop_assert_eq!(sa, sb, "direction {} not a permutation", i);
        }
    }

    #[test]
    fn sealed_box_boundary_pass_conserves_mass(f in distribution_field(6, 5)) {
        // Stream then apply bounce-back on all four edges: the walls
        // return exactly what would have left, so total mass is unchanged
        // (up to summation order).
        let pass = assemble_bc_pass(&[
            BcRule { edge: BoundaryEdge::Top, kind: BcKind::NeumannZero },
            BcRule { edge: BoundaryEdge::Bottom, kind: BcKind::NeumannZero },
            BcRule { edge: BoundaryEdge::Left, kind: BcKind::NeumannZero },
            BcRule { edge: BoundaryEdge::Right, kind: BcKind::NeumannZero },
        ]).unwrap();
        let mut post = stream(&f);
        pass.apply_scalar(&mut post, &f);
        let before: f64 = f.total();
        let after: f64 = post.total();
        prop_assert!(((after - before) / before).abs() < 1e-12,
            "sealed box changed mass {} -> {}", before, after);
    }

    #[test]
    fn dirichlet_uniform_rest_state_is_a_fixed_point(value in 0.0..=1.0f64) {
        let phi = ScalarField::constant(6, 6, value);
        let u = VectorField::new(6, 6);
        let f = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let pass = assemble_bc_pass(&[
            BcRule { edge: BoundaryEdge::Top, kind: BcKind::DirichletScalar(value) },
            BcRule { edge: BoundaryEdge::Left, kind: BcKind::DirichletScalar(value) },
        ]).unwrap();
        let collided = collide_bgk(&f, &f, RelaxationParam::new(1.3).unwrap()).unwrap();
        let mut post = stream(&collided);
        pass.apply_scalar(&mut post, &collided);
        let back = moments_scalar(&post);
        prop_assert!(back.max_abs_diff(&phi) < 1e-13);
    }

    #[test]
    fn periodic_delta_is_minimal(a in 0.0..=100.0f64, b in 0.0..=100.0f64) {
        let d = lbm::analysis::periodic_delta(a, b, 100);
        prop_assert!(d.abs() <= 50.0 + 1e-12);
        // moving from a by d lands on b modulo the box
        let wrapped = (a + d).rem_euclid(100.0);
        prop_assert!((wrapped - b).abs() < 1e-9 || (wrapped - b).abs() > 100.0 - 1e-9);
    }

    #[test]
    fn config_round_trip_is_identity(
        nx in 3usize..64,
        ny in 3usize..64,
        steps in 1usize..1_000_000,
        diff in 0.001..=2.0f64,
        vx in -0.2..=0.2f64,
        vy in -0.2..=0.2f64,
        rate in 0.001..=0.5f64,
        sigma in 0.5..=20.0f64,
        every in 0usize..100,
        logistic in proptest::bool::ANY,
    ) {
        use lbm::config::*;
        let c = SimulationConfig {
            nx,
            ny,
            steps,
            physics: Physics::Scalar {
                diffusivity: diff,
                velocity: (vx, vy),
                reaction: if logistic { ReactionSpec::Logistic { rate } } else { ReactionSpec::None },
            },
            bc: [BcSpec::Dirichlet(vx), BcSpec::Neumann, BcSpec::Periodic, BcSpec::Dirichlet(vy)],
            init: InitSpec::Gaussian { sigma },
            output_every: every,
            output_dir: "out_dir".into(),
        };
        let back = parse_config(&render_config(&c)).unwrap();
        prop_assert_eq!(back, c);
    }
}
