use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortexlab::bundle::{apply_gauge, background_connection, coulomb_gauge_fix, degree, Configuration};
use vortexlab::energy::{
    bogomolny_split, energy, energy_change, gradient, hessian_apply, pointwise_bound_check, vortex_census, Variation,
};
use vortexlab::io::config::{parse_config, ExperimentConfig};
use vortexlab::io::snapshot::{read_snapshot, write_snapshot, Provenance};
use vortexlab::mesh::{Geometry, Mesh};
use vortexlab::solver::{minimize, random_configuration, SolveOptions};
use vortexlab::stability::smallest_hessian_eigs;

fn geometry() -> impl Strategy<Value = Geometry> {
    prop_oneof![
        (3usize..10, 3usize..10, 0.5f64..8.0, 0.5f64..8.0).prop_map(|(nx, ny, lx, ly)| Geometry::Torus { nx, ny, lx, ly }),
        (0usize..3, 0.3f64..3.0).prop_map(|(subdivisions, radius)| Geometry::Sphere { subdivisions, radius }),
    ]
}

fn mesh_of(g: &Geometry) -> Arc<Mesh> {
    Arc::new(g.build().unwrap())
}

fn thetas(mesh: &Mesh, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..mesh.num_vertices()).map(|_| rng.random_range(-PI..PI)).collect()
}

fn variation(mesh: &Mesh, seed: u64) -> Variation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * mesh.num_vertices() + mesh.num_edges();
    let flat: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Variation::from_flat(mesh.num_vertices(), &flat)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn config(g: &Geometry, d: i64, eps: f64, seed: u64) -> Configuration {
    random_configuration(mesh_of(g), d, eps, seed).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exterior_derivatives_compose_to_zero(g in geometry()) {
        let dec = mesh_of(&g).dec();
        prop_assert!(dec.d1.compose(&dec.d0).iter().all(|row| row.is_empty()));
    }

    #[test]
    fn face_areas_sum_to_total_area(g in geometry()) {
        let m = mesh_of(&g);
        let sum: f64 = m.faces.iter().map(|f| f.area).sum();
        prop_assert!(close(sum, m.total_area, 1e-12));
    }

    #[test]
    fn meshes_rebuild_identically(g in geometry()) {
        let (a, b) = (mesh_of(&g), mesh_of(&g));
        prop_assert_eq!(a.checksum(), b.checksum());
        for (p, q) in a.positions.iter().zip(&b.positions) {
            prop_assert_eq!(p.map(f64::to_bits), q.map(f64::to_bits));
        }
        for (x, y) in a.dual_areas.iter().zip(&b.dual_areas) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn fluctuations_never_change_the_degree(g in geometry(), d in -4i64..5, scale in 0.0f64..5.0, seed in any::<u64>()) {
        let m = mesh_of(&g);
        let mut conn = background_connection(m.clone(), d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        conn.a.iter_mut().for_each(|a| *a = scale * rng.random_range(-1.0..1.0));
        prop_assert_eq!(degree(&conn).unwrap(), d);
    }

    #[test]
    fn background_curvature_density_is_constant(g in geometry(), d in -4i64..5) {
        let m = mesh_of(&g);
        let conn = background_connection(m.clone(), d);
        let target = 2.0 * PI * d as f64 / m.total_area;
        for (f, face) in conn.curvature().iter().zip(&m.faces) {
            prop_assert!((f / face.area - target).abs() <= 1e-12 * target.abs().max(1.0));
        }
    }

    #[test]
    fn gauge_orbits_compose(g in geometry(), d in -2i64..3, seed in any::<u64>()) {
        let c = config(&g, d, 0.8, seed);
        let (t1, t2) = (thetas(c.mesh(), seed ^ 1), thetas(c.mesh(), seed ^ 2));
        let sum: Vec<f64> = t1.iter().zip(&t2).map(|(a, b)| a + b).collect();
        let twice = apply_gauge(&apply_gauge(&c, &t1), &t2);
        let once = apply_gauge(&c, &sum);
        for (x, y) in twice.a().iter().zip(once.a()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        for (x, y) in twice.u().iter().zip(once.u()) {
            prop_assert!((x - y).norm() <= 1e-12);
        }
    }

    #[test]
    fn coulomb_fixing_is_idempotent(g in geometry(), d in -2i64..3, seed in any::<u64>()) {
        let c = config(&g, d, 0.8, seed);
        let (_, fixed) = coulomb_gauge_fix(&c).unwrap();
        let (theta, _) = coulomb_gauge_fix(&fixed).unwrap();
        prop_assert!(theta.iter().all(|t| t.abs() <= 1e-9));
    }

    #[test]
    fn observables_are_gauge_invariant(g in geometry(), d in -2i64..3, eps in 0.3f64..2.0, seed in any::<u64>()) {
        let c = config(&g, d, eps, seed);
        let gc = apply_gauge(&c, &thetas(c.mesh(), seed));
        prop_assert!(close(energy(&c).total, energy(&gc).total, 1e-11));
        let (s, t) = (bogomolny_split(&c), bogomolny_split(&gc));
        prop_assert!(close(s.defect_plus, t.defect_plus, 1e-11));
        prop_assert!(close(s.defect_minus, t.defect_minus, 1e-11));
        let (p, q) = (pointwise_bound_check(&c), pointwise_bound_check(&gc));
        prop_assert!(close(p.0, q.0, 1e-11) && close(p.1, q.1, 1e-11));
        prop_assert_eq!(vortex_census(&c).total_winding, vortex_census(&gc).total_winding);
    }

    #[test]
    fn gradient_matches_central_differences(g in geometry(), d in -2i64..3, eps in 0.3f64..2.0, seed in any::<u64>()) {
        let c = config(&g, d, eps, seed);
        let p = variation(c.mesh(), seed ^ 7);
        let h = 1e-5;
        let fd = (energy_change(&c, &p, h) - energy_change(&c, &p, -h)) / (2.0 * h);
        let exact = gradient(&c).dot(&p);
        prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-8), "{} {}", fd, exact);
    }

    #[test]
    fn hessian_is_symmetric(g in geometry(), d in -2i64..3, eps in 0.3f64..2.0, seed in any::<u64>()) {
        let c = config(&g, d, eps, seed);
        let (x, y) = (variation(c.mesh(), seed ^ 3), variation(c.mesh(), seed ^ 5));
        let a = x.dot(&hessian_apply(&c, &y));
        let b = y.dot(&hessian_apply(&c, &x));
        prop_assert!(close(a, b, 1e-10));
    }

    #[test]
    fn energy_and_defects_are_nonnegative(g in geometry(), d in -3i64..4, eps in 0.3f64..2.0, seed in any::<u64>()) {
        let c = config(&g, d, eps, seed);
        let e = energy(&c);
        prop_assert!(e.total >= 0.0 && e.curvature_term >= 0.0 && e.kinetic_term >= 0.0 && e.potential_term >= 0.0);
        let s = bogomolny_split(&c);
        prop_assert!(s.defect_plus >= 0.0 && s.defect_minus >= 0.0);
    }

    #[test]
    fn snapshots_round_trip_bit_exactly(g in geometry(), d in -3i64..4, eps in 0.1f64..3.0, seed in any::<u64>()) {
        let c = config(&g, d, eps, seed);
        let text = write_snapshot(&c, &Provenance { command: "prop".into(), seed, timestamp: seed >> 20 }).unwrap();
        let back = read_snapshot(&text).unwrap();
        prop_assert_eq!(back.config.epsilon.to_bits(), c.epsilon.to_bits());
        prop_assert!(back.config.a().iter().zip(c.a()).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(back.config.u().iter().zip(c.u()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        prop_assert_eq!(write_snapshot(&back.config, &back.provenance).unwrap(), text);
    }

    #[test]
    fn resolved_configs_reparse(g in geometry(), d in -5i64..6, eps in 0.05f64..5.0, seed in any::<u64>(), k in 1usize..9) {
        let block = match g {
            Geometry::Torus { nx, ny, lx, ly } => format!("[torus]\nnx = {nx}\nny = {ny}\nlx = {lx:?}\nly = {ly:?}\n"),
            Geometry::Sphere { subdivisions, radius } => format!("[sphere]\nsubdivisions = {subdivisions}\nradius = {radius:?}\n"),
        };
        let text = format!("degree = {d}\nepsilon = {eps:?}\nseed = {seed}\n{block}[spectrum]\nk = {k}\n");
        let c: ExperimentConfig = parse_config(&text).unwrap();
        prop_assert_eq!(c.geometry(), g);
        prop_assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn minimization_is_deterministic_and_monotone(d in -2i64..3, eps in 0.5f64..1.2, seed in any::<u64>()) {
        let g = Geometry::Torus { nx: 8, ny: 8, lx: 2.0 * PI, ly: 2.0 * PI };
        let c = config(&g, d, eps, seed);
        let opts = SolveOptions { max_iterations: Some(150), ..SolveOptions::default() };
        let (a, b) = (minimize(&c, &opts).unwrap(), minimize(&c, &opts).unwrap());
        prop_assert_eq!(
            a.energy_history.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            b.energy_history.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
        for w in a.energy_history.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        prop_assert!(a.energy.total >= 0.0);
        prop_assert!(a.max_gauge_fix_drift <= 1e-11);
    }

    #[test]
    fn spectra_are_gauge_invariant(d in -1i64..2, seed in any::<u64>()) {
        let g = Geometry::Torus { nx: 6, ny: 6, lx: 2.0 * PI, ly: 2.0 * PI };
        let r = minimize(&config(&g, d, 0.7, seed), &SolveOptions::default()).unwrap();
        let gc = apply_gauge(&r.config, &thetas(r.config.mesh(), seed));
        let a = smallest_hessian_eigs(&r.config, 3, 1e-10).unwrap();
        let b = smallest_hessian_eigs(&gc, 3, 1e-10).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            prop_assert!((x - y).abs() <= 1e-8, "{} {}", x, y);
        }
    }
}
