use oblique_dg::assembly::{assemble_ah, PenaltyConfig};
use oblique_dg::geometry::{disk_mesh_with_rings, uniform_rings, Grading};
use oblique_dg::problem::experiment_catalog;
use oblique_dg::solver::{condition_estimate, solve, SolveOptions};
use oblique_dg::space::DgSpace;

fn system(rings: usize, degree: usize) -> (f64, oblique_dg::assembly::AssembledSystem) {
    let mesh = disk_mesh_with_rings(rings, Grading::None).unwrap();
    let space = DgSpace::new(&mesh, degree).unwrap();
    let p = experiment_catalog(1).unwrap();
    (mesh.h(), assemble_ah(&space, &p, &PenaltyConfig::default()).unwrap())
}

#[test]
fn condition_grows_like_h_to_minus_four() {
    let (h0, s0) = system(4, 2);
    let (h1, s1) = system(8, 2);
    let ratio = condition_estimate(&s1.matrix).unwrap() / condition_estimate(&s0.matrix).unwrap();
    let hr = h0 / h1;
    assert!((1.8..2.2).contains(&hr), "h ratio {hr}");
    assert!((8.0..=32.0).contains(&ratio), "condition ratio {ratio}");
}

#[test]
fn finest_level_residual_and_mean() {
    let rings = uniform_rings(5);
    let mesh = disk_mesh_with_rings(rings, Grading::None).unwrap();
    let space = DgSpace::new(&mesh, 2).unwrap();
    let p = experiment_catalog(1).unwrap();
    let sys = assemble_ah(&space, &p, &PenaltyConfig::default()).unwrap();
    let (x, rep) = solve(&sys, &SolveOptions::default()).unwrap();
    assert!(rep.converged && rep.final_residual <= 1e-12, "{rep:?}");
    let l1: f64 = {
        let mut a = x.clone();
        a.iter_mut().for_each(|v| *v = v.abs());
        space.integral(&a)
    };
    assert!(space.integral(&x).abs() <= 1e-9 * l1);
}

#[test]
fn refinement_is_monotone_and_deterministic() {
    let (_, sys) = system(13, 3);
    let opts = SolveOptions {
        residual_tolerance: 1e-16,
        max_refinement_iters: 6,
    };
    let (x, rep) = solve(&sys, &opts).unwrap();
    let h = &rep.residual_history;
    assert!(!h.is_empty());
    for w in h.windows(2) {
        assert!(w[1] <= w[0] + 10.0 * f64::EPSILON, "{h:?}");
    }
    assert!(rep.final_residual < 1e-12);
    let (y, _) = solve(&sys, &opts).unwrap();
    assert!(x.iter().zip(&y).all(|(a, b)| a.to_bits() == b.to_bits()));
}
