mod common;

use nahm_core::nahm::{nahm_matrices, residuals, verification_samples};
use nahm_core::oracles::{exact_n2, relative_distance, unrotate};
use nahm_core::spectral::{genericize, Spectral};
use nahm_core::Quad;

#[test]
fn generic_pair_matches_closed_form() {
    let cfg = common::config(vec![[0.3, -0.7, 0.4], [-0.5, 0.2, -0.6]]);
    let sp = Spectral::<Quad>::new(&cfg).unwrap();
    for s in [0.25, 1.0, 3.0, 7.0] {
        let t = nahm_matrices(&sp, s).unwrap().to_f64();
        assert!(relative_distance(&t, &exact_n2(&cfg, s).unwrap()) < 1e-12, "s={s}");
    }
}

#[test]
fn rotated_frame_preserves_invariants() {
    // a vertical pair needs a rotation before the solve
    let cfg = common::config(vec![[0.2, 0.1, 1.0], [0.2, 0.1, -0.4], [-0.8, 0.5, 0.3]]);
    let (rot, working) = genericize(&cfg, 11).unwrap();
    assert!(!rot.is_identity());
    let sp = Spectral::<Quad>::new(&working).unwrap();
    let s = 1.5;
    let t = unrotate(&nahm_matrices(&sp, s).unwrap().to_f64(), &rot);
    // the large-s limit sits at the input positions
    let far = unrotate(&nahm_matrices(&sp, 12.0).unwrap().to_f64(), &rot);
    for j in 0..3 {
        let mut diag: Vec<f64> = (0..3).map(|k| far.t[j + 1][(k, k)].im).collect();
        let mut want: Vec<f64> = cfg.points.iter().map(|p| p[j]).collect();
        diag.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (a, b) in diag.iter().zip(&want) {
            assert!((a - b).abs() < 1e-4, "axis {j}: {diag:?} vs {want:?}");
        }
    }
    let rep = residuals(&sp, s, 1e-5, &verification_samples(&sp, 0)).unwrap();
    assert!(rep.max_nahm() < 1e-6);
    assert!(t.antihermitian_residual() < 1e-14);
}
