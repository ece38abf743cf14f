mod common;

use common::squared_bundle;
use formation_core::bifurcation::{
    logistic_reference, mu_sweep, sotomayor_check, transcritical_detect, BranchKind, Detection, FnFamily, Stability,
};
use formation_core::numkernel::norm_inf;
use formation_core::rigidity::{is_parallel, make_singular_lengths, Framework};
use formation_core::{FormationGraph, FormationMuFamily, RealBundle, SotomayorOptions, TargetLengths};

fn canonical_bundle() -> RealBundle {
    let sl = make_singular_lengths(1.0, 5.0, 4.0, -2.0).unwrap();
    squared_bundle(sl.lengths.values().to_vec())
}

#[test]
fn proof_framework_passes_sotomayor() {
    let f = Framework::from_flat(FormationGraph::two_cycles(), &[0.0, 0.0, -2.0, 1.0, 0.0, -1.0, 0.5, -0.25]).unwrap();
    let d = TargetLengths::squared(f.edge_vectors().z.iter().map(|z| z.norm_sq()).collect()).unwrap();
    let fam = FormationMuFamily::new(squared_bundle(d.values().to_vec())).unwrap();
    let rep = sotomayor_check(&fam, &fam.coordinates(&f), 0.0, &SotomayorOptions::default()).unwrap();
    assert!(rep.verdict, "{rep:?}");
    assert!(rep.zero_eig_unique && rep.others_negative && !rep.degenerate);
    assert!(rep.left_residual <= 1e-8 && rep.right_residual <= 1e-8);
}

#[test]
fn canonical_witness_kernel_vectors() {
    let sl = make_singular_lengths(1.0, 5.0, 4.0, -2.0).unwrap();
    let fam = FormationMuFamily::new(canonical_bundle()).unwrap();
    let rep = sotomayor_check(&fam, &fam.coordinates(&sl.witness), 0.0, &SotomayorOptions::default()).unwrap();
    assert!(rep.verdict);
    assert!(rep.left_residual <= 1e-8 && rep.right_residual <= 1e-8);
    let unit = |v: &[f64]| (v.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs() < 1e-12;
    assert!(unit(&rep.w) && unit(&rep.v));
}

#[test]
fn saddle_node_fails_the_transcritical_test() {
    let fam = FnFamily::new(1, |q: &[f64], mu: f64| vec![mu - q[0] * q[0]]);
    let rep = sotomayor_check(&fam, &[0.0], 0.0, &SotomayorOptions::default()).unwrap();
    assert!(!rep.verdict);
    assert!((rep.t_mu.abs() - 1.0).abs() < 1e-6);
}

#[test]
fn logistic_diagram_rows() {
    let rows = logistic_reference(-1.0, 1.0, 3);
    let at = |mu: f64| -> Vec<(f64, Stability)> {
        rows.iter().filter(|r| r.mu == mu).map(|r| (r.x, r.stability)).collect()
    };
    assert_eq!(at(-1.0), vec![(0.0, Stability::Stable), (-1.0, Stability::Unstable)]);
    assert_eq!(at(1.0), vec![(0.0, Stability::Unstable), (1.0, Stability::Stable)]);
    assert_eq!(at(0.0), vec![(0.0, Stability::Degenerate)]);
}

#[test]
fn canonical_sweep_branch_invariants() {
    let b = canonical_bundle();
    let sweep = mu_sweep(&b, 0.2, 21).unwrap();
    assert!(sweep.in_singular_set);
    assert!(sweep.gaps.is_empty());
    assert!(transcritical_detect(&sweep).is_detected());
    let fam = FormationMuFamily::new(b).unwrap();
    for p in &sweep.points {
        let bm = fam.bundle_at(p.mu).unwrap();
        assert!(norm_inf(&bm.eval_fx_framework(&p.framework)) <= 1e-9);
        let z = p.framework.edge_vectors().z;
        match p.branch {
            BranchKind::Design => assert!(norm_inf(&p.errors) <= 1e-9),
            BranchKind::AncillaryAligned => {
                assert!(p.errors[1..4].iter().all(|e| e.abs() <= 1e-9));
                assert!(is_parallel(z[0], z[4], 1e-8));
                if p.mu != 0.0 {
                    assert!(p.errors[0].abs() > 1e-6 && p.errors[4].abs() > 1e-6);
                }
            }
        }
    }
    let design = sweep.branch(BranchKind::Design);
    let aligned = sweep.branch(BranchKind::AncillaryAligned);
    let mid = design.iter().position(|p| p.mu == 0.0).unwrap();
    assert!(design[mid].framework.max_distance(&aligned[mid].framework) <= 1e-6);

    // First-order eigenvalue crossing near μ = 0.
    let slope = (design[mid + 1].leading_real - design[mid - 1].leading_real) / (2.0 * sweep.grid_step().unwrap());
    assert!(slope.abs() > 1e-3);
    for p in &design[mid - 3..=mid + 3] {
        assert!((p.leading_real - slope * p.mu).abs() <= 0.05 * slope.abs() * 0.06);
    }
}

#[test]
fn generic_lengths_show_no_exchange() {
    let b = squared_bundle(vec![1.0, 1.3, 0.8, 1.7, 1.1]);
    let sweep = mu_sweep(&b, 0.05, 11).unwrap();
    assert!(!sweep.in_singular_set);
    assert!(matches!(transcritical_detect(&sweep), Detection::NotDetected { .. }));
}

#[test]
fn single_sample_is_indeterminate() {
    let sweep = mu_sweep(&canonical_bundle(), 0.2, 1).unwrap();
    assert!(matches!(transcritical_detect(&sweep), Detection::Indeterminate { .. }));
}
