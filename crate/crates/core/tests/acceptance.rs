//! End-to-end acceptance checks. Runs without the libtest harness so that
//! each criterion prints exactly one PASS or FAIL line.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{random_feasible_lengths, random_framework, squared_bundle};
use formation_core::bifurcation::{logistic_reference, mu_sweep, sotomayor_check, transcritical_detect, FnFamily, Stability};
use formation_core::equilibria::{
    census, census_model, design_frameworks, gauge_fixed_spectrum, identify_convention, match_spectra,
    CensusOptions, ScalarDemo, FIG2_LENGTHS,
};
use formation_core::numkernel::{eigenvalues, fd_jacobian, kron_i2, left_nullspace, norm_inf, rank_tol};
use formation_core::rigidity::{block_diag_rows, make_singular_lengths};
use formation_core::{
    FormationGraph, FormationMuFamily, Matrix, PublishedSpectra, SotomayorOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("runtime {t:?} exceeds {limit:?}"))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let report = identify_convention(&FIG2_LENGTHS, &PublishedSpectra::fig2());
    let best = report.best();
    within(Duration::from_secs(5), start)?;
    if report.quantitative_match() {
        return Ok(format!("{} matches all three tuples within 0.15", best.id));
    }
    ensure(report.qualitative_match(), || {
        format!(
            "no convention reproduces the stability character (best {}, max deviation {:.3})",
            best.id, best.max_deviation
        )
    })?;
    Ok(format!(
        "qualitative: under {} D1 stable, D2 one unstable eigenvalue, A1 stable; \
         quantitative deviation {:.3} exceeds 0.15 for every convention",
        best.id, best.max_deviation
    ))
}

fn criterion_2() -> Outcome {
    let g = FormationGraph::two_cycles();
    let am: Matrix = g.mixed_adjacency();
    let ae: Matrix = g.edge_adjacency();
    let am_ref = Matrix::from_f64_rows(&[
        [-1.0, 1.0, 0.0, 0.0],
        [0.0, -1.0, 1.0, 0.0],
        [1.0, 0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0, -1.0],
        [-1.0, 0.0, 0.0, 1.0],
    ]);
    let ae_ref = Matrix::from_f64_rows(&[
        [-1.0, 1.0, 0.0, 0.0, -1.0],
        [0.0, -1.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, -1.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, -1.0, 0.0],
        [-1.0, 0.0, 0.0, 1.0, -1.0],
    ]);
    ensure(am.as_slice() == am_ref.as_slice(), || "mixed adjacency differs".into())?;
    ensure(ae.as_slice() == ae_ref.as_slice(), || "edge adjacency differs".into())?;
    let rank = rank_tol(&am, 1e-9).map_err(|e| e.to_string())?;
    ensure(rank == 3, || format!("rank A_m = {rank}"))?;
    let basis = left_nullspace(&am, 1e-9).map_err(|e| e.to_string())?;
    ensure(basis.len() == 2, || format!("cokernel dimension {}", basis.len()))?;
    let mut worst: f64 = 0.0;
    for target in [[0.0, 0.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 0.0, 0.0]] {
        let mut proj = [0.0; 5];
        for b in &basis {
            let c: f64 = b.iter().zip(&target).map(|(x, y)| x * y).sum();
            for k in 0..5 {
                proj[k] += c * b[k];
            }
        }
        worst = worst.max(common::max_abs_diff(&proj, &target));
    }
    ensure(worst <= 1e-9, || format!("cokernel span residual {worst:e}"))?;
    Ok(format!("fixtures exact, rank 3, cokernel residual {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = FormationGraph::two_cycles();
    let am2 = kron_i2(&g.mixed_adjacency::<f64>());
    let mut worst_r: f64 = 0.0;
    for _ in 0..200 {
        let f = random_framework(&mut rng);
        let dz = block_diag_rows(&f.edge_vectors().z);
        let diff = &f.rigidity_matrix() - &(&dz * &am2);
        worst_r = worst_r.max(diff.max_abs());
    }
    ensure(worst_r <= 1e-12, || format!("‖R − D(z)A_m⁽²⁾‖ = {worst_r:e}"))?;
    let (mut worst_z, mut worst_d, mut worst_s): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..20 {
        let d = random_feasible_lengths(&mut rng);
        let b = squared_bundle(d.clone());
        for f in design_frameworks(b.graph(), b.lengths()).map_err(|e| e.to_string())? {
            let z = f.edge_vectors().to_flat();
            let jz = b.jacobian_z(&z).map_err(|e| e.to_string())?;
            let fd = fd_jacobian(|p: &[f64]| b.eval_fz_unchecked(p), &z, 1e-6);
            worst_z = worst_z.max((&jz - &fd).max_abs() / jz.max_abs());
            let jd = b.jacobian_d(&z).map_err(|e| e.to_string())?;
            let fdd = fd_jacobian(
                |dd: &[f64]| squared_bundle(dd.to_vec()).eval_fz_unchecked(&z),
                &d,
                1e-6,
            );
            worst_d = worst_d.max((&jd - &fdd).max_abs() / jd.max_abs());
            let full = eigenvalues(&jz).map_err(|e| e.to_string())?;
            let tol = 1e-6 * full.spectral_radius();
            let zeros = full.count_zero(tol);
            ensure(zeros == 5, || format!("zero eigenvalue multiplicity {zeros}"))?;
            let reduced = eigenvalues(&b.reduced_j(&z).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let devs = match_spectra(&full.nonzero(tol).to_f64_pairs(), &reduced.to_f64_pairs())
                .ok_or("nonzero spectrum has the wrong size")?;
            worst_s = worst_s.max(devs.iter().cloned().fold(0.0, f64::max));
        }
    }
    ensure(worst_z <= 1e-5, || format!("∂F/∂z relative FD error {worst_z:e}"))?;
    ensure(worst_d <= 1e-5, || format!("∂F/∂d relative FD error {worst_d:e}"))?;
    ensure(worst_s <= 1e-6, || format!("spectrum mismatch {worst_s:e}"))?;
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "R {worst_r:.1e}, ∂F/∂z {worst_z:.1e}, ∂F/∂d {worst_d:.1e}, spectra {worst_s:.1e}"
    ))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut done = 0;
    let mut worst: f64 = 0.0;
    while done < 20 {
        let d1: f64 = rng.gen_range(0.5..4.0);
        let x3 = (rng.gen_range(-1.0..2.0), rng.gen_range(0.5..2.0));
        let d3 = x3.0 * x3.0 + x3.1 * x3.1;
        let d2 = (x3.0 - d1.sqrt()).powi(2) + x3.1 * x3.1;
        let s: f64 = rng.gen_range(-3.0..3.0);
        if s.abs() < 0.3 || (s - d1.sqrt()).abs() < 0.3 {
            continue;
        }
        let sl = make_singular_lengths(d1, d2, d3, s).map_err(|e| e.to_string())?;
        let b = squared_bundle(sl.lengths.values().to_vec());
        let z = sl.witness.edge_vectors().to_flat();
        let jb = b.jacobian_bundle(&z).map_err(|e| e.to_string())?;
        ensure(jb.corank == 1, || format!("corank {} at s = {s}", jb.corank))?;
        let rank = rank_tol(&jb.j_reduced, 1e-8).map_err(|e| e.to_string())?;
        ensure(rank == 4, || format!("reduced J rank {rank} at tolerance 1e-8"))?;
        let rigid = sl.witness.is_infinitesimally_rigid(1e-9).map_err(|e| e.to_string())?;
        ensure(rigid, || "witness is not infinitesimally rigid".into())?;
        let (dfdz, dfdd) = (&jb.dfdz, &jb.dfdd);
        let lz = left_nullspace(dfdz, 1e-9).map_err(|e| e.to_string())?;
        let ld = left_nullspace(dfdd, 1e-9).map_err(|e| e.to_string())?;
        for w in &lz {
            worst = worst.max(norm_inf(&dfdd.vecmat(w).unwrap()) / dfdd.max_abs());
        }
        for w in &ld {
            worst = worst.max(norm_inf(&dfdz.vecmat(w).unwrap()) / dfdz.max_abs());
        }
        ensure(lz.len() == ld.len(), || format!("left kernels of dimension {} and {}", lz.len(), ld.len()))?;
        done += 1;
    }
    ensure(worst <= 1e-8, || format!("left-kernel equivalence residual {worst:e}"))?;
    Ok(format!("20 witnesses: corank 1, rank R = 5, left-kernel residual {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let sl = make_singular_lengths(1.0, 5.0, 4.0, -2.0).map_err(|e| e.to_string())?;
    let b = squared_bundle(sl.lengths.values().to_vec());
    let sweep = mu_sweep(&b, 0.2, 21).map_err(|e| e.to_string())?;
    let det = transcritical_detect(&sweep);
    ensure(det.is_detected(), || format!("sweep: {det:?}"))?;
    let fam = FormationMuFamily::new(b).map_err(|e| e.to_string())?;
    let rep = sotomayor_check(&fam, &fam.coordinates(&sl.witness), 0.0, &SotomayorOptions::default())
        .map_err(|e| e.to_string())?;
    ensure(rep.verdict, || format!("Sotomayor verdict false: {rep:?}"))?;
    ensure(rep.t_mu.abs() <= 1e-6 * rep.dfdmu_norm, || format!("t_mu = {:e}", rep.t_mu))?;
    ensure(rep.t_quad.abs() >= 1e-3 && rep.t_mixed.abs() >= 1e-3, || {
        format!("t_quad = {:e}, t_mixed = {:e}", rep.t_quad, rep.t_mixed)
    })?;
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "{det:?}; t_mu {:.1e}, t_quad {:.4}, t_mixed {:.4}",
        rep.t_mu, rep.t_quad, rep.t_mixed
    ))
}

fn criterion_6() -> Outcome {
    let fam = FnFamily::new(1, |q: &[f64], mu: f64| vec![q[0] * (mu - q[0])]);
    let rep = sotomayor_check(&fam, &[0.0], 0.0, &SotomayorOptions::default()).map_err(|e| e.to_string())?;
    ensure(rep.verdict, || "verdict false".into())?;
    ensure((rep.t_quad + 2.0).abs() <= 1e-6, || format!("t_quad = {}", rep.t_quad))?;
    ensure((rep.t_mixed - 1.0).abs() <= 1e-6, || format!("t_mixed = {}", rep.t_mixed))?;
    ensure(rep.t_mu.abs() <= 1e-9, || format!("t_mu = {}", rep.t_mu))?;
    for row in logistic_reference(-1.0, 1.0, 41) {
        let expected = match (row.x == 0.0, row.mu.partial_cmp(&0.0).unwrap()) {
            (_, std::cmp::Ordering::Equal) => Stability::Degenerate,
            (true, std::cmp::Ordering::Less) | (false, std::cmp::Ordering::Greater) => Stability::Stable,
            _ => Stability::Unstable,
        };
        ensure(row.stability == expected, || format!("label at μ = {}, x = {}", row.mu, row.x))?;
    }
    Ok(format!("t_quad {:.9}, t_mixed {:.9}, t_mu {:.1e}", rep.t_quad, rep.t_mixed, rep.t_mu))
}

fn criterion_7() -> Outcome {
    let demo = ScalarDemo { k: 1.0, design: vec![1.0] };
    let rep = census_model(&demo, &CensusOptions::default());
    let mut all: Vec<f64> = rep.records.iter().map(|r| r.state[0]).collect();
    let mut stable: Vec<f64> = rep.stable_records().map(|r| r.state[0]).collect();
    all.sort_by(f64::total_cmp);
    stable.sort_by(f64::total_cmp);
    let close = |a: &[f64], b: &[f64]| a.len() == b.len() && common::max_abs_diff(a, b) < 1e-9;
    ensure(close(&all, &[-1.0, 0.0, 1.0]), || format!("equilibria {all:?}"))?;
    ensure(close(&stable, &[-1.0, 1.0]), || format!("stable equilibria {stable:?}"))?;
    ensure(rep.feasible && !rep.almost_surely_stable, || {
        format!("feasible {}, almost surely stable {}", rep.feasible, rep.almost_surely_stable)
    })?;
    Ok("E = {-1, 0, 1}, E_s = {-1, 1}, feasible, not almost surely stable".into())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_mirror: f64 = 0.0;
    for _ in 0..20 {
        let b = squared_bundle(random_feasible_lengths(&mut rng));
        let fs = design_frameworks(b.graph(), b.lengths()).map_err(|e| e.to_string())?;
        for (i, j) in [(0, 3), (1, 2)] {
            let partner = fs[i].mirrored().canonical_gauge();
            ensure(partner.max_distance(&fs[j]) < 1e-9, || "mirror partner mismatch".into())?;
            let a = gauge_fixed_spectrum(&b, &fs[i]).map_err(|e| e.to_string())?;
            let c = gauge_fixed_spectrum(&b, &fs[j]).map_err(|e| e.to_string())?;
            let devs = match_spectra(&a.to_f64_pairs(), &c.to_f64_pairs()).ok_or("size")?;
            worst_mirror = worst_mirror.max(devs.iter().cloned().fold(0.0, f64::max));
        }
    }
    ensure(worst_mirror <= 1e-8, || format!("mirror spectra differ by {worst_mirror:e}"))?;
    let mut worst_eq: f64 = 0.0;
    for _ in 0..100 {
        let b = squared_bundle(random_feasible_lengths(&mut rng));
        let f = random_framework(&mut rng);
        let theta = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        let t = formation_core::Vec2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let moved = f.transformed(theta, t);
        let v = b.eval_fx(&f.to_flat());
        let vm = b.eval_fx(&moved.to_flat());
        let scale = norm_inf(&v).max(1.0);
        for k in 0..4 {
            let r = formation_core::Vec2::new(v[2 * k], v[2 * k + 1]).rotate(theta);
            worst_eq = worst_eq.max(((r.x - vm[2 * k]).abs()).max((r.y - vm[2 * k + 1]).abs()) / scale);
        }
    }
    ensure(worst_eq <= 1e-12, || format!("equivariance residual {worst_eq:e}"))?;
    let mut stable_count = 0;
    let fig2 = formation_core::equilibria::ConventionId {
        law: formation_core::equilibria::ConventionLaw::SquaredOfPlain,
        order: formation_core::equilibria::LengthOrder::TailSwapped,
    };
    let mut bundles = vec![fig2.bundle(&FIG2_LENGTHS).map_err(|e| e.to_string())?];
    for _ in 0..3 {
        bundles.push(squared_bundle(random_feasible_lengths(&mut rng)));
    }
    for b in &bundles {
        let rep = census(b, &CensusOptions::default());
        for r in rep.stable_records() {
            ensure(r.spectrum_gauge.len() == 5, || "gauge dimension".into())?;
            ensure(r.index == -1, || format!("stable {} record with index {}", r.kind, r.index))?;
            stable_count += 1;
        }
    }
    Ok(format!(
        "mirror {worst_mirror:.1e}, equivariance {worst_eq:.1e}, {stable_count} stable records all of index -1"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 published spectra", criterion_1),
        ("2 adjacency fixtures", criterion_2),
        ("3 factorization identities", criterion_3),
        ("4 singular set", criterion_4),
        ("5 transcritical reproduction", criterion_5),
        ("6 logistic oracle", criterion_6),
        ("7 almost-sure-stability taxonomy", criterion_7),
        ("8 symmetry and index", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
