use std::fmt::Write as _;

use formation_core::bifurcation::{most_parallel_design, Orientation};
use formation_core::equilibria::{design_frameworks, formation_record};
use formation_core::numkernel::{integrate_ode, norm_inf, OdeMethod, OdeOptions};
use formation_core::rigidity::Framework;
use formation_core::{
    census, mu_sweep, sotomayor_check, transcritical_detect, CensusOptions, Detection, FormationMuFamily, RealBundle,
    RealFramework, RealRecord, SotomayorOptions, SweepResult,
};

use crate::error::CliError;
use crate::format::{
    eigen_cells, eigen_headers, position_cells, position_headers, sig6, spectrum_list, yes_no, Table,
};
use crate::scenario::{Experiment, Loaded, Positions};

/// Default relative rank tolerance of the rigidity experiment.
pub const RANK_TOL: f64 = 1e-9;

/// Settings that command-line flags may override.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub summary: String,
    pub table: Table,
}

pub fn run(l: &Loaded, ov: Overrides) -> Result<Report, CliError> {
    let b = &l.bundle;
    match &l.scenario.experiment {
        Experiment::Census {
            grid,
            n_random,
            n_collinear,
        } => {
            let d = CensusOptions::default();
            let opts = CensusOptions {
                grid: grid.unwrap_or(d.grid),
                n_random: n_random.unwrap_or(d.n_random),
                n_collinear: n_collinear.unwrap_or(d.n_collinear),
                seed: ov.seed.unwrap_or(l.scenario.seed),
                ..d
            };
            run_census(b, &opts)
        }
        Experiment::Spectrum { positions } => run_spectrum(l, positions.as_ref()),
        Experiment::Sweep { eps, samples } => run_sweep(b, *eps, *samples),
        Experiment::Sotomayor { positions } => {
            let f = match positions {
                Some(p) => l.framework(p)?,
                None => most_parallel_design(b)?,
            };
            run_sotomayor(b, &f, ov.tol)
        }
        Experiment::Simulate {
            positions,
            t_end,
            step,
            sample_every,
        } => run_simulate(l, positions, *t_end, *step, *sample_every),
        Experiment::Rigidity { positions } => {
            let f = match positions {
                Some(p) => l.framework(p)?,
                None => first_design(b)?,
            };
            run_rigidity(&f, ov.tol.unwrap_or(RANK_TOL))
        }
    }
}

fn first_design(b: &RealBundle) -> Result<RealFramework, CliError> {
    let mut fs = design_frameworks(b.graph(), b.lengths())?;
    Ok(fs.swap_remove(0))
}

fn record_header(lead: &[&str], n: usize) -> Vec<String> {
    let mut h: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    h.extend(["kind", "stable", "index", "residual", "leading_real"].map(String::from));
    h.extend(eigen_headers(2 * n - 3));
    h.extend(position_headers(n));
    h
}

fn record_cells(r: &RealRecord, n: usize) -> Vec<String> {
    let mut row = vec![
        r.kind.name().to_string(),
        r.stable.to_string(),
        r.index.to_string(),
        sig6(r.residual),
        sig6(r.leading_real()),
    ];
    let mut eig = eigen_cells(&r.spectrum_gauge);
    eig.resize(2 * (2 * n - 3), String::new());
    row.extend(eig);
    let f = r.framework.as_ref().expect("formation records carry a framework");
    row.extend(position_cells(f.positions()));
    row
}

fn record_line(k: usize, r: &RealRecord) -> String {
    format!(
        "{:>3}  {:<20} {:<7} {:>5}  {:>12}  {}",
        k,
        r.kind.name(),
        yes_no(r.stable),
        r.index,
        sig6(r.leading_real()),
        spectrum_list(&r.spectrum_gauge)
    )
}

fn record_table_header() -> String {
    format!(
        "{:>3}  {:<20} {:<7} {:>5}  {:>12}  {}",
        "#", "kind", "stable", "index", "leading real", "eigenvalues"
    )
}

fn run_census(b: &RealBundle, opts: &CensusOptions) -> Result<Report, CliError> {
    let n = b.graph().n();
    let rep = census(b, opts);
    let mut table = Table::new(record_header(&[], n));
    let mut s = String::new();
    writeln!(
        s,
        "census: {} equilibria from {} seeds ({} dropped), seed {}",
        rep.records.len(),
        rep.seeds_tried,
        rep.seeds_dropped,
        opts.seed
    )
    .unwrap();
    writeln!(s, "{}", record_table_header()).unwrap();
    for (k, r) in rep.records.iter().enumerate() {
        table.push(record_cells(r, n));
        writeln!(s, "{}", record_line(k + 1, r)).unwrap();
    }
    writeln!(s, "feasible: {}", yes_no(rep.feasible)).unwrap();
    writeln!(s, "almost surely stable: {}", yes_no(rep.almost_surely_stable)).unwrap();
    writeln!(s, "index sum: {}", rep.index_sum).unwrap();
    Ok(Report { summary: s, table })
}

fn run_spectrum(l: &Loaded, positions: Option<&Positions>) -> Result<Report, CliError> {
    let b = &l.bundle;
    let n = b.graph().n();
    let frameworks = match positions {
        Some(p) => vec![l.framework(p)?],
        None => design_frameworks(b.graph(), b.lengths())?,
    };
    let mut table = Table::new(record_header(&["framework"], n));
    let mut s = String::from("gauge-fixed spectra\n");
    writeln!(s, "{}", record_table_header()).unwrap();
    for (k, f) in frameworks.iter().enumerate() {
        let r = formation_record(b, f)?;
        let mut row = vec![(k + 1).to_string()];
        row.extend(record_cells(&r, n));
        table.push(row);
        writeln!(s, "{}", record_line(k + 1, &r)).unwrap();
    }
    Ok(Report { summary: s, table })
}

fn run_sweep(b: &RealBundle, eps: f64, samples: usize) -> Result<Report, CliError> {
    let n = b.graph().n();
    let m = b.graph().m();
    let sweep = if samples == 0 {
        SweepResult {
            mu_grid: Vec::new(),
            points: Vec::new(),
            gaps: Vec::new(),
            in_singular_set: false,
        }
    } else {
        mu_sweep(b, eps, samples)?
    };
    let mut header: Vec<String> = ["mu", "branch", "kind", "leading_real", "stable"].map(String::from).to_vec();
    header.extend((1..=m).map(|k| format!("e{k}")));
    header.extend(position_headers(n));
    let mut table = Table::new(header);
    for p in &sweep.points {
        let mut row = vec![
            sig6(p.mu),
            p.branch.name().to_string(),
            p.kind.name().to_string(),
            sig6(p.leading_real),
            p.stable.to_string(),
        ];
        row.extend(p.errors.iter().map(|&e| sig6(e)));
        row.extend(position_cells(p.framework.positions()));
        table.push(row);
    }
    let mut s = String::new();
    writeln!(
        s,
        "sweep of the third target over [{}, {}] with {} samples: {} branch points, {} gaps",
        sig6(-eps),
        sig6(eps),
        samples,
        sweep.points.len(),
        sweep.gaps.len()
    )
    .unwrap();
    if samples > 0 {
        writeln!(s, "base lengths in singular set: {}", yes_no(sweep.in_singular_set)).unwrap();
    }
    let verdict = match transcritical_detect(&sweep) {
        Detection::Detected {
            orientation,
            crossing_design,
            crossing_aligned,
        } => {
            let side = match orientation {
                Orientation::DesignStableAbove => "mu > 0",
                Orientation::DesignStableBelow => "mu < 0",
            };
            format!(
                "detected (design branch stable for {side}; crossings at mu = {} and {})",
                sig6(crossing_design),
                sig6(crossing_aligned)
            )
        }
        Detection::NotDetected { reason } => format!("not detected ({reason})"),
        Detection::Indeterminate { reason } => format!("indeterminate ({reason})"),
    };
    writeln!(s, "transcritical: {verdict}").unwrap();
    Ok(Report { summary: s, table })
}

fn run_sotomayor(b: &RealBundle, f: &RealFramework, tol: Option<f64>) -> Result<Report, CliError> {
    let fam = FormationMuFamily::new(b.clone())?;
    let mut opts = SotomayorOptions::default();
    if let Some(t) = tol {
        opts.tol_zero = t;
    }
    let rep = sotomayor_check(&fam, &fam.coordinates(f), 0.0, &opts)?;
    let mut table = Table::new(vec!["quantity".into(), "value".into()]);
    for (k, (re, im)) in rep.eigenvalues.to_f64_pairs().iter().enumerate() {
        table.push(vec![format!("re{}", k + 1), sig6(*re)]);
        table.push(vec![format!("im{}", k + 1), sig6(*im)]);
    }
    let scalars = [
        ("t_mu", rep.t_mu),
        ("dfdmu_norm", rep.dfdmu_norm),
        ("t_quad", rep.t_quad),
        ("t_mixed", rep.t_mixed),
        ("left_residual", rep.left_residual),
        ("right_residual", rep.right_residual),
    ];
    for (name, v) in scalars {
        table.push(vec![name.into(), sig6(v)]);
    }
    let flags = [
        ("zero_eig_unique", rep.zero_eig_unique),
        ("others_negative", rep.others_negative),
        ("degenerate", rep.degenerate),
        ("verdict", rep.verdict),
    ];
    for (name, v) in flags {
        table.push(vec![name.into(), v.to_string()]);
    }
    let eig: Vec<String> = rep.eigenvalues.values().iter().map(|c| crate::format::complex(c.re, c.im)).collect();
    let mut s = String::from("transcritical conditions at mu = 0, perturbing the third target\n");
    writeln!(s, "eigenvalues: ({})", eig.join(", ")).unwrap();
    writeln!(
        s,
        "unique zero eigenvalue: {}, others negative: {}",
        yes_no(rep.zero_eig_unique),
        yes_no(rep.others_negative)
    )
    .unwrap();
    writeln!(s, "t_mu: {} (|dF/dmu| = {})", sig6(rep.t_mu), sig6(rep.dfdmu_norm)).unwrap();
    writeln!(s, "t_quad: {}", sig6(rep.t_quad)).unwrap();
    writeln!(s, "t_mixed: {}", sig6(rep.t_mixed)).unwrap();
    let verdict = if rep.verdict { "transcritical" } else { "conditions fail" };
    writeln!(s, "verdict: {verdict}").unwrap();
    Ok(Report { summary: s, table })
}

fn run_simulate(
    l: &Loaded,
    positions: &Positions,
    t_end: f64,
    step: f64,
    sample_every: usize,
) -> Result<Report, CliError> {
    let b = &l.bundle;
    let g = b.graph();
    let x0: Vec<f64> = positions.iter().flatten().copied().collect();
    let opts = OdeOptions {
        step,
        method: OdeMethod::Rk4,
        sample_every,
    };
    let traj = integrate_ode(|x: &[f64]| b.eval_fx(x), &x0, t_end, &opts)?;
    let mut header = vec!["t".to_string()];
    header.extend(position_headers(g.n()));
    header.extend((1..=g.m()).map(|k| format!("e{k}")));
    let mut table = Table::new(header);
    let mut last_errors = Vec::new();
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let f = Framework::from_flat(g.clone(), x)?;
        let e = f.edge_errors(b.lengths())?;
        let mut row = vec![sig6(*t)];
        row.extend(x.iter().map(|&v| sig6(v)));
        row.extend(e.iter().map(|&v| sig6(v)));
        table.push(row);
        last_errors = e;
    }
    let max_e = norm_inf(&last_errors);
    let outcome = if max_e <= 1e-6 {
        "reached a design framework"
    } else if traj.final_field_norm <= 1e-6 {
        "settled away from the design"
    } else {
        "still moving"
    };
    let mut s = String::new();
    writeln!(
        s,
        "simulated to t = {} with step {} ({} stored states)",
        sig6(t_end),
        sig6(step),
        traj.states.len()
    )
    .unwrap();
    writeln!(s, "final max |e|: {}", sig6(max_e)).unwrap();
    writeln!(s, "final |F|: {}", sig6(traj.final_field_norm)).unwrap();
    writeln!(s, "outcome: {outcome}").unwrap();
    Ok(Report { summary: s, table })
}

/// The one-line rigidity verdict.
pub fn rigidity_line(rank: usize, expected: usize, infinitesimal: bool, minimal: bool) -> String {
    let detail = match (infinitesimal, minimal) {
        (true, true) => "infinitesimally rigid, minimally rigid",
        (true, false) => "infinitesimally rigid, not minimally rigid",
        (false, _) => "not infinitesimally rigid",
    };
    format!("rank {rank} of {expected} ({detail})")
}

fn run_rigidity(f: &RealFramework, tol: f64) -> Result<Report, CliError> {
    let n = f.graph().n();
    let expected = (2 * n).saturating_sub(3);
    let rank = f.rigidity_rank(tol)?;
    let infinitesimal = f.is_infinitesimally_rigid(tol)?;
    let minimal = infinitesimal && f.is_minimally_rigid(tol)?;
    let mut table = Table::new(["rank", "expected", "infinitesimally_rigid", "minimally_rigid"].map(String::from).to_vec());
    table.push(vec![
        rank.to_string(),
        expected.to_string(),
        infinitesimal.to_string(),
        minimal.to_string(),
    ]);
    let summary = format!("{}\n", rigidity_line(rank, expected, infinitesimal, minimal));
    Ok(Report { summary, table })
}
