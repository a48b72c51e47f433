//! Run orchestration and output writers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use pfrac_core::bench::{
    build_problem, contraction_classifier, run_benchmark, ContractionCase, LoadSample,
};
use pfrac_core::vtk::{write_vtk_file, PointField};

use crate::config::RunConfig;

pub const CSV_HEADER: &str = "step,time,u_load,Fx,Fy,stagger_iters,newton_iters,residual,strain_sup,strain_sup_min,strain_sup_max,converged";

/// 17 significant digits, round-trip exact for f64.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_row(s: &LoadSample) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        s.step,
        fmt(s.time),
        fmt(s.u_load),
        fmt(s.fx),
        fmt(s.fy),
        s.stagger_iters,
        s.newton_iters,
        fmt(s.residual),
        fmt(s.strain_sup_final),
        fmt(s.strain_sup_min),
        fmt(s.strain_sup_max),
        s.converged
    )
}

pub fn write_load_csv(path: &Path, samples: &[LoadSample]) -> Result<()> {
    let file = fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{CSV_HEADER}")?;
    for s in samples {
        writeln!(out, "{}", csv_row(s))?;
    }
    out.flush()?;
    Ok(())
}

/// Runs one benchmark configuration and writes the load-displacement record
/// plus optional field snapshots. Returns the samples for reuse by sweeps.
pub fn cmd_run(config: &RunConfig, quiet: bool) -> Result<Vec<LoadSample>> {
    let out_dir = config.resolved_output_dir();
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output dir {}", out_dir.display()))?;
    if !config.deterministic && !quiet {
        println!("note: runs are single-threaded and deterministic regardless of this flag");
    }
    let (spec, mesh) = build_problem(config.problem, config.refinement, &config.problem_options())?;
    if !quiet {
        println!(
            "running {:?} at refinement {}: {} elements, {} nodes, eps = {:.6}, gamma = {:.6}, L_u = {:e}, L_phi = {:e}",
            config.problem,
            config.refinement,
            mesh.num_elements(),
            mesh.num_nodes(),
            spec.params.eps,
            spec.params.gamma,
            spec.params.l_u,
            spec.params.l_phi,
        );
    }
    let stagger = config.staggered_config();
    let vtk_every = config.vtk_every;
    let n_steps = spec.n_steps;
    let progress_every = (n_steps / 4).max(1);
    let samples = run_benchmark(&spec, &stagger, &mesh, |sample, state, _report| {
        if vtk_every > 0 && sample.step % vtk_every == 0 {
            let path = out_dir.join(format!("fields_{}.vtk", sample.step));
            let fields = [
                PointField::Vector2("u", &state.u),
                PointField::Scalar("phi", &state.phi),
                PointField::Scalar("xi", &state.xi),
            ];
            if let Err(err) = write_vtk_file(&path, &mesh, "fields", &fields) {
                eprintln!("warning: failed to write {}: {err}", path.display());
            }
        }
        if !quiet && (sample.step % progress_every == 0 || sample.step == n_steps) {
            println!(
                "  step {:4}/{}  t = {:.6}  F = ({:+.6e}, {:+.6e})  iters = {:3}  converged = {}",
                sample.step, n_steps, sample.time, sample.fx, sample.fy, sample.stagger_iters,
                sample.converged
            );
        }
    })?;
    let csv_path = out_dir.join("load_displacement.csv");
    write_load_csv(&csv_path, &samples)?;
    if !quiet {
        let capped = samples.iter().filter(|s| !s.converged).count();
        println!("wrote {} ({} steps, {} hit the iteration cap)", csv_path.display(), samples.len(), capped);
    }
    Ok(samples)
}

fn l_label(v: f64) -> String {
    format!("{v:e}")
}

/// Runs the stabilization sweep: one run per L value with L_u = L_phi = L,
/// plus the two special configurations (L_u = 0, L_phi > 0) and
/// (L_u = L_phi = 0). Emits a per-step iteration-count summary.
pub fn cmd_sweep(base: &RunConfig, l_values: &[f64], special_l_phi: f64, quiet: bool) -> Result<()> {
    anyhow::ensure!(!l_values.is_empty(), "sweep needs a nonempty L list");
    let root = base.resolved_output_dir();
    fs::create_dir_all(&root)?;
    let mut columns: Vec<(String, Vec<LoadSample>)> = Vec::new();
    let mut runs: Vec<(String, f64, f64)> = l_values
        .iter()
        .map(|&l| (format!("L_{}", l_label(l)), l, l))
        .collect();
    runs.push((format!("Lu0_Lphi_{}", l_label(special_l_phi)), 0.0, special_l_phi));
    runs.push(("L0".to_string(), 0.0, 0.0));
    for (name, l_u, l_phi) in runs {
        let mut cfg = base.clone();
        cfg.l_u = l_u;
        cfg.l_phi = l_phi;
        cfg.output_dir = root.join(&name);
        if !quiet {
            println!("== sweep configuration {name} ==");
        }
        let samples = cmd_run(&cfg, quiet)?;
        columns.push((name, samples));
    }
    let summary_path = root.join("sweep_summary.csv");
    let mut out = BufWriter::new(fs::File::create(&summary_path)?);
    write!(out, "step")?;
    for (name, _) in &columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    let n_steps = columns.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    for i in 0..n_steps {
        write!(out, "{}", i + 1)?;
        for (_, samples) in &columns {
            match samples.get(i) {
                Some(s) => write!(out, ",{}", s.stagger_iters)?,
                None => write!(out, ",")?,
            }
        }
        writeln!(out)?;
    }
    out.flush()?;
    if !quiet {
        println!("wrote {}", summary_path.display());
    }
    Ok(())
}

/// Evaluates the contraction classifier for the configured problem.
pub fn cmd_classify(config: &RunConfig, strain_bound: f64, c_p: f64) -> Result<()> {
    let (spec, _mesh) = build_problem(config.problem, config.refinement, &config.problem_options())?;
    let verdict = contraction_classifier(&spec.params, strain_bound, c_p);
    println!("xi = (M lambda_max/lambda_min)^2 = {:e}", verdict.xi_const);
    println!(
        "P(eps) = eps^2 - {:e} eps + {:e}",
        verdict.linear_coeff, verdict.c_p
    );
    match verdict.case {
        ContractionCase::ComplexRoots => {
            println!("case: complex roots -- contraction holds for all eps > 0");
        }
        ContractionCase::DoubleRoot => {
            let (r, _) = verdict.roots.unwrap();
            println!("case: double root at eps0 = {r:e} -- contraction holds for all eps != eps0");
        }
        ContractionCase::TwoRealRoots => {
            let (r1, r2) = verdict.roots.unwrap();
            println!(
                "case: two distinct positive real roots eps1 = {r1:e}, eps2 = {r2:e} -- contraction holds on (0, eps1) U (eps2, inf)"
            );
        }
    }
    println!(
        "at configured eps = {:e}: P(eps) = {:e} -> contraction condition {}",
        verdict.eps,
        verdict.p_at_eps,
        if verdict.contraction_holds { "satisfied" } else { "NOT satisfied" }
    );
    Ok(())
}
