//! Analysis, certification, construction and profile commands.

use std::path::Path;

use ibckit::ibc::{check_ibc_with, construct_ibc_polytope, default_lambda_grid, CheckOptions, InputSet};
use ibckit::io::{from_json, to_json, ControllerDoc, PolytopeDoc, SystemDoc};
use ibckit::robots::{safe_speed_profile, AxisSpec};
use ibckit::system::SystemError;
use ibckit::{IbcCertificate, LinearSystem, Polytope, Verdict};
use nalgebra::DVector;
use serde::Serialize;

use crate::error::CliError;
use crate::manifest::Recorder;

pub fn load_system(rec: &mut Recorder, path: &Path) -> Result<LinearSystem<f64>, CliError> {
    let doc: SystemDoc = from_json(&rec.read(path)?)?;
    Ok(doc.linear()?)
}

pub fn load_polytope(rec: &mut Recorder, path: &Path) -> Result<Polytope<f64>, CliError> {
    let doc: PolytopeDoc = from_json(&rec.read(path)?)?;
    Ok(doc.polytope()?)
}

pub fn write_json<S: Serialize>(rec: &mut Recorder, path: &Path, value: &S) -> Result<(), CliError> {
    rec.write(path, to_json(value)?.as_bytes())
}

/// Parses repeated `LO:HI` flags into a box with one interval per input.
pub fn parse_input_box(specs: &[String], m: usize) -> Result<InputSet<f64>, CliError> {
    if specs.is_empty() {
        return Ok(InputSet::Unbounded);
    }
    if specs.len() != m {
        return Err(CliError::schema(format!("{} --input-box intervals given for {m} inputs", specs.len())));
    }
    let mut lo = DVector::zeros(m);
    let mut hi = DVector::zeros(m);
    for (i, s) in specs.iter().enumerate() {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| CliError::schema(format!("input box '{s}' is not LO:HI")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CliError::schema(format!("input box '{s}' has a bad number '{t}'")))
        };
        lo[i] = parse(a)?;
        hi[i] = parse(b)?;
        if lo[i].is_nan() || hi[i].is_nan() || lo[i] >= hi[i] {
            return Err(CliError::schema(format!("input box '{s}' needs LO < HI")));
        }
    }
    Ok(InputSet::Box { lo, hi })
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: usize,
    m: usize,
    controllable: bool,
    dim_o: usize,
    decomposition_ok: bool,
    condition_number: Option<f64>,
    shift: Vec<f64>,
    holding_input: Vec<f64>,
}

pub fn analyze(rec: &mut Recorder, out: &Path, system: &Path) -> Result<(), CliError> {
    let doc: SystemDoc = from_json(&rec.read(system)?)?;
    let affine = doc.affine::<f64>()?;
    let sys = affine.shift_to_linear()?;
    let dec = sys.decompose();
    let report = AnalyzeReport {
        n: sys.n(),
        m: sys.m(),
        controllable: sys.is_controllable(),
        dim_o: sys.equilibrium_set().ncols(),
        decomposition_ok: dec.is_ok(),
        condition_number: dec.as_ref().ok().map(|d| d.condition_number()),
        shift: sys.shift().x_bar.iter().copied().collect(),
        holding_input: sys.shift().w.iter().copied().collect(),
    };
    write_json(rec, &out.join("report.json"), &report)?;
    println!("n = {}, m = {}", report.n, report.m);
    println!("controllable: {}", if report.controllable { "yes" } else { "no" });
    println!("dim O = {}", report.dim_o);
    match &report.condition_number {
        Some(c) => println!("O + Im B = R^n: yes (cond T = {c:.3})"),
        None => println!("O + Im B = R^n: no"),
    }
    if !report.controllable {
        return Err(SystemError::NotControllable.into());
    }
    dec?;
    Ok(())
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.6}", x + 0.0)).collect();
    format!("({})", parts.join(", "))
}

fn print_certificate(cert: &IbcCertificate<f64>) {
    let verdict = match cert.verdict {
        Verdict::Ibc => "IBC",
        Verdict::NotIbc => "NOT_IBC",
        Verdict::NecessaryOnly => "NECESSARY_ONLY",
    };
    println!("verdict: {verdict}");
    println!("{:<28} {:>5} {:>12} {:>12} {:>12}", "vertex", "in_O", "forward", "backward", "cone_dip");
    for (i, r) in cert.vertices.iter().enumerate() {
        let mark = if cert.failing.contains(&i) { " *" } else { "" };
        println!(
            "{:<28} {:>5} {:>12.4e} {:>12.4e} {:>12.4e}{mark}",
            fmt_vec(&r.vertex),
            r.in_o,
            r.invariance.margin,
            r.backward.margin,
            r.cone_dip.margin
        );
    }
}

pub fn check(
    rec: &mut Recorder,
    out: &Path,
    system: &Path,
    polytope: &Path,
    input_box: &[String],
    assume_input_mild: bool,
) -> Result<(), CliError> {
    let sys = load_system(rec, system)?;
    let x = load_polytope(rec, polytope)?;
    let inputs = parse_input_box(input_box, sys.m())?;
    let cert = check_ibc_with(&sys, &x, &inputs, CheckOptions { assume_input_mild })?;
    write_json(rec, &out.join("certificate.json"), &cert)?;
    print_certificate(&cert);
    for &i in &cert.failing {
        eprintln!("failing vertex {}", fmt_vec(&cert.vertices[i].vertex));
    }
    Ok(())
}

pub fn construct(rec: &mut Recorder, out: &Path, system: &Path, pbox: &Path, alpha: f64) -> Result<(), CliError> {
    let sys = load_system(rec, system)?;
    let p = load_polytope(rec, pbox)?;
    let x = construct_ibc_polytope(&sys, &p, alpha)?;
    write_json(rec, &out.join("polytope.json"), &PolytopeDoc::from_polytope(&x))?;
    println!("{} vertices", x.vertices().len());
    for v in x.vertices() {
        println!("  {}", fmt_vec(v.as_slice()));
    }
    Ok(())
}

pub fn lambda_grid(custom: Option<Vec<f64>>) -> Result<Vec<f64>, CliError> {
    match custom {
        None => Ok(default_lambda_grid()),
        Some(g) if g.is_empty() || g.iter().any(|&l| !(l > 0.0 && l <= 1.0)) => {
            Err(CliError::schema("--lambda-grid values must lie in (0, 1]"))
        }
        Some(g) => Ok(g),
    }
}

#[derive(Serialize)]
struct ProfileReport {
    spec: AxisSpec<f64>,
    alpha: f64,
    lambda: f64,
    margin: f64,
    /// Position midpoint; the controller acts on `x - offset`.
    offset: [f64; 2],
}

pub fn profile(
    rec: &mut Recorder,
    out: &Path,
    axis: &Path,
    alpha: Option<f64>,
    grid: Option<Vec<f64>>,
) -> Result<(), CliError> {
    let mut spec: AxisSpec<f64> = from_json(&rec.read(axis)?)?;
    if alpha.is_some() {
        spec.alpha = alpha;
    }
    let prof = safe_speed_profile(&spec, &lambda_grid(grid)?)?;
    write_json(rec, &out.join("polytope.json"), &PolytopeDoc::from_polytope(&prof.region))?;
    write_json(rec, &out.join("controller.json"), &ControllerDoc::from_controller(&prof.controller))?;
    let report = ProfileReport {
        spec: prof.spec.clone(),
        alpha: prof.alpha,
        lambda: prof.lambda,
        margin: prof.margin,
        offset: [spec.center(), 0.0],
    };
    write_json(rec, &out.join("profile.json"), &report)?;
    println!("alpha = {:.6}, lambda = {}, margin = {:.6e}", prof.alpha, prof.lambda, prof.margin);
    Ok(())
}
