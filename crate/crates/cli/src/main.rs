mod config;
mod manifest;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use cwtori::closure::{continue_family, FamilyGrid};
use cwtori::equivariant::{
    family_12, homogeneous_radius, lagrange_estimates, lift_12, linear_data_12, member_states, Member12,
};
use cwtori::hopf::{class_from_area_length, HomogeneousTorus};
use cwtori::mesh::Mesh3;
use cwtori::stability::{alpha_crit, beta_homogeneous, StabilityReport};
use serde::Serialize;
use serde_json::json;

use config::{
    linspace, parse_pole, Cli, Command, Eq12Args, HopfFamilyArgs, MeshArgs, StabilityArgs, Surface, SweepArgs,
};
use manifest::{manifest_path, Manifest};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric { module: &'static str, err: cwtori::Error },
    Io(std::io::Error),
    Format(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric { module, err } => write!(f, "numeric error in {module}: {err}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Format(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Format(e.to_string())
    }
}

fn numeric(module: &'static str) -> impl Fn(cwtori::Error) -> CliError {
    move |err| CliError::Numeric { module, err }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = cli.command.validate().and_then(|_| run(&cli.command));
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cwtori: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cmd: &Command) -> Result<(), CliError> {
    match cmd {
        Command::HopfFamily(a) => hopf_family(cmd, a),
        Command::Eq12Family(a) => eq12_family(cmd, a),
        Command::Stability(a) => stability(cmd, a),
        Command::Mesh(a) => mesh(cmd, a),
        Command::Sweep(a) => sweep(cmd, a),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct HopfRow {
    n: u32,
    lambda_tilde: f64,
    kappa0: f64,
    mu: f64,
    lambda: f64,
    nu: f64,
    g2: f64,
    g3: f64,
    rho_re: f64,
    rho_im: f64,
    area: f64,
    length: f64,
    a: f64,
    b: f64,
    willmore: f64,
    monodromy_residual: f64,
}

fn hopf_family(cmd: &Command, a: &HopfFamilyArgs) -> Result<(), CliError> {
    let k = a.grid.size();
    let grid =
        FamilyGrid { lambda_tilde: linspace(0.0, a.lambda_max, k), kappa0: linspace(-a.kappa_max, a.kappa_max, k) };
    let fam = continue_family(a.n, &grid).map_err(numeric("closure"))?;
    let rows: Vec<HopfRow> = fam
        .iter()
        .map(|p| {
            let c = class_from_area_length(p.area, p.length);
            HopfRow {
                n: p.n,
                lambda_tilde: p.lambda_tilde,
                kappa0: p.kappa0,
                mu: p.mu,
                lambda: p.lambda,
                nu: p.nu,
                g2: p.g2,
                g3: p.g3,
                rho_re: p.rho.re,
                rho_im: p.rho.im,
                area: p.area,
                length: p.length,
                a: c.a,
                b: c.b,
                willmore: p.willmore,
                monodromy_residual: p.monodromy_residual,
            }
        })
        .collect();
    write_csv(&a.out, &rows)?;
    let mut m = Manifest::new(cmd)?;
    m.record_output(&a.out)?;
    let worst = rows.iter().map(|r| r.monodromy_residual).fold(0.0, f64::max);
    m.results = json!({ "members": rows.len(), "max_monodromy_residual": worst });
    m.write(&manifest_path(&a.out, &a.manifest))
}

#[derive(Serialize)]
struct Eq12Row {
    eps: f64,
    a: f64,
    b: f64,
    willmore: f64,
    theta: f64,
    sqrt_g: f64,
    slope: f64,
    offset: f64,
    mu_theta: f64,
    lambda_theta: f64,
    el_residual: f64,
    length: f64,
    phi_residual: f64,
    area12: f64,
}

fn eq12_row(m: &Member12, samples: usize) -> Result<Eq12Row, CliError> {
    let (mu, la, el) = if m.eps == 0.0 {
        let lin = linear_data_12(homogeneous_radius(m.b_target).map_err(numeric("equivariant"))?, m.params.slope)
            .map_err(numeric("equivariant"))?;
        (lin.mu_theta, lin.lambda_theta, 0.0)
    } else {
        let (_, s) = member_states(m, samples).map_err(numeric("equivariant"))?;
        (s.mu_theta, s.lambda_theta, s.el_residual())
    };
    Ok(Eq12Row {
        eps: m.eps,
        a: m.class.a,
        b: m.class.b,
        willmore: m.willmore,
        theta: m.theta,
        sqrt_g: m.sqrt_g,
        slope: m.params.slope,
        offset: m.params.offset,
        mu_theta: mu,
        lambda_theta: la,
        el_residual: el,
        length: m.shot.period,
        phi_residual: (m.shot.phi_total - 2.0 * std::f64::consts::PI).abs(),
        area12: m.class.area_boundary,
    })
}

fn eq12_family(cmd: &Command, a: &Eq12Args) -> Result<(), CliError> {
    let eps = linspace(0.0, a.eps_max, a.steps + 1);
    let fam = family_12(a.b, &eps).map_err(numeric("equivariant"))?;
    let rows = fam.iter().map(|m| eq12_row(m, a.samples)).collect::<Result<Vec<_>, _>>()?;
    write_csv(&a.out, &rows)?;
    let pts: Vec<((f64, f64), f64)> = fam.iter().map(|m| ((m.class.a, m.class.b), m.willmore)).collect();
    let est = lagrange_estimates(&pts).map_err(numeric("equivariant"))?;
    let hb = (0..5).map(|k| a.b * (1.0 + 1e-3 * k as f64)).collect::<Vec<_>>();
    let beta_pts: Vec<((f64, f64), f64)> =
        hb.iter().map(|&b| ((0.0, b), HomogeneousTorus::from_b(b).map(|t| t.willmore()).unwrap_or(f64::NAN))).collect();
    let beta = lagrange_estimates(&beta_pts).map_err(numeric("equivariant"))?;
    let mut m = Manifest::new(cmd)?;
    m.record_output(&a.out)?;
    m.results = json!({ "alpha": est, "beta_homogeneous": beta.limit });
    m.write(&manifest_path(&a.out, &a.manifest))
}

#[derive(Serialize)]
struct StabilityOut<'a> {
    report: &'a StabilityReport,
    manifest: &'a Manifest,
}

fn stability_report(b: f64, table: bool) -> Result<StabilityReport, CliError> {
    let mut r = alpha_crit(b, beta_homogeneous(b)).map_err(numeric("stability"))?;
    if !table {
        r.mode_table.clear();
    }
    Ok(r)
}

fn stability(cmd: &Command, a: &StabilityArgs) -> Result<(), CliError> {
    let r = stability_report(a.b, a.table)?;
    let mut m = Manifest::new(cmd)?;
    m.results = json!({ "alpha_crit": r.alpha_crit, "beta_b": r.beta_b });
    match &a.out {
        Some(path) => {
            let mut s = serde_json::to_string_pretty(&r)?;
            s.push('\n');
            std::fs::write(path, s)?;
            m.record_output(path)?;
            m.write(&manifest_path(path, &a.manifest))
        }
        None => {
            if let Some(p) = &a.manifest {
                m.write(p)?;
            }
            let out = serde_json::to_string_pretty(&StabilityOut { report: &r, manifest: &m })?;
            match writeln!(std::io::stdout().lock(), "{out}") {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn mesh(cmd: &Command, a: &MeshArgs) -> Result<(), CliError> {
    let pole = parse_pole(&a.pole)?;
    let surface = if a.homogeneous { Surface::Homogeneous } else { a.surface.unwrap_or(Surface::Homogeneous) };
    let f = match surface {
        Surface::Homogeneous => HomogeneousTorus::from_b(a.b).map_err(numeric("hopf"))?.mesh(a.nx, a.ny),
        Surface::Eq12 => {
            let fam = family_12(a.b, &[a.eps]).map_err(numeric("equivariant"))?;
            let p = fam[0].profile(a.nx).map_err(numeric("equivariant"))?;
            lift_12(&p, a.ny).map_err(numeric("equivariant"))?
        }
    };
    let mesh = Mesh3::from_immersion(&f, &pole).map_err(numeric("mesh"))?;
    let mut m = Manifest::new(cmd)?;
    let header = vec![
        format!("cwtori {} mesh", env!("CARGO_PKG_VERSION")),
        format!("manifest {}", m.config_hash),
        format!("vertices {} triangles {}", mesh.vertices.len(), mesh.triangles.len()),
    ];
    {
        let mut w = BufWriter::new(File::create(&a.out)?);
        mesh.write_obj(&mut w, &header)?;
        w.flush()?;
    }
    m.record_output(&a.out)?;
    let (ca, cb) = f.conformal_class();
    m.results = json!({
        "vertices": mesh.vertices.len(),
        "triangles": mesh.triangles.len(),
        "euler_characteristic": mesh.euler_characteristic(),
        "norm_defect": f.norm_defect(),
        "class": [ca, cb],
    });
    m.write(&manifest_path(&a.out, &a.manifest))
}

#[derive(Serialize)]
struct SweepRow {
    b: f64,
    beta_b: f64,
    alpha_crit: f64,
    kernel: String,
}

fn sweep(cmd: &Command, a: &SweepArgs) -> Result<(), CliError> {
    let bs = linspace(a.b_min, a.b_max, a.steps);
    let threads =
        if a.threads == 0 { std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1) } else { a.threads };
    let chunk = bs.len().div_ceil(threads);
    let results: Vec<Result<StabilityReport, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = bs
            .chunks(chunk)
            .map(|c| s.spawn(move || c.iter().map(|&b| stability_report(b, false)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(bs.len());
    for r in results {
        let r = r?;
        let kernel = r.kernel_waves.iter().map(|(k, l)| format!("({k};{l})")).collect::<Vec<_>>().join(" ");
        rows.push(SweepRow { b: r.b, beta_b: r.beta_b, alpha_crit: r.alpha_crit, kernel });
    }
    write_csv(&a.out, &rows)?;
    let mut m = Manifest::new(cmd)?;
    m.record_output(&a.out)?;
    m.results = json!({ "points": rows.len() });
    m.write(&manifest_path(&a.out, &a.manifest))
}
