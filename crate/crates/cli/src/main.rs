//! `conslaw` — verify, construct and transform conservation laws of
//! `u_t = (d(u)·u_x)_x + k(u)·u_x` from the command line.
//!
//! Exit codes are a stable contract: 0 when every requested check passes,
//! 1 when a verification fails (nonzero residual, drift over tolerance),
//! 2 when the input itself is unusable (bad file, bad flag, singular
//! transform, unknown case id).

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use conslaw_cli::modelfile::{self, Loaded};
use conslaw_core::{
    build_potential_system, canonical, case, case_instances, classifying_residual,
    compatibility_residuals, compile, determining_system, from_characteristic, sample_on_shell,
    simulate, substitute, track_conserved, transform_conserved_vector, transform_system,
    verify_conservation_law, verify_potential_system, Bindings, Boundary, Characteristic,
    ConservedVector, Dep, DifferentialSystem, EquivTransform, Expr, FuncInstance, GridRun,
    Indeterminate, Instance, PDEModel, Rat, TableCase, CASE_IDS, DEFAULT_CLOSURE_ORDER,
};

#[derive(Parser)]
#[command(
    name = "conslaw",
    version,
    about = "Conservation laws and potential systems of u_t = (d(u)u_x)_x + k(u)u_x"
)]
struct Cli {
    /// Emit machine-readable JSON instead of text reports.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for registry verification and sampling.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check that a file's conserved pair is a law of its system.
    Verify {
        file: PathBuf,
        /// Highest jet order closed during on-shell reduction.
        #[arg(long, default_value_t = DEFAULT_CLOSURE_ORDER)]
        order: u32,
    },
    /// Verify the built-in classification registry.
    Table1 {
        /// Verify every case (the default when --case is absent).
        #[arg(long, conflicts_with = "case")]
        all: bool,
        /// Verify a single case by id, e.g. 1 or 3.1.
        #[arg(long)]
        case: Option<String>,
        /// Pin the free constant to these rational values, one run each.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Vec<String>,
    },
    /// Push a file's model, system and law through a point transformation
    /// t -> e1 + e4 t, x -> e2 + e5 x + e7 t, u -> e3 + e6 u, then re-verify.
    Transform {
        file: PathBuf,
        /// The seven parameters e1,..,e7 as comma-separated rationals.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        eps: Vec<String>,
        /// Write the transformed model file here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the determining system for first-order conserved vectors.
    Determine {
        /// Take the model from this file.
        file: Option<PathBuf>,
        /// Use the fully arbitrary model instead of a file.
        #[arg(long, conflicts_with = "file")]
        arbitrary: bool,
        /// Total degree of the ansatz in (u_t, u_x).
        #[arg(long, conflicts_with_all = ["deg_ut", "deg_ux"])]
        degree: Option<u32>,
        /// Bound the ansatz degree in u_t (combined with --deg-ux).
        #[arg(long)]
        deg_ut: Option<u32>,
        /// Bound the ansatz degree in u_x (combined with --deg-ut).
        #[arg(long)]
        deg_ux: Option<u32>,
        /// Also check this multiplier: print its classifying residual and
        /// verify the law it generates.
        #[arg(long)]
        psi: Option<String>,
    },
    /// Introduce the law's potential on top of the file's system and check
    /// cross-derivative compatibility.
    Potential {
        file: PathBuf,
        /// Write the extended system as a model file here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the divergence at pseudo-random on-shell points.
    Sample {
        /// Model file with concrete coefficients (bind symbols via --func/--set).
        file: Option<PathBuf>,
        /// Run the built-in concrete variants of a registry case instead.
        #[arg(long, conflicts_with = "file")]
        case: Option<String>,
        #[arg(short, long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest residual accepted as agreement with the symbolic verdict.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Bind a parameter, e.g. --set eps=1.
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        /// Bind a function symbol: const:C, linear:A,B, quad, or exp:L.
        #[arg(long = "func", value_name = "NAME=SPEC")]
        func: Vec<String>,
        /// Draw u from [1/2, 2] instead of [-2, 2] (singular coefficients).
        #[arg(long)]
        positive_u: bool,
    },
    /// Integrate the equation on a grid and track the conserved integral.
    Simulate {
        file: PathBuf,
        #[arg(long, default_value_t = 200)]
        cells: usize,
        #[arg(long, default_value_t = 0.5)]
        t_end: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        x_min: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        x_max: f64,
        #[arg(long, value_enum, default_value_t = BoundaryArg::Periodic)]
        boundary: BoundaryArg,
        /// Initial profile as an expression in x.
        #[arg(long, default_value = "exp(-x^2)")]
        u0: String,
        /// Recorded time levels, including t = 0.
        #[arg(long, default_value_t = 33)]
        frames: usize,
        /// Safety factor on the parabolic time-step bound.
        #[arg(long, default_value_t = 0.4)]
        safety: f64,
        /// Fail (exit 1) when the relative drift exceeds this.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the conserved-integral time series as CSV ("-" = stdout).
        #[arg(long)]
        csv: Option<String>,
        #[arg(long = "set", value_name = "NAME=VALUE")]
        set: Vec<String>,
        #[arg(long = "func", value_name = "NAME=SPEC")]
        func: Vec<String>,
        #[arg(long)]
        positive_u: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundaryArg {
    Periodic,
    Dirichlet,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    match &cli.cmd {
        Cmd::Verify { file, order } => cmd_verify(file, *order, cli.json),
        Cmd::Table1 { all: _, case, eps } => cmd_table1(case.as_deref(), eps, cli),
        Cmd::Transform { file, eps, output } => cmd_transform(file, eps, output.as_deref(), cli),
        Cmd::Determine { file, arbitrary, degree, deg_ut, deg_ux, psi } => cmd_determine(
            file.as_deref(),
            *arbitrary,
            resolve_degree(*degree, *deg_ut, *deg_ux),
            psi.as_deref(),
            cli.json,
        ),
        Cmd::Potential { file, output } => cmd_potential(file, output.as_deref(), cli.json),
        Cmd::Sample { file, case, n, seed, tol, set, func, positive_u } => cmd_sample(
            file.as_deref(),
            case.as_deref(),
            *n,
            *seed,
            *tol,
            &instance_from_flags(set, func, *positive_u)?,
            cli,
        ),
        Cmd::Simulate {
            file,
            cells,
            t_end,
            x_min,
            x_max,
            boundary,
            u0,
            frames,
            safety,
            tol,
            csv,
            set,
            func,
            positive_u,
        } => {
            let mut run = GridRun::new(
                *x_min,
                *x_max,
                *cells,
                *t_end,
                match boundary {
                    BoundaryArg::Periodic => Boundary::Periodic,
                    BoundaryArg::Dirichlet => Boundary::Dirichlet,
                },
            );
            run.frames = *frames;
            run.safety = *safety;
            cmd_simulate(
                file,
                &run,
                u0,
                *tol,
                csv.as_deref(),
                &instance_from_flags(set, func, *positive_u)?,
                cli.json,
            )
        }
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

fn load(path: &std::path::Path) -> anyhow::Result<Loaded> {
    Ok(modelfile::load_path(path)?)
}

fn parse_rat(s: &str) -> anyhow::Result<Rat> {
    s.trim()
        .parse::<Rat>()
        .map_err(|e| anyhow!("`{s}` is not a rational number (use p or p/q): {e}"))
}

fn with_pool<T: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> anyhow::Result<T> + Send,
) -> anyhow::Result<T> {
    match jobs {
        None | Some(0) | Some(1) => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("cannot start worker threads")?
            .install(f),
    }
}

fn dep_name(dep: Dep) -> &'static str {
    match dep {
        Dep::U => "u",
        Dep::V => "v",
        Dep::W => "w",
    }
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("report is valid JSON"));
}

fn instance_from_flags(
    set: &[String],
    func: &[String],
    positive_u: bool,
) -> anyhow::Result<Instance> {
    let mut inst = Instance::new();
    for s in set {
        let (name, value) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--set wants NAME=VALUE, got `{s}`"))?;
        let value: f64 = value.parse().with_context(|| format!("--set {name}"))?;
        inst = inst.param(name.trim(), value);
    }
    for s in func {
        let (name, spec) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("--func wants NAME=SPEC, got `{s}`"))?;
        inst = inst.func(name.trim(), parse_func_spec(spec)?);
    }
    if positive_u {
        inst = inst.positive_u();
    }
    Ok(inst)
}

fn parse_func_spec(spec: &str) -> anyhow::Result<FuncInstance> {
    let spec = spec.trim();
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let num = |s: &str| -> anyhow::Result<f64> {
        s.trim().parse().map_err(|_| anyhow!("`{s}` is not a number in --func spec `{spec}`"))
    };
    match kind {
        "quad" => Ok(FuncInstance::Quad),
        "const" => Ok(FuncInstance::Const(num(rest)?)),
        "exp" => Ok(FuncInstance::Exp(num(rest)?)),
        "linear" => {
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| anyhow!("linear wants two numbers, e.g. linear:1,-2"))?;
            Ok(FuncInstance::Linear(num(a)?, num(b)?))
        }
        other => bail!("unknown function spec `{other}` (expected const, linear, quad or exp)"),
    }
}

// ---------------------------------------------------------------------------
// verify

fn cmd_verify(file: &std::path::Path, order: u32, json: bool) -> anyhow::Result<bool> {
    let loaded = load(file)?;
    let rep = verify_conservation_law(&loaded.system, &loaded.law, order)?;
    let compat = compatibility_residuals(&loaded.system, order)?;
    let compat_ok = compat.iter().all(|(_, r)| r.is_zero_literal());
    let pass = rep.holds && compat_ok;

    if json {
        print_json(&json!({
            "file": file.display().to_string(),
            "holds": rep.holds,
            "residual": rep.residual.to_string(),
            "law_order": rep.order,
            "consequences_used": rep.consequences_used.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
            "compatibility": compat.iter().map(|(dep, r)| json!({
                "level": dep_name(*dep),
                "residual": r.to_string(),
            })).collect::<Vec<_>>(),
            "pass": pass,
            "elapsed_ms": ms(rep.elapsed),
        }));
        return Ok(pass);
    }

    let verdict = if pass { "PASS" } else { "FAIL" };
    println!(
        "{verdict} {}: law order {}, closure order {order}, {:.2} ms",
        file.display(),
        rep.order,
        ms(rep.elapsed)
    );
    if rep.holds {
        println!("  divergence reduces to 0 on shell");
    } else {
        println!("  residual: {}", rep.residual);
    }
    if !rep.consequences_used.is_empty() {
        let used: Vec<String> = rep.consequences_used.iter().map(|a| a.to_string()).collect();
        println!("  consequences used: {}", used.join(", "));
    }
    for (dep, r) in &compat {
        if r.is_zero_literal() {
            println!("  {}_xt = {}_tx on shell", dep_name(*dep), dep_name(*dep));
        } else {
            println!("  cross-derivative residual on {}: {r}", dep_name(*dep));
        }
    }
    Ok(pass)
}

// ---------------------------------------------------------------------------
// table1

struct CaseRow {
    id: &'static str,
    eps: Option<String>,
    holds: bool,
    order: u32,
    compatible: bool,
    residual: String,
    elapsed_ms: f64,
}

/// Pin the free constant of a case to a concrete rational.
fn pin_eps(tc: &TableCase, value: &Rat) -> anyhow::Result<(DifferentialSystem, ConservedVector)> {
    let b = Bindings::new().atom(Indeterminate::param("eps"), Expr::Rational(value.clone()));
    let law = ConservedVector::new(
        substitute(&tc.law.density, &b)?,
        substitute(&tc.law.flux, &b)?,
    );
    let mut levels = tc.system.levels().to_vec();
    for lv in &mut levels {
        lv.x_rhs = substitute(&lv.x_rhs, &b)?;
        if let Some(t) = &lv.t_rhs {
            lv.t_rhs = Some(substitute(t, &b)?);
        }
    }
    let system = DifferentialSystem::with_levels(tc.system.model().clone(), levels)?;
    Ok((system, law))
}

fn case_rows(id: &'static str, eps: &[Rat]) -> anyhow::Result<Vec<CaseRow>> {
    let tc = case(id)?;
    let compatible = verify_potential_system(&tc.extended, DEFAULT_CLOSURE_ORDER)?;
    let has_eps = tc.system.model().ctx().params().any(|p| p == "eps");

    let runs: Vec<(Option<String>, DifferentialSystem, ConservedVector)> = if has_eps
        && !eps.is_empty()
    {
        eps.iter()
            .map(|v| {
                let (sys, law) = pin_eps(&tc, v)?;
                Ok((Some(v.to_string()), sys, law))
            })
            .collect::<anyhow::Result<_>>()?
    } else {
        vec![(None, tc.system.clone(), tc.law.clone())]
    };

    runs.into_iter()
        .map(|(eps, sys, law)| {
            let rep = verify_conservation_law(&sys, &law, DEFAULT_CLOSURE_ORDER)?;
            Ok(CaseRow {
                id,
                eps,
                holds: rep.holds,
                order: rep.order,
                compatible,
                residual: rep.residual.to_string(),
                elapsed_ms: ms(rep.elapsed),
            })
        })
        .collect()
}

fn cmd_table1(single: Option<&str>, eps: &[String], cli: &Cli) -> anyhow::Result<bool> {
    let eps: Vec<Rat> = eps.iter().map(|s| parse_rat(s)).collect::<anyhow::Result<_>>()?;
    let ids: Vec<&'static str> = match single {
        None => CASE_IDS.to_vec(),
        Some(id) => {
            // resolve to the registry's static id, rejecting unknown ones early
            vec![case(id)?.id]
        }
    };

    let rows: Vec<CaseRow> = with_pool(cli.jobs, || {
        ids.par_iter()
            .map(|id| case_rows(id, &eps))
            .collect::<anyhow::Result<Vec<Vec<CaseRow>>>>()
    })?
    .into_iter()
    .flatten()
    .collect();

    let pass = rows.iter().all(|r| r.holds && r.compatible);

    if cli.json {
        print_json(&json!({
            "cases": rows.iter().map(|r| json!({
                "case": r.id,
                "eps": r.eps,
                "holds": r.holds,
                "law_order": r.order,
                "system_compatible": r.compatible,
                "residual": r.residual,
                "elapsed_ms": r.elapsed_ms,
            })).collect::<Vec<_>>(),
            "pass": pass,
        }));
        return Ok(pass);
    }

    for r in &rows {
        let label = match &r.eps {
            Some(v) => format!("case {} [eps = {}]", r.id, v),
            None => format!("case {}", r.id),
        };
        let verdict = if r.holds && r.compatible { "PASS" } else { "FAIL" };
        let mut notes = format!("law order {}", r.order);
        if !r.holds {
            notes = format!("residual {}", r.residual);
        }
        if !r.compatible {
            notes.push_str(", system incompatible");
        }
        println!("{label:<20} {verdict}  {notes}  ({:.2} ms)", r.elapsed_ms);
    }
    println!("{}/{} verification runs pass", rows.iter().filter(|r| r.holds).count(), rows.len());
    Ok(pass)
}

// ---------------------------------------------------------------------------
// transform

fn cmd_transform(
    file: &std::path::Path,
    eps: &[String],
    output: Option<&std::path::Path>,
    cli: &Cli,
) -> anyhow::Result<bool> {
    if eps.len() != 7 {
        bail!("--eps wants exactly seven comma-separated rationals e1,..,e7, got {}", eps.len());
    }
    let e: Vec<Rat> = eps.iter().map(|s| parse_rat(s)).collect::<anyhow::Result<_>>()?;
    // e1,e2,e3 shift t,x,u; e4,e5,e6 scale them; e7 drifts the spatial frame
    let tr = EquivTransform::new(
        e[3].clone(),
        e[4].clone(),
        e[5].clone(),
        e[0].clone(),
        e[1].clone(),
        e[2].clone(),
        e[6].clone(),
    )?;

    let loaded = load(file)?;
    let system = transform_system(&loaded.system, &tr)?;
    let law = transform_conserved_vector(&loaded.law, &tr)?;
    let rep = verify_conservation_law(&system, &law, DEFAULT_CLOSURE_ORDER)?;
    let emitted = modelfile::emit(&system, &law);

    if let Some(path) = output {
        std::fs::write(path, &emitted)
            .with_context(|| format!("cannot write `{}`", path.display()))?;
    }

    if cli.json {
        print_json(&json!({
            "file": file.display().to_string(),
            "holds": rep.holds,
            "residual": rep.residual.to_string(),
            "law_order": rep.order,
            "model_file": emitted,
            "output": output.map(|p| p.display().to_string()),
        }));
        return Ok(rep.holds);
    }

    let verdict = if rep.holds { "PASS" } else { "FAIL" };
    let report = format!(
        "{verdict} pushed-forward law on the transformed model (order {}, {:.2} ms)",
        rep.order,
        ms(rep.elapsed)
    );
    match output {
        Some(path) => {
            println!("{report}");
            println!("transformed model written to {}", path.display());
        }
        None => {
            // keep stdout clean for piping the emitted file
            eprintln!("{report}");
            print!("{emitted}");
        }
    }
    if !rep.holds {
        eprintln!("residual: {}", rep.residual);
    }
    Ok(rep.holds)
}

// ---------------------------------------------------------------------------
// determine

fn resolve_degree(degree: Option<u32>, deg_ut: Option<u32>, deg_ux: Option<u32>) -> u32 {
    match (degree, deg_ut, deg_ux) {
        (Some(d), _, _) => d,
        (None, None, None) => 1,
        (None, du, dx) => du.unwrap_or(1).max(dx.unwrap_or(1)),
    }
}

fn cmd_determine(
    file: Option<&std::path::Path>,
    arbitrary: bool,
    degree: u32,
    psi: Option<&str>,
    json: bool,
) -> anyhow::Result<bool> {
    let model: PDEModel = match file {
        Some(f) => load(f)?.model().clone(),
        None if arbitrary => PDEModel::arbitrary(),
        None => bail!("pass a model file or --arbitrary"),
    };
    let mut ds = determining_system(&model, degree)?;
    ds.density = canonical(&ds.density)?;
    ds.flux = canonical(&ds.flux)?;

    let psi_part = match psi {
        None => None,
        Some(src) => {
            let psi = model.parse_expr(src)?;
            let residual = classifying_residual(&model, &psi)?;
            let mut law = from_characteristic(&Characteristic::multiplier(psi.clone()))?;
            let rep = verify_conservation_law(
                &DifferentialSystem::base(model.clone()),
                &law,
                DEFAULT_CLOSURE_ORDER,
            )?;
            law.density = canonical(&law.density)?;
            law.flux = canonical(&law.flux)?;
            Some((psi, residual, law, rep))
        }
    };
    let pass = psi_part.as_ref().map_or(true, |(_, _, _, rep)| rep.holds);

    if json {
        print_json(&json!({
            "degree": degree,
            "density": ds.density.to_string(),
            "flux": ds.flux.to_string(),
            "utt_coefficient": ds.utt_coefficient.to_string(),
            "utx_coefficient": ds.utx_coefficient.to_string(),
            "equations": ds.equations.iter().map(|e| e.to_string()).collect::<Vec<_>>(),
            "psi": psi_part.as_ref().map(|(psi, residual, law, rep)| json!({
                "psi": psi.to_string(),
                "classifying_residual": residual.to_string(),
                "density": law.density.to_string(),
                "flux": law.flux.to_string(),
                "holds": rep.holds,
            })),
            "pass": pass,
        }));
        return Ok(pass);
    }

    println!("ansatz of total degree {degree} in (u_t, u_x):");
    println!("  F = {}", ds.density);
    println!("  G = {}", ds.flux);
    println!("coefficient of u_tt in the divergence: {}", ds.utt_coefficient);
    println!("coefficient of u_tx in the divergence: {}", ds.utx_coefficient);
    println!("determining equations (numerators; denominators are powers of d):");
    for (i, eq) in ds.equations.iter().enumerate() {
        println!("  {:>2}. {eq} = 0", i + 1);
    }
    if let Some((psi, residual, law, rep)) = &psi_part {
        println!("multiplier psi = {psi}:");
        println!("  classifying residual psi_t + d*psi_xx - k*psi_x = {residual}");
        println!("  generated law: F = {}, G = {}", law.density, law.flux);
        let verdict = if rep.holds { "PASS" } else { "FAIL" };
        println!("  {verdict} verification on the base equation");
        if !rep.holds {
            println!("  residual: {}", rep.residual);
        }
    }
    Ok(pass)
}

// ---------------------------------------------------------------------------
// potential

fn cmd_potential(
    file: &std::path::Path,
    output: Option<&std::path::Path>,
    json: bool,
) -> anyhow::Result<bool> {
    let loaded = load(file)?;
    let extended = build_potential_system(&loaded.system, &loaded.law)?;
    let mut levels = extended.levels().to_vec();
    for lv in &mut levels {
        lv.x_rhs = canonical(&lv.x_rhs)?;
        if let Some(t) = &lv.t_rhs {
            lv.t_rhs = Some(canonical(t)?);
        }
    }
    let extended = DifferentialSystem::with_levels(extended.model().clone(), levels)?;
    let new = extended.levels().last().expect("builder always adds a level");
    let compat = compatibility_residuals(&extended, DEFAULT_CLOSURE_ORDER)?;
    let pass = compat.iter().all(|(_, r)| r.is_zero_literal());

    if let Some(path) = output {
        std::fs::write(path, modelfile::emit(&extended, &loaded.law))
            .with_context(|| format!("cannot write `{}`", path.display()))?;
    }

    if json {
        print_json(&json!({
            "file": file.display().to_string(),
            "introduced": dep_name(new.dep),
            "x_rule": new.x_rhs.to_string(),
            "t_rule": new.t_rhs.as_ref().map(|t| t.to_string()),
            "compatibility": compat.iter().map(|(dep, r)| json!({
                "level": dep_name(*dep),
                "residual": r.to_string(),
            })).collect::<Vec<_>>(),
            "pass": pass,
            "output": output.map(|p| p.display().to_string()),
        }));
        return Ok(pass);
    }

    let name = dep_name(new.dep);
    println!("introduced potential {name}:");
    println!("  {name}_x = {}", new.x_rhs);
    if let Some(t) = &new.t_rhs {
        println!("  {name}_t = {t}");
    }
    for (dep, r) in &compat {
        if r.is_zero_literal() {
            println!("  {}_xt = {}_tx on shell", dep_name(*dep), dep_name(*dep));
        } else {
            println!("  INCOMPATIBLE at {}: {r}", dep_name(*dep));
        }
    }
    if let Some(path) = output {
        println!("extended system written to {}", path.display());
    }
    Ok(pass)
}

// ---------------------------------------------------------------------------
// sample

fn cmd_sample(
    file: Option<&std::path::Path>,
    case_id: Option<&str>,
    n: usize,
    seed: u64,
    tol: f64,
    inst: &Instance,
    cli: &Cli,
) -> anyhow::Result<bool> {
    // (label, system, law, instance) per run
    let runs: Vec<(String, DifferentialSystem, ConservedVector, Instance)> = match (file, case_id)
    {
        (Some(path), None) => {
            let loaded = load(path)?;
            vec![(path.display().to_string(), loaded.system, loaded.law, inst.clone())]
        }
        (None, Some(id)) => case_instances(id)?
            .into_iter()
            .map(|ci| (format!("case {} [{}]", ci.id, ci.label), ci.system, ci.law, ci.instance))
            .collect(),
        _ => bail!("pass a model file or --case, not both"),
    };

    let reports: Vec<(String, conslaw_core::SampleReport)> = with_pool(cli.jobs, || {
        runs.par_iter()
            .enumerate()
            .map(|(i, (label, sys, law, inst))| {
                let rep = sample_on_shell(law, sys, inst, n, seed.wrapping_add(i as u64))?;
                Ok((label.clone(), rep))
            })
            .collect()
    })?;

    let pass = reports.iter().all(|(_, r)| r.max_residual <= tol);

    if cli.json {
        print_json(&json!({
            "tolerance": tol,
            "runs": reports.iter().map(|(label, r)| json!({
                "label": label,
                "samples": r.samples,
                "rejected_near_poles": r.rejected,
                "max_residual": r.max_residual,
                "pass": r.max_residual <= tol,
            })).collect::<Vec<_>>(),
            "pass": pass,
        }));
        return Ok(pass);
    }

    for (label, r) in &reports {
        let verdict = if r.max_residual <= tol { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {label}: max |D_t F + D_x G| = {:.3e} over {} on-shell samples ({} rejected near poles)",
            r.max_residual, r.samples, r.rejected
        );
    }
    Ok(pass)
}

// ---------------------------------------------------------------------------
// simulate

fn cmd_simulate(
    file: &std::path::Path,
    run: &GridRun,
    u0_src: &str,
    tol: Option<f64>,
    csv: Option<&str>,
    inst: &Instance,
    json: bool,
) -> anyhow::Result<bool> {
    let loaded = load(file)?;
    let model = loaded.model();

    let prog = compile(&model.parse_expr(u0_src)?);
    if prog.slots().iter().any(|s| *s != Indeterminate::x()) {
        bail!("--u0 may only mention x, got `{u0_src}`");
    }
    let has_x = !prog.slots().is_empty();
    let u0 = |x: f64| {
        let vals: &[f64] = if has_x { std::slice::from_ref(&x) } else { &[] };
        prog.eval(vals).unwrap_or(f64::NAN)
    };

    let traj = simulate(run, model, &u0)?;
    let drift = track_conserved(&traj, &loaded.law, &loaded.system, inst)?;
    let pass = tol.map_or(true, |t| drift.max_relative_drift <= t);

    let csv_to_stdout = csv == Some("-");
    if let Some(target) = csv {
        let mut out = String::from("t,integral,drift\n");
        for (t, i) in drift.times.iter().zip(&drift.integrals) {
            out.push_str(&format!("{t},{i},{}\n", i - drift.integrals[0]));
        }
        if csv_to_stdout {
            print!("{out}");
        } else {
            std::fs::write(target, out).with_context(|| format!("cannot write `{target}`"))?;
        }
    }

    if json {
        print_json(&json!({
            "file": file.display().to_string(),
            "cells": run.cells,
            "dx": traj.dx,
            "steps": traj.steps,
            "frames": traj.frames.len(),
            "integral_initial": drift.integrals.first(),
            "integral_final": drift.integrals.last(),
            "max_abs_drift": drift.max_abs_drift,
            "max_relative_drift": drift.max_relative_drift,
            "tolerance": tol,
            "pass": pass,
        }));
        return Ok(pass);
    }

    let mut report = format!(
        "{} cells={} dx={:.4e} steps={} {drift}",
        file.display(),
        run.cells,
        traj.dx,
        traj.steps
    );
    if let Some(t) = tol {
        let verdict = if pass { "PASS" } else { "FAIL" };
        report = format!("{verdict} {report} (tolerance {t:.1e})");
    }
    if csv_to_stdout {
        eprintln!("{report}");
    } else {
        println!("{report}");
    }
    Ok(pass)
}
