use clap::{Parser, Subcommand, ValueEnum};
use rasir::algebra::{reduce, RuleAlgebraElement};
use rasir::bisim::{check_dmb, simulate, Crn, SsaConfig};
use rasir::model::{Model, BUNDLED};
use rasir::moments::{check_polynomial_jump_closure, derive_differential_operator, moment_odes, ClosedFormOracle, Freeze};
use rasir::rational::to_f64;
use rasir::sampler::simulate_graph;
use rasir::validate::validate_model;
use rasir::{Error, Result};
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "rasir", version, about = "Stochastic graph rewriting: rule algebra, moment closure and reaction-network bisimulation")]
struct Cli {
    /// Bundled model name (hw, birth-death, voter, voter-flip, tmt) or model file.
    #[arg(short, long, global = true)]
    model: Option<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    Text,
    Latex,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CrnFmt {
    Json,
    Arrows,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// δ(A) ∗ δ(B): B acts first. A and B name rules, observables or `H`.
    Compose {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Fmt,
    },
    /// [δ(A), δ(B)], reduced by the model's forbidden patterns.
    Commutator {
        a: String,
        b: String,
        #[arg(long, value_enum, default_value = "text")]
        format: Fmt,
    },
    /// Polynomial jump-closure report.
    Closure {
        #[arg(long, value_delimiter = ',')]
        observables: Option<Vec<String>>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// The evolution operator D of the EMGF.
    DerivePde {
        #[arg(long, value_delimiter = ',')]
        observables: Option<Vec<String>>,
        /// Substitute conserved observables by their initial values.
        #[arg(long)]
        freeze_conserved: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Fmt,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Discrete moment bisimulation check and reaction-network export.
    SynthesizeCrn {
        #[arg(long, value_delimiter = ',')]
        observables: Option<Vec<String>>,
        /// Keep conserved observables as species instead of freezing them.
        #[arg(long)]
        keep_conserved: bool,
        #[arg(long, value_enum, default_value = "arrows")]
        format: CrnFmt,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Gillespie simulation of a reaction network (or of the model's graph dynamics).
    Simulate {
        /// Reaction network JSON; without it the model's rules run on its initial graph.
        #[arg(long)]
        crn: Option<PathBuf>,
        /// Initial counts, e.g. `W=0,D=50,B=0`; defaults to the model's initial observable values.
        #[arg(long, value_delimiter = ',')]
        init: Option<Vec<String>>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 1000)]
        trajectories: usize,
        /// Recording interval; defaults to t_max / 100.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
    },
    /// Moment ODE hierarchy up to the given order, optionally integrated.
    Moments {
        #[arg(long)]
        order: u32,
        #[arg(long, value_delimiter = ',')]
        observables: Option<Vec<String>>,
        #[arg(long)]
        freeze_conserved: bool,
        #[arg(long)]
        integrate: bool,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long, default_value_t = 0.1)]
        dt: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 6)]
        depth: usize,
    },
    /// Closed-form generating functions of the solvable examples.
    Oracle {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(ClosedFormOracle::names()))]
        name: String,
        #[arg(long)]
        t: f64,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
        #[arg(long, default_value_t = 10)]
        n0: u32,
        #[arg(long, default_value_t = 0.5)]
        kappa0: f64,
        #[arg(long, default_value_t = 1.0 / 18.0)]
        kappa1: f64,
        #[arg(long, default_value_t = 5)]
        nw: u32,
        #[arg(long, default_value_t = 25)]
        nb: u32,
        #[arg(long, default_value_t = 0)]
        nww: u32,
        #[arg(long, default_value_t = 50)]
        nwb: u32,
        #[arg(long, default_value_t = 0)]
        nbb: u32,
    },
    /// Runs the property checks against the model.
    Validate,
    /// Lists the bundled models.
    Models,
}


/// `println!` that stops quietly when the reader closes the pipe.
macro_rules! out {
    ($($a:tt)*) => {{
        use std::io::Write;
        if let Err(e) = writeln!(std::io::stdout(), $($a)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(Error::Other(e.to_string()));
        }
    }};
}

fn need_model(m: &Option<String>) -> Result<Model> {
    match m {
        Some(name) => Model::open(name),
        None => Err(Error::Validation(vec!["this command needs --model".into()])),
    }
}

fn element(m: &Model, name: &str) -> Result<RuleAlgebraElement> {
    if name == "H" {
        let mut h = RuleAlgebraElement::zero();
        for r in &m.rules {
            h.add_assign_scaled(&r.element(), &r.rate.value);
        }
        return Ok(h);
    }
    if let Ok(r) = m.rule(name) {
        return Ok(r.element());
    }
    m.observables
        .iter()
        .find(|o| o.obs.name == name)
        .map(|o| o.obs.element())
        .ok_or_else(|| Error::Validation(vec![format!("{name:?} is neither a rule, an observable nor H")]))
}

fn show(a: &RuleAlgebraElement, f: Fmt) -> Result<String> {
    Ok(match f {
        Fmt::Json => serde_json::to_string_pretty(&a.to_json()).map_err(|e| Error::Other(e.to_string()))?,
        _ => a.pretty(),
    })
}

fn freeze_for(m: &Model, idx: &[usize], report: &rasir::moments::ClosureReport, on: bool) -> Result<Freeze> {
    if !on {
        return Ok(Freeze::default());
    }
    let cons = report.conserved();
    let values = m.initial_values(&cons.iter().map(|&i| idx[i]).collect::<Vec<_>>())?;
    Ok(Freeze { indices: cons, values })
}

fn parse_counts(items: &[String], species: &[String]) -> Result<Vec<u64>> {
    let mut v = vec![0; species.len()];
    let mut errs = vec![];
    for it in items {
        match it.split_once('=').map(|(k, n)| (k.trim(), n.trim().parse::<u64>())) {
            Some((k, Ok(n))) => match species.iter().position(|s| s == k) {
                Some(i) => v[i] = n,
                None => errs.push(format!("unknown species {k:?}")),
            },
            _ => errs.push(format!("bad count {it:?}, expected NAME=N")),
        }
    }
    if errs.is_empty() {
        Ok(v)
    } else {
        Err(Error::Validation(errs))
    }
}

fn grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|i| (i as f64 * dt).min(t_max)).collect()
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut status = ExitCode::SUCCESS;
    match cli.cmd {
        Cmd::Models => {
            for (n, _) in BUNDLED {
                out!("{n}");
            }
        }
        Cmd::Compose { a, b, format } => {
            let m = need_model(&cli.model)?;
            out!("{}", show(&element(&m, &a)?.product(&element(&m, &b)?)?, format)?);
        }
        Cmd::Commutator { a, b, format } => {
            let m = need_model(&cli.model)?;
            let c = element(&m, &a)?.commutator(&element(&m, &b)?)?;
            out!("{}", show(&reduce(&c, &m.constraint), format)?);
        }
        Cmd::Closure { observables, depth } => {
            let m = need_model(&cli.model)?;
            let idx = m.select(observables.as_deref())?;
            let obs: Vec<_> = idx.iter().map(|&i| m.observables[i].obs.clone()).collect();
            let r = check_polynomial_jump_closure(&m.hamiltonian()?, &obs, &m.identities, depth)?;
            out!("{}", r.pretty());
            if !r.closed {
                status = ExitCode::from(2);
            }
        }
        Cmd::DerivePde { observables, freeze_conserved, format, depth } => {
            let m = need_model(&cli.model)?;
            let idx = m.select(observables.as_deref())?;
            let obs: Vec<_> = idx.iter().map(|&i| m.observables[i].obs.clone()).collect();
            let r = check_polynomial_jump_closure(&m.hamiltonian()?, &obs, &m.identities, depth)?;
            let fz = freeze_for(&m, &idx, &r, freeze_conserved)?;
            let vars: Vec<String> = idx.iter().map(|&i| m.observables[i].variable.clone()).collect();
            let d = derive_differential_operator(&r, &vars, &fz)?;
            match format {
                Fmt::Text => out!("{}", d.text()),
                Fmt::Latex => out!("{}", d.latex()),
                Fmt::Json => out!("{}", serde_json::to_string_pretty(&d.to_json()).map_err(|e| Error::Other(e.to_string()))?),
            }
        }
        Cmd::SynthesizeCrn { observables, keep_conserved, format, out, depth } => {
            let m = need_model(&cli.model)?;
            let idx = m.select(observables.as_deref())?;
            let obs: Vec<_> = idx.iter().map(|&i| m.observables[i].obs.clone()).collect();
            let r = check_polynomial_jump_closure(&m.hamiltonian()?, &obs, &m.identities, depth)?;
            let fz = freeze_for(&m, &idx, &r, !keep_conserved && r.closed)?;
            let species: Vec<String> = idx.iter().map(|&i| m.observables[i].species.clone()).collect();
            let rep = check_dmb(&r, &fz, &species)?;
            for w in &rep.warnings {
                eprintln!("warning: {w}");
            }
            for o in &rep.omitted {
                eprintln!("omitted: {o}");
            }
            match rep.crn {
                Some(c) => {
                    let text = c.export(match format {
                        CrnFmt::Json => "json",
                        CrnFmt::Arrows => "arrows",
                        CrnFmt::Text => "text",
                    })?;
                    match out {
                        Some(p) => std::fs::write(&p, text + "\n").map_err(|e| Error::Other(format!("{}: {e}", p.display())))?,
                        None => out!("{text}"),
                    }
                }
                None => {
                    for d in &rep.diagnostics {
                        eprintln!("not bisimilar: {d}");
                    }
                    status = ExitCode::from(2);
                }
            }
        }
        Cmd::Simulate { crn, init, seed, t_max, trajectories, dt, out, summary, serial } => {
            let cfg = SsaConfig {
                seed,
                t_max,
                n_trajectories: trajectories,
                record_grid: grid(t_max, dt.unwrap_or(t_max / 100.0)),
                parallel: !serial,
            };
            let batch = match crn {
                Some(p) => {
                    let c = Crn::from_json(&std::fs::read_to_string(&p).map_err(|e| Error::Parse(format!("{}: {e}", p.display())))?)?;
                    let x0 = match (&init, &cli.model) {
                        (Some(items), _) => parse_counts(items, &c.species)?,
                        (None, Some(_)) => {
                            let m = need_model(&cli.model)?;
                            let mut v = vec![];
                            for s in &c.species {
                                let i = m
                                    .observables
                                    .iter()
                                    .position(|o| &o.species == s)
                                    .ok_or_else(|| Error::Validation(vec![format!("species {s:?} is not an observable of the model")]))?;
                                let x = &m.initial_values(&[i])?[0];
                                v.push(x.to_integer().try_into().map_err(|_| Error::Validation(vec![format!("initial count of {s} is negative")]))?);
                            }
                            v
                        }
                        (None, None) => return Err(Error::Validation(vec!["give --init or --model".into()])),
                    };
                    simulate(&c, &x0, &cfg)?
                }
                None => {
                    let m = need_model(&cli.model)?;
                    let g = m.initial_graph().ok_or_else(|| Error::Validation(vec!["model has no initial graph".into()]))?;
                    let obs: Vec<_> = m.observables.iter().map(|o| o.obs.clone()).collect();
                    simulate_graph(&m.hamiltonian()?, g, &obs, &cfg)?
                }
            };
            let io = |p: &PathBuf| File::create(p).map(BufWriter::new).map_err(|e| Error::Other(format!("{}: {e}", p.display())));
            batch.write_csv(io(&out)?)?;
            if let Some(s) = summary {
                batch.write_summary_csv(io(&s)?)?;
            }
            eprintln!("{} trajectories, {} grid points", batch.len(), batch.grid.len());
        }
        Cmd::Moments { order, observables, freeze_conserved, integrate, t_max, dt, step, depth } => {
            let m = need_model(&cli.model)?;
            let idx = m.select(observables.as_deref())?;
            let obs: Vec<_> = idx.iter().map(|&i| m.observables[i].obs.clone()).collect();
            let r = check_polynomial_jump_closure(&m.hamiltonian()?, &obs, &m.identities, depth)?;
            let fz = freeze_for(&m, &idx, &r, freeze_conserved)?;
            let vars: Vec<String> = idx.iter().map(|&i| m.observables[i].variable.clone()).collect();
            let d = derive_differential_operator(&r, &vars, &fz)?;
            let sys = moment_odes(&d, &m.params, order)?;
            let names: Vec<String> = idx
                .iter()
                .enumerate()
                .filter(|(k, _)| !fz.indices.contains(k))
                .map(|(_, &i)| m.observables[i].obs.name.clone())
                .collect();
            out!("{}", sys.pretty(&names));
            if !sys.closed {
                eprintln!("warning: the hierarchy does not close at order {order}");
            }
            if integrate {
                if !sys.closed {
                    return Err(Error::NotClosed(format!("moment hierarchy at order {order}")));
                }
                let kept: Vec<usize> = (0..idx.len()).filter(|k| !fz.indices.contains(k)).map(|k| idx[k]).collect();
                let x0: Vec<f64> = m.initial_values(&kept)?.iter().map(to_f64).collect();
                let ts = grid(t_max, dt);
                let sol = sys.integrate(&sys.initial_from_values(&x0), &ts, step)?;
                let head: Vec<String> = sys
                    .moments
                    .iter()
                    .map(|e| {
                        e.iter()
                            .zip(&names)
                            .filter(|(k, _)| **k > 0)
                            .map(|(k, n)| if *k == 1 { n.clone() } else { format!("{n}^{k}") })
                            .collect::<Vec<_>>()
                            .join("*")
                    })
                    .collect();
                out!("t,{}", head.join(","));
                for (t, row) in ts.iter().zip(&sol) {
                    out!("{t},{}", row.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(","));
                }
            }
        }
        Cmd::Oracle { name, t, lambda, beta, tau, n0, kappa0, kappa1, nw, nb, nww, nwb, nbb } => {
            let o = match name.as_str() {
                "birth-death-pgf" => ClosedFormOracle::BirthDeathPgf { beta, tau, n0 },
                "birth-death-emgf" => ClosedFormOracle::BirthDeathEmgf { beta, tau, n0 },
                _ => ClosedFormOracle::VoterEdgeEmgf { kappa0, kappa1, nw, nb, nww, nwb, nbb },
            };
            o.validate()?;
            let want = if matches!(o, ClosedFormOracle::VoterEdgeEmgf { .. }) { 3 } else { 1 };
            if lambda.len() != want {
                return Err(Error::Validation(vec![format!("{name} takes {want} lambda values")]));
            }
            out!("{}", o.eval(t, &lambda));
        }
        Cmd::Validate => {
            let m = need_model(&cli.model)?;
            let checks = validate_model(&m);
            for c in &checks {
                out!("{}", c.line());
            }
            if checks.iter().any(|c| !c.passed) {
                status = ExitCode::from(1);
            }
        }
    }
    Ok(status)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(s) => s,
        Err(e) => {
            match &e {
                Error::Validation(v) if v.len() > 1 => {
                    eprintln!("error: {} problems", v.len());
                    for m in v {
                        eprintln!("  {m}");
                    }
                }
                _ => eprintln!("error: {e}"),
            }
            ExitCode::from(match e {
                Error::NotClosed(_) => 2,
                Error::BudgetExceeded { .. } => 3,
                _ => 1,
            })
        }
    }
}

