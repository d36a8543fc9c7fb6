use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use readout_core::config::{describe, read_document, resolve};
use readout_core::experiments::{
    averaged_curve_table, curve_table, fig2_table, run_curve, run_diffusion_average, run_fig2,
    run_fig3c, run_fig4, run_fig5_dephasing, run_fig5_diffusion, run_sweep, sweep_table, ModelKind,
    Scenario, SweepParameter, Table, DEFAULT_DELTA_Z,
};
use readout_core::lindblad::{evolve, IntegratorConfig};
use readout_core::models::{build_four_level, build_three_level, levels, DiffusionSpec};
use readout_core::operator::SpaceLayout;
use readout_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "readout-sim",
    version,
    about = "Single-shot optical qubit readout in cavity QED"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON scenario file; omitted keys take the default parameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true, default_value = "out")]
    output_dir: PathBuf,

    /// Override a configuration key, e.g. `--set params.eta=0.025`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Worker threads, or `auto`. Falls back to READOUT_SIM_THREADS.
    #[arg(long, global = true)]
    threads: Option<String>,

    /// Record the wall-clock time in the CSV comment header.
    #[arg(long, global = true)]
    stamp: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Readout curve P_s(T) of the configured model.
    Run,
    /// Sweep the parameter named in the config's `sweep` section.
    Sweep,
    /// Analytic P_s against ηTn_in for C = 0.4, 4, 40.
    Fig2,
    /// Three- and four-level readout curves.
    Fig3b,
    /// Optimal P_s against the Zeeman splitting.
    Fig3c,
    /// Optimal P_s against the collection efficiency.
    Fig4,
    /// Optimal P_s against pure dephasing of the excited states.
    #[command(name = "fig5-dephasing")]
    Fig5Dephasing,
    /// Optimal P_s against the spectral-diffusion linewidth.
    #[command(name = "fig5-diffusion")]
    Fig5Diffusion,
    /// Parse the config, build the model and take one integrator step.
    Validate,
}

const FIG4_ETA: [f64; 16] = [
    0.0, 0.0025, 0.005, 0.0075, 0.01, 0.0125, 0.015, 0.0175, 0.02, 0.025, 0.03, 0.04, 0.05, 0.1,
    0.2, 0.5,
];
const FIG5_GAMMA_D: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
const FIG5_GAMMA_I: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

/// Preset settings underneath the user's config file.
fn preset(command: Command) -> Value {
    match command {
        Command::Fig3c => json!({
            "model": "four_level",
            "sweep": { "name": "delta_z", "values": DEFAULT_DELTA_Z },
        }),
        Command::Fig4 => json!({
            "model": "four_level",
            "sweep": { "name": "eta", "values": FIG4_ETA },
        }),
        Command::Fig5Dephasing => json!({
            "model": "four_level",
            "params": { "eta": 0.025 },
            "sweep": { "name": "gamma_d", "values": FIG5_GAMMA_D },
        }),
        Command::Fig5Diffusion => json!({
            "model": "four_level",
            "params": { "eta": 0.025, "gamma_d_ghz": 0.0 },
            "diffusion": { "n_nodes": 21 },
            "sweep": { "name": "gamma_I", "values": FIG5_GAMMA_I },
        }),
        _ => json!({}),
    }
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("ERROR: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("ERROR: {msg}");
            ExitCode::from(2)
        }
    }
}

fn thread_count(cli: &Cli) -> Result<Option<usize>, Failure> {
    let raw = match &cli.threads {
        Some(t) => Some(t.clone()),
        None => std::env::var("READOUT_SIM_THREADS").ok(),
    };
    match raw.as_deref().map(str::trim) {
        None | Some("auto") | Some("") => Ok(None),
        Some(s) => match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Failure::Config(format!(
                "threads must be a positive integer or 'auto', got {s:?}"
            ))),
        },
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = thread_count(cli)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Config(e.to_string()))?;
    }
    let doc = match &cli.config {
        Some(p) => read_document(p)?,
        None => json!({}),
    };
    let scenario = resolve(preset(cli.command), doc, &cli.overrides)?;
    let started = Instant::now();

    if cli.command == Command::Validate {
        validate(&scenario)?;
        println!("config ok ({} model)", scenario.model.name());
        return Ok(());
    }

    std::fs::create_dir_all(&cli.output_dir)
        .map_err(|e| Failure::Config(format!("cannot create {}: {e}", cli.output_dir.display())))?;
    let header = header(cli, &scenario);
    let out = |name: &str, mut table: Table| -> Result<(), Failure> {
        let mut comments = header.clone();
        comments.append(&mut table.comments);
        table.comments = comments;
        let path = cli.output_dir.join(name);
        table.write(&path)?;
        eprintln!("wrote {}", path.display());
        Ok(())
    };
    let (p, nf, grid) = (&scenario.params, scenario.n_fock, &scenario.grid);

    match cli.command {
        Command::Run => {
            if let Some(spec) = scenario.diffusion.as_ref().filter(|d| d.gamma_i > 0.0) {
                let r = run_diffusion_average(scenario.model, p, spec, nf, grid)?;
                let mut table = averaged_curve_table(&r.curve);
                table.comments.push(format!(
                    "diffusion average over {} nodes, ps_opt = {}, t_opt_ns = {}",
                    r.node_offsets.len(),
                    r.curve.ps_opt,
                    r.curve.t_opt
                ));
                out("run.csv", table)?;
            } else {
                let r = run_curve(scenario.model, p, nf, grid)?;
                out("run.csv", curve_table(&r))?;
            }
        }
        Command::Sweep => {
            let sweep = scenario.sweep.as_ref().ok_or_else(|| {
                Failure::Config("sweep needs a `sweep` section in the config".into())
            })?;
            let result = run_sweep(&scenario)?;
            out(
                &format!("sweep_{}.csv", sweep.parameter.name()),
                sweep_table(&result),
            )?;
        }
        Command::Fig2 => {
            let fig = run_fig2(&[0.4, 4.0, 40.0], 50.0, 500)?;
            out("fig2.csv", fig2_table(&fig))?;
        }
        Command::Fig3b => {
            for (model, name) in [
                (ModelKind::ThreeLevel, "fig3b_three_level.csv"),
                (ModelKind::FourLevel, "fig3b_four_level.csv"),
            ] {
                let r = run_curve(model, p, nf, grid)?;
                eprintln!(
                    "{}: ps_opt = {:.6} at T = {:.2} ns (M = {})",
                    model.name(),
                    r.curve.ps_opt,
                    r.curve.t_opt,
                    r.curve.m_opt
                );
                let mut table = curve_table(&r);
                table.comments.insert(0, format!("model: {}", model.name()));
                out(name, table)?;
            }
        }
        Command::Fig3c => {
            let values = sweep_values(&scenario, SweepParameter::DeltaZ)?;
            out("fig3c.csv", sweep_table(&run_fig3c(&values, p, nf, grid)?))?;
        }
        Command::Fig4 => {
            let values = sweep_values(&scenario, SweepParameter::Eta)?;
            let r = run_fig4(&values, scenario.model, p, nf, grid)?;
            out("fig4.csv", sweep_table(&r))?;
        }
        Command::Fig5Dephasing => {
            let values = sweep_values(&scenario, SweepParameter::GammaD)?;
            let r = run_fig5_dephasing(&values, p, nf, grid)?;
            out("fig5_dephasing.csv", sweep_table(&r))?;
        }
        Command::Fig5Diffusion => {
            let values = sweep_values(&scenario, SweepParameter::GammaI)?;
            let spec = scenario.diffusion.clone().unwrap_or_default();
            let r = run_fig5_diffusion(&values, p, &spec, nf, grid)?;
            out("fig5_diffusion.csv", sweep_table(&r))?;
        }
        Command::Validate => unreachable!(),
    }
    eprintln!("done in {:.1} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn sweep_values(scenario: &Scenario, expected: SweepParameter) -> Result<Vec<f64>, Failure> {
    match &scenario.sweep {
        Some(s) if s.parameter == expected => Ok(s.values.clone()),
        Some(s) => Err(Failure::Config(format!(
            "this preset sweeps {}, config asks for {}",
            expected.name(),
            s.parameter.name()
        ))),
        None => Err(Failure::Config(format!(
            "missing {} sweep",
            expected.name()
        ))),
    }
}

fn header(cli: &Cli, scenario: &Scenario) -> Vec<String> {
    let mut lines = vec![
        format!("readout-sim {}", env!("CARGO_PKG_VERSION")),
        format!("command: {:?}", cli.command).to_lowercase(),
        format!("config: {}", describe(scenario)),
    ];
    if let Some(d) = &scenario.diffusion {
        let DiffusionSpec {
            gamma_i, n_nodes, ..
        } = d;
        lines.push(format!(
            "diffusion: gamma_I_ghz = {gamma_i}, n_nodes = {n_nodes}"
        ));
    }
    if cli.stamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        lines.push(format!("generated_unix_s: {secs}"));
    }
    lines
}

/// Builds the model and takes one short integrator step from each ground
/// state.
fn validate(scenario: &Scenario) -> Result<(), Failure> {
    scenario.grid.validate()?;
    let p = &scenario.params;
    let sys = match scenario.model {
        ModelKind::Analytic => {
            readout_core::models::cooperativity(p)?;
            return Ok(());
        }
        ModelKind::ThreeLevel => build_three_level(p, &SpaceLayout::new(3, scenario.n_fock)?)?,
        ModelKind::FourLevel => build_four_level(p, &SpaceLayout::new(4, scenario.n_fock)?)?,
    };
    let mut cfg = IntegratorConfig {
        output_grid: vec![
            0.0,
            scenario
                .grid
                .output_grid
                .get(1)
                .copied()
                .unwrap_or(1e-3)
                .min(1e-3),
        ],
        ..scenario.grid.clone()
    };
    cfg.max_steps = 10_000;
    for level in [levels::G0, levels::G1] {
        evolve(&sys, &sys.initial_state(level)?, &cfg)?;
    }
    Ok(())
}
