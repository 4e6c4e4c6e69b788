//! `lienard-lab` command-line frontend.

mod args;
mod commands;
mod config;
mod error;
mod model;

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, ModelArgs, ModelsAction};
use commands::{NumericOpts, Outcome, RgOpts, SimulateOpts, SweepOpts};
use config::{config_paths, FigureConfig};
use error::CliError;
use model::ModelSource;

fn param_map(list: &[(String, f64)]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut map = BTreeMap::new();
    for (k, v) in list {
        if map.insert(k.clone(), *v).is_some() {
            return Err(CliError::Usage(format!("parameter `{k}` given twice")));
        }
    }
    Ok(map)
}

fn source(m: &ModelArgs) -> Result<ModelSource, CliError> {
    ModelSource::new(m.model.as_deref(), m.file.as_deref(), param_map(&m.params)?)
}

fn config_base(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Models { action } => match action {
            ModelsAction::List => Ok(commands::models_list()),
            ModelsAction::Show { model, params } => commands::models_show(model.parse()?, &param_map(&params)?),
        },
        Command::Classify(a) => {
            let numeric = NumericOpts {
                seeds: a.numeric.seeds,
                tol: a.numeric.tol,
            };
            commands::classify(&source(&a.model)?, a.confirm, &numeric)
        }
        Command::Simulate(a) => {
            let numeric = NumericOpts {
                seeds: a.numeric.seeds,
                tol: a.numeric.tol,
            };
            commands::simulate(
                &source(&a.model)?,
                &SimulateOpts {
                    numeric: &numeric,
                    t_end: a.t_end,
                    out: &a.output.out,
                    format: a.output.format,
                    stem: "trajectory",
                },
            )
        }
        Command::Rg(a) => commands::rg(
            &source(&a.model)?,
            &RgOpts {
                lambda: a.lambda,
                compare: a.compare,
                amplitude: a.amplitude,
                tol: a.tol,
            },
        ),
        Command::Sweep(a) => commands::sweep(
            a.model.parse()?,
            &param_map(&a.params)?,
            &SweepOpts {
                axes: &a.axes,
                out: &a.output.out,
                format: a.output.format,
                threads: commands::threads_from_env()?,
            },
        ),
        Command::Reproduce(a) => {
            let cfg = FigureConfig::load(&a.config)?;
            cfg.run(config_base(&a.config), &a.out, commands::threads_from_env()?)
        }
        Command::RunAllFigures(a) => {
            let threads = commands::threads_from_env()?;
            let mut report = String::new();
            let mut files = Vec::new();
            let mut code = 0;
            for path in config_paths(&a.configs)? {
                let result = FigureConfig::load(&path).and_then(|cfg| {
                    let r = cfg.run(config_base(&path), &a.out, threads);
                    r.map(|o| (cfg.name, o))
                });
                let label = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
                match result {
                    Ok((name, o)) => {
                        let status = if o.code == 0 { "ok".to_string() } else { format!("exit {}", o.code) };
                        report.push_str(&format!("[{status}] {label}: {name}\n"));
                        files.extend(o.files);
                        if code == 0 {
                            code = o.code;
                        }
                    }
                    Err(e) => {
                        report.push_str(&format!("[exit {}] {label}: {e}\n", e.exit_code()));
                        if code == 0 {
                            code = e.exit_code();
                        }
                    }
                }
            }
            Ok(Outcome { report, files, code })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(o) => {
            print!("{}", o.report);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(o.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
