use clap::Parser;
use hgeom::cli::{parse_config, run, to_json, ConfigError, OutputFormat, Overrides};
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

/// Fisher-Rao geometry of harmonic-oscillator position densities.
#[derive(Parser)]
#[command(name = "hgeom", version)]
struct Args {
    /// JSON config file; standard input when omitted or `-`.
    config: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Relative quadrature tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// json or csv.
    #[arg(long)]
    format: Option<OutputFormat>,
}

fn read_input(path: Option<&PathBuf>) -> std::io::Result<String> {
    let mut text = String::new();
    match path {
        Some(p) if p.as_os_str() != "-" => text = std::fs::read_to_string(p)?,
        _ => {
            std::io::stdin().read_to_string(&mut text)?;
        }
    }
    Ok(text)
}

fn config_failure(err: ConfigError) -> ExitCode {
    eprintln!("hgeom: config error: {err}");
    print!("{}", to_json(&err.to_error_object()));
    ExitCode::from(2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let text = match read_input(args.config.as_ref()) {
        Ok(t) => t,
        Err(e) => {
            return config_failure(ConfigError::Invalid {
                field: "config".into(),
                message: format!("cannot read input: {e}"),
            })
        }
    };
    let mut config = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => return config_failure(e),
    };
    let overrides = Overrides {
        mu: args.mu,
        sigma: args.sigma,
        tol: args.tol,
        seed: args.seed,
        format: args.format,
    };
    if let Err(e) = config.apply(&overrides) {
        return config_failure(e);
    }
    let outcome = run(&config);
    let mut stdout = std::io::stdout().lock();
    if stdout
        .write_all(outcome.stdout.as_bytes())
        .and_then(|_| stdout.flush())
        .is_err()
    {
        return ExitCode::from(1);
    }
    if outcome.exit_code != 0 {
        eprintln!("hgeom: command failed; see the report on standard output");
    }
    ExitCode::from(outcome.exit_code as u8)
}
