use std::process::ExitCode;

use bandlab::experiments::{emit_csv, emit_plot, parse_cli, run, write_csv};
use bandlab::Error;

fn main() -> ExitCode {
    let cfg = match parse_cli(std::env::args_os().skip(1)) {
        Ok(cfg) => cfg,
        Err(Error::Help(text)) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("bandlab: {e}");
            return ExitCode::from(2);
        }
    };
    eprintln!("config: {}", serde_json::to_string(&cfg).expect("config serializes"));

    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("bandlab: {e}");
            return ExitCode::from(2);
        }
    };

    let written = match &cfg.out {
        Some(path) => emit_csv(&report, path),
        None => write_csv(&report, std::io::stdout().lock()),
    };
    if let Err(e) = written.and_then(|_| match &cfg.plot {
        Some(path) => emit_plot(&report, path),
        None => Ok(()),
    }) {
        eprintln!("bandlab: {e}");
        return ExitCode::FAILURE;
    }

    for a in &report.aggregates {
        let s = a.summary;
        eprintln!(
            "{:<20} median {:<12.6e} mean {:<12.6e} min {:<12.6e} max {:<12.6e}",
            a.name, s.median, s.mean, s.min, s.max
        );
    }
    for c in &report.checks {
        eprintln!("{:<28} {}/{} passed", c.name, c.passed, c.total);
    }
    eprintln!(
        "{} trials ({} failed) in {:.2}s",
        report.trials.len(),
        report.failed(),
        report.elapsed.as_secs_f64()
    );
    ExitCode::SUCCESS
}
