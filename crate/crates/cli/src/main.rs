mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, SeedArg};
use commands::UsageError;

const EXIT_USAGE: u8 = 2;
const EXIT_MODEL: u8 = 3;
const EXIT_RESOURCE: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<mbpre::Error>() {
        Some(mbpre::Error::Budget { .. } | mbpre::Error::Resource(_) | mbpre::Error::NoSurvivors { .. }) => {
            EXIT_RESOURCE
        }
        Some(mbpre::Error::Contract(_) | mbpre::Error::Io(_)) => EXIT_USAGE,
        _ => EXIT_MODEL,
    }
}

fn command_name(cli: &Cli) -> String {
    let params = serde_json::to_value(&cli.command).expect("arguments serialise");
    match &params {
        Value::Object(m) => {
            let (outer, inner) = m.iter().next().expect("one subcommand");
            match inner {
                Value::Object(sub) if outer == "carpet" => {
                    format!("carpet {}", sub.keys().next().expect("one carpet subcommand"))
                }
                _ => outer.clone(),
            }
        }
        Value::String(s) => s.clone(),
        _ => unreachable!(),
    }
}

/// Flattens `value` into `path: value` lines.
fn render(value: &Value, path: &str, out: &mut String) {
    match value {
        Value::Object(m) => {
            for (k, v) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                render(v, &p, out);
            }
        }
        Value::Array(items) if items.iter().any(|v| v.is_object() || v.is_array()) => {
            for (i, v) in items.iter().enumerate() {
                render(v, &format!("{path}[{i}]"), out);
            }
        }
        other => out.push_str(&format!("{path}: {other}\n")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let seed = match cli.seed {
        SeedArg::Fixed(s) => s,
        SeedArg::Random => rand::random(),
    };

    let output = match commands::run(&cli.command, seed) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };

    if cli.json {
        let params = serde_json::to_value(&cli.command).expect("arguments serialise");
        let envelope = json!({
            "tool": "mbpre",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command_name(&cli),
            "seed": seed,
            "params": params,
            "result": output.result,
        });
        println!("{}", serde_json::to_string_pretty(&envelope).expect("output serialises"));
    } else if let Some(text) = output.raw_text {
        print!("{text}");
    } else {
        let mut text = format!("mbpre {} {}\nseed: {seed}\n", env!("CARGO_PKG_VERSION"), command_name(&cli));
        render(&output.result, "", &mut text);
        print!("{text}");
    }
    ExitCode::SUCCESS
}
