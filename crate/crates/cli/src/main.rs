//! `superlab`: batch runner for the superefficiency laboratory.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 width error,
//! 4 no superefficient point (extract with `assert_exists = true`),
//! 5 assumption violation. Failures print one JSON object on stderr.

mod commands;
mod config;
mod error;
mod output;

use clap::{Arg, ArgMatches, Command};
use config::{command_keys, default_for, key_reference, parse_config_file, Settings, COMMANDS, KEYS};
use error::CliError;
use output::Format;
use std::path::PathBuf;
use std::process::ExitCode;

fn cli() -> Command {
    let mut app = Command::new("superlab")
        .about("Superefficiency experiments: distances, concentration, efficiency and extraction")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("config").long("config").global(true).value_name("PATH").help("flat key = value file"))
        .arg(Arg::new("seed").long("seed").global(true).value_name("INT").help("Monte Carlo seed [default: 0]"))
        .arg(Arg::new("out").long("out").global(true).value_name("DIR").default_value("out").help("output directory"))
        .arg(
            Arg::new("format")
                .long("format")
                .global(true)
                .value_name("FORMAT")
                .value_parser(["csv", "json", "both"])
                .default_value("both"),
        );
    for (name, about) in COMMANDS {
        let mut sub = Command::new(*name).about(*about);
        for key in command_keys(name).into_iter().filter(|k| *k != "seed") {
            let spec = KEYS.iter().find(|k| k.name == key).expect("registered key");
            sub = sub.arg(
                Arg::new(key)
                    .long(key.replace('_', "-"))
                    .value_name("VALUE")
                    .allow_hyphen_values(true)
                    .help(format!("{} [default: {}]", spec.help, default_for(name, key))),
            );
        }
        app = app.subcommand(sub);
    }
    app.subcommand(Command::new("keys").about("print the configuration key reference"))
}

fn execute(matches: &ArgMatches) -> Result<Option<CliError>, CliError> {
    let (command, sub) = matches.subcommand().expect("subcommand required");
    if command == "keys" {
        print!("{}", key_reference());
        return Ok(None);
    }
    let format = Format::parse(sub.get_one::<String>("format").map(String::as_str).unwrap_or("both"))?;
    let out = PathBuf::from(sub.get_one::<String>("out").map(String::as_str).unwrap_or("out"));

    let file_entries = match sub.get_one::<String>("config") {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::config(None, format!("cannot read config {path}: {e}")))?;
            parse_config_file(&text)?
        }
        None => Vec::new(),
    };
    let mut flag_entries: Vec<(String, String)> = command_keys(command)
        .into_iter()
        .filter(|k| *k != "seed")
        .filter_map(|k| sub.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    if let Some(seed) = sub.get_one::<String>("seed") {
        seed.parse::<u64>()
            .map_err(|_| CliError::config(Some("seed"), format!("expected a nonnegative integer, got {seed:?}")))?;
        flag_entries.push(("seed".into(), seed.clone()));
    }
    let settings = Settings::resolve(command, &file_entries, &flag_entries);

    let (artifact, failure) = commands::run(command, &settings)?;
    let config = serde_json::to_value(&settings.map).expect("config serializes");
    let files = artifact.write(&out, format, &config)?;
    println!("{command}: {}", artifact.summary);
    for f in files {
        println!("wrote {}", out.join(f).display());
    }
    Ok(failure)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(None, e.to_string().lines().next().unwrap_or_default().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match execute(&matches) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(err)) | Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
