mod args;
mod commands;

use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde_json::json;

use args::{Cli, Command, OutputFormat};
use commands::Output;

const TOOL: &str = concat!("littlestone ", env!("CARGO_PKG_VERSION"));

fn run(cli: &Cli) -> littlestone::Result<Output> {
    let g = &cli.global;
    match &cli.command {
        Command::Analyze { class } => commands::analyze(g, class),
        Command::Extract(a) => commands::extract(g, a),
        Command::Cover(a) => commands::cover(g, a),
        Command::Duel(a) => commands::duel(g, a),
        Command::Gen(a) => commands::gen(g, a),
    }
}

/// Report with the provenance header. Only the structured form carries a
/// timestamp, so text and CSV reruns are byte-identical.
fn render(cli: &Cli, out: &Output) -> littlestone::Result<String> {
    let config = serde_json::to_string(cli)?;
    Ok(match cli.global.format {
        OutputFormat::Json => {
            let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            let doc = json!({
                "tool": TOOL,
                "timestamp": timestamp,
                "config": cli,
                "report": out.report,
            });
            format!("{}\n", serde_json::to_string_pretty(&doc)?)
        }
        OutputFormat::Text => format!("# {TOOL} {config}\n{}", out.text),
        OutputFormat::Csv => match &out.csv {
            Some(csv) => format!("# {TOOL} {config}\n{csv}"),
            None => {
                return Err(littlestone::Error::Domain(
                    "csv output is only available for analyze and duel".into(),
                ))
            }
        },
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = run(&cli).and_then(|out| {
        // A generated class goes out as a bare class file so it can be piped.
        let text = match (&cli.command, cli.global.format) {
            (Command::Gen(a), OutputFormat::Json) if a.output.is_none() => out.text.clone(),
            (Command::Gen(a), _) if a.output.is_none() => {
                format!("# {TOOL} {}\n{}", serde_json::to_string(&cli)?, out.text)
            }
            _ => render(&cli, &out)?,
        };
        Ok((text, out.indeterminate))
    });
    match result {
        Ok((text, indeterminate)) => {
            print!("{text}");
            if indeterminate && !cli.global.allow_indeterminate {
                eprintln!("error: some results are bounds only; pass --allow-indeterminate to accept them");
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
