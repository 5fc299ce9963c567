//! Writes a synthetic rating triple file shaped like one of the two
//! supported datasets, for exercising the CLI without the real data.
//!
//! Usage: gen_data <filmtrust|epinions> <output-path> [seed]

use std::fs::File;
use std::io::BufWriter;
use std::process::ExitCode;

use weedrec_core::synth;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    let (shape, path) = match (args.get(1), args.get(2)) {
        (Some(shape), Some(path)) => (shape.as_str(), path.as_str()),
        _ => {
            eprintln!("usage: gen_data <filmtrust|epinions> <output-path> [seed]");
            return ExitCode::from(2);
        }
    };
    let seed: u64 = match args.get(3).map(|s| s.parse()) {
        None => 42,
        Some(Ok(s)) => s,
        Some(Err(_)) => {
            eprintln!("invalid seed `{}`", args[3]);
            return ExitCode::from(2);
        }
    };

    let matrix = match shape {
        "filmtrust" => synth::filmtrust_like(seed),
        "epinions" => synth::epinions_like(seed),
        other => {
            eprintln!("unknown shape `{other}` (expected filmtrust or epinions)");
            return ExitCode::from(2);
        }
    };

    let file = match File::create(path) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("cannot create {path}: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = matrix.write_triples(&mut BufWriter::new(file)) {
        eprintln!("write failed: {e}");
        return ExitCode::FAILURE;
    }
    eprintln!(
        "wrote {} ratings ({} users, {} items) to {path}",
        matrix.n_ratings(),
        matrix.n_users(),
        matrix.n_items()
    );
    ExitCode::SUCCESS
}
