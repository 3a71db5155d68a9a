//! Drive the experiment harness from code. Rerunning with the same seed
//! writes the same report body.

use bornlab::cli::{run, Command, Format, RunOptions};

fn main() -> bornlab::Result<()> {
    let dir = std::env::temp_dir().join("bornlab-example");
    std::fs::create_dir_all(&dir)?;
    let options = || RunOptions {
        amps: Some(vec![0.3, 0.7]),
        trials: Some(20_000),
        seed: Some(42),
        format: Some(Format::Json),
        output_path: Some(dir.join("born-test.json")),
        ..RunOptions::default()
    };
    let first = run(&options().resolve(Command::BornTest)?, &mut std::io::stdout())?;
    let a = std::fs::read(&first.report_path)?;
    let second = run(&options().resolve(Command::BornTest)?, &mut std::io::sink())?;
    let b = std::fs::read(&second.report_path)?;
    println!("report {} identical on rerun: {}", first.report_path.display(), a == b);
    Ok(())
}
