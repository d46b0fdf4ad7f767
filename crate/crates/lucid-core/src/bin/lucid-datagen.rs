//! `lucid-datagen`: writes the bundled synthetic datasets (census-income and
//! recidivism style CSVs) that the example run configs point at. Fully
//! deterministic under the seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lucid_core::data::synth;

#[derive(Parser)]
#[command(name = "lucid-datagen", version, about = "Generate the bundled synthetic datasets")]
struct Cli {
    /// Directory the CSVs are written into.
    #[arg(long, default_value = "data")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 9000)]
    census_rows: usize,
    #[arg(long, default_value_t = 8000)]
    recidivism_rows: usize,
    #[arg(long, default_value_t = 20240)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let adult_path = cli.out_dir.join("adult.csv");
    let compas_path = cli.out_dir.join("compas.csv");

    let census = synth::census_table(cli.census_rows, cli.seed);
    let recidivism = synth::recidivism_table(cli.recidivism_rows, cli.seed.wrapping_add(1));

    for (table, path) in [(&census, &adult_path), (&recidivism, &compas_path)] {
        if let Err(err) = synth::write_table_csv(table, path) {
            eprintln!("error: {err}");
            return ExitCode::FAILURE;
        }
        println!("{} ({} rows)", path.display(), table.rows.len());
    }
    ExitCode::SUCCESS
}
