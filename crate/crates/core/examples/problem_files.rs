//! Problem and filter files as used by the `fdisynth` command line, driven
//! through the library entry point.

use fdisynth::cli::{
    self, FilterFile, PlantSection, ProblemFile, SynthesisSection, SCHEMA_VERSION,
};
use fdisynth::lti::StateSpace;
use nalgebra::dmatrix;

fn main() -> fdisynth::Result<()> {
    let dir = std::env::temp_dir().join("fdisynth_problem_files");
    std::fs::create_dir_all(&dir)?;

    // the bundled loop problem, re-expressed as a matrix problem
    let loaded = ProblemFile::from_json(include_str!("paper_sec5.json"))?.load()?;
    let matrix_problem = ProblemFile {
        schema_version: Some(SCHEMA_VERSION),
        loop_transfers: None,
        generalized_plant: Some(PlantSection::from_plant(&loaded.plant)),
        synthesis: Some(SynthesisSection {
            gamma0: Some(1.0),
            ..Default::default()
        }),
    };
    let problem = dir.join("plant.json");
    std::fs::write(&problem, serde_json::to_string_pretty(&matrix_problem)?)?;

    // a static filter reading only the control signal
    let filter = dir.join("q.json");
    FilterFile::new(&StateSpace::static_gain(dmatrix![0.0, -1.0])).write(&filter)?;

    let out = dir.join("analysis");
    let args = [
        "fdisynth",
        "analyze",
        problem.to_str().unwrap(),
        "--filter",
        filter.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ];
    let code = cli::main_with_args(args);
    println!("analyze exit code {code}");
    println!("{}", std::fs::read_to_string(out.join("report.txt"))?);
    let csv = std::fs::read_to_string(out.join("sweep.csv"))?;
    for line in csv.lines().take(3) {
        println!("{line}");
    }

    // missing gamma0 is an input error
    let mut broken = matrix_problem.clone();
    broken.synthesis = None;
    let bad = dir.join("broken.json");
    std::fs::write(&bad, serde_json::to_string(&broken)?)?;
    let code = cli::main_with_args([
        "fdisynth",
        "synth",
        bad.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    println!("synth without gamma0 exit code {code}");
    Ok(())
}
