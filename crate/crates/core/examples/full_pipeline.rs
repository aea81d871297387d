//! Drives the command-line entry point in-process: synth, series,
//! analyze, plot. Equivalent to running the `facedeform` binary.

use facedeform::cli::run;

fn main() {
    let dir = std::env::temp_dir().join("facedeform-full-pipeline");
    let d = |s: &str| dir.join(s).to_string_lossy().into_owned();
    let (frames, out) = (d("frames"), d("out"));
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--width".into(), "120".into(), "--height".into(), "180".into(), "-n".into(), "60".into(),
             "--active".into(), "mouth:1.5:5:20:40:55".into(), "--active".into(), "eyes_eyebrows:0.5:10:20:30:40@-90".into(),
             "--out".into(), frames.clone()],
        vec!["series".into(), "--frames".into(), frames, "--out".into(), out.clone()],
        vec!["analyze".into(), "--series".into(), d("out/series.csv"), "--out".into(), out.clone()],
        vec!["plot".into(), "--series".into(), d("out/series.csv"), "--out".into(), out.clone()],
    ];
    for step in steps {
        let args = std::iter::once("facedeform".to_string()).chain(step.iter().cloned());
        let code = run(args);
        println!("facedeform {} -> exit {code}", step[0]);
        if code != 0 {
            std::process::exit(code);
        }
    }
    println!("{}", std::fs::read_to_string(dir.join("out/report.json")).unwrap_or_default());
}
