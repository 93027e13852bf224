use std::process::Command;

use spectral_rerank::store::{write_corpus, write_queries, Dtype, QueryVector};
use spectral_rerank::synth::{gen_corpus, gen_document, SynthSpec};

fn run(args: &[&str]) -> Vec<u8> {
    let o = Command::new(env!("CARGO_BIN_EXE_spectral-rerank")).args(args).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o.stdout
}

const SMALL: [&str; 10] = ["--corpus-size", "60", "--queries", "12", "--len-min", "20", "--len-max", "60", "--dim", "16"];

#[test]
fn synth_output_does_not_depend_on_thread_count() {
    for cmd in [&["synth", "alpha-sweep", "--alphas", "0.5,0.8"][..], &["synth", "width-sweep", "--widths", "1,4"], &["synth", "scale-decomp"]] {
        let outputs: Vec<Vec<u8>> = ["1", "3", "8"]
            .iter()
            .map(|t| {
                let mut args = vec!["--threads", t];
                args.extend_from_slice(cmd);
                args.extend(SMALL);
                run(&args)
            })
            .collect();
        assert!(!outputs[0].is_empty());
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{cmd:?}");
    }
}

#[test]
fn run_files_do_not_depend_on_thread_count() {
    let spec = SynthSpec {
        corpus_size: 50,
        dim: 8,
        len_min: 5,
        len_max: 40,
        ..SynthSpec::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| dir.path().join(f).to_str().unwrap().to_owned();
    write_corpus(&gen_corpus(&spec).unwrap(), p("corpus.bin")).unwrap();
    let queries: Vec<QueryVector> = (0..7)
        .map(|i| {
            let row = gen_document(&spec, 100 + i).row(0).iter().map(|&x| f64::from(x)).collect();
            QueryVector::normalized(format!("q{i}"), row).unwrap()
        })
        .collect();
    write_queries(&queries, Dtype::F32, p("queries.bin")).unwrap();
    let mut files = Vec::new();
    for t in ["1", "2", "6"] {
        let out = p(&format!("run{t}.txt"));
        run(&["--threads", t, "rerank", "--corpus", &p("corpus.bin"), "--queries", &p("queries.bin"), "--out", &out, "--k", "20", "--grid", "1,3,7,inf"]);
        files.push(std::fs::read(out).unwrap());
    }
    assert!(!files[0].is_empty());
    assert!(files.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn corpus_is_a_function_of_the_seed() {
    let spec = SynthSpec { corpus_size: 20, ..SynthSpec::default() };
    assert_eq!(gen_corpus(&spec).unwrap().docs(), gen_corpus(&spec).unwrap().docs());
    let other = SynthSpec { seed: 43, ..spec.clone() };
    assert_ne!(gen_corpus(&spec).unwrap().docs(), gen_corpus(&other).unwrap().docs());
}
