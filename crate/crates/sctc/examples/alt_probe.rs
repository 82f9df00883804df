use sctc::de_engine::{bp_threshold, RunParams};
use sctc::ensembles::{EnsembleSpec, Family};

fn main() {
    let params = RunParams::default();
    // (1, (1+D^3)/(1+D+D^3)): reversed-bit reading of 13
    let alt = "0b1,1001/1101";
    let cases: Vec<(&str, EnsembleSpec, f64)> = vec![
        (
            "PCC8-alt r=1/2",
            EnsembleSpec::new(Family::Pcc, alt, alt).with_puncturing(1.0, 1.0, 0.5),
            0.4651,
        ),
        (
            "SCC8-alt r=1/2",
            EnsembleSpec::new(Family::Scc, alt, alt).with_puncturing(1.0, 0.0, 0.5),
            0.3120,
        ),
        (
            "PCC8-alt r=1/3",
            EnsembleSpec::new(Family::Pcc, alt, alt),
            0.6368,
        ),
    ];
    for (label, spec, expect) in cases {
        let r = bp_threshold(&spec, 1e-4, &params).unwrap();
        println!("{label}: bp = {:.5} (expect {expect}), dev = {:+.5}", r.value, r.value - expect);
    }
}
