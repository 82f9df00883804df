// Temporary development probe; removed before release.
use sctc::de_engine::{bp_threshold, map_threshold, RunParams};
use sctc::ensembles::{EnsembleSpec, Family};
use sctc::metric_chain::{enumerate_supports, transition_matrix, Direction, TransferEvaluator};
use sctc::trellis::{build_trellis, parse_generator, Notation};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "matrix".into());
    match which.as_str() {
        "matrix" => example1_matrix(),
        "example2" => example2_closed_forms(),
        "fs2state" => two_state_fs(),
        "bp" => bp_checks(),
        "map" => map_checks(),
        "sc" => sc_checks(),
        _ => eprintln!("unknown probe {which}"),
    }
}

fn example1_matrix() {
    let g = parse_generator("1 0 1/7; 0 1 5/7", Notation::Octal).unwrap();
    let t = build_trellis(&g).unwrap();
    let fwd = enumerate_supports(&t, Direction::Forward).unwrap();
    println!("forward supports: {:?}", fwd.supports());
    let bwd = enumerate_supports(&t, Direction::Backward).unwrap();
    println!("backward supports: {:?}", bwd.supports());
    let p = 0.5;
    let m = transition_matrix(&fwd, &[p, p, p]).unwrap();
    for i in 0..m.dim() {
        let row: Vec<String> = (0..m.dim()).map(|j| format!("{:8.5}", m.entry(i, j))).collect();
        println!("[{}]", row.join(", "));
    }
    // corrected symbolic matrix (column-stochastic; entry (2,4) fixed)
    let q = 1.0 - p;
    let sym = [
        [q * q * (2.0 * p + 1.0), q * q, q * q * q, 0.0, 0.0],
        [p * p * q, 0.0, p * q * q, p * p * p - 2.0 * p * p + 1.0, q * q],
        [p * p * q, p * q, p * q * q, 0.0, 0.0],
        [p * p * q, p * q, p * q * q, 0.0, 0.0],
        [
            p * p * p,
            p * p,
            p * p * (3.0 - 2.0 * p),
            p * p * (2.0 - p),
            p * (2.0 - p),
        ],
    ];
    let mut maxdev = 0.0f64;
    for i in 0..5 {
        for j in 0..5 {
            maxdev = maxdev.max((m.entry(i, j) - sym[i][j]).abs());
        }
    }
    println!("max |computed - corrected symbolic| = {maxdev:.3e}");
    println!(
        "paper's printed (2,4) entry p^3-2p+1 at p=0.5: {}, computed: {}",
        p * p * p - 2.0 * p + 1.0,
        m.entry(1, 3)
    );
}

fn example2_closed_forms() {
    // G = [1 0 1/(1+D); 0 1 D/(1+D)] written in binary notation.
    let g = parse_generator("1 0 10/11; 0 1 01/11", Notation::Binary).unwrap();
    let t = build_trellis(&g).unwrap();
    println!("states: {}", t.num_states());
    let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
    let mut worst = 0.0f64;
    for i in 1..=20 {
        let p = i as f64 / 21.0;
        let f = eval.transfer(&[p, p, p]).unwrap();
        let den = p.powi(6) - 4.0 * p.powi(5) + 6.0 * p.powi(4) - 6.0 * p.powi(3)
            + 5.0 * p.powi(2)
            - 2.0 * p
            + 1.0;
        let f12 = p * (p.powi(5) - 4.0 * p.powi(4) + 6.0 * p.powi(3) - 5.0 * p.powi(2) + 2.0 * p + 1.0) / den;
        let f3 = p.powi(2) * (p.powi(2) - 4.0 * p + 4.0) / den;
        worst = worst
            .max((f[0] - f12).abs())
            .max((f[1] - f12).abs())
            .max((f[2] - f3).abs());
        if i == 10 {
            println!("p=0.5: f = {:?} vs ({f12}, {f12}, {f3})", f);
        }
    }
    println!("worst deviation over 20 p values: {worst:.3e}");
}

fn two_state_fs() {
    let g = parse_generator("1,1/3", Notation::Octal).unwrap();
    let t = build_trellis(&g).unwrap();
    let mut eval = TransferEvaluator::for_trellis(&t).unwrap();
    let mut worst = 0.0f64;
    for i in 1..=9 {
        for j in 1..=9 {
            let x = i as f64 / 10.0;
            let e = j as f64 / 10.0;
            let f = eval.transfer(&[e * x, e]).unwrap()[0];
            let da = 1.0 - e + x * e * e;
            let closed = x * e * e * (2.0 - 2.0 * e + x * e * e) / (da * da);
            worst = worst.max((f - closed).abs());
        }
    }
    println!("worst |f_s(eps x, eps) - closed form| = {worst:.3e}");
}

fn bp_checks() {
    let params = RunParams::default();
    let cases: Vec<(&str, EnsembleSpec, f64)> = vec![
        (
            "PCC4 r=1/3",
            EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7"),
            0.6428,
        ),
        (
            "PCC4 r=1/2",
            EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7").with_puncturing(1.0, 1.0, 0.5),
            0.4606,
        ),
        (
            "SCC4 r=1/2",
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7").with_puncturing(1.0, 0.0, 0.5),
            0.3594,
        ),
        (
            "PCC8 r=1/2",
            EnsembleSpec::new(Family::Pcc, "1,11/13", "1,11/13").with_puncturing(1.0, 1.0, 0.5),
            0.4651,
        ),
        (
            "SCC8 r=1/2",
            EnsembleSpec::new(Family::Scc, "1,11/13", "1,11/13").with_puncturing(1.0, 0.0, 0.5),
            0.3120,
        ),
        (
            "BCC r=1/2",
            EnsembleSpec::new(Family::Bcc1, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7")
                .with_puncturing(1.0, 1.0, 0.5),
            0.3013,
        ),
        (
            "BCC r=1/3",
            EnsembleSpec::new(Family::Bcc1, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7"),
            0.5541,
        ),
    ];
    for (label, spec, expect) in cases {
        let t0 = std::time::Instant::now();
        let r = bp_threshold(&spec, 1e-4, &params).unwrap();
        println!(
            "{label}: bp = {:.5} (expect {expect}), dev = {:+.5}, {:?}",
            r.value,
            r.value - expect,
            t0.elapsed()
        );
    }
}

fn map_checks() {
    let cases: Vec<(&str, EnsembleSpec, f64)> = vec![
        (
            "PCC4 r=1/3",
            EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7"),
            0.6553,
        ),
        (
            "PCC4 r=1/2",
            EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7").with_puncturing(1.0, 1.0, 0.5),
            0.4689,
        ),
        (
            "SCC4 r=1/2",
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7").with_puncturing(1.0, 0.0, 0.5),
            0.4981,
        ),
        (
            "BCC r=1/2",
            EnsembleSpec::new(Family::Bcc1, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7")
                .with_puncturing(1.0, 1.0, 0.5),
            0.4993,
        ),
        (
            "SCC4 r=9/10 (rho2=0.055)",
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7").with_puncturing(
                1.0,
                1.0 / 0.9 - 1.0 - 2.0 * 0.055,
                0.055,
            ),
            0.0996,
        ),
        (
            "SCC4 r=9/10 (rho2=1/18)",
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7").with_puncturing(
                1.0,
                0.0,
                1.0 / 18.0,
            ),
            0.0996,
        ),
    ];
    for (label, spec, expect) in cases {
        let t0 = std::time::Instant::now();
        match map_threshold(&spec, 1e-4) {
            Ok(r) => println!(
                "{label}: map = {:.5} (expect {expect}), dev = {:+.5}, {:?}",
                r.value,
                r.value - expect,
                t0.elapsed()
            ),
            Err(e) => println!("{label}: ERROR {e}"),
        }
    }
}

fn sc_checks() {
    let params = RunParams::default();
    let l = 100;
    let cases: Vec<(&str, EnsembleSpec, f64)> = vec![
        (
            "SC-PCC4 r=1/2 m=1",
            EnsembleSpec::new(Family::Pcc, "1,5/7", "1,5/7")
                .with_puncturing(1.0, 1.0, 0.5)
                .with_coupling(1, l),
            0.4689,
        ),
        (
            "SC-SCC4 r=1/2 m=1",
            EnsembleSpec::new(Family::Scc, "1,5/7", "1,5/7")
                .with_puncturing(1.0, 0.0, 0.5)
                .with_coupling(1, l),
            0.4708,
        ),
        (
            "SC-BCC-I r=1/2 m=1",
            EnsembleSpec::new(Family::Bcc1, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7")
                .with_puncturing(1.0, 1.0, 0.5)
                .with_coupling(1, l),
            0.4932,
        ),
        (
            "SC-BCC-II r=1/2 m=1",
            EnsembleSpec::new(Family::Bcc2, "1 0 1/7; 0 1 5/7", "1 0 1/7; 0 1 5/7")
                .with_puncturing(1.0, 1.0, 0.5)
                .with_coupling(1, l),
            0.4988,
        ),
    ];
    for (label, spec, expect) in cases {
        let t0 = std::time::Instant::now();
        let r = bp_threshold(&spec, 1e-4, &params).unwrap();
        println!(
            "{label}: sc = {:.5} (expect {expect}), dev = {:+.5}, {:?}",
            r.value,
            r.value - expect,
            t0.elapsed()
        );
    }
}
