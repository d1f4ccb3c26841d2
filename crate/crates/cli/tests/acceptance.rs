//! The exit gate: one test per release criterion, each printing a single
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use adiclab::circle::{
    difference_set, inclusion_violations, local_difference_set_base, LocalDiffParams,
};
use adiclab::measures::{
    cesaro_pushforward_samples, direct_samples, entropy_at_scale, markov_from_system,
    dimension_gain_experiment, MarkovWeights,
};
use adiclab::smooth::{affine_embedding_search, claim_full_circle, rational_grid, Verdict};
use adiclab::symbolic::{box_count_estimate, parse_system, DigitSystem, PointSpec};

fn data(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name);
    std::fs::read_to_string(p).unwrap()
}

fn set(name: &str) -> DigitSystem {
    parse_system(&data(name)).unwrap()
}

fn map(name: &str) -> adiclab::smooth::SmoothMap {
    adiclab::smooth::parse_map(&data(name)).unwrap()
}

fn gate(criterion: u32, ok: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_exact_dimensions() {
    let t = Instant::now();
    let (_, cantor) = set("cantor3.set").entropy_exact().unwrap();
    let (_, golden) = set("goldenmean2.set").entropy_exact().unwrap();
    let e1 = (cantor - 2f64.ln() / 3f64.ln()).abs();
    let e2 = (golden - ((1.0 + 5f64.sqrt()) / 2.0).ln() / 2f64.ln()).abs();
    let ok = e1 < 1e-10 && e2 < 1e-10 && t.elapsed().as_secs_f64() < 1.0;
    gate(1, ok, &format!("errors {e1:.2e}, {e2:.2e}, {:.2}s", t.elapsed().as_secs_f64()));
}

#[test]
fn criterion_2_box_count_agreement() {
    let t = Instant::now();
    let mut worst = 0f64;
    for name in ["cantor3.set", "goldenmean2.set", "fullshift2.set"] {
        let sys = set(name);
        let counts = (4..=12).map(|n| (n, sys.word_count(n))).collect();
        let slope = box_count_estimate(&counts, sys.base).unwrap().slope;
        let (_, exact) = sys.entropy_exact().unwrap();
        worst = worst.max((slope - exact).abs());
    }
    let ok = worst < 0.01 && t.elapsed().as_secs_f64() < 10.0;
    gate(2, ok, &format!("worst slope error {worst:.5}, {:.2}s", t.elapsed().as_secs_f64()));
}

#[test]
fn criterion_3_local_diff_closed_form() {
    let t = Instant::now();
    let sys = set("zeroplus3.set");
    let p = LocalDiffParams::defaults(3); // depth 12, M = 2^16
    let fhat = local_difference_set_base(&sys, &PointSpec::parse("0:0").unwrap(), &p, 3).unwrap();
    let ln3 = 3f64.ln();
    let analytic: Vec<f64> = std::iter::once(0.0)
        .chain((1..=40).map(|d| (-(1.0 - 3f64.powi(-d)).ln() / ln3).rem_euclid(1.0)))
        .collect();
    let m = p.resolution as f64;
    let mut worst = 0f64;
    for c in fhat.cells() {
        let mid = (c as f64 + 0.5) / m;
        let d = analytic
            .iter()
            .map(|&a| adiclab::circle_dist(mid, a))
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(d);
    }
    let mut covered = true;
    for &a in &analytic[1..=4] {
        covered &= fhat
            .cells()
            .any(|c| adiclab::circle_dist((c as f64 + 0.5) / m, a) <= 0.001);
    }
    let ok = !fhat.is_empty() && worst < 0.01 && covered && t.elapsed().as_secs_f64() < 30.0;
    gate(3, ok, &format!(
        "worst cell deviation {worst:.5}, first four values covered: {covered}, {:.2}s",
        t.elapsed().as_secs_f64()
    ));
}

#[test]
fn criterion_4_transform_law() {
    let t = Instant::now();
    let sys = set("cantor3.set");
    let p = LocalDiffParams::defaults(3); // depth 12, M = 2^16
    let rep = adiclab::smooth::verify_transform_law(
        &sys,
        &map("double_shift.map"),
        &PointSpec::parse("0:0").unwrap(),
        &p,
        0.02,
    )
    .unwrap();
    let ok = rep.verdict == Verdict::Pass && t.elapsed().as_secs_f64() < 60.0;
    gate(4, ok, &format!(
        "Hausdorff distance {:.5} (tol 0.02), {:.2}s",
        rep.distance,
        t.elapsed().as_secs_f64()
    ));
}

#[test]
fn criterion_5_full_circle_gap_trend() {
    let t = Instant::now();
    let sys = set("cantor3.set");
    let p = LocalDiffParams::defaults(3);
    let rep = claim_full_circle(&sys, 2, &[8, 10, 12, 14], 3, &p).unwrap();
    let final_gap = rep.gaps.last().unwrap().1;
    let ok = rep.monotone && final_gap <= 0.05 && t.elapsed().as_secs_f64() < 120.0;
    gate(5, ok, &format!(
        "gaps {:?}, monotone {}, {:.2}s",
        rep.gaps.iter().map(|&(_, g)| (g * 1e4).round() / 1e4).collect::<Vec<_>>(),
        rep.monotone,
        t.elapsed().as_secs_f64()
    ));
}

#[test]
fn criterion_6_difference_set_inclusion() {
    let t = Instant::now();
    let sys = set("cantor3.set");
    let p = LocalDiffParams::defaults(3);
    let fhat = local_difference_set_base(&sys, &PointSpec::parse("0:0").unwrap(), &p, 2).unwrap();
    let cover = sys.cover_at_depth(p.depth).unwrap();
    let diff = difference_set(&cover, p.resolution).unwrap();
    let violations = inclusion_violations(&fhat, &diff, 2, 2).unwrap();
    let ok = violations == 0 && t.elapsed().as_secs_f64() < 60.0;
    gate(6, ok, &format!(
        "{violations} violations over {} cells, {:.2}s",
        fhat.count(),
        t.elapsed().as_secs_f64()
    ));
}

#[test]
fn criterion_7_affine_rigidity_pattern() {
    let t = Instant::now();
    let sys = set("cantor3.set");
    let r_grid = rational_grid(9, 3.0);
    let t_grid: Vec<f64> = (0..729).map(|j| j as f64 / 729.0).collect();
    let rep = affine_embedding_search(&sys, &r_grid, &t_grid, 10).unwrap();
    let all_commensurable = rep.survivors.iter().all(|c| c.log_commensurable);
    let has = |num: i64, den: u64, t: f64| {
        rep.survivors
            .iter()
            .any(|c| c.r_num == num && c.r_den == den && (c.t - t).abs() < 1e-12)
    };
    let expected_survivors = has(1, 3, 0.0) && has(1, 3, 2.0 / 3.0);
    // the claimed non-examples must already die by depth 4, at every t
    let shallow = affine_embedding_search(&sys, &[(1, 2), (2, 3)], &t_grid, 4).unwrap();
    let refuted_shallow = shallow.survivors.is_empty();
    let ok = all_commensurable
        && expected_survivors
        && refuted_shallow
        && t.elapsed().as_secs_f64() < 120.0;
    gate(7, ok, &format!(
        "{} survivors, all slopes commensurable: {all_commensurable}, r=1/3 translates found: \
         {expected_survivors}, r=1/2 and 2/3 refuted at depth 4: {refuted_shallow}, {:.2}s",
        rep.survivors.len(),
        t.elapsed().as_secs_f64()
    ));
}

#[test]
fn criterion_8_measures_sanity() {
    let t = Instant::now();
    const S: usize = 1_000_000;
    let mut worst = 0f64;
    for (file, weights) in [
        ("fullshift2.set", MarkovWeights::Uniform),
        ("cantor3.set", MarkovWeights::Uniform),
        ("goldenmean2.set", MarkovWeights::Parry),
    ] {
        let sys = set(file);
        let mu = markov_from_system(&sys, weights).unwrap();
        let cloud = direct_samples(&mu, S, 20_260_823).unwrap();
        let est = entropy_at_scale(&cloud, 8, sys.base).unwrap();
        worst = worst.max((est.dimension - mu.dimension).abs());
    }
    let lebesgue = markov_from_system(&set("fullshift2.set"), MarkovWeights::Uniform).unwrap();
    let cloud =
        cesaro_pushforward_samples(&lebesgue, &map("identity.map"), 12, S, 20_260_823).unwrap();
    let leb_est = entropy_at_scale(&cloud, 8, 2).unwrap().dimension;
    let cantor = markov_from_system(&set("cantor3.set"), MarkovWeights::Uniform).unwrap();
    let gain =
        dimension_gain_experiment(&cantor, &map("logistic.map"), 12, S, 8, 20_260_823).unwrap();
    let ok = worst <= 0.02
        && (leb_est - 1.0).abs() <= 0.02
        && gain.margin > 0.0
        && t.elapsed().as_secs_f64() < 180.0;
    gate(8, ok, &format!(
        "worst direct-sample error {worst:.5}, Lebesgue pipeline {leb_est:.4}, gain margin \
         {:.4}, {:.2}s",
        gain.margin,
        t.elapsed().as_secs_f64()
    ));
}

#[test]
fn criterion_9_determinism_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let datadir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data");
    let mut reports = Vec::new();
    for jobs in ["1", "4"] {
        let mut paths = Vec::new();
        for (tag, args) in [
            ("measure", vec![
                "measure-dim",
                "--map", "logistic.map",
                "--samples", "200000",
                "--seed", "7",
            ]),
            ("circle", vec!["full-circle", "--b", "2", "--depths", "8,10"]),
        ] {
            let out_path = dir.path().join(format!("{tag}-{jobs}.json"));
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_adiclab"));
            cmd.arg(args[0])
                .arg("--set")
                .arg(datadir.join("cantor3.set"));
            let mut rest = args[1..].iter();
            while let Some(flag) = rest.next() {
                cmd.arg(flag);
                if let Some(val) = rest.next() {
                    if flag == &"--map" {
                        cmd.arg(datadir.join(val));
                    } else {
                        cmd.arg(val);
                    }
                }
            }
            cmd.args(["--jobs", jobs, "--out", out_path.to_str().unwrap()]);
            let out = cmd.output().unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            paths.push(out_path);
        }
        reports.push(
            paths
                .iter()
                .map(|p| std::fs::read(p).unwrap())
                .collect::<Vec<_>>(),
        );
    }
    let ok = reports[0] == reports[1];
    gate(9, ok, "reports byte-identical for --jobs 1 and --jobs 4");
}
