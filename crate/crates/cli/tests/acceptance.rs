//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. The pipeline criteria drive the built binary; the kernel, edit and
//! LP criteria reuse the oracles of the library test suites.

#[path = "../../core/tests/support/mod.rs"]
mod support;
#[path = "../../lp/tests/suite/mod.rs"]
mod suite;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use serde_json::Value;

use meshsep::geom::{is_f64_exact, parse_rational, Rational};
use meshsep::io::read_mesh;
use meshsep::mesh::{find_intersections, topology_signature, Mesh};
use meshsep::proximity::{build_octree, close_pairs, close_pairs_exhaustive, DEFAULT_MAX_DEPTH, DEFAULT_MAX_LEAF};
use meshsep::synth::decimal_d;
use meshsep_lp::{LpSolver, SimplexSolver, Status};

const D: &str = "1e-6";

fn meshsep(dir: &Path, args: &[&str]) -> (i32, f64) {
    let t = Instant::now();
    let o = Command::new(env!("CARGO_BIN_EXE_meshsep")).args(args).current_dir(dir).output().unwrap();
    let code = o.status.code().unwrap_or(-1);
    if code != 0 && code != 2 {
        eprintln!("meshsep {}: {}", args.join(" "), String::from_utf8_lossy(&o.stderr).trim());
    }
    (code, t.elapsed().as_secs_f64())
}

fn gen(dir: &Path, kind: &str, out: &str, size: usize, k: usize, seed: u64) {
    let (size, k, seed) = (size.to_string(), k.to_string(), seed.to_string());
    let (code, _) = meshsep(dir, &["gen", kind, out, "--size", &size, "-k", &k, "--seed", &seed, "-d", D]);
    assert_eq!(code, 0, "gen {kind} {out}");
}

fn load(dir: &Path, name: &str) -> Mesh {
    read_mesh(&dir.join(name), None).unwrap().mesh
}

fn report(dir: &Path, name: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

/// Minimum squared distance among pairs within 4d², by an exhaustive scan
/// for small meshes and the octree search otherwise.
fn min_close_dist2(m: &Mesh, d: &Rational) -> Option<Rational> {
    let t2 = d * d * Rational::from_integer(4.into());
    let pairs = if m.num_triangles() <= 500 {
        close_pairs_exhaustive(m, &t2)
    } else {
        close_pairs(m, &build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH), &t2)
    };
    pairs.into_iter().map(|p| p.dist2).min()
}

fn intersections(m: &Mesh) -> usize {
    find_intersections(m, &build_octree(m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH)).len()
}

/// Expansion iteration records of a pipeline report.
fn iterations(r: &Value) -> Vec<Value> {
    r["expand_iterations"].as_array().cloned().unwrap_or_default()
}

struct Gate {
    failed: usize,
}

impl Gate {
    fn line(&mut self, n: usize, name: &str, pass: bool, detail: String) {
        if !pass {
            self.failed += 1;
        }
        println!("{} [{n:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    }
}

fn main() {
    let d = decimal_d(1e-6);
    let d2 = &d * &d;
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let mut gate = Gate { failed: 0 };
    let mut reports: Vec<Value> = Vec::new();

    // 1. Separation of planted pairs.
    let (mut ok1, mut worst_t, mut bad) = (0, 0.0f64, Vec::new());
    for i in 0..50u64 {
        let size = 1000 + i as usize * 9000 / 49;
        let (inp, out, rep) = (format!("s{i}.xmesh"), format!("s{i}.out.xmesh"), format!("s{i}.json"));
        gen(dir, "planted-pairs", &inp, size, 10, i);
        let (code, secs) = meshsep(dir, &["separate", &inp, &out, "-d", D, "--report", &rep]);
        worst_t = worst_t.max(secs);
        let separated = code == 0 && min_close_dist2(&load(dir, &out), &d).is_none_or(|x| x > d2);
        if separated && secs <= 60.0 {
            ok1 += 1;
        } else {
            bad.push(format!("seed {i} (exit {code}, {secs:.1}s)"));
        }
        reports.push(report(dir, &rep));
    }
    gate.line(
        1,
        "separation",
        ok1 == 50,
        format!("{ok1}/50 meshes separated beyond d, slowest {worst_t:.1}s{}", fmt_bad(&bad)),
    );

    // 2. Rounding safety on high-precision input.
    let (mut ok2, mut bad) = (0, Vec::new());
    for i in 0..20u64 {
        let (inp, out, rep) = (format!("h{i}.xmesh"), format!("h{i}.out.xmesh"), format!("h{i}.json"));
        gen(dir, "high-precision", &inp, 200 + 5 * i as usize, 4, 100 + i);
        let (code, _) = meshsep(dir, &["round", &inp, &out, "-d", D, "--report", &rep]);
        let before = load(dir, &inp);
        let after = load(dir, &out);
        let binary64 = after.points().iter().all(|p| [&p.x, &p.y, &p.z].iter().all(|c| is_f64_exact(c)));
        let safe = code == 0
            && binary64
            && intersections(&after) == 0
            && topology_signature(&after) == topology_signature(&before);
        if safe {
            ok2 += 1;
        } else {
            bad.push(format!("seed {} (exit {code}, binary64 {binary64})", 100 + i));
        }
        reports.push(report(dir, &rep));
    }
    gate.line(
        2,
        "rounding safety",
        ok2 == 20,
        format!("{ok2}/20 rounded meshes binary64, intersection-free, same topology{}", fmt_bad(&bad)),
    );

    // 3. Displacement on the modification-dominated suite.
    let (mut worst_med, mut worst_max, mut all3) = (0.0f64, 0.0f64, true);
    for i in 0..5u64 {
        let (inp, out, rep) = (format!("b{i}.xmesh"), format!("b{i}.out.xmesh"), format!("b{i}.json"));
        gen(dir, "sliver-band", &inp, 1000 + 500 * i as usize, 10, 200 + i);
        let (code, _) = meshsep(dir, &["separate", &inp, &out, "-d", D, "--report", &rep]);
        let r = report(dir, &rep);
        all3 &= code == 0;
        worst_med = worst_med.max(r["row"]["a_m"].as_f64().unwrap());
        worst_max = worst_max.max(r["row"]["m_m"].as_f64().unwrap());
        reports.push(r);
    }
    gate.line(
        3,
        "displacement bound",
        all3 && worst_med <= 1.0 && worst_max <= 10.0,
        format!("worst median {worst_med:.3}d, worst max {worst_max:.3}d over 5 sliver-band meshes"),
    );

    // 4. Convergence of the expansion loop over every pipeline run above.
    let counts: Vec<usize> = reports.iter().map(|r| iterations(r).len()).collect();
    let within1 = counts.iter().filter(|&&c| c <= 1).count();
    let within5 = counts.iter().filter(|&&c| c <= 5).count();
    let total_iters: usize = counts.iter().sum();
    let halvings: u64 = reports.iter().map(|r| r["halvings"].as_u64().unwrap_or(0)).sum();
    let halving_rate = if total_iters == 0 { 0.0 } else { halvings as f64 / total_iters as f64 };
    let n = reports.len();
    gate.line(
        4,
        "convergence",
        within1 * 5 >= n * 4 && within5 == n && halving_rate <= 0.05,
        format!("{within1}/{n} runs within 1 iteration, {within5}/{n} within 5, {halvings} halvings in {total_iters} iterations"),
    );

    // 5. Linearization error scaling.
    let (e1, e2, ratio) = support::linearization_ratio(100, 0.02, 5);
    gate.line(
        5,
        "linearization",
        (0.2..=0.33).contains(&ratio),
        format!("mean error {e1:.3e} at delta, {e2:.3e} at delta/2, ratio {ratio:.4}"),
    );

    // 6. Edit combinatorics.
    let t = support::edit_campaign(10_000, 6);
    gate.line(
        6,
        "edit combinatorics",
        t.applied >= 10_000 && t.violations.is_empty(),
        format!(
            "{} edits ({} contractions, {} flips), {} violations",
            t.applied,
            t.contractions,
            t.flips,
            t.violations.len()
        ),
    );

    // 7. Kernel oracles.
    let tallies = support::kernel_campaign(1000, 50, 7);
    let ok7 = tallies.iter().all(|(_, t)| t.failures.is_empty() && t.cases >= 1050);
    let detail: Vec<String> =
        tallies.iter().map(|(k, t)| format!("{k} {}/{}", t.cases - t.failures.len(), t.cases)).collect();
    gate.line(7, "kernel oracles", ok7, detail.join(", "));

    // 8. LP correctness.
    let mut lp_bad = Vec::new();
    let instances = suite::known_instances();
    for i in &instances {
        let sol = SimplexSolver::new().solve(&i.problem);
        let good = match i.expected {
            suite::Expected::Optimal(v) => {
                sol.status == Status::Optimal && (sol.objective - v).abs() / v.abs().max(1.0) <= 1e-9
            }
            suite::Expected::Infeasible => sol.status == Status::Infeasible,
            suite::Expected::Unbounded => sol.status == Status::Unbounded,
        };
        if !good {
            lp_bad.push(i.name.to_string());
        }
    }
    let viol = reports
        .iter()
        .flat_map(iterations)
        .filter(|r| r["accepted"].as_bool() == Some(true))
        .map(|r| r["max_violation"].as_f64().unwrap())
        .fold(0.0f64, f64::max);
    gate.line(
        8,
        "LP correctness",
        lp_bad.is_empty() && instances.len() == 20 && viol <= 1e-6,
        format!(
            "{}/{} known optima matched, max accepted violation {viol:.2e}d{}",
            instances.len() - lp_bad.len(),
            instances.len(),
            fmt_bad(&lp_bad)
        ),
    );

    // 9. No-op fidelity.
    let threshold = &d2 * Rational::from_integer(12.into());
    let (mut ok9, mut bad) = (0, Vec::new());
    for i in 0..10u64 {
        let (inp, out) = (format!("c{i}.off"), format!("c{i}.out.off"));
        gen(dir, "tetra-soup", &inp, 500 + 200 * i as usize, 0, 300 + i);
        let m = load(dir, &inp);
        let clean = close_pairs(&m, &build_octree(&m, DEFAULT_MAX_LEAF, DEFAULT_MAX_DEPTH), &threshold).is_empty();
        let (code, _) = meshsep(dir, &["round", &inp, &out, "-d", D]);
        let same = std::fs::read(dir.join(&inp)).unwrap() == std::fs::read(dir.join(&out)).unwrap();
        if clean && code == 0 && same {
            ok9 += 1;
        } else {
            bad.push(format!("seed {} (clean {clean}, exit {code}, identical {same})", 300 + i));
        }
    }
    gate.line(9, "no-op fidelity", ok9 == 10, format!("{ok9}/10 clean meshes passed bit-identically{}", fmt_bad(&bad)));

    // 10. Optimization contract.
    let (mut rounds, mut ok10, mut bad) = (0, true, Vec::new());
    for (i, kind) in ["planted-pairs", "planted-pairs", "planted-pairs", "sliver-band"].iter().enumerate() {
        let (inp, out, rep) = (format!("o{i}.xmesh"), format!("o{i}.out.xmesh"), format!("o{i}.json"));
        gen(dir, kind, &inp, 1000, 10, 400 + i as u64);
        let (code, _) = meshsep(dir, &["separate", &inp, &out, "-d", D, "--optimize", "--report", &rep]);
        let r = report(dir, &rep);
        let totals: Vec<Rational> = r["optimize_totals"]
            .as_array()
            .map(|a| a.iter().map(|x| parse_rational(x.as_str().unwrap()).unwrap()).collect())
            .unwrap_or_default();
        let mins: Vec<Option<Rational>> = r["optimize_round_min_dist2"]
            .as_array()
            .map(|a| a.iter().map(|x| x.as_str().map(|s| parse_rational(s).unwrap())).collect())
            .unwrap_or_default();
        rounds += mins.len();
        let monotone = totals.windows(2).all(|w| w[1] <= w[0]);
        let separated = mins.iter().all(|x| x.as_ref().is_none_or(|x| *x > d2));
        if code != 0 || totals.is_empty() || !monotone || !separated {
            ok10 = false;
            bad.push(format!("{kind} seed {} (exit {code}, monotone {monotone}, separated {separated})", 400 + i));
        }
    }
    gate.line(
        10,
        "optimization contract",
        ok10,
        format!("{rounds} accepted rounds over 4 meshes, l1 total non-increasing and d-separated{}", fmt_bad(&bad)),
    );

    println!("{} of 10 criteria passed", 10 - gate.failed);
    if gate.failed > 0 {
        std::process::exit(1);
    }
}

fn fmt_bad(v: &[String]) -> String {
    if v.is_empty() {
        String::new()
    } else {
        format!("; failing: {}", v.join(", "))
    }
}
