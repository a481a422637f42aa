//! Cross-checks the simplex solver against exhaustive vertex enumeration in
//! exact rational arithmetic.

use meshsep_lp::{LpProblem, LpSolver, Sense, SimplexSolver, Status};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = BigRational;

fn q(v: f64) -> Q {
    Q::from_f64(v).unwrap()
}

/// Best objective over all basic feasible points of a bounded LP, or `None`
/// when no vertex is feasible.
fn enumerate_vertices(p: &LpProblem) -> Option<Q> {
    let n = p.num_vars();
    // Hyperplanes: rows and finite bounds, as (coeffs, rhs).
    let mut planes: Vec<(Vec<Q>, Q)> = Vec::new();
    for c in &p.constraints {
        let mut a = vec![Q::zero(); n];
        for &(j, v) in &c.terms {
            a[j] += q(v);
        }
        planes.push((a, q(c.rhs)));
    }
    for (j, v) in p.vars.iter().enumerate() {
        for b in [v.lower, v.upper] {
            assert!(b.is_finite(), "oracle needs a bounded box");
            let mut a = vec![Q::zero(); n];
            a[j] = Q::from_integer(BigInt::from(1));
            planes.push((a, q(b)));
        }
    }
    let feasible = |x: &[Q]| {
        p.constraints.iter().all(|c| {
            let act: Q = c.terms.iter().map(|&(j, v)| q(v) * &x[j]).sum();
            let rhs = q(c.rhs);
            match c.sense {
                Sense::Le => act <= rhs,
                Sense::Ge => act >= rhs,
                Sense::Eq => act == rhs,
            }
        }) && p
            .vars
            .iter()
            .zip(x)
            .all(|(v, xi)| *xi >= q(v.lower) && *xi <= q(v.upper))
    };
    let mut best: Option<Q> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&idx.iter().map(|&i| planes[i].clone()).collect::<Vec<_>>()) {
            if feasible(&x) {
                let obj: Q = p.vars.iter().zip(&x).map(|(v, xi)| q(v.objective) * xi).sum();
                if best.as_ref().is_none_or(|b| obj > *b) {
                    best = Some(obj);
                }
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < planes.len() - n + k {
                idx[k] += 1;
                for t in k + 1..n {
                    idx[t] = idx[t - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(rows: &[(Vec<Q>, Q)]) -> Option<Vec<Q>> {
    let n = rows.len();
    let mut m: Vec<Vec<Q>> = rows
        .iter()
        .map(|(a, b)| {
            let mut r = a.clone();
            r.push(b.clone());
            r
        })
        .collect();
    for c in 0..n {
        let piv = (c..n).find(|&r| !m[r][c].is_zero())?;
        m.swap(c, piv);
        let p = m[c][c].clone();
        for k in c..=n {
            m[c][k] = &m[c][k] / &p;
        }
        for r in 0..n {
            if r != c && !m[r][c].is_zero() {
                let f = m[r][c].clone();
                for k in c..=n {
                    let t = &f * &m[c][k];
                    m[r][k] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n].clone()).collect())
}

fn random_problem(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.gen_range(1..=4);
    let m = rng.gen_range(1..=5);
    let mut p = LpProblem::new();
    for _ in 0..n {
        let lo = -(rng.gen_range(0..4) as f64);
        let hi = rng.gen_range(1..6) as f64;
        p.add_var(lo, hi, rng.gen_range(-5..=5) as f64);
    }
    for _ in 0..m {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.8) {
                terms.push((j, rng.gen_range(-6..=6) as f64 * 0.5));
            }
        }
        let sense = match rng.gen_range(0..6) {
            0 => Sense::Eq,
            1 | 2 => Sense::Ge,
            _ => Sense::Le,
        };
        p.add_constraint(terms, sense, rng.gen_range(-4..=8) as f64);
    }
    p
}

fn check_against_oracle(p: &LpProblem) {
    let sol = SimplexSolver::new().solve(p);
    match enumerate_vertices(p) {
        None => assert_eq!(sol.status, Status::Infeasible, "{}", p.to_lp_format()),
        Some(best) => {
            assert_eq!(sol.status, Status::Optimal, "{}", p.to_lp_format());
            let exact: f64 = num_traits::ToPrimitive::to_f64(&best).unwrap();
            assert!(
                (sol.objective - exact).abs() <= 1e-9 * (1.0 + exact.abs()),
                "objective {} vs oracle {}\n{}",
                sol.objective,
                exact,
                p.to_lp_format()
            );
            assert!(p.max_violation(&sol.values) <= 1e-8);
        }
    }
}

#[test]
fn random_bounded_problems_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..400 {
        check_against_oracle(&random_problem(&mut rng));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]
    #[test]
    fn seeded_problems_match_vertex_enumeration(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        check_against_oracle(&random_problem(&mut rng));
    }
}

#[test]
fn optimal_duals_certify_optimality() {
    // max 3x + 2y st x + y <= 4, x + 3y <= 6, x <= 3; duals must be dual feasible
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, f64::INFINITY, 3.0);
    let y = p.add_var(0.0, f64::INFINITY, 2.0);
    p.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
    p.add_constraint(vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
    p.add_constraint(vec![(x, 1.0)], Sense::Le, 3.0);
    let s = SimplexSolver::new().solve(&p);
    assert_eq!(s.status, Status::Optimal);
    assert!((s.objective - 11.0).abs() < 1e-12);
    let dual_obj: f64 = s.duals.iter().zip(&[4.0, 6.0, 3.0]).map(|(y, b)| y * b).sum();
    assert!((dual_obj - s.objective).abs() < 1e-9);
    assert!(s.duals.iter().all(|&y| y >= -1e-12));
}

#[test]
fn larger_sparse_problem_stays_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut p = LpProblem::new();
    let n = 60;
    for _ in 0..n {
        p.add_var(-1.0, 1.0, rng.gen_range(-1.0..1.0));
    }
    for _ in 0..80 {
        let terms: Vec<_> = (0..4).map(|_| (rng.gen_range(0..n), rng.gen_range(-2.0..2.0))).collect();
        p.add_constraint(terms, Sense::Le, rng.gen_range(0.1..2.0));
    }
    let s = SimplexSolver::new().solve(&p);
    assert_eq!(s.status, Status::Optimal);
    assert!(p.max_violation(&s.values) < 1e-9);
    // Dual check: reduced costs have the right signs at the returned point.
    let mut reduced: Vec<f64> = p.vars.iter().map(|v| v.objective).collect();
    for (c, y) in p.constraints.iter().zip(&s.duals) {
        for &(j, a) in &c.terms {
            reduced[j] -= y * a;
        }
    }
    for (j, d) in reduced.iter().enumerate() {
        let x = s.values[j];
        if *d > 1e-7 {
            assert!((x - 1.0).abs() < 1e-9, "column {j} should sit at its upper bound");
        } else if *d < -1e-7 {
            assert!((x + 1.0).abs() < 1e-9, "column {j} should sit at its lower bound");
        }
    }
}
