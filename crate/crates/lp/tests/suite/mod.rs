//! Twenty linear programs with optima known in closed form or by brute force.

use meshsep_lp::{LpProblem, Sense};

pub enum Expected {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

pub struct Instance {
    pub name: String,
    pub problem: LpProblem,
    pub expected: Expected,
}

const INF: f64 = f64::INFINITY;

fn inst(name: &str, problem: LpProblem, expected: Expected) -> Instance {
    Instance {
        name: name.to_string(),
        problem,
        expected,
    }
}

fn wyndor() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, INF, 3.0);
    let y = p.add_var(0.0, INF, 5.0);
    p.add_constraint(vec![(x, 1.0)], Sense::Le, 4.0);
    p.add_constraint(vec![(y, 2.0)], Sense::Le, 12.0);
    p.add_constraint(vec![(x, 3.0), (y, 2.0)], Sense::Le, 18.0);
    inst("wyndor", p, Expected::Optimal(36.0))
}

fn two_rows() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, INF, 3.0);
    let y = p.add_var(0.0, INF, 2.0);
    p.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 4.0);
    p.add_constraint(vec![(x, 1.0), (y, 3.0)], Sense::Le, 6.0);
    inst("two-rows", p, Expected::Optimal(12.0))
}

fn beale() -> Instance {
    // Cycles under Dantzig's rule without anti-cycling.
    let mut p = LpProblem::new();
    let x4 = p.add_var(0.0, INF, 0.75);
    let x5 = p.add_var(0.0, INF, -150.0);
    let x6 = p.add_var(0.0, INF, 0.02);
    let x7 = p.add_var(0.0, INF, -6.0);
    p.add_constraint(vec![(x4, 0.25), (x5, -60.0), (x6, -0.04), (x7, 9.0)], Sense::Le, 0.0);
    p.add_constraint(vec![(x4, 0.5), (x5, -90.0), (x6, -0.02), (x7, 3.0)], Sense::Le, 0.0);
    p.add_constraint(vec![(x6, 1.0)], Sense::Le, 1.0);
    inst("beale", p, Expected::Optimal(0.05))
}

fn klee_minty(n: usize) -> Instance {
    let mut p = LpProblem::new();
    let x: Vec<_> = (0..n).map(|j| p.add_var(0.0, INF, 2f64.powi((n - 1 - j) as i32))).collect();
    for i in 0..n {
        let mut terms: Vec<_> = (0..i).map(|j| (x[j], 2f64.powi((i - j + 1) as i32))).collect();
        terms.push((x[i], 1.0));
        p.add_constraint(terms, Sense::Le, 5f64.powi(i as i32 + 1));
    }
    inst(&format!("klee-minty-{n}"), p, Expected::Optimal(5f64.powi(n as i32)))
}

fn boxed() -> Instance {
    let mut p = LpProblem::new();
    p.add_var(-1.0, 2.0, 1.0);
    p.add_var(-3.0, 1.0, -2.0);
    p.add_var(0.0, 4.0, 3.0);
    inst("box", p, Expected::Optimal(20.0))
}

fn simplex_face() -> Instance {
    let mut p = LpProblem::new();
    let x: Vec<_> = [3.0, 7.0, -1.0, 5.0].iter().map(|&c| p.add_var(0.0, INF, c)).collect();
    p.add_constraint(x.iter().map(|&v| (v, 1.0)).collect(), Sense::Eq, 1.0);
    inst("simplex", p, Expected::Optimal(7.0))
}

fn knapsack() -> Instance {
    let mut p = LpProblem::new();
    let x: Vec<_> = [60.0, 100.0, 120.0].iter().map(|&v| p.add_var(0.0, 1.0, v)).collect();
    p.add_constraint(vec![(x[0], 10.0), (x[1], 20.0), (x[2], 30.0)], Sense::Le, 50.0);
    inst("fractional-knapsack", p, Expected::Optimal(240.0))
}

fn assignment() -> Instance {
    let c = [[9.0, 2.0, 7.0, 8.0], [6.0, 4.0, 3.0, 7.0], [5.0, 8.0, 1.0, 8.0], [7.0, 6.0, 9.0, 4.0]];
    let mut p = LpProblem::new();
    let mut x = [[0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            x[i][j] = p.add_var(0.0, INF, -c[i][j]);
        }
    }
    for i in 0..4 {
        p.add_constraint((0..4).map(|j| (x[i][j], 1.0)).collect(), Sense::Eq, 1.0);
        p.add_constraint((0..4).map(|j| (x[j][i], 1.0)).collect(), Sense::Eq, 1.0);
    }
    // Best of the 24 permutations.
    let mut best = f64::INFINITY;
    let mut perm = [0, 1, 2, 3];
    permute(&mut perm, 0, &mut |p| best = best.min((0..4).map(|i| c[i][p[i]]).sum()));
    inst("assignment", p, Expected::Optimal(-best))
}

fn permute(a: &mut [usize; 4], k: usize, f: &mut impl FnMut(&[usize; 4])) {
    if k == a.len() {
        f(a);
        return;
    }
    for i in k..a.len() {
        a.swap(k, i);
        permute(a, k + 1, f);
        a.swap(k, i);
    }
}

fn transportation() -> Instance {
    let c = [[2.0, 3.0, 1.0], [5.0, 4.0, 8.0]];
    let (s, t) = ([20.0, 30.0], [10.0, 25.0, 15.0]);
    let mut p = LpProblem::new();
    let mut x = [[0; 3]; 2];
    for i in 0..2 {
        for j in 0..3 {
            x[i][j] = p.add_var(0.0, INF, -c[i][j]);
        }
    }
    for i in 0..2 {
        p.add_constraint((0..3).map(|j| (x[i][j], 1.0)).collect(), Sense::Eq, s[i]);
    }
    for j in 0..3 {
        p.add_constraint((0..2).map(|i| (x[i][j], 1.0)).collect(), Sense::Eq, t[j]);
    }
    // Dual potentials u = (0, 3), v = (2, 1, 1) certify cost 150.
    inst("transportation", p, Expected::Optimal(-150.0))
}

fn max_flow() -> Instance {
    let mut p = LpProblem::new();
    let sa = p.add_var(0.0, 3.0, 1.0);
    let sb = p.add_var(0.0, 2.0, 1.0);
    let ab = p.add_var(0.0, 1.0, 0.0);
    let at = p.add_var(0.0, 2.0, 0.0);
    let bt = p.add_var(0.0, 3.0, 0.0);
    p.add_constraint(vec![(sa, 1.0), (ab, -1.0), (at, -1.0)], Sense::Eq, 0.0);
    p.add_constraint(vec![(sb, 1.0), (ab, 1.0), (bt, -1.0)], Sense::Eq, 0.0);
    inst("max-flow", p, Expected::Optimal(5.0))
}

fn infeasible() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, INF, 1.0);
    let y = p.add_var(0.0, INF, 1.0);
    p.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
    p.add_constraint(vec![(x, 1.0), (y, 2.0)], Sense::Ge, 3.0);
    inst("infeasible", p, Expected::Infeasible)
}

fn unbounded() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, INF, 1.0);
    let y = p.add_var(0.0, INF, 0.0);
    p.add_constraint(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
    inst("unbounded", p, Expected::Unbounded)
}

fn equality() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(-INF, INF, 1.0);
    let y = p.add_var(-INF, INF, 1.0);
    p.add_constraint(vec![(x, 1.0), (y, -1.0)], Sense::Eq, 1.0);
    p.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 5.0);
    inst("equality", p, Expected::Optimal(5.0))
}

fn absolute_value() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(-INF, INF, 0.0);
    let t = p.add_var(-INF, INF, -1.0);
    p.add_constraint(vec![(t, 1.0), (x, -1.0)], Sense::Ge, -2.0);
    p.add_constraint(vec![(t, 1.0), (x, 1.0)], Sense::Ge, 2.0);
    inst("absolute-value", p, Expected::Optimal(0.0))
}

fn chebyshev_fit() -> Instance {
    // Minimize max |a_i − x| over a = {1, 4, 9}: x = 5, value 4.
    let mut p = LpProblem::new();
    let x = p.add_var(-INF, INF, 0.0);
    let t = p.add_var(0.0, INF, -1.0);
    for a in [1.0, 4.0, 9.0] {
        p.add_constraint(vec![(t, 1.0), (x, 1.0)], Sense::Ge, a);
        p.add_constraint(vec![(t, 1.0), (x, -1.0)], Sense::Ge, -a);
    }
    inst("chebyshev-fit", p, Expected::Optimal(-4.0))
}

fn degenerate() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, INF, 1.0);
    let y = p.add_var(0.0, INF, 1.0);
    p.add_constraint(vec![(x, 1.0), (y, 1.0)], Sense::Le, 1.0);
    p.add_constraint(vec![(x, 1.0)], Sense::Le, 1.0);
    p.add_constraint(vec![(y, 1.0)], Sense::Le, 1.0);
    p.add_constraint(vec![(x, 1.0), (y, 2.0)], Sense::Le, 2.0);
    p.add_constraint(vec![(x, 2.0), (y, 1.0)], Sense::Le, 2.0);
    inst("degenerate", p, Expected::Optimal(1.0))
}

fn badly_scaled() -> Instance {
    let mut p = LpProblem::new();
    let x = p.add_var(0.0, INF, 1.0);
    let y = p.add_var(0.0, INF, 1.0);
    p.add_constraint(vec![(x, 1e4), (y, 1.0)], Sense::Le, 1e4);
    p.add_constraint(vec![(x, 1.0), (y, 1e4)], Sense::Le, 1e4);
    inst("badly-scaled", p, Expected::Optimal(2e4 / 10001.0))
}

pub fn known_instances() -> Vec<Instance> {
    vec![
        wyndor(),
        two_rows(),
        beale(),
        klee_minty(3),
        klee_minty(4),
        klee_minty(5),
        klee_minty(6),
        boxed(),
        simplex_face(),
        knapsack(),
        assignment(),
        transportation(),
        max_flow(),
        infeasible(),
        unbounded(),
        equality(),
        absolute_value(),
        chebyshev_fit(),
        degenerate(),
        badly_scaled(),
    ]
}
