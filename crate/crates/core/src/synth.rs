//! Deterministic synthetic meshes with known close features.
//!
//! Geometry is built on integer or dyadic coordinates so that the planted
//! gaps are exact multiples of d. Closed tetrahedra sit in cells six units
//! apart, far beyond any separation threshold of interest, so the only close
//! pairs are the planted ones.

use std::str::FromStr;

use num_bigint::{BigInt, RandBigInt};
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geom::{format_rational, rat_from_f64, rat_from_i64, ExactPoint, Rational};
use crate::mesh::{build_mesh, Mesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    PlantedPairs,
    ParallelSheets,
    SliverBand,
    TetraSoup,
    HighPrecision,
}

impl SynthKind {
    pub fn name(self) -> &'static str {
        match self {
            SynthKind::PlantedPairs => "planted-pairs",
            SynthKind::ParallelSheets => "parallel-sheets",
            SynthKind::SliverBand => "sliver-band",
            SynthKind::TetraSoup => "tetra-soup",
            SynthKind::HighPrecision => "high-precision",
        }
    }
}

impl FromStr for SynthKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "planted-pairs" => SynthKind::PlantedPairs,
            "parallel-sheets" => SynthKind::ParallelSheets,
            "sliver-band" => SynthKind::SliverBand,
            "tetra-soup" => SynthKind::TetraSoup,
            "high-precision" => SynthKind::HighPrecision,
            _ => return Err(format!("unknown kind `{s}`")),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SynthSpec {
    pub kind: SynthKind,
    /// Approximate triangle count.
    pub size: usize,
    pub d: Rational,
    pub seed: u64,
    /// Planted close pairs, or planted edits for sliver-band.
    pub k: usize,
    /// Sheet gap in units of d for parallel-sheets.
    pub gap: Rational,
    /// Denominator size for high-precision perturbations.
    pub bits: u64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, size: usize, d: Rational, seed: u64) -> Self {
        Self {
            kind,
            size,
            d,
            seed,
            k: 10,
            gap: Rational::new(1.into(), 2.into()),
            bits: 600,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PlantedPair {
    /// `"vt"` or `"ee"`.
    pub kind: &'static str,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    /// Exact distance before any perturbation.
    pub dist: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GroundTruth {
    pub kind: String,
    pub seed: u64,
    pub d: String,
    pub planted: Vec<PlantedPair>,
    /// Edges split at a point within d of an endpoint.
    pub short_edges: Vec<[usize; 2]>,
    /// Triangles whose apex lies within d of the opposite edge.
    pub slivers: Vec<[usize; 3]>,
}

#[derive(Default)]
struct Builder {
    pts: Vec<ExactPoint>,
    tris: Vec<[usize; 3]>,
}

impl Builder {
    fn add(&mut self, p: ExactPoint) -> usize {
        self.pts.push(p);
        self.pts.len() - 1
    }

    /// Closed tetrahedron with outward faces.
    fn tetra(&mut self, v: [ExactPoint; 4]) -> [usize; 4] {
        let ids = v.map(|p| self.add(p));
        let p = |i: usize| &self.pts[ids[i]];
        let vol = p(1).sub(p(0)).cross(&p(2).sub(p(0))).dot(&p(3).sub(p(0)));
        assert!(!vol.is_zero(), "flat tetrahedron");
        let [a, b, c, d] = if vol.is_positive() { [ids[0], ids[2], ids[1], ids[3]] } else { ids };
        // With (a, b, c) clockwise seen from d, these four faces point out.
        self.tris.extend([[a, b, c], [a, d, b], [b, d, c], [c, d, a]]);
        ids
    }
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Random dyadic in [lo, hi] with 1/1024 resolution.
fn dyadic(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Rational {
    let k = rng.gen_range((lo * 1024.0) as i64..=(hi * 1024.0) as i64);
    q(k, 1024)
}

/// Rigid placement: an axis permutation with sign flips, then a shift.
struct Placement {
    perm: [usize; 3],
    sign: [bool; 3],
    shift: ExactPoint,
}

impl Placement {
    fn random(rng: &mut ChaCha8Rng, shift: ExactPoint) -> Self {
        let mut perm = [0, 1, 2];
        perm.shuffle(rng);
        Self {
            perm,
            sign: [rng.gen(), rng.gen(), rng.gen()],
            shift,
        }
    }

    fn at(&self, x: &Rational, y: &Rational, z: &Rational) -> ExactPoint {
        let c = [x, y, z];
        let mut o: [Rational; 3] = Default::default();
        for i in 0..3 {
            let v = c[self.perm[i]].clone();
            o[i] = if self.sign[i] { -v } else { v };
        }
        let [a, b, cc] = o;
        ExactPoint::new(a, b, cc).add(&self.shift)
    }

    fn ints(&self, x: i64, y: i64, z: i64) -> ExactPoint {
        self.at(&rat_from_i64(x), &rat_from_i64(y), &rat_from_i64(z))
    }
}

/// Origins of `n` cells on a cubic lattice with spacing 6.
fn cell_origins(n: usize) -> Vec<ExactPoint> {
    let side = (1..).find(|s: &usize| s * s * s >= n).unwrap();
    (0..n)
        .map(|i| {
            let (x, y, z) = (i % side, (i / side) % side, i / (side * side));
            ExactPoint::from_ints(6 * x as i64, 6 * y as i64, 6 * z as i64)
        })
        .collect()
}

/// Gap in [1/4, 15/16]·d on a 1/64 grid.
fn planted_gap(rng: &mut ChaCha8Rng, d: &Rational) -> Rational {
    q(rng.gen_range(16..=60), 64) * d
}

/// A vertex of one tetrahedron hovering over the face of another.
fn plant_vt(b: &mut Builder, pl: &Placement, gap: &Rational, rng: &mut ChaCha8Rng) -> PlantedPair {
    let lower = b.tetra([pl.ints(0, 0, 0), pl.ints(2, 0, 0), pl.ints(0, 2, 0), pl.at(&q(1, 2), &q(1, 2), &q(-1, 1))]);
    let (px, py) = (dyadic(rng, 0.3, 0.7), dyadic(rng, 0.3, 0.7));
    let one = Rational::one();
    let upper = b.tetra([
        pl.at(&px, &py, gap),
        pl.at(&(&px - q(7, 10)), &(&py - q(1, 2)), &one),
        pl.at(&(&px + q(4, 5)), &(&py - q(2, 5)), &one),
        pl.at(&px, &(&py + q(9, 10)), &q(6, 5)),
    ]);
    PlantedPair {
        kind: "vt",
        a: vec![upper[0]],
        b: lower[..3].to_vec(),
        dist: format_rational(gap),
    }
}

/// Two tetrahedra whose edges cross at the gap.
fn plant_ee(b: &mut Builder, pl: &Placement, gap: &Rational, rng: &mut ChaCha8Rng) -> PlantedPair {
    let lower = b.tetra([pl.ints(0, 1, 0), pl.ints(2, 1, 0), pl.ints(1, 0, -1), pl.ints(1, 2, -1)]);
    let qx = dyadic(rng, 0.6, 1.4);
    let (zero, one, two) = (Rational::zero(), Rational::one(), rat_from_i64(2));
    let upper = b.tetra([
        pl.at(&qx, &zero, gap),
        pl.at(&qx, &two, gap),
        pl.at(&(&qx - &one), &one, &one),
        pl.at(&(&qx + &one), &one, &one),
    ]);
    PlantedPair {
        kind: "ee",
        a: lower[..2].to_vec(),
        b: upper[..2].to_vec(),
        dist: format_rational(gap),
    }
}

fn filler(b: &mut Builder, pl: &Placement, rng: &mut ChaCha8Rng, jitter: f64) {
    loop {
        let mut j = || dyadic(rng, -jitter, jitter);
        let base = [(0, 0, 0), (2, 0, 0), (0, 2, 0), (0, 0, 2)];
        let v = base.map(|(x, y, z)| {
            pl.at(&(rat_from_i64(x) + j()), &(rat_from_i64(y) + j()), &(rat_from_i64(z) + j()))
        });
        let vol = v[1].sub(&v[0]).cross(&v[2].sub(&v[0])).dot(&v[3].sub(&v[0]));
        if !vol.is_zero() {
            b.tetra(v);
            return;
        }
    }
}

fn tetra_cells(spec: &SynthSpec, rng: &mut ChaCha8Rng, jitter: f64, gt: &mut GroundTruth) -> Builder {
    let cells = (spec.size / 4).max(2 * spec.k).max(1);
    let cells = cells - spec.k;
    let mut order: Vec<usize> = (0..cells).collect();
    order.shuffle(rng);
    let origins = cell_origins(cells);
    let mut b = Builder::default();
    for (slot, &cell) in order.iter().enumerate() {
        let pl = Placement::random(rng, origins[cell].clone());
        if slot < spec.k {
            let gap = planted_gap(rng, &spec.d);
            let p = if rng.gen() {
                plant_vt(&mut b, &pl, &gap, rng)
            } else {
                plant_ee(&mut b, &pl, &gap, rng)
            };
            gt.planted.push(p);
        } else {
            filler(&mut b, &pl, rng, jitter);
        }
    }
    b
}

/// Two identical n×n grids, one `gap·d` above the other.
fn parallel_sheets(spec: &SynthSpec) -> Builder {
    let n = ((spec.size as f64 / 4.0).sqrt().round() as usize).max(1);
    let h = &spec.gap * &spec.d;
    let mut b = Builder::default();
    for z in [Rational::zero(), h] {
        let base = b.pts.len();
        for j in 0..=n {
            for i in 0..=n {
                b.add(ExactPoint::new(rat_from_i64(i as i64), rat_from_i64(j as i64), z.clone()));
            }
        }
        let id = |i: usize, j: usize| base + j * (n + 1) + i;
        for j in 0..n {
            for i in 0..n {
                b.tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                b.tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }
    b
}

/// Surface of the cube [0, n]³ on the unit lattice; `vid` maps lattice
/// points to vertex ids and `cells` lists each face cell's triangle pair.
struct CubeGrid {
    b: Builder,
    cells: Vec<([usize; 2], [i64; 3], [i64; 3], [i64; 3])>,
}

fn cube_grid(n: i64) -> CubeGrid {
    let mut b = Builder::default();
    let mut vid = std::collections::HashMap::new();
    let mut cells = Vec::new();
    let mut get = |b: &mut Builder, p: [i64; 3]| *vid.entry(p).or_insert_with(|| b.add(ExactPoint::from_ints(p[0], p[1], p[2])));
    for axis in 0..3 {
        for side in [0, n] {
            let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
            // (u, v, axis) is right-handed, so (e_u, e_v) order faces +axis.
            let outward = side == n;
            for j in 0..n {
                for i in 0..n {
                    let lat = |di: i64, dj: i64| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u] = i + di;
                        p[v] = j + dj;
                        p
                    };
                    let (p00, p10, p11, p01) = (lat(0, 0), lat(1, 0), lat(1, 1), lat(0, 1));
                    let (a, bb, c, d) = (get(&mut b, p00), get(&mut b, p10), get(&mut b, p11), get(&mut b, p01));
                    let t0 = b.tris.len();
                    if outward {
                        b.tris.push([a, bb, c]);
                        b.tris.push([a, c, d]);
                    } else {
                        b.tris.push([a, c, bb]);
                        b.tris.push([a, d, c]);
                    }
                    let mut eu = [0; 3];
                    eu[u] = 1;
                    let mut ev = [0; 3];
                    ev[v] = 1;
                    cells.push(([t0, t0 + 1], p00, eu, ev));
                }
            }
        }
    }
    CubeGrid { b, cells }
}

/// Replaces edge (s, t) by (s, p), (p, t) in every triangle using it.
fn split_edge(b: &mut Builder, s: usize, t: usize, p: usize) {
    let mut add = Vec::new();
    for tri in b.tris.iter_mut() {
        for r in 0..3 {
            let (x, y, z) = (tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]);
            if (x, y) == (s, t) || (x, y) == (t, s) {
                *tri = [x, p, z];
                add.push([p, y, z]);
                break;
            }
        }
    }
    b.tris.extend(add);
}

/// Subdivided cube carrying planted short edges and slivers in cells far
/// from each other.
fn sliver_band(spec: &SynthSpec, rng: &mut ChaCha8Rng, gt: &mut GroundTruth) -> Builder {
    let n = ((spec.size as f64 / 12.0).sqrt().round() as i64).max(4);
    let CubeGrid { mut b, cells } = cube_grid(n);
    // Cells with both lattice indices ≡ 1 (mod 3), away from cube edges,
    // touch no other such cell.
    let mut free: Vec<usize> = cells
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            let (p, eu, ev) = (c.1, c.2, c.3);
            let i = p.iter().zip(eu).map(|(a, b)| a * b).sum::<i64>();
            let j = p.iter().zip(ev).map(|(a, b)| a * b).sum::<i64>();
            i % 3 == 1 && j % 3 == 1 && i + 1 < n && j + 1 < n
        })
        .map(|(k, _)| k)
        .collect();
    free.shuffle(rng);
    let d = &spec.d;
    let at = |p: [i64; 3], eu: [i64; 3], ev: [i64; 3], s: &Rational, t: &Rational| {
        let c = |k: usize| rat_from_i64(p[k]) + s * rat_from_i64(eu[k]) + t * rat_from_i64(ev[k]);
        ExactPoint::new(c(0), c(1), c(2))
    };
    let lattice = |b: &Builder, p: [i64; 3]| {
        let e = ExactPoint::from_ints(p[0], p[1], p[2]);
        b.pts.iter().position(|x| *x == e).unwrap()
    };
    for (slot, &k) in free.iter().take(spec.k).enumerate() {
        let (_, p, eu, ev) = cells[k];
        let a = lattice(&b, p);
        let e = lattice(&b, [p[0] + eu[0], p[1] + eu[1], p[2] + eu[2]]);
        let frac = q(rng.gen_range(8..=56), 64) * d;
        if slot % 2 == 0 {
            let m = b.add(at(p, eu, ev, &frac, &Rational::zero()));
            split_edge(&mut b, a, e, m);
            gt.short_edges.push([a, m]);
        } else {
            // Apex at height frac over the midpoint of the cell's u edge.
            let apex = b.add(at(p, eu, ev, &q(1, 2), &frac));
            let t = cells[k].0[0];
            let [x, y, z] = b.tris[t];
            b.tris[t] = [x, y, apex];
            b.tris.push([y, z, apex]);
            b.tris.push([z, x, apex]);
            gt.slivers.push([a, e, apex]);
        }
    }
    b
}

/// Adds a rational of about 2^-40 with a `bits`-bit odd denominator to every
/// coordinate.
fn perturb(b: &mut Builder, rng: &mut ChaCha8Rng, bits: u64) {
    let den: BigInt = (BigInt::one() << bits) + (rng.gen_bigint(bits - 2).abs() << 1) + 1;
    let span: BigInt = BigInt::one() << (bits - 40);
    for p in b.pts.iter_mut() {
        let mut c = || Rational::new(rng.gen_bigint_range(&-&span, &span), den.clone());
        *p = p.add(&ExactPoint::new(c(), c(), c()));
    }
}

pub fn generate_synthetic(spec: &SynthSpec) -> (Mesh, GroundTruth) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut gt = GroundTruth {
        kind: spec.kind.name().to_string(),
        seed: spec.seed,
        d: format_rational(&spec.d),
        ..Default::default()
    };
    let b = match spec.kind {
        SynthKind::PlantedPairs => tetra_cells(spec, &mut rng, 0.0, &mut gt),
        SynthKind::TetraSoup => tetra_cells(spec, &mut rng, 0.3, &mut gt),
        SynthKind::HighPrecision => {
            let mut b = tetra_cells(spec, &mut rng, 0.1, &mut gt);
            perturb(&mut b, &mut rng, spec.bits);
            b
        }
        SynthKind::ParallelSheets => parallel_sheets(spec),
        SynthKind::SliverBand => sliver_band(spec, &mut rng, &mut gt),
    };
    let m = build_mesh(b.pts, b.tris).expect("synthetic mesh is valid");
    (m, gt)
}

/// Convenience for tests: d given as an `f64` literal such as `1e-6`, read
/// as its shortest decimal.
pub fn decimal_d(d: f64) -> Rational {
    crate::geom::parse_rational(&format!("{d:e}")).unwrap_or_else(|| rat_from_f64(d))
}
