//! Helpers shared by the integration, property and acceptance targets.
#![allow(dead_code)]

use std::collections::HashMap;

use autoqec::code_search::{
    build_a_matrix, constraint_system, exact_feasible, lp_feasible, search_code, AMatrix, CodePair,
};
use autoqec::engine::{build_correctable_basis, build_engineered_dissipation, AutoQecScheme};
use autoqec::linalg::{group_spectrum, product_state, Ket, Operator, DEFAULT_CLUSTER_TOLERANCE};
use autoqec::metrology::pure_state;
use autoqec::noise::{build_error_structure, NoiseModel};
use autoqec::scalar::{cplx, Cplx};
use autoqec::scenario::Scenario;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_ket(rng: &mut ChaCha8Rng, d: usize) -> Ket<f64> {
    let amps: Vec<Cplx<f64>> = (0..d)
        .map(|_| cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Ket::from_amplitudes(amps).normalized().expect("nonzero ket")
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> Operator<f64> {
    let m = Operator::from_fn(d, d, |_, _| cplx(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m.hermitian_part()
}

/// Random mixture of `rank` pure states with random weights.
pub fn random_density(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> Operator<f64> {
    let mut rho = Operator::zeros(d, d);
    let weights: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for w in weights {
        let k = random_ket(rng, d);
        rho.add_outer(cplx(w / total, 0.0), &k, &k);
    }
    rho
}

/// Everything needed to simulate one (R, c) point of a scenario.
pub struct Parts {
    pub h: Operator<f64>,
    pub model: NoiseModel<f64>,
    pub code: Option<CodePair<f64>>,
    pub scheme: Option<AutoQecScheme<f64>>,
    pub rho0: Operator<f64>,
}

/// Builds H, noise, code and scheme the same way the pipeline does. When no
/// code exists the probe falls back to |+…+⟩ and the scheme is absent.
pub fn parts(s: &Scenario, r: f64, c: usize) -> Parts {
    let h = s.hamiltonian_operator().unwrap();
    let model = s.noise_model().unwrap();
    let errs = build_error_structure(&model, c).unwrap();
    let code = match s.explicit_code(&h).unwrap() {
        Some(code) => Some(code),
        None => {
            let spectrum = group_spectrum(&h, DEFAULT_CLUSTER_TOLERANCE).unwrap();
            search_code(&spectrum, &errs).unwrap().code
        }
    };
    let scheme = code.as_ref().map(|code| {
        let basis = build_correctable_basis(code, &errs, c).unwrap();
        build_engineered_dissipation(&basis, None, r, s.kappa).unwrap()
    });
    let probe = match &code {
        Some(code) => s.probe_state(code).unwrap(),
        None => product_state(&"+".repeat(s.total_qubits())).unwrap(),
    };
    Parts {
        h,
        model,
        code,
        scheme,
        rho0: pure_state(&probe),
    }
}

/// 4t²(⟨ψ|H²|ψ⟩ − ⟨ψ|H|ψ⟩²) computed directly from a state vector.
pub fn variance_qfi(h: &Operator<f64>, psi: &Ket<f64>, t: f64) -> f64 {
    let hpsi = h.apply(psi);
    let mean = psi.inner(&hpsi).re;
    let second = hpsi.norm_sqr();
    4.0 * t * t * (second - mean * mean)
}

/// All points of the probability simplex in `n` coordinates with denominator `res`.
pub fn simplex_grid(n: usize, res: usize) -> Vec<Vec<f64>> {
    fn rec(n: usize, left: usize, res: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if n == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&k| k as f64 / res as f64).collect());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n - 1, left - k, res, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, res, res, &mut Vec::new(), &mut out);
    out
}

/// Image of a block of columns under the (real, imaginary) rows, skipping all-zero coordinates.
fn block_images(a: &AMatrix<f64>, cols: std::ops::Range<usize>, grid: &[Vec<f64>], coords: &[(usize, bool)]) -> Vec<Vec<f64>> {
    let e = a.entries();
    grid.iter()
        .map(|p| {
            coords
                .iter()
                .map(|&(r, im)| {
                    cols.clone()
                        .zip(p)
                        .map(|(c, x)| if im { e[(r, c)].im * x } else { e[(r, c)].re * x })
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Brute force over both simplices at resolution 1/`res`: true when some grid
/// pair has constraint residual below `tol`. Uses bucketing of the first block's
/// images so that the search is linear in each grid size.
pub fn grid_feasible(a: &AMatrix<f64>, res: usize, tol: f64) -> bool {
    let split = a.split();
    let cols = a.cols();
    let e = a.entries();
    let mut coords = Vec::new();
    for r in 0..a.rows() {
        for im in [false, true] {
            if (0..cols).any(|c| (if im { e[(r, c)].im } else { e[(r, c)].re }).abs() > 0.0) {
                coords.push((r, im));
            }
        }
    }
    let gi = simplex_grid(split, res);
    let gj = simplex_grid(cols - split, res);
    let vi = block_images(a, 0..split, &gi, &coords);
    let vj = block_images(a, split..cols, &gj, &coords);
    let key = |v: &[f64]| -> Vec<i64> { v.iter().map(|x| (x / tol).floor() as i64).collect() };
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (idx, v) in vi.iter().enumerate() {
        buckets.entry(key(v)).or_default().push(idx);
    }
    let dims = coords.len();
    for (jdx, w) in vj.iter().enumerate() {
        let target: Vec<f64> = w.iter().map(|x| -x).collect();
        let base = key(&target);
        for offset in 0..3usize.pow(dims as u32) {
            let mut k = base.clone();
            let mut o = offset;
            for slot in k.iter_mut() {
                *slot += (o % 3) as i64 - 1;
                o /= 3;
            }
            if let Some(list) = buckets.get(&k) {
                for &idx in list {
                    if a.constraint_residual(&gi[idx], &gj[jdx]) < tol {
                        return true;
                    }
                }
            }
        }
    }
    false
}

pub struct OracleVerdict {
    pub simplex: bool,
    pub grid: bool,
    /// Exact rational verdict, computed only when simplex and grid disagree.
    pub exact: Option<bool>,
}

impl OracleVerdict {
    pub fn agrees(&self) -> bool {
        match self.exact {
            None => true,
            Some(e) => e == self.simplex,
        }
    }
}

pub fn lp_oracle(a: &AMatrix<f64>) -> OracleVerdict {
    let simplex = lp_feasible(a).is_feasible();
    let grid = grid_feasible(a, 40, 1e-3);
    let exact = (simplex != grid).then(|| {
        let (rows, rhs) = constraint_system(a);
        exact_feasible(&rows, &rhs).is_some()
    });
    OracleVerdict { simplex, grid, exact }
}

fn random_composition(rng: &mut ChaCha8Rng, n: usize, total: usize) -> Vec<usize> {
    let mut cuts: Vec<usize> = (0..n - 1).map(|_| rng.gen_range(0..=total)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

/// Random small A-matrix with at most 8 columns. `planted` instances are built
/// around a grid point of the 1/40 simplices so they are feasible by construction.
pub fn random_lp_instance(rng: &mut ChaCha8Rng, planted: bool) -> AMatrix<f64> {
    let rows = rng.gen_range(1..=3);
    let ni = rng.gen_range(2..=4);
    let nj = rng.gen_range(2..=(8 - ni).min(4));
    let cols = ni + nj;
    let complex = rng.gen_bool(0.3);
    let mut e = Operator::from_fn(rows, cols, |_, _| {
        let re = rng.gen_range(-3..=3) as f64 / 2.0;
        let im = if complex { rng.gen_range(-2..=2) as f64 / 2.0 } else { 0.0 };
        cplx(re, im)
    });
    if !planted && rng.gen_bool(0.5) {
        // A_i p_i and A_j p_j forced onto opposite sides of zero in the first row:
        // feasible only through exact zeros
        for c in 0..cols {
            e[(0, c)].re = rng.gen_range(0..=3) as f64 / 2.0;
        }
    }
    if planted {
        // last weight kept positive so the last column can be solved for
        let mut pj = random_composition(rng, nj, 39);
        pj[nj - 1] += 1;
        let pi: Vec<f64> = random_composition(rng, ni, 40).iter().map(|&k| k as f64 / 40.0).collect();
        let pj: Vec<f64> = pj.iter().map(|&k| k as f64 / 40.0).collect();
        for r in 0..rows {
            let mut s = Cplx::new(0.0, 0.0);
            for c in 0..cols - 1 {
                let p = if c < ni { pi[c] } else { pj[c - ni] };
                s += e[(r, c)] * p;
            }
            e[(r, cols - 1)] = -s / pj[nj - 1];
        }
    }
    AMatrix::new(e, (0, 1), ni).unwrap()
}

/// A-matrix with caller-chosen columns: ⟨x|K|x⟩ for the listed basis states.
pub fn a_matrix_on_basis_states(
    errs: &autoqec::noise::ErrorStructure<f64>,
    block_i: &[usize],
    block_j: &[usize],
) -> AMatrix<f64> {
    let d = errs.dim();
    let products = errs.products();
    let cols = block_i.len() + block_j.len();
    let mut e = Operator::zeros(products.len(), cols);
    for (k, prod) in products.iter().enumerate() {
        for (l, &x) in block_i.iter().chain(block_j).enumerate() {
            let v = prod.op.expectation(&Ket::basis(d, x));
            e[(k, l)] = if l < block_i.len() { v } else { -v };
        }
    }
    AMatrix::new(e, (0, 1), block_i.len()).unwrap()
}

pub fn pair_residual(
    spectrum: &autoqec::linalg::HamiltonianSpectrum<f64>,
    errs: &autoqec::noise::ErrorStructure<f64>,
    code: &CodePair<f64>,
) -> f64 {
    let (i, j) = code.pair.expect("searched code has a pair");
    build_a_matrix(spectrum, errs, i, j)
        .unwrap()
        .constraint_residual(&code.p_i, &code.p_j)
}
