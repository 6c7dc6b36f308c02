#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use qparts::{CMatrix64, Observable64, OutcomeLabel, Tolerance64};

pub fn tol() -> Tolerance64 {
    Tolerance64::default()
}

pub fn c(re: f64) -> Complex<f64> {
    Complex::new(re, 0.0)
}

/// Cyclic Jacobi sweeps on a real symmetric matrix. Returns eigenvalues and
/// column eigenvectors.
pub fn jacobi_symmetric(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = cs * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + cs * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// Real embedding `[[Re, -Im], [Im, Re]]` of a complex matrix.
pub fn real_embedding(h: &CMatrix64) -> DMatrix<f64> {
    let n = h.nrows();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = h[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Eigenvalues of a Hermitian matrix via the doubled real spectrum, ascending.
pub fn oracle_eigenvalues(h: &CMatrix64) -> Vec<f64> {
    let (mut vals, _) = jacobi_symmetric(&real_embedding(h));
    vals.sort_by(f64::total_cmp);
    vals.into_iter().step_by(2).collect()
}

/// Principal square root of a PSD matrix through the real embedding.
pub fn oracle_sqrt(h: &CMatrix64) -> CMatrix64 {
    let n = h.nrows();
    let (vals, v) = jacobi_symmetric(&real_embedding(h));
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|x| x.max(0.0).sqrt())));
    let s = &v * d * v.transpose();
    CMatrix64::from_fn(n, n, |i, j| Complex::new(s[(i, j)], s[(i + n, j)]))
}

/// `tr₂` when `keep_first`, else `tr₁`, by explicit index sums.
pub fn oracle_partial_trace(m: &CMatrix64, n1: usize, n2: usize, keep_first: bool) -> CMatrix64 {
    if keep_first {
        CMatrix64::from_fn(n1, n1, |a, b| (0..n2).map(|k| m[(a * n2 + k, b * n2 + k)]).sum())
    } else {
        CMatrix64::from_fn(n2, n2, |a, b| (0..n1).map(|k| m[(k * n2 + a, k * n2 + b)]).sum())
    }
}

/// `Φ(ρ) = Σ ρ_ij Φ(E_ij)` read off the Choi blocks.
pub fn apply_via_choi(choi: &CMatrix64, d_in: usize, d_out: usize, rho: &CMatrix64) -> CMatrix64 {
    let mut out = CMatrix64::zeros(d_out, d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            out += choi.view((i * d_out, j * d_out), (d_out, d_out)) * rho[(i, j)];
        }
    }
    out
}

/// All set partitions of `0..k` as restricted growth strings, by recursion.
pub fn oracle_partitions(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        let next = prefix.iter().max().map_or(0, |m| m + 1);
        for b in 0..=next {
            prefix.push(b);
            go(prefix, k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), k, &mut out);
    out
}

pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, m - 1);
            out.push(q);
        }
    }
    out
}

/// Whether `child = f(parent)` for some surjection, checked over every set
/// partition of the parent outcomes and every block-to-outcome matching.
pub fn oracle_is_part(child: &Observable64, parent: &Observable64, bound: f64) -> bool {
    let ce: Vec<&CMatrix64> = child.effects().map(|e| e.matrix()).collect();
    let pe: Vec<&CMatrix64> = parent.effects().map(|e| e.matrix()).collect();
    let m = ce.len();
    let n = child.dim();
    for rgs in oracle_partitions(pe.len()) {
        let blocks = rgs.iter().max().map_or(0, |b| b + 1);
        if blocks != m {
            continue;
        }
        let mut sums = vec![CMatrix64::zeros(n, n); m];
        for (j, &b) in rgs.iter().enumerate() {
            sums[b] += pe[j];
        }
        for perm in permutations(m) {
            if perm.iter().enumerate().all(|(b, &x)| (&sums[b] - ce[x]).norm() <= bound) {
                return true;
            }
        }
    }
    false
}

pub fn pair(x: usize, y: usize) -> OutcomeLabel {
    OutcomeLabel::pair(&OutcomeLabel::from(x), &OutcomeLabel::from(y))
}

pub fn obs_distance(a: &Observable64, b: &Observable64) -> f64 {
    assert_eq!(a.len(), b.len(), "outcome counts differ");
    a.iter()
        .map(|(x, e)| (e.matrix() - b.effect(x).expect("shared label").matrix()).norm())
        .fold(0.0, f64::max)
}

/// Prints one acceptance line and asserts the outcome.
pub fn criterion(n: u32, name: &str, ok: bool, detail: String) {
    println!("criterion {n:02} {name}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n:02} {name} failed: {detail}");
}
