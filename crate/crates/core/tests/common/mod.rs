//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's linear algebra or prox code.

#![allow(dead_code)]

use beamshape::linalg::CMat;
use beamshape::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<C64> {
    (0..n)
        .map(|_| c(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
        .collect()
}

/// `X Xᴴ / k + δ I` for a random `n × k` matrix `X`.
pub fn random_hpd(rng: &mut ChaCha8Rng, n: usize, k: usize, delta: f64) -> CMat<f64> {
    let x: Vec<Vec<C64>> = (0..k).map(|_| random_vec(rng, n, 1.0)).collect();
    CMat::from_fn(n, n, |i, j| {
        let mut s = x.iter().map(|col| col[i] * col[j].conj()).sum::<C64>() / k as f64;
        if i == j {
            s += delta;
        }
        s
    })
}

/// Gaussian elimination with partial pivoting on a dense copy.
pub fn solve_dense(a: &CMat<f64>, b: &[C64]) -> Vec<C64> {
    let n = b.len();
    let mut m: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut row: Vec<C64> = (0..n).map(|j| a[(i, j)]).collect();
            row.push(b[i]);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm()))
            .unwrap();
        m.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            for k in col..=n {
                let v = m[col][k];
                m[r][k] -= f * v;
            }
        }
    }
    let mut x = vec![c(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: C64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

/// `R⁻¹a / (aᴴR⁻¹a)`.
pub fn mvdr_oracle(r: &CMat<f64>, a: &[C64]) -> Vec<C64> {
    let ri_a = solve_dense(r, a);
    let denom: C64 = a.iter().zip(&ri_a).map(|(x, y)| x.conj() * y).sum();
    ri_a.iter().map(|v| v / denom).collect()
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn rel_err(x: &[C64], y: &[C64]) -> f64 {
    let d: Vec<C64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    norm(&d) / norm(y)
}

/// `|wᴴa − 1|`.
pub fn distortion(w: &[C64], a: &[C64]) -> f64 {
    (w.iter().zip(a).map(|(x, y)| x.conj() * y).sum::<C64>() - 1.0).norm()
}

/// Minimises a function of `2n` reals by nested grids: an 11-point-per-axis
/// grid around the incumbent, then the spacing shrinks by 4 and the grid is
/// re-centred, until the spacing is below `1e-7`.
pub fn grid_minimize(f: &dyn Fn(&[f64]) -> f64, center: &[f64], half_width: f64) -> Vec<f64> {
    let d = center.len();
    let mut best = center.to_vec();
    let mut best_val = f(&best);
    let mut h = half_width / 5.0;
    let mut idx = vec![0i32; d];
    let mut trial = vec![0.0; d];
    while h > 1e-7 {
        let base = best.clone();
        idx.iter_mut().for_each(|i| *i = -5);
        loop {
            for k in 0..d {
                trial[k] = base[k] + h * idx[k] as f64;
            }
            let v = f(&trial);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&trial);
            }
            // odometer increment over {-5..5}^d
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] <= 5 {
                    break;
                }
                idx[k] = -5;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        h /= 4.0;
    }
    best
}

pub fn to_reals(v: &[C64]) -> Vec<f64> {
    v.iter().flat_map(|x| [x.re, x.im]).collect()
}

pub fn to_complex(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|p| c(p[0], p[1])).collect()
}

/// `argmin_x ½‖x − v‖² + t·h(x)` by brute force, `h` given on complex
/// vectors.
pub fn brute_prox(v: &[C64], t: f64, h: &dyn Fn(&[C64]) -> f64) -> Vec<C64> {
    let obj = |x: &[f64]| {
        let z = to_complex(x);
        0.5 * z.iter().zip(v).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() + t * h(&z)
    };
    let radius = v.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-3);
    to_complex(&grid_minimize(&obj, &vec![0.0; 2 * v.len()], radius))
}

pub fn l1(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).sum()
}

pub fn linf(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn group_l2(x: &[C64], groups: &[Vec<usize>]) -> f64 {
    groups
        .iter()
        .map(|g| g.iter().map(|&i| x[i].norm_sqr()).sum::<f64>().sqrt())
        .sum()
}

/// Central differences of a real function of complex arguments, returned
/// in the `∂f/∂Re + i ∂f/∂Im` (= 2∂f/∂z̄) convention.
pub fn fd_gradient(f: &dyn Fn(&[C64]) -> f64, z: &[C64], h: f64) -> Vec<C64> {
    let mut g = Vec::with_capacity(z.len());
    let mut p = z.to_vec();
    for k in 0..z.len() {
        let mut part = [0.0; 2];
        for (j, dir) in [c(1.0, 0.0), c(0.0, 1.0)].into_iter().enumerate() {
            p[k] = z[k] + dir * h;
            let up = f(&p);
            p[k] = z[k] - dir * h;
            let down = f(&p);
            p[k] = z[k];
            part[j] = (up - down) / (2.0 * h);
        }
        g.push(c(part[0], part[1]));
    }
    g
}

/// Path of the reference run configuration shipped with the repository.
pub fn reference_config_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json")
}

/// Minimiser of a convex function on `[lo, hi]`: dense scan, then golden
/// section inside the bracketing cell.
pub fn minimize_1d(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let n = 2000;
    let step = (hi - lo) / n as f64;
    let best = (0..=n)
        .map(|i| lo + step * i as f64)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap();
    let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-13 * (1.0 + b.abs()) {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) <= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    0.5 * (a + b)
}

fn with_moduli(v: &[C64], r: &[f64]) -> Vec<C64> {
    v.iter()
        .zip(r)
        .map(|(x, &m)| if x.norm() > 0.0 { x / x.norm() * m } else { C64::new(0.0, 0.0) })
        .collect()
}

/// prox of `t‖·‖∞`. Both terms depend on moduli only, so the minimiser keeps
/// the phases of `v` and clips every modulus at a common level `s`.
pub fn linf_prox_oracle(v: &[C64], t: f64) -> Vec<C64> {
    let mods: Vec<f64> = v.iter().map(|x| x.norm()).collect();
    let top = mods.iter().copied().fold(0.0, f64::max);
    let f = |s: f64| {
        0.5 * mods.iter().map(|&m| (m - m.min(s)).powi(2)).sum::<f64>() + t * s
    };
    let s = minimize_1d(&f, 0.0, top);
    with_moduli(v, &mods.iter().map(|&m| m.min(s)).collect::<Vec<_>>())
}

/// Euclidean projection of a two-entry vector onto `{‖x‖₁ ≤ t}`: phases are
/// kept and, outside the ball, the moduli split `t` between the entries.
pub fn l1_ball_oracle(v: &[C64], t: f64) -> Vec<C64> {
    assert_eq!(v.len(), 2);
    let (m1, m2) = (v[0].norm(), v[1].norm());
    if m1 + m2 <= t {
        return v.to_vec();
    }
    let f = |r1: f64| (m1 - r1).powi(2) + (m2 - (t - r1)).powi(2);
    let r1 = minimize_1d(&f, (t - m2).max(0.0), t.min(m1));
    with_moduli(v, &[r1, t - r1])
}

/// prox of `t Σ_g ‖x_g‖₂`. Per group the minimiser is parallel to `v_g`
/// (Cauchy–Schwarz), leaving a 1-D problem in its length.
pub fn group_l2_prox_oracle(v: &[C64], groups: &[Vec<usize>], t: f64) -> Vec<C64> {
    let mut x = v.to_vec();
    for g in groups {
        let len = g.iter().map(|&i| v[i].norm_sqr()).sum::<f64>().sqrt();
        if len == 0.0 {
            continue;
        }
        let s = minimize_1d(&|s| 0.5 * (len - s).powi(2) + t * s, 0.0, len);
        for &i in g {
            x[i] = v[i] * (s / len);
        }
    }
    x
}
