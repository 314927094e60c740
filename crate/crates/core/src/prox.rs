//! Proximal operators of the penalties used to shape the beam pattern.
//!
//! All operators act on complex vectors and follow the convention
//! `prox_{t·h}(v) = argmin_x ½‖x − v‖² + t·h(x)`.

use num_traits::Zero;

use crate::linalg::{norm1, norm2};
use crate::scalar::{modulus, Real, C};

/// Complex soft-threshold: shrinks each modulus by `t`, keeps the phase.
pub fn prox_l1<T: Real>(v: &[C<T>], t: T) -> Vec<C<T>> {
    v.iter().map(|&x| shrink(x, t)).collect()
}

#[inline]
fn shrink<T: Real>(x: C<T>, t: T) -> C<T> {
    let r = modulus(x);
    if r <= t || r.is_zero() {
        C::zero()
    } else {
        x * ((r - t) / r)
    }
}

/// Euclidean projection onto `{x : ‖x‖₁ ≤ radius}` for complex `x`.
///
/// Moduli are projected onto the scaled simplex by sorted water-filling,
/// phases are kept. Ties at the threshold resolve deterministically through
/// the sort order.
pub fn project_l1_ball<T: Real>(v: &[C<T>], radius: T) -> Vec<C<T>> {
    if radius <= T::zero() {
        return vec![C::zero(); v.len()];
    }
    if norm1(v) <= radius {
        return v.to_vec();
    }
    let mut moduli: Vec<T> = v.iter().map(|&x| modulus(x)).collect();
    moduli.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut threshold = T::zero();
    for (k, &m) in moduli.iter().enumerate() {
        cumulative += m;
        let candidate = (cumulative - radius) / T::lit((k + 1) as f64);
        if m > candidate {
            threshold = candidate;
        } else {
            break;
        }
    }
    prox_l1(v, threshold)
}

/// `prox` of `t·‖·‖∞` via the Moreau decomposition
/// `v − Π_{t·B₁}(v)`.
pub fn prox_linf<T: Real>(v: &[C<T>], t: T) -> Vec<C<T>> {
    if t <= T::zero() {
        return v.to_vec();
    }
    let p = project_l1_ball(v, t);
    v.iter().zip(&p).map(|(&a, &b)| a - b).collect()
}

/// Block soft-threshold. `groups` lists index sets that partition `v`.
pub fn prox_group_l2<T: Real>(v: &[C<T>], groups: &[Vec<usize>], t: T) -> Vec<C<T>> {
    let mut out = vec![C::zero(); v.len()];
    for g in groups {
        let block: Vec<C<T>> = g.iter().map(|&i| v[i]).collect();
        let n = norm2(&block);
        if n > t {
            let s = (n - t) / n;
            for &i in g {
                out[i] = v[i] * s;
            }
        }
    }
    out
}

/// Block soft-threshold of the whole vector as a single group.
pub fn prox_l2<T: Real>(v: &[C<T>], t: T) -> Vec<C<T>> {
    let n = norm2(v);
    if n <= t {
        vec![C::zero(); v.len()]
    } else {
        let s = (n - t) / n;
        v.iter().map(|&x| x * s).collect()
    }
}
