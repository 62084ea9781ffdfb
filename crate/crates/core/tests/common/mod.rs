#![allow(dead_code)]

use dp_conic::conic::{ConeKind, ConeSpec, ConicProgram};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random primal-dual feasible program: `b = Ax₀ + s₀`, `c = −Aᵀy₀` with
/// `s₀ ∈ int K`, `y₀ ∈ int K*`, so an optimum exists.
pub fn random_feasible(seed: u64, max_n: usize, max_m: usize, with_soc: bool) -> ConicProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let mut cones = ConeSpec::default();
    let mut m = 0;
    let target = rng.random_range(n.min(max_m)..=max_m);
    while m < target {
        let left = target - m;
        let kinds = if with_soc { 4 } else { 2 };
        let kind = match rng.random_range(0..kinds) {
            0 => ConeKind::Zero,
            1 => ConeKind::NonNeg,
            2 => ConeKind::SecondOrder,
            _ => ConeKind::RotatedSecondOrder,
        };
        let dim = match kind {
            ConeKind::Zero => rng.random_range(1..=left.min(2)),
            ConeKind::NonNeg => rng.random_range(1..=left.min(6)),
            ConeKind::SecondOrder => rng.random_range(1..=left.min(6)),
            ConeKind::RotatedSecondOrder => {
                if left < 2 {
                    continue;
                }
                rng.random_range(2..=left.min(6))
            }
        };
        // keep the equality system small relative to n
        if kind == ConeKind::Zero
            && cones.blocks.iter().filter(|b| b.kind == ConeKind::Zero).map(|b| b.dim).sum::<usize>() + dim > n / 2
        {
            continue;
        }
        cones.push(kind, dim);
        m += dim;
    }
    let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    let mut s0 = DVector::zeros(m);
    let mut y0 = DVector::zeros(m);
    for (off, blk) in cones.iter_offsets() {
        let r = off..off + blk.dim;
        match blk.kind {
            ConeKind::Zero => {
                for i in r {
                    y0[i] = rng.random_range(-1.0..1.0);
                }
            }
            ConeKind::NonNeg => {
                for i in r {
                    s0[i] = rng.random_range(0.1..2.0);
                    y0[i] = rng.random_range(0.1..2.0);
                }
            }
            ConeKind::SecondOrder => {
                for v in [&mut s0, &mut y0] {
                    let mut tail: f64 = 0.0;
                    for i in off + 1..off + blk.dim {
                        v[i] = rng.random_range(-1.0..1.0);
                        tail += v[i] * v[i];
                    }
                    v[off] = tail.sqrt() + rng.random_range(0.1..1.0);
                }
            }
            ConeKind::RotatedSecondOrder => {
                for v in [&mut s0, &mut y0] {
                    let mut tail: f64 = 0.0;
                    for i in off + 2..off + blk.dim {
                        v[i] = rng.random_range(-1.0..1.0);
                        tail += v[i] * v[i];
                    }
                    let u: f64 = rng.random_range(0.2..2.0);
                    v[off] = u;
                    v[off + 1] = tail / (2.0 * u) + rng.random_range(0.1..1.0);
                }
            }
        }
    }
    let b = &a * &x0 + s0;
    let c = -(a.tr_mul(&y0));
    ConicProgram::new(a, b, c, cones)
}
