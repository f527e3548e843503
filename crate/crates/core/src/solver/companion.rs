//! Companion linearization of `B(v) J = 0` in `z = 1/v` and its real
//! eigenvalues.

use nalgebra::{DMatrix, Schur};

use super::pencil::{Mat7, PencilB};
use crate::constraints::SolverMode;
use crate::error::{Error, Result};

/// Largest accepted condition number of `B₀`.
pub const MAX_B0_CONDITION: f64 = 1e12;
/// Columns with all entries below this (relative to the largest entry of the
/// companion matrix, at least 1) are deflated.
pub const DEFLATION_TOL: f64 = 1e-12;
/// An eigenvalue `z` is real when `|Im z| ≤ REAL_TOL · (1 + |Re z|)`.
pub const REAL_TOL: f64 = 1e-6;
/// Eigenvalues with `|Re z|` below this map to `v = ∞` and are dropped.
pub const MIN_ABS_Z: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Companion,
    /// `v = 0` cannot appear as `1/z` and is always added.
    Injected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    /// Value of the yaw variable (`s` or `θ_y`).
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    /// Size of the deflated companion matrix.
    pub companion_size: usize,
}

/// Size of the deflated companion matrix for each yaw model.
pub fn expected_companion_size(mode: SolverMode) -> usize {
    match mode {
        SolverMode::Full => 88,
        SolverMode::Linearized => 40,
    }
}

/// Two-sided diagonal scaling `D₁ B(v) D₂` (Ruiz iteration on `B₀`, powers
/// of two) that leaves `det B(v)` roots unchanged. The rows of `B` mix powers
/// of `β` whose roots can span many decades, which makes the unscaled `B₀`
/// numerically singular.
pub fn equilibrate(pb: &PencilB) -> PencilB {
    let b0 = &pb.coeffs[0];
    let mut r = [1.0f64; 7];
    let mut c = [1.0f64; 7];
    for _ in 0..64 {
        let scaled = Mat7::from_fn(|i, j| b0[(i, j)] * r[i] * c[j]);
        let mut changed = false;
        for i in 0..7 {
            let m = scaled.row(i).amax();
            if m > 0.0 {
                let f = pow2(1.0 / m.sqrt());
                changed |= f != 1.0;
                r[i] *= f;
            }
        }
        let scaled = Mat7::from_fn(|i, j| b0[(i, j)] * r[i] * c[j]);
        for j in 0..7 {
            let m = scaled.column(j).amax();
            if m > 0.0 {
                let f = pow2(1.0 / m.sqrt());
                changed |= f != 1.0;
                c[j] *= f;
            }
        }
        if !changed {
            break;
        }
    }
    PencilB {
        coeffs: pb
            .coeffs
            .iter()
            .map(|b| Mat7::from_fn(|i, j| b[(i, j)] * r[i] * c[j]))
            .collect(),
        mode: pb.mode,
    }
}

fn pow2(x: f64) -> f64 {
    2f64.powi(x.log2().round() as i32)
}

fn b0_inverse(b0: &Mat7) -> Result<Mat7> {
    let sv = b0.singular_values();
    let (max, min) = (sv.max(), sv.min());
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !cond.is_finite() || cond > MAX_B0_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    b0.try_inverse().ok_or(Error::IllConditioned(f64::INFINITY))
}

/// Block companion matrix whose eigenvalues are `z = 1/v`: identity blocks on
/// the block superdiagonal and `[−B₀⁻¹B_D, …, −B₀⁻¹B₁]` as last block row.
pub fn companion_matrix(pb: &PencilB) -> Result<DMatrix<f64>> {
    let d = pb.degree();
    let inv = b0_inverse(&pb.coeffs[0])?;
    let n = 7 * d;
    let mut g = DMatrix::zeros(n, n);
    for k in 0..7 * (d - 1) {
        g[(k, k + 7)] = 1.0;
    }
    for m in 0..d {
        let block = -(inv * pb.coeffs[d - m]);
        g.view_mut((7 * (d - 1), 7 * m), (7, 7)).copy_from(&block);
    }
    Ok(g)
}

/// Repeatedly removes null columns and the rows with the same index. Returns
/// the kept indices.
pub fn deflate(g: &DMatrix<f64>) -> Vec<usize> {
    let tol = DEFLATION_TOL * g.amax().max(1.0);
    let mut keep: Vec<usize> = (0..g.ncols()).collect();
    loop {
        let before = keep.len();
        let null: Vec<usize> = keep
            .iter()
            .copied()
            .filter(|&c| keep.iter().all(|&r| g[(r, c)].abs() < tol))
            .collect();
        keep.retain(|k| !null.contains(k));
        if keep.len() == before {
            return keep;
        }
    }
}

/// Diagonal similarity scaling (powers of two) that evens out row and column
/// norms before the eigenvalue iteration.
fn balance(m: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = m.nrows();
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                c += m[(j, i)].abs();
                r += m[(i, j)].abs();
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let total = c + r;
            let mut f = 1.0;
            while c < r / RADIX {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            while c > r * RADIX {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
    }
}

/// Real roots `v` of `det B(v) = 0`, from the eigenvalues of the deflated
/// companion matrix in `z = 1/v`, plus the injected candidate `v = 0`.
pub fn companion_eigen(pb: &PencilB) -> Result<CandidateSet> {
    let g = companion_matrix(&equilibrate(pb))?;
    let keep = deflate(&g);
    let expected = expected_companion_size(pb.mode);
    if keep.len() != expected {
        return Err(Error::Structural {
            expected,
            got: keep.len(),
        });
    }
    let mut reduced = g.select_rows(&keep).select_columns(&keep);
    balance(&mut reduced);
    let schur = Schur::try_new(reduced, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::Eigen("real Schur iteration did not converge".into()))?;

    let mut candidates: Vec<Candidate> = schur
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= REAL_TOL * (1.0 + z.re.abs()) && z.re.abs() >= MIN_ABS_Z)
        .filter(|z| z.im >= 0.0)
        .map(|z| Candidate {
            value: 1.0 / z.re,
            provenance: Provenance::Companion,
        })
        .filter(|c| c.value.is_finite())
        .collect();
    candidates.push(Candidate {
        value: 0.0,
        provenance: Provenance::Injected,
    });
    Ok(CandidateSet {
        candidates,
        companion_size: keep.len(),
    })
}
