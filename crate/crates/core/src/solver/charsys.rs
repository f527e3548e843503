//! Characteristic polynomial of `C(v)` and its derivative in the yaw
//! variable, written over common denominators.

use crate::constraints::{CostPoly, SolverMode};
use crate::poly::Poly;

/// `det(C − λI) = λ⁴ + f₁λ³ + f₂λ² + f₃λ + f₄` with `f_i = g_i / α^{2i}` and
/// `df_i/dv = w_i / α^{2i+1}`, `α = 1 + s²`. In the first-order model `α = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharSystem {
    pub g: [Poly; 4],
    pub w: [Poly; 4],
    pub mode: SolverMode,
    /// Largest coefficient dropped above the nominal degree, relative to the
    /// polynomial's largest coefficient.
    pub truncation: f64,
}

impl CharSystem {
    /// Nominal degrees of `(g₁..g₄, w₁..w₄)`.
    pub fn nominal_degrees(mode: SolverMode) -> ([usize; 4], [usize; 4]) {
        match mode {
            SolverMode::Full => ([4, 8, 12, 16], [4, 8, 12, 16]),
            SolverMode::Linearized => ([2, 4, 6, 8], [1, 3, 5, 7]),
        }
    }

    /// Degree of the highest nonzero stored coefficient of each polynomial.
    pub fn degrees(&self) -> ([Option<usize>; 4], [Option<usize>; 4]) {
        (
            std::array::from_fn(|i| self.g[i].degree(0.0)),
            std::array::from_fn(|i| self.w[i].degree(0.0)),
        )
    }

    /// `f_i(v)` for `i = 1..4`.
    pub fn f(&self, v: f64) -> [f64; 4] {
        let alpha = self.mode.row_denominator(v);
        std::array::from_fn(|i| self.g[i].eval(v) / alpha.powi(2 * (i as i32 + 1)))
    }

    /// `df_i/dv(v)` for `i = 1..4`.
    pub fn df(&self, v: f64) -> [f64; 4] {
        let alpha = self.mode.row_denominator(v);
        std::array::from_fn(|i| self.w[i].eval(v) / alpha.powi(2 * (i as i32 + 1) + 1))
    }
}

type PolyMat = [[Poly; 4]; 4];

fn mat_mul(a: &PolyMat, b: &PolyMat) -> PolyMat {
    std::array::from_fn(|r| {
        std::array::from_fn(|c| (0..4).fold(Poly::zero(), |acc, k| &acc + &(&a[r][k] * &b[k][c])))
    })
}

fn trace(a: &PolyMat) -> Poly {
    (0..4).fold(Poly::zero(), |acc, k| &acc + &a[k][k])
}

fn trace_of_product(a: &PolyMat, b: &PolyMat) -> Poly {
    let mut acc = Poly::zero();
    for r in 0..4 {
        for c in 0..4 {
            acc = &acc + &(&a[r][c] * &b[c][r]);
        }
    }
    acc
}

/// Cofactor expansion along the first row, for any square slice of rows.
fn det(m: &[Vec<Poly>]) -> Poly {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Poly::zero();
    for col in 0..n {
        let minor: Vec<Vec<Poly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != col)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let term = &m[0][col] * &det(&minor);
        acc = if col % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    acc
}

/// Numerators `g_i`, `w_i` of the characteristic coefficients and their
/// derivatives, truncated to the nominal degrees.
pub fn char_polys(cp: &CostPoly) -> CharSystem {
    let n = &cp.entries;
    let n2 = mat_mul(n, n);
    let t1 = trace(n);
    let t2 = trace(&n2);
    let t3 = trace_of_product(&n2, n);
    let rows: Vec<Vec<Poly>> = n.iter().map(|r| r.to_vec()).collect();

    let t1_sq = &t1 * &t1;
    let g_raw = [
        -&t1,
        (&t1_sq - &t2).scale(0.5),
        &(&(&t1_sq * &t1).scale(-1.0 / 6.0) + &(&t1 * &t2).scale(0.5)) - &t3.scale(1.0 / 3.0),
        det(&rows),
    ];

    let w_raw: [Poly; 4] = std::array::from_fn(|i| match cp.mode {
        SolverMode::Full => {
            let alpha = Poly::new(vec![1.0, 0.0, 1.0]);
            let k = 4.0 * (i + 1) as f64;
            &(&g_raw[i].derivative() * &alpha) - &g_raw[i].shift().scale(k)
        }
        SolverMode::Linearized => g_raw[i].derivative(),
    });

    let (gd, wd) = CharSystem::nominal_degrees(cp.mode);
    let mut truncation = 0.0_f64;
    let g = std::array::from_fn(|i| {
        truncation = truncation.max(g_raw[i].tail_relative(gd[i]));
        g_raw[i].with_degree(gd[i])
    });
    let w = std::array::from_fn(|i| {
        truncation = truncation.max(w_raw[i].tail_relative(wd[i]));
        w_raw[i].with_degree(wd[i])
    });
    CharSystem {
        g,
        w,
        mode: cp.mode,
        truncation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{stack_cost, eval_cost, RowPoly};
    use nalgebra::Matrix4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cost(rng: &mut ChaCha8Rng, mode: SolverMode) -> CostPoly {
        let rows: Vec<RowPoly> = (0..9)
            .map(|_| {
                let mut coeffs = [[0.0; 3]; 4];
                for c in coeffs.iter_mut().flatten() {
                    *c = rng.random_range(-1.0..1.0);
                }
                if mode == SolverMode::Linearized {
                    for c in coeffs.iter_mut() {
                        c[2] = 0.0;
                    }
                }
                RowPoly { coeffs }
            })
            .collect();
        stack_cost(&rows, mode).unwrap()
    }

    #[test]
    fn polynomial_determinant_matches_numeric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cp = random_cost(&mut rng, SolverMode::Full);
        let rows: Vec<Vec<Poly>> = cp.entries.iter().map(|r| r.to_vec()).collect();
        let d = det(&rows);
        for _ in 0..20 {
            let s: f64 = rng.random_range(-2.0..2.0);
            let m: Matrix4<f64> = cp.numerator(s);
            let expected = m.determinant();
            assert!((d.eval(s) - expected).abs() <= 1e-10 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn degrees_follow_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for mode in [SolverMode::Full, SolverMode::Linearized] {
            let cs = char_polys(&random_cost(&mut rng, mode));
            let (gd, wd) = CharSystem::nominal_degrees(mode);
            let (g, w) = cs.degrees();
            assert_eq!(g, gd.map(Some));
            assert_eq!(w, wd.map(Some));
            assert!(cs.truncation <= 1e-9, "{}", cs.truncation);
        }
    }

    #[test]
    fn characteristic_identity_and_derivative() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for mode in [SolverMode::Full, SolverMode::Linearized] {
            let cp = random_cost(&mut rng, mode);
            let cs = char_polys(&cp);
            for _ in 0..50 {
                let s: f64 = rng.random_range(-3.0..3.0);
                let lambda: f64 = rng.random_range(-2.0..10.0);
                let c = eval_cost(&cp, s);
                let direct = (c - Matrix4::identity() * lambda).determinant();
                let f = cs.f(s);
                let poly = lambda.powi(4) + f[0] * lambda.powi(3) + f[1] * lambda.powi(2) + f[2] * lambda + f[3];
                let scale = (c.norm() + lambda.abs()).powi(4);
                assert!((direct - poly).abs() <= 1e-9 * scale);

                let h = 1e-6;
                let df = cs.df(s);
                for i in 0..4 {
                    let fd = (cs.f(s + h)[i] - cs.f(s - h)[i]) / (2.0 * h);
                    assert!((df[i] - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "{mode:?} f{} {} {}", i + 1, df[i], fd);
                }
            }
        }
    }
}
