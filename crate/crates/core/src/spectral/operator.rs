use crate::error::{Error, Result};

use super::domain::{DomainSpec, Grid};

/// Second-difference stencil along one axis: `-Δ_h` restricted to the interior
/// nodes is tridiagonal with `2/h²` on the diagonal and `-1/h²` off it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisStencil {
    pub nodes: usize,
    pub diag: f64,
    pub off: f64,
}

impl AxisStencil {
    pub fn new(nodes: usize, h: f64) -> Self {
        Self { nodes, diag: 2.0 / (h * h), off: -1.0 / (h * h) }
    }

    /// y = (-Δ_h) x along a contiguous line of `nodes` values with stride `stride`.
    fn apply_line(&self, x: &[f64], y: &mut [f64], start: usize, stride: usize) {
        let n = self.nodes;
        for i in 0..n {
            let k = start + i * stride;
            let mut acc = self.diag * x[k];
            if i > 0 {
                acc += self.off * x[k - stride];
            }
            if i + 1 < n {
                acc += self.off * x[k + stride];
            }
            y[k] += acc;
        }
    }
}

/// The Dirichlet Laplacian Δ_h (3-point in 1D, 5-point in 2D) on the interior nodes.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    grid: Grid,
    stencils: Vec<AxisStencil>,
}

/// Builds the discrete Dirichlet Laplacian for `grid` on `domain`.
pub fn build_laplacian(domain: &DomainSpec, grid: &Grid) -> Result<DiscreteOperator> {
    if grid.domain() != domain {
        return Err(Error::Config("grid was built for a different domain".into()));
    }
    DiscreteOperator::new(grid.clone())
}

impl DiscreteOperator {
    pub fn new(grid: Grid) -> Result<Self> {
        if grid.cells() < super::domain::MIN_CELLS {
            return Err(Error::Config("grid too coarse".into()));
        }
        let stencils = (0..grid.dimension())
            .map(|a| AxisStencil::new(grid.axis_len(), grid.spacing(a)))
            .collect();
        Ok(Self { grid, stencils })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn stencil(&self, axis: usize) -> AxisStencil {
        self.stencils[axis]
    }

    /// `(-Δ_h) x`, the positive definite form.
    pub fn apply_negative(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        let m = self.grid.axis_len();
        match self.stencils.len() {
            1 => self.stencils[0].apply_line(x, &mut y, 0, 1),
            _ => {
                for j in 0..m {
                    self.stencils[0].apply_line(x, &mut y, j * m, 1);
                }
                for i in 0..m {
                    self.stencils[1].apply_line(x, &mut y, i, m);
                }
            }
        }
        y
    }

    /// Δ_h x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.apply_negative(x);
        y.iter_mut().for_each(|v| *v = -*v);
        y
    }

    /// Solver for `(shift·I - scale·Δ_h) x = b` with `shift > 0`, `scale >= 0`.
    pub fn resolvent(&self, shift: f64, scale: f64) -> Result<Resolvent> {
        if !(shift > 0.0) || !(scale >= 0.0) {
            return Err(Error::Config(format!(
                "resolvent needs shift > 0 and scale >= 0, got {shift}, {scale}"
            )));
        }
        Ok(match self.stencils.len() {
            1 => Resolvent::Tridiagonal(Thomas::new(
                self.grid.axis_len(),
                shift + scale * self.stencils[0].diag,
                scale * self.stencils[0].off,
            )),
            _ => Resolvent::ConjugateGradient { op: self.clone(), shift, scale },
        })
    }
}

/// Precomputed Thomas factorisation of a constant-coefficient symmetric
/// tridiagonal matrix that is strictly diagonally dominant.
#[derive(Clone, Debug)]
pub struct Thomas {
    off: f64,
    inv_pivot: Vec<f64>,
}

impl Thomas {
    fn new(n: usize, diag: f64, off: f64) -> Self {
        let mut inv_pivot = Vec::with_capacity(n);
        let mut prev = 0.0;
        for i in 0..n {
            let p = if i == 0 { diag } else { diag - off * off * prev };
            prev = 1.0 / p;
            inv_pivot.push(prev);
        }
        Self { off, inv_pivot }
    }

    fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = b.len();
        // forward sweep
        x[0] = b[0] * self.inv_pivot[0];
        for i in 1..n {
            x[i] = (b[i] - self.off * x[i - 1]) * self.inv_pivot[i];
        }
        // back substitution
        for i in (0..n - 1).rev() {
            x[i] -= self.off * self.inv_pivot[i] * x[i + 1];
        }
    }
}

#[derive(Clone, Debug)]
pub enum Resolvent {
    Tridiagonal(Thomas),
    ConjugateGradient { op: DiscreteOperator, shift: f64, scale: f64 },
}

const CG_TOL: f64 = 1e-13;
const CG_MAX_ITER: usize = 5_000;

impl Resolvent {
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = vec![0.0; b.len()];
        match self {
            Resolvent::Tridiagonal(t) => {
                t.solve(b, &mut x);
                Ok(x)
            }
            Resolvent::ConjugateGradient { op, shift, scale } => {
                let apply = |v: &[f64]| -> Vec<f64> {
                    let mut y = op.apply_negative(v);
                    for (yi, vi) in y.iter_mut().zip(v) {
                        *yi = shift * vi + scale * *yi;
                    }
                    y
                };
                let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                if bnorm == 0.0 {
                    return Ok(x);
                }
                // warm start from the Jacobi guess
                let diag = shift + scale * op.stencils.iter().map(|s| s.diag).sum::<f64>();
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi = bi / diag);
                let ax = apply(&x);
                let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
                let mut p = r.clone();
                let mut rr: f64 = r.iter().map(|v| v * v).sum();
                for _ in 0..CG_MAX_ITER {
                    if rr.sqrt() <= CG_TOL * bnorm {
                        return Ok(x);
                    }
                    let ap = apply(&p);
                    let alpha = rr / p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
                    for i in 0..x.len() {
                        x[i] += alpha * p[i];
                        r[i] -= alpha * ap[i];
                    }
                    let rr_new: f64 = r.iter().map(|v| v * v).sum();
                    let beta = rr_new / rr;
                    rr = rr_new;
                    for i in 0..p.len() {
                        p[i] = r[i] + beta * p[i];
                    }
                }
                Err(Error::Numerical("conjugate gradient did not converge".into()))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn three_node_stencil() {
        // [0, π] with three interior nodes: h = π/4
        let s = AxisStencil::new(3, PI / 4.0);
        let h2 = (PI / 4.0).powi(2);
        assert!((s.diag - 2.0 / h2).abs() < 1e-12);
        assert!((s.off + 1.0 / h2).abs() < 1e-12);
        let x = [1.0, 0.0, 0.0];
        let mut y = [0.0; 3];
        s.apply_line(&x, &mut y, 0, 1);
        assert_eq!(y, [s.diag, s.off, 0.0]);
    }

    #[test]
    fn sine_is_an_approximate_eigenfunction() {
        let d = DomainSpec::interval(PI).unwrap();
        for n in [32usize, 64] {
            let g = Grid::new(d.clone(), n).unwrap();
            let op = build_laplacian(&d, &g).unwrap();
            let f = g.sample(|x| x[0].sin());
            let lf = op.apply(&f);
            let err = lf.iter().zip(&f).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
            let h = PI / n as f64;
            assert!(err < h * h / 10.0, "n={n} err={err}");
        }
    }

    #[test]
    fn separable_eigenrelation_on_square() {
        let d = DomainSpec::rectangle(PI, PI).unwrap();
        let g = Grid::new(d.clone(), 64).unwrap();
        let op = build_laplacian(&d, &g).unwrap();
        let f = g.sample(|p| p[0].sin() * p[1].sin());
        let lf = op.apply(&f);
        let err = lf.iter().zip(&f).map(|(a, b)| (a + 2.0 * b).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn operator_is_symmetric_negative_definite() {
        let d = DomainSpec::rectangle(1.0, 2.0).unwrap();
        let g = Grid::new(d.clone(), 9).unwrap();
        let op = build_laplacian(&d, &g).unwrap();
        let u: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let v: Vec<f64> = (0..g.len()).map(|i| ((i * 104729) % 11) as f64 - 5.0).collect();
        let lhs = g.inner(&op.apply(&u), &v);
        let rhs = g.inner(&u, &op.apply(&v));
        assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(1.0));
        assert!(g.inner(&op.apply(&u), &u) < 0.0);
    }

    #[test]
    fn resolvents_invert_the_operator() {
        for d in [DomainSpec::interval(2.0).unwrap(), DomainSpec::rectangle(1.0, 1.5).unwrap()] {
            let g = Grid::new(d.clone(), 16).unwrap();
            let op = build_laplacian(&d, &g).unwrap();
            let b: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
            let res = op.resolvent(1.3, 0.01).unwrap();
            let x = res.solve(&b).unwrap();
            let lx = op.apply(&x);
            let err = (0..b.len()).map(|i| (1.3 * x[i] - 0.01 * lx[i] - b[i]).abs()).fold(0.0, f64::max);
            assert!(err < 1e-10, "{err}");
        }
        assert!(DiscreteOperator::new(Grid::new(DomainSpec::interval(1.0).unwrap(), 8).unwrap())
            .unwrap()
            .resolvent(0.0, 1.0)
            .is_err());
    }
}
