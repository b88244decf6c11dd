//! Dirichlet eigenpairs of the discrete Laplacian.
//!
//! Along one axis `-Δ_h` is a symmetric tridiagonal matrix. Each eigenvalue is
//! bracketed by Sturm-sequence bisection, and the eigenvector is then obtained by
//! shifted inverse iteration, deflated against the vectors already found, until the
//! residual `‖Tv - ρv‖` drops below `tol·‖T‖∞`. Rectangles are handled through the
//! Kronecker-sum structure: 2-D modes are products of 1-D modes and are never
//! stored densely.

use crate::error::{Error, Result};

use super::domain::{sup_norm, DomainKind, Grid};
use super::operator::{AxisStencil, DiscreteOperator};

#[derive(Clone, Copy, Debug)]
pub struct EigenSolverConfig {
    /// Residual tolerance relative to the operator's row-sum norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenSolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 50 }
    }
}

/// Eigenpairs along one axis, orthonormal in the weight `h`.
#[derive(Clone, Debug)]
pub struct AxisModes {
    pub lambda: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
enum Basis {
    Interval(AxisModes),
    Rectangle { x: AxisModes, y: AxisModes, pairs: Vec<(usize, usize)> },
}

/// The first `m` Dirichlet eigenpairs in ascending order, orthonormal in the
/// trapezoidal inner product, plus the principal eigenfunction ψ normalised so that
/// Σ wᵢψᵢ = 1.
#[derive(Clone, Debug)]
pub struct EigenData {
    grid: Grid,
    lambda: Vec<f64>,
    basis: Basis,
    mode_sup: Vec<f64>,
    psi: Vec<f64>,
}

/// Solves for the `m` smallest eigenpairs.
pub fn solve_eigenpairs(op: &DiscreteOperator, m: usize) -> Result<EigenData> {
    solve_eigenpairs_with(op, m, EigenSolverConfig::default())
}

pub fn solve_eigenpairs_with(
    op: &DiscreteOperator,
    m: usize,
    cfg: EigenSolverConfig,
) -> Result<EigenData> {
    if m < 2 {
        return Err(Error::Config(format!("need at least two eigenpairs, got {m}")));
    }
    let grid = op.grid().clone();
    if m > grid.len() {
        return Err(Error::Config(format!(
            "requested {m} eigenpairs but the grid has only {} unknowns",
            grid.len()
        )));
    }
    match grid.domain().kind() {
        DomainKind::Interval => {
            let axis = solve_axis(op.stencil(0), grid.spacing(0), m, cfg)?;
            EigenData::from_basis(grid, Basis::Interval(axis))
        }
        DomainKind::Rectangle => {
            let per_axis = m.min(grid.axis_len());
            let x = solve_axis(op.stencil(0), grid.spacing(0), per_axis, cfg)?;
            let y = solve_axis(op.stencil(1), grid.spacing(1), per_axis, cfg)?;
            let mut pairs = sorted_pairs(&x, &y);
            pairs.truncate(m);
            EigenData::from_basis(grid, Basis::Rectangle { x, y, pairs })
        }
    }
}

/// Rectangle basis made of all `mx × my` products of axis modes (sorted by
/// eigenvalue). The heat kernel of such a basis factorises over the axes.
pub fn solve_eigenpairs_product(op: &DiscreteOperator, mx: usize, my: usize) -> Result<EigenData> {
    let grid = op.grid().clone();
    if grid.domain().kind() != DomainKind::Rectangle {
        return Err(Error::Config("product basis needs a rectangle".into()));
    }
    if mx.max(my) > grid.axis_len() || mx.min(my) < 1 || mx * my < 2 {
        return Err(Error::Config(format!("invalid product basis size {mx}x{my}")));
    }
    let cfg = EigenSolverConfig::default();
    let x = solve_axis(op.stencil(0), grid.spacing(0), mx, cfg)?;
    let y = solve_axis(op.stencil(1), grid.spacing(1), my, cfg)?;
    let pairs = sorted_pairs(&x, &y);
    EigenData::from_basis(grid, Basis::Rectangle { x, y, pairs })
}

fn sorted_pairs(x: &AxisModes, y: &AxisModes) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..x.lambda.len())
        .flat_map(|a| (0..y.lambda.len()).map(move |b| (a, b)))
        .collect();
    pairs.sort_by(|p, q| {
        let lp = x.lambda[p.0] + y.lambda[p.1];
        let lq = x.lambda[q.0] + y.lambda[q.1];
        lp.total_cmp(&lq).then(p.cmp(q))
    });
    pairs
}

/// Richardson extrapolation of an O(h²) quantity from grids with h and h/2.
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

impl EigenData {
    fn from_basis(grid: Grid, basis: Basis) -> Result<Self> {
        let lambda: Vec<f64> = match &basis {
            Basis::Interval(a) => a.lambda.clone(),
            Basis::Rectangle { x, y, pairs } => {
                pairs.iter().map(|&(a, b)| x.lambda[a] + y.lambda[b]).collect()
            }
        };
        let mode_sup = match &basis {
            Basis::Interval(a) => a.modes.iter().map(|m| sup_norm(m)).collect(),
            Basis::Rectangle { x, y, pairs } => pairs
                .iter()
                .map(|&(a, b)| sup_norm(&x.modes[a]) * sup_norm(&y.modes[b]))
                .collect(),
        };
        let mut data = Self { grid, lambda, basis, mode_sup, psi: Vec::new() };
        let phi1 = data.mode(0);
        let mass = data.grid.integral(&phi1);
        data.psi = phi1.iter().map(|v| v / mass).collect();
        if data.psi.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Numerical("principal eigenvector is not strictly positive".into()));
        }
        if !(data.lambda[0] < data.lambda[1]) {
            return Err(Error::Numerical("principal eigenvalue is not simple".into()));
        }
        Ok(data)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda[0]
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda[1]
    }

    /// Principal eigenfunction with Σ wᵢψᵢ = 1.
    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// Principal eigenfunction with Σ wᵢψᵢ² = 1.
    pub fn ground_state_l2(&self) -> Vec<f64> {
        self.mode(0)
    }

    /// sup |φ_k| over the grid.
    pub fn mode_sup(&self, k: usize) -> f64 {
        self.mode_sup[k]
    }

    /// Whether the basis contains every product of its axis modes.
    pub fn product_axes(&self) -> Option<(&AxisModes, &AxisModes)> {
        match &self.basis {
            Basis::Rectangle { x, y, pairs } if pairs.len() == x.lambda.len() * y.lambda.len() => {
                Some((x, y))
            }
            _ => None,
        }
    }

    pub fn interval_axis(&self) -> Option<&AxisModes> {
        match &self.basis {
            Basis::Interval(a) => Some(a),
            _ => None,
        }
    }

    /// The k-th orthonormal eigenvector as a grid function.
    pub fn mode(&self, k: usize) -> Vec<f64> {
        match &self.basis {
            Basis::Interval(a) => a.modes[k].clone(),
            Basis::Rectangle { x, y, pairs } => {
                let (a, b) = pairs[k];
                let (mx, my) = (&x.modes[a], &y.modes[b]);
                my.iter().flat_map(|yj| mx.iter().map(move |xi| xi * yj)).collect()
            }
        }
    }

    /// Coefficients ⟨f, φ_k⟩ in the discrete inner product.
    pub fn project(&self, f: &[f64]) -> Vec<f64> {
        let w = self.grid.weight();
        match &self.basis {
            Basis::Interval(a) => a
                .modes
                .iter()
                .map(|m| w * m.iter().zip(f).map(|(p, q)| p * q).sum::<f64>())
                .collect(),
            Basis::Rectangle { x, y, pairs } => {
                let n = self.grid.axis_len();
                let ax = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
                let by = pairs.iter().map(|p| p.1).max().unwrap_or(0) + 1;
                // partial[a][j] = Σ_i φx_a(i) f(i, j)
                let partial: Vec<Vec<f64>> = (0..ax)
                    .map(|a| {
                        (0..n)
                            .map(|j| {
                                let row = &f[j * n..(j + 1) * n];
                                x.modes[a].iter().zip(row).map(|(p, q)| p * q).sum()
                            })
                            .collect()
                    })
                    .collect();
                let full: Vec<Vec<f64>> = partial
                    .iter()
                    .map(|pa| {
                        (0..by)
                            .map(|b| w * y.modes[b].iter().zip(pa).map(|(p, q)| p * q).sum::<f64>())
                            .collect()
                    })
                    .collect();
                pairs.iter().map(|&(a, b)| full[a][b]).collect()
            }
        }
    }

    /// Σ_k c_k φ_k.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        match &self.basis {
            Basis::Interval(a) => {
                for (c, m) in coeffs.iter().zip(&a.modes) {
                    if *c != 0.0 {
                        out.iter_mut().zip(m).for_each(|(o, v)| *o += c * v);
                    }
                }
            }
            Basis::Rectangle { x, y, pairs } => {
                let n = self.grid.axis_len();
                let ax = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
                // u[a][j] = Σ_b c_ab φy_b(j)
                let mut u = vec![vec![0.0; n]; ax];
                for (c, &(a, b)) in coeffs.iter().zip(pairs) {
                    if *c != 0.0 {
                        u[a].iter_mut().zip(&y.modes[b]).for_each(|(o, v)| *o += c * v);
                    }
                }
                for (a, ua) in u.iter().enumerate() {
                    for (j, uaj) in ua.iter().enumerate() {
                        if *uaj != 0.0 {
                            let row = &mut out[j * n..(j + 1) * n];
                            row.iter_mut().zip(&x.modes[a]).for_each(|(o, v)| *o += uaj * v);
                        }
                    }
                }
            }
        }
        out
    }

    /// Discrete Rayleigh quotient ⟨-Δ_h v, v⟩ / ⟨v, v⟩.
    pub fn rayleigh_quotient(op: &DiscreteOperator, v: &[f64]) -> f64 {
        let g = op.grid();
        g.inner(&op.apply_negative(v), v) / g.inner(v, v)
    }
}

/// Number of eigenvalues of the tridiagonal stencil strictly below `x`.
fn sturm_count(s: &AxisStencil, x: f64) -> usize {
    let e2 = s.off * s.off;
    let mut count = 0;
    let mut q = s.diag - x;
    let tiny = f64::MIN_POSITIVE.sqrt() * s.diag.abs().max(1.0);
    for i in 0..s.nodes {
        if i > 0 {
            q = (s.diag - x) - e2 / q;
        }
        if q.abs() < tiny {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The k-th smallest eigenvalue (0-based) by bisection.
fn bisect_eigenvalue(s: &AxisStencil, k: usize) -> f64 {
    let r = 2.0 * s.off.abs();
    let (mut lo, mut hi) = (s.diag - r, s.diag + r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(s, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves `(T - σI) x = b` for the constant tridiagonal `T` by Gaussian elimination
/// with partial pivoting (the shifted matrix is indefinite).
fn shifted_solve(s: &AxisStencil, sigma: f64, b: &[f64]) -> Vec<f64> {
    let n = s.nodes;
    let mut dl = vec![s.off; n];
    let mut d = vec![s.diag - sigma; n];
    let mut du = vec![s.off; n];
    let mut du2 = vec![0.0; n];
    let mut x = b.to_vec();
    let floor = f64::EPSILON * (s.diag.abs() + 2.0 * s.off.abs());
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i].abs() < floor {
                d[i] = floor;
            }
            let l = dl[i] / d[i];
            d[i + 1] -= l * du[i];
            x[i + 1] -= l * x[i];
            dl[i] = l;
        } else {
            // swap rows i and i+1
            let l = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - l * tmp;
            if i + 1 < n - 1 {
                du2[i] = du[i + 1];
                du[i + 1] = -l * du2[i];
            }
            du[i] = tmp;
            x.swap(i, i + 1);
            x[i + 1] -= l * x[i];
            dl[i] = l;
        }
    }
    if d[n - 1].abs() < floor {
        d[n - 1] = floor;
    }
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}

fn tridiag_apply(s: &AxisStencil, v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut acc = s.diag * v[i];
            if i > 0 {
                acc += s.off * v[i - 1];
            }
            if i + 1 < n {
                acc += s.off * v[i + 1];
            }
            acc
        })
        .collect()
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn solve_axis(s: AxisStencil, h: f64, count: usize, cfg: EigenSolverConfig) -> Result<AxisModes> {
    let n = s.nodes;
    let op_norm = s.diag.abs() + 2.0 * s.off.abs();
    let mut lambda = Vec::with_capacity(count);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for k in 0..count {
        let sigma = bisect_eigenvalue(&s, k);
        // deterministic, generic start vector
        let mut v: Vec<f64> =
            (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75 * (k as f64 + 1.0)).sin()).collect();
        normalize(&mut v);
        let mut converged = None;
        for _ in 0..cfg.max_iter {
            let mut y = shifted_solve(&s, sigma, &v);
            for q in &vectors {
                let dot: f64 = y.iter().zip(q).map(|(a, b)| a * b).sum();
                y.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
            normalize(&mut y);
            let ty = tridiag_apply(&s, &y);
            let rho: f64 = ty.iter().zip(&y).map(|(a, b)| a * b).sum();
            let resid = ty.iter().zip(&y).map(|(a, b)| (a - rho * b).powi(2)).sum::<f64>().sqrt();
            v = y;
            if resid <= cfg.tol * op_norm {
                converged = Some(rho);
                break;
            }
        }
        let rho = converged.ok_or_else(|| {
            Error::Numerical(format!("inverse iteration for eigenpair {k} did not converge"))
        })?;
        // sign convention: first significant entry positive
        let vmax = sup_norm(&v);
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * vmax) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        lambda.push(rho);
        vectors.push(v);
    }
    // Euclidean-orthonormal -> orthonormal in the weight h
    let scale = 1.0 / h.sqrt();
    let modes = vectors.into_iter().map(|v| v.into_iter().map(|x| x * scale).collect()).collect();
    Ok(AxisModes { lambda, modes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_laplacian, DomainSpec};
    use std::f64::consts::PI;

    fn interval(n: usize) -> (Grid, DiscreteOperator) {
        let d = DomainSpec::interval(PI).unwrap();
        let g = Grid::new(d.clone(), n).unwrap();
        let op = build_laplacian(&d, &g).unwrap();
        (g, op)
    }

    /// Closed-form eigenvalues of the uniform Dirichlet stencil: (4/h²) sin²(kh/2) on [0, π].
    fn stencil_eigenvalue(n: usize, k: usize) -> f64 {
        let h = PI / n as f64;
        4.0 / (h * h) * (k as f64 * h / 2.0).sin().powi(2)
    }

    #[test]
    fn matches_closed_form_stencil_spectrum() {
        let (_, op) = interval(64);
        let e = solve_eigenpairs(&op, 20).unwrap();
        for k in 0..20 {
            let exact = stencil_eigenvalue(64, k + 1);
            assert!((e.lambdas()[k] - exact).abs() < 1e-9 * exact, "k={k}");
        }
    }

    #[test]
    fn converges_to_continuum_spectrum() {
        let (_, op) = interval(512);
        let e = solve_eigenpairs(&op, 2).unwrap();
        assert!((e.lambda1() - 1.0).abs() < 1e-5);
        assert!((e.lambda2() - 4.0).abs() < 1e-4);
    }

    #[test]
    fn psi_is_normalised_half_sine() {
        let (g, op) = interval(256);
        let e = solve_eigenpairs(&op, 3).unwrap();
        assert!((g.integral(e.psi()) - 1.0).abs() < 1e-12);
        let expected = g.sample(|x| x[0].sin() / 2.0);
        let err = e.psi().iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        assert!(e.psi().iter().all(|v| *v > 0.0));
        let rq = EigenData::rayleigh_quotient(&op, e.psi());
        assert!((rq - e.lambda1()).abs() < 1e-10);
    }

    #[test]
    fn modes_are_orthonormal() {
        let (g, op) = interval(128);
        let e = solve_eigenpairs(&op, 40).unwrap();
        for i in [0usize, 5, 39] {
            for j in [0usize, 5, 17, 39] {
                let ip = g.inner(&e.mode(i), &e.mode(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-10, "({i},{j}) {ip}");
            }
        }
    }

    #[test]
    fn square_principal_pair() {
        let d = DomainSpec::rectangle(PI, PI).unwrap();
        let g = Grid::new(d.clone(), 64).unwrap();
        let op = build_laplacian(&d, &g).unwrap();
        let e = solve_eigenpairs(&op, 6).unwrap();
        assert!((e.lambda1() - 2.0).abs() < 2e-3);
        // (1,2) and (2,1) are degenerate
        assert!((e.lambdas()[1] - e.lambdas()[2]).abs() < 1e-9);
        let expected = g.sample(|p| p[0].sin() * p[1].sin() / 4.0);
        let err = e.psi().iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
        assert!((g.integral(e.psi()) - 1.0).abs() < 1e-12);
        let coeffs = e.project(e.psi());
        let back = e.synthesize(&coeffs);
        let err = back.iter().zip(e.psi()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn richardson_improves_principal_eigenvalue() {
        let l = |n| solve_eigenpairs(&interval(n).1, 2).unwrap().lambda1();
        let (c, f) = (l(64), l(128));
        let extrap = richardson(c, f);
        assert!((extrap - 1.0).abs() * 4.0 <= (f - 1.0).abs());
    }

    #[test]
    fn rejects_too_few_modes() {
        let (_, op) = interval(16);
        assert!(matches!(solve_eigenpairs(&op, 1), Err(Error::Config(_))));
        assert!(matches!(solve_eigenpairs(&op, 16), Err(Error::Config(_))));
    }

    #[test]
    fn reports_non_convergence() {
        let (_, op) = interval(64);
        let cfg = EigenSolverConfig { tol: 0.0, max_iter: 3 };
        assert!(matches!(solve_eigenpairs_with(&op, 2, cfg), Err(Error::Numerical(_))));
    }
}
