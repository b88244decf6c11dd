use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of cells per axis.
pub const MIN_CELLS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Interval,
    Rectangle,
}

/// An interval `[0, L]` or a rectangle `[0, L1] x [0, L2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    kind: DomainKind,
    lengths: Vec<f64>,
}

impl DomainSpec {
    pub fn interval(length: f64) -> Result<Self> {
        Self::new(DomainKind::Interval, vec![length])
    }

    pub fn rectangle(lx: f64, ly: f64) -> Result<Self> {
        Self::new(DomainKind::Rectangle, vec![lx, ly])
    }

    pub fn new(kind: DomainKind, lengths: Vec<f64>) -> Result<Self> {
        let expected = match kind {
            DomainKind::Interval => 1,
            DomainKind::Rectangle => 2,
        };
        if lengths.len() != expected {
            return Err(Error::Config(format!(
                "{kind:?} needs {expected} length(s), got {}",
                lengths.len()
            )));
        }
        if let Some(l) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Config(format!("domain lengths must be positive, got {l}")));
        }
        Ok(Self { kind, lengths })
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn dimension(&self) -> usize {
        self.lengths.len()
    }

    /// Lebesgue measure |D|.
    pub fn measure(&self) -> f64 {
        self.lengths.iter().product()
    }

    /// Continuum Dirichlet eigenvalue with mode numbers `modes` (1-based), Σ (k_i π / L_i)^2.
    pub fn analytic_eigenvalue(&self, modes: &[usize]) -> f64 {
        self.lengths
            .iter()
            .zip(modes)
            .map(|(l, &k)| (k as f64 * std::f64::consts::PI / l).powi(2))
            .sum()
    }

    /// Principal continuum eigenvalue λ₁.
    pub fn analytic_lambda1(&self) -> f64 {
        self.analytic_eigenvalue(&vec![1; self.dimension()])
    }
}

/// Uniform grid with `cells` subintervals per axis. Grid functions live on the
/// interior nodes only (Dirichlet zeros at the boundary are implied) and are stored
/// with the x index running fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    domain: DomainSpec,
    cells: usize,
    spacing: Vec<f64>,
}

impl Grid {
    pub fn new(domain: DomainSpec, cells: usize) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::Config(format!(
                "grid too coarse: need at least {MIN_CELLS} cells per axis, got {cells}"
            )));
        }
        let spacing = domain.lengths().iter().map(|l| l / cells as f64).collect();
        Ok(Self { domain, cells, spacing })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    /// Interior nodes per axis.
    pub fn axis_len(&self) -> usize {
        self.cells - 1
    }

    pub fn len(&self) -> usize {
        self.axis_len().pow(self.dimension() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Interior coordinates along one axis.
    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing[axis];
        (1..self.cells).map(|i| i as f64 * h).collect()
    }

    /// Coordinates of interior node `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let m = self.axis_len();
        match self.dimension() {
            1 => vec![(idx + 1) as f64 * self.spacing[0]],
            _ => vec![
                (idx % m + 1) as f64 * self.spacing[0],
                (idx / m + 1) as f64 * self.spacing[1],
            ],
        }
    }

    /// Trapezoidal weight of an interior node; the rule is uniform away from the
    /// boundary, and boundary nodes carry no mass for functions vanishing there.
    pub fn weight(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Σ wᵢ over all nodes including the (half/quarter weighted) boundary nodes.
    pub fn total_weight(&self) -> f64 {
        // per axis: (cells - 1) interior nodes of weight h plus two half-weight ends
        self.spacing.iter().map(|h| h * (self.cells as f64 - 1.0) + h).product()
    }

    /// Samples `f` at every interior node.
    pub fn sample<F: Fn(&[f64]) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len()).map(|i| f(&self.point(i))).collect()
    }

    /// Discrete inner product Σ wᵢ fᵢ gᵢ.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weight() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Discrete integral Σ wᵢ fᵢ.
    pub fn integral(&self, f: &[f64]) -> f64 {
        self.weight() * f.iter().sum::<f64>()
    }

    pub fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Config(format!(
                "grid function has {} values, grid has {} interior nodes",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

pub fn sup_norm(f: &[f64]) -> f64 {
    f.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_lengths_and_coarse_grids() {
        assert!(DomainSpec::interval(-1.0).is_err());
        assert!(DomainSpec::new(DomainKind::Rectangle, vec![1.0]).is_err());
        let d = DomainSpec::interval(PI).unwrap();
        assert!(matches!(Grid::new(d.clone(), 4), Err(Error::Config(_))));
        assert!(Grid::new(d, 8).is_ok());
    }

    #[test]
    fn weights_reproduce_measure() {
        let g = Grid::new(DomainSpec::rectangle(2.0, 3.0).unwrap(), 16).unwrap();
        assert!((g.total_weight() - 6.0).abs() < 1e-12);
        assert!(g.weight() > 0.0);
        assert_eq!(g.len(), 15 * 15);
        assert_eq!(g.point(16), vec![2.0 * 2.0 / 16.0, 2.0 * 3.0 / 16.0]);
    }

    #[test]
    fn analytic_spectrum() {
        let d = DomainSpec::rectangle(PI, PI).unwrap();
        assert!((d.analytic_lambda1() - 2.0).abs() < 1e-14);
        assert!((d.analytic_eigenvalue(&[1, 2]) - 5.0).abs() < 1e-14);
    }
}
