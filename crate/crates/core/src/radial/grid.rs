use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Geometric grid `r_i = r_min ρ^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    #[serde(skip)]
    t: Vec<f64>,
}

impl RadialGrid {
    pub const MIN_NODES: usize = 16;

    pub fn geometric(r_min: f64, r_max: f64, count: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "grid needs 0 < r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        if count < Self::MIN_NODES {
            return Err(Error::GridTooSmall(format!("{count} nodes, need {}", Self::MIN_NODES)));
        }
        let h = (r_max / r_min).ln() / (count - 1) as f64;
        let mut nodes: Vec<f64> = (0..count).map(|i| r_min * (h * i as f64).exp()).collect();
        nodes[count - 1] = r_max;
        Ok(Self::from_raw(nodes))
    }

    /// Accepts explicit nodes; they must be positive, increasing and
    /// geometric to rounding.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < Self::MIN_NODES {
            return Err(Error::GridTooSmall(format!(
                "{} nodes, need {}",
                nodes.len(),
                Self::MIN_NODES
            )));
        }
        if nodes[0] <= 0.0 || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("nodes must be positive and increasing".into()));
        }
        let h0 = (nodes[1] / nodes[0]).ln();
        if nodes.windows(2).any(|w| ((w[1] / w[0]).ln() - h0).abs() > 1e-8 * h0) {
            return Err(Error::InvalidParams("nodes are not geometric".into()));
        }
        Ok(Self::from_raw(nodes))
    }

    fn from_raw(nodes: Vec<f64>) -> Self {
        let t = nodes.iter().map(|r| r.ln()).collect();
        Self { nodes, t }
    }

    /// Rebuilds the cached logarithms after deserialisation.
    pub fn restore(self) -> Self {
        Self::from_raw(self.nodes)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_nodes(&self) -> &[f64] {
        &self.t
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Spacing in `t = ln r`.
    pub fn log_step(&self) -> f64 {
        (self.t[self.len() - 1] - self.t[0]) / (self.len() - 1) as f64
    }

    pub fn ratio(&self) -> f64 {
        self.log_step().exp()
    }

    /// Nodes `1/r` in increasing order.
    pub fn reciprocal(&self) -> Self {
        Self::from_raw(self.nodes.iter().rev().map(|r| 1.0 / r).collect())
    }

    /// Contiguous slice `lo..hi` of the nodes.
    pub fn subgrid(&self, lo: usize, hi: usize) -> Result<Self> {
        if hi > self.len() || hi < lo + Self::MIN_NODES {
            return Err(Error::GridTooSmall(format!(
                "slice {lo}..{hi} of {} nodes leaves fewer than {}",
                self.len(),
                Self::MIN_NODES
            )));
        }
        Ok(Self::from_raw(self.nodes[lo..hi].to_vec()))
    }

    pub fn nearest(&self, r: f64) -> usize {
        let t = r.ln();
        let h = self.log_step();
        let i = ((t - self.t[0]) / h).round();
        i.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// Panel index `j` with `t_j <= t < t_{j+1}`, clamped to the grid.
    pub fn panel_of(&self, t: f64) -> usize {
        let n = self.len();
        match self.t.binary_search_by(|x| x.total_cmp(&t)) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        }
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_min() * (1.0 - 1e-14) && r <= self.r_max() * (1.0 + 1e-14)
    }

    /// SHA-256 of the node bit patterns, hex encoded.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for r in &self.nodes {
            h.update(r.to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_endpoints() {
        let g = RadialGrid::geometric(1e-3, 1e3, 513).unwrap();
        assert_eq!(g.r_min(), 1e-3);
        assert_eq!(g.r_max(), 1e3);
        assert!((g.nodes()[256] - 1.0).abs() < 1e-13);
        assert!((g.ratio() - 10f64.powf(6.0 / 512.0)).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_or_bad() {
        assert!(matches!(RadialGrid::geometric(1.0, 2.0, 8), Err(Error::GridTooSmall(_))));
        assert!(RadialGrid::geometric(0.0, 2.0, 32).is_err());
        assert!(RadialGrid::from_nodes((1..40).map(|i| i as f64).collect()).is_err());
    }

    #[test]
    fn reciprocal_is_involution() {
        let g = RadialGrid::geometric(1e-2, 1e4, 64).unwrap();
        let gg = g.reciprocal().reciprocal();
        for (a, b) in g.nodes().iter().zip(gg.nodes()) {
            assert!((a - b).abs() <= 1e-15 * a);
        }
    }

    #[test]
    fn panel_lookup() {
        let g = RadialGrid::geometric(1.0, 100.0, 21).unwrap();
        assert_eq!(g.panel_of(g.log_nodes()[5] + 1e-9), 5);
        assert_eq!(g.panel_of(-10.0), 0);
        assert_eq!(g.panel_of(100.0), 19);
        assert_eq!(g.nearest(10.0), 10);
    }

    #[test]
    fn digest_depends_on_nodes() {
        let a = RadialGrid::geometric(1e-3, 1e3, 64).unwrap();
        let b = RadialGrid::geometric(1e-3, 1e3, 65).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
    }
}
