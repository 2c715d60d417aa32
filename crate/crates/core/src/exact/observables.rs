use serde::{Deserialize, Serialize};

use super::check_sector;
use crate::model::SectorBasis;
use crate::{Result, StateVector};

/// Diagonal observables of a sector state at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    /// Σ_i ⟨n_{i↑} n_{i↓}⟩
    pub p_updn: f64,
    /// Σ_i ⟨n_{i↑} n_{i+1,↑}⟩
    pub p_upup: f64,
    /// ⟨n_{i↑}⟩ + ⟨n_{i↓}⟩
    pub density: Vec<f64>,
    /// Γ^{↑↓}_{ij} = ⟨n_{i↑} n_{j↓}⟩, row-major L×L.
    pub corr_updn: Vec<Vec<f64>>,
    /// Γ^{↑}_{ij} = ⟨a†_i a†_j a_j a_i⟩; zero on the diagonal.
    pub corr_up: Vec<Vec<f64>>,
}

pub fn measure(psi: &StateVector, basis: &SectorBasis, t: f64) -> Result<ObservableRecord> {
    check_sector(psi, basis)?;
    let l = basis.l();
    let mut rec = ObservableRecord {
        t,
        p_updn: 0.0,
        p_upup: 0.0,
        density: vec![0.0; l],
        corr_updn: vec![vec![0.0; l]; l],
        corr_up: vec![vec![0.0; l]; l],
    };
    let mut up_sites = Vec::with_capacity(basis.n_up);
    let mut dn_sites = Vec::with_capacity(basis.n_dn);
    for (a, s) in psi.amps.iter().zip(basis.states()) {
        let w = a.norm_sqr();
        if w == 0.0 {
            continue;
        }
        rec.p_updn += w * s.doublons() as f64;
        rec.p_upup += w * (s.up & (s.up >> 1)).count_ones() as f64;
        up_sites.clear();
        dn_sites.clear();
        up_sites.extend((0..l).filter(|&i| s.up >> i & 1 == 1));
        dn_sites.extend((0..l).filter(|&i| s.dn >> i & 1 == 1));
        for &i in up_sites.iter().chain(&dn_sites) {
            rec.density[i] += w;
        }
        for &i in &up_sites {
            for &j in &dn_sites {
                rec.corr_updn[i][j] += w;
            }
            for &j in &up_sites {
                if i != j {
                    rec.corr_up[i][j] += w;
                }
            }
        }
    }
    Ok(rec)
}
