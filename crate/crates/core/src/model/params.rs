use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest chain the bitmask representation supports.
pub const MAX_SITES: usize = 64;

/// Couplings of the open extended Hubbard chain
///
/// H = -Σ J_σ (a†_{j,σ} a_{j+1,σ} + h.c.) + U Σ n_{j↑} n_{j↓} + Σ V_{σσ'} n_{j,σ} n_{j+1,σ'}.
///
/// `v_updn` is used for both orderings (↑ on j with ↓ on j+1, and the reverse).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub l: usize,
    pub j_up: f64,
    pub j_dn: f64,
    pub u: f64,
    pub v_upup: f64,
    pub v_dndn: f64,
    pub v_updn: f64,
}

impl ModelParams {
    /// Units of J↑ = 1, J↓ = δ, V↓↓ = V↑↑ = `v` and no inter-component NN term.
    pub fn new(l: usize, delta: f64, u: f64, v: f64) -> Result<Self> {
        let p = ModelParams {
            l,
            j_up: 1.0,
            j_dn: delta,
            u,
            v_upup: v,
            v_dndn: v,
            v_updn: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 1 || self.l > MAX_SITES {
            return Err(Error::Param(format!(
                "L = {} outside supported range 1..={MAX_SITES}",
                self.l
            )));
        }
        let fields = [
            ("j_up", self.j_up),
            ("j_dn", self.j_dn),
            ("u", self.u),
            ("v_upup", self.v_upup),
            ("v_dndn", self.v_dndn),
            ("v_updn", self.v_updn),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::Param(format!("{name} must be finite, got {value}")));
            }
        }
        if self.j_up <= 0.0 {
            return Err(Error::Param(format!("j_up must be positive, got {}", self.j_up)));
        }
        if self.j_dn < 0.0 {
            return Err(Error::Param(format!("j_dn must be non-negative, got {}", self.j_dn)));
        }
        Ok(())
    }

    /// Hopping imbalance J↓ / J↑.
    pub fn delta(&self) -> f64 {
        self.j_dn / self.j_up
    }

    pub fn hopping(&self, spin: Spin) -> f64 {
        match spin {
            Spin::Up => self.j_up,
            Spin::Down => self.j_dn,
        }
    }

    pub fn same_spin_nn(&self, spin: Spin) -> f64 {
        match spin {
            Spin::Up => self.v_upup,
            Spin::Down => self.v_dndn,
        }
    }

    /// Internal index of the central site. Requires odd L.
    pub fn center(&self) -> Result<usize> {
        if self.l % 2 == 0 {
            return Err(Error::Param(format!("L must be odd to have a center site, got {}", self.l)));
        }
        Ok((self.l - 1) / 2)
    }

    /// Maps a center-relative site label (−(L−1)/2 … (L−1)/2) to a 0-based index.
    pub fn site(&self, centered: i64) -> Result<usize> {
        let c = self.center()? as i64;
        let idx = centered + c;
        if idx < 0 || idx >= self.l as i64 {
            return Err(Error::Param(format!(
                "site {centered} lies outside a chain of {} sites",
                self.l
            )));
        }
        Ok(idx as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}
