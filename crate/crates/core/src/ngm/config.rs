use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Architecture switches and hyperparameters shared by the NGM family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetConfig {
    pub num_layers: usize,
    pub channels: usize,
    /// Inflation inside `exp(alpha * score)` before every Sinkhorn head.
    pub alpha: f64,
    /// Inflation of the synchronized joint matrix (multi-graph head).
    pub alpha_hat: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub sinkhorn_embedding: bool,
    pub edge_embedding: bool,
    pub hyper: bool,
    pub sinkhorn_iters_in_net: usize,
    /// Padding value for rectangular score matrices.
    pub sinkhorn_eps: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            num_layers: 3,
            channels: 16,
            alpha: 20.0,
            alpha_hat: 20.0,
            lambda2: 1.0,
            lambda3: 1.0,
            sinkhorn_embedding: true,
            edge_embedding: false,
            hyper: false,
            sinkhorn_iters_in_net: 10,
            sinkhorn_eps: 1e-3,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 || self.channels == 0 || self.sinkhorn_iters_in_net == 0 {
            return Err(Error::Config("layer, channel and sinkhorn iteration counts must be >= 1".into()));
        }
        if !(self.alpha > 0.0) || !(self.alpha_hat > 0.0) {
            return Err(Error::Config(format!("alpha = {}, alpha_hat = {} must be positive", self.alpha, self.alpha_hat)));
        }
        if !self.lambda2.is_finite() || !self.lambda3.is_finite() {
            return Err(Error::Config("order weights must be finite".into()));
        }
        if !(self.sinkhorn_eps > 0.0) {
            return Err(Error::Config("sinkhorn padding must be positive".into()));
        }
        if self.edge_embedding && self.hyper {
            return Err(Error::Config("edge embedding and hypergraph aggregation are exclusive".into()));
        }
        Ok(())
    }

    pub fn for_variant(v: Variant) -> Self {
        let base = Self::default();
        match v {
            Variant::Ngm | Variant::Nmgm => base,
            Variant::NgmV => Self {
                sinkhorn_embedding: false,
                ..base
            },
            Variant::NgmPlus => Self {
                edge_embedding: true,
                ..base
            },
            Variant::Nhgm => Self { hyper: true, ..base },
        }
    }

    /// Vertex feature width after a layer.
    pub fn layer_output_width(&self) -> usize {
        self.channels + usize::from(self.sinkhorn_embedding)
    }
}

/// Named model variants selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Ngm,
    NgmV,
    NgmPlus,
    Nhgm,
    Nmgm,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Ngm, Variant::NgmV, Variant::NgmPlus, Variant::Nhgm, Variant::Nmgm];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ngm => "ngm",
            Variant::NgmV => "ngm-v",
            Variant::NgmPlus => "ngm+",
            Variant::Nhgm => "nhgm",
            Variant::Nmgm => "nmgm",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s) || (s.eq_ignore_ascii_case("ngm-plus") && *v == Variant::NgmPlus))
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}' (expected ngm, ngm-v, ngm+, nhgm or nmgm)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("gcn".parse::<Variant>().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        for v in Variant::ALL {
            NetConfig::for_variant(v).validate().unwrap();
        }
        let bad = NetConfig {
            alpha: 0.0,
            ..NetConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
