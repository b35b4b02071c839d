use serde::{Deserialize, Serialize};

use crate::params::{ConfigError, ProtocolParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProtocolParams", into = "ProtocolParams")]
pub struct LobyitflConfig {
    params: ProtocolParams,
}

impl LobyitflConfig {
    pub fn new(params: ProtocolParams) -> Result<Self, ConfigError> {
        params.validate_shape()?;
        if params.m != 1 {
            return Err(ConfigError::Packing { m: params.m });
        }
        let required = params.lobyitfl_min_users();
        if params.n < required {
            return Err(ConfigError::LowCostResilience {
                n: params.n,
                required,
            });
        }
        params.validate_field()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }
}

impl TryFrom<ProtocolParams> for LobyitflConfig {
    type Error = ConfigError;
    fn try_from(p: ProtocolParams) -> Result<Self, ConfigError> {
        Self::new(p)
    }
}

impl From<LobyitflConfig> for ProtocolParams {
    fn from(c: LobyitflConfig) -> Self {
        c.params
    }
}
