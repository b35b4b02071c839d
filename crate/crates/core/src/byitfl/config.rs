use serde::{Deserialize, Serialize};

use crate::params::{ConfigError, ProtocolParams};

/// Parameters accepted only when the resilience bound and all field-size
/// bounds hold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProtocolParams", into = "ProtocolParams")]
pub struct ByitflConfig {
    params: ProtocolParams,
}

impl ByitflConfig {
    pub fn new(params: ProtocolParams) -> Result<Self, ConfigError> {
        params.validate_shape()?;
        let required = params.byitfl_min_users();
        if params.n < required {
            return Err(ConfigError::Resilience {
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

impl TryFrom<ProtocolParams> for ByitflConfig {
    type Error = ConfigError;
    fn try_from(p: ProtocolParams) -> Result<Self, ConfigError> {
        Self::new(p)
    }
}

impl From<ByitflConfig> for ProtocolParams {
    fn from(c: ByitflConfig) -> Self {
        c.params
    }
}
