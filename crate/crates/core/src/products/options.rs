use serde::{Deserialize, Serialize};

use super::{PiecewiseLinear, ProductError, SofteningPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// European option; strike as a ratio of the reference spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VanillaOption {
    pub kind: OptionKind,
    pub strike: f64,
    pub expiry: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub softening: Option<SofteningPolicy>,
}

impl VanillaOption {
    pub fn new(kind: OptionKind, strike: f64, expiry: f64) -> Result<Self, ProductError> {
        let v = Self {
            kind,
            strike,
            expiry,
            softening: None,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn put(strike: f64, expiry: f64) -> Result<Self, ProductError> {
        Self::new(OptionKind::Put, strike, expiry)
    }

    pub fn call(strike: f64, expiry: f64) -> Result<Self, ProductError> {
        Self::new(OptionKind::Call, strike, expiry)
    }

    pub fn validate(&self) -> Result<(), ProductError> {
        positive("strike", self.strike)?;
        positive("expiry", self.expiry)?;
        self.softening.map_or(Ok(()), |p| p.validate())
    }

    pub fn profile(&self) -> PiecewiseLinear {
        match self.kind {
            OptionKind::Call => PiecewiseLinear::call(self.strike),
            OptionKind::Put => PiecewiseLinear::put(self.strike),
        }
    }
}

/// Cash-or-nothing option paying `leverage`. The put pays strictly below the
/// strike, the call at or above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DigitalOption {
    pub kind: OptionKind,
    pub strike: f64,
    pub expiry: f64,
    pub leverage: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub softening: Option<SofteningPolicy>,
}

impl DigitalOption {
    pub fn new(kind: OptionKind, strike: f64, expiry: f64, leverage: f64) -> Result<Self, ProductError> {
        let d = Self {
            kind,
            strike,
            expiry,
            leverage,
            softening: None,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn put(strike: f64, expiry: f64, leverage: f64) -> Result<Self, ProductError> {
        Self::new(OptionKind::Put, strike, expiry, leverage)
    }

    pub fn with_softening(mut self, policy: SofteningPolicy) -> Self {
        self.softening = Some(policy);
        self
    }

    pub fn validate(&self) -> Result<(), ProductError> {
        positive("strike", self.strike)?;
        positive("expiry", self.expiry)?;
        positive("leverage", self.leverage)?;
        self.softening.map_or(Ok(()), |p| p.validate())
    }

    pub fn profile(&self) -> PiecewiseLinear {
        match self.kind {
            OptionKind::Call => PiecewiseLinear::digital_call(self.strike, self.leverage),
            OptionKind::Put => PiecewiseLinear::digital_put(self.strike, self.leverage),
        }
    }
}

/// Pays `return − strike` at expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForwardContract {
    pub strike: f64,
    pub expiry: f64,
}

impl ForwardContract {
    pub fn new(strike: f64, expiry: f64) -> Result<Self, ProductError> {
        let f = Self { strike, expiry };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), ProductError> {
        positive("expiry", self.expiry)?;
        if !self.strike.is_finite() {
            return Err(ProductError::Invalid("strike must be finite".into()));
        }
        Ok(())
    }

    pub fn profile(&self) -> PiecewiseLinear {
        PiecewiseLinear::new(
            vec![super::Knot {
                x: self.strike,
                left: 0.0,
                right: 0.0,
            }],
            1.0,
            1.0,
        )
        .expect("single knot")
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<(), ProductError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(ProductError::Invalid(format!("{name} must be > 0, got {v}")))
    }
}
