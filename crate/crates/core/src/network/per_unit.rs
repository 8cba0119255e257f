use super::NetworkModel;
use crate::error::ModelError;

/// A physical quantity to convert to or from per-unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    Mw(f64),
    Mvar(f64),
    Kv(f64),
}

fn base_for(model: &NetworkModel, quantity: Quantity, at_bus: &str) -> Result<f64, ModelError> {
    let base = match quantity {
        Quantity::Mw(_) | Quantity::Mvar(_) => model.system_base_mva,
        Quantity::Kv(_) => model
            .buses
            .iter()
            .find(|b| b.id == at_bus)
            .map(|b| b.base_kv)
            .ok_or_else(|| ModelError::UnknownBus(at_bus.to_string()))?,
    };
    if !(base > 0.0) || !base.is_finite() {
        return Err(ModelError::ZeroBase(at_bus.to_string()));
    }
    Ok(base)
}

pub fn to_per_unit(model: &NetworkModel, quantity: Quantity, at_bus: &str) -> Result<f64, ModelError> {
    let base = base_for(model, quantity, at_bus)?;
    let value = match quantity {
        Quantity::Mw(v) | Quantity::Mvar(v) | Quantity::Kv(v) => v,
    };
    Ok(value / base)
}

/// Inverse of [`to_per_unit`]; the variant selects the physical unit of the
/// result and its payload is the per-unit value.
pub fn from_per_unit(model: &NetworkModel, quantity: Quantity, at_bus: &str) -> Result<f64, ModelError> {
    let base = base_for(model, quantity, at_bus)?;
    let value = match quantity {
        Quantity::Mw(v) | Quantity::Mvar(v) | Quantity::Kv(v) => v,
    };
    Ok(value * base)
}
