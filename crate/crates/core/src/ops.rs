use crate::error::{param, Result};
use crate::field::{Parity, RadialField};

fn require_even(f: &RadialField, op: &str) -> Result<()> {
    if f.parity() == Parity::Even {
        Ok(())
    } else {
        param(format!("{op} expects an even field"))
    }
}

/// Radial Laplacian in five dimensions, `f'' + 4 f'/r`; at the origin
/// `5 f''(0)`.
pub fn laplacian_radial(f: &RadialField) -> Result<RadialField> {
    require_even(f, "laplacian_radial")?;
    let d1 = f.derivative();
    let d2 = f.second_derivative();
    Ok(laplacian_from(&d1, &d2))
}

pub(crate) fn laplacian_from(d1: &RadialField, d2: &RadialField) -> RadialField {
    let values = d1
        .nodes()
        .iter()
        .zip(d1.values().iter().zip(d2.values()))
        .map(|(&r, (&a, &b))| if r == 0.0 { 5.0 * b } else { b + 4.0 * a / r })
        .collect();
    RadialField::raw(d1.grid(), values, Parity::Even)
}

/// `2 f + r f'`.
pub fn lambda_op(f: &RadialField) -> Result<RadialField> {
    require_even(f, "lambda_op")?;
    let d = f.derivative();
    Ok(RadialField::raw(
        f.grid(),
        f.nodes()
            .iter()
            .zip(f.values().iter().zip(d.values()))
            .map(|(r, (v, dv))| 2.0 * v + r * dv)
            .collect(),
        Parity::Even,
    ))
}

/// `r f'`.
pub fn lambda_prime_op(f: &RadialField) -> Result<RadialField> {
    require_even(f, "lambda_prime_op")?;
    let d = f.derivative();
    Ok(RadialField::raw(
        f.grid(),
        f.nodes().iter().zip(d.values()).map(|(r, dv)| r * dv).collect(),
        Parity::Even,
    ))
}
