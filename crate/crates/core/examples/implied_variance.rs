//! Model-free implied volatility index of one option-chain slice.

use ivrvsri::volatility::{implied_variance_index, OptionChainSlice};
use ivrvsri::Error;

fn main() -> ivrvsri::Result<()> {
    // Out-of-the-money quotes around a forward of 101, 30 days to expiry.
    let strikes: Vec<f64> = (80..=120).step_by(5).map(f64::from).collect();
    let quotes: Vec<f64> = strikes.iter().map(|k| 2.3 * (-((k - 101.0) / 6.0).powi(2)).exp() + 0.02).collect();
    let slice = OptionChainSlice::new(30.0 / 365.0, 0.01, 101.0, strikes, quotes)?;
    println!("K0 = {}", slice.strikes[slice.k0]);
    println!("strip term   = {:.6}", slice.strip_term());
    println!("forward term = {:.6}", slice.forward_term());
    println!("index        = {:.3}", implied_variance_index(&slice)?);

    // Two-strike hand check: 100 * sqrt(8 * (5*2/100^2 + 5*1/105^2)).
    let two = OptionChainSlice::new(0.25, 0.0, 100.0, vec![100.0, 105.0], vec![2.0, 1.0])?;
    println!("two-strike index = {:.4}", implied_variance_index(&two)?);

    // Quotes inconsistent with the forward give a negative variance.
    let zero = OptionChainSlice::new(0.25, 0.0, 102.5, vec![100.0, 105.0], vec![0.0, 0.0])?;
    match implied_variance_index(&zero) {
        Err(e @ Error::DegenerateChain { .. }) => println!("degenerate chain: {e}"),
        other => println!("unexpected: {other:?}"),
    }
    Ok(())
}
