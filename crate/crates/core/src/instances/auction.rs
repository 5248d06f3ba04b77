use rand::Rng;

use crate::milp::{RawMilp, RowSense, Sense};
use crate::rng::SolverRng;

/// `max sum p_b x_b` with each item sold at most once. Bundles grow by a
/// walk over a random item-affinity matrix; a bid's price is the bundle's
/// value perturbed by up to 20%.
pub(super) fn generate(rng: &mut SolverRng, items: usize, bids: usize, add_prob: f64) -> RawMilp {
    let values: Vec<f64> = (0..items).map(|_| rng.gen_range(1.0..100.0)).collect();
    let affinity: Vec<Vec<f64>> = (0..items)
        .map(|_| (0..items).map(|_| rng.gen::<f64>()).collect())
        .collect();

    let mut bundles: Vec<Vec<usize>> = Vec::with_capacity(bids);
    let mut prices = Vec::with_capacity(bids);
    for _ in 0..bids {
        let mut bundle = vec![rng.gen_range(0..items)];
        while bundle.len() < items && rng.gen::<f64>() < add_prob {
            let last = *bundle.last().unwrap();
            let weights: Vec<f64> = (0..items)
                .map(|k| if bundle.contains(&k) { 0.0 } else { affinity[last][k] })
                .collect();
            let total: f64 = weights.iter().sum();
            let mut pick = rng.gen::<f64>() * total;
            let mut chosen = None;
            for (k, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    chosen = Some(k);
                    if pick < *w {
                        break;
                    }
                    pick -= w;
                }
            }
            match chosen {
                Some(k) => bundle.push(k),
                None => break,
            }
        }
        bundle.sort_unstable();
        let value: f64 = bundle.iter().map(|&i| values[i]).sum();
        let noise = rng.gen_range(-0.2..0.2);
        prices.push((value * (1.0 + noise)).round().max(1.0));
        bundles.push(bundle);
    }

    let mut raw = RawMilp::new("cauctions", Sense::Maximize, prices);
    for item in 0..items {
        let coeffs: Vec<(usize, f64)> = bundles
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(&item))
            .map(|(b, _)| (b, 1.0))
            .collect();
        if !coeffs.is_empty() {
            raw = raw.row(coeffs, RowSense::Le, 1.0);
        }
    }
    for b in 0..bids {
        raw = raw.bounds(b, 0.0, 1.0).integer(b);
    }
    raw
}
