//! Scaling measurements for the mixture simulator: wall time vs data-qubit
//! count at fixed ancilla size, and wall time vs live term count at fixed
//! width. Used by the CLI `bench` command and asserted (with generous
//! margins) by the acceptance suite.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dense::{DensityMatrix, StateVector};
use crate::error::Result;
use crate::gadget::t_magic_state;
use crate::mixture::{run_sample, StabMixture};
use crate::random::random_clifford_circuit;
use crate::tableau::FrameLabel;

#[derive(Debug, Clone, Serialize)]
pub struct SizePoint {
    pub data_qubits: usize,
    pub depth: usize,
    pub term_count: usize,
    pub millis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TermPoint {
    pub term_count: usize,
    pub millis: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    /// q = 1 fixed, n swept; depth proportional to n.
    pub size_points: Vec<SizePoint>,
    /// Least-squares slope of log(time) vs log(n).
    pub loglog_slope: f64,
    /// n fixed, term count swept via the ancilla state.
    pub term_points: Vec<TermPoint>,
    /// Max relative deviation of the term points from the least-squares
    /// line through them.
    pub term_linearity_max_rel_dev: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn time_runs(circuit: &crate::circuit::Circuit, initial: &StabMixture, seed: u64, repeats: usize) -> Result<f64> {
    let mut times = Vec::with_capacity(repeats);
    for r in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9e3779b97f4a7c15));
        let t0 = Instant::now();
        run_sample(circuit, initial, &mut rng)?;
        times.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median(times))
}

/// Ancilla states by stabilizer-frame term count.
fn ancilla_with_terms(terms: usize) -> DensityMatrix {
    match terms {
        1 => StateVector::zero_state(1).density(),
        2 => DensityMatrix::maximally_mixed(1),
        4 => StateVector::frame_state(FrameLabel::XPlus).density(),
        _ => t_magic_state().density(),
    }
}

/// Run the scaling benchmark: `sizes` data-qubit counts with one ancilla
/// qubit (depth = 4n gates, 4 measurements), plus a term-count sweep
/// {1, 2, 4, 6} at fixed n.
pub fn scaling_bench(sizes: &[usize], term_sweep_qubits: usize, seed: u64, repeats: usize) -> Result<ScalingReport> {
    let ancilla = t_magic_state().density();
    let mut size_points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
        let circuit = random_clifford_circuit(n + 1, 4 * n, 4, &mut rng);
        let initial = StabMixture::init(&circuit, &ancilla, &[n])?;
        let millis = time_runs(&circuit, &initial, seed, repeats)?;
        size_points.push(SizePoint { data_qubits: n, depth: 4 * n, term_count: initial.term_count(), millis });
    }

    let loglog_slope = {
        let pts: Vec<(f64, f64)> =
            size_points.iter().map(|p| ((p.data_qubits as f64).ln(), p.millis.max(1e-6).ln())).collect();
        least_squares_slope(&pts)
    };

    let n = term_sweep_qubits;
    let mut term_points = Vec::new();
    for terms in [1usize, 2, 4, 6] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
        let circuit = random_clifford_circuit(n + 1, 4 * n, 4, &mut rng);
        let ancilla = ancilla_with_terms(terms);
        let initial = StabMixture::init(&circuit, &ancilla, &[n])?;
        let millis = time_runs(&circuit, &initial, seed ^ terms as u64, repeats)?;
        term_points.push(TermPoint { term_count: initial.term_count(), millis });
    }
    let term_linearity_max_rel_dev = {
        let pts: Vec<(f64, f64)> = term_points.iter().map(|p| (p.term_count as f64, p.millis)).collect();
        let (a, b) = least_squares_line(&pts);
        pts.iter()
            .map(|&(x, y)| {
                let fit = a + b * x;
                ((y - fit) / fit.max(1e-9)).abs()
            })
            .fold(0.0, f64::max)
    };

    Ok(ScalingReport { size_points, loglog_slope, term_points, term_linearity_max_rel_dev })
}

fn least_squares_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    (intercept, slope)
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    least_squares_line(pts).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_bench_runs() {
        let report = scaling_bench(&[8, 16], 8, 3, 1).unwrap();
        assert_eq!(report.size_points.len(), 2);
        assert_eq!(report.term_points.len(), 4);
        assert_eq!(report.term_points[0].term_count, 1);
        assert_eq!(report.term_points[3].term_count, 6);
        assert!(report.size_points.iter().all(|p| p.millis >= 0.0));
    }
}
