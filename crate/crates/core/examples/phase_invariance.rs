//! Record weights depend only on amplitude magnitudes.

use bornlab::{Amplitude, WeightFunction};

fn main() -> bornlab::Result<()> {
    let alpha = Amplitude::new(0.6, -0.8);
    for p in [1.0, 2.0, 3.0] {
        let wf = WeightFunction::new(p)?;
        let base = wf.weight(&alpha)?;
        let spread = (0..8)
            .map(|k| wf.weight(&alpha.rotate(k as f64 * 0.7)).map(|w| (w - base).abs()))
            .collect::<bornlab::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!("p={p}: weight {base:.6}, max change under rotation {spread:.1e}");
    }
    Ok(())
}
