//! Three consecutively perturbed Gaussian-mixture sources on [-3, 3]^2.

use amsbq::benchmarks::gauss_mixture_generate;

fn main() -> amsbq::Result<()> {
    let g = gauss_mixture_generate(4, 3);
    for l in 0..g.n_sources() {
        println!("source {}: mean over the square {:+.6}", l + 1, g.mean(l));
    }
    println!("\n   x     y     f1        f2        f3");
    for &(x, y) in &[(0.0, 0.0), (-1.5, 1.0), (2.0, -2.0), (1.0, 1.0)] {
        println!(
            "{x:5.1} {y:5.1} {:9.4} {:9.4} {:9.4}",
            g.eval(0, &[x, y])?,
            g.eval(1, &[x, y])?,
            g.eval(2, &[x, y])?
        );
    }
    Ok(())
}
