//! Closed-form kernel means of the squared-exponential and ICM kernels,
//! checked against brute-force Gauss-Legendre quadrature.

use amsbq::kernels::{initial_error, kernel_mean, IcmKernel, IntegrationMeasure, RbfKernel};
use amsbq::numerics::integrate;
use nalgebra::DMatrix;

fn main() -> amsbq::Result<()> {
    let measure = IntegrationMeasure::uniform_box(vec![(0.0, 1.0)])?;
    let rbf = RbfKernel::new(0.1)?;

    println!("RBF lengthscale 0.1 on [0, 1]");
    for y in [0.0, 0.25, 0.5] {
        let closed = rbf.mean(&[y], measure.bounds());
        let brute = integrate(|x| rbf.eval_unchecked(&[x], &[y]), 0.0, 1.0, 32, 16);
        println!("  k-mean at {y:4}: closed {closed:.12}  quadrature {brute:.12}");
    }
    println!("  double mean: {:.12}", rbf.double_mean(measure.bounds()));

    // two sources with correlation 0.9
    let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]);
    let icm = IcmKernel::new(rbf, b)?;
    println!("\nICM kernel, B = [[1, 0.9], [0.9, 1]]");
    for l in 0..2 {
        println!("  integral of k(f_1, f_{}(0.5)): {:.12}", l + 1, kernel_mean(0, l, &[0.5], &icm, &measure)?);
    }
    println!("  prior variance of the integral: {:.12}", initial_error(&icm, &measure)?);

    let square = IntegrationMeasure::uniform_box(vec![(-3.0, 3.0), (-3.0, 3.0)])?;
    let wide = RbfKernel::new(0.5)?;
    println!("\n2-D box [-3, 3]^2, lengthscale 0.5");
    println!("  k-mean at origin: {:.12}", wide.mean(&[0.0, 0.0], square.bounds()));
    println!("  k-mean at corner: {:.12}", wide.mean(&[3.0, 3.0], square.bounds()));
    Ok(())
}
