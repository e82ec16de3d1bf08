//! The three acquisition rates as functions of `rho^2` and cost, and the
//! cheap-but-useless query that only the integral-precision rate rewards.

use amsbq::acquisition::{rate_ip, rate_ivr, rate_mi, AcquisitionKind};

fn main() -> amsbq::Result<()> {
    println!("rho2     cost    MI         IVR        IP");
    for &(rho2, cost) in &[(0.0, 1.0), (0.0, 0.01), (0.1, 1.0), (0.1, 0.05), (0.5, 1.0), (0.9, 0.5), (0.999, 1.0)] {
        println!(
            "{rho2:<8} {cost:<6} {:<10.4} {:<10.4} {:<10.4}",
            rate_mi(rho2, cost)?,
            rate_ivr(rho2, cost)?,
            rate_ip(rho2, cost)?
        );
    }

    // A query that teaches nothing (rho2 = 0) but costs 1% still has the
    // highest integral-precision rate of the table above.
    println!("\nuninformative cheap query: MI {} IVR {} IP {}", rate_mi(0.0, 0.01)?, rate_ivr(0.0, 0.01)?, rate_ip(0.0, 0.01)?);

    // Perfect steps: MI and IP diverge, IVR stays at 1 / cost.
    println!("perfect step at cost 0.3: MI {} IVR {} IP {}", rate_mi(1.0, 0.3)?, rate_ivr(1.0, 0.3)?, rate_ip(1.0, 0.3)?);

    for k in AcquisitionKind::ALL {
        println!("{k:>10}: uses cost {}, pathological {}", k.uses_cost(), k.is_pathological());
    }
    Ok(())
}
