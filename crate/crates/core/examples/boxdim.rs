//! Calibration sweep for the box-dimension proxy.

use curvedio_core::dimension::{box_dimension, BoxCountOptions};
use curvedio_core::funcspace::{CurveSystem, InhomFunction};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let kappa: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.0);
    let m: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(3);
    let kmax: u32 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(14);
    let curve = CurveSystem::parabola((0.0, 1.0)).unwrap();
    let lambdas = [
        ("zero", InhomFunction::zero()),
        ("half", InhomFunction::constant(0.5)),
        ("cube", InhomFunction::power(3, (0.0, 1.0))),
    ];
    for v in [2.5, 3.0, 4.0] {
        for (name, lam) in &lambdas {
            let t0 = std::time::Instant::now();
            let opts = BoxCountOptions { kappa, survivor_m: m, t_min: 2, sat_fraction: 0.6 };
            let est = box_dimension(&curve, lam, v, (6, kmax), opts).unwrap();
            let counts: Vec<u64> = est.scales.iter().map(|s| s.3).collect();
            println!(
                "v={v} lam={name} slope={:.3} target={:.3} err={:+.3} res={:.3} counts={counts:?} ({:.1}s)",
                est.slope,
                est.target,
                est.slope - est.target,
                est.residual,
                t0.elapsed().as_secs_f64()
            );
        }
    }
}
