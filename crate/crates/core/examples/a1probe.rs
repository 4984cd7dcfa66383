use num_complex::Complex64;
use dolinar_core::coherent::helstrom_pe;
use dolinar_core::trajectory::convergence_sweep;

fn main() {
    let alpha = Complex64::new(0.8, 0.0);
    let pe = helstrom_pe(alpha);
    println!("helstrom_pe = {pe:.8}");
    let rows = convergence_sweep(alpha, &[0.05, 0.02, 0.01], 8.0, 100_000, 15, 1).unwrap();
    for r in &rows {
        println!(
            "theta={:.3} est={:.6} se={:.6} gap={:+.6}",
            r.theta, r.empirical_error, r.stderr, r.empirical_error - pe
        );
    }
}
